#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "ckam/action.hpp"
#include "ckam/model.hpp"

using namespace ckam;

namespace {

EvolveSettings table_settings(double delta = 0.02) {
    EvolveSettings s;
    s.delta = delta;
    return s;
}

} // namespace

TEST_CASE("first table layer at the source is the local cost") {
    ContactModel lin = make_linear_discount();
    EvolveSettings s = table_settings();
    // a node-aligned source, so the zero-velocity segment is represented
    ActionTable tab = implicit_action(lin, vec1(0.0), 0.0, 0.5, s, Direction::Backward, 64);
    // staying put from (x0, u0 = 0) costs nothing in the linear model
    std::size_t at = tab.grid.nearest_node(vec1(0.0));
    CHECK(std::abs(tab.layers.front()[at]) <= 1e-12);
    CHECK(tab.time_of(0) == Catch::Approx(s.delta));
    CHECK(tab.t_end() == Catch::Approx(0.5));
}

TEST_CASE("table value vanishes along the pendulum fixed point") {
    ContactModel pend = make_pendulum();
    EvolveSettings s = table_settings();
    ActionTable tab = implicit_action(pend, vec1(0.0), 0.0, 2.0, s, Direction::Backward, 128);
    std::size_t at = tab.grid.nearest_node(vec1(0.0));
    for (std::size_t k = 0; k < tab.layers.size(); ++k)
        CHECK(std::abs(tab.layers[k][at]) <= 1e-10);
}

TEST_CASE("table values increase with the source value") {
    ContactModel pend = make_pendulum();
    EvolveSettings s = table_settings();
    ActionTable lo = implicit_action(pend, vec1(1.0), 0.1, 0.5, s, Direction::Backward, 64);
    ActionTable hi = implicit_action(pend, vec1(1.0), 0.2, 0.5, s, Direction::Backward, 64);
    for (std::size_t k = 0; k < lo.layers.size(); ++k)
        for (std::size_t i = 0; i < lo.grid.size(); ++i)
            CHECK(hi.layers[k][i] >= lo.layers[k][i] - 1e-9);
}

TEST_CASE("anchor identity: evolving the unit-time layer reproduces later layers") {
    ContactModel pend = make_pendulum();
    EvolveSettings s = table_settings(0.01);
    ActionTable tab = implicit_action(pend, vec1(0.5), 0.0, 2.0, s, Direction::Backward, 128);
    GridFunction from_anchor = evolve(pend, tab.layer_at(1.0), 1.0, s);
    CHECK(sup_norm_diff(from_anchor, tab.layer_at(2.0)) <= 1e-9);
}

TEST_CASE("reconstructed semigroup equals the direct one for node-only search") {
    ContactModel pend = make_pendulum();
    EvolveSettings s = table_settings(0.05);
    s.node_only = true;
    PeriodicGrid g{1, 64};
    GridFunction phi(g);
    for (std::size_t i = 0; i < g.size(); ++i) phi[i] = std::sin(g.node(i)[0]);
    GridFunction direct = step_backward(pend, step_backward(pend, phi, s), s);
    GridFunction via_table = semigroup_from_action(pend, phi, 2 * s.delta, s, 1);
    CHECK(sup_norm_diff(direct, via_table) <= 1e-12);
}

TEST_CASE("reconstructed semigroup approximates the direct one at stride 4") {
    ContactModel lin = make_linear_discount();
    EvolveSettings s = table_settings(0.02);
    PeriodicGrid g{1, 64};
    GridFunction one(g, 1.0);
    GridFunction via_table = semigroup_from_action(lin, one, 1.0, s, 4);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        worst = std::max(worst, std::abs(via_table[i] - std::exp(-1.0)));
    CHECK(worst <= 6e-2);
}

TEST_CASE("stride coarser than the reachable cone is rejected") {
    ContactModel pend = make_pendulum();
    EvolveSettings s = table_settings(0.01);
    PeriodicGrid g{1, 64};
    GridFunction phi(g);
    // stride * spacing exceeds v_max * t for a very short horizon
    CHECK_THROWS_AS(semigroup_from_action(pend, phi, 2 * s.delta, s, 32),
                    StrideTooCoarse);
}

TEST_CASE("intermediate-time consistency of the table") {
    // split times where both halves cover the torus (v_max * t >= pi); outside
    // that cone the layers carry straight-segment penalties, not action values
    ContactModel pend = make_pendulum();
    EvolveSettings s = table_settings(0.02);
    ActionTable tab =
        implicit_action(pend, vec1(0.5), 0.0, 2.0, s, Direction::Backward, 128);
    CHECK(check_markov(pend, tab, 1.0, s, 8) <= 8e-2);
    CHECK(check_markov(pend, tab, 0.75, s, 8) <= 8e-2);
}

TEST_CASE("splits outside the table horizon are rejected") {
    ContactModel pend = make_pendulum();
    EvolveSettings s = table_settings(0.02);
    ActionTable tab =
        implicit_action(pend, vec1(0.5), 0.0, 0.5, s, Direction::Backward, 64);
    CHECK_THROWS_AS(check_markov(pend, tab, s.delta, s, 1), Error);
    CHECK_THROWS_AS(check_markov(pend, tab, 0.6, s, 1), Error);
}

TEST_CASE("forward tables mirror the sign convention") {
    ContactModel lin = make_linear_discount();
    EvolveSettings s = table_settings();
    ActionTable tab =
        implicit_action(lin, vec1(1.0), 1.0, 0.5, s, Direction::Forward, 64);
    // the forward operator expands a positive source value at rate one
    double prev = tab.layers.front().max_value();
    for (std::size_t k = 1; k < tab.layers.size(); ++k) {
        CHECK(tab.layers[k].max_value() >= prev - 1e-12);
        prev = tab.layers[k].max_value();
    }
    CHECK(tab.layers.back().max_value() >= 1.55);
    CHECK(tab.layers.back().max_value() <= 1.75);
}

TEST_CASE("csv serialization carries one row per layer and node") {
    ContactModel lin = make_linear_discount();
    EvolveSettings s = table_settings(0.1);
    ActionTable tab =
        implicit_action(lin, vec1(0.0), 0.0, 0.3, s, Direction::Backward, 16);
    std::ostringstream os;
    write_csv(tab, os);
    std::size_t rows = 0;
    std::string line;
    std::istringstream is(os.str());
    while (std::getline(is, line))
        if (!line.empty() && line[0] != '#' && line.find("t,") != 0) ++rows;
    CHECK(rows == tab.layers.size() * tab.grid.size());
}
