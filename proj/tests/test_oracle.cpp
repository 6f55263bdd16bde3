#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ckam/model.hpp"
#include "ckam/oracle.hpp"
#include "ckam/semigroup.hpp"

using namespace ckam;

namespace {

EvolveSettings node_settings(const TinyProblem& p) {
    EvolveSettings s;
    s.delta = p.delta;
    s.node_only = true;
    if (p.v_max > 0.0) s.v_max = p.v_max;
    return s;
}

GridFunction wave(const PeriodicGrid& g, double c) {
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        f[i] = c + 0.2 * std::sin(g.node(i)[0]);
    return f;
}

} // namespace

TEST_CASE("scalar reference values") {
    ContactModel lin = make_linear_discount();
    CHECK(scalar_reference(lin, 1.0, 1.0) == Catch::Approx(std::exp(-1.0)));
    CHECK(scalar_reference(lin, 0.0, 7.3) == 0.0);
    CHECK(scalar_reference(lin, -2.0, std::log(2.0)) == Catch::Approx(-1.0));
    CHECK_THROWS_AS(scalar_reference(make_pendulum(), 1.0, 1.0), Unsupported);
}

TEST_CASE("one-step enumeration equals the one-step operator exactly") {
    TinyProblem prob{make_pendulum(), 16, 1, 0.2};
    PeriodicGrid g{1, prob.n};
    GridFunction phi = wave(g, 0.5);
    GridFunction brute = brute_force_evolve(prob, phi);
    GridFunction dp = step_backward(prob.model, phi, node_settings(prob));
    CHECK(sup_norm_diff(brute, dp) <= 1e-15);
}

TEST_CASE("multi-step enumeration matches the dynamic program") {
    struct Case { ContactModel m; int n; int steps; double delta; };
    for (const Case& c : {Case{make_linear_discount(), 8, 4, 0.2},
                          Case{make_linear_discount(), 8, 8, 0.15},
                          Case{make_pendulum(), 12, 6, 0.2}}) {
        TinyProblem prob{c.m, c.n, c.steps, c.delta};
        PeriodicGrid g{1, prob.n};
        GridFunction phi = wave(g, -0.3);
        GridFunction brute = brute_force_evolve(prob, phi);
        EvolveSettings s = node_settings(prob);
        GridFunction dp = phi;
        for (int k = 0; k < prob.steps; ++k) dp = step_backward(prob.model, dp, s);
        CHECK(sup_norm_diff(brute, dp) <= 1e-12);
    }
}

TEST_CASE("enumeration explores nontrivial paths") {
    // sanity check on the problem geometry: the per-step reach must cover at
    // least one neighbor, otherwise only rest paths are enumerated
    TinyProblem prob{make_pendulum(), 12, 4, 0.2};
    PeriodicGrid g{1, prob.n};
    CHECK(prob.velocity_bound() * prob.delta >= g.spacing());
}

TEST_CASE("size guards") {
    PeriodicGrid g{1, 16};
    GridFunction phi(g);
    TinyProblem wide{make_pendulum(), 16, 8, 0.5};
    CHECK_THROWS_AS(brute_force_evolve(wide, phi), TooLarge);
    TinyProblem tall{make_pendulum(), 16, 9, 0.05};
    CHECK_THROWS_AS(brute_force_evolve(tall, phi), TooLarge);
    TinyProblem wrong{make_pendulum(), 8, 4, 0.05};
    CHECK_THROWS_AS(brute_force_evolve(wrong, phi), GridMismatch);
}

TEST_CASE("evolve of constant data tracks the scalar reference") {
    ContactModel lin = make_linear_discount();
    PeriodicGrid g{1, 128};
    GridFunction c(g, 2.0);
    EvolveSettings s;
    s.delta = 1e-3;
    GridFunction w = evolve(lin, c, 2.0, s);
    double ref = scalar_reference(lin, 2.0, 2.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(w[i] == Catch::Approx(ref).margin(5e-3));
}
