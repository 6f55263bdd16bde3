#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ckam/model.hpp"
#include "ckam/semigroup.hpp"
#include "ckam/weakkam.hpp"

using namespace ckam;

// All checks here share one expensive backward solve at n = 512, delta = 1e-3.
namespace {

struct PendulumFixture {
    ContactModel model = make_pendulum();
    EvolveSettings settings;
    GridFunction u_minus;
    ConvergenceTrace trace;

    PendulumFixture() {
        settings.delta = 1e-3;
        PeriodicGrid g{1, 512};
        auto [u, tr] = solve_stationary(model, GridFunction(g), 1e-4, 60.0, settings);
        u_minus = std::move(u);
        trace = std::move(tr);
    }
};

const PendulumFixture& fixture() {
    static PendulumFixture f;
    return f;
}

} // namespace

TEST_CASE("pendulum backward solution vanishes at the hyperbolic point") {
    const auto& f = fixture();
    CHECK(f.trace.converged);
    std::size_t at0 = f.u_minus.grid.nearest_node(vec1(0.0));
    CHECK(std::abs(f.u_minus[at0]) <= 2e-2);
}

TEST_CASE("pendulum solution is stationary to discretization accuracy") {
    const auto& f = fixture();
    CHECK(verify_stationary(f.model, f.u_minus) <= 5e-2);

    GridFunction w5 = evolve(f.model, f.u_minus, 5.0, f.settings);
    CHECK(sup_norm_diff(w5, f.u_minus) <= 5e-2);

    GridFunction w1 = step_backward(f.model, f.u_minus, f.settings);
    double tol = 5.0 * f.settings.delta * f.settings.delta +
                 2.0 * f.u_minus.grid.spacing();
    CHECK(sup_norm_diff(w1, f.u_minus) <= tol);
}

TEST_CASE("constant offsets shift the residual by the offset") {
    const auto& f = fixture();
    GridFunction shifted = f.u_minus;
    for (auto& v : shifted.values) v += 0.1;
    double r = verify_stationary(f.model, shifted);
    CHECK(r == Catch::Approx(0.1).margin(2e-2));
}

TEST_CASE("graph of the solution lies near the zero level of H") {
    const auto& f = fixture();
    GraphSet gs = graph_lambda(f.model, f.u_minus);
    double worst = 0.0;
    for (const State& s : gs.points)
        worst = std::max(worst, std::abs(f.model.H(s.x, s.p, s.u)));
    CHECK(worst <= 5.0 * f.u_minus.grid.spacing());
}

TEST_CASE("solution shape near the hyperbolic point is quadratic") {
    // u(x) ~ (sqrt(5)-1)/2 * x^2 / 2 close to x = 0
    const auto& f = fixture();
    const double half_curv = 0.5 * (std::sqrt(5.0) - 1.0) / 2.0;
    double x = 0.2;
    double u = interpolate(f.u_minus, vec1(x));
    double u0 = interpolate(f.u_minus, vec1(0.0));
    CHECK((u - u0) / (x * x) == Catch::Approx(half_curv).epsilon(0.25));
}

TEST_CASE("solution is an a.e. subsolution") {
    const auto& f = fixture();
    CHECK(subsolution_defect(f.model, f.u_minus) <= 5e-2);
}
