// Computes the stationary backward solution of the damped pendulum model,
// its forward conjugate, and the resulting projected contact set, then prints
// the cluster centers. The expected output is a single point at the origin of
// phase space with zero value.

#include <iostream>

#include "ckam/model.hpp"
#include "ckam/semigroup.hpp"
#include "ckam/weakkam.hpp"

int main() {
    using namespace ckam;
    ContactModel pend = make_pendulum();
    EvolveSettings s;
    s.delta = 1e-3;

    PeriodicGrid g{1, 256};
    std::cout << "solving backward stationary problem on n = " << g.n << "...\n";
    auto [u_minus, trace] = solve_stationary(pend, GridFunction(g), 1e-4, 60.0, s);
    std::cout << "  converged after ~" << trace.samples.size()
              << " unit-time probes, residual "
              << verify_stationary(pend, u_minus) << "\n";

    std::cout << "forward conjugate...\n";
    auto [u_plus, trace_f] = conjugate_forward_limit(pend, u_minus, 1e-4, 25.0, s);

    ManeSet ms = mane_set(pend, u_minus, u_plus, 3e-2);
    std::cout << "projected contact set: " << ms.points.size() << " cluster(s)\n";
    for (const State& c : ms.points)
        std::cout << "  x = " << c.x[0] << ", p = " << c.p[0] << ", u = " << c.u
                  << "\n";
    return 0;
}
