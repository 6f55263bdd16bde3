// Shows the exponential long-time convergence of the backward evolution: two
// different initial conditions are evolved on the damped pendulum model and
// their sup-distance is printed per unit time. The gap decays like e^{-t}.

#include <cmath>
#include <cstdio>

#include "ckam/model.hpp"
#include "ckam/semigroup.hpp"

int main() {
    using namespace ckam;
    ContactModel pend = make_pendulum();
    EvolveSettings s;
    s.delta = 1e-3;

    PeriodicGrid g{1, 256};
    GridFunction a(g), b(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        a[i] = 2.0 * std::sin(g.node(i)[0]);
        b[i] = -1.0;
    }

    std::printf("%6s  %12s\n", "t", "sup|a-b|");
    for (int t = 1; t <= 12; ++t) {
        a = evolve(pend, a, 1.0, s);
        b = evolve(pend, b, 1.0, s);
        std::printf("%6d  %12.5e\n", t, sup_norm_diff(a, b));
    }
    return 0;
}
