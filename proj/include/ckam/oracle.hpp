#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ckam/errors.hpp"
#include "ckam/grid.hpp"
#include "ckam/model.hpp"

namespace ckam {

/// Exhaustive-enumeration problem size small enough to walk every node path.
struct TinyProblem {
    ContactModel model;
    int n = 8;
    int steps = 4;
    double delta = 0.05;
    double v_max = 0.0; ///< 0 means take the model's

    double velocity_bound() const { return v_max > 0.0 ? v_max : model.v_max; }
};

/// Independent reference for the backward evolution: the exact minimum over
/// all node paths of the running discrete action
///   A_{k+1} = A_k + delta L(y_k, (y_{k+1}-y_k)/delta, A_k),
/// seeded with A_0 = phi(y_0). The per-arc update is increasing in A_k when
/// delta*kappa <= 1/2, so this path minimum coincides with the dynamic
/// program over the same recursion; agreement to 1e-12 is required, not
/// assumed.
inline GridFunction brute_force_evolve(const TinyProblem& problem,
                                       const GridFunction& phi) {
    const ContactModel& m = problem.model;
    const PeriodicGrid& g = phi.grid;
    if (g.n != problem.n) throw GridMismatch();
    if (problem.n > 16 || problem.steps > 8)
        throw TooLarge("TinyProblem bounds are n <= 16, steps <= 8");
    const double h = g.spacing();
    const double radius = problem.velocity_bound() * problem.delta;
    const int J = int(std::floor(radius / h + 1e-9));
    const double moves = std::pow(2.0 * J + 1.0, g.dim);
    if (double(g.size()) * std::pow(moves, problem.steps) > 4294967296.0)
        throw TooLarge("path space exceeds 2^32");

    // per-axis neighbor offsets
    std::vector<std::array<int, 2>> offs;
    if (g.dim == 1) {
        for (int j = -J; j <= J; ++j) offs.push_back({j, 0});
    } else {
        for (int j = -J; j <= J; ++j)
            for (int k = -J; k <= J; ++k) offs.push_back({j, k});
    }

    GridFunction out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = 1e300;

    // depth-first walk over all paths; arc costs mirror the nodal one-step
    // rule: predecessor position written as target + offset*h, u frozen at
    // the running value (picard_iters = 1)
    auto arc_value = [&](int pix, int piy, int ix, int iy, double a) {
        Vec center = g.node(g.index(ix, iy));
        Vec y = {center[0] + (pix - ix) * h,
                 g.dim > 1 ? center[1] + (piy - iy) * h : 0.0};
        Vec v = (1.0 / problem.delta) * (center - y);
        return a + problem.delta * m.lagrangian(wrap(y, g.dim), v, a);
    };
    std::function<void(int, int, double, int)> walk = [&](int ix, int iy,
                                                          double a, int depth) {
        if (depth == problem.steps) {
            std::size_t i = g.index(ix, iy);
            if (a < out[i]) out[i] = a;
            return;
        }
        for (const auto& o : offs) {
            // the path moves forward from (ix,iy); in the backward rule the
            // current point is the predecessor, offset (-o) from the target
            int nx = ix + o[0], ny = iy + o[1];
            walk(nx, ny, arc_value(ix, iy, nx, ny, a), depth + 1);
        }
    };
    for (std::size_t s = 0; s < g.size(); ++s)
        walk(g.ix_of(s), g.iy_of(s), phi[s], 0);
    return out;
}

/// Closed-form scalar reference for the spatially homogeneous linear model
/// H = p^2/2 + u: constant data c evolves as c e^{-t}.
inline double scalar_reference(const ContactModel& model, double c, double t) {
    if (model.name != "linear_discount")
        throw Unsupported("scalar_reference: no closed form for " + model.name);
    return c * std::exp(-t);
}

} // namespace ckam
