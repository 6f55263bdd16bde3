#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "ckam/errors.hpp"
#include "ckam/grid.hpp"
#include "ckam/model.hpp"
#include "ckam/parallel.hpp"

namespace ckam {

enum class Backend { Variational, LaxFriedrichs };
enum class Direction { Backward, Forward };

/// Settings for one-step operators and composed evolution.
struct EvolveSettings {
    Backend backend = Backend::Variational;
    double delta = 1e-3;       ///< time step
    double v_max = 0.0;        ///< velocity bound; 0 means take the model's
    int picard_iters = 1;      ///< refinement of the u-coupling per step
    bool node_only = false;    ///< restrict the search to grid nodes (oracle mode)
    int lf_refresh = 100;      ///< steps between Lax-Friedrichs viscosity updates
    double divergence_threshold = 1e6;
    int threads = 1;

    double velocity_bound(const ContactModel& m) const {
        return v_max > 0.0 ? v_max : m.v_max;
    }
    double search_radius(const ContactModel& m) const {
        return velocity_bound(m) * delta;
    }
};

/// Per-target-node outcome of the variational search (for action tables).
struct ArgminRecord {
    Vec argmin{};          ///< chosen predecessor position (continuous)
    double w_at_argmin = 0.0;
};

namespace detail {

inline void check_settings(const ContactModel& m, const EvolveSettings& s) {
    if (s.delta * m.kappa > 0.5 + 1e-12)
        throw ContractionViolation("delta*kappa = " +
                                   std::to_string(s.delta * m.kappa) + " > 1/2");
    if (s.picard_iters < 1) throw Error("picard_iters must be >= 1");
}

/// Damped Picard refinement of the u argument fed to L; one iteration freezes
/// u at w(y), which keeps the scheme O(delta) consistent.
template <class LFn>
inline double picard_u(double wy, int iters, LFn&& cost_at) {
    double u_hat = wy;
    for (int k = 1; k < iters; ++k)
        u_hat = 0.5 * cost_at(u_hat) + 0.5 * u_hat;
    return u_hat;
}

struct SearchResult {
    double value = 0.0;
    Vec argmin{};
    double w_at_argmin = 0.0;
};

/// Minimize a smooth objective over [lo, hi] by golden-section; endpoints are
/// evaluated too. The objective is dominated by the quadratic kinetic term on
/// cell-sized intervals, so it is unimodal there.
template <class F>
inline void golden_min(F&& f, double lo, double hi, double& best_val,
                       double& best_y) {
    constexpr double invphi = 0.6180339887498949;
    auto consider = [&](double y) {
        double v = f(y);
        if (v < best_val) { best_val = v; best_y = y; }
    };
    consider(lo);
    consider(hi);
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 48 && (b - a) > 1e-11; ++it) {
        if (fc < fd) {
            b = d; d = c; fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    consider(0.5 * (a + b));
    consider(fc < fd ? c : d);
}

/// One-node variational search. direction Backward minimizes
///   w(y) + delta L(y, (x-y)/delta, u_hat),
/// Forward maximizes
///   w(y) - delta L(x, (y-x)/delta, u_hat),
/// with u_hat from the Picard rule. The search runs per grid cell so the only
/// kinks of the piecewise-linear interpolant sit at segment ends.
inline SearchResult search_node(const ContactModel& m, const GridFunction& w,
                                Vec center, double delta, double radius,
                                Direction dir, int picard_iters, bool node_only) {
    const PeriodicGrid& g = w.grid;
    const double h = g.spacing();

    auto arc_cost = [&](Vec y, double wy) {
        if (dir == Direction::Backward) {
            Vec v = (1.0 / delta) * (center - y);
            double u_hat = picard_u(wy, picard_iters, [&](double uh) {
                return wy + delta * m.lagrangian(wrap(y, m.dim), v, uh);
            });
            return wy + delta * m.lagrangian(wrap(y, m.dim), v, u_hat);
        }
        Vec v = (1.0 / delta) * (y - center);
        double u_hat = picard_u(wy, picard_iters, [&](double uh) {
            return wy - delta * m.lagrangian(wrap(center, m.dim), v, uh);
        });
        // maximization realized as minimization of the negative
        return -(wy - delta * m.lagrangian(wrap(center, m.dim), v, u_hat));
    };

    SearchResult res;
    res.value = 1e300;

    if (node_only) {
        const int J = int(std::floor(radius / h + 1e-9));
        if (g.dim == 1) {
            const int ix = g.ix_of(g.nearest_node(center));
            for (int j = -J; j <= J; ++j) {
                Vec y = {center[0] + j * h, 0.0};
                double wy = w[g.index(ix + j)];
                double c = arc_cost(y, wy);
                if (c < res.value) { res.value = c; res.argmin = y; res.w_at_argmin = wy; }
            }
        } else {
            const std::size_t ci = g.nearest_node(center);
            const int ix = g.ix_of(ci), iy = g.iy_of(ci);
            for (int j = -J; j <= J; ++j)
                for (int k = -J; k <= J; ++k) {
                    Vec y = {center[0] + j * h, center[1] + k * h};
                    double wy = w[g.index(ix + j, iy + k)];
                    double c = arc_cost(y, wy);
                    if (c < res.value) { res.value = c; res.argmin = y; res.w_at_argmin = wy; }
                }
        }
        if (dir == Direction::Forward) res.value = -res.value;
        res.argmin = wrap(res.argmin, g.dim);
        return res;
    }

    auto objective1d = [&](double y) {
        Vec yv = {y, center[1]};
        return arc_cost(yv, interpolate(w, wrap(yv, g.dim)));
    };

    if (g.dim == 1) {
        const double lo = center[0] - radius, hi = center[0] + radius;
        double best_val = 1e300, best_y = center[0];
        // split at grid-cell boundaries; the interpolant is smooth inside cells
        double a = lo;
        int cell = int(std::floor(lo / h));
        while (a < hi - 1e-14) {
            double b = std::min(hi, (cell + 1) * h);
            if (b > a + 1e-14) golden_min(objective1d, a, b, best_val, best_y);
            a = b;
            ++cell;
        }
        res.value = best_val;
        res.argmin = {best_y, 0.0};
    } else {
        // coarse lattice + grid nodes in the box, then alternating-axis
        // golden refinement
        double best_val = 1e300;
        Vec best_y = center;
        auto consider = [&](Vec y) {
            double c = arc_cost(y, interpolate(w, wrap(y, g.dim)));
            if (c < best_val) { best_val = c; best_y = y; }
        };
        const int coarse = 7;
        for (int i = 0; i < coarse; ++i)
            for (int j = 0; j < coarse; ++j)
                consider({center[0] - radius + 2 * radius * i / (coarse - 1),
                          center[1] - radius + 2 * radius * j / (coarse - 1)});
        const int J = int(std::floor(radius / h + 1e-9));
        const std::size_t ci = g.nearest_node(center);
        const int ix = g.ix_of(ci), iy = g.iy_of(ci);
        for (int j = -J; j <= J; ++j)
            for (int k = -J; k <= J; ++k) {
                Vec node = g.node(g.index(ix + j, iy + k));
                Vec y = center + torus_delta(node, center, 2);
                if (std::abs(y[0] - center[0]) <= radius + 1e-12 &&
                    std::abs(y[1] - center[1]) <= radius + 1e-12)
                    consider(y);
            }
        for (int sweep = 0; sweep < 3; ++sweep)
            for (int ax = 0; ax < 2; ++ax) {
                Vec probe = best_y;
                auto f = [&](double y) {
                    Vec yv = probe;
                    yv[ax] = y;
                    return arc_cost(yv, interpolate(w, wrap(yv, g.dim)));
                };
                double by = best_y[ax];
                golden_min(f, center[ax] - radius, center[ax] + radius, best_val, by);
                best_y[ax] = by;
            }
        res.value = best_val;
        res.argmin = best_y;
    }
    res.w_at_argmin = interpolate(w, wrap(res.argmin, g.dim));
    if (dir == Direction::Forward) res.value = -res.value;
    res.argmin = wrap(res.argmin, g.dim);
    return res;
}

/// Per-axis Lax-Friedrichs viscosity from the current value range:
/// dominate |H_p| at the nodal gradients, with a safety margin.
inline std::array<double, 2> lf_viscosity(const ContactModel& m,
                                          const GridFunction& w) {
    std::array<double, 2> alpha = {0.0, 0.0};
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        Vec grad = gradient_at_node(w, i);
        Vec hp = m.grad_p(w.grid.node(i), grad, w[i]);
        alpha[0] = std::max(alpha[0], std::abs(hp[0]));
        if (m.dim > 1) alpha[1] = std::max(alpha[1], std::abs(hp[1]));
    }
    alpha[0] = alpha[0] * 1.1 + 0.1;
    if (m.dim > 1) alpha[1] = alpha[1] * 1.1 + 0.1;
    return alpha;
}

inline GridFunction lf_step(const ContactModel& m, const GridFunction& w,
                            double delta, std::array<double, 2> alpha,
                            int threads) {
    const PeriodicGrid& g = w.grid;
    const double h = g.spacing();
    for (int ax = 0; ax < g.dim; ++ax)
        if (delta * alpha[ax] / h > 0.5 + 1e-12)
            throw CflViolation("delta*alpha/h = " +
                               std::to_string(delta * alpha[ax] / h) + " > 1/2");
    GridFunction out(g);
    parallel_for(g.size(), threads, [&](std::size_t i) {
        const int ix = g.ix_of(i), iy = g.iy_of(i);
        const double wc = w[i];
        const double wxp = w[g.index(ix + 1, iy)], wxm = w[g.index(ix - 1, iy)];
        Vec grad = {(wxp - wxm) / (2 * h), 0.0};
        double visc = alpha[0] * (wxp - 2 * wc + wxm) / (2 * h);
        if (g.dim > 1) {
            const double wyp = w[g.index(ix, iy + 1)], wym = w[g.index(ix, iy - 1)];
            grad[1] = (wyp - wym) / (2 * h);
            visc += alpha[1] * (wyp - 2 * wc + wym) / (2 * h);
        }
        out[i] = wc - delta * (m.H(g.node(i), grad, wc) - visc);
    });
    return out;
}

} // namespace detail

/// One discrete backward Lax-Oleinik step (T_delta^- w). Optional argmin
/// recording supports the implicit-action tables.
inline GridFunction step_backward(const ContactModel& m, const GridFunction& w,
                                  const EvolveSettings& s,
                                  std::vector<ArgminRecord>* record = nullptr,
                                  double delta_override = -1.0) {
    detail::check_settings(m, s);
    const double delta = delta_override > 0.0 ? delta_override : s.delta;
    if (s.backend == Backend::LaxFriedrichs && record == nullptr) {
        return detail::lf_step(m, w, delta, detail::lf_viscosity(m, w), s.threads);
    }
    const double radius = s.velocity_bound(m) * delta;
    GridFunction out(w.grid);
    if (record) record->resize(w.grid.size());
    parallel_for(w.grid.size(), s.threads, [&](std::size_t i) {
        auto res = detail::search_node(m, w, w.grid.node(i), delta, radius,
                                       Direction::Backward, s.picard_iters,
                                       s.node_only);
        out[i] = res.value;
        if (record) (*record)[i] = {res.argmin, res.w_at_argmin};
    });
    return out;
}

/// One discrete forward step (T_delta^+ w); variational backend only.
inline GridFunction step_forward(const ContactModel& m, const GridFunction& w,
                                 const EvolveSettings& s,
                                 std::vector<ArgminRecord>* record = nullptr,
                                 double delta_override = -1.0) {
    detail::check_settings(m, s);
    if (s.backend == Backend::LaxFriedrichs)
        throw Unsupported("forward semigroup has no Lax-Friedrichs backend");
    const double delta = delta_override > 0.0 ? delta_override : s.delta;
    const double radius = s.velocity_bound(m) * delta;
    GridFunction out(w.grid);
    if (record) record->resize(w.grid.size());
    parallel_for(w.grid.size(), s.threads, [&](std::size_t i) {
        auto res = detail::search_node(m, w, w.grid.node(i), delta, radius,
                                       Direction::Forward, s.picard_iters,
                                       s.node_only);
        out[i] = res.value;
        if (record) (*record)[i] = {res.argmin, res.w_at_argmin};
    });
    return out;
}

/// Composed evolution w(.,t); ceil(t/delta) steps with the last one
/// shortened. Throws DivergedError past the divergence threshold. The
/// optional snapshot hook fires every snapshot_every steps.
inline GridFunction
evolve(const ContactModel& m, const GridFunction& phi, double t,
       const EvolveSettings& s, Direction dir = Direction::Backward,
       const std::function<void(int, double, const GridFunction&)>& snapshot = {},
       int snapshot_every = 100) {
    if (t < 0.0) throw Error("evolve: t must be >= 0");
    detail::check_settings(m, s);
    GridFunction w = phi;
    const long steps = long(std::ceil(t / s.delta - 1e-9));
    std::array<double, 2> alpha{};
    bool have_alpha = false;
    double elapsed = 0.0;
    for (long k = 0; k < steps; ++k) {
        const double delta = std::min(s.delta, t - elapsed);
        if (s.backend == Backend::LaxFriedrichs && dir == Direction::Backward) {
            if (!have_alpha || k % s.lf_refresh == 0) {
                alpha = detail::lf_viscosity(m, w);
                have_alpha = true;
            }
            w = detail::lf_step(m, w, delta, alpha, s.threads);
        } else if (dir == Direction::Backward) {
            w = step_backward(m, w, s, nullptr, delta);
        } else {
            w = step_forward(m, w, s, nullptr, delta);
        }
        elapsed += delta;
        if (w.max_abs() > s.divergence_threshold)
            throw DivergedError("evolve: sup-norm exceeded " +
                                std::to_string(s.divergence_threshold) + " at t=" +
                                std::to_string(elapsed));
        if (snapshot && ((k + 1) % snapshot_every == 0 || k + 1 == steps))
            snapshot(int(k + 1), elapsed, w);
    }
    return w;
}

/// Sup-norm difference of the two backends' evolve results (cross-validation
/// of the two discretizations).
inline double backends_agree(const ContactModel& m, const GridFunction& phi,
                             double t, const EvolveSettings& settings_v,
                             const EvolveSettings& settings_lf) {
    EvolveSettings sv = settings_v;
    sv.backend = Backend::Variational;
    EvolveSettings slf = settings_lf;
    slf.backend = Backend::LaxFriedrichs;
    GridFunction a = evolve(m, phi, t, sv);
    GridFunction b = evolve(m, phi, t, slf);
    return sup_norm_diff(a, b);
}

} // namespace ckam
