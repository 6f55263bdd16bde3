#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ckam/errors.hpp"
#include "ckam/flow.hpp"
#include "ckam/grid.hpp"
#include "ckam/model.hpp"
#include "ckam/semigroup.hpp"

namespace ckam {

struct ProbeSample {
    double t = 0.0;
    double diff_prev = 0.0;   ///< sup-norm distance to the previous probe
    double diff_final = 0.0;  ///< sup-norm distance to the returned function
};

/// Probe history of a long-time semigroup iteration, with the fitted tail
/// rate of the exponential approach.
struct ConvergenceTrace {
    std::vector<ProbeSample> samples;
    double m_obs = 0.0;
    bool converged = false;
    bool diverged = false;
    int monotone_decreasing_run = 0; ///< longest run of nodewise-decreasing probes
    std::string warning;
};

namespace detail {

/// Least-squares slope of log(diff) over the trailing probes.
inline double fit_tail_rate(const std::vector<ProbeSample>& samples, int tail = 10) {
    std::vector<std::pair<double, double>> pts;
    int start = std::max(0, int(samples.size()) - tail);
    for (int i = start; i < int(samples.size()); ++i)
        if (samples[i].diff_prev > 1e-15)
            pts.push_back({samples[i].t, std::log(samples[i].diff_prev)});
    if (pts.size() < 2) return 0.0;
    double n = double(pts.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30) return 0.0;
    return -(n * sxy - sx * sy) / denom;
}

inline void finalize_diff_final(ConvergenceTrace& trace,
                                const std::vector<GridFunction>& history,
                                const GridFunction& final_fn) {
    for (std::size_t i = 0; i < trace.samples.size() && i < history.size(); ++i)
        trace.samples[i].diff_final = sup_norm_diff(history[i], final_fn);
}

} // namespace detail

/// Long-time backward iteration toward the stationary viscosity solution:
/// probe blocks of length 1, stopping when successive probes differ by <= tol.
/// Divergence (sup-norm past 1e6, or 20 consecutive probes of monotone
/// sup-norm growth) is flagged on the trace, not thrown.
inline std::pair<GridFunction, ConvergenceTrace>
solve_stationary(const ContactModel& model, const GridFunction& phi0, double tol,
                 double t_max, const EvolveSettings& settings) {
    const double probe_dt = 1.0;
    ConvergenceTrace trace;
    if (tol < 10.0 * phi0.grid.spacing() * phi0.grid.spacing())
        trace.warning = "tol below 10*spacing^2; probe-diff stop may outrun scheme accuracy";
    GridFunction w = phi0;
    std::vector<GridFunction> history;
    GridFunction prev = w;
    int growth_run = 0;
    double prev_sup = w.max_abs();
    int dec_run = 0;
    for (double t = probe_dt; t <= t_max + 1e-9; t += probe_dt) {
        try {
            w = evolve(model, w, probe_dt, settings, Direction::Backward);
        } catch (const DivergedError&) {
            trace.diverged = true;
            trace.m_obs = detail::fit_tail_rate(trace.samples);
            return {prev, trace};
        }
        double d = sup_norm_diff(w, prev);
        trace.samples.push_back({t, d, 0.0});
        history.push_back(w);
        bool nodewise_dec = true;
        for (std::size_t i = 0; i < w.values.size(); ++i)
            if (w[i] > prev[i] + 1e-12) { nodewise_dec = false; break; }
        dec_run = nodewise_dec ? dec_run + 1 : 0;
        trace.monotone_decreasing_run = std::max(trace.monotone_decreasing_run, dec_run);
        prev = w;
        double sup = w.max_abs();
        growth_run = sup > prev_sup + tol ? growth_run + 1 : 0;
        prev_sup = sup;
        if (growth_run >= 20) {
            trace.diverged = true;
            trace.m_obs = detail::fit_tail_rate(trace.samples);
            return {w, trace};
        }
        if (d <= tol) {
            trace.converged = true;
            break;
        }
    }
    if (!trace.converged)
        throw NotConverged("solve_stationary: no convergence by t_max=" +
                           std::to_string(t_max));
    trace.m_obs = detail::fit_tail_rate(trace.samples);
    detail::finalize_diff_final(trace, history, w);
    return {w, trace};
}

/// Long-time forward iteration from u_-. The forward semigroup amplifies
/// perturbations at rate kappa_0, so each probe is clamped by the invariant
/// upper bound T_t^+ u_- <= u_- (valid for the fixed point u_- and for
/// subsolutions); without the clamp the discretization bias blows up before
/// the limit is reached. Downward collapse (escape to -inf)
/// passes through the clamp untouched and is reported as diverged.
inline std::pair<GridFunction, ConvergenceTrace>
conjugate_forward_limit(const ContactModel& model, const GridFunction& u_minus,
                        double tol, double t_max, const EvolveSettings& settings,
                        bool clamp_at_input = true) {
    const double probe_dt = 1.0;
    ConvergenceTrace trace;
    GridFunction w = u_minus;
    GridFunction prev = w;
    GridFunction best = w;
    std::vector<GridFunction> history;
    double best_diff = 1e300;
    int dec_run = 0;
    for (double t = probe_dt; t <= t_max + 1e-9; t += probe_dt) {
        try {
            w = evolve(model, w, probe_dt, settings, Direction::Forward);
        } catch (const DivergedError&) {
            trace.diverged = true;
            trace.m_obs = detail::fit_tail_rate(trace.samples);
            detail::finalize_diff_final(trace, history, best);
            return {best, trace};
        }
        if (clamp_at_input)
            for (std::size_t i = 0; i < w.values.size(); ++i)
                w[i] = std::min(w[i], u_minus[i]);
        double d = sup_norm_diff(w, prev);
        trace.samples.push_back({t, d, 0.0});
        history.push_back(w);
        bool nodewise_dec = true;
        for (std::size_t i = 0; i < w.values.size(); ++i)
            if (w[i] > prev[i] + 1e-12) { nodewise_dec = false; break; }
        dec_run = nodewise_dec ? dec_run + 1 : 0;
        trace.monotone_decreasing_run = std::max(trace.monotone_decreasing_run, dec_run);
        prev = w;
        if (d < best_diff) {
            best_diff = d;
            best = w;
        }
        if (d <= tol) {
            trace.converged = true;
            break;
        }
    }
    trace.m_obs = detail::fit_tail_rate(trace.samples);
    GridFunction out = trace.converged ? w : best;
    detail::finalize_diff_final(trace, history, out);
    return {out, trace};
}

/// Closure data of the 1-graph of u_-: (x, d_x u_-, u_-) at smooth nodes.
struct GraphSet {
    PointSet points;
    std::vector<std::size_t> nonsmooth_nodes;
};

inline GraphSet graph_lambda(const ContactModel& model, const GridFunction& u_minus) {
    (void)model;
    GraphSet gs;
    for (std::size_t i = 0; i < u_minus.values.size(); ++i) {
        if (is_smooth_node(u_minus, i))
            gs.points.push_back(
                {u_minus.grid.node(i), gradient_at_node(u_minus, i), u_minus[i]});
        else
            gs.nonsmooth_nodes.push_back(i);
    }
    return gs;
}

/// Finite sample of the Mane set: contact points of u_- and u_+, clustered.
struct ManeSet {
    PointSet points;          ///< cluster centers
    PointSet raw_points;      ///< all qualifying nodes
    double eps_mane = 0.0;
    int grid_n = 0;
};

inline ManeSet mane_set(const ContactModel& model, const GridFunction& u_minus,
                        const GridFunction& u_plus, double eps_mane,
                        double cluster_radius = 0.3) {
    if (!(u_minus.grid == u_plus.grid)) throw GridMismatch();
    (void)model;
    ManeSet ms;
    ms.eps_mane = eps_mane;
    ms.grid_n = u_minus.grid.n;
    for (std::size_t i = 0; i < u_minus.values.size(); ++i) {
        if (std::abs(u_minus[i] - u_plus[i]) <= eps_mane)
            ms.raw_points.push_back(
                {u_minus.grid.node(i), gradient_at_node(u_minus, i), u_minus[i]});
    }
    if (ms.raw_points.empty())
        throw EmptyResult("mane_set: no node with |u_- - u_+| <= " +
                          std::to_string(eps_mane));
    // greedy clustering, same metric as omega_limit
    const int dim = u_minus.grid.dim;
    std::vector<State> centers, sums;
    std::vector<std::size_t> counts;
    for (const State& s : ms.raw_points) {
        bool assigned = false;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            double dx = torus_dist(s.x, centers[c].x, dim);
            double dp = norm(s.p - centers[c].p);
            double du = s.u - centers[c].u;
            if (std::sqrt(dx * dx + dp * dp + du * du) <= cluster_radius) {
                Vec rel = centers[c].x + torus_delta(s.x, centers[c].x, dim);
                sums[c].x = sums[c].x + rel;
                sums[c].p = sums[c].p + s.p;
                sums[c].u += s.u;
                counts[c] += 1;
                assigned = true;
                break;
            }
        }
        if (!assigned) {
            centers.push_back(s);
            sums.push_back(s);
            counts.push_back(1);
        }
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
        State mean;
        mean.x = wrap((1.0 / double(counts[c])) * sums[c].x, dim);
        mean.p = (1.0 / double(counts[c])) * sums[c].p;
        mean.u = sums[c].u / double(counts[c]);
        ms.points.push_back(mean);
    }
    return ms;
}

/// Max residual |H(x, du, u)| over smooth nodes of a candidate stationary
/// solution.
inline double verify_stationary(const ContactModel& model, const GridFunction& u) {
    double res = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        if (!is_smooth_node(u, i)) continue;
        res = std::max(res,
                       std::abs(model.H(u.grid.node(i), gradient_at_node(u, i), u[i])));
    }
    return res;
}

/// A.e.-subsolution defect: positive part of H evaluated with one-sided
/// differences, minimized over the one-sided choices per axis. Near zero for
/// viscosity solutions (their kinks are of the admissible orientation).
inline double subsolution_defect(const ContactModel& model, const GridFunction& u) {
    double defect = 0.0;
    const int dim = u.grid.dim;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        double best = 1e300;
        for (int sx = 0; sx < 2; ++sx)
            for (int sy = 0; sy < (dim > 1 ? 2 : 1); ++sy) {
                Vec p = {one_sided_slopes(u, i, 0)[sx],
                         dim > 1 ? one_sided_slopes(u, i, 1)[sy] : 0.0};
                best = std::min(best, model.H(u.grid.node(i), p, u[i]));
            }
        defect = std::max(defect, best);
    }
    return defect;
}

inline void write_trace_csv(const ConvergenceTrace& trace, std::ostream& os) {
    os << "t,diff_prev,diff_final\n";
    char buf[96];
    for (const auto& s : trace.samples) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", s.t, s.diff_prev,
                      s.diff_final);
        os << buf;
    }
}

} // namespace ckam
