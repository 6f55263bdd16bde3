#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <utility>
#include <vector>

#include "ckam/action.hpp"
#include "ckam/errors.hpp"
#include "ckam/flow.hpp"
#include "ckam/grid.hpp"
#include "ckam/model.hpp"

namespace ckam {

/// Discrete minimizing curve recovered from an ActionTable. Velocities are
/// torus-minimal difference quotients; p samples are dL/dv along the curve.
struct DiscreteCurve {
    double delta = 0.0;
    std::vector<double> times;
    std::vector<Vec> xs;
    std::vector<Vec> vs;   ///< vs[k] = (xs[k+1]-xs[k])/delta, size xs.size()-1
    std::vector<double> us;
    std::vector<Vec> ps;   ///< ps[k] = dL/dv at (xs[k], vs[k], us[k])
};

/// Ordered (x, p) trace of one stable branch of a planar saddle, in the
/// universal cover (x not wrapped).
struct ManifoldCurve {
    std::vector<std::array<double, 2>> samples;
    int branch = 0;
    double seed_offset = 0.0;
};

/// Saddle data of the projected planar system (x, p).
struct SaddleInfo {
    std::array<double, 2> point{};
    double lambda_stable = 0.0;
    double lambda_unstable = 0.0;
    std::array<double, 2> v_stable{};
    std::array<double, 2> v_unstable{};
};

namespace detail {

/// Predecessor position for a continuous point y at a given layer: the
/// recorded nodal argmin offsets, interpolated as a vector field. Offsets are
/// bounded by the search radius, so componentwise interpolation is safe.
inline Vec interp_argmin(const ActionTable& tab, int layer, Vec y) {
    const PeriodicGrid& g = tab.grid;
    const double h = g.spacing();
    const auto& rec = tab.argmins[layer];
    auto offset_at = [&](int ix, int iy) {
        std::size_t i = g.index(ix, iy);
        return torus_delta(rec[i].argmin, g.node(i), g.dim);
    };
    double fx = y[0] / h;
    int ix = int(std::floor(fx));
    double tx = fx - ix;
    Vec off;
    if (g.dim == 1) {
        Vec o0 = offset_at(ix, 0), o1 = offset_at(ix + 1, 0);
        off = (1 - tx) * o0 + tx * o1;
    } else {
        double fy = y[1] / h;
        int iy = int(std::floor(fy));
        double ty = fy - iy;
        Vec o00 = offset_at(ix, iy), o10 = offset_at(ix + 1, iy);
        Vec o01 = offset_at(ix, iy + 1), o11 = offset_at(ix + 1, iy + 1);
        off = (1 - ty) * ((1 - tx) * o00 + tx * o10) +
              ty * ((1 - tx) * o01 + tx * o11);
    }
    return y + off;
}

} // namespace detail

/// Follows the recorded argmins from (x_target, t) back to the point source
/// and reconstructs positions, velocities, u and p along the way.
inline DiscreteCurve backtrack_minimizer(const ContactModel& model,
                                         const ActionTable& table, Vec x_target,
                                         double t) {
    if (table.direction != Direction::Backward)
        throw Unsupported("backtrack_minimizer: backward tables only");
    if (t > table.t_end() + 1e-9)
        throw Error("backtrack_minimizer: t exceeds table horizon");
    const int kt = table.layer_index(t);
    const int dim = model.dim;
    const double delta = table.delta;

    std::vector<Vec> xs(std::size_t(kt) + 2);
    xs[std::size_t(kt) + 1] = wrap(x_target, dim);
    for (int k = kt; k >= 1; --k)
        xs[std::size_t(k)] =
            wrap(detail::interp_argmin(table, k, xs[std::size_t(k) + 1]), dim);
    xs[0] = table.source_x;

    DiscreteCurve c;
    c.delta = delta;
    c.xs = xs;
    for (std::size_t k = 0; k < xs.size(); ++k) c.times.push_back(delta * double(k));
    c.us.resize(xs.size());
    c.us[0] = table.source_u;
    for (std::size_t k = 1; k < xs.size(); ++k)
        c.us[k] = interpolate(table.layers[k - 1], xs[k]);
    for (std::size_t k = 0; k + 1 < xs.size(); ++k)
        c.vs.push_back((1.0 / delta) * torus_delta(xs[k + 1], xs[k], dim));
    for (std::size_t k = 0; k < xs.size(); ++k) {
        Vec v = k < c.vs.size() ? c.vs[k] : c.vs.back();
        c.ps.push_back(model.lagrangian_v(xs[k], v, c.us[k]));
    }
    return c;
}

struct MomentumDiagnostics {
    std::vector<double> horizons;
    std::vector<Vec> p_sequence;
    std::vector<Vec> terminal_points;
    bool cauchy_ok = false;
    double cauchy_tol = 5e-2;
};

/// Initial momentum of the horizon-n minimizers: for each horizon, backtrack
/// from the terminal node minimizing the final layer and record dL/dv on the
/// first segment. Convergence is declared when the last two horizons agree to
/// cauchy_tol; the full sequence is returned either way.
inline std::pair<Vec, MomentumDiagnostics>
initial_momentum(const ContactModel& model, Vec x0, double u0,
                 const std::vector<double>& n_list, const EvolveSettings& settings,
                 int grid_n = 256, double cauchy_tol = 5e-2) {
    if (n_list.size() < 3) throw Error("initial_momentum: need >= 3 horizons");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1])
            throw Error("initial_momentum: horizons must increase");
    MomentumDiagnostics diag;
    diag.cauchy_tol = cauchy_tol;
    for (double horizon : n_list) {
        ActionTable tab = implicit_action(model, x0, u0, horizon, settings,
                                          Direction::Backward, grid_n);
        const GridFunction& last = tab.layers.back();
        std::size_t best = 0;
        for (std::size_t i = 1; i < last.values.size(); ++i)
            if (last[i] < last[best]) best = i;
        DiscreteCurve c =
            backtrack_minimizer(model, tab, tab.grid.node(best), tab.t_end());
        // The early layers inherit the point-source cone (curvature ~ 1/t),
        // which biases the first few argmins. Read the state off the curve at
        // a clean mid time instead and transport the momentum back to t = 0
        // along the contact flow.
        const double t_mid = std::min(0.5, horizon / 4.0);
        std::size_t km = std::size_t(std::llround(t_mid / settings.delta));
        if (km + 1 >= c.xs.size()) km = c.xs.size() - 2;
        Vec v_mid = (0.5 / settings.delta) *
                    torus_delta(c.xs[km + 1], c.xs[km - 1], model.dim);
        State mid{c.xs[km], model.lagrangian_v(c.xs[km], v_mid, c.us[km]),
                  c.us[km]};
        const double bdt = 1e-3;
        const long bsteps = std::llround(km * settings.delta / bdt);
        for (long k = 0; k < bsteps; ++k) mid = detail::rk4_step(model, mid, -bdt);
        diag.horizons.push_back(horizon);
        diag.p_sequence.push_back(mid.p);
        diag.terminal_points.push_back(tab.grid.node(best));
    }
    const Vec& a = diag.p_sequence[diag.p_sequence.size() - 2];
    const Vec& b = diag.p_sequence.back();
    diag.cauchy_ok = norm(a - b) <= cauchy_tol;
    return {diag.p_sequence.back(), diag};
}

/// Max defect of the two-time action relation u(t2) = h_{x(t1),u(t1)}(x(t2),
/// t2 - t1) over the given time pairs; near zero exactly for globally
/// minimizing orbits.
inline double check_globally_minimizing(const ContactModel& model,
                                        const Orbit& orbit,
                                        const EvolveSettings& settings,
                                        const std::vector<std::pair<double, double>>& pairs,
                                        int grid_n = 256) {
    double defect = 0.0;
    for (auto [t1, t2] : pairs) {
        if (t2 - t1 < 2 * settings.delta)
            throw Error("check_globally_minimizing: t2-t1 < 2*delta");
        const State& s1 = orbit.at_time(t1);
        const State& s2 = orbit.at_time(t2);
        ActionTable tab = implicit_action(model, s1.x, s1.u, t2 - t1, settings,
                                          Direction::Backward, grid_n);
        defect = std::max(defect,
                          std::abs(s2.u - interpolate(tab.layer_at(t2 - t1), s2.x)));
    }
    return defect;
}

/// Max defect of the semi-static relation u(t2) = inf_s h_{x(t1),u(t1)}(x(t2),
/// s), with the infimum truncated to s_grid.
inline double check_semistatic(const ContactModel& model, const Orbit& orbit,
                               const EvolveSettings& settings,
                               const std::vector<double>& s_grid,
                               const std::vector<std::pair<double, double>>& pairs,
                               int grid_n = 256) {
    if (s_grid.empty()) throw Error("check_semistatic: empty s_grid");
    double s_max = *std::max_element(s_grid.begin(), s_grid.end());
    double defect = 0.0;
    for (auto [t1, t2] : pairs) {
        const State& s1 = orbit.at_time(t1);
        const State& s2 = orbit.at_time(t2);
        ActionTable tab = implicit_action(model, s1.x, s1.u, s_max, settings,
                                          Direction::Backward, grid_n);
        double best = 1e300;
        for (double s : s_grid)
            best = std::min(best, interpolate(tab.layer_at(s), s2.x));
        defect = std::max(defect, std::abs(s2.u - best));
    }
    return defect;
}

namespace detail {

/// Planar projection (x, p) of the contact field; valid only when both
/// components are independent of u, which is verified on a sample lattice.
inline std::array<double, 2> planar_field(const ContactModel& m, double x,
                                          double p, double u = 0.0) {
    Vec xv = {wrap_coord(x), 0.0}, pv = {p, 0.0};
    Vec hp = m.grad_p(xv, pv, u);
    Vec hx = m.grad_x(xv, pv, u);
    double hu = m.grad_u(xv, pv, u);
    return {hp[0], -hx[0] - hu * p};
}

inline void require_planar(const ContactModel& m) {
    if (m.dim != 1)
        throw Unsupported("planar reduction implemented for dim 1 only");
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
            double x = two_pi * i / 10.0, p = -3.0 + 6.0 * j / 9.0;
            auto f0 = planar_field(m, x, p, 0.0);
            auto f1 = planar_field(m, x, p, 1.37);
            if (std::abs(f0[0] - f1[0]) > 1e-8 || std::abs(f0[1] - f1[1]) > 1e-8)
                throw PlanarReductionFailed(
                    "planar field depends on u at x=" + std::to_string(x));
        }
}

inline std::array<double, 2> planar_rk4(const ContactModel& m,
                                        std::array<double, 2> s, double dt) {
    auto f = [&m](std::array<double, 2> q) { return planar_field(m, q[0], q[1]); };
    auto k1 = f(s);
    auto k2 = f({s[0] + dt / 2 * k1[0], s[1] + dt / 2 * k1[1]});
    auto k3 = f({s[0] + dt / 2 * k2[0], s[1] + dt / 2 * k2[1]});
    auto k4 = f({s[0] + dt * k3[0], s[1] + dt * k3[1]});
    return {s[0] + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            s[1] + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
}

} // namespace detail

/// Locates the planar saddle near (0, 0) by Newton iteration and returns its
/// eigenstructure. Throws NotASaddle unless the eigenvalues are real with
/// opposite signs.
inline SaddleInfo saddle_eigen(const ContactModel& model) {
    detail::require_planar(model);
    std::array<double, 2> s = {0.0, 0.0};
    const double fd = 1e-6;
    double jac[2][2];
    auto fill_jac = [&](std::array<double, 2> q) {
        for (int c = 0; c < 2; ++c) {
            auto qp = q, qm = q;
            (c == 0 ? qp[0] : qp[1]) += fd;
            (c == 0 ? qm[0] : qm[1]) -= fd;
            auto fp = detail::planar_field(model, qp[0], qp[1]);
            auto fm = detail::planar_field(model, qm[0], qm[1]);
            jac[0][c] = (fp[0] - fm[0]) / (2 * fd);
            jac[1][c] = (fp[1] - fm[1]) / (2 * fd);
        }
    };
    for (int it = 0; it < 50; ++it) {
        auto f = detail::planar_field(model, s[0], s[1]);
        if (std::abs(f[0]) < 1e-14 && std::abs(f[1]) < 1e-14) break;
        fill_jac(s);
        double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if (std::abs(det) < 1e-14) throw NotASaddle("singular Jacobian in Newton");
        s[0] -= (jac[1][1] * f[0] - jac[0][1] * f[1]) / det;
        s[1] -= (-jac[1][0] * f[0] + jac[0][0] * f[1]) / det;
    }
    fill_jac(s);
    double tr = jac[0][0] + jac[1][1];
    double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    double disc = tr * tr - 4 * det;
    if (disc <= 0.0) throw NotASaddle("complex eigenvalues");
    double l1 = 0.5 * (tr + std::sqrt(disc));
    double l2 = 0.5 * (tr - std::sqrt(disc));
    if (!(l1 > 0.0 && l2 < 0.0))
        throw NotASaddle("eigenvalues not of opposite sign");
    auto eigvec = [&](double lam) -> std::array<double, 2> {
        // rows of (J - lam I) are parallel; use the better-conditioned one
        std::array<double, 2> v;
        if (std::abs(jac[0][1]) > 1e-12)
            v = {jac[0][1], lam - jac[0][0]};
        else
            v = {lam - jac[1][1], jac[1][0]};
        double n = std::hypot(v[0], v[1]);
        return {v[0] / n, v[1] / n};
    };
    SaddleInfo info;
    info.point = s;
    info.lambda_unstable = l1;
    info.lambda_stable = l2;
    info.v_unstable = eigvec(l1);
    info.v_stable = eigvec(l2);
    return info;
}

/// Traces both stable branches of the planar saddle: seed at +-eps_seed along
/// the stable eigenvector, integrate backward in time for t_back in the
/// universal cover. Samples run from the seed outward.
inline std::pair<ManifoldCurve, ManifoldCurve>
saddle_stable_manifold(const ContactModel& model, double eps_seed = 1e-4,
                       double t_back = 25.0) {
    SaddleInfo info = saddle_eigen(model);
    auto trace = [&](int sign, int branch) {
        ManifoldCurve mc;
        mc.branch = branch;
        mc.seed_offset = sign * eps_seed;
        std::array<double, 2> s = {info.point[0] + sign * eps_seed * info.v_stable[0],
                                   info.point[1] + sign * eps_seed * info.v_stable[1]};
        const double dt = 1e-3;
        const long steps = long(t_back / dt);
        mc.samples.push_back(info.point); // branch closure: include the saddle
        mc.samples.push_back(s);
        for (long k = 0; k < steps; ++k) {
            s = detail::planar_rk4(model, s, -dt);
            if (k % 5 == 4) mc.samples.push_back(s);
            if (std::abs(s[0] - info.point[0]) > two_pi + 1.0 ||
                std::abs(s[1]) > 12.0)
                break;
        }
        return mc;
    };
    return {trace(+1, 0), trace(-1, 1)};
}

/// All momenta p such that (x0, p) lies on one of the traced stable branches:
/// crossings of the line x = x0 (matched mod 2pi) by linear interpolation
/// between consecutive samples.
inline std::vector<double> shoot_p0(const std::pair<ManifoldCurve, ManifoldCurve>& branches,
                                    Vec x0) {
    std::vector<double> out;
    auto scan = [&](const ManifoldCurve& mc) {
        for (int k = -3; k <= 3; ++k) {
            double target = wrap_coord(x0[0]) + two_pi * k;
            for (std::size_t i = 0; i + 1 < mc.samples.size(); ++i) {
                double a = mc.samples[i][0] - target;
                double b = mc.samples[i + 1][0] - target;
                if (a == 0.0 || a * b < 0.0) {
                    double t = a / (a - b);
                    double p = mc.samples[i][1] +
                               t * (mc.samples[i + 1][1] - mc.samples[i][1]);
                    bool dup = false;
                    for (double q : out)
                        if (std::abs(q - p) < 1e-6) { dup = true; break; }
                    if (!dup) out.push_back(p);
                }
            }
        }
    };
    scan(branches.first);
    scan(branches.second);
    if (out.empty()) throw NoIntersection("no branch crosses x = " +
                                          std::to_string(x0[0]));
    std::sort(out.begin(), out.end());
    return out;
}

/// Bisection refinement of a stable-manifold momentum at x0: off-manifold
/// planar orbits exit a neighborhood of the saddle to a definite side, and
/// the exit side flips across the manifold. Returns a p accurate to roughly
/// machine precision, which the interpolated shoot_p0 value is not.
inline double refine_stable_momentum(const ContactModel& model, double x0,
                                     double p_guess) {
    detail::require_planar(model);
    double x0u = torus_delta_coord(x0, 0.0); // representative in (-pi, pi]
    const double exit_x = std::max(2.5, std::abs(x0u) + 0.5);
    auto classify = [&](double p) -> int {
        std::array<double, 2> s = {x0u, p};
        const double dt = 1e-3;
        for (long k = 0; k < 60000; ++k) {
            s = detail::planar_rk4(model, s, dt);
            if (std::abs(s[0]) > exit_x) return s[0] > 0 ? +1 : -1;
        }
        return 0;
    };
    double d = 1e-3;
    double lo = p_guess - d, hi = p_guess + d;
    int clo = classify(lo), chi = classify(hi);
    for (int grow = 0; clo == chi && grow < 8; ++grow) {
        d *= 4;
        lo = p_guess - d; hi = p_guess + d;
        clo = classify(lo); chi = classify(hi);
    }
    if (clo == 0) return lo;
    if (chi == 0) return hi;
    if (clo == chi)
        throw NoIntersection("no stable-manifold momentum near p = " +
                             std::to_string(p_guess));
    for (int it = 0; it < 100 && hi - lo > 1e-15 * (1 + std::abs(p_guess)); ++it) {
        double mid = 0.5 * (lo + hi);
        int cm = classify(mid);
        if (cm == 0) return mid;
        if (cm == clo) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline void write_csv(const DiscreteCurve& c, std::ostream& os, int dim = 1) {
    os << (dim == 1 ? "t,x,v,u,p\n" : "t,x,y,vx,vy,u,px,py\n");
    char buf[160];
    for (std::size_t k = 0; k < c.xs.size(); ++k) {
        Vec v = k < c.vs.size() ? c.vs[k] : c.vs.back();
        if (dim == 1)
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g\n",
                          c.times[k], c.xs[k][0], v[0], c.us[k], c.ps[k][0]);
        else
            std::snprintf(buf, sizeof buf,
                          "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                          c.times[k], c.xs[k][0], c.xs[k][1], v[0], v[1], c.us[k],
                          c.ps[k][0], c.ps[k][1]);
        os << buf;
    }
}

inline void write_csv(const ManifoldCurve& mc, std::ostream& os) {
    os << "x,p\n";
    char buf[80];
    for (const auto& s : mc.samples) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", s[0], s[1]);
        os << buf;
    }
}

} // namespace ckam
