#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ckam/errors.hpp"
#include "ckam/expr.hpp"
#include "ckam/grid.hpp"

namespace ckam {

/// Mechanical-with-coupling form H = 1/2 a(x)|p|^2 + b(x).p + V(x) + g(x)u,
/// which has the closed-form Legendre dual
///   L(x,v,u) = |v - b(x)|^2 / (2 a(x)) - V(x) - g(x) u.
/// Null members default to a = 1, b = 0, V = 0, g = 0.
struct MechanicalContact {
    std::function<double(Vec)> kinetic_a;
    std::function<Vec(Vec)> drift_b;
    std::function<double(Vec)> potential;
    std::function<Vec(Vec)> potential_grad; ///< analytic dV/dx when available
    std::function<double(Vec)> coupling_g;
    std::function<Vec(Vec)> coupling_grad;  ///< analytic dg/dx when available

    double a(Vec x) const { return kinetic_a ? kinetic_a(x) : 1.0; }
    Vec b(Vec x) const { return drift_b ? drift_b(x) : Vec{0.0, 0.0}; }
    double V(Vec x) const { return potential ? potential(x) : 0.0; }
    double g(Vec x) const { return coupling_g ? coupling_g(x) : 0.0; }
};

/// A contact Hamiltonian H(x,p,u) on T*T^d x R with gradients, the
/// Legendre-dual Lagrangian, and the regularity metadata used by the solvers.
struct ContactModel {
    std::string name;
    int dim = 1;

    std::function<double(Vec, Vec, double)> hamiltonian;
    std::function<Vec(Vec, Vec, double)> grad_x_fn;   ///< analytic, else FD
    std::function<Vec(Vec, Vec, double)> grad_p_fn;
    std::function<double(Vec, Vec, double)> grad_u_fn;

    std::optional<MechanicalContact> mech;

    double kappa = 1.0;   ///< bound on |dH/du|
    double v_max = 6.0;   ///< velocity bound for variational searches
    double p_box = 10.0;  ///< half-width of the p search box (generic Legendre)
    double h_fd = 1e-5;   ///< finite-difference step for gradient fallback

    double H(Vec x, Vec p, double u) const { return hamiltonian(x, p, u); }

    Vec grad_x(Vec x, Vec p, double u) const {
        if (grad_x_fn) return grad_x_fn(x, p, u);
        Vec g = {0.0, 0.0};
        for (int ax = 0; ax < dim; ++ax) {
            Vec xp = x, xm = x;
            xp[ax] += h_fd;
            xm[ax] -= h_fd;
            g[ax] = (H(xp, p, u) - H(xm, p, u)) / (2 * h_fd);
        }
        return g;
    }

    Vec grad_p(Vec x, Vec p, double u) const {
        if (grad_p_fn) return grad_p_fn(x, p, u);
        Vec g = {0.0, 0.0};
        for (int ax = 0; ax < dim; ++ax) {
            Vec pp = p, pm = p;
            pp[ax] += h_fd;
            pm[ax] -= h_fd;
            g[ax] = (H(x, pp, u) - H(x, pm, u)) / (2 * h_fd);
        }
        return g;
    }

    double grad_u(Vec x, Vec p, double u) const {
        if (grad_u_fn) return grad_u_fn(x, p, u);
        return (H(x, p, u + h_fd) - H(x, p, u - h_fd)) / (2 * h_fd);
    }

    /// L(x,v,u) = sup_p p.v - H(x,p,u); closed form for mechanical models,
    /// numeric two-stage search over the p box otherwise.
    double lagrangian(Vec x, Vec v, double u) const {
        if (mech) {
            Vec w = v - mech->b(x);
            return dot(w, w) / (2.0 * mech->a(x)) - mech->V(x) - mech->g(x) * u;
        }
        Vec p_star;
        return legendre_numeric(x, v, u, p_star);
    }

    /// dL/dv; equals the maximizing p of the Legendre transform.
    Vec lagrangian_v(Vec x, Vec v, double u) const {
        if (mech) return (1.0 / mech->a(x)) * (v - mech->b(x));
        Vec p_star;
        legendre_numeric(x, v, u, p_star);
        return p_star;
    }

    double legendre_numeric(Vec x, Vec v, double u, Vec& p_star) const {
        // Coarse grid then ternary refinement per axis; the inner problem is
        // strictly concave in p under (H1).
        const int coarse = 33;
        Vec best = {0.0, 0.0};
        double best_val = -1e300;
        auto objective = [&](Vec p) { return dot(p, v) - H(x, p, u); };
        if (dim == 1) {
            for (int i = 0; i < coarse; ++i) {
                Vec p = {-p_box + 2 * p_box * i / (coarse - 1), 0.0};
                double val = objective(p);
                if (val > best_val) { best_val = val; best = p; }
            }
        } else {
            for (int i = 0; i < coarse; ++i)
                for (int j = 0; j < coarse; ++j) {
                    Vec p = {-p_box + 2 * p_box * i / (coarse - 1),
                             -p_box + 2 * p_box * j / (coarse - 1)};
                    double val = objective(p);
                    if (val > best_val) { best_val = val; best = p; }
                }
        }
        const double cell = 2 * p_box / (coarse - 1);
        for (int sweep = 0; sweep < (dim == 1 ? 1 : 3); ++sweep) {
            for (int ax = 0; ax < dim; ++ax) {
                double lo = best[ax] - cell, hi = best[ax] + cell;
                for (int it = 0; it < 60; ++it) {
                    double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
                    Vec p1 = best, p2 = best;
                    p1[ax] = m1;
                    p2[ax] = m2;
                    if (objective(p1) < objective(p2)) lo = m1;
                    else hi = m2;
                }
                best[ax] = 0.5 * (lo + hi);
            }
        }
        best_val = objective(best);
        for (int ax = 0; ax < dim; ++ax)
            if (std::abs(best[ax]) > p_box - 1.5 * cell)
                throw DualRangeExceeded(
                    "Legendre sup attained at the p-box boundary for model '" + name +
                    "'; increase p_box or reduce |v|");
        p_star = best;
        return best_val;
    }
};

inline double eval_hamiltonian(const ContactModel& m, Vec x, Vec p, double u) {
    return m.H(x, p, u);
}

inline double eval_lagrangian(const ContactModel& m, Vec x, Vec v, double u) {
    return m.lagrangian(x, v, u);
}

// ---------------------------------------------------------------------------
// Built-in catalog
// ---------------------------------------------------------------------------

/// Assemble a ContactModel from a MechanicalContact form (a == 1, analytic
/// gradients wired from the supplied derivative callbacks where present).
inline ContactModel make_mechanical(std::string name, int dim, MechanicalContact mech,
                                    double kappa, double v_max = 6.0) {
    ContactModel m;
    m.name = std::move(name);
    m.dim = dim;
    m.kappa = kappa;
    m.v_max = v_max;
    MechanicalContact mc = std::move(mech);
    m.hamiltonian = [mc](Vec x, Vec p, double u) {
        return 0.5 * mc.a(x) * dot(p, p) + dot(mc.b(x), p) + mc.V(x) + mc.g(x) * u;
    };
    m.grad_p_fn = [mc](Vec x, Vec p, double) { return mc.a(x) * p + mc.b(x); };
    m.grad_u_fn = [mc](Vec x, Vec, double) { return mc.g(x); };
    if (mc.potential_grad && !mc.kinetic_a && !mc.drift_b) {
        m.grad_x_fn = [mc](Vec x, Vec, double u) {
            Vec g = mc.potential_grad(x);
            if (mc.coupling_grad) g = g + u * mc.coupling_grad(x);
            return g;
        };
    }
    m.mech = std::move(mc);
    return m;
}

/// The dissipative pendulum H = 1/2 p^2 - 1 + cos x + u.
inline ContactModel make_pendulum() {
    MechanicalContact mc;
    mc.potential = [](Vec x) { return std::cos(x[0]) - 1.0; };
    mc.potential_grad = [](Vec x) { return Vec{-std::sin(x[0]), 0.0}; };
    mc.coupling_g = [](Vec) { return 1.0; };
    mc.coupling_grad = [](Vec) { return Vec{0.0, 0.0}; };
    return make_mechanical("pendulum", 1, std::move(mc), 1.0, 6.0);
}

/// H = 1/2 p^2 + u.
inline ContactModel make_linear_discount() {
    MechanicalContact mc;
    mc.coupling_g = [](Vec) { return 1.0; };
    mc.coupling_grad = [](Vec) { return Vec{0.0, 0.0}; };
    mc.potential = [](Vec) { return 0.0; };
    mc.potential_grad = [](Vec) { return Vec{0.0, 0.0}; };
    return make_mechanical("linear_discount", 1, std::move(mc), 1.0, 6.0);
}

/// H = 1/2 p^2 + lambda u + V(x) with V = v_amp cos x.
inline ContactModel make_free_discount(double lambda = 1.0, double v_amp = 0.5) {
    MechanicalContact mc;
    mc.potential = [v_amp](Vec x) { return v_amp * std::cos(x[0]); };
    mc.potential_grad = [v_amp](Vec x) { return Vec{-v_amp * std::sin(x[0]), 0.0}; };
    mc.coupling_g = [lambda](Vec) { return lambda; };
    mc.coupling_grad = [](Vec) { return Vec{0.0, 0.0}; };
    return make_mechanical("free_discount", 1, std::move(mc), std::abs(lambda), 6.0);
}

/// H = 1/2 p^2 - 1: no u dependence, (HJ_s) has no solution. Failure paths.
inline ContactModel make_no_solution() {
    MechanicalContact mc;
    mc.potential = [](Vec) { return -1.0; };
    mc.potential_grad = [](Vec) { return Vec{0.0, 0.0}; };
    return make_mechanical("no_solution", 1, std::move(mc), 0.0, 6.0);
}

/// T^2 pendulum H = 1/2 |p|^2 - 2 + cos x + cos y + u.
inline ContactModel make_pendulum2d() {
    MechanicalContact mc;
    mc.potential = [](Vec x) { return std::cos(x[0]) + std::cos(x[1]) - 2.0; };
    mc.potential_grad = [](Vec x) { return Vec{-std::sin(x[0]), -std::sin(x[1])}; };
    mc.coupling_g = [](Vec) { return 1.0; };
    mc.coupling_grad = [](Vec) { return Vec{0.0, 0.0}; };
    return make_mechanical("pendulum2d", 2, std::move(mc), 1.0, 6.0);
}

/// Custom mechanical model from coefficient expressions (see cli config):
/// potential and coupling coefficient over {sin, cos, polynomial} primitives.
inline ContactModel make_custom(const std::string& name, int dim,
                                const std::string& potential_expr,
                                const std::string& coupling_expr,
                                double v_max = 6.0) {
    Expr V = Expr::parse(potential_expr.empty() ? "0" : potential_expr);
    Expr g = Expr::parse(coupling_expr.empty() ? "0" : coupling_expr);
    MechanicalContact mc;
    mc.potential = [V](Vec x) { return V.eval(x); };
    mc.potential_grad = [V](Vec x) { return Vec{V.deriv(x, 0), V.deriv(x, 1)}; };
    mc.coupling_g = [g](Vec x) { return g.eval(x); };
    mc.coupling_grad = [g](Vec x) { return Vec{g.deriv(x, 0), g.deriv(x, 1)}; };
    // kappa from a scan of |g| over the torus.
    double kap = 0.0;
    for (int i = 0; i < 64; ++i)
        for (int j = 0; j < (dim > 1 ? 64 : 1); ++j)
            kap = std::max(kap, std::abs(g.eval({i * two_pi / 64, j * two_pi / 64})));
    return make_mechanical(name, dim, std::move(mc), kap, v_max);
}

/// Catalog lookup used by the CLI; throws ConfigError on unknown names.
inline ContactModel make_model(const std::string& name,
                               const std::map<std::string, double>& params = {},
                               const std::map<std::string, std::string>& exprs = {}) {
    auto num = [&](const std::string& k, double dflt) {
        auto it = params.find(k);
        return it == params.end() ? dflt : it->second;
    };
    ContactModel m;
    if (name == "pendulum") m = make_pendulum();
    else if (name == "linear_discount") m = make_linear_discount();
    else if (name == "free_discount")
        m = make_free_discount(num("lambda", 1.0), num("v_amp", 0.5));
    else if (name == "no_solution") m = make_no_solution();
    else if (name == "pendulum2d") m = make_pendulum2d();
    else if (name == "custom") {
        auto expr = [&](const std::string& k) {
            auto it = exprs.find(k);
            return it == exprs.end() ? std::string() : it->second;
        };
        m = make_custom("custom", int(num("dim", 1.0)), expr("potential"),
                        expr("coupling"), num("v_max", 6.0));
    } else {
        throw ConfigError("unknown model '" + name + "'");
    }
    if (params.count("v_max")) m.v_max = params.at("v_max");
    if (params.count("kappa")) m.kappa = params.at("kappa");
    if (params.count("p_box")) m.p_box = params.at("p_box");
    return m;
}

// ---------------------------------------------------------------------------
// Condition checker
// ---------------------------------------------------------------------------

struct ConditionWitness {
    std::string condition;
    Vec x{}, p{};
    double u = 0.0;
};

struct ConditionReport {
    bool h1_ok = false, h3_ok = false, a1_ok = false, a2_ok = false, b_ok = false;
    std::vector<ConditionWitness> witnesses;
    double kappa0 = 0.0;     ///< strict lower bound found for dH/du on {|H| <= eps_E}
    double u1 = 0.0, u2 = 0.0;
    bool all_ok() const { return h1_ok && h3_ok && a1_ok && a2_ok && b_ok; }
};

/// Numerical check of (H1), (H3), (A1), (A2) and the displayed sufficient
/// condition for (B), by scanning a (x,p,u) box. Failures are reported with
/// witnesses, never thrown.
inline ConditionReport check_conditions(const ContactModel& m,
                                        std::array<double, 2> u_range,
                                        int n_scan = 32) {
    if (n_scan < 16) throw Error("check_conditions: n_scan must be >= 16");
    constexpr double eps_E = 1e-2; // slab width around the zero level set E
    ConditionReport rep;
    rep.h1_ok = rep.h3_ok = rep.a2_ok = true;

    const double p_scan = std::min(m.p_box, m.v_max);
    const int ny = m.dim > 1 ? n_scan : 1;
    auto xs = [&](int i) { return i * two_pi / n_scan; };
    auto ps = [&](int i) { return -p_scan + 2 * p_scan * i / (n_scan - 1); };
    auto us = [&](int i) {
        return u_range[0] + (u_range[1] - u_range[0]) * i / (n_scan - 1);
    };

    double kappa0 = 1e300;
    bool slab_hit = false;
    const double hp = 1e-4;

    for (int i = 0; i < n_scan; ++i) {
        for (int j = 0; j < ny; ++j) {
            Vec x = {xs(i), m.dim > 1 ? xs(j) : 0.0};
            for (int k = 0; k < n_scan; ++k) {
                for (int l = 0; l < (m.dim > 1 ? n_scan : 1); ++l) {
                    Vec p = {ps(k), m.dim > 1 ? ps(l) : 0.0};
                    // (H1): positive definite FD Hessian in p.
                    double u_mid = us(n_scan / 2);
                    double hxx, hyy = 1.0, hxy = 0.0;
                    {
                        Vec pp = p, pm = p;
                        pp[0] += hp; pm[0] -= hp;
                        hxx = (m.H(x, pp, u_mid) - 2 * m.H(x, p, u_mid) +
                               m.H(x, pm, u_mid)) / (hp * hp);
                        if (m.dim > 1) {
                            Vec qp = p, qm = p;
                            qp[1] += hp; qm[1] -= hp;
                            hyy = (m.H(x, qp, u_mid) - 2 * m.H(x, p, u_mid) +
                                   m.H(x, qm, u_mid)) / (hp * hp);
                            Vec a = p, b = p, c = p, d = p;
                            a[0] += hp; a[1] += hp;
                            b[0] += hp; b[1] -= hp;
                            c[0] -= hp; c[1] += hp;
                            d[0] -= hp; d[1] -= hp;
                            hxy = (m.H(x, a, u_mid) - m.H(x, b, u_mid) -
                                   m.H(x, c, u_mid) + m.H(x, d, u_mid)) /
                                  (4 * hp * hp);
                        }
                    }
                    bool pd = m.dim == 1 ? hxx > 0
                                         : (hxx > 0 && hxx * hyy - hxy * hxy > 0);
                    if (!pd && rep.h1_ok) {
                        rep.h1_ok = false;
                        rep.witnesses.push_back({"H1", x, p, u_mid});
                    }
                    // (H3), (A2) over the u scan; (A1) on the |H| <= eps_E slab.
                    double best_absH = 1e300, hu_at_best = 0.0;
                    for (int iu = 0; iu < n_scan * 4; ++iu) {
                        double u = u_range[0] + (u_range[1] - u_range[0]) * iu /
                                                    (n_scan * 4 - 1);
                        double hu = m.grad_u(x, p, u);
                        if (std::abs(hu) > m.kappa + 1e-7 && rep.h3_ok) {
                            rep.h3_ok = false;
                            rep.witnesses.push_back({"H3", x, p, u});
                        }
                        if (hu < -1e-9 && rep.a2_ok) {
                            rep.a2_ok = false;
                            rep.witnesses.push_back({"A2", x, p, u});
                        }
                        double absH = std::abs(m.H(x, p, u));
                        if (absH < best_absH) {
                            best_absH = absH;
                            hu_at_best = hu;
                        }
                    }
                    if (best_absH <= eps_E) {
                        slab_hit = true;
                        kappa0 = std::min(kappa0, hu_at_best);
                    }
                }
            }
        }
    }
    rep.a1_ok = slab_hit && kappa0 > 0.0;
    rep.kappa0 = slab_hit ? kappa0 : 0.0;
    if (!rep.a1_ok)
        rep.witnesses.push_back({"A1", {0, 0}, {0, 0}, 0.0});

    // (B): scan u_range for max_x H(x,0,u1) < 0 < min_x H(x,0,u2).
    bool have_u1 = false, have_u2 = false;
    for (int iu = 0; iu < n_scan * 4; ++iu) {
        double u = us(0) + (us(n_scan - 1) - us(0)) * iu / (n_scan * 4 - 1);
        double hmax = -1e300, hmin = 1e300;
        for (int i = 0; i < n_scan; ++i)
            for (int j = 0; j < ny; ++j) {
                double h = m.H({xs(i), m.dim > 1 ? xs(j) : 0.0}, {0, 0}, u);
                hmax = std::max(hmax, h);
                hmin = std::min(hmin, h);
            }
        if (hmax < 0.0 && !have_u1) { have_u1 = true; rep.u1 = u; }
        if (hmin > 0.0 && !have_u2) { have_u2 = true; rep.u2 = u; }
    }
    rep.b_ok = have_u1 && have_u2;
    if (!rep.b_ok)
        rep.witnesses.push_back({"B", {0, 0}, {0, 0}, 0.0});
    return rep;
}

} // namespace ckam
