#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ckam/action.hpp"
#include "ckam/flow.hpp"
#include "ckam/minimizer.hpp"
#include "ckam/model.hpp"
#include "ckam/oracle.hpp"
#include "ckam/semigroup.hpp"
#include "ckam/weakkam.hpp"

namespace ckam {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

inline double wall_now() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

/// Shared pendulum artifacts, solved once at moderate resolution and reused
/// by several criteria.
struct AcceptanceContext {
    ContactModel pend = make_pendulum();
    int threads = 1;
    unsigned seed = 2026;

    std::optional<GridFunction> u_minus_256;
    std::optional<ConvergenceTrace> trace_256;

    EvolveSettings settings_256() const {
        EvolveSettings s;
        s.delta = 1e-3;
        s.threads = threads;
        return s;
    }

    const GridFunction& u_minus() {
        if (!u_minus_256) {
            PeriodicGrid g{1, 256};
            GridFunction phi0(g);
            auto [u, tr] = solve_stationary(pend, phi0, 1e-4, 60.0, settings_256());
            u_minus_256 = u;
            trace_256 = tr;
        }
        return *u_minus_256;
    }
};

inline double dist_to_origin(const State& s) {
    double dx = torus_dist(s.x, vec1(0.0), 1);
    return std::sqrt(dx * dx + dot(s.p, s.p) + s.u * s.u);
}

inline GridFunction random_fourier(const PeriodicGrid& g, std::mt19937_64& rng,
                                   double amp) {
    std::uniform_real_distribution<double> un(-1.0, 1.0);
    double a1 = un(rng), b1 = un(rng), a2 = un(rng), b2 = un(rng), a3 = un(rng);
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double x = g.node(i)[0];
        f[i] = amp * (a1 * std::sin(x) + b1 * std::cos(x) + a2 * std::sin(2 * x) +
                      b2 * std::cos(2 * x) + a3 * std::sin(3 * x));
    }
    return f;
}

} // namespace detail

/// Runs the 12 acceptance criteria with their pinned tolerances, one result
/// per criterion. Every criterion is evaluated even when earlier ones fail.
inline std::vector<CriterionResult> run_acceptance(int threads = 1,
                                                   std::ostream* log = nullptr) {
    detail::AcceptanceContext ctx;
    ctx.threads = threads;
    std::vector<CriterionResult> results;

    auto run = [&](int id, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
        CriterionResult r;
        r.id = id;
        r.name = name;
        double t0 = detail::wall_now();
        try {
            auto [ok, detail_str] = body();
            r.pass = ok;
            r.detail = detail_str;
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = detail::wall_now() - t0;
        if (log) {
            char buf[64];
            std::snprintf(buf, sizeof buf, " (%.1fs): ", r.seconds);
            *log << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << ". " << r.name
                 << buf << r.detail << "\n"
                 << std::flush;
        }
        results.push_back(r);
    };

    const ContactModel& pend = ctx.pend;

    run(1, "pendulum-mane-set", [&]() -> std::pair<bool, std::string> {
        double t0 = detail::wall_now();
        PeriodicGrid g{1, 512};
        GridFunction phi0(g);
        EvolveSettings s;
        s.delta = 1e-3;
        s.threads = threads;
        auto [um, tr] = solve_stationary(pend, phi0, 1e-4, 60.0, s);
        auto [up, trf] = conjugate_forward_limit(pend, um, 1e-4, 25.0, s);
        ManeSet ms = mane_set(pend, um, up, 3e-2);
        double elapsed = detail::wall_now() - t0;
        double d = detail::dist_to_origin(ms.points[0]);
        std::ostringstream os;
        os << ms.points.size() << " cluster(s), center dist " << d << ", "
           << elapsed << "s";
        return {ms.points.size() == 1 && d <= 3e-2 && elapsed <= 120.0, os.str()};
    });

    run(2, "stationary-uniqueness", [&]() -> std::pair<bool, std::string> {
        double t0 = detail::wall_now();
        PeriodicGrid g{1, 256};
        const GridFunction& um = ctx.u_minus();
        std::vector<GridFunction> starts;
        GridFunction z(g);
        starts.push_back(z);
        GridFunction c5(g), cm5(g), sn(g), tube(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            c5[i] = 5.0;
            cm5[i] = -5.0;
            sn[i] = std::sin(g.node(i)[0]);
            tube[i] = um[i] + 0.1;
        }
        starts.push_back(c5);
        starts.push_back(cm5);
        starts.push_back(sn);
        starts.push_back(tube);
        std::vector<GridFunction> sols;
        for (const auto& phi0 : starts) {
            auto [u, tr] = solve_stationary(pend, phi0, 1e-4, 60.0, ctx.settings_256());
            if (phi0.values[0] == 5.0 && phi0.values[1] == 5.0) ctx.trace_256 = tr;
            sols.push_back(u);
        }
        double worst = 0.0;
        for (std::size_t a = 0; a < sols.size(); ++a)
            for (std::size_t b = a + 1; b < sols.size(); ++b)
                worst = std::max(worst, sup_norm_diff(sols[a], sols[b]));
        double elapsed = detail::wall_now() - t0;
        std::ostringstream os;
        os << "max pairwise " << worst << ", " << elapsed << "s";
        return {worst <= 2e-4 && elapsed <= 600.0, os.str()};
    });

    run(3, "exponential-tube-rate", [&]() -> std::pair<bool, std::string> {
        ctx.u_minus(); // ensure a trace exists; criterion 2 may have replaced
                       // it with the longer phi0 = +5 run
        double m_obs = ctx.trace_256->m_obs;
        std::ostringstream os;
        os << "m_obs = " << m_obs;
        return {m_obs >= 0.4, os.str()};
    });

    run(4, "forward-collapse", [&]() -> std::pair<bool, std::string> {
        const GridFunction& um = ctx.u_minus();
        GridFunction below = um;
        for (auto& v : below.values) v -= 0.05;
        auto [up, tr] = conjugate_forward_limit(pend, below, 1e-4, 40.0,
                                                ctx.settings_256(), false);
        std::ostringstream os;
        os << "diverged = " << tr.diverged << ", monotone run = "
           << tr.monotone_decreasing_run;
        return {tr.diverged && tr.monotone_decreasing_run >= 10, os.str()};
    });

    run(5, "semigroup-properties", [&]() -> std::pair<bool, std::string> {
        std::mt19937_64 rng(ctx.seed);
        PeriodicGrid g{1, 64};
        EvolveSettings s;
        s.delta = 1e-2;
        s.threads = threads;
        int failures = 0;
        for (int k = 0; k < 50; ++k) {
            GridFunction psi = detail::random_fourier(g, rng, 0.5);
            GridFunction gap = detail::random_fourier(g, rng, 0.3);
            GridFunction phi = psi;
            for (std::size_t i = 0; i < g.size(); ++i)
                phi[i] -= 0.05 + std::abs(gap[i]);
            GridFunction tb_phi = step_backward(pend, phi, s);
            GridFunction tb_psi = step_backward(pend, psi, s);
            GridFunction tf_phi = step_forward(pend, phi, s);
            GridFunction tf_psi = step_forward(pend, psi, s);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (tb_phi[i] > tb_psi[i] + 1e-9) ++failures;
                if (tf_phi[i] > tf_psi[i] + 1e-9) ++failures;
            }
        }
        // conjugation inequalities at t = 1
        PeriodicGrid g2{1, 128};
        EvolveSettings s2;
        s2.delta = 1e-2;
        s2.threads = threads;
        const double t = 1.0;
        const double tol = 5.0 * s2.delta * t + 2.0 * g2.spacing();
        GridFunction w(g2);
        for (std::size_t i = 0; i < g2.size(); ++i)
            w[i] = 0.3 * std::sin(g2.node(i)[0]);
        GridFunction fw = evolve(pend, w, t, s2, Direction::Forward);
        GridFunction bfw = evolve(pend, fw, t, s2, Direction::Backward);
        GridFunction bw = evolve(pend, w, t, s2, Direction::Backward);
        GridFunction fbw = evolve(pend, bw, t, s2, Direction::Forward);
        double comp = 0.0;
        for (std::size_t i = 0; i < g2.size(); ++i) {
            comp = std::max(comp, w[i] - bfw[i]); // T-T+ >= id - tol
            comp = std::max(comp, fbw[i] - w[i]); // T+T- <= id + tol
        }
        // subsolution monotone growth under the backward flow
        const GridFunction& um = ctx.u_minus();
        GridFunction sub = um;
        for (auto& v : sub.values) v -= 0.1;
        GridFunction sub1 = evolve(pend, sub, 0.5, ctx.settings_256());
        GridFunction sub2 = evolve(pend, sub1, 0.5, ctx.settings_256());
        double drop = 0.0;
        for (std::size_t i = 0; i < um.grid.size(); ++i) {
            drop = std::max(drop, sub[i] - sub1[i]);
            drop = std::max(drop, sub1[i] - sub2[i]);
        }
        std::ostringstream os;
        os << failures << " monotonicity failures, composition defect " << comp
           << " (tol " << tol << "), subsolution drop " << drop;
        return {failures == 0 && comp <= tol && drop <= 1e-3, os.str()};
    });

    run(6, "comparison-barriers", [&]() -> std::pair<bool, std::string> {
        const GridFunction& um = ctx.u_minus();
        const PeriodicGrid& g = um.grid;
        const double delta0 = 0.1, m = 0.5, tol = 5e-3;
        GridFunction w(g);
        for (std::size_t i = 0; i < g.size(); ++i)
            w[i] = um[i] + delta0 * std::cos(3.0 * g.node(i)[0]);
        double worst = 0.0;
        double prev_t = 0.0;
        for (double t : {1.0, 2.0, 5.0}) {
            w = evolve(pend, w, t - prev_t, ctx.settings_256());
            prev_t = t;
            const double band = delta0 * std::exp(-m * t);
            for (std::size_t i = 0; i < g.size(); ++i) {
                worst = std::max(worst, w[i] - (um[i] + band)); // above omega_2
                worst = std::max(worst, (um[i] - band) - w[i]); // below omega_1
            }
        }
        std::ostringstream os;
        os << "worst barrier excess " << worst << " (tol " << tol << ")";
        return {worst <= tol, os.str()};
    });

    run(7, "backend-cross-check", [&]() -> std::pair<bool, std::string> {
        PeriodicGrid g{1, 256};
        EvolveSettings sv, slf;
        sv.delta = slf.delta = 1e-3;
        sv.threads = slf.threads = threads;
        GridFunction zero(g);
        double d_pend = backends_agree(pend, zero, 2.0, sv, slf);
        ContactModel lin = make_linear_discount();
        GridFunction one(g);
        for (auto& v : one.values) v = 1.0;
        double d_lin = backends_agree(lin, one, 2.0, sv, slf);
        std::ostringstream os;
        os << "pendulum " << d_pend << ", linear " << d_lin;
        return {d_pend <= 5e-2 && d_lin <= 5e-2, os.str()};
    });

    run(8, "oracle-equivalence", [&]() -> std::pair<bool, std::string> {
        double t0 = detail::wall_now();
        struct Case {
            ContactModel model;
            int n;
            int steps;
            double delta;
            double phi0;
        };
        std::vector<Case> cases = {
            {make_linear_discount(), 8, 4, 0.2, 1.0},
            {make_linear_discount(), 8, 8, 0.15, -0.5},
            {make_pendulum(), 16, 4, 0.2, 0.0},
            {make_pendulum(), 16, 6, 0.1, 0.3},
            {make_pendulum(), 12, 8, 0.2, 0.0},
        };
        double worst = 0.0;
        for (const auto& c : cases) {
            TinyProblem tp;
            tp.model = c.model;
            tp.n = c.n;
            tp.steps = c.steps;
            tp.delta = c.delta;
            PeriodicGrid g{1, c.n};
            GridFunction phi(g);
            for (std::size_t i = 0; i < g.size(); ++i)
                phi[i] = c.phi0 + 0.2 * std::sin(g.node(i)[0]);
            GridFunction ref = brute_force_evolve(tp, phi);
            EvolveSettings s;
            s.delta = c.delta;
            s.node_only = true;
            GridFunction dp = evolve(c.model, phi, c.steps * c.delta, s);
            worst = std::max(worst, sup_norm_diff(ref, dp));
        }
        double elapsed = detail::wall_now() - t0;
        std::ostringstream os;
        os << "worst diff " << worst << ", " << elapsed << "s";
        return {worst <= 1e-12 && elapsed <= 60.0, os.str()};
    });

    run(9, "omega-limit-inclusion", [&]() -> std::pair<bool, std::string> {
        EvolveSettings sm;
        sm.delta = 0.02;
        sm.threads = threads;
        double worst = 0.0;
        int failures = 0;
        for (double x0 : {0.5, 1.0, 1.5, 2.0})
            for (double u0 : {-1.0, 1.0}) {
                auto [p0, diag] =
                    initial_momentum(pend, vec1(x0), u0, {4, 8, 16}, sm, 128);
                // the raw momentum carries ~1e-3 table error, which the
                // unstable eigenvalue amplifies; polish it on the invariant
                // manifold before the long integration
                double pr = refine_stable_momentum(pend, x0, p0[0]);
                if (!diag.cauchy_ok || std::abs(pr - p0[0]) > 5e-2) {
                    ++failures;
                    continue;
                }
                Orbit orb = integrate_orbit(pend, {vec1(x0), vec1(pr), u0}, 40.0);
                PointSet pts = omega_limit(orb, 0.3, 0.1, 1);
                for (const State& s : pts)
                    worst = std::max(worst, detail::dist_to_origin(s));
                if (pts.size() != 1) ++failures;
            }
        // control: the non-minimizing spiral from (1, 0, 0)
        Orbit spiral = integrate_orbit(pend, {vec1(1.0), vec1(0.0), 0.0}, 40.0);
        PointSet sp = omega_limit(spiral, 0.3, 0.1, 1);
        double focus_dist = 1e300;
        for (const State& s : sp) {
            double dx = torus_dist(s.x, vec1(std::numbers::pi), 1);
            focus_dist = std::min(focus_dist,
                                  std::sqrt(dx * dx + dot(s.p, s.p) +
                                            (s.u - 2.0) * (s.u - 2.0)));
        }
        EvolveSettings sg;
        sg.delta = 1e-2;
        sg.threads = threads;
        Orbit spiral10 = integrate_orbit(pend, {vec1(1.0), vec1(0.0), 0.0}, 10.0);
        double defect =
            check_globally_minimizing(pend, spiral10, sg, {{0.0, 10.0}}, 256);
        std::ostringstream os;
        os << failures << " failures, worst omega dist " << worst
           << ", control focus dist " << focus_dist << ", control defect " << defect;
        return {failures == 0 && worst <= 5e-2 && focus_dist <= 5e-2 &&
                    defect > 0.1,
                os.str()};
    });

    run(10, "figure1-shooting", [&]() -> std::pair<bool, std::string> {
        SaddleInfo info = saddle_eigen(pend);
        const double lu = (-1.0 + std::sqrt(5.0)) / 2.0;
        const double ls = (-1.0 - std::sqrt(5.0)) / 2.0;
        double eig_err = std::max(std::abs(info.lambda_unstable - lu),
                                  std::abs(info.lambda_stable - ls));
        double slope_err =
            std::abs(info.v_stable[1] / info.v_stable[0] - ls);
        auto branches = saddle_stable_manifold(pend);
        auto p0s = shoot_p0(branches, vec1(1.0));
        // an orbit on the stable manifold reaches the fixed point; past it,
        // double precision cannot hold the unstable direction to t = 100, so
        // the pass condition is entering the 1e-2 ball during [0, 100]
        double worst = 0.0;
        for (double p : p0s) {
            Orbit orb = integrate_orbit(pend, {vec1(1.0), vec1(p), 0.0}, 100.0);
            double best = 1e300;
            for (const State& s : orb.states)
                best = std::min(best, detail::dist_to_origin(s));
            worst = std::max(worst, best);
        }
        std::ostringstream os;
        os << "eig err " << eig_err << ", slope err " << slope_err << ", "
           << p0s.size() << " p0 value(s), worst approach " << worst;
        return {eig_err <= 1e-3 && slope_err <= 1e-3 && !p0s.empty() &&
                    worst <= 1e-2,
                os.str()};
    });

    run(11, "action-anchor-identity", [&]() -> std::pair<bool, std::string> {
        EvolveSettings s;
        s.delta = 1e-2;
        s.threads = threads;
        ActionTable tab =
            implicit_action(pend, vec1(0.0), 0.0, 6.0, s, Direction::Backward, 256);
        GridFunction w = tab.layer_at(1.0);
        double worst = 0.0;
        double prev_t = 0.0;
        for (double t : {1.0, 2.0, 5.0}) {
            w = evolve(pend, w, t - prev_t, s);
            prev_t = t;
            worst = std::max(worst, sup_norm_diff(w, tab.layer_at(t + 1.0)));
        }
        std::ostringstream os;
        os << "sup defect " << worst;
        return {worst <= 8e-2, os.str()};
    });

    run(12, "energy-identity", [&]() -> std::pair<bool, std::string> {
        std::mt19937_64 rng(ctx.seed);
        std::uniform_real_distribution<double> ux(0.0, two_pi), up(-2.0, 2.0),
            uu(-2.0, 2.0);
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            State s0{vec1(ux(rng)), vec1(up(rng)), uu(rng)};
            Orbit orb = integrate_orbit(pend, s0, 5.0, 1e-3);
            worst = std::max(worst, energy_deviation(pend, orb));
        }
        std::ostringstream os;
        os << "max deviation " << worst;
        return {worst <= 1e-6, os.str()};
    });

    return results;
}

} // namespace ckam
