#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ckam/acceptance.hpp"
#include "ckam/action.hpp"
#include "ckam/expr.hpp"
#include "ckam/flow.hpp"
#include "ckam/io.hpp"
#include "ckam/minimizer.hpp"
#include "ckam/model.hpp"
#include "ckam/oracle.hpp"
#include "ckam/semigroup.hpp"
#include "ckam/weakkam.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct RunConfig {
    ckam::Config raw;
    std::string out_dir = "out";
    int threads = 1;
    unsigned seed = 2026;

    ckam::ContactModel model() const {
        std::map<std::string, double> params;
        std::map<std::string, std::string> exprs;
        for (const auto& [k, v] : raw.kv) {
            if (k.rfind("model.", 0) != 0) continue;
            std::string sub = k.substr(6);
            if (sub == "name") continue;
            if (sub == "potential" || sub == "coupling") exprs[sub] = v;
            else params[sub] = std::stod(v);
        }
        return ckam::make_model(raw.get("model.name", "pendulum"), params, exprs);
    }
    int grid_n() const { return raw.get_int("grid.n", 256); }
    ckam::EvolveSettings settings() const {
        ckam::EvolveSettings s;
        std::string backend = raw.get("settings.backend", "variational");
        if (backend == "variational") s.backend = ckam::Backend::Variational;
        else if (backend == "lax_friedrichs") s.backend = ckam::Backend::LaxFriedrichs;
        else throw ckam::ConfigError("unknown backend '" + backend + "'");
        s.delta = raw.get_real("settings.delta", 1e-3);
        s.v_max = raw.get_real("settings.v_max", 0.0);
        s.picard_iters = raw.get_int("settings.picard_iters", 1);
        s.node_only = raw.get_int("settings.node_only", 0) != 0;
        s.threads = threads;
        return s;
    }
    double tol() const { return raw.get_real("tol.tol", 1e-4); }
    double t_max() const { return raw.get_real("tol.t_max", 100.0); }
    double eps_mane() const { return raw.get_real("tol.eps_mane", 3e-2); }
    double cluster_eps() const { return raw.get_real("tol.cluster_eps", 0.3); }
};

struct Run {
    RunConfig cfg;
    ckam::Manifest manifest;
    fs::path dir;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    explicit Run(const RunConfig& c, const std::string& command) : cfg(c), dir(c.out_dir) {
        fs::create_directories(dir);
        manifest.set("command", command);
        manifest.set("seed", cfg.seed);
        manifest.set("threads", cfg.threads);
        manifest.echo_config(cfg.raw);
    }
    template <class Fn> void artifact(const std::string& name, Fn&& writer) {
        std::ofstream f(dir / name, std::ios::binary);
        writer(f);
        f.close();
        manifest.add_artifact(dir / name);
    }
    void finish() {
        double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        manifest.set("wall_seconds", secs);
        manifest.write(dir);
    }
};

ckam::GridFunction initial_data(const RunConfig& cfg, const ckam::ContactModel& m,
                                const std::string& phi_expr) {
    ckam::PeriodicGrid g{m.dim, cfg.grid_n()};
    ckam::GridFunction phi(g);
    if (!phi_expr.empty() && phi_expr != "0") {
        ckam::Expr e = ckam::Expr::parse(phi_expr);
        for (std::size_t i = 0; i < g.size(); ++i) phi[i] = e.eval(g.node(i));
    }
    return phi;
}

ordered_json condition_json(const ckam::ConditionReport& rep) {
    ordered_json j;
    j["h1"] = rep.h1_ok;
    j["h3"] = rep.h3_ok;
    j["a1"] = rep.a1_ok;
    j["a2"] = rep.a2_ok;
    j["b"] = rep.b_ok;
    j["all_ok"] = rep.all_ok();
    j["kappa0"] = rep.kappa0;
    j["u1"] = rep.u1;
    j["u2"] = rep.u2;
    return j;
}

void write_states_csv(const std::vector<ckam::State>& states, int dim,
                      std::ostream& os, const double* times = nullptr,
                      std::size_t stride = 1) {
    os << (dim == 1 ? "t,x,p,u\n" : "t,x,y,px,py,u\n");
    char buf[160];
    for (std::size_t k = 0; k < states.size(); k += stride) {
        const ckam::State& s = states[k];
        double t = times ? times[k] : double(k);
        if (dim == 1)
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n", t, s.x[0],
                          s.p[0], s.u);
        else
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                          t, s.x[0], s.x[1], s.p[0], s.p[1], s.u);
        os << buf;
    }
}

int cmd_check(const RunConfig& cfg) {
    Run run(cfg, "check");
    ckam::ContactModel m = cfg.model();
    double u_lo = cfg.raw.get_real("check.u_lo", -5.0);
    double u_hi = cfg.raw.get_real("check.u_hi", 5.0);
    ckam::ConditionReport rep = ckam::check_conditions(m, {u_lo, u_hi});
    ordered_json j = condition_json(rep);
    std::cout << "model " << m.name << "\n";
    for (const char* key : {"h1", "h3", "a1", "a2", "b"})
        std::cout << "  " << key << ": " << (j[key].get<bool>() ? "ok" : "FAILED")
                  << "\n";
    std::cout << "  kappa0 = " << rep.kappa0 << ", u1 = " << rep.u1
              << ", u2 = " << rep.u2 << "\n";
    run.artifact("conditions.json",
                 [&](std::ostream& os) { os << j.dump(2) << "\n"; });
    run.manifest.set("all_ok", rep.all_ok());
    run.finish();
    return rep.all_ok() ? 0 : 1;
}

int cmd_solve(const RunConfig& cfg, bool expect_diverge) {
    Run run(cfg, "solve");
    ckam::ContactModel m = cfg.model();
    ckam::EvolveSettings s = cfg.settings();
    ckam::GridFunction phi0 = initial_data(cfg, m, cfg.raw.get("solve.phi0", "0"));
    try {
        auto [um, trace] =
            ckam::solve_stationary(m, phi0, cfg.tol(), cfg.t_max(), s);
        if (trace.diverged) {
            run.manifest.set("diverged", true);
            run.artifact("trace.csv",
                         [&](std::ostream& os) { ckam::write_trace_csv(trace, os); });
            run.finish();
            std::cout << "solve: diverged\n";
            return expect_diverge ? 0 : 1;
        }
        run.manifest.set("diverged", false);
        run.manifest.set("converged", trace.converged);
        run.manifest.set("m_obs", trace.m_obs);
        run.manifest.set("residual", ckam::verify_stationary(m, um));
        auto [up, trace_f] = ckam::conjugate_forward_limit(
            m, um, cfg.tol(), cfg.raw.get_real("tol.t_max_forward", 25.0), s);
        run.artifact("u_minus.csv",
                     [&](std::ostream& os) { ckam::write_csv(um, os); });
        run.artifact("u_plus.csv",
                     [&](std::ostream& os) { ckam::write_csv(up, os); });
        run.artifact("trace.csv",
                     [&](std::ostream& os) { ckam::write_trace_csv(trace, os); });
        run.finish();
        std::cout << "solve: converged, residual "
                  << ckam::verify_stationary(m, um) << "\n";
        return 0;
    } catch (const ckam::DivergedError& e) {
        run.manifest.set("diverged", true);
        run.finish();
        std::cout << "solve: diverged (" << e.what() << ")\n";
        return expect_diverge ? 0 : 1;
    }
}

int cmd_evolve(const RunConfig& cfg, const std::string& phi_expr, double t,
               bool forward) {
    Run run(cfg, "evolve");
    ckam::ContactModel m = cfg.model();
    ckam::EvolveSettings s = cfg.settings();
    ckam::GridFunction phi = initial_data(cfg, m, phi_expr);
    int snap_every = cfg.raw.get_int("evolve.snapshot_every", 100);
    std::vector<std::pair<double, ckam::GridFunction>> snaps;
    ckam::GridFunction w = ckam::evolve(
        m, phi, t, s, forward ? ckam::Direction::Forward : ckam::Direction::Backward,
        [&](int, double tt, const ckam::GridFunction& wk) {
            snaps.emplace_back(tt, wk);
        },
        snap_every);
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%04zu.csv", i);
        run.artifact(name,
                     [&](std::ostream& os) { ckam::write_csv(snaps[i].second, os); });
    }
    run.artifact("final.csv", [&](std::ostream& os) { ckam::write_csv(w, os); });
    run.manifest.set("t", t);
    run.manifest.set("final_sup", w.max_abs());
    run.finish();
    std::cout << "evolve: t = " << t << ", sup |w| = " << w.max_abs() << "\n";
    return 0;
}

int cmd_orbit(const RunConfig& cfg, double x0, double p0, double u0, double t_end) {
    Run run(cfg, "orbit");
    ckam::ContactModel m = cfg.model();
    double dt = cfg.raw.get_real("orbit.dt", 1e-3);
    ckam::Orbit orb =
        ckam::integrate_orbit(m, {ckam::vec1(x0), ckam::vec1(p0), u0}, t_end, dt);
    run.artifact("orbit.csv",
                 [&](std::ostream& os) { ckam::write_csv(m, orb, os); });
    run.manifest.set("blown_up", orb.blown_up);
    if (!orb.blown_up) {
        double dev = ckam::energy_deviation(m, orb);
        run.manifest.set("energy_deviation", dev);
        std::cout << "orbit: energy deviation " << dev << "\n";
    } else {
        std::cout << "orbit: blew up before t = " << t_end << "\n";
    }
    run.finish();
    return 0;
}

int cmd_mane(const RunConfig& cfg) {
    Run run(cfg, "mane");
    ckam::ContactModel m = cfg.model();
    ckam::EvolveSettings s = cfg.settings();
    ckam::PeriodicGrid g{m.dim, cfg.grid_n()};
    auto [um, trace] =
        ckam::solve_stationary(m, ckam::GridFunction(g), cfg.tol(), cfg.t_max(), s);
    auto [up, trace_f] = ckam::conjugate_forward_limit(
        m, um, cfg.tol(), cfg.raw.get_real("tol.t_max_forward", 25.0), s);
    ckam::ManeSet ms = ckam::mane_set(m, um, up, cfg.eps_mane(), cfg.cluster_eps());
    ckam::GraphSet gs = ckam::graph_lambda(m, um);
    run.artifact("mane.csv", [&](std::ostream& os) {
        write_states_csv(ms.points, m.dim, os);
    });
    run.artifact("lambda.csv", [&](std::ostream& os) {
        write_states_csv(gs.points, m.dim, os);
    });
    run.manifest.set("clusters", ms.points.size());
    run.manifest.set("raw_points", ms.raw_points.size());
    run.finish();
    std::cout << "mane: " << ms.points.size() << " cluster(s) from "
              << ms.raw_points.size() << " node(s)\n";
    for (const ckam::State& c : ms.points)
        std::cout << "  (" << c.x[0] << ", " << c.p[0] << ", " << c.u << ")\n";
    return 0;
}

int cmd_action(const RunConfig& cfg, double x0, double u0, double t_end) {
    Run run(cfg, "action");
    ckam::ContactModel m = cfg.model();
    ckam::EvolveSettings s = cfg.settings();
    ckam::ActionTable tab =
        ckam::implicit_action(m, ckam::vec1(x0), u0, t_end, s,
                              ckam::Direction::Backward, cfg.grid_n());
    run.artifact("action.csv", [&](std::ostream& os) { ckam::write_csv(tab, os); });
    run.artifact("argmin.bin",
                 [&](std::ostream& os) { ckam::write_argmin_sidecar(tab, os); });
    if (t_end >= 4 * s.delta) {
        double defect = ckam::check_markov(m, tab, t_end / 2.0, s);
        run.manifest.set("markov_defect", defect);
        std::cout << "action: markov defect at t/2 = " << defect << "\n";
    }
    run.finish();
    return 0;
}

int cmd_minimize(const RunConfig& cfg, double x0, double u0,
                 std::vector<double> horizons) {
    Run run(cfg, "minimize");
    ckam::ContactModel m = cfg.model();
    ckam::EvolveSettings s = cfg.settings();
    if (horizons.empty()) horizons = {4.0, 8.0, 16.0};
    auto [p0, diag] =
        ckam::initial_momentum(m, ckam::vec1(x0), u0, horizons, s, cfg.grid_n());
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        ckam::ActionTable tab =
            ckam::implicit_action(m, ckam::vec1(x0), u0, horizons[i], s,
                                  ckam::Direction::Backward, cfg.grid_n());
        ckam::DiscreteCurve c = ckam::backtrack_minimizer(
            m, tab, diag.terminal_points[i], tab.t_end());
        char name[64];
        std::snprintf(name, sizeof name, "curve_%g.csv", horizons[i]);
        run.artifact(name, [&](std::ostream& os) { ckam::write_csv(c, os, m.dim); });
    }
    run.manifest.set("p0", p0[0]);
    run.manifest.set("cauchy_ok", diag.cauchy_ok);
    run.finish();
    std::cout << "minimize: p0 = " << p0[0]
              << (diag.cauchy_ok ? "" : "  (WARNING: horizon sequence not Cauchy)")
              << "\n";
    return 0;
}

int cmd_manifold(const RunConfig& cfg, double x0) {
    Run run(cfg, "manifold");
    ckam::ContactModel m = cfg.model();
    auto branches = ckam::saddle_stable_manifold(m);
    run.artifact("branches.csv", [&](std::ostream& os) {
        os << "branch,x,p\n";
        char buf[96];
        for (const ckam::ManifoldCurve* br : {&branches.first, &branches.second})
            for (const auto& p : br->samples) {
                std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g\n", br->branch, p[0],
                              p[1]);
                os << buf;
            }
    });
    std::vector<double> ps = ckam::shoot_p0(branches, ckam::vec1(x0));
    run.manifest.set("p0_candidates", ps);
    std::cout << "manifold: p0 candidates at x = " << x0 << ":";
    for (double p : ps) std::cout << " " << p;
    std::cout << "\n";

    ckam::SvgPlot plot;
    plot.x_min = -7.0;
    plot.x_max = 7.0;
    plot.y_min = -8.0;
    plot.y_max = 8.0;
    plot.axes("x", "p");
    for (const ckam::ManifoldCurve* br : {&branches.first, &branches.second})
        plot.polyline(br->samples, "red", 2.5);
    double xline = ckam::torus_delta_coord(x0, 0.0);
    plot.vline(xline, "blue");
    for (double p : ps)
        if (p >= plot.y_min && p <= plot.y_max) plot.marker(xline, p, "blue");
    run.artifact("figure1.svg", [&](std::ostream& os) {
        // SvgPlot writes via path; mirror its output into the stream
        ckam::SvgPlot& pl = plot;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pl.width
           << "\" height=\"" << pl.height << "\" viewBox=\"0 0 " << pl.width << " "
           << pl.height << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
           << pl.body.str() << "</svg>\n";
    });
    run.finish();
    return 0;
}

int cmd_verify(const RunConfig& cfg) {
    Run run(cfg, "verify");
    std::vector<ckam::CriterionResult> results =
        ckam::run_acceptance(cfg.threads, &std::cout);
    ordered_json rep = ordered_json::array();
    bool all = true;
    for (const auto& r : results) {
        ordered_json j;
        j["id"] = r.id;
        j["name"] = r.name;
        j["pass"] = r.pass;
        j["detail"] = r.detail;
        j["seconds"] = r.seconds;
        rep.push_back(j);
        all = all && r.pass;
    }
    run.artifact("report.json",
                 [&](std::ostream& os) { os << rep.dump(2) << "\n"; });
    run.manifest.set("all_pass", all);
    run.finish();
    return all ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"weak KAM toolkit for contact Hamiltonian systems on flat tori"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int threads = 1;
    unsigned seed = 2026;
    app.add_option("--config", config_path, "run configuration file (INI)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker thread count");
    app.add_option("--seed", seed, "seed for sampled property checks");

    app.fallthrough(); // parent flags may follow the subcommand
    auto* c_check = app.add_subcommand("check", "verify structural conditions");
    auto* c_solve = app.add_subcommand("solve", "stationary backward solution");
    bool expect_diverge = false;
    c_solve->add_flag("--expect-diverge", expect_diverge,
                      "treat divergence as the expected outcome");
    auto* c_evolve = app.add_subcommand("evolve", "finite-time evolution");
    std::string phi_expr = "0";
    double t_evolve = 1.0;
    bool forward = false;
    c_evolve->add_option("--phi", phi_expr, "initial data expression in x[,y]");
    c_evolve->add_option("--t", t_evolve, "evolution time");
    c_evolve->add_flag("--forward", forward, "use the forward operator");
    auto* c_orbit = app.add_subcommand("orbit", "integrate one contact orbit");
    double x0 = 1.0, p0 = 0.0, u0 = 0.0, t_end = 10.0;
    c_orbit->add_option("--x0", x0, "initial position");
    c_orbit->add_option("--p0", p0, "initial momentum");
    c_orbit->add_option("--u0", u0, "initial value");
    c_orbit->add_option("--t", t_end, "integration time");
    auto* c_mane = app.add_subcommand("mane", "projected contact set");
    auto* c_action = app.add_subcommand("action", "implicit action table");
    double ax0 = 0.0, au0 = 0.0, at_end = 2.0;
    c_action->add_option("--x0", ax0, "source position");
    c_action->add_option("--u0", au0, "source value");
    c_action->add_option("--t", at_end, "table horizon");
    auto* c_min = app.add_subcommand("minimize", "horizon-limit minimizers");
    double mx0 = 1.0, mu0 = 0.0;
    std::vector<double> horizons;
    c_min->add_option("--x0", mx0, "start position");
    c_min->add_option("--u0", mu0, "start value");
    c_min->add_option("--horizons", horizons, "increasing horizon list");
    auto* c_mani = app.add_subcommand("manifold", "stable branches of the saddle");
    double sx0 = 1.0;
    c_mani->add_option("--x0", sx0, "shooting position");
    auto* c_verify = app.add_subcommand("verify", "run the acceptance suite");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg.raw = ckam::load_config(config_path);
        cfg.threads = threads;
        cfg.seed = seed;
        cfg.out_dir = !out_dir.empty() ? out_dir : cfg.raw.get("output.dir", "out");

        if (c_check->parsed()) return cmd_check(cfg);
        if (c_solve->parsed()) return cmd_solve(cfg, expect_diverge);
        if (c_evolve->parsed()) return cmd_evolve(cfg, phi_expr, t_evolve, forward);
        if (c_orbit->parsed()) return cmd_orbit(cfg, x0, p0, u0, t_end);
        if (c_mane->parsed()) return cmd_mane(cfg);
        if (c_action->parsed()) return cmd_action(cfg, ax0, au0, at_end);
        if (c_min->parsed()) return cmd_minimize(cfg, mx0, mu0, horizons);
        if (c_mani->parsed()) return cmd_manifold(cfg, sx0);
        if (c_verify->parsed()) return cmd_verify(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
