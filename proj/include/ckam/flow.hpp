#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "ckam/errors.hpp"
#include "ckam/grid.hpp"
#include "ckam/model.hpp"

namespace ckam {

/// Phase-space point of the contact flow.
struct State {
    Vec x{};
    Vec p{};
    double u = 0.0;
};

/// Time-sampled trajectory of the contact flow, uniform time grid.
struct Orbit {
    std::string model_name;
    double t0 = 0.0;
    double dt = 1e-3;
    std::vector<State> states;
    bool blown_up = false;

    double duration() const { return dt * double(states.size() - 1); }
    double time(std::size_t k) const { return t0 + dt * double(k); }

    /// State at time t by index lookup (t must lie on the sample grid up to
    /// rounding); clamps to the recorded range.
    const State& at_time(double t) const {
        std::size_t k = std::size_t(std::max(0.0, std::llround((t - t0) / dt) * 1.0));
        if (k >= states.size()) k = states.size() - 1;
        return states[k];
    }
};

/// Right-hand side of the contact Hamilton equations:
///   dx = H_p,  dp = -H_x - H_u p,  du = p.H_p - H.
inline State contact_vector_field(const ContactModel& m, const State& s) {
    Vec hp = m.grad_p(s.x, s.p, s.u);
    Vec hx = m.grad_x(s.x, s.p, s.u);
    double hu = m.grad_u(s.x, s.p, s.u);
    State d;
    d.x = hp;
    d.p = -1.0 * hx - hu * s.p;
    d.u = dot(s.p, hp) - m.H(s.x, s.p, s.u);
    return d;
}

namespace detail {

inline State axpy(const State& s, double a, const State& d) {
    return {s.x + a * d.x, s.p + a * d.p, s.u + a * d.u};
}

inline State rk4_step(const ContactModel& m, const State& s, double dt) {
    State k1 = contact_vector_field(m, s);
    State k2 = contact_vector_field(m, axpy(s, dt / 2, k1));
    State k3 = contact_vector_field(m, axpy(s, dt / 2, k2));
    State k4 = contact_vector_field(m, axpy(s, dt, k3));
    State out = s;
    out.x = s.x + (dt / 6) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    out.p = s.p + (dt / 6) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
    out.u = s.u + (dt / 6) * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
    return out;
}

} // namespace detail

/// Fixed-step classical 4th-order integration of the contact flow; x is
/// torus-reduced every step. Stops early with the blow-up flag when |p| or
/// |u| exceeds 1e6.
inline Orbit integrate_orbit(const ContactModel& m, State s0, double t_end,
                             double dt = 1e-3) {
    if (!(dt > 0.0 && dt <= 0.1)) throw Error("integrate_orbit: dt must be in (0, 0.1]");
    constexpr double blow_up_bound = 1e6;
    Orbit orb;
    orb.model_name = m.name;
    orb.dt = dt;
    const std::size_t steps = std::size_t(std::llround(t_end / dt));
    orb.states.reserve(steps + 1);
    s0.x = wrap(s0.x, m.dim);
    orb.states.push_back(s0);
    State s = s0;
    for (std::size_t k = 0; k < steps; ++k) {
        s = detail::rk4_step(m, s, dt);
        s.x = wrap(s.x, m.dim);
        orb.states.push_back(s);
        if (norm(s.p) > blow_up_bound || std::abs(s.u) > blow_up_bound) {
            orb.blown_up = true;
            break;
        }
    }
    return orb;
}

/// Defect of the energy-decay identity H(t) = H(0) exp(-int_0^t H_u ds),
/// with the exponent accumulated by the trapezoid rule. Along exact orbits
/// this vanishes; the zero level set E = {H = 0} is flow-invariant.
inline double energy_deviation(const ContactModel& m, const Orbit& orbit) {
    if (orbit.blown_up) throw Error("energy_deviation: orbit blew up");
    double dev = 0.0;
    double integral = 0.0;
    const State& s0 = orbit.states.front();
    const double h0 = m.H(s0.x, s0.p, s0.u);
    double prev_hu = m.grad_u(s0.x, s0.p, s0.u);
    for (std::size_t k = 0; k < orbit.states.size(); ++k) {
        const State& s = orbit.states[k];
        double hu = m.grad_u(s.x, s.p, s.u);
        if (k > 0) integral += 0.5 * orbit.dt * (prev_hu + hu);
        prev_hu = hu;
        double predicted = h0 * std::exp(-integral);
        dev = std::max(dev, std::abs(m.H(s.x, s.p, s.u) - predicted));
    }
    return dev;
}

/// Finite set of phase-space points, e.g. omega-limit cluster centers.
using PointSet = std::vector<State>;

/// Omega-limit estimate: collect states in the trailing window and cluster
/// greedily with radius cluster_eps (torus metric in x, Euclidean in p,u).
inline PointSet omega_limit(const Orbit& orbit, double window_fraction,
                            double cluster_eps, int dim = 1) {
    if (orbit.blown_up) throw Error("omega_limit: orbit blew up");
    if (!(window_fraction > 0.0 && window_fraction < 1.0))
        throw Error("omega_limit: window_fraction must be in (0,1)");
    const double window = window_fraction * orbit.duration();
    if (window < 10.0)
        throw WindowTooShort("omega_limit: window " + std::to_string(window) +
                             " < 10 time units");
    const std::size_t start =
        std::size_t((1.0 - window_fraction) * double(orbit.states.size() - 1));

    auto dist = [dim](const State& a, const State& b) {
        double dx = torus_dist(a.x, b.x, dim);
        double dp = norm(a.p - b.p);
        double du = a.u - b.u;
        return std::sqrt(dx * dx + dp * dp + du * du);
    };

    // Greedy clustering in time order; centers refined to cluster means.
    std::vector<State> centers;
    std::vector<State> sums;
    std::vector<std::size_t> counts;
    for (std::size_t k = start; k < orbit.states.size(); ++k) {
        const State& s = orbit.states[k];
        bool assigned = false;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (dist(s, centers[c]) <= cluster_eps) {
                // accumulate x relative to the center to respect the torus
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
    PointSet out;
    for (std::size_t c = 0; c < centers.size(); ++c) {
        State mean;
        mean.x = wrap((1.0 / double(counts[c])) * sums[c].x, dim);
        mean.p = (1.0 / double(counts[c])) * sums[c].p;
        mean.u = sums[c].u / double(counts[c]);
        out.push_back(mean);
    }
    return out;
}

/// Orbit CSV: columns (t, x[, y], p[, q], u, H).
inline void write_csv(const ContactModel& m, const Orbit& orbit, std::ostream& os) {
    if (m.dim == 1)
        os << "t,x,p,u,H\n";
    else
        os << "t,x,y,p,q,u,H\n";
    char buf[160];
    for (std::size_t k = 0; k < orbit.states.size(); ++k) {
        const State& s = orbit.states[k];
        double h = m.H(s.x, s.p, s.u);
        if (m.dim == 1)
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g\n",
                          orbit.time(k), s.x[0], s.p[0], s.u, h);
        else
            std::snprintf(buf, sizeof buf,
                          "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                          orbit.time(k), s.x[0], s.x[1], s.p[0], s.p[1], s.u, h);
        os << buf;
    }
}

} // namespace ckam
