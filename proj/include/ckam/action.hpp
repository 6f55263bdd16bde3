#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "ckam/errors.hpp"
#include "ckam/grid.hpp"
#include "ckam/model.hpp"
#include "ckam/semigroup.hpp"

namespace ckam {

/// Space-time table of the implicit action from a point source (x0, u0).
/// layers[k] holds h(., (k+1) delta); argmins[k] (k >= 1) records, per target
/// node, the predecessor chosen while computing layers[k] from layers[k-1].
struct ActionTable {
    Vec source_x{};
    double source_u = 0.0;
    Direction direction = Direction::Backward;
    double delta = 1e-3;
    int steps = 0;
    PeriodicGrid grid;
    std::vector<GridFunction> layers;
    std::vector<std::vector<ArgminRecord>> argmins;

    double t_end() const { return delta * steps; }
    double time_of(int k) const { return delta * (k + 1); }

    /// Layer index nearest to time t (t in [delta, t_end]).
    int layer_index(double t) const {
        int k = int(std::llround(t / delta)) - 1;
        if (k < 0) k = 0;
        if (k >= steps) k = steps - 1;
        return k;
    }
    const GridFunction& layer_at(double t) const { return layers[layer_index(t)]; }
};

/// Builds the action table h_{x0,u0}(x, t) for t on the delta grid up to
/// t_end. The first layer is a single straight segment with u frozen at u0;
/// every later layer is one semigroup step with argmin recording, so the
/// anchor identity h(., t + s) = T_s^- h(., t) holds by construction on the
/// discrete recursion.
inline ActionTable implicit_action(const ContactModel& model, Vec x0, double u0,
                                   double t_end, const EvolveSettings& settings,
                                   Direction direction = Direction::Backward,
                                   int grid_n = 0) {
    const double delta = settings.delta;
    if (t_end < 2 * delta - 1e-12)
        throw Error("implicit_action: t_end must be >= 2*delta");
    ActionTable tab;
    tab.source_x = wrap(x0, model.dim);
    tab.source_u = u0;
    tab.direction = direction;
    tab.delta = delta;
    tab.steps = int(std::llround(t_end / delta));
    tab.grid.dim = model.dim;
    tab.grid.n = grid_n > 0 ? grid_n : 256;
    tab.layers.reserve(tab.steps);
    tab.argmins.resize(tab.steps);

    // point-source first layer: one straight segment, u frozen at u0
    GridFunction first(tab.grid);
    for (std::size_t i = 0; i < tab.grid.size(); ++i) {
        Vec x = tab.grid.node(i);
        if (direction == Direction::Backward) {
            Vec v = (1.0 / delta) * torus_delta(x, tab.source_x, model.dim);
            first[i] = u0 + delta * model.lagrangian(tab.source_x, v, u0);
        } else {
            Vec v = (1.0 / delta) * torus_delta(tab.source_x, x, model.dim);
            first[i] = u0 - delta * model.lagrangian(x, v, u0);
        }
    }
    tab.layers.push_back(first);

    for (int k = 1; k < tab.steps; ++k) {
        std::vector<ArgminRecord> rec;
        GridFunction next =
            direction == Direction::Backward
                ? step_backward(model, tab.layers.back(), settings, &rec)
                : step_forward(model, tab.layers.back(), settings, &rec);
        tab.layers.push_back(std::move(next));
        tab.argmins[k] = std::move(rec);
    }
    return tab;
}

/// Reconstructs T_t^- phi as the nodewise min over stride-reduced source
/// nodes z of h_{z, phi(z)}(x, t).
inline GridFunction semigroup_from_action(const ContactModel& model,
                                          const GridFunction& phi, double t,
                                          const EvolveSettings& settings,
                                          int stride = 4) {
    const PeriodicGrid& g = phi.grid;
    if (stride * g.spacing() > settings.velocity_bound(model) * t + 1e-12)
        throw StrideTooCoarse("stride*spacing = " +
                              std::to_string(stride * g.spacing()) +
                              " exceeds v_max*t");
    GridFunction out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = 1e300;
    for (std::size_t zi = 0; zi < g.size(); ++zi) {
        if (g.dim == 1) {
            if (g.ix_of(zi) % stride != 0) continue;
        } else if (g.ix_of(zi) % stride != 0 || g.iy_of(zi) % stride != 0) {
            continue;
        }
        ActionTable tab = implicit_action(model, g.node(zi), phi[zi], t, settings,
                                          Direction::Backward, g.n);
        const GridFunction& last = tab.layer_at(t);
        for (std::size_t i = 0; i < g.size(); ++i)
            out[i] = std::min(out[i], last[i]);
    }
    return out;
}

/// Two-step consistency of the action: sup over x of
/// | h(x, t_end) - min_z h_{z, h(z, t_split)}(x, t_end - t_split) |
/// with stride-reduced intermediate sources z.
inline double check_markov(const ContactModel& model, const ActionTable& table,
                           double t_split, const EvolveSettings& settings,
                           int stride = 4) {
    const double delta = table.delta;
    if (t_split < 2 * delta - 1e-12 || t_split > table.t_end() - 2 * delta + 1e-12)
        throw Error("check_markov: t_split out of range");
    const GridFunction& mid = table.layer_at(t_split);
    GridFunction composed = semigroup_from_action(
        model, mid, table.t_end() - t_split, settings, stride);
    return sup_norm_diff(composed, table.layer_at(table.t_end()));
}

/// Layer stream (t, x[, y], h) for space-time plots.
inline void write_csv(const ActionTable& table, std::ostream& os) {
    os << (table.grid.dim == 1 ? "t,x,h\n" : "t,x,y,h\n");
    char buf[128];
    for (int k = 0; k < table.steps; ++k) {
        const GridFunction& layer = table.layers[k];
        for (std::size_t i = 0; i < table.grid.size(); ++i) {
            Vec x = table.grid.node(i);
            if (table.grid.dim == 1)
                std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n",
                              table.time_of(k), x[0], layer[i]);
            else
                std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n",
                              table.time_of(k), x[0], x[1], layer[i]);
            os << buf;
        }
    }
}

/// Binary sidecar of the backtracking pointers: little-endian int32 triples
/// (layer, node, predecessor node index).
inline void write_argmin_sidecar(const ActionTable& table, std::ostream& os) {
    auto put32 = [&os](std::int32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
        os.write(reinterpret_cast<const char*>(b), 4);
    };
    for (int k = 1; k < table.steps; ++k)
        for (std::size_t i = 0; i < table.argmins[k].size(); ++i) {
            put32(k);
            put32(std::int32_t(i));
            put32(std::int32_t(table.grid.nearest_node(table.argmins[k][i].argmin)));
        }
}

} // namespace ckam
