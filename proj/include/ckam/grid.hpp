#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <vector>

#include "ckam/errors.hpp"

namespace ckam {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Point or covector on the flat torus; for dim == 1 the second slot is 0.
using Vec = std::array<double, 2>;

inline Vec vec1(double x) { return {x, 0.0}; }

inline Vec operator+(Vec a, Vec b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec operator-(Vec a, Vec b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec operator*(double s, Vec a) { return {s * a[0], s * a[1]}; }

inline double dot(Vec a, Vec b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(Vec a) { return std::sqrt(dot(a, a)); }

/// Reduce a coordinate to the fundamental domain [0, 2pi).
inline double wrap_coord(double x) {
    double y = std::fmod(x, two_pi);
    if (y < 0.0) y += two_pi;
    return y;
}

inline Vec wrap(Vec x, int dim) {
    Vec y = {wrap_coord(x[0]), dim > 1 ? wrap_coord(x[1]) : 0.0};
    return y;
}

/// Minimal representative of a - b per axis, in [-pi, pi).
inline double torus_delta_coord(double a, double b) {
    double d = std::fmod(a - b, two_pi);
    if (d < -std::numbers::pi) d += two_pi;
    if (d >= std::numbers::pi) d -= two_pi;
    return d;
}

inline Vec torus_delta(Vec a, Vec b, int dim) {
    return {torus_delta_coord(a[0], b[0]),
            dim > 1 ? torus_delta_coord(a[1], b[1]) : 0.0};
}

inline double torus_dist(Vec a, Vec b, int dim) {
    return norm(torus_delta(a, b, dim));
}

/// Uniform periodic grid on T^1 or T^2 with spacing 2pi/n per axis.
struct PeriodicGrid {
    int dim = 1;
    int n = 8;

    PeriodicGrid() = default;
    PeriodicGrid(int dim_, int n_) : dim(dim_), n(n_) {
        if (dim < 1 || dim > 2) throw Error("PeriodicGrid: dim must be 1 or 2");
        if (n < 8) throw Error("PeriodicGrid: n must be >= 8");
    }

    double spacing() const { return two_pi / n; }
    std::size_t size() const { return dim == 1 ? std::size_t(n) : std::size_t(n) * n; }

    /// Node index <-> integer coordinates (ix fastest).
    std::size_t index(int ix, int iy = 0) const {
        int jx = ((ix % n) + n) % n;
        int jy = ((iy % n) + n) % n;
        return dim == 1 ? std::size_t(jx) : std::size_t(jx) + std::size_t(n) * jy;
    }
    int ix_of(std::size_t idx) const { return int(idx % std::size_t(n)); }
    int iy_of(std::size_t idx) const { return dim == 1 ? 0 : int(idx / std::size_t(n)); }

    Vec node(std::size_t idx) const {
        return {ix_of(idx) * spacing(), dim == 1 ? 0.0 : iy_of(idx) * spacing()};
    }

    /// Nearest node to an arbitrary torus point.
    std::size_t nearest_node(Vec x) const {
        int ix = int(std::lround(wrap_coord(x[0]) / spacing())) % n;
        int iy = dim == 1 ? 0 : int(std::lround(wrap_coord(x[1]) / spacing())) % n;
        return index(ix, iy);
    }

    bool operator==(const PeriodicGrid& o) const { return dim == o.dim && n == o.n; }
};

/// Real-valued function sampled on a PeriodicGrid.
struct GridFunction {
    PeriodicGrid grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(PeriodicGrid g, double fill = 0.0)
        : grid(g), values(g.size(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    template <class F>
    static GridFunction sample(PeriodicGrid g, F&& f) {
        GridFunction out(g);
        for (std::size_t i = 0; i < out.values.size(); ++i)
            out.values[i] = f(g.node(i));
        return out;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
    double min_value() const {
        double m = values.empty() ? 0.0 : values[0];
        for (double v : values) m = std::min(m, v);
        return m;
    }
    double max_value() const {
        double m = values.empty() ? 0.0 : values[0];
        for (double v : values) m = std::max(m, v);
        return m;
    }
};

/// Periodic multilinear interpolation; exact at grid nodes.
inline double interpolate(const GridFunction& f, Vec x) {
    const PeriodicGrid& g = f.grid;
    const double h = g.spacing();
    const double sx = wrap_coord(x[0]) / h;
    const int ix = int(std::floor(sx));
    const double tx = sx - ix;
    if (g.dim == 1) {
        const double a = f[g.index(ix)];
        const double b = f[g.index(ix + 1)];
        return a + tx * (b - a);
    }
    const double sy = wrap_coord(x[1]) / h;
    const int iy = int(std::floor(sy));
    const double ty = sy - iy;
    const double f00 = f[g.index(ix, iy)];
    const double f10 = f[g.index(ix + 1, iy)];
    const double f01 = f[g.index(ix, iy + 1)];
    const double f11 = f[g.index(ix + 1, iy + 1)];
    return (1 - tx) * (1 - ty) * f00 + tx * (1 - ty) * f10 +
           (1 - tx) * ty * f01 + tx * ty * f11;
}

/// Central-difference nodal gradient with periodic wraparound.
inline Vec gradient_at_node(const GridFunction& f, std::size_t idx) {
    const PeriodicGrid& g = f.grid;
    const double h = g.spacing();
    const int ix = g.ix_of(idx), iy = g.iy_of(idx);
    Vec grad = {(f[g.index(ix + 1, iy)] - f[g.index(ix - 1, iy)]) / (2 * h), 0.0};
    if (g.dim > 1)
        grad[1] = (f[g.index(ix, iy + 1)] - f[g.index(ix, iy - 1)]) / (2 * h);
    return grad;
}

/// Gradient at an arbitrary point: central difference at the nearest node.
inline Vec numeric_gradient(const GridFunction& f, Vec x) {
    return gradient_at_node(f, f.grid.nearest_node(x));
}

/// One-sided slopes along one axis at a node: {backward, forward}.
inline std::array<double, 2> one_sided_slopes(const GridFunction& f,
                                              std::size_t idx, int axis) {
    const PeriodicGrid& g = f.grid;
    const double h = g.spacing();
    const int ix = g.ix_of(idx), iy = g.iy_of(idx);
    const double c = f[idx];
    if (axis == 0)
        return {(c - f[g.index(ix - 1, iy)]) / h, (f[g.index(ix + 1, iy)] - c) / h};
    return {(c - f[g.index(ix, iy - 1)]) / h, (f[g.index(ix, iy + 1)] - c) / h};
}

/// A node is flagged nonsmooth when one-sided slopes differ by more than
/// slope_gap along any axis (default 10 * spacing).
inline bool is_smooth_node(const GridFunction& f, std::size_t idx,
                           double slope_gap = -1.0) {
    if (slope_gap < 0.0) slope_gap = 10.0 * f.grid.spacing();
    for (int axis = 0; axis < f.grid.dim; ++axis) {
        auto s = one_sided_slopes(f, idx, axis);
        if (std::abs(s[1] - s[0]) > slope_gap) return false;
    }
    return true;
}

inline double sup_norm_diff(const GridFunction& f, const GridFunction& g) {
    if (!(f.grid == g.grid)) throw GridMismatch();
    double m = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        m = std::max(m, std::abs(f.values[i] - g.values[i]));
    return m;
}

/// CSV serialization: header with n and dim, one row per node.
inline void write_csv(const GridFunction& f, std::ostream& os) {
    os << "# n=" << f.grid.n << " dim=" << f.grid.dim << "\n";
    if (f.grid.dim == 1)
        os << "x,value\n";
    else
        os << "x,y,value\n";
    char buf[96];
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        Vec p = f.grid.node(i);
        if (f.grid.dim == 1)
            std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", p[0], f.values[i]);
        else
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", p[0], p[1],
                          f.values[i]);
        os << buf;
    }
}

} // namespace ckam
