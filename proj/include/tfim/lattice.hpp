#pragma once

#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace tfim {

/// The d-dimensional torus (Z/side)^d with even side length.
///
/// Sites are packed as mixed-radix integers in row-major order
/// (axis 0 most significant), so neighbour arithmetic is O(1).
/// Momenta use the same packing.
struct TorusSpec {
    int dim = 1;
    int side = 4;
    int n_sites = 4;

    TorusSpec() = default;
    TorusSpec(int d, int side_) : dim(d), side(side_) {
        if (d < 1) throw std::invalid_argument("torus dimension must be >= 1");
        if (side_ < 2 || side_ % 2 != 0)
            throw std::invalid_argument("torus side must be even and >= 2");
        long long n = 1;
        for (int j = 0; j < d; ++j) {
            n *= side_;
            if (n > (1 << 30)) throw std::invalid_argument("torus too large");
        }
        n_sites = static_cast<int>(n);
        if (side_ == 2)
            std::cerr << "tfim: warning: side-2 torus has identified +/- directions; "
                         "each bond is counted once and Laplacian row sums are nonzero\n";
    }

    int stride(int axis) const {
        int s = 1;
        for (int j = axis + 1; j < dim; ++j) s *= side;
        return s;
    }

    int coord(int site, int axis) const { return (site / stride(axis)) % side; }

    void check_site(int site) const {
        if (site < 0 || site >= n_sites) throw std::domain_error("invalid site index");
    }

    /// Neighbours of x: 2*dim sites, except on side-2 tori where the +1 and -1
    /// directions coincide and each of the dim neighbours appears once.
    std::vector<int> neighbors(int site) const {
        check_site(site);
        std::vector<int> out;
        out.reserve(2 * dim);
        for (int j = 0; j < dim; ++j) {
            int st = stride(j);
            int c = coord(site, j);
            int up = site + ((c + 1) % side - c) * st;
            int dn = site + ((c - 1 + side) % side - c) * st;
            out.push_back(up);
            if (dn != up) out.push_back(dn);
        }
        return out;
    }

    /// Every unordered nearest-neighbour pair exactly once.
    std::vector<std::pair<int, int>> edges() const {
        std::vector<std::pair<int, int>> out;
        out.reserve(static_cast<size_t>(n_sites) * dim);
        for (int x = 0; x < n_sites; ++x) {
            for (int j = 0; j < dim; ++j) {
                int c = coord(x, j);
                if (side == 2 && c != 0) continue;  // pair already listed from c=0
                int y = x + ((c + 1) % side - c) * stride(j);
                out.emplace_back(x, y);
            }
        }
        return out;
    }

    bool adjacent(int x, int y) const {
        check_site(x);
        check_site(y);
        if (x == y) return false;
        int diff_axis = -1;
        for (int j = 0; j < dim; ++j) {
            if (coord(x, j) != coord(y, j)) {
                if (diff_axis >= 0) return false;
                diff_axis = j;
            }
        }
        if (diff_axis < 0) return false;
        int dc = std::abs(coord(x, diff_axis) - coord(y, diff_axis));
        return dc == 1 || dc == side - 1;
    }
};

/// Graph Laplacian entry L(x,y) = d*1{x=y} - (1/2)*1{x~y}.
inline double laplacian_entry(const TorusSpec& spec, int x, int y) {
    spec.check_site(x);
    spec.check_site(y);
    if (x == y) return static_cast<double>(spec.dim);
    return spec.adjacent(x, y) ? -0.5 : 0.0;
}

/// <Lu, u> = (1/2) sum_{x~y} (u(x)-u(y))^2, summed over unordered pairs.
inline double laplacian_quadratic_form(const TorusSpec& spec, const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != spec.n_sites)
        throw std::domain_error("vector size does not match site count");
    double q = 0.0;
    for (auto [x, y] : spec.edges()) {
        double d = u[x] - u[y];
        q += d * d;
    }
    return 0.5 * q;
}

/// A point of the momentum grid (2*pi/side)*Z^d, components in (-pi, pi].
struct Momentum {
    std::vector<double> components;
};

/// Momentum with flat index m (same mixed-radix packing as sites).
inline Momentum momentum_at(const TorusSpec& spec, int m) {
    spec.check_site(m);
    Momentum k;
    k.components.resize(spec.dim);
    for (int j = 0; j < spec.dim; ++j) {
        int mj = spec.coord(m, j);
        int folded = (mj <= spec.side / 2) ? mj : mj - spec.side;  // into (-pi, pi]
        k.components[j] = 2.0 * std::numbers::pi * folded / spec.side;
    }
    return k;
}

inline std::vector<Momentum> momentum_grid(const TorusSpec& spec) {
    std::vector<Momentum> out;
    out.reserve(spec.n_sites);
    for (int m = 0; m < spec.n_sites; ++m) out.push_back(momentum_at(spec, m));
    return out;
}

/// Flat index of -k.
inline int negate_momentum_index(const TorusSpec& spec, int m) {
    spec.check_site(m);
    int out = 0;
    for (int j = 0; j < spec.dim; ++j) {
        int mj = spec.coord(m, j);
        out += ((spec.side - mj) % spec.side) * spec.stride(j);
    }
    return out;
}

/// Fourier transform of the Laplacian: Lhat(k) = sum_j (1 - cos k_j), in [0, 2d].
inline double lhat(const Momentum& k) {
    double s = 0.0;
    for (double kj : k.components) s += 1.0 - std::cos(kj);
    return s;
}

inline double lhat(const TorusSpec& spec, int m) { return lhat(momentum_at(spec, m)); }

}  // namespace tfim
