#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "tfim/lattice.hpp"

namespace tfim {

/// One +-1 trajectory per site on the time circle [0, beta): an initial spin
/// exponent xi and a sorted, even-size list of flip times.
struct WorldlineConfig {
    struct Site {
        std::uint8_t xi = 0;                // spin at t=0 is (-1)^xi
        std::vector<double> flips;          // strictly increasing, in [0, beta)
    };
    double beta = 1.0;
    std::vector<Site> sites;

    WorldlineConfig() = default;
    WorldlineConfig(int n_sites, double beta_) : beta(beta_), sites(n_sites) {
        if (!(beta_ > 0)) throw std::invalid_argument("beta must be positive");
    }

    int n_sites() const { return static_cast<int>(sites.size()); }

    void check_valid() const {
        if (!(beta > 0)) throw std::domain_error("beta must be positive");
        for (const auto& s : sites) {
            if (s.flips.size() % 2 != 0)
                throw std::domain_error("flip list must have even length");
            for (size_t i = 0; i < s.flips.size(); ++i) {
                double t = s.flips[i];
                if (!(t >= 0.0 && t < beta)) throw std::domain_error("flip time outside [0, beta)");
                if (i > 0 && !(s.flips[i - 1] < t))
                    throw std::domain_error("flip times must be strictly increasing");
            }
        }
    }
};

/// Number of flips of site x in [0, t].
inline int flips_upto(const WorldlineConfig& cfg, int x, double t) {
    const auto& f = cfg.sites[x].flips;
    return static_cast<int>(std::upper_bound(f.begin(), f.end(), t) - f.begin());
}

/// sigma(x, t) = (-1)^{xi_x + |D_x cap [0,t]|}; right-continuous in t.
inline int spin_at(const WorldlineConfig& cfg, int x, double t) {
    if (!(t >= 0.0 && t < cfg.beta)) throw std::domain_error("time outside [0, beta)");
    int parity = (cfg.sites[x].xi + flips_upto(cfg, x, t)) & 1;
    return 1 - 2 * parity;
}

inline long total_flip_count(const WorldlineConfig& cfg) {
    long n = 0;
    for (const auto& s : cfg.sites) n += static_cast<long>(s.flips.size());
    return n;
}

/// int_a^b sigma(x,t) sigma(y,t) dt for 0 <= a <= b <= beta, by merging the
/// two flip lists restricted to the window.
inline double overlap_window(const WorldlineConfig& cfg, int x, int y, double a, double b) {
    const auto& fx = cfg.sites[x].flips;
    const auto& fy = cfg.sites[y].flips;
    auto ix = std::upper_bound(fx.begin(), fx.end(), a);
    auto iy = std::upper_bound(fy.begin(), fy.end(), a);
    int s = spin_at(cfg, x, a) * spin_at(cfg, y, a);
    double t = a, acc = 0.0;
    while (true) {
        double nx = (ix != fx.end()) ? *ix : b;
        double ny = (iy != fy.end()) ? *iy : b;
        double nt = std::min({nx, ny, b});
        acc += s * (nt - t);
        if (nt >= b) break;
        if (nx == nt) { ++ix; s = -s; }
        if (ny == nt) { ++iy; s = -s; }  // coincident flips cancel
        t = nt;
    }
    return acc;
}

/// int_0^beta sigma(x,t) sigma(y,t) dt; symmetric in (x,y), in [-beta, beta].
inline double overlap_integral(const WorldlineConfig& cfg, int x, int y) {
    return overlap_window(cfg, x, y, 0.0, cfg.beta);
}

/// lambda * sum over unordered edges of the overlap integral: the log-weight
/// of the configuration relative to the free measure.
inline double interaction_action(const WorldlineConfig& cfg, const TorusSpec& spec, double lambda) {
    if (cfg.n_sites() != spec.n_sites) throw std::domain_error("site count mismatch");
    double s = 0.0;
    for (auto [x, y] : spec.edges()) s += overlap_integral(cfg, x, y);
    return lambda * s;
}

/// Per-site time integrals I_x(l_j) = int_0^beta sigma(x,t) e^{i l_j t} dt for
/// j = 0..jmax, l_j = 2*pi*j/beta.  Row-major [site][j].
///
/// For j >= 1 the integral telescopes over flips: since the trajectory is
/// periodic, I_x(l) = (2/(i l)) sum_i (-1)^{xi+i+1} e^{i l t_i} with i the
/// 1-based flip index.
inline std::vector<std::complex<double>> time_fourier_rows(const WorldlineConfig& cfg, int jmax) {
    const double beta = cfg.beta;
    const double c = 2.0 * std::numbers::pi / beta;
    const int n = cfg.n_sites();
    std::vector<std::complex<double>> out(static_cast<size_t>(n) * (jmax + 1));
    for (int x = 0; x < n; ++x) {
        const auto& f = cfg.sites[x].flips;
        int s0 = 1 - 2 * (cfg.sites[x].xi & 1);
        // j = 0: signed interval lengths
        double i0 = 0.0, prev = 0.0;
        int s = s0;
        for (double t : f) {
            i0 += s * (t - prev);
            prev = t;
            s = -s;
        }
        i0 += s * (beta - prev);
        out[static_cast<size_t>(x) * (jmax + 1)] = i0;
        if (jmax == 0) continue;
        // j >= 1 via per-flip phase powers
        std::vector<std::complex<double>> base(f.size()), pw(f.size(), 1.0);
        for (size_t i = 0; i < f.size(); ++i) base[i] = std::polar(1.0, c * f[i]);
        for (int j = 1; j <= jmax; ++j) {
            std::complex<double> acc = 0.0;
            double sign = s0;  // (s_{i-1} - s_i)/2 alternates starting at s0
            for (size_t i = 0; i < f.size(); ++i) {
                pw[i] *= base[i];
                acc += sign * pw[i];
                sign = -sign;
            }
            double l = c * j;
            out[static_cast<size_t>(x) * (jmax + 1) + j] = 2.0 * acc / std::complex<double>(0.0, l);
        }
    }
    return out;
}

/// sigma_hat(k, l) = sum_x e^{i k.x} int_0^beta sigma(x,t) e^{i l t} dt,
/// with k the momentum of flat index m and l = 2*pi*j/beta (j may be negative).
inline std::complex<double> fourier_transform_sigma(const WorldlineConfig& cfg,
                                                    const TorusSpec& spec, int m, int j) {
    if (cfg.n_sites() != spec.n_sites) throw std::domain_error("site count mismatch");
    bool conj = j < 0;
    if (conj) {  // sigma real: sigma_hat(-k,-l) = conj(sigma_hat(k,l))
        j = -j;
        m = negate_momentum_index(spec, m);
    }
    auto rows = time_fourier_rows(cfg, j);
    Momentum k = momentum_at(spec, m);
    std::complex<double> acc = 0.0;
    for (int x = 0; x < spec.n_sites; ++x) {
        double phase = 0.0;
        for (int a = 0; a < spec.dim; ++a) phase += k.components[a] * spec.coord(x, a);
        acc += std::polar(1.0, phase) * rows[static_cast<size_t>(x) * (j + 1) + j];
    }
    return conj ? std::conj(acc) : acc;
}

// ---- JSON checkpoint schema: {beta, sites:[{xi, flips:[...]}, ...]} ----

inline nlohmann::json to_json(const WorldlineConfig& cfg) {
    nlohmann::json sites = nlohmann::json::array();
    for (const auto& s : cfg.sites)
        sites.push_back({{"xi", static_cast<int>(s.xi)}, {"flips", s.flips}});
    return {{"beta", cfg.beta}, {"sites", std::move(sites)}};
}

inline WorldlineConfig worldline_from_json(const nlohmann::json& j) {
    WorldlineConfig cfg;
    cfg.beta = j.at("beta").get<double>();
    for (const auto& js : j.at("sites")) {
        WorldlineConfig::Site s;
        s.xi = static_cast<std::uint8_t>(js.at("xi").get<int>() & 1);
        s.flips = js.at("flips").get<std::vector<double>>();
        cfg.sites.push_back(std::move(s));
    }
    cfg.check_valid();
    return cfg;
}

}  // namespace tfim
