#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfim/worldline.hpp"

namespace tfim {

// mt19937_64 state round-trips through its stream representation; stored as
// a hex string in checkpoints.
inline std::string rng_to_hex(const std::mt19937_64& rng) {
    std::ostringstream os;
    os << rng;
    std::string raw = os.str();
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(raw.size() * 2);
    for (unsigned char c : raw) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 15]);
    }
    return out;
}

inline std::mt19937_64 rng_from_hex(const std::string& hex) {
    if (hex.size() % 2 != 0) throw std::invalid_argument("bad rng hex string");
    auto nib = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        throw std::invalid_argument("bad rng hex digit");
    };
    std::string raw;
    raw.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2)
        raw.push_back(static_cast<char>(nib(hex[i]) * 16 + nib(hex[i + 1])));
    std::istringstream is(raw);
    std::mt19937_64 rng;
    is >> rng;
    if (is.fail()) throw std::invalid_argument("bad rng state string");
    return rng;
}

enum class MoveKind : int { line_flip = 0, pair_insert = 1, pair_delete = 2, shift = 3 };

struct SamplerParams {
    double lambda = 1.0;
    double delta = 1.0;
    double beta = 1.0;
    // move mix; insert and delete probabilities must match for the pair
    // acceptance ratios to satisfy detailed balance
    std::array<double, 4> move_mix{0.1, 0.4, 0.4, 0.1};
    std::uint64_t seed = 1;
    long sweeps = 10000;
    long burn_in = 1000;
    long thinning = 10;

    void validate() const {
        if (!(lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
        if (!(delta > 0)) throw std::invalid_argument("delta must be positive");
        if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
        if (sweeps <= 0) throw std::invalid_argument("sweeps must be positive");
        if (burn_in < 0) throw std::invalid_argument("burn-in must be >= 0");
        if (thinning <= 0) throw std::invalid_argument("thinning must be positive");
        double sum = 0;
        for (double p : move_mix) {
            if (p < 0) throw std::invalid_argument("move probabilities must be >= 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("move probabilities must sum to 1");
        if (std::abs(move_mix[1] - move_mix[2]) > 1e-12)
            throw std::invalid_argument("insert and delete probabilities must be equal");
    }
};

/// Draw of the free measure E: xi uniform bits and per-site rate-delta Poisson
/// flip sets on [0, beta) conditioned even (by resampling until even).
inline WorldlineConfig init_free(const TorusSpec& spec, double beta, double delta,
                                 std::mt19937_64& rng) {
    if (!(delta > 0)) throw std::invalid_argument("delta must be positive");
    WorldlineConfig cfg(spec.n_sites, beta);
    std::poisson_distribution<int> pois(delta * beta);
    std::uniform_real_distribution<double> unif(0.0, beta);
    const double tol = 1e-12 * beta;
    for (auto& site : cfg.sites) {
        site.xi = static_cast<std::uint8_t>(rng() & 1);
        while (true) {
            int n = pois(rng);
            if (n % 2 != 0) continue;
            std::vector<double> f(n);
            for (auto& t : f) t = unif(rng);
            std::sort(f.begin(), f.end());
            bool collide = false;
            for (int i = 1; i < n; ++i)
                if (f[i] - f[i - 1] < tol) collide = true;
            if (collide) continue;
            site.flips = std::move(f);
            break;
        }
    }
    return cfg;
}

/// One Markov chain on worldline configurations, reversible for the
/// space-time Ising measure at (lambda, delta, beta).
class Chain {
  public:
    Chain(const TorusSpec& spec, const SamplerParams& p)
        : spec_(spec), params_(p), rng_(p.seed) {
        p.validate();
        cfg_ = init_free(spec, p.beta, p.delta, rng_);
    }

    Chain(const TorusSpec& spec, const SamplerParams& p, WorldlineConfig cfg,
          std::mt19937_64 rng)
        : spec_(spec), params_(p), cfg_(std::move(cfg)), rng_(rng) {
        p.validate();
        if (cfg_.n_sites() != spec.n_sites) throw std::invalid_argument("site count mismatch");
    }

    const WorldlineConfig& config() const { return cfg_; }
    const TorusSpec& spec() const { return spec_; }
    const SamplerParams& params() const { return params_; }
    std::mt19937_64& rng() { return rng_; }
    long steps() const { return steps_; }
    long proposals(MoveKind k) const { return proposed_[static_cast<int>(k)]; }
    long accepts(MoveKind k) const { return accepted_[static_cast<int>(k)]; }

    /// |Lambda| move attempts drawn from the move mix.
    void sweep() {
        for (int i = 0; i < spec_.n_sites; ++i) step();
    }

    bool step() {
        double u = uniform();
        const auto& mix = params_.move_mix;
        ++steps_;
        if (u < mix[0]) return record(MoveKind::line_flip, move_line_flip());
        if (u < mix[0] + mix[1]) return record(MoveKind::pair_insert, move_pair_insert());
        if (u < mix[0] + mix[1] + mix[2]) return record(MoveKind::pair_delete, move_pair_delete());
        return record(MoveKind::shift, move_shift());
    }

    /// sigma(x,.) -> -sigma(x,.) at a uniform site; the weight ratio is
    /// exp(lambda * Delta) with Delta = -2 sum_{y~x} overlap(x,y).
    bool move_line_flip() {
        int x = uniform_site();
        double dlt = 0.0;
        if (params_.lambda > 0)
            for (int y : spec_.neighbors(x)) dlt += -2.0 * overlap_integral(cfg_, x, y);
        if (!accept(params_.lambda * dlt)) return false;
        cfg_.sites[x].xi ^= 1;
        return true;
    }

    /// Insert an unordered pair of flip times at a uniform site, toggling the
    /// trajectory on [min, max).  With n flips before the move the acceptance
    /// is min(1, exp(lambda*Delta) * (delta*beta)^2 / (2*C(n+2,2))).
    bool move_pair_insert() {
        int x = uniform_site();
        double beta = params_.beta;
        double s = uniform() * beta, t = uniform() * beta;
        double a = std::min(s, t), b = std::max(s, t);
        const double tol = 1e-12 * beta;
        if (b - a < tol) return false;
        auto& f = cfg_.sites[x].flips;
        for (double tf : f)
            if (std::abs(tf - a) < tol || std::abs(tf - b) < tol) return false;
        auto n = static_cast<double>(f.size());
        double log_ratio = weight_log_ratio(x, a, b) +
                           std::log((params_.delta * beta) * (params_.delta * beta) /
                                    ((n + 2) * (n + 1)));
        if (!accept(log_ratio)) return false;
        f.insert(std::upper_bound(f.begin(), f.end(), a), a);
        f.insert(std::upper_bound(f.begin(), f.end(), b), b);
        return true;
    }

    /// Inverse of move_pair_insert: remove a uniformly chosen unordered pair
    /// among C(n,2); acceptance min(1, exp(lambda*Delta) * 2*C(n,2)/(delta*beta)^2).
    bool move_pair_delete() {
        int x = uniform_site();
        auto& f = cfg_.sites[x].flips;
        auto n = static_cast<long>(f.size());
        if (n < 2) return false;  // automatic rejection
        long i = uniform_index(n), j = uniform_index(n - 1);
        if (j >= i) ++j;
        if (i > j) std::swap(i, j);
        double a = f[i], b = f[j];
        double beta = params_.beta;
        double log_ratio = weight_log_ratio(x, a, b) +
                           std::log(static_cast<double>(n) * (n - 1) /
                                    ((params_.delta * beta) * (params_.delta * beta)));
        if (!accept(log_ratio)) return false;
        f.erase(f.begin() + j);
        f.erase(f.begin() + i);
        return true;
    }

    /// Move one flip time uniformly within the open gap between its circular
    /// neighbours; symmetric proposal, acceptance min(1, exp(lambda*Delta)).
    bool move_shift() {
        int x = uniform_site();
        auto& f = cfg_.sites[x].flips;
        auto n = static_cast<long>(f.size());
        if (n == 0) return false;  // automatic rejection
        double beta = params_.beta;
        const double tol = 1e-12 * beta;
        long i = uniform_index(n);
        double told = f[i];
        double lo = f[(i - 1 + n) % n];
        double hi = f[(i + 1) % n];
        double gap = std::fmod(hi - lo + beta, beta);
        if (gap == 0.0) gap = beta;  // n == 2: the other flip is both neighbours
        double tnew = std::fmod(lo + uniform() * gap, beta);
        if (std::abs(tnew - told) < tol) return false;
        for (double tf : f)
            if (std::abs(tf - tnew) < tol) return false;
        double a = std::min(told, tnew), b = std::max(told, tnew);
        if (!accept(weight_log_ratio(x, a, b))) return false;
        f.erase(f.begin() + i);
        f.insert(std::upper_bound(f.begin(), f.end(), tnew), tnew);
        return true;
    }

    nlohmann::json checkpoint() const {
        nlohmann::json j = to_json(cfg_);
        j["rng"] = rng_to_hex(rng_);
        j["steps"] = steps_;
        j["proposed"] = proposed_;
        j["accepted"] = accepted_;
        return j;
    }

    static Chain resume(const TorusSpec& spec, const SamplerParams& p, const nlohmann::json& j) {
        Chain c(spec, p, worldline_from_json(j), rng_from_hex(j.at("rng").get<std::string>()));
        c.steps_ = j.value("steps", 0L);
        if (j.contains("proposed")) j.at("proposed").get_to(c.proposed_);
        if (j.contains("accepted")) j.at("accepted").get_to(c.accepted_);
        return c;
    }

  private:
    bool record(MoveKind k, bool acc) {
        ++proposed_[static_cast<int>(k)];
        if (acc) ++accepted_[static_cast<int>(k)];
        return acc;
    }

    /// log of the mu-weight ratio from toggling sigma(x,.) on [a, b).
    double weight_log_ratio(int x, double a, double b) {
        if (params_.lambda == 0) return 0.0;
        double dlt = 0.0;
        for (int y : spec_.neighbors(x)) dlt += -2.0 * overlap_window(cfg_, x, y, a, b);
        return params_.lambda * dlt;
    }

    bool accept(double log_ratio) {
        if (log_ratio >= 0) return true;
        return uniform() < std::exp(log_ratio);
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
    int uniform_site() { return static_cast<int>(uniform_index(spec_.n_sites)); }
    long uniform_index(long n) {
        return std::uniform_int_distribution<long>(0, n - 1)(rng_);
    }

    TorusSpec spec_;
    SamplerParams params_;
    WorldlineConfig cfg_;
    std::mt19937_64 rng_;
    long steps_ = 0;
    std::array<long, 4> proposed_{0, 0, 0, 0};
    std::array<long, 4> accepted_{0, 0, 0, 0};
};

}  // namespace tfim
