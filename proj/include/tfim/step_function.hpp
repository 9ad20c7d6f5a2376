#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "tfim/worldline.hpp"

namespace tfim {

/// Piecewise-constant, right-continuous, beta-periodic function on [0, beta).
/// Piece i takes values[i] on [breaks[i], breaks[i+1]), wrapping past beta,
/// so the segment [0, breaks[0]) belongs to the last piece.
///
/// Used to represent weak derivatives h'; the function h itself is recovered
/// as the antiderivative with h(0) = 0 (adding a constant changes nothing
/// downstream).
class StepFunction {
  public:
    StepFunction() : beta_(1.0), breaks_{0.0}, values_{0.0} { rebuild(); }

    StepFunction(double beta, std::vector<double> breaks, std::vector<double> values)
        : beta_(beta), breaks_(std::move(breaks)), values_(std::move(values)) {
        if (!(beta_ > 0)) throw std::invalid_argument("beta must be positive");
        if (breaks_.empty() || breaks_.size() != values_.size())
            throw std::invalid_argument("need one value per breakpoint");
        for (size_t i = 0; i < breaks_.size(); ++i) {
            if (!(breaks_[i] >= 0.0 && breaks_[i] < beta_))
                throw std::invalid_argument("breakpoints must lie in [0, beta)");
            if (i > 0 && !(breaks_[i - 1] < breaks_[i]))
                throw std::invalid_argument("breakpoints must be strictly increasing");
        }
        rebuild();
    }

    static StepFunction constant(double beta, double v) { return {beta, {0.0}, {v}}; }

    double beta() const { return beta_; }
    const std::vector<double>& breakpoints() const { return breaks_; }
    const std::vector<double>& values() const { return values_; }

    static double wrap_into(double t, double beta) {
        double u = std::fmod(t, beta);
        if (u < 0) u += beta;
        return u == beta ? 0.0 : u;
    }

    double wrap(double t) const { return wrap_into(t, beta_); }

    /// Right-continuous evaluation, beta-periodic in t.
    double operator()(double t) const {
        double u = wrap(t);
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), u);
        size_t i = (it == breaks_.begin()) ? breaks_.size() - 1 : (it - breaks_.begin() - 1);
        return values_[i];
    }

    /// int_0^beta f dt.
    double integral() const { return total_; }

    double inf_norm() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Antiderivative F(t) = int_0^t f, evaluated beta-periodically in t
    /// (periodic extension is exact only when integral() == 0).
    double antiderivative(double t) const {
        double u = wrap(t);
        auto it = std::upper_bound(breaks_.begin(), breaks_.end(), u);
        if (it == breaks_.begin()) {
            // u in the wrapped tail [0, breaks[0]) of the last piece
            return values_.back() * u;
        }
        size_t i = it - breaks_.begin() - 1;
        return cum_[i] + values_[i] * (u - breaks_[i]);
    }

    /// t -> f(t + a), breakpoints moved to (b - a) mod beta.
    StepFunction shifted(double a) const {
        std::vector<std::pair<double, double>> pieces;
        pieces.reserve(breaks_.size());
        for (size_t i = 0; i < breaks_.size(); ++i)
            pieces.emplace_back(wrap(breaks_[i] - a), values_[i]);
        std::sort(pieces.begin(), pieces.end());
        std::vector<double> b, v;
        for (auto& [bp, val] : pieces) { b.push_back(bp); v.push_back(val); }
        return merged(beta_, std::move(b), std::move(v));
    }

    /// Build from a pointwise rule evaluated at piece midpoints over the given
    /// candidate breakpoints (exact when the rule is constant between them).
    static StepFunction from_rule(double beta, std::vector<double> candidates,
                                  const std::function<double(double)>& rule) {
        candidates.push_back(0.0);
        for (auto& c : candidates) c = wrap_into(c, beta);
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
        std::vector<double> vals(candidates.size());
        for (size_t i = 0; i < candidates.size(); ++i) {
            double next = (i + 1 < candidates.size()) ? candidates[i + 1] : beta;
            vals[i] = rule(0.5 * (candidates[i] + next));
        }
        return merged(beta, std::move(candidates), std::move(vals));
    }

    friend bool operator==(const StepFunction&, const StepFunction&) = default;

  private:
    static StepFunction merged(double beta, std::vector<double> b, std::vector<double> v) {
        // drop breakpoints where the value does not change (incl. wrap-around)
        std::vector<double> nb, nv;
        for (size_t i = 0; i < b.size(); ++i) {
            if (!nv.empty() && nv.back() == v[i]) continue;
            nb.push_back(b[i]);
            nv.push_back(v[i]);
        }
        if (nv.size() > 1 && nv.front() == nv.back() && nb.front() != 0.0) {
            nb.erase(nb.begin());
            nv.erase(nv.begin());
        }
        return StepFunction(beta, std::move(nb), std::move(nv));
    }

    void rebuild() {
        cum_.resize(breaks_.size());
        double acc = values_.back() * breaks_[0];  // wrapped tail of the last piece
        total_ = acc;
        for (size_t i = 0; i < breaks_.size(); ++i) {
            cum_[i] = acc;
            double next = (i + 1 < breaks_.size()) ? breaks_[i + 1] : beta_;
            acc += values_[i] * (next - breaks_[i]);
            total_ += values_[i] * (next - breaks_[i]);
        }
    }

    double beta_;
    std::vector<double> breaks_;
    std::vector<double> values_;
    std::vector<double> cum_;  // antiderivative at each breakpoint
    double total_ = 0.0;
};

/// W'_{r,n}: alternates +r / -r on the 2^n level-n dyadic cells of [0, beta).
/// Its antiderivative is the level-n triangle wave of slope r.
inline StepFunction triangle_wave_derivative(double r, int n, double beta) {
    if (n < 1) throw std::invalid_argument("level must be >= 1");
    int pieces = 1 << n;
    std::vector<double> b(pieces), v(pieces);
    for (int i = 0; i < pieces; ++i) {
        b[i] = beta * i / pieces;
        v[i] = (i % 2 == 0) ? r : -r;
    }
    if (r == 0.0) return StepFunction::constant(beta, 0.0);
    return {beta, std::move(b), std::move(v)};
}

/// t -> f(beta - t): reflection of the circle; an involution.
inline StepFunction reflect_circle(const StepFunction& f) {
    double beta = f.beta();
    std::vector<double> cand;
    for (double b : f.breakpoints()) cand.push_back(b == 0.0 ? 0.0 : beta - b);
    return StepFunction::from_rule(beta, std::move(cand), [&](double t) { return f(beta - t); });
}

inline void require_zero_integral(const StepFunction& f) {
    if (std::abs(f.integral()) > 1e-10)
        throw std::domain_error("weak derivative must integrate to zero over the period");
}

/// Weak derivative of h_+: keeps h on [0, beta/2) and mirrors it onto the
/// second half, h_+(t) = h(beta - t) there.
inline StepFunction plus_part(const StepFunction& hprime) {
    require_zero_integral(hprime);
    double beta = hprime.beta();
    std::vector<double> cand{0.0, beta / 2};
    for (double b : hprime.breakpoints()) {
        cand.push_back(b);
        cand.push_back(b == 0.0 ? 0.0 : beta - b);
    }
    return StepFunction::from_rule(beta, std::move(cand), [&, beta](double t) {
        return t < beta / 2 ? hprime(t) : -hprime(beta - t);
    });
}

/// Weak derivative of h_-: mirror image of plus_part.
inline StepFunction minus_part(const StepFunction& hprime) {
    require_zero_integral(hprime);
    double beta = hprime.beta();
    std::vector<double> cand{0.0, beta / 2};
    for (double b : hprime.breakpoints()) {
        cand.push_back(b);
        cand.push_back(b == 0.0 ? 0.0 : beta - b);
    }
    return StepFunction::from_rule(beta, std::move(cand), [&, beta](double t) {
        return t < beta / 2 ? -hprime(beta - t) : hprime(t);
    });
}

enum class FoldBranch { plus, minus };

/// Symmetrization of h at t0 (in derivative representation): shift the origin
/// to t0, fold onto the chosen half, shift back.  The result is symmetric
/// about t0 and t0 + beta/2.
inline StepFunction symmetrize_at(const StepFunction& hprime, double t0, FoldBranch branch) {
    if (!(t0 >= 0.0 && t0 < hprime.beta() / 2))
        throw std::domain_error("symmetrization point must lie in [0, beta/2)");
    StepFunction shifted = hprime.shifted(t0);
    StepFunction folded = branch == FoldBranch::plus ? plus_part(shifted) : minus_part(shifted);
    return folded.shifted(-t0);
}

/// Symmetrization with the maximizing branch: picks the fold with the larger
/// estimated partition ratio (ties toward plus).
inline StepFunction symmetrize_at(const StepFunction& hprime, double t0,
                                  const std::function<double(const StepFunction&)>& estimate_z) {
    if (!(t0 >= 0.0 && t0 < hprime.beta() / 2))
        throw std::domain_error("symmetrization point must lie in [0, beta/2)");
    StepFunction shifted = hprime.shifted(t0);
    StepFunction p = plus_part(shifted), m = minus_part(shifted);
    return (estimate_z(p.shifted(-t0)) >= estimate_z(m.shifted(-t0)) ? p : m).shifted(-t0);
}

/// Level-n snippet test on the induced functions h (antiderivatives with
/// h(0) = 0): g repeats the values of f on some level-n dyadic cell,
/// alternating orientation, and is symmetric about every level-n dyadic.
/// Checked on a dense grid.
inline bool is_level_snippet(const StepFunction& gprime, const StepFunction& fprime, int n,
                             int grid = 1 << 14, double tol = 1e-9) {
    if (n < 0) throw std::invalid_argument("snippet level must be >= 0");
    if (gprime.beta() != fprime.beta()) throw std::invalid_argument("period mismatch");
    double beta = gprime.beta();
    int cells = 1 << n;
    double cell = beta / cells;
    int per_cell = std::max(2, grid / cells);

    // condition (2): symmetry of g about every level-n dyadic.  At level 0
    // the single cell is the whole circle and only the matching condition
    // below applies.
    for (int m = 0; n > 0 && m < cells; ++m) {
        double c = m * cell;
        for (int i = 1; i < per_cell; ++i) {
            double t = cell * i / per_cell;
            if (std::abs(gprime.antiderivative(c + t) - gprime.antiderivative(c - t)) > tol)
                return false;
        }
    }
    // condition (1): g equals f on some cell, in some orientation
    for (int k = 0; k < cells; ++k) {
        for (int a = 0; a < 2; ++a) {
            bool ok = true;
            for (int i = 1; i < per_cell && ok; ++i) {
                double t = cell * i / per_cell;
                double ref = fprime.antiderivative(k * cell + (a == 0 ? t : -t));
                if (std::abs(gprime.antiderivative(t) - ref) > tol) ok = false;
            }
            if (ok) return true;
        }
    }
    return false;
}

/// Per-configuration reweighting factor whose mean under the space-time Ising
/// measure is Z(h)/Z(0) for spatially constant h:
///   exp( -(1/delta) sum_x sum_j h'(t^x_j) (-1)^{xi_x + j} ),  j = 1,2,...
inline double zratio_weight(const WorldlineConfig& cfg, const StepFunction& hprime, double delta) {
    if (!(delta > 0)) throw std::invalid_argument("delta must be positive");
    double s = 0.0;
    for (const auto& site : cfg.sites) {
        int sign = site.xi ? 1 : -1;  // (-1)^{xi+1}, the j=1 sign
        for (double t : site.flips) {
            s += sign * hprime(t);
            sign = -sign;
        }
    }
    return std::exp(-s / delta);
}

// ---- JSON schema: {beta, breakpoints:[...], values:[...]} ----

inline nlohmann::json to_json(const StepFunction& f) {
    return {{"beta", f.beta()}, {"breakpoints", f.breakpoints()}, {"values", f.values()}};
}

inline StepFunction step_function_from_json(const nlohmann::json& j) {
    return StepFunction(j.at("beta").get<double>(),
                        j.at("breakpoints").get<std::vector<double>>(),
                        j.at("values").get<std::vector<double>>());
}

}  // namespace tfim
