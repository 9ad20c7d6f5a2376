#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfim/accumulator.hpp"
#include "tfim/lattice.hpp"
#include "tfim/step_function.hpp"
#include "tfim/worldline.hpp"

namespace tfim {

// ---- infrared-bound formulas ----

/// Theorem-1 bound: 48 / (2*lambda*Lhat(k) + l^2/(2*delta)).
inline double ir_bound_48(double lambda, double delta, double lh, double l) {
    double den = 2.0 * lambda * lh + l * l / (2.0 * delta);
    return den > 0 ? 48.0 / den : std::numeric_limits<double>::infinity();
}

/// Sharper form: (2*lambda*Lhat + 48*l^2/(2*delta)) / (2*lambda*Lhat + l^2/(2*delta))^2.
inline double ir_bound_sharp(double lambda, double delta, double lh, double l) {
    double den = 2.0 * lambda * lh + l * l / (2.0 * delta);
    if (den <= 0) return std::numeric_limits<double>::infinity();
    return (2.0 * lambda * lh + 48.0 * l * l / (2.0 * delta)) / (den * den);
}

/// Duhamel (l = 0) bound: 1 / (2*lambda*Lhat(k)).
inline double duhamel_bound(double lambda, double lh) {
    double den = 2.0 * lambda * lh;
    return den > 0 ? 1.0 / den : std::numeric_limits<double>::infinity();
}

/// Upper bound on (1/(beta*|L|)) sum_k sum_{|j|>J} (48/(2 lambda Lhat + l^2/2delta))^2,
/// the Fourier mass discarded beyond the frequency truncation, by integral
/// comparison: sum_{j>J} f(j) <= int_J^inf f.
inline double ir_tail_bound(const TorusSpec& spec, double lambda, double delta, double beta,
                            int jmax) {
    const double c = 2.0 * std::numbers::pi / beta;
    const double u = c * jmax;
    double total = 0.0;
    for (int m = 0; m < spec.n_sites; ++m) {
        double a = 4.0 * lambda * delta * lhat(spec, m);
        double q;  // int_{cJ}^inf du / (a + u^2)^2
        if (a > 0) {
            q = (std::numbers::pi / 2 - std::atan(u / std::sqrt(a))) / (2.0 * a * std::sqrt(a)) -
                u / (2.0 * a * (a + u * u));
        } else {
            q = 1.0 / (3.0 * u * u * u);
        }
        total += 2.0 * (96.0 * delta) * (96.0 * delta) * q / c;  // both signs of j
    }
    return total / (beta * spec.n_sites);
}

// ---- measurement plan and per-sample measurement ----

struct MeasurementPlan {
    TorusSpec spec;
    double beta = 1.0;
    double lambda = 1.0;
    double delta = 1.0;

    bool fourier = true;
    int jmax = 32;

    std::vector<int> schwinger_displacements;  // site indices; empty disables
    int time_grid = 64;                        // output grid for c(x, t)
    int s_grid = 16;                           // translation-average points (divides time_grid)

    std::vector<double> zeta_rs;

    struct HFun {
        std::string label;
        StepFunction hprime;
        bool with_parts = false;  // also track h_+ / h_- ratios and margins
    };
    std::vector<HFun> hfuns;

    long batch_size = 500;

    void validate() const {
        if (!(beta > 0) || !(delta > 0) || lambda < 0) throw std::invalid_argument("bad model");
        if (jmax < 0) throw std::invalid_argument("jmax must be >= 0");
        if (time_grid < 1 || s_grid < 1 || time_grid % s_grid != 0)
            throw std::invalid_argument("s_grid must divide time_grid");
        for (int x : schwinger_displacements) spec.check_site(x);
        for (const auto& h : hfuns) {
            if (h.hprime.beta() != beta) throw std::invalid_argument("h period mismatch");
        }
    }
};

/// Slot layout of the measurement vector; shared by the measurer and the
/// estimate readers.
class SlotLayout {
  public:
    explicit SlotLayout(const MeasurementPlan& plan)
        : n_sites_(plan.spec.n_sites), jmax_(plan.jmax), time_grid_(plan.time_grid) {
        plan.validate();
        energy_ = take(1);
        flips_ = take(1);
        for (double r : plan.zeta_rs) zeta_slot_.emplace(key(r), take(1));
        for (const auto& h : plan.hfuns) {
            double rinf = h.hprime.inf_norm();
            if (!zeta_slot_.count(key(rinf))) zeta_slot_.emplace(key(rinf), take(1));
        }
        for (const auto& h : plan.hfuns) {
            HSlots hs;
            hs.zratio = take(1);
            hs.gd_margin = take(1);
            if (h.with_parts) {
                hs.zratio_plus = take(1);
                hs.zratio_minus = take(1);
                hs.vert_margin_plus = take(1);
                hs.vert_margin_minus = take(1);
            }
            hslots_.push_back(hs);
        }
        if (plan.fourier) {
            fourier_ = take(plan.spec.n_sites * (plan.jmax + 1));
        }
        if (!plan.schwinger_displacements.empty()) {
            schwinger_ = take(static_cast<int>(plan.schwinger_displacements.size()) *
                              plan.time_grid);
        }
        dim_ = next_;
    }

    struct HSlots {
        int zratio = -1, gd_margin = -1;
        int zratio_plus = -1, zratio_minus = -1;
        int vert_margin_plus = -1, vert_margin_minus = -1;
    };

    int dim() const { return dim_; }
    int energy() const { return energy_; }
    int flips() const { return flips_; }
    int zeta(double r) const { return zeta_slot_.at(key(r)); }
    const HSlots& hfun(size_t i) const { return hslots_.at(i); }
    int fourier(int kindex, int j) const {
        if (fourier_ < 0) throw std::logic_error("fourier measurement disabled");
        if (j < 0 || j > jmax_) throw std::domain_error("frequency index outside grid");
        return fourier_ + kindex * (jmax_ + 1) + j;
    }
    int schwinger(int xi, int gi) const {
        if (schwinger_ < 0) throw std::logic_error("schwinger measurement disabled");
        return schwinger_ + xi * time_grid_ + gi;
    }

  private:
    static long key(double r) { return std::llround(r * 1e12); }
    int take(int n) {
        int at = next_;
        next_ += n;
        return at;
    }
    int n_sites_ = 0, jmax_ = 0, time_grid_ = 0;
    int next_ = 0, dim_ = 0;
    int energy_ = -1, flips_ = -1, fourier_ = -1, schwinger_ = -1;
    std::map<long, int> zeta_slot_;
    std::vector<HSlots> hslots_;
};

/// Computes the per-configuration measurement vector for a plan.
class Measurer {
  public:
    explicit Measurer(const MeasurementPlan& plan) : plan_(plan), slots_(plan) {
        const auto& spec = plan.spec;
        // site addition table for displacement averaging
        add_.assign(static_cast<size_t>(spec.n_sites) * spec.n_sites, 0);
        for (int y = 0; y < spec.n_sites; ++y)
            for (int x = 0; x < spec.n_sites; ++x) {
                int s = 0;
                for (int a = 0; a < spec.dim; ++a)
                    s += ((spec.coord(y, a) + spec.coord(x, a)) % spec.side) * spec.stride(a);
                add_[static_cast<size_t>(y) * spec.n_sites + x] = s;
            }
        if (plan.fourier) {
            // e^{i k.x} table, k-major
            phases_.resize(static_cast<size_t>(spec.n_sites) * spec.n_sites);
            for (int m = 0; m < spec.n_sites; ++m) {
                Momentum k = momentum_at(spec, m);
                for (int x = 0; x < spec.n_sites; ++x) {
                    double ph = 0.0;
                    for (int a = 0; a < spec.dim; ++a)
                        ph += k.components[a] * spec.coord(x, a);
                    phases_[static_cast<size_t>(m) * spec.n_sites + x] = std::polar(1.0, ph);
                }
            }
        }
        for (const auto& h : plan.hfuns) {
            parts_.push_back(h.with_parts
                                 ? std::optional<std::pair<StepFunction, StepFunction>>(
                                       {plus_part(h.hprime), minus_part(h.hprime)})
                                 : std::nullopt);
        }
    }

    const SlotLayout& slots() const { return slots_; }
    const MeasurementPlan& plan() const { return plan_; }

    std::vector<double> measure(const WorldlineConfig& cfg) const {
        const auto& spec = plan_.spec;
        std::vector<double> v(slots_.dim(), 0.0);
        v[slots_.energy()] = interaction_action(cfg, spec, plan_.lambda);
        double flips = static_cast<double>(total_flip_count(cfg));
        v[slots_.flips()] = flips;
        for (double r : plan_.zeta_rs)
            v[slots_.zeta(r)] = std::pow(std::cosh(r / plan_.delta), flips);
        for (size_t i = 0; i < plan_.hfuns.size(); ++i) {
            const auto& h = plan_.hfuns[i];
            double rinf = h.hprime.inf_norm();
            double zr = zratio_weight(cfg, h.hprime, plan_.delta);
            double zeta_inf = std::pow(std::cosh(rinf / plan_.delta), flips);
            v[slots_.zeta(rinf)] = zeta_inf;
            const auto& hs = slots_.hfun(i);
            v[hs.zratio] = zr;
            v[hs.gd_margin] = zeta_inf - zr;
            if (parts_[i]) {
                double zp = zratio_weight(cfg, parts_[i]->first, plan_.delta);
                double zm = zratio_weight(cfg, parts_[i]->second, plan_.delta);
                v[hs.zratio_plus] = zp;
                v[hs.zratio_minus] = zm;
                v[hs.vert_margin_plus] = zp - zr;
                v[hs.vert_margin_minus] = zm - zr;
            }
        }
        if (plan_.fourier) measure_fourier(cfg, v);
        if (!plan_.schwinger_displacements.empty()) measure_schwinger(cfg, v);
        return v;
    }

  private:
    void measure_fourier(const WorldlineConfig& cfg, std::vector<double>& v) const {
        const auto& spec = plan_.spec;
        const int jmax = plan_.jmax;
        auto rows = time_fourier_rows(cfg, jmax);
        const double norm = 1.0 / (plan_.beta * spec.n_sites);
        for (int m = 0; m < spec.n_sites; ++m) {
            const auto* ph = &phases_[static_cast<size_t>(m) * spec.n_sites];
            for (int j = 0; j <= jmax; ++j) {
                std::complex<double> acc = 0.0;
                for (int x = 0; x < spec.n_sites; ++x)
                    acc += ph[x] * rows[static_cast<size_t>(x) * (jmax + 1) + j];
                v[slots_.fourier(m, j)] = std::norm(acc) * norm;
            }
        }
    }

    void measure_schwinger(const WorldlineConfig& cfg, std::vector<double>& v) const {
        const auto& spec = plan_.spec;
        const int G = plan_.time_grid;
        const int stride = G / plan_.s_grid;
        // spin table on the uniform time grid
        std::vector<int> sg(static_cast<size_t>(spec.n_sites) * G);
        for (int x = 0; x < spec.n_sites; ++x) {
            const auto& f = cfg.sites[x].flips;
            int s = 1 - 2 * (cfg.sites[x].xi & 1);
            size_t fi = 0;
            for (int g = 0; g < G; ++g) {
                double t = plan_.beta * g / G;
                while (fi < f.size() && f[fi] <= t) {
                    s = -s;
                    ++fi;
                }
                sg[static_cast<size_t>(x) * G + g] = s;
            }
        }
        const double norm = 1.0 / (static_cast<double>(spec.n_sites) * plan_.s_grid);
        for (size_t xi = 0; xi < plan_.schwinger_displacements.size(); ++xi) {
            int x = plan_.schwinger_displacements[xi];
            for (int g = 0; g < G; ++g) {
                double acc = 0.0;
                for (int y = 0; y < spec.n_sites; ++y) {
                    int yx = add_[static_cast<size_t>(y) * spec.n_sites + x];
                    const int* ry = &sg[static_cast<size_t>(y) * G];
                    const int* ryx = &sg[static_cast<size_t>(yx) * G];
                    for (int s = 0; s < G; s += stride) acc += ry[s] * ryx[(s + g) % G];
                }
                v[slots_.schwinger(static_cast<int>(xi), g)] = acc * norm;
            }
        }
    }

    MeasurementPlan plan_;
    SlotLayout slots_;
    std::vector<int> add_;
    std::vector<std::complex<double>> phases_;
    std::vector<std::optional<std::pair<StepFunction, StepFunction>>> parts_;
};

struct ValueSE {
    double mean = 0.0;
    double se = 0.0;
};

/// Read-side companion of the slot layout over a merged accumulator.
class Estimates {
  public:
    Estimates(const MeasurementPlan& plan, const EstimatorAccumulator& acc)
        : plan_(plan), slots_(plan), acc_(acc) {}

    ValueSE at(int slot) const { return {acc_.mean(slot), acc_.se(slot)}; }

    /// chat(k, l_j); negative j folds to (-k, -j) by conjugate symmetry.
    ValueSE chat(int kindex, int j) const {
        if (j < 0) {
            kindex = negate_momentum_index(plan_.spec, kindex);
            j = -j;
        }
        return at(slots_.fourier(kindex, j));
    }

    ValueSE susceptibility() const { return chat(0, 0); }

    ValueSE schwinger(int xi, int gi) const { return at(slots_.schwinger(xi, gi)); }

    ValueSE zeta(double r) const { return at(slots_.zeta(r)); }

    ValueSE zratio(size_t hfun_index) const { return at(slots_.hfun(hfun_index).zratio); }

    /// zeta(||h'||inf) - zratio(h); nonnegative in expectation by Gaussian
    /// domination, and the white-noise-limit discrepancy for W_{r,n}.
    ValueSE gd_margin(size_t hfun_index) const { return at(slots_.hfun(hfun_index).gd_margin); }

    ValueSE vert_margin_plus(size_t i) const { return at(slots_.hfun(i).vert_margin_plus); }
    ValueSE vert_margin_minus(size_t i) const { return at(slots_.hfun(i).vert_margin_minus); }
    ValueSE zratio_plus(size_t i) const { return at(slots_.hfun(i).zratio_plus); }
    ValueSE zratio_minus(size_t i) const { return at(slots_.hfun(i).zratio_minus); }

    ValueSE mean_flip_density() const {
        auto f = at(slots_.flips());
        return {f.mean / plan_.spec.n_sites, f.se / plan_.spec.n_sites};
    }

    ValueSE energy() const { return at(slots_.energy()); }
    double energy_iat() const { return acc_.iat_estimate(slots_.energy()); }

    const SlotLayout& slots() const { return slots_; }
    const MeasurementPlan& plan() const { return plan_; }
    const EstimatorAccumulator& accumulator() const { return acc_; }

  private:
    MeasurementPlan plan_;
    SlotLayout slots_;
    const EstimatorAccumulator& acc_;
};

struct BubbleEstimate {
    double mean = 0.0;
    double se = 0.0;
    double tail = 0.0;  // bound on the discarded |j| > jmax mass
    int jmax = 0;
};

/// Replica-product bubble estimator: B = (1/(beta |L|)) sum_{k,|j|<=J} c1 c2
/// from two independent sample sets, which kills the squaring bias.
/// The error bar pairs per-batch means across the replicas.
inline BubbleEstimate bubble_estimate(const MeasurementPlan& plan,
                                      const EstimatorAccumulator& half1,
                                      const EstimatorAccumulator& half2,
                                      std::optional<int> jmax_opt = std::nullopt) {
    SlotLayout slots(plan);
    const auto& spec = plan.spec;
    int jmax = jmax_opt.value_or(plan.jmax);
    if (jmax > plan.jmax) throw std::domain_error("jmax exceeds accumulated grid");
    auto fold = [&](auto&& value1, auto&& value2) {
        double acc = 0.0;
        for (int m = 0; m < spec.n_sites; ++m) {
            acc += value1(m, 0) * value2(m, 0);
            for (int j = 1; j <= jmax; ++j) acc += 2.0 * value1(m, j) * value2(m, j);
        }
        return acc / (plan.beta * spec.n_sites);
    };
    BubbleEstimate out;
    out.jmax = jmax;
    out.mean = fold([&](int m, int j) { return half1.mean(slots.fourier(m, j)); },
                    [&](int m, int j) { return half2.mean(slots.fourier(m, j)); });
    // batch-pair spread
    long nb = std::min(half1.n_batches(), half2.n_batches());
    if (nb >= 2) {
        std::vector<double> bvals(nb, 0.0);
        std::vector<std::vector<double>> bm1(spec.n_sites * (jmax + 1)),
            bm2(spec.n_sites * (jmax + 1));
        for (int m = 0; m < spec.n_sites; ++m)
            for (int j = 0; j <= jmax; ++j) {
                int s = slots.fourier(m, j);
                bm1[m * (jmax + 1) + j] = half1.batch_means(s);
                bm2[m * (jmax + 1) + j] = half2.batch_means(s);
            }
        for (long b = 0; b < nb; ++b)
            bvals[b] = fold([&](int m, int j) { return bm1[m * (jmax + 1) + j][b]; },
                            [&](int m, int j) { return bm2[m * (jmax + 1) + j][b]; });
        double mb = 0.0;
        for (double x : bvals) mb += x;
        mb /= static_cast<double>(nb);
        double var = 0.0;
        for (double x : bvals) var += (x - mb) * (x - mb);
        out.se = std::sqrt(var / (static_cast<double>(nb) * (nb - 1)));
    } else {
        out.se = std::numeric_limits<double>::infinity();
    }
    out.tail = ir_tail_bound(spec, plan.lambda, plan.delta, plan.beta, jmax);
    return out;
}

/// Smallest truncation J <= jcap whose infrared tail bound is below
/// frac * B(J); falls back to jcap when none qualifies.
inline int recommended_jmax(const MeasurementPlan& plan, const EstimatorAccumulator& half1,
                            const EstimatorAccumulator& half2, double frac = 1e-3) {
    for (int j = 1; j <= plan.jmax; ++j) {
        auto b = bubble_estimate(plan, half1, half2, j);
        if (b.mean > 0 && b.tail < frac * b.mean) return j;
    }
    return plan.jmax;
}

}  // namespace tfim
