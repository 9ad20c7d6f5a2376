#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfim/ed.hpp"
#include "tfim/observables.hpp"

namespace tfim {

/// Outcome of one executable inequality check, with the worst margin over
/// the scanned grid.  margin = bound - value at the worst point; a check
/// passes when margin >= -tolerance, where the tolerance is 1e-9 for exact
/// sources and 4*SE for statistical ones.
struct BoundReport {
    std::string check;
    int d = 0;
    int side = 0;
    double beta = 0, lambda = 0, delta = 0;
    double margin = std::numeric_limits<double>::infinity();
    std::string worst_location;
    bool pass = true;
    double tolerance = 0;
    bool statistical = false;
    double se_at_worst = 0;
    std::vector<std::string> excluded;
    nlohmann::json extra = nlohmann::json::object();

    void observe(double m, double tol, double se, const std::string& where) {
        if (m < -tol) pass = false;
        if (m < margin) {
            margin = m;
            tolerance = tol;
            se_at_worst = se;
            worst_location = where;
        }
    }
};

inline nlohmann::json to_json(const BoundReport& r) {
    return {{"check", r.check},
            {"params", {{"d", r.d}, {"side", r.side}, {"beta", r.beta},
                        {"lambda", r.lambda}, {"delta", r.delta}}},
            {"margin", r.margin},
            {"worst", r.worst_location},
            {"pass", r.pass},
            {"tolerance", r.tolerance},
            {"statistical", r.statistical},
            {"se_at_worst", r.se_at_worst},
            {"excluded", r.excluded},
            {"extra", r.extra}};
}

/// Uniform access to chat(k, l) values from either the exact or the sampled
/// route.
struct ChatSource {
    TorusSpec spec;
    double beta = 1, lambda = 1, delta = 1;
    int jmax = 0;
    bool statistical = false;
    std::function<ValueSE(int kindex, int j)> value;

    static ChatSource exact(const SpectralDecomposition& sd, double beta, double lambda,
                            double delta, int jmax) {
        ChatSource s;
        s.spec = sd.spec();
        s.beta = beta;
        s.lambda = lambda;
        s.delta = delta;
        s.jmax = jmax;
        s.statistical = false;
        auto rows = std::make_shared<std::vector<std::vector<double>>>();
        for (int m = 0; m < sd.spec().n_sites; ++m) rows->push_back(sd.chat_row(beta, m, jmax));
        s.value = [rows](int m, int j) { return ValueSE{(*rows)[m][j], 0.0}; };
        return s;
    }

    static ChatSource sampled(const Estimates& est) {
        ChatSource s;
        s.spec = est.plan().spec;
        s.beta = est.plan().beta;
        s.lambda = est.plan().lambda;
        s.delta = est.plan().delta;
        s.jmax = est.plan().jmax;
        s.statistical = true;
        s.value = [&est](int m, int j) { return est.chat(m, j); };
        return s;
    }
};

namespace detail {

inline void init_report(BoundReport& r, const ChatSource& src, const std::string& name) {
    r.check = name;
    r.d = src.spec.dim;
    r.side = src.spec.side;
    r.beta = src.beta;
    r.lambda = src.lambda;
    r.delta = src.delta;
    r.statistical = src.statistical;
}

inline std::string kj_label(int m, int j) {
    return "k_index=" + std::to_string(m) + " j=" + std::to_string(j);
}

}  // namespace detail

/// Theorem-1 infrared bound and its sharper form, evaluated at every grid
/// point (k, l) with |j| <= jmax except (0, 0).  Returns {48-bound report,
/// sharp-bound report}; the sharp bound implies the 48 one pointwise.
inline std::array<BoundReport, 2> check_infrared(const ChatSource& src) {
    BoundReport r48, rsh;
    detail::init_report(r48, src, "infrared-48");
    detail::init_report(rsh, src, "infrared-sharp");
    for (int m = 0; m < src.spec.n_sites; ++m) {
        double lh = lhat(src.spec, m);
        for (int j = 0; j <= src.jmax; ++j) {
            if (m == 0 && j == 0) continue;  // excluded by definition
            double l = 2.0 * std::numbers::pi * j / src.beta;
            double b48 = ir_bound_48(src.lambda, src.delta, lh, l);
            double bsh = ir_bound_sharp(src.lambda, src.delta, lh, l);
            if (!std::isfinite(b48)) {  // degenerate denominator: trivially true
                r48.excluded.push_back(detail::kj_label(m, j));
                rsh.excluded.push_back(detail::kj_label(m, j));
                continue;
            }
            auto v = src.value(m, j);
            double tol = src.statistical ? 4.0 * v.se : 1e-9;
            r48.observe(b48 - v.mean, tol, v.se, detail::kj_label(m, j));
            rsh.observe(bsh - v.mean, tol, v.se, detail::kj_label(m, j));
        }
    }
    r48.extra["sharp_le_48_everywhere"] = true;  // algebraic, asserted below
    for (int m = 0; m < src.spec.n_sites; ++m) {
        double lh = lhat(src.spec, m);
        for (int j = 0; j <= src.jmax; ++j) {
            double l = 2.0 * std::numbers::pi * j / src.beta;
            double b48 = ir_bound_48(src.lambda, src.delta, lh, l);
            if (std::isfinite(b48) &&
                ir_bound_sharp(src.lambda, src.delta, lh, l) > b48 * (1 + 1e-12))
                r48.extra["sharp_le_48_everywhere"] = false;
        }
    }
    return {r48, rsh};
}

/// Duhamel bound chat(k, 0) <= 1/(2 lambda Lhat(k)) for k != 0.
inline BoundReport check_duhamel_bound(const ChatSource& src) {
    BoundReport r;
    detail::init_report(r, src, "duhamel");
    for (int m = 1; m < src.spec.n_sites; ++m) {
        double b = duhamel_bound(src.lambda, lhat(src.spec, m));
        if (!std::isfinite(b)) {
            r.excluded.push_back(detail::kj_label(m, 0));
            continue;
        }
        auto v = src.value(m, 0);
        double tol = src.statistical ? 4.0 * v.se : 1e-9;
        r.observe(b - v.mean, tol, v.se, detail::kj_label(m, 0));
    }
    return r;
}

/// Mean flip count per site against the Poisson-domination bound 2*beta*delta.
inline BoundReport check_flip_domination(const Estimates& est) {
    BoundReport r;
    r.check = "flip-domination";
    const auto& p = est.plan();
    r.d = p.spec.dim;
    r.side = p.spec.side;
    r.beta = p.beta;
    r.lambda = p.lambda;
    r.delta = p.delta;
    r.statistical = true;
    auto f = est.mean_flip_density();
    r.observe(2.0 * p.beta * p.delta - f.mean, 4.0 * f.se, f.se, "per-site flip count");
    r.extra["mean"] = f.mean;
    r.extra["bound"] = 2.0 * p.beta * p.delta;
    return r;
}

/// Z(h) <= zeta(||h'||inf) Z(0), tested through the per-sample difference
/// statistic; the margin is the estimated zeta - zratio gap.
inline BoundReport check_gaussian_domination(const Estimates& est, size_t hfun_index) {
    BoundReport r;
    const auto& p = est.plan();
    r.check = "gauss-dom[" + p.hfuns.at(hfun_index).label + "]";
    r.d = p.spec.dim;
    r.side = p.spec.side;
    r.beta = p.beta;
    r.lambda = p.lambda;
    r.delta = p.delta;
    r.statistical = true;
    auto gd = est.gd_margin(hfun_index);
    r.observe(gd.mean, 4.0 * gd.se, gd.se, "zeta(|h'|) - zratio(h)");
    r.extra["zratio"] = est.zratio(hfun_index).mean;
    r.extra["zeta_at_sup"] = est.zeta(p.hfuns.at(hfun_index).hprime.inf_norm()).mean;
    return r;
}

/// Z(h) <= max(Z(h_+), Z(h_-)): passes when at least one folded ratio exceeds
/// the original within statistical error.
inline BoundReport check_vertical_folding(const Estimates& est, size_t hfun_index) {
    BoundReport r;
    const auto& p = est.plan();
    r.check = "vert-pm[" + p.hfuns.at(hfun_index).label + "]";
    r.d = p.spec.dim;
    r.side = p.spec.side;
    r.beta = p.beta;
    r.lambda = p.lambda;
    r.delta = p.delta;
    r.statistical = true;
    auto vp = est.vert_margin_plus(hfun_index);
    auto vm = est.vert_margin_minus(hfun_index);
    // the better of the two folds carries the bound
    if (vp.mean / (4.0 * vp.se + 1e-300) >= vm.mean / (4.0 * vm.se + 1e-300))
        r.observe(vp.mean, 4.0 * vp.se, vp.se, "zratio(h+) - zratio(h)");
    else
        r.observe(vm.mean, 4.0 * vm.se, vm.se, "zratio(h-) - zratio(h)");
    r.extra["zratio_plus"] = est.zratio_plus(hfun_index).mean;
    r.extra["zratio_minus"] = est.zratio_minus(hfun_index).mean;
    return r;
}

/// |Z(W_{r,n})/Z(0) - zeta(r)| at the largest tracked n, within 4 SE of 0.
/// hfun_indices must list the W_{r,n} entries with ascending n.
inline BoundReport check_white_limit(const Estimates& est, double r_value,
                                     const std::vector<size_t>& hfun_indices) {
    BoundReport r;
    const auto& p = est.plan();
    r.check = "white-limit[r=" + std::to_string(r_value) + "]";
    r.d = p.spec.dim;
    r.side = p.spec.side;
    r.beta = p.beta;
    r.lambda = p.lambda;
    r.delta = p.delta;
    r.statistical = true;
    nlohmann::json table = nlohmann::json::array();
    for (size_t idx : hfun_indices) {
        auto gd = est.gd_margin(idx);  // zeta(r) - zratio(W_{r,n}); sup norm is r
        table.push_back({{"label", p.hfuns.at(idx).label},
                         {"abs_diff", std::abs(gd.mean)},
                         {"se", gd.se}});
    }
    r.extra["per_level"] = table;
    auto last = est.gd_margin(hfun_indices.back());
    r.observe(4.0 * last.se - std::abs(last.mean), 0.0, last.se,
              p.hfuns.at(hfun_indices.back()).label);
    return r;
}

struct DiffInequalityInputs {
    double chi = 0, bubble = 0;
    ChiPartials partials;
};

inline DiffInequalityInputs diff_inputs(const TorusSpec& spec, double beta, double lambda,
                                        double delta, double step = 1e-3) {
    DiffInequalityInputs in;
    SpectralDecomposition sd(spec, lambda, delta);
    in.chi = sd.susceptibility(beta);
    in.bubble = sd.bubble(beta);
    in.partials = chi_partials(spec, beta, lambda, delta, step);
    return in;
}

/// The two differential inequalities: each bound chain becomes one report.
///   4d chi^2 >= dchi/dlambda >= 4d chi^2 - 4d B chi - 2d lambda B dchi/dlambda
///                                - 8d delta B (-dchi/ddelta)
///   2 chi^2 >= -dchi/ddelta >= 2 chi^2 - 2 B chi - lambda B dchi/dlambda
///                                - 4 delta B (-dchi/ddelta)
/// Derivatives are Richardson-extrapolated central differences; the pass
/// tolerance is the propagated derivative error plus 1e-6 relative.
inline std::vector<BoundReport> check_diff_inequalities(const TorusSpec& spec, double beta,
                                                        double lambda, double delta,
                                                        double step = 1e-3) {
    auto in = diff_inputs(spec, beta, lambda, delta, step);
    double d = spec.dim;
    double chi = in.chi, B = in.bubble;
    double dl = in.partials.dchi_dlambda;
    double md = -in.partials.dchi_ddelta;
    double el = in.partials.err_dlambda, ed = in.partials.err_ddelta;

    auto mk = [&](const std::string& name, double lhs, double rhs, double err) {
        BoundReport r;
        r.check = name;
        r.d = spec.dim;
        r.side = spec.side;
        r.beta = beta;
        r.lambda = lambda;
        r.delta = delta;
        r.statistical = false;
        double tol = err + 1e-6 * std::max(std::abs(lhs), std::abs(rhs));
        r.observe(lhs - rhs, tol, 0.0, "lhs - rhs");
        r.extra = {{"lhs", lhs},        {"rhs", rhs},  {"chi", chi},
                   {"bubble", B},       {"dchi_dlambda", dl},
                   {"dchi_ddelta", -md}, {"fd_error", err}};
        return r;
    };

    std::vector<BoundReport> out;
    out.push_back(mk("di1-upper", 4 * d * chi * chi, dl, el));
    out.push_back(mk("di1-lower", dl,
                     4 * d * chi * chi - 4 * d * B * chi - 2 * d * lambda * B * dl -
                         8 * d * delta * B * md,
                     el * (1 + 2 * d * lambda * B) + ed * 8 * d * delta * B));
    out.push_back(mk("di2-upper", 2 * chi * chi, md, ed));
    out.push_back(mk("di2-lower", md,
                     2 * chi * chi - 2 * B * chi - lambda * B * dl - 4 * delta * B * md,
                     ed * (1 + 4 * delta * B) + el * lambda * B));
    // sign contracts ride along
    out[0].extra["dchi_dlambda_nonneg"] = dl >= -1e-8;
    out[2].extra["dchi_ddelta_nonpos"] = -md <= 1e-8;
    return out;
}

/// Rewritten derivative bounds: -d(chi^{-1})/dlambda <= 4d and
/// d(chi^{-1})/ddelta <= 2, by Richardson central differences of 1/chi.
inline std::vector<BoundReport> check_derivative_bounds(const TorusSpec& spec, double beta,
                                                        double lambda, double delta,
                                                        double step = 1e-3) {
    if (lambda - step < 0 || delta - step <= 0)
        throw std::domain_error("parameter stepping leaves the domain");
    auto inv_chi = [&](double l, double dd) {
        return 1.0 / SpectralDecomposition(spec, l, dd).susceptibility(beta);
    };
    auto centered = [&](auto&& f, double h) { return (f(h) - f(-h)) / (2 * h); };
    auto rich = [&](auto&& f) {
        double ch = centered(f, step), cf = centered(f, step / 2);
        double ex = (4 * cf - ch) / 3;
        return std::pair<double, double>(ex, std::abs(ex - cf));
    };
    auto [dinv_dl, el] = rich([&](double h) { return inv_chi(lambda + h, delta); });
    auto [dinv_dd, ed] = rich([&](double h) { return inv_chi(lambda, delta + h); });

    auto mk = [&](const std::string& name, double bound, double value, double err) {
        BoundReport r;
        r.check = name;
        r.d = spec.dim;
        r.side = spec.side;
        r.beta = beta;
        r.lambda = lambda;
        r.delta = delta;
        double tol = err + 1e-6 * std::max(std::abs(bound), std::abs(value));
        r.observe(bound - value, tol, 0.0, "bound - value");
        r.extra = {{"value", value}, {"bound", bound}, {"fd_error", err}};
        return r;
    };
    return {mk("dchi_inv-lambda", 4.0 * spec.dim, -dinv_dl, el),
            mk("dchi_inv-delta", 2.0, dinv_dd, ed)};
}

struct ScanRow {
    double lambda = 0;
    ValueSE chi;
};

struct ScanTable {
    std::vector<ScanRow> rows;
    bool monotone = true;
};

/// chi along an ascending lambda grid; exact mode asserts monotonicity
/// outright, sampled mode within joint error bars.
inline ScanTable scan_susceptibility_ed(const TorusSpec& spec, double beta,
                                        const std::vector<double>& lambdas, double delta) {
    ScanTable t;
    for (double l : lambdas) {
        SpectralDecomposition sd(spec, l, delta);
        t.rows.push_back({l, {sd.susceptibility(beta), 0.0}});
    }
    for (size_t i = 1; i < t.rows.size(); ++i)
        if (t.rows[i].chi.mean < t.rows[i - 1].chi.mean - 1e-10) t.monotone = false;
    return t;
}

}  // namespace tfim
