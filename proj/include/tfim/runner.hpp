#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tfim/config.hpp"
#include "tfim/ed.hpp"
#include "tfim/sampler.hpp"
#include "tfim/verify.hpp"

namespace tfim {

enum class SourceMode { mc, ed };

namespace run_detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

inline std::string git_hash() {
    FILE* p = ::popen("git rev-parse HEAD 2>/dev/null", "r");
    if (!p) return "unknown";
    char buf[64] = {0};
    std::string out;
    if (std::fgets(buf, sizeof buf, p)) out = buf;
    ::pclose(p);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

inline int thread_budget(int n_chains) {
    int cap = static_cast<int>(std::thread::hardware_concurrency());
    if (cap < 1) cap = 1;
    if (const char* env = std::getenv("TFIM_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) cap = v;
    }
    return std::min(cap, n_chains);
}

}  // namespace run_detail

/// All per-chain results of a sampling run plus the canonical merges.
struct McRun {
    MeasurementPlan plan;
    std::vector<EstimatorAccumulator> per_chain;
    EstimatorAccumulator merged;
    std::optional<EstimatorAccumulator> replica[2];  // split by chain order parity
    nlohmann::json chain_stats = nlohmann::json::array();
    std::vector<nlohmann::json> checkpoints;
};

/// Run one chain per seed (concurrently up to the TFIM_THREADS budget) and
/// merge the accumulators in canonical seed order.
inline McRun run_chains(const ExperimentConfig& cfg) {
    McRun out;
    out.plan = cfg.plan();
    Measurer meas(out.plan);
    const int n = static_cast<int>(cfg.seeds.size());
    out.per_chain.assign(n, EstimatorAccumulator());
    out.checkpoints.assign(n, nlohmann::json());
    std::vector<nlohmann::json> stats(n);

    TorusSpec spec = cfg.spec();
    std::atomic<int> next{0};
    auto work = [&]() {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            SamplerParams params = cfg.sampler_params(cfg.seeds[i]);
            Chain chain(spec, params);
            EstimatorAccumulator acc(meas.slots().dim(), out.plan.batch_size, cfg.seeds[i]);
            for (long s = 0; s < params.burn_in; ++s) chain.sweep();
            long samples = cfg.samples_per_chain();
            for (long s = 0; s < samples; ++s) {
                for (long t = 0; t < params.thinning; ++t) chain.sweep();
                acc.add(meas.measure(chain.config()));
            }
            out.per_chain[i] = std::move(acc);
            out.checkpoints[i] = chain.checkpoint();
            nlohmann::json cs = {{"seed", cfg.seeds[i]}};
            const char* names[] = {"line_flip", "pair_insert", "pair_delete", "shift"};
            for (int k = 0; k < 4; ++k) {
                auto kind = static_cast<MoveKind>(k);
                cs["proposed"][names[k]] = chain.proposals(kind);
                cs["accepted"][names[k]] = chain.accepts(kind);
            }
            stats[i] = std::move(cs);
        }
    };
    int budget = run_detail::thread_budget(n);
    std::vector<std::thread> pool;
    for (int t = 0; t < budget; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    out.merged = out.per_chain[0];
    for (int i = 1; i < n; ++i) out.merged.merge(out.per_chain[i]);
    if (n >= 2) {
        for (int parity = 0; parity < 2; ++parity) {
            std::optional<EstimatorAccumulator> half;
            for (int i = parity; i < n; i += 2) {
                if (!half)
                    half = out.per_chain[i];
                else
                    half->merge(out.per_chain[i]);
            }
            out.replica[parity] = std::move(half);
        }
    }
    for (auto& s : stats) out.chain_stats.push_back(std::move(s));
    return out;
}

// ---- artifact writers ----

namespace run_detail {

inline std::string schwinger_csv(const MeasurementPlan& plan,
                                 const std::function<ValueSE(int, int)>& value) {
    std::string s = "x_index,t,mean,se\n";
    for (size_t xi = 0; xi < plan.schwinger_displacements.size(); ++xi)
        for (int g = 0; g < plan.time_grid; ++g) {
            auto v = value(static_cast<int>(xi), g);
            s += std::to_string(plan.schwinger_displacements[xi]) + "," +
                 fmt(plan.beta * g / plan.time_grid) + "," + fmt(v.mean) + "," + fmt(v.se) +
                 "\n";
        }
    return s;
}

inline std::string chat_csv(const ChatSource& src) {
    std::string s;
    for (int a = 0; a < src.spec.dim; ++a) s += "k_index_" + std::to_string(a) + ",";
    s += "j,l,mean,se,bound48,bound_sharp\n";
    for (int m = 0; m < src.spec.n_sites; ++m) {
        double lh = lhat(src.spec, m);
        for (int j = -src.jmax; j <= src.jmax; ++j) {
            auto v = j >= 0 ? src.value(m, j)
                            : src.value(negate_momentum_index(src.spec, m), -j);
            double l = 2.0 * std::numbers::pi * j / src.beta;
            std::string row;
            for (int a = 0; a < src.spec.dim; ++a)
                row += std::to_string(src.spec.coord(m, a)) + ",";
            row += std::to_string(j) + "," + fmt(l) + "," + fmt(v.mean) + "," + fmt(v.se) +
                   "," + fmt(ir_bound_48(src.lambda, src.delta, lh, l)) + "," +
                   fmt(ir_bound_sharp(src.lambda, src.delta, lh, l)) + "\n";
            s += row;
        }
    }
    return s;
}

/// One bound-curve file per momentum: chat and both bounds along l.
inline void write_bound_curves(const std::filesystem::path& dir, const ChatSource& src) {
    for (int m = 0; m < src.spec.n_sites; ++m) {
        double lh = lhat(src.spec, m);
        std::string s = "l,chat,bound48,bound_sharp\n";
        for (int j = -src.jmax; j <= src.jmax; ++j) {
            auto v = j >= 0 ? src.value(m, j)
                            : src.value(negate_momentum_index(src.spec, m), -j);
            double l = 2.0 * std::numbers::pi * j / src.beta;
            s += fmt(l) + "," + fmt(v.mean) + "," + fmt(ir_bound_48(src.lambda, src.delta, lh, l)) +
                 "," + fmt(ir_bound_sharp(src.lambda, src.delta, lh, l)) + "\n";
        }
        write_file(dir / ("bound_curve_k" + std::to_string(m) + ".csv"), s);
    }
}

}  // namespace run_detail

struct RunOutput {
    int exit_code = 0;
    std::filesystem::path dir;
    std::vector<BoundReport> reports;
};

/// zratio(W_{r,n}) against zeta(r) for the configured levels, one row per
/// wave function; written by the gauss-dom pipeline as zratio_vs_n.csv.
inline void write_zratio_table(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                               const Estimates& est) {
    std::string csv = "label,r,n,zratio,se,zeta,zeta_se,diff,diff_se\n";
    const auto& plan = est.plan();
    size_t idx = 0;
    for (double r : cfg.gd_rs)
        for (int n : cfg.wave_levels()) {
            if (idx >= plan.hfuns.size()) break;
            auto z = est.zratio(idx);
            auto zr = est.zeta(r);
            auto d = est.gd_margin(idx);
            csv += plan.hfuns[idx].label + "," + run_detail::fmt(r) + "," + std::to_string(n) +
                   "," + run_detail::fmt(z.mean) + "," + run_detail::fmt(z.se) + "," +
                   run_detail::fmt(zr.mean) + "," + run_detail::fmt(zr.se) + "," +
                   run_detail::fmt(d.mean) + "," + run_detail::fmt(d.se) + "\n";
            ++idx;
        }
    run_detail::write_file(dir / "zratio_vs_n.csv", csv);
}

/// Execute one experiment: build the requested value source (sampled or
/// exact), write the artifact files, run the requested checks.
/// Check names: irb, duhamel, flip, gauss-dom, white, di, deriv.
inline RunOutput run_experiment(const ExperimentConfig& cfg, SourceMode mode,
                                std::vector<std::string> checks) {
    cfg.validate();
    namespace fs = std::filesystem;
    RunOutput out;
    out.dir = fs::path(cfg.out_dir);
    fs::create_directories(out.dir);

    nlohmann::json manifest = {{"config", cfg.echo},
                               {"seeds", cfg.seeds},
                               {"git", run_detail::git_hash()},
                               {"source", mode == SourceMode::mc ? "mc" : "ed"}};
    run_detail::write_file(out.dir / "manifest.json", manifest.dump(2) + "\n");

    const TorusSpec spec = cfg.spec();
    MeasurementPlan plan = cfg.plan();

    std::optional<McRun> mc;
    std::optional<Estimates> est;
    std::optional<SpectralDecomposition> sd;
    if (mode == SourceMode::mc) {
        mc = run_chains(cfg);
        est.emplace(mc->plan, mc->merged);
    } else {
        sd.emplace(spec, cfg.lambda, cfg.delta);
    }

    ChatSource src = mode == SourceMode::mc
                         ? ChatSource::sampled(*est)
                         : ChatSource::exact(*sd, cfg.beta, cfg.lambda, cfg.delta, cfg.jmax);

    // schwinger.csv
    auto schwinger_value = [&](int xi, int g) -> ValueSE {
        if (mode == SourceMode::mc) return est->schwinger(xi, g);
        double t = cfg.beta * g / plan.time_grid;
        return {sd->schwinger(cfg.beta, plan.schwinger_displacements[xi], t), 0.0};
    };
    run_detail::write_file(out.dir / "schwinger.csv",
                           run_detail::schwinger_csv(plan, schwinger_value));

    if (plan.fourier) {
        run_detail::write_file(out.dir / "chat.csv", run_detail::chat_csv(src));
        run_detail::write_bound_curves(out.dir, src);
    }

    // scalars.json
    nlohmann::json scalars;
    if (mode == SourceMode::mc) {
        auto chi = est->susceptibility();
        scalars["chi"] = {{"mean", chi.mean}, {"se", chi.se}};
        if (mc->replica[0] && mc->replica[1] && plan.fourier) {
            auto b = bubble_estimate(plan, *mc->replica[0], *mc->replica[1]);
            scalars["bubble"] = {{"mean", b.mean}, {"se", b.se}, {"tail", b.tail},
                                 {"jmax", b.jmax}};
        }
        scalars["zeta"] = nlohmann::json::array();
        for (double r : plan.zeta_rs) {
            auto z = est->zeta(r);
            scalars["zeta"].push_back({{"r", r}, {"mean", z.mean}, {"se", z.se}});
        }
        auto f = est->mean_flip_density();
        scalars["flip_density"] = {{"mean", f.mean},
                                   {"se", f.se},
                                   {"bound", 2.0 * cfg.beta * cfg.delta}};
        auto e = est->energy();
        double iat = est->energy_iat();
        scalars["diagnostics"] = {
            {"energy", {{"mean", e.mean}, {"se", e.se}}},
            {"energy_iat_sweeps", iat * cfg.thinning},
            {"burn_in_used", cfg.burn_in},
            {"burn_in_recommended", 10.0 * iat * cfg.thinning},
            {"burn_in_sufficient", cfg.burn_in >= 10.0 * iat * cfg.thinning},
            {"chains", mc->chain_stats}};
    } else {
        scalars["chi"] = {{"mean", sd->susceptibility(cfg.beta)}, {"se", 0.0}};
        scalars["bubble"] = {{"mean", sd->bubble(cfg.beta)}, {"se", 0.0}, {"tail", 0.0}};
        scalars["zeta"] = nlohmann::json::array();
    }
    run_detail::write_file(out.dir / "scalars.json", scalars.dump(2) + "\n");

    // checkpoints
    if (mode == SourceMode::mc) {
        fs::create_directories(out.dir / "checkpoints");
        for (size_t i = 0; i < cfg.seeds.size(); ++i)
            run_detail::write_file(
                out.dir / "checkpoints" / ("chain_" + std::to_string(cfg.seeds[i]) + ".json"),
                mc->checkpoints[i].dump() + "\n");
    }

    // checks
    for (const auto& name : checks) {
        if (name == "irb") {
            auto [r48, rsh] = check_infrared(src);
            out.reports.push_back(r48);
            out.reports.push_back(rsh);
        } else if (name == "duhamel") {
            out.reports.push_back(check_duhamel_bound(src));
        } else if (name == "flip") {
            if (mode != SourceMode::mc) throw ConfigError("check 'flip' needs the mc source");
            out.reports.push_back(check_flip_domination(*est));
        } else if (name == "gauss-dom") {
            if (mode != SourceMode::mc) throw ConfigError("check 'gauss-dom' needs the mc source");
            for (size_t i = 0; i < plan.hfuns.size(); ++i) {
                out.reports.push_back(check_gaussian_domination(*est, i));
                out.reports.push_back(check_vertical_folding(*est, i));
            }
        } else if (name == "white") {
            if (mode != SourceMode::mc) throw ConfigError("check 'white' needs the mc source");
            auto levels = cfg.wave_levels();
            for (size_t ri = 0; ri < cfg.gd_rs.size(); ++ri) {
                std::vector<size_t> idx;  // wave hfuns are level-ascending per r
                for (size_t nj = 0; nj < levels.size(); ++nj)
                    idx.push_back(ri * levels.size() + nj);
                out.reports.push_back(check_white_limit(*est, cfg.gd_rs[ri], idx));
            }
            write_zratio_table(out.dir, cfg, *est);
        } else if (name == "di") {
            auto rs = check_diff_inequalities(spec, cfg.beta, cfg.lambda, cfg.delta);
            out.reports.insert(out.reports.end(), rs.begin(), rs.end());
        } else if (name == "deriv") {
            auto rs = check_derivative_bounds(spec, cfg.beta, cfg.lambda, cfg.delta);
            out.reports.insert(out.reports.end(), rs.begin(), rs.end());
        } else {
            throw ConfigError("unknown check '" + name + "'");
        }
    }

    nlohmann::json verify = nlohmann::json::array();
    bool all_pass = true;
    for (const auto& r : out.reports) {
        verify.push_back(to_json(r));
        all_pass = all_pass && r.pass;
    }
    run_detail::write_file(out.dir / "verify.json", verify.dump(2) + "\n");
    out.exit_code = all_pass ? 0 : 1;
    return out;
}

/// chi along the configured lambda grid; writes chi_scan.csv (lambda,chi).
inline RunOutput run_scan(const ExperimentConfig& cfg, SourceMode mode) {
    cfg.validate();
    namespace fs = std::filesystem;
    RunOutput out;
    out.dir = fs::path(cfg.out_dir);
    fs::create_directories(out.dir);
    std::string csv = "lambda,chi\n";
    std::vector<double> chis;
    if (mode == SourceMode::ed) {
        auto table = scan_susceptibility_ed(cfg.spec(), cfg.beta, cfg.scan_lambdas, cfg.delta);
        for (const auto& row : table.rows) {
            csv += run_detail::fmt(row.lambda) + "," + run_detail::fmt(row.chi.mean) + "\n";
            chis.push_back(row.chi.mean);
        }
        out.exit_code = table.monotone ? 0 : 1;
    } else {
        bool monotone = true;
        double prev = -std::numeric_limits<double>::infinity();
        double prev_se = 0.0;
        for (double l : cfg.scan_lambdas) {
            ExperimentConfig point = cfg;
            point.lambda = l;
            McRun mc = run_chains(point);
            Estimates est(mc.plan, mc.merged);
            auto chi = est.susceptibility();
            csv += run_detail::fmt(l) + "," + run_detail::fmt(chi.mean) + "\n";
            if (chi.mean < prev - 4.0 * (chi.se + prev_se)) monotone = false;
            prev = chi.mean;
            prev_se = chi.se;
        }
        out.exit_code = monotone ? 0 : 1;
    }
    run_detail::write_file(out.dir / "chi_scan.csv", csv);
    nlohmann::json manifest = {{"config", cfg.echo},
                               {"seeds", cfg.seeds},
                               {"git", run_detail::git_hash()},
                               {"source", mode == SourceMode::mc ? "mc" : "ed"}};
    run_detail::write_file(out.dir / "manifest.json", manifest.dump(2) + "\n");
    return out;
}

}  // namespace tfim
