// Experiment runner for the worldline sampler, the exact-diagonalization
// reference, and the inequality checks.  Configuration comes from a TOML
// file; results land in the output directory as JSON and CSV.
//
// Exit codes: 0 success / all checks pass, 1 check failure, 2 usage error,
// 3 invalid configuration.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfim/runner.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool mc = false;
    bool ed = false;
};

int finish(const tfim::RunOutput& out) {
    for (const auto& r : out.reports)
        std::printf("%-28s %s  margin=%.6g tol=%.6g  (%s)\n", r.check.c_str(),
                    r.pass ? "PASS" : "FAIL", r.margin, r.tolerance, r.worst_location.c_str());
    std::printf("artifacts: %s\n", out.dir.string().c_str());
    return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"continuous-time worldline sampler and exact checks for the "
                 "transverse-field Ising model on finite tori"};
    app.require_subcommand(1);

    CliOptions opt;
    auto add_common = [&](CLI::App* cmd, bool with_source) {
        cmd->add_option("--config", opt.config_path, "TOML experiment configuration");
        cmd->add_option("--seed", opt.seed, "override: run a single chain with this seed")
            ->each([&](const std::string&) { opt.seed_set = true; });
        cmd->add_option("--out", opt.out_dir, "output directory override");
        if (with_source) {
            cmd->add_flag("--mc", opt.mc, "use the sampled source");
            cmd->add_flag("--ed", opt.ed, "use the exact-diagonalization source");
        }
    };

    auto* c_sample = app.add_subcommand("sample", "run the worldline sampler and estimators");
    add_common(c_sample, false);
    auto* c_ed = app.add_subcommand("ed", "exact-diagonalization reference run");
    add_common(c_ed, false);
    auto* c_irb = app.add_subcommand("verify-irb", "infrared and Duhamel bound checks");
    add_common(c_irb, true);
    auto* c_di = app.add_subcommand("verify-di",
                                    "differential inequalities and derivative bounds");
    add_common(c_di, false);
    auto* c_gd = app.add_subcommand("gauss-dom",
                                    "Gaussian domination and white-noise-limit checks");
    add_common(c_gd, false);
    auto* c_scan = app.add_subcommand("scan", "susceptibility along a coupling grid");
    add_common(c_scan, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        tfim::ExperimentConfig cfg;
        if (!opt.config_path.empty()) cfg = tfim::config_from_file(opt.config_path);
        if (opt.seed_set) cfg.seeds = {opt.seed};
        if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
        cfg.validate();

        using tfim::SourceMode;
        if (opt.mc && opt.ed) {
            std::cerr << "choose one of --mc/--ed\n";
            return 2;
        }

        if (c_sample->parsed()) {
            std::vector<std::string> checks;
            for (const auto& c : cfg.checks)
                if (c == "irb" || c == "duhamel" || c == "flip") checks.push_back(c);
            return finish(tfim::run_experiment(cfg, SourceMode::mc, checks));
        }
        if (c_ed->parsed()) {
            std::vector<std::string> checks;
            for (const auto& c : cfg.checks)
                if (c == "irb" || c == "duhamel" || c == "di" || c == "deriv")
                    checks.push_back(c);
            return finish(tfim::run_experiment(cfg, SourceMode::ed, checks));
        }
        if (c_irb->parsed()) {
            SourceMode mode = opt.mc ? SourceMode::mc : SourceMode::ed;
            return finish(tfim::run_experiment(cfg, mode, {"irb", "duhamel"}));
        }
        if (c_di->parsed()) {
            return finish(tfim::run_experiment(cfg, SourceMode::ed, {"di", "deriv"}));
        }
        if (c_gd->parsed()) {
            return finish(tfim::run_experiment(cfg, SourceMode::mc, {"gauss-dom", "white"}));
        }
        if (c_scan->parsed()) {
            SourceMode mode = opt.mc ? SourceMode::mc : SourceMode::ed;
            return finish(tfim::run_scan(cfg, mode));
        }
        return 2;
    } catch (const tfim::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
