#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfim/observables.hpp"
#include "tfim/sampler.hpp"
#include "tfim/toml.hpp"

namespace tfim {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything one batch experiment needs: model, sampler budget, observable
/// selections, check list, output directory, seeds.  Parsed from TOML.
struct ExperimentConfig {
    // [model]
    int d = 1;
    int side = 4;
    double beta = 1.0;
    double lambda = 1.0;
    double delta = 1.0;

    // [sampler]
    long sweeps = 20000;
    long burn_in = 2000;
    long thinning = 10;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4};
    std::array<double, 4> move_mix{0.1, 0.4, 0.4, 0.1};

    // [observables]
    int time_grid = 64;
    int s_grid = 16;
    int jmax = 32;
    bool fourier = true;
    std::vector<int> schwinger_displacements;  // empty + schwinger_all -> all sites
    bool schwinger_all = true;
    std::vector<double> zeta_rs{0.5, 1.0};
    long batch_size = 0;  // 0: derived so that ~32 batches per chain

    // [gaussdom]
    std::vector<double> gd_rs{0.5, 1.0};
    std::vector<int> gd_levels{1, 2, 3};
    bool gd_include_asymmetric = true;
    int white_level = 5;

    // [verify]
    std::vector<std::string> checks{"irb", "duhamel", "flip"};

    // [scan]
    std::vector<double> scan_lambdas{0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5};

    // [output]
    std::string out_dir = "out";

    nlohmann::json echo;  // parsed source, for the manifest

    TorusSpec spec() const { return TorusSpec(d, side); }

    SamplerParams sampler_params(std::uint64_t seed) const {
        SamplerParams p;
        p.lambda = lambda;
        p.delta = delta;
        p.beta = beta;
        p.move_mix = move_mix;
        p.seed = seed;
        p.sweeps = sweeps;
        p.burn_in = burn_in;
        p.thinning = thinning;
        return p;
    }

    long samples_per_chain() const { return sweeps / thinning; }

    long effective_batch_size() const {
        if (batch_size > 0) return batch_size;
        return std::max<long>(1, samples_per_chain() / 32);
    }

    MeasurementPlan plan() const {
        MeasurementPlan m;
        m.spec = spec();
        m.beta = beta;
        m.lambda = lambda;
        m.delta = delta;
        m.fourier = fourier;
        m.jmax = jmax;
        if (schwinger_all) {
            m.schwinger_displacements.resize(m.spec.n_sites);
            for (int x = 0; x < m.spec.n_sites; ++x) m.schwinger_displacements[x] = x;
        } else {
            m.schwinger_displacements = schwinger_displacements;
        }
        m.time_grid = time_grid;
        m.s_grid = s_grid;
        m.zeta_rs = zeta_rs;
        m.batch_size = effective_batch_size();
        for (double r : gd_rs)
            for (int n : wave_levels())
                m.hfuns.push_back({wave_label(r, n), triangle_wave_derivative(r, n, beta), true});
        if (gd_include_asymmetric)
            m.hfuns.push_back(
                {"asym", StepFunction(beta, {0.0, beta / 4}, {1.0, -1.0 / 3}), true});
        return m;
    }

    /// gaussian-domination levels plus the white-noise-limit level, ascending
    std::vector<int> wave_levels() const {
        std::vector<int> lv = gd_levels;
        lv.push_back(white_level);
        std::sort(lv.begin(), lv.end());
        lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
        return lv;
    }

    static std::string wave_label(double r, int n) {
        std::ostringstream os;
        os << "w[r=" << r << ",n=" << n << "]";
        return os.str();
    }

    void validate() const {
        auto fail = [](const std::string& field, const std::string& why) {
            throw ConfigError("config field '" + field + "': " + why);
        };
        if (d < 1) fail("model.d", "dimension must be >= 1");
        if (side < 2 || side % 2) fail("model.side", "side must be even and >= 2");
        if (!(beta > 0)) fail("model.beta", "must be positive");
        if (lambda < 0) fail("model.lambda", "must be >= 0");
        if (!(delta > 0)) fail("model.delta", "must be positive");
        if (sweeps <= 0) fail("sampler.sweeps", "sweeps must be positive");
        if (burn_in < 0) fail("sampler.burn_in", "must be >= 0");
        if (thinning <= 0) fail("sampler.thinning", "must be positive");
        if (seeds.empty()) fail("sampler.seeds", "need at least one seed");
        for (size_t i = 0; i < seeds.size(); ++i)
            for (size_t k = i + 1; k < seeds.size(); ++k)
                if (seeds[i] == seeds[k]) fail("sampler.seeds", "seeds must be distinct");
        if (samples_per_chain() < 1) fail("sampler.sweeps", "fewer than one sample per chain");
        if (jmax < 0) fail("observables.jmax", "must be >= 0");
        if (time_grid < 1 || s_grid < 1 || time_grid % s_grid)
            fail("observables.s_grid", "must divide time_grid");
        if (white_level < 1) fail("gaussdom.white_level", "must be >= 1");
        for (double r : gd_rs)
            if (!(r > 0)) fail("gaussdom.rs", "levels require r > 0");
        for (int n : gd_levels)
            if (n < 1) fail("gaussdom.levels", "levels must be >= 1");
        if (scan_lambdas.size() < 2) fail("scan.lambdas", "need an ascending grid");
        for (size_t i = 1; i < scan_lambdas.size(); ++i)
            if (scan_lambdas[i] <= scan_lambdas[i - 1])
                fail("scan.lambdas", "grid must be strictly increasing");
        for (double l : scan_lambdas)
            if (l < 0) fail("scan.lambdas", "couplings must be >= 0");
        if (out_dir.empty()) fail("output.dir", "must not be empty");
        try {
            sampler_params(seeds[0]).validate();
            (void)plan();  // runs MeasurementPlan::validate
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config invalid: ") + e.what());
        }
    }
};

namespace detail {

template <typename T>
std::vector<T> to_vector(const toml::Value& v, const std::string& field) {
    std::vector<T> out;
    for (const auto& x : v.as_array()) {
        if constexpr (std::is_same_v<T, double>)
            out.push_back(x.as_double());
        else if constexpr (std::is_same_v<T, int>)
            out.push_back(static_cast<int>(x.as_int()));
        else if constexpr (std::is_same_v<T, std::uint64_t>)
            out.push_back(static_cast<std::uint64_t>(x.as_int()));
        else if constexpr (std::is_same_v<T, std::string>)
            out.push_back(x.as_string());
        else
            throw ConfigError("unsupported array type for " + field);
    }
    return out;
}

inline nlohmann::json value_to_json(const toml::Value& v) {
    if (v.is_int()) return v.as_int();
    if (v.is_float()) return v.as_double();
    if (v.is_bool()) return v.as_bool();
    if (v.is_string()) return v.as_string();
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& x : v.as_array()) arr.push_back(value_to_json(x));
    return arr;
}

}  // namespace detail

inline ExperimentConfig config_from_toml(const std::string& text) {
    toml::Document doc;
    try {
        doc = toml::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    c.echo = nlohmann::json::object();
    for (const auto& [section, table] : doc) {
        auto& js = c.echo[section] = nlohmann::json::object();
        for (const auto& [key, value] : table) js[key] = detail::value_to_json(value);
    }

    auto get = [&](const std::string& section, const std::string& key) -> const toml::Value* {
        auto si = doc.find(section);
        if (si == doc.end()) return nullptr;
        auto ki = si->second.find(key);
        return ki == si->second.end() ? nullptr : &ki->second;
    };
    auto known = [&](const std::string& section, std::initializer_list<std::string> keys) {
        auto si = doc.find(section);
        if (si == doc.end()) return;
        for (const auto& [key, value] : si->second) {
            bool ok = false;
            for (const auto& k : keys) ok = ok || k == key;
            if (!ok) throw ConfigError("unknown config field '" + section + "." + key + "'");
        }
    };

    known("model", {"d", "side", "beta", "lambda", "delta"});
    known("sampler", {"sweeps", "burn_in", "thinning", "seeds", "move_mix"});
    known("observables", {"time_grid", "s_grid", "jmax", "fourier", "schwinger", "zeta_r",
                          "batch_size"});
    known("gaussdom", {"rs", "levels", "include_asymmetric", "white_level"});
    known("verify", {"checks"});
    known("scan", {"lambdas"});
    known("output", {"dir"});
    for (const auto& [section, table] : doc) {
        static const char* sections[] = {"model",    "sampler", "observables", "gaussdom",
                                         "verify",   "scan",    "output"};
        bool ok = false;
        for (const char* s : sections) ok = ok || section == s;
        if (!ok) throw ConfigError("unknown config section '" + section + "'");
    }

    try {
        if (auto* v = get("model", "d")) c.d = static_cast<int>(v->as_int());
        if (auto* v = get("model", "side")) c.side = static_cast<int>(v->as_int());
        if (auto* v = get("model", "beta")) c.beta = v->as_double();
        if (auto* v = get("model", "lambda")) c.lambda = v->as_double();
        if (auto* v = get("model", "delta")) c.delta = v->as_double();

        if (auto* v = get("sampler", "sweeps")) c.sweeps = v->as_int();
        if (auto* v = get("sampler", "burn_in")) c.burn_in = v->as_int();
        if (auto* v = get("sampler", "thinning")) c.thinning = v->as_int();
        if (auto* v = get("sampler", "seeds"))
            c.seeds = detail::to_vector<std::uint64_t>(*v, "sampler.seeds");
        if (auto* v = get("sampler", "move_mix")) {
            auto m = detail::to_vector<double>(*v, "sampler.move_mix");
            if (m.size() != 4)
                throw ConfigError("sampler.move_mix needs 4 entries (flip, insert, delete, shift)");
            std::copy(m.begin(), m.end(), c.move_mix.begin());
        }

        if (auto* v = get("observables", "time_grid")) c.time_grid = static_cast<int>(v->as_int());
        if (auto* v = get("observables", "s_grid")) c.s_grid = static_cast<int>(v->as_int());
        if (auto* v = get("observables", "jmax")) c.jmax = static_cast<int>(v->as_int());
        if (auto* v = get("observables", "fourier")) c.fourier = v->as_bool();
        if (auto* v = get("observables", "batch_size")) c.batch_size = v->as_int();
        if (auto* v = get("observables", "schwinger")) {
            if (v->is_string()) {
                if (v->as_string() != "all")
                    throw ConfigError("observables.schwinger: expected \"all\" or an index list");
                c.schwinger_all = true;
            } else {
                c.schwinger_all = false;
                c.schwinger_displacements =
                    detail::to_vector<int>(*v, "observables.schwinger");
            }
        }
        if (auto* v = get("observables", "zeta_r"))
            c.zeta_rs = detail::to_vector<double>(*v, "observables.zeta_r");

        if (auto* v = get("gaussdom", "rs")) c.gd_rs = detail::to_vector<double>(*v, "gaussdom.rs");
        if (auto* v = get("gaussdom", "levels"))
            c.gd_levels = detail::to_vector<int>(*v, "gaussdom.levels");
        if (auto* v = get("gaussdom", "include_asymmetric"))
            c.gd_include_asymmetric = v->as_bool();
        if (auto* v = get("gaussdom", "white_level")) c.white_level = static_cast<int>(v->as_int());

        if (auto* v = get("verify", "checks"))
            c.checks = detail::to_vector<std::string>(*v, "verify.checks");

        if (auto* v = get("scan", "lambdas"))
            c.scan_lambdas = detail::to_vector<double>(*v, "scan.lambdas");

        if (auto* v = get("output", "dir")) c.out_dir = v->as_string();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    c.validate();
    return c;
}

inline ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_toml(buf.str());
}

}  // namespace tfim
