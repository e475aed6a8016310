#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "promo/common.hpp"

namespace promo {

// Flat key=value run configuration. The identity hash covers every key
// that defines the trained artifact (data, model, training, ablation
// flags); runtime-only keys (sampler mode, eval ranges, output paths) are
// excluded so one checkpoint serves sampling, eval and benchmarks.

struct RunConfig {
    // data
    int h = 64, w = 64;
    int garment_h = 32, garment_w = 32;
    int patch = 4;
    int n_max = 2;
    double style_null_rate = 0.1;
    uint64_t train_seed_lo = 0;
    int train_seeds = 1024;
    uint64_t eval_seed_lo = 1000000;
    int eval_seeds = 100;
    std::string dataset_dir;

    // model
    int layers = 4;
    int d_model = 48;
    int n_heads = 2;
    int d_freq = 32;

    // training
    int batch = 4;
    int steps = 2000;
    double lambda = 0.5;
    double lr = 2e-3;
    int warmup_steps = 100;
    uint64_t seed = 1;
    int ckpt_every = 1000;

    // sampler / eval
    int sample_steps = 20;
    std::string mode = "cached";  // full | cached
    double cfg_scale = 1.0;       // 1 = guidance off

    // ablation flags
    bool no_rope_groups = false;
    bool no_weighted_loss = false;
    bool no_merge = false;
    bool no_cache = false;

    // harness
    std::string out_dir = "out";
    std::string ablate_flags = "baseline,no_rope_groups,no_weighted_loss,no_merge,no_cache";

    void validate() const {
        check(lambda >= 0.0 && lambda < 1.0, "config: lambda must be in [0,1)");
        check(mode == "full" || mode == "cached", "config: mode must be full|cached");
        check(steps >= 0 && batch >= 1 && sample_steps >= 1, "config: bad step counts");
        check(train_seeds >= 1 && eval_seeds >= 1, "config: bad seed ranges");
        check(ckpt_every >= 1, "config: ckpt_every must be >= 1");
        check(cfg_scale > 0.0, "config: cfg_scale must be positive");
    }

    double effective_lambda() const { return no_weighted_loss ? 0.0 : lambda; }

    /// Canonical serialization of the identity subset.
    std::string identity_string() const {
        std::ostringstream os;
        os << "h=" << h << ";w=" << w << ";garment_h=" << garment_h << ";garment_w=" << garment_w
           << ";patch=" << patch << ";n_max=" << n_max << ";style_null_rate=" << style_null_rate
           << ";train_seed_lo=" << train_seed_lo << ";train_seeds=" << train_seeds
           << ";layers=" << layers << ";d_model=" << d_model << ";n_heads=" << n_heads
           << ";d_freq=" << d_freq << ";batch=" << batch << ";steps=" << steps
           << ";lambda=" << lambda << ";lr=" << lr << ";warmup_steps=" << warmup_steps
           << ";seed=" << seed << ";no_rope_groups=" << no_rope_groups
           << ";no_weighted_loss=" << no_weighted_loss << ";no_merge=" << no_merge
           << ";no_cache=" << no_cache;
        return os.str();
    }

    uint64_t identity_hash() const {
        const std::string s = identity_string();
        uint64_t h64 = 1469598103934665603ULL;
        for (char c : s) h64 = (h64 ^ uint64_t(uint8_t(c))) * 1099511628211ULL;
        return h64;
    }

    std::string identity_hash_hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)identity_hash());
        return buf;
    }

    /// Output directory after the PROMO_OUT override.
    std::string resolved_out_dir() const {
        if (const char* env = std::getenv("PROMO_OUT"); env && *env) return env;
        return out_dir;
    }
};

namespace config_detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "no") return false;
    throw contract_error("config: bad boolean '" + v + "'");
}

}  // namespace config_detail

inline void apply_config_kv(RunConfig& c, const std::string& key, const std::string& value) {
    using config_detail::parse_bool;
    const std::map<std::string, std::function<void(const std::string&)>> setters = {
        {"h", [&](const std::string& v) { c.h = std::stoi(v); }},
        {"w", [&](const std::string& v) { c.w = std::stoi(v); }},
        {"garment_h", [&](const std::string& v) { c.garment_h = std::stoi(v); }},
        {"garment_w", [&](const std::string& v) { c.garment_w = std::stoi(v); }},
        {"patch", [&](const std::string& v) { c.patch = std::stoi(v); }},
        {"n_max", [&](const std::string& v) { c.n_max = std::stoi(v); }},
        {"style_null_rate", [&](const std::string& v) { c.style_null_rate = std::stod(v); }},
        {"train_seed_lo", [&](const std::string& v) { c.train_seed_lo = std::stoull(v); }},
        {"train_seeds", [&](const std::string& v) { c.train_seeds = std::stoi(v); }},
        {"eval_seed_lo", [&](const std::string& v) { c.eval_seed_lo = std::stoull(v); }},
        {"eval_seeds", [&](const std::string& v) { c.eval_seeds = std::stoi(v); }},
        {"dataset_dir", [&](const std::string& v) { c.dataset_dir = v; }},
        {"layers", [&](const std::string& v) { c.layers = std::stoi(v); }},
        {"d_model", [&](const std::string& v) { c.d_model = std::stoi(v); }},
        {"n_heads", [&](const std::string& v) { c.n_heads = std::stoi(v); }},
        {"d_freq", [&](const std::string& v) { c.d_freq = std::stoi(v); }},
        {"batch", [&](const std::string& v) { c.batch = std::stoi(v); }},
        {"steps", [&](const std::string& v) { c.steps = std::stoi(v); }},
        {"lambda", [&](const std::string& v) { c.lambda = std::stod(v); }},
        {"lr", [&](const std::string& v) { c.lr = std::stod(v); }},
        {"warmup_steps", [&](const std::string& v) { c.warmup_steps = std::stoi(v); }},
        {"seed", [&](const std::string& v) { c.seed = std::stoull(v); }},
        {"ckpt_every", [&](const std::string& v) { c.ckpt_every = std::stoi(v); }},
        {"sample_steps", [&](const std::string& v) { c.sample_steps = std::stoi(v); }},
        {"mode", [&](const std::string& v) { c.mode = v; }},
        {"cfg_scale", [&](const std::string& v) { c.cfg_scale = std::stod(v); }},
        {"no_rope_groups", [&](const std::string& v) { c.no_rope_groups = parse_bool(v); }},
        {"no_weighted_loss", [&](const std::string& v) { c.no_weighted_loss = parse_bool(v); }},
        {"no_merge", [&](const std::string& v) { c.no_merge = parse_bool(v); }},
        {"no_cache", [&](const std::string& v) { c.no_cache = parse_bool(v); }},
        {"out_dir", [&](const std::string& v) { c.out_dir = v; }},
        {"ablate_flags", [&](const std::string& v) { c.ablate_flags = v; }},
    };
    auto it = setters.find(key);
    check(it != setters.end(), "config: unknown key '" + key + "'");
    it->second(value);
}

inline RunConfig parse_config_text(const std::string& text) {
    RunConfig c;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = config_detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        check(eq != std::string::npos, "config: missing '=' on line " + std::to_string(lineno));
        apply_config_kv(c, config_detail::trim(t.substr(0, eq)), config_detail::trim(t.substr(eq + 1)));
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    check(bool(is), "config: cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace promo
