#pragma once

#include <chrono>
#include <cmath>
#include <vector>

#include "promo/model.hpp"
#include "promo/pipeline.hpp"
#include "promo/rng.hpp"

namespace promo {

// Euler flow-matching sampler. Cached mode runs one full forward at the
// first timestep, captures per-layer condition key/value blocks, and
// integrates the remaining steps with queries over latent + style only.
// The cached trajectory equals a reference run whose condition-token
// modulation stays pinned to the first timestep.

struct SamplerConfig {
    int steps = 20;
    std::vector<double> schedule;  // empty = uniform; else 1 = t_0 > ... > t_S = 0
    enum class Mode { full, cached } mode = Mode::cached;
    uint64_t seed = 0;

    std::vector<double> resolved_schedule() const {
        std::vector<double> ts = schedule;
        if (ts.empty()) {
            check(steps >= 1, "sampler: steps must be >= 1");
            ts.resize(size_t(steps) + 1);
            for (int k = 0; k <= steps; ++k) ts[k] = 1.0 - double(k) / steps;
            ts.back() = 0.0;
        }
        check(ts.size() >= 2 && ts.front() == 1.0 && ts.back() == 0.0,
              "sampler: schedule endpoints must be 1 and 0");
        for (size_t i = 1; i < ts.size(); ++i)
            check(ts[i] < ts[i - 1], "sampler: schedule must be strictly decreasing");
        return ts;
    }
};

/// Conditioning shared across one trajectory (no latent).
struct SampleConditioning {
    std::vector<CondGroup<float>> conditions;
    std::vector<int> style_tokens;
    std::vector<Rope3Coord> latent_coords;
    int lat_h = 0, lat_w = 0;
};

inline Mat<float> seeded_noise(uint64_t seed, int rows, int cols) {
    Rng rng(seed, 0x6e6f697365ULL);  // dedicated noise stream
    Mat<float> m(rows, cols);
    for (auto& v : m.a) v = float(rng.normal());
    return m;
}

namespace sampler_detail {

inline ModelInput<float> assemble(const SampleConditioning& c, const Mat<float>& z, double t,
                                  bool with_conditions) {
    ModelInput<float> in;
    in.latent = z;
    in.latent_coords = c.latent_coords;
    in.style_tokens = c.style_tokens;
    if (with_conditions) in.conditions = c.conditions;
    in.t = t;
    return in;
}

}  // namespace sampler_detail

/// Plain Euler integration from seeded noise: z <- z - (t_k - t_{k+1}) * v.
/// `freeze_cond_t` pins condition modulation (the cached-mode reference).
inline TokenGrid euler_sample(const ModelParams<float>& p, const SampleConditioning& c,
                              const SamplerConfig& cfg,
                              double freeze_cond_t = std::numeric_limits<double>::quiet_NaN()) {
    const std::vector<double> ts = cfg.resolved_schedule();
    const int n_tok = c.lat_h * c.lat_w;
    Mat<float> z = seeded_noise(cfg.seed, n_tok, p.cfg.d_token);
    for (size_t k = 0; k + 1 < ts.size(); ++k) {
        ModelInput<float> in = sampler_detail::assemble(c, z, ts[k], true);
        ForwardOptions<float> opts;
        opts.freeze_cond_t = freeze_cond_t;
        const Mat<float> v = model_forward(p, in, opts);
        const float dt = float(ts[k] - ts[k + 1]);
        for (size_t i = 0; i < z.a.size(); ++i) z.a[i] -= dt * v.a[i];
    }
    return mat_to_grid(z, c.lat_h, c.lat_w);
}

/// Temporal self-reference: capture condition KV at t_0, then integrate
/// with live queries only ([z_t, style] per step).
inline TokenGrid cached_sample(const ModelParams<float>& p, const SampleConditioning& c,
                               const SamplerConfig& cfg) {
    const std::vector<double> ts = cfg.resolved_schedule();
    const int n_tok = c.lat_h * c.lat_w;
    Mat<float> z = seeded_noise(cfg.seed, n_tok, p.cfg.d_token);

    KVCacheSet<float> cache;
    {
        ModelInput<float> in = sampler_detail::assemble(c, z, ts[0], true);
        ForwardOptions<float> opts;
        opts.capture = &cache;
        const Mat<float> v = model_forward(p, in, opts);
        const float dt = float(ts[0] - ts[1]);
        for (size_t i = 0; i < z.a.size(); ++i) z.a[i] -= dt * v.a[i];
    }
    for (size_t k = 1; k + 1 < ts.size(); ++k) {
        ModelInput<float> in = sampler_detail::assemble(c, z, ts[k], false);
        ForwardOptions<float> opts;
        opts.reuse = &cache;
        const Mat<float> v = model_forward(p, in, opts);
        const float dt = float(ts[k] - ts[k + 1]);
        for (size_t i = 0; i < z.a.size(); ++i) z.a[i] -= dt * v.a[i];
    }
    return mat_to_grid(z, c.lat_h, c.lat_w);
}

inline TokenGrid run_sampler(const ModelParams<float>& p, const SampleConditioning& c,
                             const SamplerConfig& cfg) {
    return cfg.mode == SamplerConfig::Mode::cached ? cached_sample(p, c, cfg)
                                                   : euler_sample(p, c, cfg);
}

// ---------------------------------------------------------------------------
// Inference benchmark (cached vs full on a fixed workload).
// ---------------------------------------------------------------------------

struct BenchRow {
    std::string mode;
    int steps = 0;
    int tokens_latent = 0, tokens_text = 0, tokens_cond = 0;
    double wall_ms_median = 0.0;
    double attn_flops_per_pass = 0.0;  // estimate from segment lengths
};

struct BenchReport {
    BenchRow full, cached;
    double speedup = 0.0;
};

namespace sampler_detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Attention FLOPs for one integration pass: 2 * Q rows * K rows * d per
/// layer for logits plus the same for prob-value products.
inline double attn_flops(const ModelConfig& cfg, int steps, int live, int total, bool cached) {
    double fl = 0.0;
    const double per_step_full = 4.0 * double(total) * total * cfg.d_model;
    const double per_step_live = 4.0 * double(live) * total * cfg.d_model;
    if (cached)
        fl = per_step_full + double(steps - 1) * per_step_live;
    else
        fl = double(steps) * per_step_full;
    return fl * cfg.layers;
}

}  // namespace sampler_detail

/// Median wall time over `runs` trajectories per mode on one fixed
/// workload. Both modes share seeds, step count, and conditioning.
inline BenchReport bench_inference(const ModelParams<float>& p, const SampleConditioning& c,
                                   int steps, int runs = 20) {
    check(runs >= 1, "bench: runs must be >= 1");
    BenchReport rep;
    int tokens_cond = 0;
    for (const auto& g : c.conditions) tokens_cond += g.tokens.rows;
    const int latent = c.lat_h * c.lat_w;
    const int text = int(c.style_tokens.size());
    const int live = latent + text;
    const int total = live + tokens_cond;

    auto time_mode = [&](SamplerConfig::Mode mode) {
        std::vector<double> ms;
        for (int r = 0; r < runs; ++r) {
            SamplerConfig cfg;
            cfg.steps = steps;
            cfg.mode = mode;
            cfg.seed = uint64_t(r);
            const auto t0 = std::chrono::steady_clock::now();
            run_sampler(p, c, cfg);
            const auto t1 = std::chrono::steady_clock::now();
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        return sampler_detail::median(ms);
    };

    rep.full = {"full", steps, latent, text, tokens_cond, time_mode(SamplerConfig::Mode::full),
                sampler_detail::attn_flops(p.cfg, steps, live, total, false)};
    rep.cached = {"cached", steps, latent, text, tokens_cond, time_mode(SamplerConfig::Mode::cached),
                  sampler_detail::attn_flops(p.cfg, steps, live, total, true)};
    rep.speedup = rep.full.wall_ms_median / rep.cached.wall_ms_median;
    return rep;
}

}  // namespace promo
