#pragma once

#include <functional>

#include "promo/metrics.hpp"
#include "promo/sampler.hpp"
#include "promo/train.hpp"

namespace promo {

// Held-out evaluation: sample the model per seed, decode, and score
// against the renderer ground truth.

struct EvalOptions {
    SamplerConfig::Mode mode = SamplerConfig::Mode::cached;
    int sample_steps = 20;
    bool force_null_style = false;    // null-prompt evaluation
    bool only_two_garment = false;    // restrict to the two-garment subset
    std::function<void(uint64_t seed, const TryOnSample&, const Image& output)> on_sample;
};

inline Image clamp01(Image img) {
    for (auto& v : img.data) v = std::min(1.0f, std::max(0.0f, v));
    return img;
}

inline SampleConditioning to_conditioning(const Conditioner& cond, const Conditioner::Built& built) {
    SampleConditioning c;
    c.conditions = built.conditions;
    c.style_tokens = built.style_tokens;
    c.latent_coords = built.latent_coords;
    c.lat_h = cond.lat_h();
    c.lat_w = cond.lat_w();
    return c;
}

inline EvalReport evaluate(const ModelParams<float>& params, const RunConfig& rc,
                           const EvalOptions& opts) {
    const Conditioner cond(rc);
    double ssim_sum = 0.0, mse_sum = 0.0;
    long garment_matched = 0, garment_total = 0;
    ComplianceCount compliance;
    int n = 0;

    for (int i = 0; i < rc.eval_seeds; ++i) {
        const uint64_t seed = rc.eval_seed_lo + uint64_t(i);
        auto [sample, det] = gen_sample_detail(seed, cond.gen);
        if (opts.only_two_garment && det.attrs.garments.size() != 2) continue;

        std::optional<std::optional<StyleAttrs>> style_override;
        if (opts.force_null_style) style_override = std::optional<StyleAttrs>(std::nullopt);
        const Conditioner::Built built = cond.build(sample, det.attrs, rc.effective_lambda(),
                                                    style_override);
        SamplerConfig scfg;
        scfg.steps = opts.sample_steps;
        scfg.mode = opts.mode;
        scfg.seed = mix64(seed, 0x5eedULL);
        const TokenGrid z0 = run_sampler(params, to_conditioning(cond, built), scfg);
        const Image output = clamp01(decode_grid(z0, rc.patch));

        ssim_sum += ssim(output, sample.target);
        double mse = 0.0;
        for (size_t k = 0; k < output.data.size(); ++k) {
            const double d = double(output.data[k]) - double(sample.target.data[k]);
            mse += d * d;
        }
        mse_sum += mse / double(output.data.size());
        for (size_t g = 0; g < det.attrs.garments.size(); ++g) {
            SampleDetail one;
            one.attrs.garments = {det.attrs.garments[g]};
            one.garment_regions = {det.garment_regions[g]};
            garment_matched += garment_assignment_acc(output, sample, one) > 0.5 ? 1 : 0;
            ++garment_total;
        }
        const ComplianceCount cc = style_compliance(output, sample, det);
        compliance.matched += cc.matched;
        compliance.total += cc.total;
        ++n;
        if (opts.on_sample) opts.on_sample(seed, sample, output);
    }
    check(n >= 1, "evaluate: no samples matched the filter");

    EvalReport rep;
    rep.n = n;
    rep.ssim = ssim_sum / n;
    const double mean_mse = mse_sum / n;
    rep.psnr = mean_mse == 0.0 ? std::numeric_limits<double>::infinity() : -10.0 * std::log10(mean_mse);
    rep.garment_assignment_acc = garment_total ? double(garment_matched) / garment_total : 1.0;
    rep.style_compliance_acc = compliance.total ? double(compliance.matched) / compliance.total : 1.0;
    return rep;
}

}  // namespace promo
