#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "promo/checkpoint.hpp"
#include "promo/config.hpp"
#include "promo/grad.hpp"
#include "promo/pipeline.hpp"
#include "promo/rng.hpp"
#include "promo/synth.hpp"

namespace promo {

// Training loop: Adam with linear warmup over the region-weighted
// flow-matching objective. Fully deterministic given the config: sample
// order, timestep draws, and noise are all derived from (config seed,
// step, batch slot), and gradients accumulate in batch order.

struct AdamParams {
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Mat<float>> m, v;
    long step = 0;

    static AdamState like(const ModelParams<float>& p) {
        AdamState s;
        p.visit([&](const std::string&, const Mat<float>& mat) {
            s.m.emplace_back(mat.rows, mat.cols);
            s.v.emplace_back(mat.rows, mat.cols);
        });
        return s;
    }

    std::map<std::string, Mat<float>> to_tensors(const ModelParams<float>& p) const {
        std::map<std::string, Mat<float>> out;
        size_t i = 0;
        p.visit([&](const std::string& name, const Mat<float>&) {
            out["opt.m." + name] = m[i];
            out["opt.v." + name] = v[i];
            ++i;
        });
        Mat<float> st(1, 1);
        st.a[0] = float(step);
        out["opt.step"] = st;
        return out;
    }

    static AdamState from_tensors(const ModelParams<float>& p,
                                  const std::map<std::string, Mat<float>>& tensors) {
        AdamState s = like(p);
        size_t i = 0;
        p.visit([&](const std::string& name, const Mat<float>&) {
            auto im = tensors.find("opt.m." + name);
            auto iv = tensors.find("opt.v." + name);
            check(im != tensors.end() && iv != tensors.end(),
                  "checkpoint: missing optimizer state for " + name);
            s.m[i] = im->second;
            s.v[i] = iv->second;
            ++i;
        });
        auto it = tensors.find("opt.step");
        check(it != tensors.end(), "checkpoint: missing opt.step");
        s.step = long(it->second.a[0]);
        return s;
    }
};

inline void adam_update(ModelParams<float>& p, const ModelGrads<float>& g, AdamState& st,
                        const AdamParams& ap, double lr_now) {
    ++st.step;
    const double b1c = 1.0 - std::pow(ap.beta1, double(st.step));
    const double b2c = 1.0 - std::pow(ap.beta2, double(st.step));
    std::vector<Mat<float>*> pm, gm;
    p.visit([&](const std::string&, Mat<float>& m) { pm.push_back(&m); });
    const_cast<ModelGrads<float>&>(g).visit(
        [&](const std::string&, Mat<float>& m) { gm.push_back(&m); });
    for (size_t e = 0; e < pm.size(); ++e) {
        float* w = pm[e]->a.data();
        const float* gr = gm[e]->a.data();
        float* m = st.m[e].a.data();
        float* v = st.v[e].a.data();
        const size_t n = pm[e]->a.size();
        for (size_t i = 0; i < n; ++i) {
            m[i] = float(ap.beta1 * m[i] + (1.0 - ap.beta1) * gr[i]);
            v[i] = float(ap.beta2 * v[i] + (1.0 - ap.beta2) * double(gr[i]) * gr[i]);
            const double mhat = m[i] / b1c;
            const double vhat = v[i] / b2c;
            w[i] = float(w[i] - lr_now * mhat / (std::sqrt(vhat) + ap.eps));
        }
    }
}

struct TrainHooks {
    std::function<void(int step, double loss)> on_step;
    std::function<void(int step, const ModelParams<float>&, const AdamState&)> on_checkpoint;
};

struct TrainResult {
    ModelParams<float> params;
    AdamState opt;
    std::vector<double> losses;  // one entry per step
};

/// Load a stored sample when a dataset directory is configured and holds
/// the seed, otherwise generate it.
inline TryOnSample fetch_sample(const RunConfig& rc, const GeneratorConfig& gen, uint64_t seed) {
    if (!rc.dataset_dir.empty()) {
        const std::filesystem::path path = std::filesystem::path(rc.dataset_dir) / sample_filename(seed);
        if (std::filesystem::exists(path)) {
            TryOnSample s = load_sample(path.string());
            check(s.person.h == gen.h && s.person.w == gen.w, "dataset: sample dims mismatch config");
            check(s.seed == seed, "dataset: seed mismatch in " + path.string());
            return s;
        }
    }
    return gen_sample(seed, gen);
}

inline TrainResult train_model(const RunConfig& rc, const TrainHooks& hooks = {},
                               const Checkpoint* resume = nullptr) {
    rc.validate();
    const Conditioner cond(rc);
    const ModelConfig mc = cond.model_config(rc);
    const uint64_t cfg_hash = rc.identity_hash();

    TrainResult res;
    res.params = init_params<float>(mc, rc.seed);
    res.opt = AdamState::like(res.params);
    int start_step = 0;
    if (resume) {
        check(resume->config_hash == cfg_hash, "train: checkpoint config hash mismatch");
        res.params = resume->params();
        res.opt = AdamState::from_tensors(res.params, resume->tensors);
        start_step = int(resume->train_step);
    }

    AdamParams ap;
    ap.lr = rc.lr;
    const double lambda = rc.effective_lambda();
    ModelGrads<float> grads = make_grads<float>(mc);

    for (int step = start_step; step < rc.steps; ++step) {
        grads.visit([](const std::string&, Mat<float>& m) { m.zero(); });
        double loss_sum = 0.0;
        for (int i = 0; i < rc.batch; ++i) {
            const long draw = long(step) * rc.batch + i;
            const uint64_t seed = rc.train_seed_lo + uint64_t(draw % rc.train_seeds);
            const TryOnSample sample = fetch_sample(rc, cond.gen, seed);
            const SampleDetail det = gen_sample_detail(seed, cond.gen).second;
            const Conditioner::Built built = cond.build(sample, det.attrs, lambda);

            const double t = Rng(rc.seed, mix64(0x74, uint64_t(draw))).uniform();
            Rng noise_rng(rc.seed, mix64(0x65, uint64_t(draw)));
            TokenGrid eps(built.z0.h, built.z0.w, built.z0.d);
            for (auto& v : eps.data) v = float(noise_rng.normal());
            const FlowPair fp = make_flow_pair(built.z0, eps, t);

            ModelInput<float> in = cond.make_input(built, grid_to_mat(fp.z_t), t);
            loss_sum += loss_and_grad(res.params, in, grid_to_mat(fp.target_v),
                                      built.token_weights, grads);
        }
        const double inv_b = 1.0 / rc.batch;
        grads.visit([&](const std::string&, Mat<float>& m) {
            for (auto& v : m.a) v = float(v * inv_b);
        });
        const double warm = rc.warmup_steps > 0 ? std::min(1.0, double(step + 1) / rc.warmup_steps) : 1.0;
        adam_update(res.params, grads, res.opt, ap, ap.lr * warm);

        const double loss = loss_sum * inv_b;
        res.losses.push_back(loss);
        if (hooks.on_step) hooks.on_step(step, loss);
        const bool last = step + 1 == rc.steps;
        if (hooks.on_checkpoint && ((step + 1) % rc.ckpt_every == 0 || last))
            hooks.on_checkpoint(step + 1, res.params, res.opt);
    }
    if (rc.steps == start_step && hooks.on_checkpoint)
        hooks.on_checkpoint(start_step, res.params, res.opt);  // zero-step run: init checkpoint
    return res;
}

}  // namespace promo
