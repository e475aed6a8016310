// promo: desk-scale promptable try-on engine.
// Subcommands: train | sample | eval | bench | ablate. All take a flat
// key=value config file; ablation flags and sampler mode can be overridden
// on the command line. PROMO_OUT overrides the output directory.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "promo/checkpoint.hpp"
#include "promo/config.hpp"
#include "promo/eval.hpp"
#include "promo/png.hpp"
#include "promo/sampler.hpp"
#include "promo/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace promo;

namespace {

struct FlagOverrides {
    bool no_rope_groups = false, no_weighted_loss = false, no_merge = false, no_cache = false;
    std::string mode;
    long seed = -1;

    void apply(RunConfig& rc) const {
        if (no_rope_groups) rc.no_rope_groups = true;
        if (no_weighted_loss) rc.no_weighted_loss = true;
        if (no_merge) rc.no_merge = true;
        if (no_cache) rc.no_cache = true;
        if (!mode.empty()) rc.mode = mode;
        if (seed >= 0) rc.seed = uint64_t(seed);
        rc.validate();
    }
};

void add_common(CLI::App* cmd, std::string& config_path, FlagOverrides& fo) {
    cmd->add_option("--config", config_path, "run config file (key=value)")->required();
    cmd->add_flag("--no-rope-groups", fo.no_rope_groups, "drop rotary coords on condition tokens");
    cmd->add_flag("--no-weighted-loss", fo.no_weighted_loss, "disable the region-weighted loss");
    cmd->add_flag("--no-merge", fo.no_merge, "keep mask and pose as separate full-res conditions");
    cmd->add_flag("--no-cache", fo.no_cache, "disable temporal self-reference caching");
    cmd->add_option("--mode", fo.mode, "sampler mode: full|cached");
    cmd->add_option("--seed", fo.seed, "training seed override");
}

SamplerConfig::Mode sampler_mode(const RunConfig& rc) {
    if (rc.no_cache) return SamplerConfig::Mode::full;
    return rc.mode == "full" ? SamplerConfig::Mode::full : SamplerConfig::Mode::cached;
}

Checkpoint load_verified(const std::string& path, const RunConfig& rc) {
    Checkpoint ck = load_checkpoint(path);
    check(ck.config_hash == rc.identity_hash(),
          "checkpoint " + path + " does not match this config (hash mismatch)");
    return ck;
}

std::string default_ckpt(const RunConfig& rc) {
    return (fs::path(rc.resolved_out_dir()) / "ckpt_final.prmc").string();
}

void emit_dataset(const RunConfig& rc, const std::string& dir) {
    const Conditioner cond(rc);
    fs::create_directories(dir);
    int written = 0, kept = 0;
    for (int i = 0; i < rc.train_seeds; ++i) {
        const uint64_t seed = rc.train_seed_lo + uint64_t(i);
        const fs::path path = fs::path(dir) / sample_filename(seed);
        if (fs::exists(path)) {
            ++kept;  // never mutate existing records
            continue;
        }
        save_sample(gen_sample(seed, cond.gen), path.string());
        ++written;
    }
    std::cout << "dataset: " << written << " written, " << kept << " kept in " << dir << "\n";
}

int cmd_train(const RunConfig& rc, const std::string& ckpt_path, const std::string& dataset_out) {
    const std::string out = rc.resolved_out_dir();
    fs::create_directories(out);
    if (!dataset_out.empty()) emit_dataset(rc, dataset_out);

    Checkpoint resume;
    const Checkpoint* resume_ptr = nullptr;
    if (!ckpt_path.empty()) {
        resume = load_verified(ckpt_path, rc);
        resume_ptr = &resume;
        std::cout << "resuming from step " << resume.train_step << "\n";
    }

    const std::string hash = rc.identity_hash_hex();
    std::ofstream log(fs::path(out) / "train_log.jsonl");
    check(bool(log), "train: cannot open loss log");

    TrainHooks hooks;
    hooks.on_step = [&](int step, double loss) {
        log << json{{"step", step}, {"loss", loss}, {"config_hash", hash}}.dump() << "\n";
        if ((step + 1) % 100 == 0)
            std::cout << "step " << step + 1 << "/" << rc.steps << " loss " << loss << std::endl;
    };
    hooks.on_checkpoint = [&](int step, const ModelParams<float>& p, const AdamState& opt) {
        char name[64];
        std::snprintf(name, sizeof name, "ckpt_step%06d.prmc", step);
        save_checkpoint((fs::path(out) / name).string(), p, rc.identity_hash(), uint64_t(step),
                        opt.to_tensors(p));
        save_checkpoint((fs::path(out) / "ckpt_final.prmc").string(), p, rc.identity_hash(),
                        uint64_t(step), opt.to_tensors(p));
    };
    train_model(rc, hooks, resume_ptr);
    std::cout << "trained " << rc.steps << " steps; checkpoint at "
              << (fs::path(out) / "ckpt_final.prmc").string() << "\n";
    return 0;
}

Image upscale(const Image& img, int factor) {
    Image out(img.h * factor, img.w * factor, img.c);
    for (int c = 0; c < img.c; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) out.at(c, y, x) = img.at(c, y / factor, x / factor);
    return out;
}

int cmd_sample(const RunConfig& rc, const std::string& ckpt_path, long base_seed, int count) {
    const Checkpoint ck = load_verified(ckpt_path.empty() ? default_ckpt(rc) : ckpt_path, rc);
    const ModelParams<float> params = ck.params();
    const Conditioner cond(rc);
    const std::string out = rc.resolved_out_dir();
    fs::create_directories(fs::path(out) / "samples");
    const std::string hash = rc.identity_hash_hex();
    const uint64_t seed0 = base_seed >= 0 ? uint64_t(base_seed) : rc.eval_seed_lo;

    std::vector<Image> rows;
    for (int i = 0; i < count; ++i) {
        const uint64_t seed = seed0 + uint64_t(i);
        auto [sample, det] = gen_sample_detail(seed, cond.gen);
        const Conditioner::Built built = cond.build(sample, det.attrs, rc.effective_lambda());
        SamplerConfig scfg;
        scfg.steps = rc.sample_steps;
        scfg.mode = sampler_mode(rc);
        scfg.seed = mix64(seed, 0x5eedULL);
        const TokenGrid z0 = run_sampler(params, to_conditioning(cond, built), scfg);
        const Image output = clamp01(decode_grid(z0, rc.patch));

        char name[64];
        std::snprintf(name, sizeof name, "seed_%llu.png", (unsigned long long)seed);
        write_png(output, (fs::path(out) / "samples" / name).string(), hash);

        std::vector<Image> cells{sample.person,
                                 merge_spatial(make_agnostic(sample.person, sample.agnostic_mask),
                                               sample.pose_map)};
        for (const auto& g : sample.garments) cells.push_back(g);
        cells.push_back(output);
        cells.push_back(sample.target);
        rows.push_back(hstack(cells));
    }
    write_png(upscale(vstack(rows), 2), (fs::path(out) / "samples" / "grid.png").string(), hash);
    std::cout << "wrote " << count << " samples + grid to " << (fs::path(out) / "samples").string()
              << "\n";
    return 0;
}

json report_to_json(const RunConfig& rc, const EvalReport& rep, bool null_style,
                    const std::string& mode) {
    json j{{"config_hash", rc.identity_hash_hex()},
           {"mode", mode},
           {"n", rep.n},
           {"ssim", rep.ssim},
           {"garment_assignment_acc", rep.garment_assignment_acc},
           {"style_compliance_acc", rep.style_compliance_acc},
           {"null_style", null_style}};
    if (std::isfinite(rep.psnr))
        j["psnr"] = rep.psnr;
    else
        j["psnr"] = nullptr;  // +inf sentinel (identical images)
    return j;
}

int cmd_eval(const RunConfig& rc, const std::string& ckpt_path, bool null_style) {
    const Checkpoint ck = load_verified(ckpt_path.empty() ? default_ckpt(rc) : ckpt_path, rc);
    const ModelParams<float> params = ck.params();
    EvalOptions opts;
    opts.mode = sampler_mode(rc);
    opts.sample_steps = rc.sample_steps;
    opts.force_null_style = null_style;
    const EvalReport rep = evaluate(params, rc, opts);

    const std::string out = rc.resolved_out_dir();
    fs::create_directories(out);
    const std::string mode = opts.mode == SamplerConfig::Mode::cached ? "cached" : "full";
    std::ofstream os(fs::path(out) / "eval_report.jsonl", std::ios::app);
    os << report_to_json(rc, rep, null_style, mode).dump() << "\n";
    std::cout << "eval n=" << rep.n << " ssim=" << rep.ssim << " psnr=" << rep.psnr
              << " garment_acc=" << rep.garment_assignment_acc
              << " style_acc=" << rep.style_compliance_acc << " mode=" << mode
              << (null_style ? " (null prompt)" : "") << "\n";
    return 0;
}

SampleConditioning bench_workload(const RunConfig& rc, int garment_groups) {
    // Fixed synthetic workload: merged spatial condition plus N garment
    // groups, sized by the run config (defaults: 256 latent, 64 + 4*64
    // condition tokens).
    const Conditioner cond(rc);
    Rng rng(4242);
    SampleConditioning c;
    c.lat_h = cond.lat_h();
    c.lat_w = cond.lat_w();
    c.latent_coords = coords_for_latent(c.lat_h, c.lat_w);
    c.style_tokens = cond.tokenizer.to_tokens(std::nullopt);
    const int gh = rc.garment_h / rc.patch, gw = rc.garment_w / rc.patch;
    CondGroup<float> sp;
    sp.id = 1;
    sp.kind = CondKind::spatial;
    sp.tokens = Mat<float>(c.lat_h / 2 * (c.lat_w / 2), token_dim(rc.patch));
    for (auto& v : sp.tokens.a) v = float(rng.normal());
    sp.coords = coords_for_condition(1, CondKind::spatial, c.lat_h / 2, c.lat_w / 2, c.lat_h,
                                     c.lat_w, cond.delta());
    c.conditions.push_back(std::move(sp));
    for (int g = 0; g < garment_groups; ++g) {
        CondGroup<float> gar;
        gar.id = 2 + g;
        gar.kind = CondKind::garment;
        gar.tokens = Mat<float>(gh * gw, token_dim(rc.patch));
        for (auto& v : gar.tokens.a) v = float(rng.normal());
        gar.coords =
            coords_for_condition(gar.id, CondKind::garment, gh, gw, c.lat_h, c.lat_w, cond.delta());
        c.conditions.push_back(std::move(gar));
    }
    return c;
}

int cmd_bench(const RunConfig& rc, const std::string& ckpt_path, int garment_groups, int runs) {
    const Conditioner cond(rc);
    ModelParams<float> params;
    if (!ckpt_path.empty()) {
        params = load_verified(ckpt_path, rc).params();
    } else {
        params = init_params<float>(cond.model_config(rc), rc.seed);
    }
    const SampleConditioning c = bench_workload(rc, garment_groups);
    const BenchReport rep = bench_inference(params, c, rc.sample_steps, runs);

    const std::string out = rc.resolved_out_dir();
    fs::create_directories(out);
    std::ofstream os(fs::path(out) / "bench_report.jsonl", std::ios::app);
    const std::string hash = rc.identity_hash_hex();
    for (const BenchRow* row : {&rep.full, &rep.cached}) {
        os << json{{"config_hash", hash},
                   {"mode", row->mode},
                   {"steps", row->steps},
                   {"tokens_latent", row->tokens_latent},
                   {"tokens_text", row->tokens_text},
                   {"tokens_cond", row->tokens_cond},
                   {"wall_ms_median", row->wall_ms_median},
                   {"attn_flops_per_pass", row->attn_flops_per_pass}}
                  .dump()
           << "\n";
    }
    std::cout << "bench: full " << rep.full.wall_ms_median << " ms, cached "
              << rep.cached.wall_ms_median << " ms, speedup " << rep.speedup << "x ("
              << rep.full.tokens_latent << " latent / " << rep.full.tokens_cond
              << " condition tokens, " << rc.sample_steps << " steps, " << runs << " runs)\n";
    return 0;
}

int cmd_ablate(const RunConfig& base, const std::string& flags_csv) {
    const std::string out = base.resolved_out_dir();
    fs::create_directories(out);
    std::ofstream os(fs::path(out) / "ablate_report.jsonl", std::ios::app);

    std::vector<std::string> entries;
    std::string cur;
    for (char ch : flags_csv + ",") {
        if (ch == ',') {
            if (!cur.empty()) entries.push_back(cur);
            cur.clear();
        } else if (!isspace((unsigned char)ch)) {
            cur += ch;
        }
    }
    std::cout << "flag_set            garment_acc  style_acc  ssim     hash\n";
    for (const std::string& entry : entries) {
        RunConfig rc = base;
        if (entry == "no_rope_groups")
            rc.no_rope_groups = true;
        else if (entry == "no_weighted_loss")
            rc.no_weighted_loss = true;
        else if (entry == "no_merge")
            rc.no_merge = true;
        else if (entry == "no_cache")
            rc.no_cache = true;
        else
            check(entry == "baseline", "ablate: unknown flag set '" + entry + "'");
        const TrainResult tr = train_model(rc);
        EvalOptions opts;
        opts.mode = sampler_mode(rc);
        opts.sample_steps = rc.sample_steps;
        const EvalReport rep = evaluate(tr.params, rc, opts);
        json row = report_to_json(rc, rep, false,
                                  opts.mode == SamplerConfig::Mode::cached ? "cached" : "full");
        row["flag_set"] = entry;
        os << row.dump() << "\n";
        std::printf("%-18s  %.4f       %.4f     %.4f   %s\n", entry.c_str(),
                    rep.garment_assignment_acc, rep.style_compliance_acc, rep.ssim,
                    rc.identity_hash_hex().c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"promo: promptable try-on flow-matching engine"};
    app.require_subcommand(1);

    std::string config_path, ckpt_path, dataset_out, ablate_flags;
    FlagOverrides fo;
    long sample_seed = -1;
    int sample_count = 8, bench_garments = 4, bench_runs = 20;
    bool null_style = false;

    CLI::App* train = app.add_subcommand("train", "train a model");
    add_common(train, config_path, fo);
    train->add_option("--checkpoint", ckpt_path, "resume from checkpoint");
    train->add_option("--emit-dataset", dataset_out, "write sample records here before training");

    CLI::App* sample = app.add_subcommand("sample", "generate try-on images");
    add_common(sample, config_path, fo);
    sample->add_option("--checkpoint", ckpt_path, "model checkpoint");
    sample->add_option("--sample-seed", sample_seed, "first sample seed (default: eval range)");
    sample->add_option("--count", sample_count, "number of seeds to render");

    CLI::App* evalc = app.add_subcommand("eval", "score the model on held-out seeds");
    add_common(evalc, config_path, fo);
    evalc->add_option("--checkpoint", ckpt_path, "model checkpoint");
    evalc->add_flag("--null-style", null_style, "evaluate with the null prompt");

    CLI::App* bench = app.add_subcommand("bench", "cached vs full inference timing");
    add_common(bench, config_path, fo);
    bench->add_option("--checkpoint", ckpt_path, "model checkpoint (optional)");
    bench->add_option("--garment-groups", bench_garments, "garment groups in the workload");
    bench->add_option("--runs", bench_runs, "timed runs per mode");

    CLI::App* ablate = app.add_subcommand("ablate", "train + eval across flag settings");
    add_common(ablate, config_path, fo);
    ablate->add_option("--flags", ablate_flags, "comma list (default from config)");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig rc = load_config(config_path);
        fo.apply(rc);
        if (train->parsed()) return cmd_train(rc, ckpt_path, dataset_out);
        if (sample->parsed()) return cmd_sample(rc, ckpt_path, sample_seed, sample_count);
        if (evalc->parsed()) return cmd_eval(rc, ckpt_path, null_style);
        if (bench->parsed()) return cmd_bench(rc, ckpt_path, bench_garments, bench_runs);
        if (ablate->parsed())
            return cmd_ablate(rc, ablate_flags.empty() ? rc.ablate_flags : ablate_flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
