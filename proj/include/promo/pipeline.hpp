#pragma once

#include <optional>
#include <vector>

#include "promo/codec.hpp"
#include "promo/config.hpp"
#include "promo/model.hpp"
#include "promo/spatial.hpp"
#include "promo/style.hpp"
#include "promo/synth.hpp"

namespace promo {

// Bridges try-on samples to model inputs: encodes images, assembles the
// condition groups with their rotary coordinates, and builds the loss
// weight map. Ablation flags change conditioning in exactly one way each:
//   no_merge       - agnostic and pose ride as two full-resolution groups
//   no_rope_groups - condition tokens lose their rotary coordinates
//   no_weighted_loss - lambda pinned to zero
//
// Condition group ids are stable across samples: merged spatial = 1 and
// garments = 2 + slot (upper 2, lower 3); with no_merge the spatial pair
// occupies 1..2 and garments shift to 3 + slot.

inline Mat<float> grid_to_mat(const TokenGrid& g) {
    Mat<float> m(g.tokens(), g.d);
    std::copy(g.data.begin(), g.data.end(), m.a.begin());
    return m;
}

inline TokenGrid mat_to_grid(const Mat<float>& m, int h, int w) {
    check(m.rows == h * w, "mat_to_grid: row count mismatch");
    TokenGrid g(h, w, m.cols);
    std::copy(m.a.begin(), m.a.end(), g.data.begin());
    return g;
}

struct Conditioner {
    GeneratorConfig gen;
    int patch = 4;
    bool no_merge = false;
    bool no_rope_groups = false;
    StyleTokenizer tokenizer;

    explicit Conditioner(const RunConfig& rc)
        : patch(rc.patch),
          no_merge(rc.no_merge),
          no_rope_groups(rc.no_rope_groups),
          tokenizer(rc.n_max, kNumGarmentColors) {
        gen.h = rc.h;
        gen.w = rc.w;
        gen.garment_h = rc.garment_h;
        gen.garment_w = rc.garment_w;
        gen.n_max = rc.n_max;
        gen.style_null_rate = rc.style_null_rate;
        gen.patch = rc.patch;
        gen.validate();
    }

    int lat_h() const { return gen.h / patch; }
    int lat_w() const { return gen.w / patch; }
    double delta() const { return double(lat_h()); }
    int d_token() const { return token_dim(patch); }

    ModelConfig model_config(const RunConfig& rc) const {
        ModelConfig mc;
        mc.layers = rc.layers;
        mc.d_model = rc.d_model;
        mc.n_heads = rc.n_heads;
        mc.d_freq = rc.d_freq;
        mc.d_token = d_token();
        mc.style_vocab = tokenizer.vocab_size();
        return mc;
    }

    std::vector<Rope3Coord> strip_rope(std::vector<Rope3Coord> coords) const {
        if (no_rope_groups)
            for (auto& c : coords) c = Rope3Coord{};
        return coords;
    }

    /// Condition groups for one sample; garment slots come from the
    /// renderer's ground-truth attributes (the pipeline always knows which
    /// slot a garment image targets).
    std::vector<CondGroup<float>> conditions(const TryOnSample& s, const StyleAttrs& attrs) const {
        std::vector<CondGroup<float>> out;
        const Image agnostic = make_agnostic(s.person, s.agnostic_mask);
        int garment_base;
        if (!no_merge) {
            const Image merged = merge_spatial(agnostic, s.pose_map);
            CondGroup<float> sp;
            sp.id = 1;
            sp.kind = CondKind::spatial;
            const TokenGrid g = encode_image(merged, patch);
            sp.tokens = grid_to_mat(g);
            sp.coords = strip_rope(
                coords_for_condition(1, CondKind::spatial, g.h, g.w, lat_h(), lat_w(), delta()));
            out.push_back(std::move(sp));
            garment_base = 2;
        } else {
            const Image* planes[2] = {&agnostic, &s.pose_map};
            for (int i = 0; i < 2; ++i) {
                CondGroup<float> sp;
                sp.id = 1 + i;
                sp.kind = CondKind::spatial;
                const TokenGrid g = encode_image(*planes[i], patch);
                sp.tokens = grid_to_mat(g);
                sp.coords = strip_rope(coords_for_fullres_spatial(sp.id, g.h, g.w));
                out.push_back(std::move(sp));
            }
            garment_base = 3;
        }
        check(s.garments.size() == attrs.garments.size(), "conditioner: attrs/garment count mismatch");
        for (size_t i = 0; i < s.garments.size(); ++i) {
            CondGroup<float> gar;
            gar.id = garment_base + int(attrs.garments[i].slot);
            gar.kind = CondKind::garment;
            const TokenGrid g = encode_image(s.garments[i], patch);
            gar.tokens = grid_to_mat(g);
            gar.coords = strip_rope(
                coords_for_condition(gar.id, CondKind::garment, g.h, g.w, lat_h(), lat_w(), delta()));
            out.push_back(std::move(gar));
        }
        return out;
    }

    std::vector<int> style_tokens(const std::optional<StyleAttrs>& style) const {
        return tokenizer.to_tokens(style);
    }

    /// Everything fixed about one sample's conditioning (the denoised
    /// latent slot stays empty; callers fill z_t per step).
    struct Built {
        std::vector<CondGroup<float>> conditions;
        std::vector<int> style_tokens;
        std::vector<Rope3Coord> latent_coords;
        TokenGrid z0;
        WeightMap wmap;
        std::vector<float> token_weights;  // grid row-major
    };

    Built build(const TryOnSample& s, const StyleAttrs& attrs, double lambda,
                std::optional<std::optional<StyleAttrs>> style_override = std::nullopt) const {
        Built b;
        b.conditions = conditions(s, attrs);
        b.style_tokens = style_tokens(style_override ? *style_override : s.style);
        b.latent_coords = coords_for_latent(lat_h(), lat_w());
        b.z0 = encode_image(s.target, patch);
        b.wmap = region_weight_map(s.parsing_mask, lambda, lat_h(), lat_w());
        b.token_weights = b.wmap.weights;
        return b;
    }

    ModelInput<float> make_input(const Built& b, const Mat<float>& z_t, double t) const {
        ModelInput<float> in;
        in.latent = z_t;
        in.latent_coords = b.latent_coords;
        in.style_tokens = b.style_tokens;
        in.conditions = b.conditions;
        in.t = t;
        return in;
    }
};

}  // namespace promo
