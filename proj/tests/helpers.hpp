#pragma once

#include "promo/model.hpp"
#include "promo/rng.hpp"

namespace promo::testing {

/// Tiny model wiring shared by the model/sampler tests: a 4x4 latent grid,
/// one merged spatial condition, one garment, and a short style sequence.
struct TinyWorld {
    ModelConfig cfg;
    int lat_h = 4, lat_w = 4;
    double delta = 4.0;

    TinyWorld() {
        cfg.layers = 2;
        cfg.d_model = 24;
        cfg.n_heads = 2;
        cfg.d_token = 12;
        cfg.d_freq = 16;
        cfg.style_vocab = 16;
    }
};

template <typename T>
Mat<T> random_tokens(Rng& rng, int n, int d, double scale = 1.0) {
    Mat<T> m(n, d);
    for (auto& v : m.a) v = T(rng.normal() * scale);
    return m;
}

template <typename T>
ModelInput<T> make_tiny_input(const TinyWorld& w, uint64_t seed, int n_garments = 1,
                              bool with_style = true) {
    Rng rng(seed, 0xf00d);
    ModelInput<T> in;
    in.latent = random_tokens<T>(rng, w.lat_h * w.lat_w, w.cfg.d_token);
    in.latent_coords = coords_for_latent(w.lat_h, w.lat_w);
    if (with_style) in.style_tokens = {2, 5, 7, 1};
    CondGroup<T> sp;
    sp.id = 1;
    sp.kind = CondKind::spatial;
    sp.tokens = random_tokens<T>(rng, 4, w.cfg.d_token);
    sp.coords = coords_for_condition(1, CondKind::spatial, 2, 2, w.lat_h, w.lat_w, w.delta);
    in.conditions.push_back(std::move(sp));
    for (int g = 0; g < n_garments; ++g) {
        CondGroup<T> gar;
        gar.id = 2 + g;
        gar.kind = CondKind::garment;
        gar.tokens = random_tokens<T>(rng, 4, w.cfg.d_token);
        gar.coords = coords_for_condition(gar.id, CondKind::garment, 2, 2, w.lat_h, w.lat_w, w.delta);
        in.conditions.push_back(std::move(gar));
    }
    in.t = 0.4 + 0.2 * rng.uniform();
    return in;
}

/// All parameters random (mod and final projections included) so every
/// gradient path is live.
template <typename T>
void randomize_params(ModelParams<T>& p, uint64_t seed, double scale = 0.08) {
    p.visit([&](const std::string& name, Mat<T>& m) {
        uint64_t h = 1469598103934665603ULL;
        for (char c : name) h = (h ^ uint64_t(c)) * 1099511628211ULL;
        Rng rng(seed, h);
        for (auto& v : m.a) v = T(rng.normal() * scale);
    });
}

}  // namespace promo::testing
