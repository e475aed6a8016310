#pragma once

#include "promo/common.hpp"

namespace promo {

/// Per-token loss weights at latent resolution, W = 1 + lambda*(2*M - 1)
/// for pooled body-occupancy M.
struct WeightMap {
    int h = 0, w = 0;
    double lambda = 0.0;
    std::vector<float> weights;  // weights[y*w + x], each in [1-lambda, 1+lambda]

    float at(int y, int x) const { return weights[size_t(y) * w + x]; }
};

/// person * (1 - mask): erases the edit region.
inline Image make_agnostic(const Image& person, const Image& mask) {
    check(mask.c == 1 && mask.h == person.h && mask.w == person.w,
          "make_agnostic: mask must be 1-channel with matching dims");
    Image out = person;
    for (int c = 0; c < person.c; ++c)
        for (int y = 0; y < person.h; ++y)
            for (int x = 0; x < person.w; ++x)
                if (mask.at(0, y, x) != 0.0f) out.at(c, y, x) = 0.0f;
    return out;
}

/// Overlay the pose map onto the agnostic image (pose wins wherever any
/// pose channel is nonzero), then 2x2 area-average downsample. Two
/// full-resolution conditions collapse into one at a quarter of the tokens.
inline Image merge_spatial(const Image& agnostic, const Image& pose) {
    check(agnostic.same_shape(pose), "merge_spatial: shape mismatch");
    check(agnostic.h % 2 == 0 && agnostic.w % 2 == 0, "merge_spatial: dims must be even");
    const int H = agnostic.h, W = agnostic.w, C = agnostic.c;
    Image overlay = agnostic;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            bool pose_on = false;
            for (int c = 0; c < C; ++c) pose_on = pose_on || pose.at(c, y, x) != 0.0f;
            if (pose_on)
                for (int c = 0; c < C; ++c) overlay.at(c, y, x) = pose.at(c, y, x);
        }
    Image out(H / 2, W / 2, C);
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H / 2; ++y)
            for (int x = 0; x < W / 2; ++x)
                out.at(c, y, x) = (overlay.at(c, 2 * y, 2 * x) + overlay.at(c, 2 * y, 2 * x + 1) +
                                   overlay.at(c, 2 * y + 1, 2 * x) + overlay.at(c, 2 * y + 1, 2 * x + 1)) *
                                  0.25f;
    return out;
}

/// Area-average pool the binary parsing mask to latent resolution and map
/// occupancy m to weight 1 + lambda*(2m - 1): pure body cells get 1+lambda,
/// pure background 1-lambda, fractional cells in between.
inline WeightMap region_weight_map(const Image& parsing, double lambda, int h_lat, int w_lat) {
    check(parsing.c == 1, "region_weight_map: parsing mask must be 1-channel");
    check(lambda >= 0.0 && lambda < 1.0, "region_weight_map: lambda must be in [0,1)");
    check(h_lat >= 1 && w_lat >= 1 && parsing.h % h_lat == 0 && parsing.w % w_lat == 0,
          "region_weight_map: non-integral downsample factor");
    const int fy = parsing.h / h_lat, fx = parsing.w / w_lat;
    check(fy == fx, "region_weight_map: anisotropic downsample factor");
    WeightMap wm;
    wm.h = h_lat;
    wm.w = w_lat;
    wm.lambda = lambda;
    wm.weights.resize(size_t(h_lat) * w_lat);
    const double inv = 1.0 / (double(fy) * fx);
    for (int y = 0; y < h_lat; ++y)
        for (int x = 0; x < w_lat; ++x) {
            double occ = 0.0;
            for (int dy = 0; dy < fy; ++dy)
                for (int dx = 0; dx < fx; ++dx) occ += parsing.at(0, y * fy + dy, x * fx + dx);
            occ *= inv;
            wm.weights[size_t(y) * w_lat + x] = float(1.0 + lambda * (2.0 * occ - 1.0));
        }
    return wm;
}

}  // namespace promo
