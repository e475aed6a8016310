#pragma once

#include "promo/common.hpp"

namespace promo {

// Exact invertible image <-> token-grid codec: space-to-depth patchify plus
// a fixed affine normalization t = 2*pix - 1 per channel. Both directions
// are power-of-two scalings, so pixel values on a dyadic grid (which the
// synthetic renderer guarantees) round-trip bit-exactly.

constexpr float kPixelMidpoint = 0.5f;

inline int token_dim(int patch, int channels = 3) { return patch * patch * channels; }

/// H x W x C image -> (H/p, W/p) grid of d = C*p*p tokens.
/// Token layout: k = (c*p + dy)*p + dx.
inline TokenGrid encode_image(const Image& img, int patch) {
    check(patch >= 1, "encode: patch must be >= 1");
    check(img.h % patch == 0 && img.w % patch == 0,
          "encode: image dims must be divisible by patch size");
    const int gh = img.h / patch, gw = img.w / patch;
    TokenGrid grid(gh, gw, token_dim(patch, img.c));
    for (int gy = 0; gy < gh; ++gy)
        for (int gx = 0; gx < gw; ++gx) {
            float* tok = grid.token(gy, gx);
            int k = 0;
            for (int c = 0; c < img.c; ++c)
                for (int dy = 0; dy < patch; ++dy)
                    for (int dx = 0; dx < patch; ++dx)
                        tok[k++] = 2.0f * img.at(c, gy * patch + dy, gx * patch + dx) - 1.0f;
        }
    return grid;
}

/// Exact left-inverse of encode_image.
inline Image decode_grid(const TokenGrid& grid, int patch, int channels = 3) {
    check(patch >= 1, "decode: patch must be >= 1");
    check(grid.d == token_dim(patch, channels), "decode: token dim does not match patch size");
    Image img(grid.h * patch, grid.w * patch, channels);
    for (int gy = 0; gy < grid.h; ++gy)
        for (int gx = 0; gx < grid.w; ++gx) {
            const float* tok = grid.token(gy, gx);
            int k = 0;
            for (int c = 0; c < channels; ++c)
                for (int dy = 0; dy < patch; ++dy)
                    for (int dx = 0; dx < patch; ++dx)
                        img.at(c, gy * patch + dy, gx * patch + dx) = (tok[k++] + 1.0f) * 0.5f;
        }
    return img;
}

}  // namespace promo
