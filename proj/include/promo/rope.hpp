#pragma once

#include <cmath>
#include <vector>

#include "promo/common.hpp"
#include "promo/mat.hpp"

namespace promo {

/// Rotary coordinate (t, x, y): t is the condition-group identifier
/// (0 for the denoised latent), x/y are grid coordinates in z_t units.
struct Rope3Coord {
    double t = 0.0, x = 0.0, y = 0.0;
};

enum class CondKind { spatial, garment };

/// Geometric frequencies per axis; head dim d splits equally across
/// (t, x, y), giving d/6 rotation pairs per axis.
struct RopeFreqs {
    int n_pairs = 0;  // pairs per axis
    std::vector<double> theta;
};

inline RopeFreqs make_rope_freqs(int d_head, double base = 10000.0) {
    check(d_head > 0 && d_head % 6 == 0, "rope: head dim must be divisible by 6");
    RopeFreqs f;
    f.n_pairs = d_head / 6;
    f.theta.resize(f.n_pairs);
    for (int j = 0; j < f.n_pairs; ++j) f.theta[j] = std::pow(base, -double(j) / f.n_pairs);
    return f;
}

/// Latent tokens: (0, x, y), row-major over the grid.
inline std::vector<Rope3Coord> coords_for_latent(int h, int w) {
    check(h >= 1 && w >= 1, "coords_for_latent: degenerate grid");
    std::vector<Rope3Coord> out;
    out.reserve(size_t(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.push_back({0.0, double(x), double(y)});
    return out;
}

/// Condition tokens. Spatial conditions arrive merged at half the latent
/// resolution; each coarse token sits at the center of the 2x2 latent cell
/// block it covers, (2x'+0.5, 2y'+0.5). Garment tokens keep native grid
/// coordinates shifted below the latent extent by delta.
inline std::vector<Rope3Coord> coords_for_condition(int group_id, CondKind kind, int h_c, int w_c,
                                                    int z_h, int z_w, double delta) {
    check(group_id >= 1, "coords_for_condition: group id must be >= 1");
    std::vector<Rope3Coord> out;
    out.reserve(size_t(h_c) * w_c);
    if (kind == CondKind::spatial) {
        check(h_c * 2 == z_h && w_c * 2 == z_w,
              "coords_for_condition: merged spatial condition must be half the latent shape");
        for (int y = 0; y < h_c; ++y)
            for (int x = 0; x < w_c; ++x)
                out.push_back({double(group_id), 2.0 * x + 0.5, 2.0 * y + 0.5});
    } else {
        for (int y = 0; y < h_c; ++y)
            for (int x = 0; x < w_c; ++x)
                out.push_back({double(group_id), double(x), double(y) + delta});
    }
    return out;
}

/// Full-resolution spatial condition (unmerged ablation path): native
/// latent-grid coordinates.
inline std::vector<Rope3Coord> coords_for_fullres_spatial(int group_id, int h_c, int w_c) {
    check(group_id >= 1, "coords_for_fullres_spatial: group id must be >= 1");
    std::vector<Rope3Coord> out;
    out.reserve(size_t(h_c) * w_c);
    for (int y = 0; y < h_c; ++y)
        for (int x = 0; x < w_c; ++x) out.push_back({double(group_id), double(x), double(y)});
    return out;
}

/// Per-token cos/sin tables for a fixed coordinate set. Layout per row:
/// 3 axis blocks of n_pairs entries, axes ordered (t, x, y).
template <typename T>
struct RotTable {
    Mat<T> cos_, sin_;  // n_tokens x 3*n_pairs
};

template <typename T>
RotTable<T> build_rot_table(const std::vector<Rope3Coord>& coords, const RopeFreqs& f) {
    RotTable<T> rt;
    const int np = f.n_pairs;
    rt.cos_ = Mat<T>(int(coords.size()), 3 * np);
    rt.sin_ = Mat<T>(int(coords.size()), 3 * np);
    for (size_t i = 0; i < coords.size(); ++i) {
        const double axes[3] = {coords[i].t, coords[i].x, coords[i].y};
        T* cr = rt.cos_.row(int(i));
        T* sr = rt.sin_.row(int(i));
        for (int a = 0; a < 3; ++a)
            for (int j = 0; j < np; ++j) {
                const double ang = axes[a] * f.theta[j];
                cr[a * np + j] = T(std::cos(ang));
                sr[a * np + j] = T(std::sin(ang));
            }
    }
    return rt;
}

/// In-place block-diagonal 2D rotations over one head vector.
/// Pair (2j, 2j+1) of axis block a rotates by angle coord_a * theta_j.
/// `inverse` rotates by the negated angles (used by the backward pass).
template <typename T>
void rope_rotate(T* v, int d_head, const T* cosrow, const T* sinrow, bool inverse = false) {
    const int np = d_head / 6;
    for (int a = 0; a < 3; ++a)
        for (int j = 0; j < np; ++j) {
            const T c = cosrow[a * np + j];
            const T s = inverse ? -sinrow[a * np + j] : sinrow[a * np + j];
            T* p = v + (a * np + j) * 2;
            const T x0 = p[0], x1 = p[1];
            p[0] = x0 * c - x1 * s;
            p[1] = x0 * s + x1 * c;
        }
}

/// Single-vector form of the rotary op (spec surface; the model uses the
/// precomputed-table form above).
template <typename T>
std::vector<T> apply_rope(const std::vector<T>& vec, const Rope3Coord& coord, const RopeFreqs& f) {
    check(int(vec.size()) == 6 * f.n_pairs, "apply_rope: vector dim must be 6 * n_pairs");
    std::vector<Rope3Coord> one{coord};
    RotTable<T> rt = build_rot_table<T>(one, f);
    std::vector<T> out = vec;
    rope_rotate(out.data(), int(vec.size()), rt.cos_.row(0), rt.sin_.row(0));
    return out;
}

}  // namespace promo
