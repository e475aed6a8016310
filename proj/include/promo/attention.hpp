#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "promo/common.hpp"
#include "promo/mat.hpp"

namespace promo {

// Joint attention over [z_t, style, C_1..C_n] with group visibility:
// latent and style rows see everything, condition rows see only their own
// group. The mask is realized as an additive -1e9 bias before softmax so
// the masked and dense code paths are the same.

constexpr double kMaskBias = -1e9;

enum class SegKind { latent, style, condition };

struct Segment {
    std::string name;
    SegKind kind = SegKind::condition;
    int len = 0;
};

struct SegmentLayout {
    std::vector<Segment> segments;

    int total() const {
        int s = 0;
        for (const auto& seg : segments) s += seg.len;
        return s;
    }
    /// Tokens that stay live during cached inference (latent + style).
    int live_total() const {
        int s = 0;
        for (const auto& seg : segments)
            if (seg.kind != SegKind::condition) s += seg.len;
        return s;
    }
    int cond_total() const { return total() - live_total(); }

    int offset(size_t idx) const {
        int s = 0;
        for (size_t i = 0; i < idx; ++i) s += segments[i].len;
        return s;
    }

    void validate() const {
        int n_latent = 0, n_style = 0;
        bool seen_cond = false;
        for (const auto& seg : segments) {
            check(seg.len >= 1, "layout: empty segment '" + seg.name + "'");
            if (seg.kind == SegKind::latent) {
                check(!seen_cond, "layout: latent segment must precede conditions");
                ++n_latent;
            } else if (seg.kind == SegKind::style) {
                check(!seen_cond, "layout: style segment must precede conditions");
                ++n_style;
            } else {
                seen_cond = true;
            }
        }
        check(n_latent == 1, "layout: exactly one latent segment required");
        check(n_style <= 1, "layout: at most one style segment");
    }

    bool same_condition_blocks(const SegmentLayout& o) const {
        size_t i = 0, j = 0;
        auto next_cond = [](const SegmentLayout& l, size_t& k) -> const Segment* {
            while (k < l.segments.size() && l.segments[k].kind != SegKind::condition) ++k;
            return k < l.segments.size() ? &l.segments[k] : nullptr;
        };
        for (;;) {
            const Segment* a = next_cond(*this, i);
            const Segment* b = next_cond(o, j);
            if (!a && !b) return true;
            if (!a || !b || a->len != b->len) return false;
            ++i;
            ++j;
        }
    }
};

/// Boolean visibility matrix per the group rule: latent/style rows all-true,
/// condition-i rows true exactly on condition-i columns.
inline Mat<uint8_t> build_group_mask(const SegmentLayout& layout) {
    layout.validate();
    const int S = layout.total();
    Mat<uint8_t> mask(S, S, 0);
    int row0 = 0;
    for (const auto& seg : layout.segments) {
        if (seg.kind == SegKind::condition) {
            for (int r = row0; r < row0 + seg.len; ++r)
                for (int c = row0; c < row0 + seg.len; ++c) mask.at(r, c) = 1;
        } else {
            for (int r = row0; r < row0 + seg.len; ++r)
                for (int c = 0; c < S; ++c) mask.at(r, c) = 1;
        }
        row0 += seg.len;
    }
    return mask;
}

template <typename T>
struct AttnResult {
    Mat<T> out;    // rows(Q) x cols(V)
    Mat<T> probs;  // rows(Q) x rows(K), softmax weights
};

/// Scaled dot-product attention restricted to visible columns.
/// Each query row must see at least one column.
template <typename T>
AttnResult<T> masked_attention_probs(const Mat<T>& Q, const Mat<T>& K, const Mat<T>& V,
                                     const Mat<uint8_t>& mask) {
    check(Q.cols == K.cols, "attention: Q/K dim mismatch");
    check(K.rows == V.rows, "attention: K/V row mismatch");
    check(mask.rows == Q.rows && mask.cols == K.rows, "attention: mask shape mismatch");
    for (int i = 0; i < mask.rows; ++i) {
        bool any = false;
        for (int j = 0; j < mask.cols; ++j) any = any || mask.at(i, j);
        check(any, "attention: fully masked query row");
    }

    AttnResult<T> r;
    gemm_nt_into(Q, K, r.probs);
    const T scale = T(1.0 / std::sqrt(double(Q.cols)));
    const T bias = T(kMaskBias);
    for (int i = 0; i < r.probs.rows; ++i) {
        T* li = r.probs.row(i);
        const uint8_t* mi = mask.row(i);
        T mx = -std::numeric_limits<T>::infinity();
        for (int j = 0; j < r.probs.cols; ++j) {
            li[j] = li[j] * scale + (mi[j] ? T(0) : bias);
            mx = std::max(mx, li[j]);
        }
        T sum = T(0);
        for (int j = 0; j < r.probs.cols; ++j) {
            li[j] = std::exp(li[j] - mx);
            sum += li[j];
        }
        const T inv = T(1) / sum;
        for (int j = 0; j < r.probs.cols; ++j) li[j] *= inv;
    }
    r.out = gemm_nn(r.probs, V);
    return r;
}

template <typename T>
Mat<T> masked_attention(const Mat<T>& Q, const Mat<T>& K, const Mat<T>& V,
                        const Mat<uint8_t>& mask) {
    return masked_attention_probs(Q, K, V, mask).out;
}

/// Key/value blocks of all condition tokens of one layer/head, captured at
/// the first denoising step. Copies on capture; immutable afterwards.
template <typename T>
struct LayerKVCache {
    Mat<T> K, V;                   // cond_total x d
    std::vector<int> block_lens;   // per condition segment, in layout order

    int cond_tokens() const { return K.rows; }
};

template <typename T>
LayerKVCache<T> capture_cache(const Mat<T>& K, const Mat<T>& V, const SegmentLayout& layout) {
    layout.validate();
    check(K.rows == layout.total() && V.rows == layout.total(), "capture_cache: K/V row mismatch");
    check(K.cols == V.cols, "capture_cache: K/V dim mismatch");
    LayerKVCache<T> cache;
    cache.K = Mat<T>(layout.cond_total(), K.cols);
    cache.V = Mat<T>(layout.cond_total(), V.cols);
    int src = 0, dst = 0;
    for (const auto& seg : layout.segments) {
        if (seg.kind == SegKind::condition) {
            for (int r = 0; r < seg.len; ++r) {
                std::copy(K.row(src + r), K.row(src + r) + K.cols, cache.K.row(dst + r));
                std::copy(V.row(src + r), V.row(src + r) + V.cols, cache.V.row(dst + r));
            }
            cache.block_lens.push_back(seg.len);
            dst += seg.len;
        }
        src += seg.len;
    }
    return cache;
}

/// Attention for the live rows (latent + style) against [live || cached]
/// keys/values. Latent/style rows have global visibility, so this equals
/// masked_attention over the explicit concatenation with those mask rows.
template <typename T>
Mat<T> attend_with_cache(const Mat<T>& Q_live, const Mat<T>& K_live, const Mat<T>& V_live,
                         const LayerKVCache<T>& cache, const SegmentLayout& layout) {
    layout.validate();
    const int live = layout.live_total();
    check(Q_live.rows == live && K_live.rows == live && V_live.rows == live,
          "attend_with_cache: live rows must cover exactly latent+style");
    std::vector<int> lens;
    for (const auto& seg : layout.segments)
        if (seg.kind == SegKind::condition) lens.push_back(seg.len);
    check(lens == cache.block_lens, "attend_with_cache: cache layout mismatch");
    check(cache.K.cols == K_live.cols, "attend_with_cache: cache dim mismatch");

    Mat<T> K_full(live + cache.cond_tokens(), K_live.cols);
    Mat<T> V_full(live + cache.cond_tokens(), V_live.cols);
    std::copy(K_live.a.begin(), K_live.a.end(), K_full.a.begin());
    std::copy(cache.K.a.begin(), cache.K.a.end(), K_full.a.begin() + K_live.a.size());
    std::copy(V_live.a.begin(), V_live.a.end(), V_full.a.begin());
    std::copy(cache.V.a.begin(), cache.V.a.end(), V_full.a.begin() + V_live.a.size());

    Mat<uint8_t> mask(Q_live.rows, K_full.rows, 1);
    return masked_attention(Q_live, K_full, V_full, mask);
}

}  // namespace promo
