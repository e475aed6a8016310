#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "promo/attention.hpp"
#include "promo/common.hpp"
#include "promo/mat.hpp"
#include "promo/rng.hpp"
#include "promo/rope.hpp"
#include "promo/spatial.hpp"

namespace promo {

// Velocity-prediction transformer over the concatenated multi-modal token
// sequence [z_t, style, C_1..C_n]. All segments share the same pre-norm
// blocks; timestep conditioning enters through adaptive modulation
// (shift/scale/gate) with zero-initialized gates and final projection.

struct ModelConfig {
    int layers = 4;
    int d_model = 48;
    int n_heads = 2;
    int d_token = 48;  // 3 * patch^2
    int d_freq = 32;   // sinusoidal timestep embedding width
    int style_vocab = 0;
    double rope_base = 10000.0;

    int d_head() const { return d_model / n_heads; }
    int d_mlp() const { return 4 * d_model; }

    void validate() const {
        check(layers >= 1 && d_model >= 6 && n_heads >= 1, "model config: bad sizes");
        check(d_model % n_heads == 0, "model config: d_model must divide by n_heads");
        check(d_head() % 6 == 0, "model config: head dim must be divisible by 6 (3 rope axes)");
        check(d_freq >= 2 && d_freq % 2 == 0, "model config: d_freq must be even");
        check(d_token >= 1, "model config: bad token dim");
    }
};

template <typename T>
struct ModelParams {
    ModelConfig cfg;

    struct Block {
        Mat<T> w_qkv, b_qkv;    // (3d x d), (1 x 3d)
        Mat<T> w_o, b_o;        // (d x d), (1 x d)
        Mat<T> w_mlp1, b_mlp1;  // (4d x d), (1 x 4d)
        Mat<T> w_mlp2, b_mlp2;  // (d x 4d), (1 x d)
        Mat<T> w_mod, b_mod;    // (6d x d), (1 x 6d): shift/scale/gate x2
    };
    std::vector<Block> blocks;

    Mat<T> w_in, b_in;            // shared image-token embedding (d x d_token)
    Mat<T> style_emb;             // style vocabulary table (vocab x d)
    Mat<T> w_t1, b_t1;            // timestep MLP (d x d_freq)
    Mat<T> w_t2, b_t2;            // (d x d)
    Mat<T> w_mod_final, b_mod_final;  // (2d x d): shift/scale
    Mat<T> w_out, b_out;          // (d_token x d)

    template <typename F>
    void visit(F&& f) {
        f("in.w", w_in);
        f("in.b", b_in);
        f("style.emb", style_emb);
        f("tmlp.w1", w_t1);
        f("tmlp.b1", b_t1);
        f("tmlp.w2", w_t2);
        f("tmlp.b2", b_t2);
        for (size_t l = 0; l < blocks.size(); ++l) {
            const std::string p = "blk" + std::to_string(l) + ".";
            f(p + "qkv.w", blocks[l].w_qkv);
            f(p + "qkv.b", blocks[l].b_qkv);
            f(p + "o.w", blocks[l].w_o);
            f(p + "o.b", blocks[l].b_o);
            f(p + "mlp1.w", blocks[l].w_mlp1);
            f(p + "mlp1.b", blocks[l].b_mlp1);
            f(p + "mlp2.w", blocks[l].w_mlp2);
            f(p + "mlp2.b", blocks[l].b_mlp2);
            f(p + "mod.w", blocks[l].w_mod);
            f(p + "mod.b", blocks[l].b_mod);
        }
        f("final.mod.w", w_mod_final);
        f("final.mod.b", b_mod_final);
        f("final.out.w", w_out);
        f("final.out.b", b_out);
    }
    template <typename F>
    void visit(F&& f) const {
        const_cast<ModelParams*>(this)->visit(
            [&](const std::string& n, Mat<T>& m) { f(n, const_cast<const Mat<T>&>(m)); });
    }

    size_t param_count() const {
        size_t n = 0;
        visit([&](const std::string&, const Mat<T>& m) { n += m.size(); });
        return n;
    }
};

template <typename T>
ModelParams<T> make_params(const ModelConfig& cfg) {
    cfg.validate();
    const int d = cfg.d_model;
    ModelParams<T> p;
    p.cfg = cfg;
    p.blocks.resize(cfg.layers);
    for (auto& b : p.blocks) {
        b.w_qkv = Mat<T>(3 * d, d);
        b.b_qkv = Mat<T>(1, 3 * d);
        b.w_o = Mat<T>(d, d);
        b.b_o = Mat<T>(1, d);
        b.w_mlp1 = Mat<T>(cfg.d_mlp(), d);
        b.b_mlp1 = Mat<T>(1, cfg.d_mlp());
        b.w_mlp2 = Mat<T>(d, cfg.d_mlp());
        b.b_mlp2 = Mat<T>(1, d);
        b.w_mod = Mat<T>(6 * d, d);
        b.b_mod = Mat<T>(1, 6 * d);
    }
    p.w_in = Mat<T>(d, cfg.d_token);
    p.b_in = Mat<T>(1, d);
    p.style_emb = Mat<T>(std::max(1, cfg.style_vocab), d);
    p.w_t1 = Mat<T>(d, cfg.d_freq);
    p.b_t1 = Mat<T>(1, d);
    p.w_t2 = Mat<T>(d, d);
    p.b_t2 = Mat<T>(1, d);
    p.w_mod_final = Mat<T>(2 * d, d);
    p.b_mod_final = Mat<T>(1, 2 * d);
    p.w_out = Mat<T>(cfg.d_token, d);
    p.b_out = Mat<T>(1, cfg.d_token);
    return p;
}

/// Initialization: scaled-normal weights, zero biases, and zeroed
/// modulation + final projection so a fresh model predicts zero velocity.
template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, uint64_t seed) {
    ModelParams<T> p = make_params<T>(cfg);
    p.visit([&](const std::string& name, Mat<T>& m) {
        // Biases are 1-row; modulation and the final projection start at zero.
        const bool zero = m.rows == 1 || name.find(".mod.") != std::string::npos ||
                          name == "final.out.w";
        if (zero) {
            m.zero();
            return;
        }
        uint64_t h = 1469598103934665603ULL;
        for (char c : name) h = (h ^ uint64_t(c)) * 1099511628211ULL;
        Rng rng(seed, h);
        const double scale = name == "style.emb" ? 1.0 / std::sqrt(double(cfg.d_model))
                                                 : 1.0 / std::sqrt(double(m.cols));
        for (auto& v : m.a) v = T(rng.normal() * scale);
    });
    return p;
}

/// One condition input at model level: tokens plus rotary coordinates.
template <typename T>
struct CondGroup {
    int id = 0;
    CondKind kind = CondKind::garment;
    Mat<T> tokens;  // n x d_token
    std::vector<Rope3Coord> coords;
};

template <typename T>
struct ModelInput {
    Mat<T> latent;  // N x d_token
    std::vector<Rope3Coord> latent_coords;
    std::vector<int> style_tokens;  // empty -> no style segment
    std::vector<CondGroup<T>> conditions;
    double t = 0.0;

    void validate(const ModelConfig& cfg) const {
        check(latent.cols == cfg.d_token, "input: latent token dim mismatch");
        check(latent.rows == int(latent_coords.size()), "input: latent coord count mismatch");
        for (size_t i = 0; i < conditions.size(); ++i) {
            const auto& c = conditions[i];
            check(c.id >= 1, "input: condition ids must be >= 1");
            check(c.tokens.cols == cfg.d_token, "input: condition token dim mismatch");
            check(c.tokens.rows == int(c.coords.size()), "input: condition coord count mismatch");
            for (size_t j = 0; j < i; ++j)
                check(conditions[j].id != c.id, "input: duplicate condition group id");
        }
        for (int tok : style_tokens)
            check(tok >= 0 && tok < cfg.style_vocab, "input: style token out of vocabulary");
    }
};

template <typename T>
SegmentLayout make_layout(const ModelInput<T>& in) {
    SegmentLayout layout;
    layout.segments.push_back({"latent", SegKind::latent, in.latent.rows});
    if (!in.style_tokens.empty())
        layout.segments.push_back({"style", SegKind::style, int(in.style_tokens.size())});
    for (const auto& c : in.conditions)
        layout.segments.push_back({"C" + std::to_string(c.id), SegKind::condition, c.tokens.rows});
    layout.validate();
    return layout;
}

/// Per-layer, per-head condition KV blocks captured at the first timestep.
template <typename T>
struct KVCacheSet {
    SegmentLayout layout;
    std::vector<std::vector<LayerKVCache<T>>> per_layer;  // [layer][head]

    bool empty() const { return per_layer.empty(); }
};

template <typename T>
struct ForwardOptions {
    /// When set, condition-token modulation is pinned to this timestep
    /// (the frozen-condition reference for cached inference).
    double freeze_cond_t = std::numeric_limits<double>::quiet_NaN();
    KVCacheSet<T>* capture = nullptr;
    const KVCacheSet<T>* reuse = nullptr;
    /// Per-layer snapshots of the full token state: [embedding, block 1, ...].
    std::vector<Mat<T>>* trace = nullptr;
};

namespace nn {

template <typename T>
T silu(T x) {
    const T s = T(1) / (T(1) + std::exp(-x));
    return x * s;
}

template <typename T>
T silu_grad(T x) {
    const T s = T(1) / (T(1) + std::exp(-x));
    return s * (T(1) + x * (T(1) - s));
}

template <typename T>
T gelu(T x) {
    return T(0.5) * x * (T(1) + std::erf(x * T(0.7071067811865475)));
}

template <typename T>
T gelu_grad(T x) {
    const T phi = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865475)));
    const T dens = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
    return phi + x * dens;
}

/// Non-affine LayerNorm per row; returns normalized rows, stores 1/std.
template <typename T>
Mat<T> layer_norm(const Mat<T>& x, std::vector<T>* rstd_out = nullptr) {
    Mat<T> y(x.rows, x.cols);
    if (rstd_out) rstd_out->resize(x.rows);
    const T eps = T(1e-6);
    for (int i = 0; i < x.rows; ++i) {
        const T* xi = x.row(i);
        T mu = T(0);
        for (int j = 0; j < x.cols; ++j) mu += xi[j];
        mu /= T(x.cols);
        T var = T(0);
        for (int j = 0; j < x.cols; ++j) var += (xi[j] - mu) * (xi[j] - mu);
        var /= T(x.cols);
        const T r = T(1) / std::sqrt(var + eps);
        T* yi = y.row(i);
        for (int j = 0; j < x.cols; ++j) yi[j] = (xi[j] - mu) * r;
        if (rstd_out) (*rstd_out)[i] = r;
    }
    return y;
}

/// dL/dx for non-affine LayerNorm given normalized output y and 1/std.
template <typename T>
Mat<T> layer_norm_backward(const Mat<T>& dy, const Mat<T>& y, const std::vector<T>& rstd) {
    Mat<T> dx(dy.rows, dy.cols);
    for (int i = 0; i < dy.rows; ++i) {
        const T* dyi = dy.row(i);
        const T* yi = y.row(i);
        T m1 = T(0), m2 = T(0);
        for (int j = 0; j < dy.cols; ++j) {
            m1 += dyi[j];
            m2 += dyi[j] * yi[j];
        }
        m1 /= T(dy.cols);
        m2 /= T(dy.cols);
        T* dxi = dx.row(i);
        for (int j = 0; j < dy.cols; ++j) dxi[j] = rstd[i] * (dyi[j] - m1 - yi[j] * m2);
    }
    return dx;
}

/// y = x * W^T + b (weights stored out x in).
template <typename T>
Mat<T> linear(const Mat<T>& x, const Mat<T>& w, const Mat<T>& b) {
    Mat<T> y = gemm_nt(x, w);
    add_rowvec(y, b.a);
    return y;
}

template <typename T>
std::vector<T> sinusoid_embedding(double t, int d_freq, double base = 10000.0) {
    const int half = d_freq / 2;
    std::vector<T> f(d_freq);
    const double ts = t * 1000.0;
    for (int k = 0; k < half; ++k) {
        const double w = std::exp(-std::log(base) * double(k) / double(half));
        f[2 * k] = T(std::cos(ts * w));
        f[2 * k + 1] = T(std::sin(ts * w));
    }
    return f;
}

}  // namespace nn

namespace fwd_detail {

template <typename T>
struct Modulation {
    // per-channel vectors, length d each
    std::vector<T> shift1, scale1, gate1, shift2, scale2, gate2;
};

template <typename T>
Modulation<T> split_mod(const Mat<T>& mod_row, int d) {
    Modulation<T> m;
    auto grab = [&](int idx) {
        return std::vector<T>(mod_row.a.begin() + idx * d, mod_row.a.begin() + (idx + 1) * d);
    };
    m.shift1 = grab(0);
    m.scale1 = grab(1);
    m.gate1 = grab(2);
    m.shift2 = grab(3);
    m.scale2 = grab(4);
    m.gate2 = grab(5);
    return m;
}

/// Timestep embedding path: sinusoid -> silu MLP -> t_emb, u = silu(t_emb).
template <typename T>
struct TimeFeatures {
    std::vector<T> sinusoid, h_pre, h, t_emb, u;
};

template <typename T>
TimeFeatures<T> time_features(const ModelParams<T>& p, double t) {
    TimeFeatures<T> tf;
    tf.sinusoid = nn::sinusoid_embedding<T>(t, p.cfg.d_freq);
    Mat<T> f(1, p.cfg.d_freq);
    f.a = tf.sinusoid;
    Mat<T> h_pre = nn::linear(f, p.w_t1, p.b_t1);
    tf.h_pre = h_pre.a;
    Mat<T> h(1, p.cfg.d_model);
    for (int j = 0; j < p.cfg.d_model; ++j) h.a[j] = nn::silu(h_pre.a[j]);
    tf.h = h.a;
    Mat<T> temb = nn::linear(h, p.w_t2, p.b_t2);
    tf.t_emb = temb.a;
    tf.u.resize(p.cfg.d_model);
    for (int j = 0; j < p.cfg.d_model; ++j) tf.u[j] = nn::silu(temb.a[j]);
    return tf;
}

template <typename T>
void modulate_rows(Mat<T>& x, int row0, int row1, const std::vector<T>& shift,
                   const std::vector<T>& scale) {
    for (int i = row0; i < row1; ++i) {
        T* xi = x.row(i);
        for (int j = 0; j < x.cols; ++j) xi[j] = xi[j] * (T(1) + scale[j]) + shift[j];
    }
}

template <typename T>
void gate_add_rows(Mat<T>& x, const Mat<T>& branch, int row0, int row1,
                   const std::vector<T>& gate) {
    for (int i = row0; i < row1; ++i) {
        T* xi = x.row(i);
        const T* bi = branch.row(i);
        for (int j = 0; j < x.cols; ++j) xi[j] += gate[j] * bi[j];
    }
}

template <typename T>
Mat<T> slice_cols(const Mat<T>& x, int c0, int width) {
    Mat<T> y(x.rows, width);
    for (int i = 0; i < x.rows; ++i)
        std::copy(x.row(i) + c0, x.row(i) + c0 + width, y.row(i));
    return y;
}

template <typename T>
void unslice_cols(Mat<T>& x, const Mat<T>& y, int c0) {
    for (int i = 0; i < x.rows; ++i)
        std::copy(y.row(i), y.row(i) + y.cols, x.row(i) + c0);
}

}  // namespace fwd_detail

/// Forward pass. Returns predicted velocity on the latent tokens only
/// (N x d_token). Supports full attention with the group mask, cache
/// capture at the first step, and cached live-token inference.
template <typename T>
Mat<T> model_forward(const ModelParams<T>& p, const ModelInput<T>& in,
                     const ForwardOptions<T>& opts = {}) {
    using namespace fwd_detail;
    const ModelConfig& cfg = p.cfg;
    in.validate(cfg);
    const bool cached = opts.reuse != nullptr;
    check(!(cached && opts.capture), "forward: cannot capture and reuse at once");
    check(!cached || in.conditions.empty(), "forward: cached mode takes live segments only");

    SegmentLayout layout;
    if (cached) {
        layout = opts.reuse->layout;
        check(int(opts.reuse->per_layer.size()) == cfg.layers, "forward: cache layer mismatch");
        for (const auto& heads : opts.reuse->per_layer)
            check(int(heads.size()) == cfg.n_heads, "forward: cache head mismatch");
        check(layout.segments[0].len == in.latent.rows, "forward: cache latent length mismatch");
        int style_len = 0;
        for (const auto& seg : layout.segments)
            if (seg.kind == SegKind::style) style_len = seg.len;
        check(style_len == int(in.style_tokens.size()), "forward: cache style length mismatch");
    } else {
        layout = make_layout(in);
    }

    const int N = in.latent.rows;
    const int L_style = int(in.style_tokens.size());
    const int S_live = N + L_style;
    const int S = cached ? S_live : layout.total();
    const int d = cfg.d_model;

    // Embed all resident tokens.
    Mat<T> X(S, d);
    {
        Mat<T> lat = nn::linear(in.latent, p.w_in, p.b_in);
        for (int i = 0; i < N; ++i) std::copy(lat.row(i), lat.row(i) + d, X.row(i));
        for (int i = 0; i < L_style; ++i) {
            const T* e = p.style_emb.row(in.style_tokens[i]);
            std::copy(e, e + d, X.row(N + i));
        }
        if (!cached) {
            int r = S_live;
            for (const auto& c : in.conditions) {
                Mat<T> ct = nn::linear(c.tokens, p.w_in, p.b_in);
                for (int i = 0; i < ct.rows; ++i) std::copy(ct.row(i), ct.row(i) + d, X.row(r + i));
                r += ct.rows;
            }
        }
    }

    // Rotary tables over resident tokens (style tokens sit at the origin).
    const RopeFreqs freqs = make_rope_freqs(cfg.d_head(), cfg.rope_base);
    std::vector<Rope3Coord> coords = in.latent_coords;
    coords.resize(S_live);  // style coords default to (0,0,0)
    if (!cached)
        for (const auto& c : in.conditions) coords.insert(coords.end(), c.coords.begin(), c.coords.end());
    const RotTable<T> rot = build_rot_table<T>(coords, freqs);

    // Timestep modulation; condition rows optionally pinned to freeze_cond_t.
    const TimeFeatures<T> tf = time_features(p, in.t);
    const bool frozen = !std::isnan(opts.freeze_cond_t) && !cached;
    TimeFeatures<T> tf_frozen;
    if (frozen) tf_frozen = time_features(p, opts.freeze_cond_t);

    Mat<uint8_t> mask;
    if (!cached) mask = build_group_mask(layout);

    if (opts.capture) {
        opts.capture->layout = layout;
        opts.capture->per_layer.assign(cfg.layers, {});
    }
    if (opts.trace) {
        opts.trace->clear();
        opts.trace->push_back(X);
    }

    Mat<T> u_row(1, d), u_frozen_row(1, d);
    u_row.a = tf.u;
    if (frozen) u_frozen_row.a = tf_frozen.u;

    const int dh = cfg.d_head();
    for (int l = 0; l < cfg.layers; ++l) {
        const auto& blk = p.blocks[l];
        const Modulation<T> mod = split_mod(nn::linear(u_row, blk.w_mod, blk.b_mod), d);
        const Modulation<T> mod_c =
            frozen ? split_mod(nn::linear(u_frozen_row, blk.w_mod, blk.b_mod), d) : mod;

        // Attention branch.
        Mat<T> h1 = nn::layer_norm(X);
        modulate_rows(h1, 0, S_live, mod.shift1, mod.scale1);
        if (S > S_live) modulate_rows(h1, S_live, S, mod_c.shift1, mod_c.scale1);
        Mat<T> qkv = nn::linear(h1, blk.w_qkv, blk.b_qkv);
        Mat<T> attn_cat(S, d);
        for (int h = 0; h < cfg.n_heads; ++h) {
            Mat<T> Q = slice_cols(qkv, h * dh, dh);
            Mat<T> K = slice_cols(qkv, d + h * dh, dh);
            Mat<T> V = slice_cols(qkv, 2 * d + h * dh, dh);
            for (int i = 0; i < S; ++i) {
                rope_rotate(Q.row(i), dh, rot.cos_.row(i), rot.sin_.row(i));
                rope_rotate(K.row(i), dh, rot.cos_.row(i), rot.sin_.row(i));
            }
            Mat<T> out_h;
            if (cached) {
                out_h = attend_with_cache(Q, K, V, opts.reuse->per_layer[l][h], layout);
            } else {
                if (opts.capture) {
                    opts.capture->per_layer[l].push_back(capture_cache(K, V, layout));
                }
                out_h = masked_attention(Q, K, V, mask);
            }
            unslice_cols(attn_cat, out_h, h * dh);
        }
        Mat<T> attn_out = nn::linear(attn_cat, blk.w_o, blk.b_o);
        gate_add_rows(X, attn_out, 0, S_live, mod.gate1);
        if (S > S_live) gate_add_rows(X, attn_out, S_live, S, mod_c.gate1);

        // MLP branch.
        Mat<T> h2 = nn::layer_norm(X);
        modulate_rows(h2, 0, S_live, mod.shift2, mod.scale2);
        if (S > S_live) modulate_rows(h2, S_live, S, mod_c.shift2, mod_c.scale2);
        Mat<T> m1 = nn::linear(h2, blk.w_mlp1, blk.b_mlp1);
        for (auto& v : m1.a) v = nn::gelu(v);
        Mat<T> m2 = nn::linear(m1, blk.w_mlp2, blk.b_mlp2);
        gate_add_rows(X, m2, 0, S_live, mod.gate2);
        if (S > S_live) gate_add_rows(X, m2, S_live, S, mod_c.gate2);

        if (opts.trace) opts.trace->push_back(X);
    }

    // Final head reads latent rows only.
    Mat<T> x_lat(N, d);
    for (int i = 0; i < N; ++i) std::copy(X.row(i), X.row(i) + d, x_lat.row(i));
    Mat<T> ln_f = nn::layer_norm(x_lat);
    const Mat<T> mod_f = nn::linear(u_row, p.w_mod_final, p.b_mod_final);
    std::vector<T> shift_f(mod_f.a.begin(), mod_f.a.begin() + d);
    std::vector<T> scale_f(mod_f.a.begin() + d, mod_f.a.begin() + 2 * d);
    modulate_rows(ln_f, 0, N, shift_f, scale_f);
    return nn::linear(ln_f, p.w_out, p.b_out);
}

// ---------------------------------------------------------------------------
// Flow-matching targets and the region-weighted loss.
// ---------------------------------------------------------------------------

struct FlowPair {
    TokenGrid z_t;
    double t = 0.0;
    TokenGrid target_v;
};

/// Rectified-flow pair: z_t = (1-t) z0 + t eps, v = eps - z0.
inline FlowPair make_flow_pair(const TokenGrid& z0, const TokenGrid& eps, double t) {
    check(z0.same_shape(eps), "make_flow_pair: shape mismatch");
    check(t >= 0.0 && t <= 1.0, "make_flow_pair: t must be in [0,1]");
    FlowPair fp;
    fp.t = t;
    fp.z_t = z0;
    fp.target_v = z0;
    const float tf = float(t);
    for (size_t i = 0; i < z0.data.size(); ++i) {
        fp.z_t.data[i] = (1.0f - tf) * z0.data[i] + tf * eps.data[i];
        fp.target_v.data[i] = eps.data[i] - z0.data[i];
    }
    return fp;
}

/// Mean over tokens and channels of W-weighted squared velocity residual.
inline double weighted_fm_loss(const TokenGrid& pred, const TokenGrid& target, const WeightMap& wm) {
    check(pred.same_shape(target), "weighted_fm_loss: grid shape mismatch");
    check(pred.h == wm.h && pred.w == wm.w, "weighted_fm_loss: weight map shape mismatch");
    double acc = 0.0;
    for (int y = 0; y < pred.h; ++y)
        for (int x = 0; x < pred.w; ++x) {
            const float* a = pred.token(y, x);
            const float* b = target.token(y, x);
            double s = 0.0;
            for (int k = 0; k < pred.d; ++k) {
                const double r = double(a[k]) - double(b[k]);
                s += r * r;
            }
            acc += double(wm.at(y, x)) * s;
        }
    return acc / (double(pred.h) * pred.w * pred.d);
}

}  // namespace promo
