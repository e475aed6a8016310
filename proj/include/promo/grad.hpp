#pragma once

#include <cmath>
#include <vector>

#include "promo/model.hpp"

namespace promo {

// Reverse-mode gradients for the full training objective
// weighted_fm_loss(forward(z_t, t, style, conditions), v, W) w.r.t. every
// parameter. The training forward runs the same building blocks as
// model_forward (full attention, shared timestep modulation) and records
// the activations the backward walk needs.

template <typename T>
using ModelGrads = ModelParams<T>;

template <typename T>
ModelGrads<T> make_grads(const ModelConfig& cfg) {
    return make_params<T>(cfg);  // zero-filled
}

namespace grad_detail {

template <typename T>
struct BlockTape {
    Mat<T> x_in;
    Mat<T> ln1, h1;
    std::vector<T> rstd1;
    std::vector<Mat<T>> Qr, Kr, V, P;  // per head
    Mat<T> attn_cat, attn_out;
    Mat<T> x_mid;
    Mat<T> ln2, h2;
    std::vector<T> rstd2;
    Mat<T> m1_pre, m1, m2;
    fwd_detail::Modulation<T> mod;
};

template <typename T>
struct Tape {
    SegmentLayout layout;
    Mat<uint8_t> mask;
    RotTable<T> rot;
    fwd_detail::TimeFeatures<T> tf;
    std::vector<BlockTape<T>> blocks;
    Mat<T> x_final;
    Mat<T> ln_f, h_f;
    std::vector<T> rstd_f;
    std::vector<T> shift_f, scale_f;
    Mat<T> pred;
};

}  // namespace grad_detail

/// Training-mode forward: full joint attention, one shared modulation set,
/// tape recorded for backward.
template <typename T>
Mat<T> forward_train(const ModelParams<T>& p, const ModelInput<T>& in, grad_detail::Tape<T>& tape) {
    using namespace fwd_detail;
    const ModelConfig& cfg = p.cfg;
    in.validate(cfg);
    tape.layout = make_layout(in);
    const int N = in.latent.rows;
    const int L_style = int(in.style_tokens.size());
    const int S = tape.layout.total();
    const int d = cfg.d_model;
    const int dh = cfg.d_head();

    Mat<T> X(S, d);
    {
        Mat<T> lat = nn::linear(in.latent, p.w_in, p.b_in);
        for (int i = 0; i < N; ++i) std::copy(lat.row(i), lat.row(i) + d, X.row(i));
        for (int i = 0; i < L_style; ++i) {
            const T* e = p.style_emb.row(in.style_tokens[i]);
            std::copy(e, e + d, X.row(N + i));
        }
        int r = N + L_style;
        for (const auto& c : in.conditions) {
            Mat<T> ct = nn::linear(c.tokens, p.w_in, p.b_in);
            for (int i = 0; i < ct.rows; ++i) std::copy(ct.row(i), ct.row(i) + d, X.row(r + i));
            r += ct.rows;
        }
    }

    const RopeFreqs freqs = make_rope_freqs(dh, cfg.rope_base);
    std::vector<Rope3Coord> coords = in.latent_coords;
    coords.resize(size_t(N) + L_style);
    for (const auto& c : in.conditions) coords.insert(coords.end(), c.coords.begin(), c.coords.end());
    tape.rot = build_rot_table<T>(coords, freqs);
    tape.mask = build_group_mask(tape.layout);
    tape.tf = time_features(p, in.t);

    Mat<T> u_row(1, d);
    u_row.a = tape.tf.u;

    tape.blocks.clear();
    tape.blocks.resize(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
        auto& bt = tape.blocks[l];
        const auto& blk = p.blocks[l];
        bt.mod = split_mod(nn::linear(u_row, blk.w_mod, blk.b_mod), d);
        bt.x_in = X;

        bt.ln1 = nn::layer_norm(X, &bt.rstd1);
        bt.h1 = bt.ln1;
        modulate_rows(bt.h1, 0, S, bt.mod.shift1, bt.mod.scale1);
        Mat<T> qkv = nn::linear(bt.h1, blk.w_qkv, blk.b_qkv);
        bt.attn_cat = Mat<T>(S, d);
        for (int h = 0; h < cfg.n_heads; ++h) {
            Mat<T> Q = slice_cols(qkv, h * dh, dh);
            Mat<T> K = slice_cols(qkv, d + h * dh, dh);
            Mat<T> V = slice_cols(qkv, 2 * d + h * dh, dh);
            for (int i = 0; i < S; ++i) {
                rope_rotate(Q.row(i), dh, tape.rot.cos_.row(i), tape.rot.sin_.row(i));
                rope_rotate(K.row(i), dh, tape.rot.cos_.row(i), tape.rot.sin_.row(i));
            }
            AttnResult<T> ar = masked_attention_probs(Q, K, V, tape.mask);
            unslice_cols(bt.attn_cat, ar.out, h * dh);
            bt.Qr.push_back(std::move(Q));
            bt.Kr.push_back(std::move(K));
            bt.V.push_back(std::move(V));
            bt.P.push_back(std::move(ar.probs));
        }
        bt.attn_out = nn::linear(bt.attn_cat, blk.w_o, blk.b_o);
        gate_add_rows(X, bt.attn_out, 0, S, bt.mod.gate1);
        bt.x_mid = X;

        bt.ln2 = nn::layer_norm(X, &bt.rstd2);
        bt.h2 = bt.ln2;
        modulate_rows(bt.h2, 0, S, bt.mod.shift2, bt.mod.scale2);
        bt.m1_pre = nn::linear(bt.h2, blk.w_mlp1, blk.b_mlp1);
        bt.m1 = bt.m1_pre;
        for (auto& v : bt.m1.a) v = nn::gelu(v);
        bt.m2 = nn::linear(bt.m1, blk.w_mlp2, blk.b_mlp2);
        gate_add_rows(X, bt.m2, 0, S, bt.mod.gate2);
    }

    tape.x_final = X;
    Mat<T> x_lat(N, d);
    for (int i = 0; i < N; ++i) std::copy(X.row(i), X.row(i) + d, x_lat.row(i));
    tape.ln_f = nn::layer_norm(x_lat, &tape.rstd_f);
    const Mat<T> mod_f = nn::linear(u_row, p.w_mod_final, p.b_mod_final);
    tape.shift_f.assign(mod_f.a.begin(), mod_f.a.begin() + d);
    tape.scale_f.assign(mod_f.a.begin() + d, mod_f.a.begin() + 2 * d);
    tape.h_f = tape.ln_f;
    fwd_detail::modulate_rows(tape.h_f, 0, N, tape.shift_f, tape.scale_f);
    tape.pred = nn::linear(tape.h_f, p.w_out, p.b_out);
    return tape.pred;
}

namespace grad_detail {

template <typename T>
void gate_backward(const Mat<T>& dx_out, const Mat<T>& branch, const std::vector<T>& gate,
                   int rows, Mat<T>& dbranch, std::vector<T>& dgate) {
    dbranch = Mat<T>(dx_out.rows, dx_out.cols);
    for (int i = 0; i < rows; ++i) {
        const T* di = dx_out.row(i);
        const T* bi = branch.row(i);
        T* dbi = dbranch.row(i);
        for (int j = 0; j < dx_out.cols; ++j) {
            dgate[j] += di[j] * bi[j];
            dbi[j] = di[j] * gate[j];
        }
    }
}

template <typename T>
void modulate_backward(const Mat<T>& dh, const Mat<T>& ln, const std::vector<T>& scale,
                       Mat<T>& dln, std::vector<T>& dshift, std::vector<T>& dscale) {
    dln = Mat<T>(dh.rows, dh.cols);
    for (int i = 0; i < dh.rows; ++i) {
        const T* di = dh.row(i);
        const T* li = ln.row(i);
        T* dl = dln.row(i);
        for (int j = 0; j < dh.cols; ++j) {
            dshift[j] += di[j];
            dscale[j] += di[j] * li[j];
            dl[j] = di[j] * (T(1) + scale[j]);
        }
    }
}

// dW += dy^T x, db += colsum(dy), dx = dy W  for y = x W^T + b.
template <typename T>
Mat<T> linear_backward(const Mat<T>& dy, const Mat<T>& x, const Mat<T>& w, Mat<T>& dw, Mat<T>& db) {
    gemm_tn_acc(dy, x, dw);
    colsum_acc(dy, db.a);
    return gemm_nn(dy, w);
}

}  // namespace grad_detail

/// Loss and parameter gradients for one training example. `token_weights`
/// holds the per-latent-token loss weights in grid row-major order.
/// Returns the scalar loss; gradients accumulate into `g`.
template <typename T>
double loss_and_grad(const ModelParams<T>& p, const ModelInput<T>& in, const Mat<T>& target_v,
                     const std::vector<T>& token_weights, ModelGrads<T>& g) {
    using namespace grad_detail;
    using namespace fwd_detail;
    const ModelConfig& cfg = p.cfg;
    Tape<T> tape;
    const Mat<T> pred = forward_train(p, in, tape);
    check(target_v.rows == pred.rows && target_v.cols == pred.cols, "loss: target shape mismatch");
    check(int(token_weights.size()) == pred.rows, "loss: weight count mismatch");

    const int N = pred.rows;
    const int d = cfg.d_model;
    const int dh = cfg.d_head();
    const int S = tape.layout.total();
    const double denom = double(N) * pred.cols;

    double loss = 0.0;
    Mat<T> dpred(N, pred.cols);
    for (int i = 0; i < N; ++i) {
        const T wi = token_weights[i];
        const T* a = pred.row(i);
        const T* b = target_v.row(i);
        T* di = dpred.row(i);
        for (int j = 0; j < pred.cols; ++j) {
            const double r = double(a[j]) - double(b[j]);
            loss += double(wi) * r * r;
            di[j] = T(2.0 * double(wi) * r / denom);
        }
    }
    loss /= denom;

    // Final head.
    std::vector<T> du(d, T(0));
    Mat<T> dh_f = linear_backward(dpred, tape.h_f, p.w_out, g.w_out, g.b_out);
    Mat<T> dln_f;
    {
        std::vector<T> dshift_f(d, T(0)), dscale_f(d, T(0));
        modulate_backward(dh_f, tape.ln_f, tape.scale_f, dln_f, dshift_f, dscale_f);
        Mat<T> dmod_f(1, 2 * d);
        std::copy(dshift_f.begin(), dshift_f.end(), dmod_f.a.begin());
        std::copy(dscale_f.begin(), dscale_f.end(), dmod_f.a.begin() + d);
        Mat<T> u_row(1, d);
        u_row.a = tape.tf.u;
        Mat<T> du_row = linear_backward(dmod_f, u_row, p.w_mod_final, g.w_mod_final, g.b_mod_final);
        for (int j = 0; j < d; ++j) du[j] += du_row.a[j];
    }
    Mat<T> dx(S, d);
    {
        Mat<T> dx_lat = nn::layer_norm_backward(dln_f, tape.ln_f, tape.rstd_f);
        for (int i = 0; i < N; ++i) std::copy(dx_lat.row(i), dx_lat.row(i) + d, dx.row(i));
    }

    // Blocks in reverse.
    const T scale = T(1.0 / std::sqrt(double(dh)));
    for (int l = cfg.layers - 1; l >= 0; --l) {
        const auto& blk = p.blocks[l];
        const auto& bt = tape.blocks[l];
        auto& gb = g.blocks[l];
        std::vector<T> dmod(6 * d, T(0));
        auto seg = [&](int idx) { return dmod.begin() + idx * d; };

        // MLP half.
        Mat<T> dm2;
        {
            std::vector<T> dgate2(d, T(0));
            gate_backward(dx, bt.m2, bt.mod.gate2, S, dm2, dgate2);
            std::copy(dgate2.begin(), dgate2.end(), seg(5));
        }
        Mat<T> dm1 = linear_backward(dm2, bt.m1, p.blocks[l].w_mlp2, gb.w_mlp2, gb.b_mlp2);
        for (size_t i = 0; i < dm1.a.size(); ++i) dm1.a[i] *= nn::gelu_grad(bt.m1_pre.a[i]);
        Mat<T> dh2 = linear_backward(dm1, bt.h2, blk.w_mlp1, gb.w_mlp1, gb.b_mlp1);
        {
            Mat<T> dln2;
            std::vector<T> dshift2(d, T(0)), dscale2(d, T(0));
            modulate_backward(dh2, bt.ln2, bt.mod.scale2, dln2, dshift2, dscale2);
            std::copy(dshift2.begin(), dshift2.end(), seg(3));
            std::copy(dscale2.begin(), dscale2.end(), seg(4));
            Mat<T> dmid = nn::layer_norm_backward(dln2, bt.ln2, bt.rstd2);
            for (size_t i = 0; i < dx.a.size(); ++i) dx.a[i] += dmid.a[i];
        }

        // Attention half.
        Mat<T> dattn_out;
        {
            std::vector<T> dgate1(d, T(0));
            gate_backward(dx, bt.attn_out, bt.mod.gate1, S, dattn_out, dgate1);
            std::copy(dgate1.begin(), dgate1.end(), seg(2));
        }
        Mat<T> dattn_cat = linear_backward(dattn_out, bt.attn_cat, blk.w_o, gb.w_o, gb.b_o);
        Mat<T> dqkv(S, 3 * d);
        for (int h = 0; h < cfg.n_heads; ++h) {
            Mat<T> dout_h = slice_cols(dattn_cat, h * dh, dh);
            Mat<T> dP = gemm_nt(dout_h, bt.V[h]);
            Mat<T> dV(S, dh);
            gemm_tn_acc(bt.P[h], dout_h, dV);
            // softmax backward: dlogits = P .* (dP - rowsum(dP .* P))
            Mat<T>& dl = dP;
            for (int i = 0; i < S; ++i) {
                const T* pi = bt.P[h].row(i);
                T* dli = dl.row(i);
                T acc = T(0);
                for (int j = 0; j < S; ++j) acc += dli[j] * pi[j];
                for (int j = 0; j < S; ++j) dli[j] = pi[j] * (dli[j] - acc);
            }
            Mat<T> dQr = gemm_nn(dl, bt.Kr[h]);
            Mat<T> dKr(S, dh);
            gemm_tn_acc(dl, bt.Qr[h], dKr);
            for (size_t i = 0; i < dQr.a.size(); ++i) {
                dQr.a[i] *= scale;
                dKr.a[i] *= scale;
            }
            for (int i = 0; i < S; ++i) {
                rope_rotate(dQr.row(i), dh, tape.rot.cos_.row(i), tape.rot.sin_.row(i), true);
                rope_rotate(dKr.row(i), dh, tape.rot.cos_.row(i), tape.rot.sin_.row(i), true);
            }
            unslice_cols(dqkv, dQr, h * dh);
            unslice_cols(dqkv, dKr, d + h * dh);
            unslice_cols(dqkv, dV, 2 * d + h * dh);
        }
        Mat<T> dh1 = linear_backward(dqkv, bt.h1, blk.w_qkv, gb.w_qkv, gb.b_qkv);
        {
            Mat<T> dln1;
            std::vector<T> dshift1(d, T(0)), dscale1(d, T(0));
            modulate_backward(dh1, bt.ln1, bt.mod.scale1, dln1, dshift1, dscale1);
            std::copy(dshift1.begin(), dshift1.end(), seg(0));
            std::copy(dscale1.begin(), dscale1.end(), seg(1));
            Mat<T> din = nn::layer_norm_backward(dln1, bt.ln1, bt.rstd1);
            for (size_t i = 0; i < dx.a.size(); ++i) dx.a[i] += din.a[i];
        }

        // Modulation projection for this block.
        {
            Mat<T> dmod_row(1, 6 * d);
            dmod_row.a = dmod;
            Mat<T> u_row(1, d);
            u_row.a = tape.tf.u;
            Mat<T> du_row = linear_backward(dmod_row, u_row, blk.w_mod, gb.w_mod, gb.b_mod);
            for (int j = 0; j < d; ++j) du[j] += du_row.a[j];
        }
    }

    // Timestep MLP.
    {
        Mat<T> dtemb(1, d);
        for (int j = 0; j < d; ++j) dtemb.a[j] = du[j] * nn::silu_grad(tape.tf.t_emb[j]);
        Mat<T> h_row(1, d);
        h_row.a = tape.tf.h;
        Mat<T> dh_row = linear_backward(dtemb, h_row, p.w_t2, g.w_t2, g.b_t2);
        Mat<T> dh_pre(1, d);
        for (int j = 0; j < d; ++j) dh_pre.a[j] = dh_row.a[j] * nn::silu_grad(tape.tf.h_pre[j]);
        Mat<T> f_row(1, cfg.d_freq);
        f_row.a = tape.tf.sinusoid;
        linear_backward(dh_pre, f_row, p.w_t1, g.w_t1, g.b_t1);
    }

    // Embeddings.
    {
        const int L_style = int(in.style_tokens.size());
        Mat<T> dx_lat(N, d);
        for (int i = 0; i < N; ++i) std::copy(dx.row(i), dx.row(i) + d, dx_lat.row(i));
        gemm_tn_acc(dx_lat, in.latent, g.w_in);
        colsum_acc(dx_lat, g.b_in.a);
        for (int i = 0; i < L_style; ++i) {
            T* e = g.style_emb.row(in.style_tokens[i]);
            const T* di = dx.row(N + i);
            for (int j = 0; j < d; ++j) e[j] += di[j];
        }
        int r = N + L_style;
        for (const auto& c : in.conditions) {
            Mat<T> dxc(c.tokens.rows, d);
            for (int i = 0; i < c.tokens.rows; ++i)
                std::copy(dx.row(r + i), dx.row(r + i) + d, dxc.row(i));
            gemm_tn_acc(dxc, c.tokens, g.w_in);
            colsum_acc(dxc, g.b_in.a);
            r += c.tokens.rows;
        }
    }
    return loss;
}

}  // namespace promo
