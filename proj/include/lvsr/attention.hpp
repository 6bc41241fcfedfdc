// Shared transformer building blocks over the tape: scaled dot-product
// attention, token layer norm, and the position-wise feed-forward net.
// Output projections of residual-path blocks are zero-initialized so a
// freshly inserted block is an exact identity.
#pragma once

#include <cmath>
#include <string>

#include "lvsr/autograd.hpp"
#include "lvsr/params.hpp"
#include "lvsr/tensor.hpp"

namespace lvsr {

struct LayerNormLayer {
    Parameter* gain = nullptr;
    Parameter* bias = nullptr;
    double eps = 1e-5;

    static LayerNormLayer create(ParamSet& ps, const std::string& prefix, const std::string& group, int d,
                                 double eps) {
        LayerNormLayer l;
        l.eps = eps;
        l.gain = &ps.create(prefix + ".gain", {d}, group);
        l.bias = &ps.create(prefix + ".bias", {d}, group);
        std::fill(l.gain->value.data.begin(), l.gain->value.data.end(), 1.0);
        return l;
    }

    Var forward(Tape& tp, Var x) const {
        return tp.affine_lastdim(tp.layernorm_lastdim(x, eps), tp.param(*gain), tp.param(*bias));
    }
};

struct AttentionLayer {
    Parameter* wq = nullptr;  // [d_model, d_attn]
    Parameter* wk = nullptr;  // [d_ctx, d_attn]
    Parameter* wv = nullptr;  // [d_ctx, d_attn]
    Parameter* wo = nullptr;  // [d_attn, d_model], zero at creation
    int heads = 1;
    mutable Tensor* attn_probe = nullptr;  // debug hook: set to capture softmax weights

    static AttentionLayer create(ParamSet& ps, const std::string& prefix, const std::string& group, int d_model,
                                 int d_ctx, int d_attn, int heads, Rng& rng) {
        check(d_attn % heads == 0, "attention: d_attn not divisible by heads");
        AttentionLayer a;
        a.heads = heads;
        a.wq = &ps.create(prefix + ".wq", {d_model, d_attn}, group);
        a.wk = &ps.create(prefix + ".wk", {d_ctx, d_attn}, group);
        a.wv = &ps.create(prefix + ".wv", {d_ctx, d_attn}, group);
        a.wo = &ps.create(prefix + ".wo", {d_attn, d_model}, group);
        rng.fill_normal(a.wq->value, 1.0 / std::sqrt(static_cast<double>(d_model)));
        rng.fill_normal(a.wk->value, 1.0 / std::sqrt(static_cast<double>(d_ctx)));
        rng.fill_normal(a.wv->value, 1.0 / std::sqrt(static_cast<double>(d_ctx)));
        return a;  // wo stays zero: residual blocks start as identity
    }

    // q_src (B, N_q, d_model), kv_src (B, N_k, d_ctx) -> (B, N_q, d_model)
    Var forward(Tape& tp, Var q_src, Var kv_src) const {
        const Tensor& tq = tp.val(q_src);
        const Tensor& tk = tp.val(kv_src);
        check(tq.ndim() == 3 && tk.ndim() == 3 && tq.dim(0) == tk.dim(0),
              "attention: batch mismatch " + shape_str(tq.shape) + " vs " + shape_str(tk.shape));
        check(tq.all_finite() && tk.all_finite(), "attention: non-finite input");
        int d_attn = wq->value.dim(1);
        int dh = d_attn / heads;
        Var q = tp.split_heads(tp.linear(q_src, tp.param(*wq)), heads);
        Var k = tp.split_heads(tp.linear(kv_src, tp.param(*wk)), heads);
        Var v = tp.split_heads(tp.linear(kv_src, tp.param(*wv)), heads);
        Var scores = tp.scale(tp.bmm_nt(q, k), 1.0 / std::sqrt(static_cast<double>(dh)));
        Var probs = tp.softmax_lastdim(scores);
        if (attn_probe != nullptr) *attn_probe = tp.val(probs);
        Var mixed = tp.merge_heads(tp.bmm_nn(probs, v), heads);
        return tp.linear(mixed, tp.param(*wo));
    }

    Var forward_self(Tape& tp, Var x) const { return forward(tp, x, x); }
};

struct FfnLayer {
    Parameter* w1 = nullptr;  // [d, e*d]
    Parameter* b1 = nullptr;
    Parameter* w2 = nullptr;  // [e*d, d], zero at creation
    Parameter* b2 = nullptr;  // zero at creation

    static FfnLayer create(ParamSet& ps, const std::string& prefix, const std::string& group, int d, int expansion,
                           Rng& rng) {
        FfnLayer f;
        int e = d * expansion;
        f.w1 = &ps.create(prefix + ".w1", {d, e}, group);
        f.b1 = &ps.create(prefix + ".b1", {e}, group);
        f.w2 = &ps.create(prefix + ".w2", {e, d}, group);
        f.b2 = &ps.create(prefix + ".b2", {d}, group);
        rng.fill_normal(f.w1->value, 1.0 / std::sqrt(static_cast<double>(d)));
        return f;
    }

    Var forward(Tape& tp, Var x) const {
        Var h = tp.gelu(tp.linear(x, tp.param(*w1), tp.param(*b1)));
        return tp.linear(h, tp.param(*w2), tp.param(*b2));
    }
};

}  // namespace lvsr
