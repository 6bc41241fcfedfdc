// Channel-split spatio-temporal fusion. Features split 50/50 along channels;
// the first half runs spatial attention (tokens = positions within a frame),
// the second half runs temporal attention (tokens = frames at a fixed
// position, with a learned zero-init position table). The halves are
// re-concatenated spatial-first, mixed by a zero-init position-wise linear
// map, and added back onto the input.
#pragma once

#include <string>

#include "lvsr/attention.hpp"
#include "lvsr/autograd.hpp"
#include "lvsr/params.hpp"
#include "lvsr/tensor.hpp"

namespace lvsr {

// One pre-norm attention sub-layer plus one pre-norm FFN sub-layer over
// token blocks (B, N, d). With a position table, rows [0, N) are added to
// every sequence before the sub-layers.
struct BranchBlock {
    LayerNormLayer ln_attn, ln_ffn;
    AttentionLayer attn;
    FfnLayer ffn;
    Parameter* pos_table = nullptr;  // [max_len, d], zero at creation

    static BranchBlock create(ParamSet& ps, const std::string& prefix, const std::string& group, int d, int heads,
                              int expansion, double eps, int pos_table_len, Rng& rng) {
        BranchBlock b;
        b.ln_attn = LayerNormLayer::create(ps, prefix + ".ln_attn", group, d, eps);
        b.attn = AttentionLayer::create(ps, prefix + ".attn", group, d, d, d, heads, rng);
        b.ln_ffn = LayerNormLayer::create(ps, prefix + ".ln_ffn", group, d, eps);
        b.ffn = FfnLayer::create(ps, prefix + ".ffn", group, d, expansion, rng);
        if (pos_table_len > 0) b.pos_table = &ps.create(prefix + ".pos", {pos_table_len, d}, group);
        return b;
    }

    Var forward_tokens(Tape& tp, Var x) const {
        if (pos_table != nullptr) x = tp.add_position_rows(x, tp.param(*pos_table));
        x = tp.add(x, attn.forward_self(tp, ln_attn.forward(tp, x)));
        x = tp.add(x, ffn.forward(tp, ln_ffn.forward(tp, x)));
        return x;
    }
};

struct TsamBlock {
    BranchBlock spatial;   // C/2 channels, no position table
    BranchBlock temporal;  // C/2 channels, frame-position table
    Parameter* fuse_w = nullptr;  // [C, C], zero at creation
    Parameter* fuse_b = nullptr;  // [C], zero at creation
    int channels = 0;

    static TsamBlock create(ParamSet& ps, const std::string& prefix, int channels, int heads, int expansion,
                            double eps, int max_frames, Rng& rng) {
        check(channels % 2 == 0, "tsam: channel count must be even, got " + std::to_string(channels));
        TsamBlock t;
        t.channels = channels;
        int half = channels / 2;
        t.spatial = BranchBlock::create(ps, prefix + ".spatial", "tsam", half, heads, expansion, eps, 0, rng);
        t.temporal = BranchBlock::create(ps, prefix + ".temporal", "tsam", half, heads, expansion, eps, max_frames, rng);
        t.fuse_w = &ps.create(prefix + ".fuse.w", {channels, channels}, "tsam");
        t.fuse_b = &ps.create(prefix + ".fuse.b", {channels}, "tsam");
        return t;
    }

    // spatial half: attention within each frame, frames are the batch axis
    Var spatial_branch(Tape& tp, Var half) const {
        const Tensor& t = tp.val(half);
        int H = t.dim(2), W = t.dim(3);
        Var x = tp.frames_to_spatial_tokens(half);
        x = spatial.forward_tokens(tp, x);
        return tp.spatial_tokens_to_frames(x, H, W);
    }

    // temporal half: attention across frames, spatial positions are the batch axis
    Var temporal_branch(Tape& tp, Var half) const {
        const Tensor& t = tp.val(half);
        int H = t.dim(2), W = t.dim(3);
        Var x = tp.frames_to_temporal_tokens(half);
        x = temporal.forward_tokens(tp, x);
        return tp.temporal_tokens_to_frames(x, H, W);
    }

    // concat(spatial half first) -> position-wise linear C -> C, + residual
    Var fuse(Tape& tp, Var f_s, Var f_t, Var residual) const {
        const Tensor& tr = tp.val(residual);
        int H = tr.dim(2), W = tr.dim(3);
        Var cat = tp.concat_channels(f_s, f_t);
        Var tok = tp.frames_to_spatial_tokens(cat);
        Var mixed = tp.linear(tok, tp.param(*fuse_w), tp.param(*fuse_b));
        return tp.add(tp.spatial_tokens_to_frames(mixed, H, W), residual);
    }

    Var forward(Tape& tp, Var F) const {
        const Tensor& tf = tp.val(F);
        check(tf.ndim() == 4, "tsam: expected (L,C,H,W)");
        check(tf.dim(1) == channels, "tsam: channel mismatch, built for " + std::to_string(channels) + " got " +
                                         std::to_string(tf.dim(1)));
        int half = channels / 2;
        Var f_s = tp.slice_channels(F, 0, half);
        Var f_t = tp.slice_channels(F, half, channels);
        return fuse(tp, spatial_branch(tp, f_s), temporal_branch(tp, f_t), F);
    }
};

}  // namespace lvsr
