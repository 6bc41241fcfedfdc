// Toy denoising U-Net. Input is the noisy latent concatenated with the
// LR-conditioning latent; each level stacks residual conv blocks and, at
// configured levels, the semantic transformer, the temporal transformer,
// and the channel-split fusion block, in that order. Every parameter lives
// in one of four groups (backbone / seam / temporal / tsam) so the two
// training stages can select and freeze exactly.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "lvsr/attention.hpp"
#include "lvsr/autograd.hpp"
#include "lvsr/config.hpp"
#include "lvsr/params.hpp"
#include "lvsr/seam.hpp"
#include "lvsr/tensor.hpp"
#include "lvsr/tsam.hpp"

namespace lvsr {

// one embedding row per frame; all frames of a segment share the timestep
inline Tensor time_embedding_rows(int t, int dim, int frames) {
    check(dim >= 2 && dim % 2 == 0, "time embedding: dim must be even and >= 2");
    int half = dim / 2;
    std::vector<double> row(static_cast<size_t>(dim));
    for (int i = 0; i < half; ++i) {
        double f = half > 1 ? std::exp(-std::log(10000.0) * i / (half - 1)) : 1.0;
        row[static_cast<size_t>(i)] = std::sin(t * f);
        row[static_cast<size_t>(half + i)] = std::cos(t * f);
    }
    Tensor out({frames, dim});
    for (int l = 0; l < frames; ++l)
        for (int i = 0; i < dim; ++i) out(l, i) = row[static_cast<size_t>(i)];
    return out;
}

struct Conv2dLayer {
    Parameter* w = nullptr;
    Parameter* b = nullptr;
    int stride = 1, pad = 1;

    static Conv2dLayer create(ParamSet& ps, const std::string& prefix, const std::string& group, int cin, int cout,
                              int k, int stride, int pad, Rng& rng, bool zero_init = false) {
        Conv2dLayer c;
        c.stride = stride;
        c.pad = pad;
        c.w = &ps.create(prefix + ".w", {cout, cin, k, k}, group);
        c.b = &ps.create(prefix + ".b", {cout}, group);
        if (!zero_init) rng.fill_normal(c.w->value, 1.0 / std::sqrt(static_cast<double>(cin * k * k)));
        return c;
    }

    Var forward(Tape& tp, Var x) const { return tp.conv2d(x, tp.param(*w), tp.param(*b), stride, pad); }
};

// GroupNorm + SiLU + conv, timestep embedding added between the convs,
// 1x1-projected skip when the channel count changes. Second conv starts at
// zero so the block begins near identity.
struct ResBlock {
    Parameter *gn1_gain = nullptr, *gn1_bias = nullptr;
    Conv2dLayer conv1;
    Parameter *emb_w = nullptr, *emb_b = nullptr;  // [time_embed_dim, cout]
    Parameter *gn2_gain = nullptr, *gn2_bias = nullptr;
    Conv2dLayer conv2;
    Conv2dLayer skip;  // 1x1, only when cin != cout
    int cin = 0, cout = 0, groups = 1;
    double eps = 1e-5;
    bool has_skip_proj = false;

    static ResBlock create(ParamSet& ps, const std::string& prefix, int cin, int cout, int time_embed_dim, int groups,
                           double eps, Rng& rng) {
        check(cin % groups == 0 && cout % groups == 0,
              "resblock: norm groups must divide channels (" + std::to_string(cin) + "/" + std::to_string(cout) +
                  " vs " + std::to_string(groups) + ")");
        ResBlock r;
        r.cin = cin;
        r.cout = cout;
        r.groups = groups;
        r.eps = eps;
        r.gn1_gain = &ps.create(prefix + ".gn1.gain", {cin}, "backbone");
        r.gn1_bias = &ps.create(prefix + ".gn1.bias", {cin}, "backbone");
        std::fill(r.gn1_gain->value.data.begin(), r.gn1_gain->value.data.end(), 1.0);
        r.conv1 = Conv2dLayer::create(ps, prefix + ".conv1", "backbone", cin, cout, 3, 1, 1, rng);
        r.emb_w = &ps.create(prefix + ".emb.w", {time_embed_dim, cout}, "backbone");
        r.emb_b = &ps.create(prefix + ".emb.b", {cout}, "backbone");
        rng.fill_normal(r.emb_w->value, 1.0 / std::sqrt(static_cast<double>(time_embed_dim)));
        r.gn2_gain = &ps.create(prefix + ".gn2.gain", {cout}, "backbone");
        r.gn2_bias = &ps.create(prefix + ".gn2.bias", {cout}, "backbone");
        std::fill(r.gn2_gain->value.data.begin(), r.gn2_gain->value.data.end(), 1.0);
        r.conv2 = Conv2dLayer::create(ps, prefix + ".conv2", "backbone", cout, cout, 3, 1, 1, rng, /*zero_init=*/true);
        if (cin != cout) {
            r.has_skip_proj = true;
            r.skip = Conv2dLayer::create(ps, prefix + ".skip", "backbone", cin, cout, 1, 1, 0, rng);
        }
        return r;
    }

    // x (L,cin,h,w), temb (L,time_embed_dim)
    Var forward(Tape& tp, Var x, Var temb) const {
        Var h = tp.group_norm(x, groups, eps);
        h = tp.channel_affine(h, tp.param(*gn1_gain), tp.param(*gn1_bias));
        h = conv1.forward(tp, tp.silu(h));
        const Tensor& tt = tp.val(temb);
        int L = tt.dim(0), te = tt.dim(1);
        Var e = tp.reshape(temb, {1, L, te});
        e = tp.linear(tp.silu(e), tp.param(*emb_w), tp.param(*emb_b));
        h = tp.add_channel_vec(h, tp.reshape(e, {L, cout}));
        h = tp.group_norm(h, groups, eps);
        h = tp.channel_affine(h, tp.param(*gn2_gain), tp.param(*gn2_bias));
        h = conv2.forward(tp, tp.silu(h));
        Var s = has_skip_proj ? skip.forward(tp, x) : x;
        return tp.add(s, h);
    }
};

// temporal self-attention over frames at each spatial position, applied to
// the full channel width (separate parameters from the fusion block's branch)
struct TemporalBlock {
    BranchBlock branch;

    static TemporalBlock create(ParamSet& ps, const std::string& prefix, int channels, int heads, int expansion,
                                double eps, int max_frames, Rng& rng) {
        TemporalBlock t;
        t.branch = BranchBlock::create(ps, prefix, "temporal", channels, heads, expansion, eps, max_frames, rng);
        return t;
    }

    Var forward(Tape& tp, Var F) const {
        const Tensor& tf = tp.val(F);
        int H = tf.dim(2), W = tf.dim(3);
        Var x = tp.frames_to_temporal_tokens(F);
        x = branch.forward_tokens(tp, x);
        return tp.temporal_tokens_to_frames(x, H, W);
    }
};

class DenoiserNet {
public:
    ModelConfig cfg;
    ParamSet params;

    [[nodiscard]] static DenoiserNet build(const ModelConfig& cfg, uint64_t seed) {
        DenoiserNet net;
        net.cfg = cfg;
        net.validate_cfg();
        Rng rng(mix_seed(seed, 0xDE401));
        ParamSet& ps = net.params;
        int n = static_cast<int>(cfg.channel_mult.size());
        net.ch_.resize(static_cast<size_t>(n));
        for (int l = 0; l < n; ++l) net.ch_[static_cast<size_t>(l)] = cfg.base_channels * cfg.channel_mult[static_cast<size_t>(l)];
        int te = cfg.time_embed_dim;

        net.time_w1_ = &ps.create("time.w1", {te, te}, "backbone");
        net.time_b1_ = &ps.create("time.b1", {te}, "backbone");
        net.time_w2_ = &ps.create("time.w2", {te, te}, "backbone");
        net.time_b2_ = &ps.create("time.b2", {te}, "backbone");
        rng.fill_normal(net.time_w1_->value, 1.0 / std::sqrt(static_cast<double>(te)));
        rng.fill_normal(net.time_w2_->value, 1.0 / std::sqrt(static_cast<double>(te)));

        net.conv_in_ = Conv2dLayer::create(ps, "in", "backbone", 2 * cfg.latent_channels, cfg.base_channels, 3, 1, 1, rng);

        int prev = cfg.base_channels;
        for (int l = 0; l < n; ++l) {
            LevelStack stack;
            int c = net.ch_[static_cast<size_t>(l)];
            for (int r = 0; r < cfg.res_blocks; ++r) {
                std::string p = "down" + std::to_string(l) + ".res" + std::to_string(r);
                stack.res.push_back(ResBlock::create(ps, p, r == 0 ? prev : c, c, te, cfg.norm_groups, cfg.norm_eps, rng));
            }
            stack.has_attention = net.is_attention_level(l);
            if (stack.has_attention) {
                std::string p = "down" + std::to_string(l);
                if (cfg.semantic.enabled)
                    stack.seam = SeamBlock::create(ps, p + ".seam", c, cfg.semantic.token_dim, cfg.heads,
                                                   cfg.ffn_expansion, cfg.norm_eps, cfg.semantic.self_attention, rng);
                if (cfg.temporal_enabled)
                    stack.temporal = TemporalBlock::create(ps, p + ".temporal", c, cfg.heads, cfg.ffn_expansion,
                                                           cfg.norm_eps, cfg.max_frames, rng);
                if (cfg.tsam_enabled)
                    stack.tsam = TsamBlock::create(ps, p + ".tsam", c, cfg.heads, cfg.ffn_expansion, cfg.norm_eps,
                                                   cfg.max_frames, rng);
            }
            net.down_.push_back(std::move(stack));
            if (l < n - 1)
                net.downsamples_.push_back(
                    Conv2dLayer::create(ps, "down" + std::to_string(l) + ".pool", "backbone", c, c, 3, 2, 1, rng));
            prev = c;
        }

        for (int l = n - 2; l >= 0; --l) {
            UpStack up;
            int c_in = net.ch_[static_cast<size_t>(l + 1)];
            int c = net.ch_[static_cast<size_t>(l)];
            std::string p = "up" + std::to_string(l);
            up.up_conv = Conv2dLayer::create(ps, p + ".conv", "backbone", c_in, c_in, 3, 1, 1, rng);
            for (int r = 0; r < cfg.res_blocks; ++r)
                up.res.push_back(ResBlock::create(ps, p + ".res" + std::to_string(r), r == 0 ? c_in + c : c, c, te,
                                                  cfg.norm_groups, cfg.norm_eps, rng));
            net.ups_.push_back(std::move(up));
        }

        net.out_gain_ = &ps.create("out.gn.gain", {cfg.base_channels * cfg.channel_mult[0]}, "backbone");
        net.out_bias_ = &ps.create("out.gn.bias", {cfg.base_channels * cfg.channel_mult[0]}, "backbone");
        std::fill(net.out_gain_->value.data.begin(), net.out_gain_->value.data.end(), 1.0);
        net.conv_out_ = Conv2dLayer::create(ps, "out.conv", "backbone", net.ch_[0], cfg.latent_channels, 3, 1, 1, rng,
                                            /*zero_init=*/true);
        return net;
    }

    // z_t, lr: (L, C_z, h, w); semantic: (L, N_s, d_s) tokens, required iff
    // the semantic path is enabled; t: diffusion timestep
    Var forward(Tape& tp, Var z_t, Var lr, const Tensor* semantic, int t) const {
        const Tensor& tz = tp.val(z_t);
        const Tensor& tl = tp.val(lr);
        check(tz.ndim() == 4 && tz.dim(1) == cfg.latent_channels, "denoiser: bad latent shape " + shape_str(tz.shape));
        check(tz.same_shape(tl), "denoiser: LR conditioning shape mismatch");
        check(t >= 0, "denoiser: negative timestep");
        check((semantic != nullptr) == cfg.semantic.enabled,
              cfg.semantic.enabled ? "denoiser: semantic tokens required but missing"
                                   : "denoiser: semantic tokens supplied but the semantic path is disabled");
        int L = tz.dim(0);
        check(!(cfg.temporal_enabled || cfg.tsam_enabled) || L <= cfg.max_frames,
              "denoiser: segment longer than max_frames");
        Var sem{};
        if (semantic != nullptr) {
            check(semantic->ndim() == 3 && semantic->dim(0) == L && semantic->dim(2) == cfg.semantic.token_dim,
                  "denoiser: bad semantic token shape " + shape_str(semantic->shape));
            sem = tp.input(*semantic);
        }

        Var temb = tp.input(time_embedding_rows(t, cfg.time_embed_dim, L));
        Var e = tp.reshape(temb, {1, L, cfg.time_embed_dim});
        e = tp.linear(e, tp.param(*time_w1_), tp.param(*time_b1_));
        e = tp.linear(tp.silu(e), tp.param(*time_w2_), tp.param(*time_b2_));
        temb = tp.reshape(e, {L, cfg.time_embed_dim});

        Var x = conv_in_.forward(tp, tp.concat_channels(z_t, lr));
        int n = static_cast<int>(ch_.size());
        std::vector<Var> saved;
        for (int l = 0; l < n; ++l) {
            const LevelStack& stack = down_[static_cast<size_t>(l)];
            for (const ResBlock& r : stack.res) x = r.forward(tp, x, temb);
            if (stack.has_attention) {
                if (cfg.semantic.enabled) x = stack.seam.forward(tp, x, sem);
                if (cfg.temporal_enabled) x = stack.temporal.forward(tp, x);
                if (cfg.tsam_enabled) x = stack.tsam.forward(tp, x);
            }
            check_numeric(tp.val(x).all_finite(), "denoiser: non-finite activation after level " + std::to_string(l));
            saved.push_back(x);
            if (l < n - 1) x = downsamples_[static_cast<size_t>(l)].forward(tp, x);
        }
        for (int i = 0; i < static_cast<int>(ups_.size()); ++i) {
            int l = n - 2 - i;
            const UpStack& up = ups_[static_cast<size_t>(i)];
            x = up.up_conv.forward(tp, tp.upsample_nearest2(x));
            x = tp.concat_channels(x, saved[static_cast<size_t>(l)]);
            for (const ResBlock& r : up.res) x = r.forward(tp, x, temb);
        }
        x = tp.group_norm(x, cfg.norm_groups, cfg.norm_eps);
        x = tp.channel_affine(x, tp.param(*out_gain_), tp.param(*out_bias_));
        x = conv_out_.forward(tp, tp.silu(x));
        check_numeric(tp.val(x).all_finite(), "denoiser: non-finite output");
        return x;
    }

    Tensor predict_noise(const Tensor& z_t, const Tensor& lr, const Tensor* semantic, int t) const {
        Tape tp;
        Var out = forward(tp, tp.input(z_t), tp.input(lr), semantic, t);
        return tp.val(out);
    }

    bool is_attention_level(int l) const {
        for (int a : cfg.attention_levels)
            if (a == l) return true;
        return false;
    }

private:
    struct LevelStack {
        std::vector<ResBlock> res;
        bool has_attention = false;
        SeamBlock seam;
        TemporalBlock temporal;
        TsamBlock tsam;
    };
    struct UpStack {
        Conv2dLayer up_conv;
        std::vector<ResBlock> res;
    };

    void validate_cfg() const {
        check(!cfg.channel_mult.empty(), "denoiser: empty channel_mult");
        for (int l : cfg.attention_levels) {
            check(l >= 0 && l < static_cast<int>(cfg.channel_mult.size()), "denoiser: attention level out of range");
            if (cfg.tsam_enabled)
                check((cfg.base_channels * cfg.channel_mult[static_cast<size_t>(l)]) % 2 == 0,
                      "denoiser: odd channel count at a fusion level");
        }
        check(cfg.heads >= 1 && cfg.time_embed_dim >= 2, "denoiser: bad attention config");
    }

    std::vector<int> ch_;
    Parameter *time_w1_ = nullptr, *time_b1_ = nullptr, *time_w2_ = nullptr, *time_b2_ = nullptr;
    Conv2dLayer conv_in_;
    std::vector<LevelStack> down_;
    std::vector<Conv2dLayer> downsamples_;
    std::vector<UpStack> ups_;
    Parameter *out_gain_ = nullptr, *out_bias_ = nullptr;
    Conv2dLayer conv_out_;
};

// channel-wise concat of the noisy latent with the LR latent, z first
inline Tensor condition_on_lr(const Tensor& z_t, const Tensor& lr) {
    check(z_t.same_shape(lr), "condition_on_lr: shape mismatch");
    Tape tp;
    return tp.val(tp.concat_channels(tp.input(z_t), tp.input(lr)));
}

}  // namespace lvsr
