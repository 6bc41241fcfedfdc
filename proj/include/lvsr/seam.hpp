// Semantic alignment: a frozen per-frame semantic encoder feeds frame-aligned
// tokens into the denoiser through cross-attention. Encoders are pluggable;
// the built-in stub (patch pooling + fixed random projection) keeps the whole
// pipeline self-contained and deterministic.
#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "lvsr/attention.hpp"
#include "lvsr/autograd.hpp"
#include "lvsr/tensor.hpp"
#include "lvsr/types.hpp"

namespace lvsr {

struct SemanticEncoder {
    virtual ~SemanticEncoder() = default;
    virtual SemanticEmbedding encode(const VideoSegment& seg) const = 0;
    virtual std::string descriptor() const = 0;
    virtual int token_dim() const = 0;
};

// Average-pools non-overlapping patch x patch cells per channel, then applies
// a fixed seeded random projection 3 -> d_s. Holds no trainable state.
class StubSemanticEncoder : public SemanticEncoder {
public:
    StubSemanticEncoder(int patch, int d_s) : patch_(patch), d_s_(d_s), proj_({3, d_s}) {
        check(patch >= 1 && d_s >= 1, "stub encoder: patch and token_dim must be positive");
        Rng rng(kSeed);
        rng.fill_normal(proj_, 1.0 / std::sqrt(3.0));
    }

    SemanticEmbedding encode(const VideoSegment& seg) const override {
        const Tensor& fr = seg.frames;
        check(fr.ndim() == 4 && fr.dim(1) == 3, "stub encoder: expected (L,3,H,W)");
        int L = fr.dim(0), H = fr.dim(2), W = fr.dim(3);
        check(H % patch_ == 0 && W % patch_ == 0,
              "stub encoder: frame dims " + std::to_string(H) + "x" + std::to_string(W) +
                  " not divisible by patch " + std::to_string(patch_));
        int gh = H / patch_, gw = W / patch_;
        int n_tokens = gh * gw;
        SemanticEmbedding emb;
        emb.tokens = Tensor({L, n_tokens, d_s_});
        double inv_cell = 1.0 / (static_cast<double>(patch_) * patch_);
        for (int l = 0; l < L; ++l)
            for (int gy = 0; gy < gh; ++gy)
                for (int gx = 0; gx < gw; ++gx) {
                    double pooled[3];
                    for (int c = 0; c < 3; ++c) {
                        double s = 0.0;
                        for (int py = 0; py < patch_; ++py)
                            for (int px = 0; px < patch_; ++px)
                                s += fr(l, c, gy * patch_ + py, gx * patch_ + px);
                        pooled[c] = s * inv_cell;
                    }
                    double* tok = emb.tokens.data.data() +
                                  (static_cast<int64_t>(l) * n_tokens + (static_cast<int64_t>(gy) * gw + gx)) * d_s_;
                    for (int d = 0; d < d_s_; ++d)
                        tok[d] = pooled[0] * proj_(0, d) + pooled[1] * proj_(1, d) + pooled[2] * proj_(2, d);
                }
        return emb;
    }

    std::string descriptor() const override {
        return "stub/patch=" + std::to_string(patch_) + "/d=" + std::to_string(d_s_) + "/seed=" +
               std::to_string(kSeed);
    }

    int token_dim() const override { return d_s_; }

private:
    static constexpr uint64_t kSeed = 0x5EA11C0DE2ull;
    int patch_;
    int d_s_;
    Tensor proj_;
};

inline std::unique_ptr<SemanticEncoder> make_semantic_encoder(const std::string& name, int patch, int d_s) {
    if (name == "stub") return std::make_unique<StubSemanticEncoder>(patch, d_s);
    throw Error(Error::Kind::validation, "semantic encoder '" + name + "' is not registered (known: stub)");
}

// Pre-norm transformer block applied per frame: spatial self-attention,
// cross-attention into that frame's semantic tokens, then FFN. The semantic
// tokens of frame i condition only frame i; there is no cross-frame path.
struct SeamBlock {
    LayerNormLayer ln_self, ln_cross, ln_ffn;
    AttentionLayer self_attn, cross_attn;
    FfnLayer ffn;
    bool with_self_attention = true;

    static SeamBlock create(ParamSet& ps, const std::string& prefix, int channels, int d_s, int heads, int expansion,
                            double eps, bool with_self_attention, Rng& rng) {
        SeamBlock b;
        b.with_self_attention = with_self_attention;
        if (with_self_attention) {
            b.ln_self = LayerNormLayer::create(ps, prefix + ".ln_self", "seam", channels, eps);
            b.self_attn = AttentionLayer::create(ps, prefix + ".self", "seam", channels, channels, channels, heads, rng);
        }
        b.ln_cross = LayerNormLayer::create(ps, prefix + ".ln_cross", "seam", channels, eps);
        b.cross_attn = AttentionLayer::create(ps, prefix + ".cross", "seam", channels, d_s, channels, heads, rng);
        b.ln_ffn = LayerNormLayer::create(ps, prefix + ".ln_ffn", "seam", channels, eps);
        b.ffn = FfnLayer::create(ps, prefix + ".ffn", "seam", channels, expansion, rng);
        return b;
    }

    // F (L,C,H,W), semantic tokens (L,N_s,d_s)
    Var forward(Tape& tp, Var F, Var semantic) const {
        const Tensor& tf = tp.val(F);
        const Tensor& ts = tp.val(semantic);
        check(tf.ndim() == 4 && ts.ndim() == 3, "seam: bad ranks");
        check(tf.dim(0) == ts.dim(0), "seam: frame count mismatch between features and semantic tokens");
        int H = tf.dim(2), W = tf.dim(3);
        Var x = tp.frames_to_spatial_tokens(F);
        if (with_self_attention) x = tp.add(x, self_attn.forward_self(tp, ln_self.forward(tp, x)));
        x = tp.add(x, cross_attn.forward(tp, ln_cross.forward(tp, x), semantic));
        x = tp.add(x, ffn.forward(tp, ln_ffn.forward(tp, x)));
        return tp.spatial_tokens_to_frames(x, H, W);
    }
};

}  // namespace lvsr
