// Domain value types shared across the pipeline.
#pragma once

#include <optional>
#include <string>

#include "lvsr/tensor.hpp"

namespace lvsr {

// spatial upscaling contract: LQ frames are 1/4 the HQ resolution
inline constexpr int scale_factor() { return 4; }

// Ordered block of L pixel frames, the unit of processing.
// frames: (L, 3, H, W) in [0, 1].
struct VideoSegment {
    Tensor frames;
    std::string source_id;
    int frame_offset = 0;
    int pad_frames = 0;  // trailing repeated frames added by segmentation

    int num_frames() const { return frames.dim(0); }
    int height() const { return frames.dim(2); }
    int width() const { return frames.dim(3); }

    void validate(double tol = 1e-6) const {
        check(frames.ndim() == 4 && frames.dim(1) == 3,
              "VideoSegment: frames must be (L,3,H,W), got " + shape_str(frames.shape));
        check(frames.dim(0) >= 1, "VideoSegment: L must be >= 1");
        check(frames.all_finite(), "VideoSegment: non-finite frame values");
        check(frames.min_value() >= -tol && frames.max_value() <= 1.0 + tol,
              "VideoSegment: frame values outside [0,1]");
    }
};

// Per-segment latent codes. data: (L, C_z, h, w).
// timestep absent for clean latents z_0, present for noised z_t.
struct LatentSequence {
    Tensor data;
    std::optional<int> timestep;

    int num_frames() const { return data.dim(0); }

    void validate() const {
        check(data.ndim() == 4, "LatentSequence: data must be 4-d");
        check(data.dim(0) >= 1, "LatentSequence: L must be >= 1");
        check(data.all_finite(), "LatentSequence: non-finite values");
    }
};

// Per-frame semantic tokens. tokens: (L, N_s, d_s).
struct SemanticEmbedding {
    Tensor tokens;

    int num_frames() const { return tokens.dim(0); }
    int tokens_per_frame() const { return tokens.dim(1); }
    int token_dim() const { return tokens.dim(2); }

    void validate() const {
        check(tokens.ndim() == 3, "SemanticEmbedding: tokens must be (L,N_s,d_s)");
        check(tokens.dim(1) >= 1, "SemanticEmbedding: N_s must be >= 1");
        check(tokens.all_finite(), "SemanticEmbedding: non-finite tokens");
    }
};

// Intermediate network activation, (L, C, H, W). Kept as a plain Tensor;
// the alias documents intent at call sites.
using FeatureMap = Tensor;

// Batch of independent token sequences, (B, N, d).
using TokenBlock = Tensor;

}  // namespace lvsr
