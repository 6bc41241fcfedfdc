// Reference and temporal-consistency metrics: PSNR, temporal profile
// slices for visual inspection, and a flicker index over consecutive
// frame differences.
#pragma once

#include <algorithm>
#include <cmath>

#include "lvsr/tensor.hpp"
#include "lvsr/types.hpp"

namespace lvsr {

// reported for zero-MSE frames instead of an infinity
inline constexpr double psnr_cap_db() { return 99.0; }

// mean over frames of per-frame 10*log10(1/MSE); inputs in [0,1]
inline double psnr_db(const VideoSegment& a, const VideoSegment& b) {
    check(a.frames.same_shape(b.frames), "psnr: shape mismatch " + shape_str(a.frames.shape) + " vs " +
                                             shape_str(b.frames.shape));
    int L = a.num_frames();
    int64_t per = a.frames.numel() / L;
    double total = 0.0;
    for (int l = 0; l < L; ++l) {
        double se = 0.0;
        for (int64_t i = l * per; i < (l + 1) * per; ++i) {
            double d = a.frames.data[static_cast<size_t>(i)] - b.frames.data[static_cast<size_t>(i)];
            se += d * d;
        }
        double mse = se / static_cast<double>(per);
        double db = mse <= 0.0 ? psnr_cap_db() : std::min(psnr_cap_db(), 10.0 * std::log10(1.0 / mse));
        total += db;
    }
    return total / L;
}

// stacks one pixel row over time; (L,3,H,W) -> (3,L,W) image
inline Tensor temporal_profile(const VideoSegment& video, int row) {
    video.validate();
    int L = video.num_frames(), H = video.height(), W = video.width();
    check(row >= 0 && row < H, "temporal profile: row " + std::to_string(row) + " out of [0," + std::to_string(H) + ")");
    Tensor out({3, L, W});
    for (int c = 0; c < 3; ++c)
        for (int l = 0; l < L; ++l)
            for (int x = 0; x < W; ++x) out(c, l, x) = video.frames(l, c, row, x);
    return out;
}

// mean absolute difference between consecutive frames; 0 iff static
inline double flicker_index(const VideoSegment& video) {
    int L = video.num_frames();
    check(L >= 2, "flicker index: needs at least 2 frames, got " + std::to_string(L));
    int64_t per = video.frames.numel() / L;
    double total = 0.0;
    for (int l = 0; l + 1 < L; ++l)
        for (int64_t i = 0; i < per; ++i)
            total += std::abs(video.frames.data[static_cast<size_t>((l + 1) * per + i)] -
                              video.frames.data[static_cast<size_t>(l * per + i)]);
    return total / (static_cast<double>(per) * (L - 1));
}

}  // namespace lvsr
