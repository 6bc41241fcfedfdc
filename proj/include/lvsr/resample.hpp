// Separable bicubic resize (Catmull-Rom, a = -0.5) with kernel widening
// when shrinking, so downsamples are antialiased. Edge handling is clamp;
// weights are renormalized so constants map to constants exactly.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lvsr/tensor.hpp"

namespace lvsr {

namespace detail {

inline double cubic_weight(double x) {
    constexpr double a = -0.5;
    x = std::fabs(x);
    if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

struct ResampleTap {
    int first = 0;                // first source index
    std::vector<double> weights;  // normalized
};

inline std::vector<ResampleTap> build_taps(int in_size, int out_size) {
    double scale = static_cast<double>(in_size) / out_size;
    double filter_scale = std::max(1.0, scale);
    double support = 2.0 * filter_scale;
    std::vector<ResampleTap> taps(static_cast<size_t>(out_size));
    for (int o = 0; o < out_size; ++o) {
        double center = (o + 0.5) * scale - 0.5;
        int lo = static_cast<int>(std::floor(center - support)) + 1;
        int hi = static_cast<int>(std::floor(center + support));
        ResampleTap& t = taps[static_cast<size_t>(o)];
        t.first = std::max(0, lo);
        int last = std::min(in_size - 1, hi);
        double sum = 0.0;
        for (int i = t.first; i <= last; ++i) {
            double w = cubic_weight((i - center) / filter_scale);
            t.weights.push_back(w);
            sum += w;
        }
        check(!t.weights.empty() && sum > 1e-12, "resize: degenerate filter window");
        for (double& w : t.weights) w /= sum;
    }
    return taps;
}

}  // namespace detail

// img (C,H,W) -> (C,out_h,out_w)
inline Tensor resize_bicubic(const Tensor& img, int out_h, int out_w) {
    check(img.ndim() == 3, "resize: expected (C,H,W), got " + shape_str(img.shape));
    check(out_h >= 1 && out_w >= 1, "resize: output dims must be positive");
    int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    std::vector<detail::ResampleTap> col_taps = detail::build_taps(W, out_w);
    Tensor mid({C, H, out_w});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y) {
            const double* row = img.data.data() + (static_cast<int64_t>(c) * H + y) * W;
            double* orow = mid.data.data() + (static_cast<int64_t>(c) * H + y) * out_w;
            for (int x = 0; x < out_w; ++x) {
                const detail::ResampleTap& t = col_taps[static_cast<size_t>(x)];
                double acc = 0.0;
                for (size_t k = 0; k < t.weights.size(); ++k) acc += t.weights[k] * row[t.first + static_cast<int>(k)];
                orow[x] = acc;
            }
        }
    std::vector<detail::ResampleTap> row_taps = detail::build_taps(H, out_h);
    Tensor out({C, out_h, out_w});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < out_h; ++y) {
            const detail::ResampleTap& t = row_taps[static_cast<size_t>(y)];
            double* orow = out.data.data() + (static_cast<int64_t>(c) * out_h + y) * out_w;
            for (int x = 0; x < out_w; ++x) {
                double acc = 0.0;
                for (size_t k = 0; k < t.weights.size(); ++k)
                    acc += t.weights[k] * mid(c, t.first + static_cast<int>(k), x);
                orow[x] = acc;
            }
        }
    return out;
}

// frames (L,C,H,W) -> (L,C,out_h,out_w)
inline Tensor resize_bicubic_video(const Tensor& frames, int out_h, int out_w) {
    check(frames.ndim() == 4, "resize: expected (L,C,H,W)");
    int L = frames.dim(0), C = frames.dim(1), H = frames.dim(2), W = frames.dim(3);
    Tensor out({L, C, out_h, out_w});
    int64_t in_per = static_cast<int64_t>(C) * H * W;
    int64_t out_per = static_cast<int64_t>(C) * out_h * out_w;
    for (int l = 0; l < L; ++l) {
        Tensor f({C, H, W});
        std::copy(frames.data.begin() + l * in_per, frames.data.begin() + (l + 1) * in_per, f.data.begin());
        Tensor r = resize_bicubic(f, out_h, out_w);
        std::copy(r.data.begin(), r.data.end(), out.data.begin() + l * out_per);
    }
    return out;
}

}  // namespace lvsr
