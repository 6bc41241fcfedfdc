// Synthetic LQ generation: Gaussian blur, antialiased x4 downsample,
// additive Gaussian noise, and block-DCT quantization as a compression
// proxy. Stage parameters are drawn once per segment so degradation is
// temporally consistent within a clip.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lvsr/config.hpp"
#include "lvsr/resample.hpp"
#include "lvsr/tensor.hpp"
#include "lvsr/types.hpp"

namespace lvsr {

struct DegradeParams {
    double blur_sigma = 0.0;
    double noise_std = 0.0;
    double quality = 95.0;
    bool blur_enabled = true;
    bool noise_enabled = true;
    bool compress_enabled = true;
};

// one parameter draw per segment; all frames of the segment share it
inline DegradeParams draw_degrade_params(const DegradeConfig& cfg, Rng& rng) {
    DegradeParams p;
    p.blur_sigma = rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);
    p.noise_std = rng.uniform(cfg.noise_std_min, cfg.noise_std_max);
    p.quality = rng.uniform(cfg.quality_min, cfg.quality_max);
    p.blur_enabled = cfg.blur_enabled;
    p.noise_enabled = cfg.noise_enabled;
    p.compress_enabled = cfg.compress_enabled;
    return p;
}

// separable Gaussian, radius 3*sigma, clamp edge handling; img (C,H,W)
inline Tensor gaussian_blur(const Tensor& img, double sigma) {
    check(img.ndim() == 3, "blur: expected (C,H,W)");
    check(sigma > 0.0, "blur: sigma must be positive");
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        kernel[static_cast<size_t>(i + radius)] = w;
        sum += w;
    }
    for (double& w : kernel) w /= sum;
    int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    Tensor mid({C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    int xx = std::clamp(x + k, 0, W - 1);
                    acc += kernel[static_cast<size_t>(k + radius)] * img(c, y, xx);
                }
                mid(c, y, x) = acc;
            }
    Tensor out({C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    int yy = std::clamp(y + k, 0, H - 1);
                    acc += kernel[static_cast<size_t>(k + radius)] * mid(c, yy, x);
                }
                out(c, y, x) = acc;
            }
    return out;
}

namespace detail {

// orthonormal 8x8 DCT-II basis
inline const double* dct8_matrix() {
    static const std::vector<double> m = [] {
        std::vector<double> v(64);
        for (int u = 0; u < 8; ++u) {
            double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int j = 0; j < 8; ++j) v[static_cast<size_t>(u * 8 + j)] = a * std::cos((2 * j + 1) * u * M_PI / 16.0);
        }
        return v;
    }();
    return m.data();
}

// standard luminance quantization table, applied to every channel
inline const int* base_quant_table() {
    static const int q[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                              14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                              18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                              49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
    return q;
}

}  // namespace detail

// 8x8 block transform coding round-trip at the given quality in [1,100];
// img (C,H,W) in [0,1], dims divisible by 8
inline Tensor block_dct_quantize(const Tensor& img, double quality) {
    check(img.ndim() == 3, "block quantize: expected (C,H,W)");
    int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    check(H % 8 == 0 && W % 8 == 0,
          "block quantize: dims " + std::to_string(H) + "x" + std::to_string(W) + " not divisible by 8");
    check(quality >= 1.0 && quality <= 100.0, "block quantize: quality out of [1,100]");
    double s = quality < 50.0 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    double qm[64];
    const int* base = detail::base_quant_table();
    for (int i = 0; i < 64; ++i) qm[i] = std::max(1.0, std::floor((base[i] * s + 50.0) / 100.0));
    const double* dct = detail::dct8_matrix();
    Tensor out = img;
    double blk[64], tmp[64];
    for (int c = 0; c < C; ++c)
        for (int by = 0; by < H; by += 8)
            for (int bx = 0; bx < W; bx += 8) {
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) blk[y * 8 + x] = img(c, by + y, bx + x) * 255.0 - 128.0;
                // D = M * blk * M^T
                for (int u = 0; u < 8; ++u)
                    for (int x = 0; x < 8; ++x) {
                        double acc = 0.0;
                        for (int y = 0; y < 8; ++y) acc += dct[u * 8 + y] * blk[y * 8 + x];
                        tmp[u * 8 + x] = acc;
                    }
                for (int u = 0; u < 8; ++u)
                    for (int v = 0; v < 8; ++v) {
                        double acc = 0.0;
                        for (int x = 0; x < 8; ++x) acc += tmp[u * 8 + x] * dct[v * 8 + x];
                        blk[u * 8 + v] = std::round(acc / qm[u * 8 + v]) * qm[u * 8 + v];
                    }
                // blk = M^T * D * M
                for (int y = 0; y < 8; ++y)
                    for (int v = 0; v < 8; ++v) {
                        double acc = 0.0;
                        for (int u = 0; u < 8; ++u) acc += dct[u * 8 + y] * blk[u * 8 + v];
                        tmp[y * 8 + v] = acc;
                    }
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) {
                        double acc = 0.0;
                        for (int v = 0; v < 8; ++v) acc += tmp[y * 8 + v] * dct[v * 8 + x];
                        out(c, by + y, bx + x) = std::clamp((acc + 128.0) / 255.0, 0.0, 1.0);
                    }
            }
    return out;
}

// full pipeline for one segment; `rng` must be seeded per segment (the
// caller derives it from the run seed and the segment index)
inline VideoSegment degrade_segment(const VideoSegment& hq, const DegradeConfig& cfg, Rng& rng,
                                    DegradeParams* out_params = nullptr) {
    hq.validate();
    int L = hq.num_frames(), H = hq.height(), W = hq.width();
    check(H % scale_factor() == 0 && W % scale_factor() == 0,
          "degrade: frame dims " + std::to_string(H) + "x" + std::to_string(W) + " not divisible by " +
              std::to_string(scale_factor()));
    int lh = H / scale_factor(), lw = W / scale_factor();
    if (cfg.compress_enabled)
        check(lh % 8 == 0 && lw % 8 == 0, "degrade: LQ dims " + std::to_string(lh) + "x" + std::to_string(lw) +
                                              " not divisible by the 8x8 block size");
    DegradeParams p = draw_degrade_params(cfg, rng);
    if (out_params != nullptr) *out_params = p;
    VideoSegment lq;
    lq.source_id = hq.source_id;
    lq.frame_offset = hq.frame_offset;
    lq.pad_frames = hq.pad_frames;
    lq.frames = Tensor({L, 3, lh, lw});
    int64_t hq_per = static_cast<int64_t>(3) * H * W;
    int64_t lq_per = static_cast<int64_t>(3) * lh * lw;
    for (int l = 0; l < L; ++l) {
        Tensor f({3, H, W});
        std::copy(hq.frames.data.begin() + l * hq_per, hq.frames.data.begin() + (l + 1) * hq_per, f.data.begin());
        if (p.blur_enabled) f = gaussian_blur(f, p.blur_sigma);
        f = resize_bicubic(f, lh, lw);
        if (p.noise_enabled && p.noise_std > 0.0)
            for (double& v : f.data) v += p.noise_std * rng.normal();
        for (double& v : f.data) v = std::clamp(v, 0.0, 1.0);
        if (p.compress_enabled) f = block_dct_quantize(f, p.quality);
        std::copy(f.data.begin(), f.data.end(), lq.frames.data.begin() + l * lq_per);
    }
    return lq;
}

}  // namespace lvsr
