// Shared test utilities: finite-difference gradient checks, a loop-based
// attention reference, and scratch-directory management.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lvsr/config.hpp"
#include "lvsr/params.hpp"
#include "lvsr/tensor.hpp"

namespace testutil {

using lvsr::ModelConfig;
using lvsr::Parameter;
using lvsr::Rng;
using lvsr::Tensor;

// Removes and recreates a per-test scratch directory under the system temp
// root so reruns start clean.
inline std::string fresh_dir(const std::string& name) {
    std::filesystem::path p = std::filesystem::temp_directory_path() / ("lvsr_tests_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

inline Tensor rand_tensor(std::vector<int> shape, uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    return rng.normal_tensor(std::move(shape), scale);
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    int coords_checked = 0;
};

// Central-difference check of d(loss)/d(param) for randomly sampled
// coordinates across `targets`. `run(true)` must rebuild the graph, zero the
// grads, run backward, and return the loss; `run(false)` returns the loss
// only. The relative-error floor absorbs finite-difference roundoff (about
// 1e-10 absolute at h = 1e-5 for losses of order 1).
inline GradCheckResult fd_gradient_check(const std::vector<Parameter*>& targets,
                                         const std::function<double(bool)>& run, int samples, uint64_t seed,
                                         double h = 1e-5) {
    run(true);
    std::vector<Tensor> analytic;
    analytic.reserve(targets.size());
    int64_t total = 0;
    for (Parameter* p : targets) {
        analytic.push_back(p->grad);
        total += p->value.numel();
    }
    lvsr::check(total > 0, "fd_gradient_check: no coordinates to sample");

    Rng rng(seed);
    GradCheckResult res;
    for (int s = 0; s < samples; ++s) {
        int64_t flat = rng.below(total);
        size_t pi = 0;
        while (flat >= targets[pi]->value.numel()) {
            flat -= targets[pi]->value.numel();
            ++pi;
        }
        double& slot = targets[pi]->value.data[static_cast<size_t>(flat)];
        double orig = slot;
        slot = orig + h;
        double lp = run(false);
        slot = orig - h;
        double lm = run(false);
        slot = orig;
        double fd = (lp - lm) / (2.0 * h);
        double an = analytic[pi].data[static_cast<size_t>(flat)];
        double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-4});
        if (rel > res.max_rel_err) res.max_rel_err = rel;
        ++res.coords_checked;
    }
    return res;
}

// Plain-loop scaled-dot-product reference: Q = X Wq, K = Y Wk, V = Y Wv,
// per-head softmax(Q K^T / sqrt(dh)) V, head concat, then Wo. Written
// independently of the tape ops so it can serve as an oracle.
inline Tensor attention_oracle(const Tensor& q_src, const Tensor& kv_src, const Tensor& wq, const Tensor& wk,
                               const Tensor& wv, const Tensor& wo, int heads) {
    int B = q_src.dim(0), Nq = q_src.dim(1), Dm = q_src.dim(2);
    int Nk = kv_src.dim(1);
    int Da = wq.dim(1);
    int dh = Da / heads;
    auto project = [](const Tensor& x, const Tensor& w, int b, int n, int j) {
        double s = 0.0;
        for (int i = 0; i < x.dim(2); ++i) s += x(b, n, i) * w(i, j);
        return s;
    };
    Tensor mixed({B, Nq, Da});
    std::vector<double> logits(static_cast<size_t>(Nk));
    for (int b = 0; b < B; ++b)
        for (int hd = 0; hd < heads; ++hd)
            for (int nq = 0; nq < Nq; ++nq) {
                for (int nk = 0; nk < Nk; ++nk) {
                    double dot = 0.0;
                    for (int j = 0; j < dh; ++j)
                        dot += project(q_src, wq, b, nq, hd * dh + j) * project(kv_src, wk, b, nk, hd * dh + j);
                    logits[static_cast<size_t>(nk)] = dot / std::sqrt(static_cast<double>(dh));
                }
                double mx = logits[0];
                for (double v : logits) mx = std::max(mx, v);
                double z = 0.0;
                for (double& v : logits) {
                    v = std::exp(v - mx);
                    z += v;
                }
                for (int j = 0; j < dh; ++j) {
                    double acc = 0.0;
                    for (int nk = 0; nk < Nk; ++nk)
                        acc += logits[static_cast<size_t>(nk)] / z * project(kv_src, wv, b, nk, hd * dh + j);
                    mixed(b, nq, hd * dh + j) = acc;
                }
            }
    Tensor out({B, Nq, Dm});
    for (int b = 0; b < B; ++b)
        for (int n = 0; n < Nq; ++n)
            for (int j = 0; j < Dm; ++j) {
                double s = 0.0;
                for (int i = 0; i < Da; ++i) s += mixed(b, n, i) * wo(i, j);
                out(b, n, j) = s;
            }
    return out;
}

// Smallest denoiser configuration that still exercises every mechanism:
// two levels, one attention level, all toggles on.
inline ModelConfig micro_model() {
    ModelConfig m;
    m.latent_channels = 2;
    m.base_channels = 4;
    m.channel_mult = {1, 2};
    m.res_blocks = 1;
    m.attention_levels = {1};
    m.heads = 1;
    m.time_embed_dim = 8;
    m.norm_groups = 2;
    m.ffn_expansion = 2;
    m.semantic.token_dim = 4;
    m.semantic.patch = 2;
    m.max_frames = 4;
    return m;
}

}  // namespace testutil
