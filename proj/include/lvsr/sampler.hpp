// Inference pipeline: split the LQ video into fixed-length segments,
// run ancestral reverse diffusion per segment with LR-latent and
// semantic conditioning, decode, and reassemble. Segments are
// independent; each derives its own RNG stream from (seed, index).
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lvsr/codec.hpp"
#include "lvsr/denoiser.hpp"
#include "lvsr/resample.hpp"
#include "lvsr/schedule.hpp"
#include "lvsr/seam.hpp"
#include "lvsr/tensor.hpp"
#include "lvsr/types.hpp"

namespace lvsr {

// consecutive non-overlapping segments; the last one is padded by
// repeating its final frame and records the pad for trimming
inline std::vector<VideoSegment> segment_video(const VideoSegment& video, int segment_frames) {
    video.validate();
    check(segment_frames >= 1, "segmenting: segment length must be positive");
    int total = video.num_frames();
    int64_t per = video.frames.numel() / total;
    std::vector<VideoSegment> out;
    for (int start = 0; start < total; start += segment_frames) {
        int have = std::min(segment_frames, total - start);
        VideoSegment seg;
        seg.source_id = video.source_id;
        seg.frame_offset = video.frame_offset + start;
        seg.pad_frames = segment_frames - have;
        std::vector<int> shape = video.frames.shape;
        shape[0] = segment_frames;
        seg.frames = Tensor(shape);
        for (int l = 0; l < segment_frames; ++l) {
            int src = start + std::min(l, have - 1);
            std::copy(video.frames.data.begin() + src * per, video.frames.data.begin() + (src + 1) * per,
                      seg.frames.data.begin() + l * per);
        }
        out.push_back(std::move(seg));
    }
    return out;
}

using EpsModel = std::function<Tensor(const Tensor& z_t, int t)>;

// ancestral reverse walk over the given decreasing timesteps; fresh
// noise is injected at every transition except the final one to t=-1
inline Tensor reverse_diffuse(const NoiseSchedule& sched, const EpsModel& eps_model, Tensor z,
                              const std::vector<int>& timesteps, Rng& rng) {
    check(!timesteps.empty(), "sampling: empty timestep list");
    for (size_t k = 0; k < timesteps.size(); ++k) {
        int t = timesteps[k];
        int t_prev = k + 1 < timesteps.size() ? timesteps[k + 1] : -1;
        check(t_prev < t, "sampling: timesteps must be strictly decreasing");
        Tensor eps_hat = eps_model(z, t);
        check(eps_hat.same_shape(z), "sampling: noise prediction shape mismatch");
        Tensor z0 = sched.predict_z0(z, eps_hat, t);
        NoiseSchedule::ReverseCoeffs rc = sched.reverse_coeffs(t, t_prev);
        for (size_t i = 0; i < z.data.size(); ++i) {
            double v = rc.c_z0 * z0.data[i] + rc.c_zt * z.data[i];
            if (rc.sigma > 0.0) v += rc.sigma * rng.normal();
            z.data[i] = v;
        }
        check_numeric(z.all_finite(), "sampling: non-finite latent at t=" + std::to_string(t));
    }
    return z;
}

// one LQ segment -> HQ frames at 4x; conditioning latents come from the
// bicubically upsampled LQ, semantic tokens from the raw LQ
inline VideoSegment super_resolve_segment(const DenoiserNet& net, const Codec& codec, const SemanticEncoder* encoder,
                                          const NoiseSchedule& sched, const VideoSegment& lq, int steps, Rng& rng) {
    lq.validate();
    check((encoder != nullptr) == net.cfg.semantic.enabled,
          "sampling: semantic encoder presence must match the model config");
    int L = lq.num_frames(), lh = lq.height(), lw = lq.width();
    Tensor up = resize_bicubic_video(lq.frames, lh * scale_factor(), lw * scale_factor());
    Tensor lr = codec.encode(up);
    Tensor sem_tokens;
    const Tensor* sem = nullptr;
    if (encoder != nullptr) {
        sem_tokens = encoder->encode(lq).tokens;
        sem = &sem_tokens;
    }
    std::vector<int> ts = subsample_timesteps(sched.T, steps);
    Tensor z = rng.normal_tensor({L, net.cfg.latent_channels, lh, lw});
    EpsModel model = [&](const Tensor& z_t, int t) { return net.predict_noise(z_t, lr, sem, t); };
    Tensor z0 = reverse_diffuse(sched, model, std::move(z), ts, rng);
    VideoSegment hq;
    hq.source_id = lq.source_id;
    hq.frame_offset = lq.frame_offset;
    hq.pad_frames = lq.pad_frames;
    hq.frames = codec.decode(z0);
    return hq;
}

// full video: segment, per-segment diffusion, trim pads, reassemble
inline VideoSegment super_resolve_video(const DenoiserNet& net, const Codec& codec, const SemanticEncoder* encoder,
                                        const NoiseSchedule& sched, const VideoSegment& lq, int steps,
                                        int segment_frames, uint64_t seed) {
    check(steps >= 1 && steps <= sched.T, "sampling: steps out of range");
    if (net.cfg.temporal_enabled || net.cfg.tsam_enabled)
        check(segment_frames <= net.cfg.max_frames, "sampling: segment length " + std::to_string(segment_frames) +
                                                        " exceeds the model's max of " +
                                                        std::to_string(net.cfg.max_frames) + " frames");
    std::vector<VideoSegment> segments = segment_video(lq, segment_frames);
    VideoSegment out;
    out.source_id = lq.source_id;
    out.frame_offset = lq.frame_offset;
    out.frames = Tensor({lq.num_frames(), 3, lq.height() * scale_factor(), lq.width() * scale_factor()});
    int64_t per = out.frames.numel() / lq.num_frames();
    int written = 0;
    for (size_t k = 0; k < segments.size(); ++k) {
        Rng rng(mix_seed(mix_seed(seed, 0x5E9), static_cast<uint64_t>(k)));
        VideoSegment hq = super_resolve_segment(net, codec, encoder, sched, segments[k], steps, rng);
        int keep = hq.num_frames() - hq.pad_frames;
        std::copy(hq.frames.data.begin(), hq.frames.data.begin() + keep * per,
                  out.frames.data.begin() + written * per);
        written += keep;
    }
    check(written == lq.num_frames(), "sampling: reassembled frame count mismatch");
    return out;
}

}  // namespace lvsr
