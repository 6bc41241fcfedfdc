// Paired HQ/LQ clip storage plus a deterministic synthetic-video
// generator for toy runs. A dataset root holds hq/<clip>/*.ppm and
// lq/<clip>/*.ppm with matching clip names and frame counts.
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "lvsr/degrade.hpp"
#include "lvsr/image_io.hpp"
#include "lvsr/tensor.hpp"
#include "lvsr/types.hpp"

namespace lvsr {

struct ClipPair {
    std::string id;
    VideoSegment hq;  // (L,3,H,W)
    VideoSegment lq;  // (L,3,H/4,W/4)
};

inline std::vector<std::string> subdir_names(const std::string& dir) {
    std::vector<std::string> names;
    for (const std::string& p : list_subdirs(dir)) names.push_back(std::filesystem::path(p).filename().string());
    return names;
}

struct TrainExample {
    Tensor hq;  // (frames,3,crop,crop)
    Tensor lq;  // (frames,3,crop/4,crop/4)
};

struct PairedDataset {
    std::vector<ClipPair> clips;

    static PairedDataset load(const std::string& root) {
        PairedDataset ds;
        std::vector<std::string> hq_ids = subdir_names(root + "/hq");
        std::vector<std::string> lq_ids = subdir_names(root + "/lq");
        check(!hq_ids.empty(), "dataset: no clips under " + root + "/hq");
        check(hq_ids == lq_ids, "dataset: hq and lq clip sets differ under " + root);
        for (const std::string& id : hq_ids) {
            ClipPair pair;
            pair.id = id;
            pair.hq = read_video_dir(root + "/hq/" + id);
            pair.lq = read_video_dir(root + "/lq/" + id);
            check(pair.hq.num_frames() == pair.lq.num_frames(),
                  "dataset: clip " + id + " frame count mismatch: hq " + std::to_string(pair.hq.num_frames()) +
                      " vs lq " + std::to_string(pair.lq.num_frames()));
            check(pair.hq.height() == pair.lq.height() * scale_factor() &&
                      pair.hq.width() == pair.lq.width() * scale_factor(),
                  "dataset: clip " + id + " is not a " + std::to_string(scale_factor()) + "x pair: hq " +
                      std::to_string(pair.hq.height()) + "x" + std::to_string(pair.hq.width()) + ", lq " +
                      std::to_string(pair.lq.height()) + "x" + std::to_string(pair.lq.width()));
            ds.clips.push_back(std::move(pair));
        }
        return ds;
    }

    // draws clip, start frame, then crop origin in LQ coordinates, in
    // that fixed order; crop is the HQ-side crop size
    TrainExample sample(Rng& rng, int frames, int crop) const {
        check(!clips.empty(), "dataset: empty");
        check(frames >= 1, "dataset: frames must be positive");
        check(crop >= scale_factor() && crop % scale_factor() == 0,
              "dataset: crop " + std::to_string(crop) + " must be a positive multiple of " +
                  std::to_string(scale_factor()));
        const ClipPair& clip = clips[static_cast<size_t>(rng.below(static_cast<int>(clips.size())))];
        check(clip.hq.num_frames() >= frames, "dataset: clip " + clip.id + " has " +
                                                  std::to_string(clip.hq.num_frames()) + " frames, need " +
                                                  std::to_string(frames));
        int lh = clip.lq.height(), lw = clip.lq.width();
        int lc = crop / scale_factor();
        check(lc <= lh && lc <= lw, "dataset: crop " + std::to_string(crop) + " exceeds clip " + clip.id);
        int start = rng.below(clip.hq.num_frames() - frames + 1);
        int ly = rng.below(lh - lc + 1);
        int lx = rng.below(lw - lc + 1);
        int hy = ly * scale_factor(), hx = lx * scale_factor();
        TrainExample ex;
        ex.hq = Tensor({frames, 3, crop, crop});
        ex.lq = Tensor({frames, 3, lc, lc});
        for (int l = 0; l < frames; ++l)
            for (int c = 0; c < 3; ++c) {
                for (int y = 0; y < crop; ++y)
                    for (int x = 0; x < crop; ++x) ex.hq(l, c, y, x) = clip.hq.frames(start + l, c, hy + y, hx + x);
                for (int y = 0; y < lc; ++y)
                    for (int x = 0; x < lc; ++x) ex.lq(l, c, y, x) = clip.lq.frames(start + l, c, ly + y, lx + x);
            }
        return ex;
    }

    int min_clip_frames() const {
        int m = clips.empty() ? 0 : clips[0].hq.num_frames();
        for (const ClipPair& c : clips) m = std::min(m, c.hq.num_frames());
        return m;
    }
};

// smooth drifting blobs over a slowly varying background; fully
// determined by (frames, h, w, seed)
inline VideoSegment make_toy_video(int frames, int h, int w, uint64_t seed) {
    check(frames >= 1 && h >= 4 && w >= 4, "toy video: degenerate dims");
    Rng rng(mix_seed(seed, 0x70FDA7A));
    double phase[3];
    for (double& p : phase) p = rng.uniform(0.0, 1.0);
    constexpr int kBlobs = 3;
    double bx[kBlobs], by[kBlobs], vx[kBlobs], vy[kBlobs], rad[kBlobs], amp[kBlobs][3];
    for (int k = 0; k < kBlobs; ++k) {
        bx[k] = rng.uniform(0.0, w);
        by[k] = rng.uniform(0.0, h);
        vx[k] = rng.uniform(-2.0, 2.0);
        vy[k] = rng.uniform(-2.0, 2.0);
        rad[k] = rng.uniform(0.1 * std::min(h, w), 0.25 * std::min(h, w));
        for (int c = 0; c < 3; ++c) amp[k][c] = rng.uniform(-0.4, 0.6);
    }
    VideoSegment video;
    video.source_id = "toy";
    video.frames = Tensor({frames, 3, h, w});
    for (int l = 0; l < frames; ++l)
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double v = 0.45 + 0.15 * std::sin(2.0 * M_PI * (static_cast<double>(x) / w + phase[c])) +
                               0.1 * std::cos(2.0 * M_PI * (static_cast<double>(y) / h + phase[(c + 1) % 3]));
                    for (int k = 0; k < kBlobs; ++k) {
                        double cx = bx[k] + vx[k] * l, cy = by[k] + vy[k] * l;
                        double dx = std::fmod(std::abs(x - cx), static_cast<double>(w));
                        double dy = std::fmod(std::abs(y - cy), static_cast<double>(h));
                        dx = std::min(dx, w - dx);
                        dy = std::min(dy, h - dy);
                        v += amp[k][c] * std::exp(-0.5 * (dx * dx + dy * dy) / (rad[k] * rad[k]));
                    }
                    video.frames(l, c, y, x) = std::clamp(v, 0.0, 1.0);
                }
    return video;
}

inline std::string clip_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "clip_%03d", i);
    return buf;
}

// writes <dir>/hq/clip_XXX/frame_XXXXXX.ppm; clip i is seeded with
// mix_seed(seed, i)
inline void write_toy_dataset(const std::string& dir, int clips, int frames, int h, int w, uint64_t seed) {
    for (int i = 0; i < clips; ++i) {
        VideoSegment v = make_toy_video(frames, h, w, mix_seed(seed, static_cast<uint64_t>(i)));
        write_video_dir(dir + "/hq/" + clip_name(i), v.frames);
    }
}

}  // namespace lvsr
