// inference pipeline: segmentation with tail padding, ancestral reverse
// diffusion against a closed-form noise oracle, end-to-end shape and
// determinism contracts, per-segment independence, and conditioning guards
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include "helpers.hpp"
#include "lvsr/dataset.hpp"
#include "lvsr/sampler.hpp"

using namespace lvsr;

namespace {

struct Bundle {
    DenoiserNet net;
    Codec codec;
    std::unique_ptr<SemanticEncoder> encoder;
    NoiseSchedule sched;
};

Bundle micro_bundle(bool semantic = true) {
    Bundle b;
    ModelConfig m = testutil::micro_model();
    m.semantic.enabled = semantic;
    b.net = DenoiserNet::build(m, 21);
    b.codec = Codec::build(m.latent_channels, 8, 21);
    if (semantic) b.encoder = make_semantic_encoder(m.semantic.encoder, m.semantic.patch, m.semantic.token_dim);
    b.sched = NoiseSchedule::linear(1000, 1e-4, 0.02);
    return b;
}

}  // namespace

TEST_CASE("segmenting pads the tail and trims back to the input", "[sampler]") {
    VideoSegment v = make_toy_video(10, 8, 8, 3);
    v.source_id = "clip";
    v.frame_offset = 2;

    std::vector<VideoSegment> segs = segment_video(v, 4);
    REQUIRE(segs.size() == 3);
    int64_t per = v.frames.numel() / 10;
    for (size_t k = 0; k < segs.size(); ++k) {
        CHECK(segs[k].frames.dim(0) == 4);
        CHECK(segs[k].source_id == "clip");
        CHECK(segs[k].frame_offset == 2 + static_cast<int>(k) * 4);
    }
    CHECK(segs[0].pad_frames == 0);
    CHECK(segs[1].pad_frames == 0);
    CHECK(segs[2].pad_frames == 2);

    // the padded tail repeats the final source frame
    for (int l = 2; l < 4; ++l)
        for (int64_t i = 0; i < per; ++i)
            REQUIRE(segs[2].frames.data[static_cast<size_t>(l * per + i)] ==
                    v.frames.data[static_cast<size_t>(9 * per + i)]);

    // trimming the pads and concatenating recovers the input exactly
    Tensor rebuilt(v.frames.shape);
    int written = 0;
    for (const VideoSegment& s : segs) {
        int keep = s.num_frames() - s.pad_frames;
        std::copy(s.frames.data.begin(), s.frames.data.begin() + keep * per,
                  rebuilt.data.begin() + written * per);
        written += keep;
    }
    REQUIRE(written == 10);
    CHECK(bits_equal(rebuilt, v.frames));

    SECTION("exact fits and unit segments") {
        VideoSegment w = make_toy_video(4, 8, 8, 4);
        std::vector<VideoSegment> one = segment_video(w, 4);
        REQUIRE(one.size() == 1);
        CHECK(one[0].pad_frames == 0);
        CHECK(bits_equal(one[0].frames, w.frames));
        CHECK(segment_video(w, 1).size() == 4);
        CHECK(segment_video(w, 7).size() == 1);
        CHECK(segment_video(w, 7)[0].pad_frames == 3);
    }
    SECTION("bad segment length") { REQUIRE_THROWS_AS(segment_video(v, 0), Error); }
}

TEST_CASE("reverse diffusion recovers the target under a noise oracle", "[sampler]") {
    // the oracle reports the exact noise that links z_t to a fixed target,
    // so the ancestral walk must land on that target
    NoiseSchedule sched = NoiseSchedule::linear(1000, 1e-4, 0.02);
    Rng rng(11);
    Tensor target = rng.normal_tensor({2, 2, 8, 8});
    EpsModel oracle = [&](const Tensor& zt, int t) {
        double ab = sched.alpha_bar[static_cast<size_t>(t)];
        Tensor e(zt.shape);
        for (size_t i = 0; i < e.data.size(); ++i)
            e.data[i] = (zt.data[i] - std::sqrt(ab) * target.data[i]) / std::sqrt(1.0 - ab);
        return e;
    };
    std::vector<int> ts = subsample_timesteps(sched.T, 50);
    Tensor z = rng.normal_tensor({2, 2, 8, 8});
    Tensor out = reverse_diffuse(sched, oracle, std::move(z), ts, rng);
    double mae = mean_abs_diff(out, target);
    INFO("oracle recovery mae " << mae);
    CHECK(mae <= 1e-3);

    SECTION("guards") {
        Rng r2(12);
        Tensor z2 = r2.normal_tensor({1, 2, 4, 4});
        REQUIRE_THROWS_AS(reverse_diffuse(sched, oracle, z2, {}, r2), Error);
        REQUIRE_THROWS_AS(reverse_diffuse(sched, oracle, z2, {5, 5}, r2), Error);
        EpsModel bad = [](const Tensor&, int) { return Tensor({1, 2, 2, 2}); };
        Tensor z3 = r2.normal_tensor({1, 2, 4, 4});
        REQUIRE_THROWS_AS(reverse_diffuse(sched, bad, z3, {9, 4}, r2), Error);
    }
}

TEST_CASE("super-resolution output is 4x the input and in range", "[sampler]") {
    Bundle b = micro_bundle();
    VideoSegment lq = make_toy_video(8, 16, 16, 5);
    lq.source_id = "shape";
    VideoSegment hq = super_resolve_video(b.net, b.codec, b.encoder.get(), b.sched, lq, 2, 4, 77);
    REQUIRE(hq.frames.shape == std::vector<int>{8, 3, 64, 64});
    CHECK(hq.source_id == "shape");
    CHECK(hq.frames.min_value() >= 0.0);
    CHECK(hq.frames.max_value() <= 1.0);
}

TEST_CASE("sampling is deterministic in the seed", "[sampler]") {
    Bundle b = micro_bundle();
    VideoSegment lq = make_toy_video(6, 8, 8, 6);
    VideoSegment a = super_resolve_video(b.net, b.codec, b.encoder.get(), b.sched, lq, 3, 4, 9);
    VideoSegment c = super_resolve_video(b.net, b.codec, b.encoder.get(), b.sched, lq, 3, 4, 9);
    CHECK(bits_equal(a.frames, c.frames));
    VideoSegment d = super_resolve_video(b.net, b.codec, b.encoder.get(), b.sched, lq, 3, 4, 10);
    CHECK_FALSE(bits_equal(a.frames, d.frames));
}

TEST_CASE("segments are processed independently", "[sampler]") {
    // re-running any single segment with its derived stream reproduces the
    // matching slice of the full output, regardless of processing order
    Bundle b = micro_bundle();
    VideoSegment lq = make_toy_video(6, 8, 8, 6);
    uint64_t seed = 9;
    VideoSegment full = super_resolve_video(b.net, b.codec, b.encoder.get(), b.sched, lq, 3, 4, seed);
    std::vector<VideoSegment> segs = segment_video(lq, 4);
    REQUIRE(segs.size() == 2);
    int64_t per = full.frames.numel() / 6;
    for (size_t k : {size_t(1), size_t(0)}) {
        Rng rng(mix_seed(mix_seed(seed, 0x5E9), static_cast<uint64_t>(k)));
        VideoSegment hq = super_resolve_segment(b.net, b.codec, b.encoder.get(), b.sched, segs[k], 3, rng);
        int keep = hq.num_frames() - hq.pad_frames;
        int start = static_cast<int>(k) * 4;
        for (int64_t i = 0; i < keep * per; ++i)
            REQUIRE(hq.frames.data[static_cast<size_t>(i)] ==
                    full.frames.data[static_cast<size_t>(start * per + i)]);
    }
}

TEST_CASE("conditioning toggles keep the pipeline intact", "[sampler]") {
    VideoSegment lq = make_toy_video(4, 8, 8, 8);

    SECTION("no semantic branch") {
        Bundle b = micro_bundle(false);
        VideoSegment hq = super_resolve_video(b.net, b.codec, nullptr, b.sched, lq, 2, 4, 3);
        CHECK(hq.frames.shape == std::vector<int>{4, 3, 32, 32});
    }
    SECTION("encoder presence must match the model") {
        Bundle on = micro_bundle(true);
        REQUIRE_THROWS_AS(super_resolve_video(on.net, on.codec, nullptr, on.sched, lq, 2, 4, 3), Error);
        Bundle off = micro_bundle(false);
        auto enc = make_semantic_encoder("stub", 2, 4);
        REQUIRE_THROWS_AS(super_resolve_video(off.net, off.codec, enc.get(), off.sched, lq, 2, 4, 3), Error);
    }
    SECTION("temporal-free models accept segments beyond max_frames") {
        ModelConfig m = testutil::micro_model();
        m.temporal_enabled = false;
        m.tsam_enabled = false;
        Bundle b;
        b.net = DenoiserNet::build(m, 21);
        b.codec = Codec::build(m.latent_channels, 8, 21);
        b.encoder = make_semantic_encoder(m.semantic.encoder, m.semantic.patch, m.semantic.token_dim);
        b.sched = NoiseSchedule::linear(1000, 1e-4, 0.02);
        VideoSegment five = make_toy_video(5, 4, 4, 8);
        VideoSegment hq = super_resolve_video(b.net, b.codec, b.encoder.get(), b.sched, five, 1, 5, 3);
        CHECK(hq.frames.shape == std::vector<int>{5, 3, 16, 16});
    }
    SECTION("step and segment bounds") {
        Bundle b = micro_bundle();
        REQUIRE_THROWS_AS(super_resolve_video(b.net, b.codec, b.encoder.get(), b.sched, lq, 0, 4, 3), Error);
        REQUIRE_THROWS_AS(super_resolve_video(b.net, b.codec, b.encoder.get(), b.sched, lq, 1001, 4, 3), Error);
        REQUIRE_THROWS_AS(super_resolve_video(b.net, b.codec, b.encoder.get(), b.sched, lq, 2, 5, 3), Error);
    }
}
