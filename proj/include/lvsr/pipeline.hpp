// Command layer behind the CLI. Every command writes its outputs plus a
// deterministic run.json record (flags, config echo, result summary)
// sufficient to reproduce the run; nothing here reads the clock.
#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lvsr/dataset.hpp"
#include "lvsr/degrade.hpp"
#include "lvsr/metrics.hpp"
#include "lvsr/sampler.hpp"
#include "lvsr/training.hpp"

namespace lvsr {

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream os(path, std::ios::trunc);
    check(os.good(), "cannot write " + path);
    os << j.dump(2) << "\n";
}

inline json run_record(const std::string& command, json args, json results) {
    json rec;
    rec["format"] = "lvsr-run";
    rec["schema_version"] = RunConfig::kSchemaVersion;
    rec["command"] = command;
    rec["args"] = std::move(args);
    rec["results"] = std::move(results);
    return rec;
}

// A directory holding .ppm frames is a single clip; otherwise each
// subdirectory is one clip, ordered by name.
struct ClipList {
    std::vector<std::pair<std::string, std::string>> entries;  // (id, path)
    bool nested = false;
};

inline ClipList clip_dirs(const std::string& dir) {
    namespace fs = std::filesystem;
    check(fs::is_directory(dir), "not a directory: " + dir);
    ClipList cl;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".ppm") {
            cl.entries.emplace_back(fs::path(dir).filename().string(), dir);
            return cl;
        }
    cl.nested = true;
    for (const std::string& p : list_subdirs(dir)) cl.entries.emplace_back(fs::path(p).filename().string(), p);
    check(!cl.entries.empty(), "no .ppm frames or clip directories under " + dir);
    return cl;
}

// ---- degrade ----

// shared by the degrade command and the ablation harness; treats each
// clip directory as one segment, indexed in sorted order
inline json degrade_tree(const std::string& in_dir, const std::string& out_dir, uint64_t seed,
                         const DegradeConfig& cfg) {
    ClipList clips = clip_dirs(in_dir);
    std::filesystem::create_directories(out_dir);
    json segments = json::array();
    for (size_t i = 0; i < clips.entries.size(); ++i) {
        VideoSegment hq = read_video_dir(clips.entries[i].second);
        Rng rng(mix_seed(seed, static_cast<uint64_t>(i)));
        DegradeParams p;
        VideoSegment lq = degrade_segment(hq, cfg, rng, &p);
        std::string out = clips.nested ? out_dir + "/" + clips.entries[i].first : out_dir;
        write_video_dir(out, lq.frames);
        json row;
        row["id"] = clips.entries[i].first;
        row["index"] = static_cast<int>(i);
        row["frames"] = hq.num_frames();
        row["blur_sigma"] = p.blur_sigma;
        row["noise_std"] = p.noise_std;
        row["quality"] = p.quality;
        segments.push_back(std::move(row));
    }
    json manifest;
    manifest["format"] = "lvsr-degrade-manifest";
    manifest["schema_version"] = RunConfig::kSchemaVersion;
    manifest["seed"] = seed;
    RunConfig echo;
    echo.degrade = cfg;
    manifest["degrade"] = config_to_json(echo)["degrade"];
    manifest["segments"] = std::move(segments);
    write_json_file(out_dir + "/manifest.json", manifest);
    return manifest;
}

struct DegradeArgs {
    std::string in_dir, out_dir, config_path;
    uint64_t seed = 0;
};

inline json cmd_degrade(const DegradeArgs& a) {
    RunConfig cfg = a.config_path.empty() ? RunConfig{} : load_config(a.config_path);
    validate_config(cfg);
    json manifest = degrade_tree(a.in_dir, a.out_dir, a.seed, cfg.degrade);
    json rec = run_record(
        "degrade",
        json{{"in", a.in_dir}, {"out", a.out_dir}, {"config", a.config_path}, {"seed", a.seed}},
        json{{"segments", static_cast<int>(manifest["segments"].size())}, {"manifest", "manifest.json"}});
    write_json_file(a.out_dir + "/run.json", rec);
    return rec;
}

// ---- train ----

struct TrainArgs {
    int stage = 1;
    std::string config_path, data_dir, out_ckpt, resume_from;
    bool has_seed = false;
    uint64_t seed = 0;
    bool echo = true;
};

inline json cmd_train(const TrainArgs& a) {
    RunConfig cfg = a.config_path.empty() ? RunConfig{} : load_config(a.config_path);
    if (a.has_seed) cfg.train.seed = a.seed;
    validate_config(cfg);
    TrainResult r = run_training(cfg, a.stage, a.data_dir, a.out_ckpt, a.resume_from, a.echo);
    json results;
    results["steps_run"] = static_cast<int>(r.losses.size());
    results["checkpoint"] = a.out_ckpt;
    if (!r.losses.empty()) results["final_loss"] = r.losses.back();
    json rec = run_record("train",
                          json{{"stage", a.stage},
                               {"config", a.config_path},
                               {"data", a.data_dir},
                               {"out", a.out_ckpt},
                               {"resume_from", a.resume_from},
                               {"seed", cfg.train.seed}},
                          std::move(results));
    write_json_file(a.out_ckpt + ".run.json", rec);
    return rec;
}

// ---- sr ----

struct SrBundle {
    RunConfig cfg;
    int ck_stage = 1;
    DenoiserNet net;
    Codec codec;
    std::unique_ptr<SemanticEncoder> encoder;
    NoiseSchedule sched;
};

inline std::unique_ptr<SrBundle> build_from_checkpoint(const LoadedCheckpoint& lc, bool no_seam, bool no_tsam) {
    auto b = std::make_unique<SrBundle>();
    b->cfg = lc.config();
    b->ck_stage = lc.stage();
    ModelConfig mc = stage_model_config(b->cfg.model, b->ck_stage);
    if (no_seam) mc.semantic.enabled = false;
    if (no_tsam) {
        mc.temporal_enabled = false;
        mc.tsam_enabled = false;
    }
    b->net = DenoiserNet::build(mc, b->cfg.train.seed);
    std::vector<std::string> missing = apply_checkpoint_params(lc, b->net.params, "param/");
    check(missing.empty(),
          "checkpoint lacks parameters for this configuration" + (missing.empty() ? "" : " (first: " + missing[0] + ")"));
    b->codec = Codec::build(b->cfg.model.latent_channels, b->cfg.codec.hidden, b->cfg.train.seed);
    check(apply_checkpoint_params(lc, b->codec.params, "codec/").empty(), "checkpoint lacks codec parameters");
    if (mc.semantic.enabled)
        b->encoder = make_semantic_encoder(mc.semantic.encoder, mc.semantic.patch, mc.semantic.token_dim);
    b->sched = NoiseSchedule::linear(b->cfg.diffusion.timesteps, b->cfg.diffusion.beta_start,
                                     b->cfg.diffusion.beta_end);
    return b;
}

inline json param_count_record(const DenoiserNet& net) {
    json j;
    j["backbone"] = net.params.count_group("backbone");
    j["seam"] = net.params.count_group("seam");
    j["temporal"] = net.params.count_group("temporal");
    j["tsam"] = net.params.count_group("tsam");
    j["total"] = net.params.count_total();
    return j;
}

struct SrArgs {
    std::string in_dir, ckpt_path, out_dir;
    int steps = 0;           // 0 = take from the checkpoint's config
    int segment_frames = 0;  // 0 = take from the checkpoint's config
    uint64_t seed = 0;
    bool no_seam = false;
    bool no_tsam = false;
};

inline json cmd_sr(const SrArgs& a) {
    LoadedCheckpoint lc = load_checkpoint(a.ckpt_path);
    std::unique_ptr<SrBundle> b = build_from_checkpoint(lc, a.no_seam, a.no_tsam);
    int steps = a.steps > 0 ? a.steps : b->cfg.sample.steps;
    int seg_frames = a.segment_frames > 0 ? a.segment_frames : b->cfg.sample.segment_frames;
    ClipList clips = clip_dirs(a.in_dir);
    std::filesystem::create_directories(a.out_dir);
    json outs = json::array();
    for (size_t i = 0; i < clips.entries.size(); ++i) {
        VideoSegment lq = read_video_dir(clips.entries[i].second);
        VideoSegment hq = super_resolve_video(b->net, b->codec, b->encoder.get(), b->sched, lq, steps, seg_frames,
                                              mix_seed(a.seed, static_cast<uint64_t>(i)));
        std::string out = clips.nested ? a.out_dir + "/" + clips.entries[i].first : a.out_dir;
        write_video_dir(out, hq.frames);
        json row;
        row["id"] = clips.entries[i].first;
        row["frames"] = hq.num_frames();
        row["height"] = hq.height();
        row["width"] = hq.width();
        outs.push_back(std::move(row));
    }
    json results;
    results["checkpoint_stage"] = b->ck_stage;
    results["checkpoint_step"] = lc.step();
    results["semantic"] = b->net.cfg.semantic.enabled;
    results["temporal"] = b->net.cfg.temporal_enabled;
    results["tsam"] = b->net.cfg.tsam_enabled;
    results["encoder"] = b->encoder ? json(b->encoder->descriptor()) : json();
    results["param_counts"] = param_count_record(b->net);
    results["clips"] = std::move(outs);
    json rec = run_record("sr",
                          json{{"in", a.in_dir},
                               {"ckpt", a.ckpt_path},
                               {"out", a.out_dir},
                               {"steps", steps},
                               {"segment_frames", seg_frames},
                               {"seed", a.seed},
                               {"no_seam", a.no_seam},
                               {"no_tsam", a.no_tsam}},
                          std::move(results));
    write_json_file(a.out_dir + "/run.json", rec);
    return rec;
}

// ---- eval ----

struct EvalArgs {
    std::string pred_dir, ref_dir, out_dir;
    int profile_row = 0;
};

inline json cmd_eval(const EvalArgs& a) {
    ClipList preds = clip_dirs(a.pred_dir);
    std::filesystem::create_directories(a.out_dir);
    std::ofstream report(a.out_dir + "/report.jsonl", std::ios::trunc);
    check(report.good(), "cannot write " + a.out_dir + "/report.jsonl");
    json rows = json::array();
    for (const auto& [id, path] : preds.entries) {
        VideoSegment pred = read_video_dir(path);
        json row;
        row["id"] = id;
        row["frames"] = pred.num_frames();
        row["profile_row"] = a.profile_row;
        if (pred.num_frames() >= 2) row["flicker"] = flicker_index(pred);
        write_ppm(a.out_dir + "/" + id + "_profile_pred.ppm", temporal_profile(pred, a.profile_row));
        if (!a.ref_dir.empty()) {
            std::string ref_path = preds.nested ? a.ref_dir + "/" + id : a.ref_dir;
            check(std::filesystem::is_directory(ref_path), "eval: no reference clip at " + ref_path);
            VideoSegment ref = read_video_dir(ref_path);
            row["psnr_db"] = psnr_db(pred, ref);
            if (ref.num_frames() >= 2) row["ref_flicker"] = flicker_index(ref);
            write_ppm(a.out_dir + "/" + id + "_profile_ref.ppm", temporal_profile(ref, a.profile_row));
        }
        report << row.dump() << "\n";
        rows.push_back(std::move(row));
    }
    json rec = run_record("eval",
                          json{{"pred", a.pred_dir},
                               {"ref", a.ref_dir},
                               {"out", a.out_dir},
                               {"profile_row", a.profile_row}},
                          json{{"clips", static_cast<int>(rows.size())}, {"rows", rows}});
    write_json_file(a.out_dir + "/run.json", rec);
    return rec;
}

// ---- synth-data ----

struct SynthArgs {
    std::string out_dir;
    int clips = 2, frames = 4, size = 32;
    uint64_t seed = 0;
};

inline json cmd_synth_data(const SynthArgs& a) {
    check(a.clips >= 1 && a.frames >= 1, "synth-data: clips and frames must be positive");
    check(a.size >= scale_factor() && a.size % scale_factor() == 0,
          "synth-data: size must be a positive multiple of " + std::to_string(scale_factor()));
    write_toy_dataset(a.out_dir, a.clips, a.frames, a.size, a.size, a.seed);
    json rec = run_record(
        "synth-data",
        json{{"out", a.out_dir}, {"clips", a.clips}, {"frames", a.frames}, {"size", a.size}, {"seed", a.seed}},
        json{{"hq_dir", "hq"}});
    write_json_file(a.out_dir + "/run.json", rec);
    return rec;
}

// ---- ablate ----

struct AblateArgs {
    std::string config_path, out_dir;
    bool has_seed = false;
    uint64_t seed = 0;
    bool echo = false;
};

struct AblateRowSpec {
    const char* tag;
    bool seam;
    bool temporal;  // temporal transformer and fusion travel together
};

inline const AblateRowSpec* ablate_rows() {
    static const AblateRowSpec rows[4] = {{"a", false, false}, {"b", true, false}, {"c", false, true},
                                          {"d", true, true}};
    return rows;
}

// Runs the four module-toggle configurations end to end on a shared toy
// dataset and reports metrics plus per-group parameter counts per row.
inline json cmd_ablate(const AblateArgs& a) {
    RunConfig base = a.config_path.empty() ? RunConfig{} : load_config(a.config_path);
    if (a.has_seed) base.train.seed = a.seed;
    validate_config(base);
    std::filesystem::create_directories(a.out_dir);

    std::string data_dir = base.ablate.data_dir;
    if (data_dir.empty()) {
        data_dir = a.out_dir + "/data";
        int frames = std::max(base.ablate.eval_frames, base.train.segment_frames_stage2);
        int clips = std::max(base.ablate.eval_clips, 2);
        write_toy_dataset(data_dir, clips, frames, base.ablate.hq_size, base.ablate.hq_size, base.train.seed);
        degrade_tree(data_dir + "/hq", data_dir + "/lq", base.train.seed, base.degrade);
    }
    std::vector<std::string> clip_ids = subdir_names(data_dir + "/hq");
    int eval_clips = std::min<int>(base.ablate.eval_clips, static_cast<int>(clip_ids.size()));
    check(eval_clips >= 1, "ablate: no clips to evaluate");

    std::ofstream report(a.out_dir + "/report.jsonl", std::ios::trunc);
    check(report.good(), "cannot write " + a.out_dir + "/report.jsonl");
    json rows = json::array();
    for (int r = 0; r < 4; ++r) {
        const AblateRowSpec& spec = ablate_rows()[r];
        RunConfig rc = base;
        rc.model.semantic.enabled = spec.seam;
        rc.model.temporal_enabled = spec.temporal;
        rc.model.tsam_enabled = spec.temporal;
        rc.train.steps_stage1 = base.ablate.steps_stage1;
        rc.train.steps_stage2 = base.ablate.steps_stage2;
        rc.sample.steps = base.ablate.sr_steps;
        validate_config(rc);
        std::string rdir = a.out_dir + "/" + spec.tag;
        std::filesystem::create_directories(rdir);
        if (a.echo) std::fprintf(stdout, "ablate row %s: stage 1 (%d steps)\n", spec.tag, rc.train.steps_stage1);
        TrainResult s1 = run_training(rc, 1, data_dir, rdir + "/stage1.ckpt");
        std::string final_ckpt = rdir + "/stage1.ckpt";
        double final_loss = s1.losses.empty() ? 0.0 : s1.losses.back();
        if (spec.temporal) {
            if (a.echo) std::fprintf(stdout, "ablate row %s: stage 2 (%d steps)\n", spec.tag, rc.train.steps_stage2);
            TrainResult s2 = run_training(rc, 2, data_dir, rdir + "/stage2.ckpt", rdir + "/stage1.ckpt");
            final_ckpt = rdir + "/stage2.ckpt";
            final_loss = s2.losses.empty() ? final_loss : s2.losses.back();
        }
        LoadedCheckpoint lc = load_checkpoint(final_ckpt);
        std::unique_ptr<SrBundle> b = build_from_checkpoint(lc, false, false);
        uint64_t row_seed = mix_seed(base.train.seed, 0xAB00u + static_cast<uint64_t>(r));
        double psnr_sum = 0.0, flicker_sum = 0.0;
        int flicker_n = 0;
        for (int ci = 0; ci < eval_clips; ++ci) {
            const std::string& id = clip_ids[static_cast<size_t>(ci)];
            VideoSegment lq = read_video_dir(data_dir + "/lq/" + id);
            VideoSegment ref = read_video_dir(data_dir + "/hq/" + id);
            VideoSegment sr = super_resolve_video(b->net, b->codec, b->encoder.get(), b->sched, lq, rc.sample.steps,
                                                  rc.train.segment_frames_stage2,
                                                  mix_seed(row_seed, static_cast<uint64_t>(ci)));
            write_video_dir(rdir + "/pred/" + id, sr.frames);
            psnr_sum += psnr_db(sr, ref);
            if (sr.num_frames() >= 2) {
                flicker_sum += flicker_index(sr);
                ++flicker_n;
            }
        }
        json row;
        row["row"] = spec.tag;
        row["seam"] = spec.seam;
        row["tsam"] = spec.temporal;
        row["stage2_run"] = spec.temporal;
        row["final_loss"] = final_loss;
        row["psnr_db"] = psnr_sum / eval_clips;
        if (flicker_n > 0) row["flicker"] = flicker_sum / flicker_n;
        row["param_counts"] = param_count_record(b->net);
        report << row.dump() << "\n";
        rows.push_back(std::move(row));
        if (a.echo)
            std::fprintf(stdout, "ablate row %s: psnr %.2f dB\n", spec.tag, rows.back()["psnr_db"].get<double>());
    }
    json rec = run_record("ablate",
                          json{{"config", a.config_path}, {"out", a.out_dir}, {"seed", base.train.seed}},
                          json{{"data_dir", data_dir}, {"rows", rows}});
    write_json_file(a.out_dir + "/run.json", rec);
    return rec;
}

}  // namespace lvsr
