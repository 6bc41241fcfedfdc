// Two-stage diffusion training. Stage 1 fits the spatial backbone and
// semantic cross-attention on single frames with the temporal modules
// absent; stage 2 freezes everything from stage 1 and fits only the
// temporal transformer and fusion blocks on short segments. The codec is
// pre-trained once and frozen throughout.
#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "lvsr/codec.hpp"
#include "lvsr/config.hpp"
#include "lvsr/container.hpp"
#include "lvsr/dataset.hpp"
#include "lvsr/denoiser.hpp"
#include "lvsr/optimizer.hpp"
#include "lvsr/resample.hpp"
#include "lvsr/schedule.hpp"
#include "lvsr/seam.hpp"

namespace lvsr {

// stage 1 runs with the temporal modules absent, not merely zeroed, so
// per-stage parameter counts are honest
inline ModelConfig stage_model_config(ModelConfig m, int stage) {
    check(stage == 1 || stage == 2, "training: stage must be 1 or 2, got " + std::to_string(stage));
    if (stage == 1) {
        m.temporal_enabled = false;
        m.tsam_enabled = false;
    }
    return m;
}

inline std::vector<std::string> active_groups(const ModelConfig& m, int stage) {
    std::vector<std::string> g;
    if (stage == 1) {
        g.push_back("backbone");
        if (m.semantic.enabled) g.push_back("seam");
        return g;
    }
    if (m.temporal_enabled) g.push_back("temporal");
    if (m.tsam_enabled) g.push_back("tsam");
    check(!g.empty(), "training: stage 2 has nothing to train (temporal and fusion both disabled)");
    return g;
}

struct Trainer {
    RunConfig cfg;
    int stage = 1;
    NoiseSchedule sched;
    DenoiserNet net;
    Codec codec;
    std::unique_ptr<SemanticEncoder> encoder;
    Adam opt;
    int64_t step = 0;  // completed optimizer updates

    void init(const RunConfig& rc, int stg) {
        cfg = rc;
        stage = stg;
        validate_config(cfg);
        sched = NoiseSchedule::linear(cfg.diffusion.timesteps, cfg.diffusion.beta_start, cfg.diffusion.beta_end);
        net = DenoiserNet::build(stage_model_config(cfg.model, stage), cfg.train.seed);
        if (stage == 1)
            check(net.params.group("temporal").empty() && net.params.group("tsam").empty(),
                  "training: temporal parameters present in a stage-1 build");
        codec = Codec::build(cfg.model.latent_channels, cfg.codec.hidden, cfg.train.seed);
        if (cfg.model.semantic.enabled)
            encoder = make_semantic_encoder(cfg.model.semantic.encoder, cfg.model.semantic.patch,
                                            cfg.model.semantic.token_dim);
        opt = Adam{};
        opt.lr = stage == 1 ? cfg.train.lr_stage1 : cfg.train.lr_stage2;
        opt.beta1 = cfg.train.adam_beta1;
        opt.beta2 = cfg.train.adam_beta2;
        opt.eps = cfg.train.adam_eps;
        step = 0;
    }

    int segment_frames() const { return stage == 1 ? cfg.train.segment_frames_stage1 : cfg.train.segment_frames_stage2; }
    int total_steps() const { return stage == 1 ? cfg.train.steps_stage1 : cfg.train.steps_stage2; }

    std::vector<Parameter*> active_params() {
        std::vector<Parameter*> out;
        for (const std::string& g : active_groups(net.cfg, stage))
            for (Parameter* p : net.params.group(g)) out.push_back(p);
        return out;
    }

    // denoising loss for one example at a fixed (t, eps); shared by the
    // training step and tests
    Var example_loss(Tape& tp, const TrainExample& ex, int t, const Tensor& eps) {
        Tensor z0 = codec.encode(ex.hq);
        Tensor up = resize_bicubic_video(ex.lq, ex.hq.dim(2), ex.hq.dim(3));
        Tensor lr = codec.encode(up);
        Tensor zt = sched.q_sample(z0, eps, t);
        Tensor sem_tokens;
        const Tensor* sem = nullptr;
        if (encoder) {
            VideoSegment seg;
            seg.frames = ex.lq;
            seg.source_id = "train";
            sem_tokens = encoder->encode(seg).tokens;
            sem = &sem_tokens;
        }
        Var eps_hat = net.forward(tp, tp.input(zt), tp.input(lr), sem, t);
        return tp.mse(eps_hat, tp.input(eps));
    }

    // one optimizer update; the RNG is derived from (seed, step) alone so
    // any resumed run continues the exact trajectory. Per batch item the
    // draw order is fixed: crop sample, then t, then eps.
    double train_step(const PairedDataset& data) {
        Rng rng(mix_seed(mix_seed(cfg.train.seed, 0x57E9), static_cast<uint64_t>(step)));
        Tape tp;
        int frames = segment_frames();
        Var total{};
        for (int b = 0; b < cfg.train.batch_size; ++b) {
            TrainExample ex = data.sample(rng, frames, cfg.train.crop);
            int t = rng.below(sched.T);
            Tensor eps = rng.normal_tensor({frames, cfg.model.latent_channels, cfg.train.crop / scale_factor(),
                                            cfg.train.crop / scale_factor()});
            Var l = example_loss(tp, ex, t, eps);
            total = b == 0 ? l : tp.add(total, l);
        }
        Var loss = tp.scale(total, 1.0 / cfg.train.batch_size);
        net.params.zero_grads();
        tp.backward(loss);
        opt.step(active_params(), cfg.train.grad_clip);
        ++step;
        return tp.val(loss).data[0];
    }
};

// ---- checkpoints ----

inline void save_checkpoint(const std::string& path, const Trainer& tr) {
    Container c;
    c.meta["format"] = "lvsr-checkpoint";
    c.meta["schema_version"] = RunConfig::kSchemaVersion;
    c.meta["stage"] = tr.stage;
    c.meta["step"] = tr.step;
    c.meta["seed"] = tr.cfg.train.seed;
    c.meta["adam_t"] = tr.opt.t;
    c.meta["config"] = config_to_json(tr.cfg);
    if (tr.encoder) c.meta["semantic_encoder"] = tr.encoder->descriptor();
    for (const Parameter* p : tr.net.params.all()) c.add("param/" + p->name, p->value);
    for (const Parameter* p : tr.codec.params.all()) c.add("codec/" + p->name, p->value);
    for (const auto& [name, t] : tr.opt.m) c.add("adam_m/" + name, t);
    for (const auto& [name, t] : tr.opt.v) c.add("adam_v/" + name, t);
    c.save(path);
}

struct LoadedCheckpoint {
    Container box;

    int stage() const { return box.meta.at("stage").get<int>(); }
    int64_t step() const { return box.meta.at("step").get<int64_t>(); }
    RunConfig config() const { return config_from_json(box.meta.at("config")); }
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
    LoadedCheckpoint lc{Container::load(path)};
    check(lc.box.meta.value("format", std::string()) == "lvsr-checkpoint",
          "checkpoint: " + path + " is not a checkpoint container");
    check(lc.box.meta.value("schema_version", -1) == RunConfig::kSchemaVersion,
          "checkpoint: unsupported schema version in " + path);
    int s = lc.box.meta.value("stage", 0);
    check(s == 1 || s == 2, "checkpoint: bad stage tag in " + path);
    check(lc.box.meta.contains("step") && lc.box.meta.contains("config"), "checkpoint: incomplete metadata in " + path);
    return lc;
}

// copies blobs into matching parameters by name; returns the names that
// had no blob (the caller decides whether that is legal)
inline std::vector<std::string> apply_checkpoint_params(const LoadedCheckpoint& lc, ParamSet& ps,
                                                        const std::string& prefix) {
    std::vector<std::string> missing;
    for (Parameter* p : ps.all()) {
        const Tensor* t = lc.box.find(prefix + p->name);
        if (t == nullptr) {
            missing.push_back(p->name);
            continue;
        }
        check(t->shape == p->value.shape, "checkpoint: shape mismatch for " + p->name + ": stored " +
                                              shape_str(t->shape) + ", model " + shape_str(p->value.shape));
        p->value = *t;
    }
    return missing;
}

// Resume semantics: same-stage checkpoints continue (optimizer state and
// step counter restored); a stage-1 checkpoint feeds a stage-2 run with a
// fresh optimizer over the new modules only. Anything else is an error.
inline void resume_trainer(Trainer& tr, const LoadedCheckpoint& lc) {
    int ck_stage = lc.stage();
    if (tr.stage == 1)
        check(ck_stage == 1, "training: a stage-1 run cannot resume from a stage-2 checkpoint");
    json ck_cfg = config_to_json(lc.config());
    json run_cfg = config_to_json(tr.cfg);
    check(ck_cfg["model"] == run_cfg["model"] && ck_cfg["diffusion"] == run_cfg["diffusion"],
          "training: checkpoint model/diffusion config differs from the run config");
    std::vector<std::string> missing = apply_checkpoint_params(lc, tr.net.params, "param/");
    for (const std::string& name : missing) {
        const Parameter* p = tr.net.params.find(name);
        bool stage2_new = p->group == "temporal" || p->group == "tsam";
        check(tr.stage == 2 && ck_stage == 1 && stage2_new, "checkpoint: missing blob for parameter " + name);
    }
    std::vector<std::string> missing_codec = apply_checkpoint_params(lc, tr.codec.params, "codec/");
    check(missing_codec.empty(), "checkpoint: missing codec blobs");
    if (ck_stage == tr.stage) {
        tr.opt.t = lc.box.meta.value("adam_t", static_cast<int64_t>(0));
        for (Parameter* p : tr.active_params()) {
            const Tensor* m = lc.box.find("adam_m/" + p->name);
            const Tensor* v = lc.box.find("adam_v/" + p->name);
            if (m != nullptr) tr.opt.m[p->name] = *m;
            if (v != nullptr) tr.opt.v[p->name] = *v;
        }
        tr.step = lc.step();
    }
}

// ---- orchestration ----

struct TrainResult {
    std::string checkpoint_path;
    std::vector<double> losses;  // one per step executed in this call
};

inline double wall_ms_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline void write_loss_line(std::ofstream& log, int64_t step, const std::string& stage, double loss, double lr,
                            double wall_ms) {
    json rec;
    rec["step"] = step;
    rec["stage"] = stage;
    rec["loss"] = loss;
    rec["lr"] = lr;
    rec["wall_ms"] = wall_ms;
    log << rec.dump() << "\n";
}

// Full stage run: optional resume, codec pre-training on cold start,
// per-step loss log at <out_ckpt>.log, checkpoint at <out_ckpt>.
inline TrainResult run_training(const RunConfig& cfg, int stage, const std::string& data_dir,
                                const std::string& out_ckpt, const std::string& resume_from = "",
                                bool echo = false) {
    Trainer tr;
    tr.init(cfg, stage);
    bool continuing = false;
    if (!resume_from.empty()) {
        LoadedCheckpoint lc = load_checkpoint(resume_from);
        resume_trainer(tr, lc);
        continuing = lc.stage() == stage;
    } else {
        check(stage == 1, "training: stage 2 requires --resume-from with a stage-1 checkpoint");
    }
    PairedDataset data = PairedDataset::load(data_dir);
    check(data.min_clip_frames() >= tr.segment_frames(),
          "training: clips have fewer than " + std::to_string(tr.segment_frames()) + " frames");

    if (resume_from.empty()) {
        std::vector<Tensor> frames;
        for (const ClipPair& clip : data.clips) {
            int L = clip.hq.num_frames(), H = clip.hq.height(), W = clip.hq.width();
            int64_t per = static_cast<int64_t>(3) * H * W;
            for (int l = 0; l < L; ++l) {
                Tensor f({3, H, W});
                std::copy(clip.hq.frames.data.begin() + l * per, clip.hq.frames.data.begin() + (l + 1) * per,
                          f.data.begin());
                frames.push_back(std::move(f));
            }
        }
        auto t0 = std::chrono::steady_clock::now();
        std::vector<double> epoch_losses = pretrain_codec(tr.codec, frames, cfg.codec, cfg.train.seed);
        std::ofstream clog(out_ckpt + ".codec.log", std::ios::trunc);
        check(clog.good(), "training: cannot write " + out_ckpt + ".codec.log");
        for (size_t e = 0; e < epoch_losses.size(); ++e)
            write_loss_line(clog, static_cast<int64_t>(e), "codec", epoch_losses[e], cfg.codec.lr, wall_ms_since(t0));
    }

    int total = tr.total_steps();
    check(tr.step <= total, "training: checkpoint is already past " + std::to_string(total) + " steps");
    std::ofstream log(out_ckpt + ".log", continuing ? std::ios::app : std::ios::trunc);
    check(log.good(), "training: cannot write " + out_ckpt + ".log");
    std::string stage_tag = "stage" + std::to_string(stage);

    TrainResult res;
    res.checkpoint_path = out_ckpt;
    while (tr.step < total) {
        auto t0 = std::chrono::steady_clock::now();
        int64_t this_step = tr.step;
        double loss = tr.train_step(data);
        double ms = wall_ms_since(t0);
        write_loss_line(log, this_step, stage_tag, loss, tr.opt.lr, ms);
        res.losses.push_back(loss);
        if (echo && (this_step % cfg.train.log_every == 0 || tr.step == total))
            std::fprintf(stdout, "%s step %lld loss %.6f\n", stage_tag.c_str(), static_cast<long long>(this_step),
                         loss);
        if (cfg.train.checkpoint_every > 0 && tr.step < total && tr.step % cfg.train.checkpoint_every == 0)
            save_checkpoint(out_ckpt, tr);
    }
    save_checkpoint(out_ckpt, tr);
    return res;
}

}  // namespace lvsr
