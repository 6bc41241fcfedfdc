// Run configuration: versioned JSON, strictly validated. Unknown keys are
// errors so a typo in an experiment file fails loudly instead of silently
// falling back to a default.
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lvsr/tensor.hpp"

namespace lvsr {

using nlohmann::json;

namespace cfgdetail {

inline void expect_object(const json& j, const std::string& where) {
    check(j.is_object(), "config: '" + where + "' must be an object");
}

inline void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        check(ok, "config: unknown key '" + it.key() + "' in '" + where + "'");
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(Error::Kind::validation, std::string("config: bad value type for '") + key + "'");
    }
}

inline std::vector<int> get_int_list(const json& j, const char* key, std::vector<int> fallback) {
    if (!j.contains(key)) return fallback;
    const json& a = j.at(key);
    check(a.is_array(), std::string("config: '") + key + "' must be an array");
    std::vector<int> out;
    for (const json& v : a) {
        check(v.is_number_integer(), std::string("config: '") + key + "' must hold integers");
        out.push_back(v.get<int>());
    }
    return out;
}

}  // namespace cfgdetail

struct SemanticConfig {
    bool enabled = true;
    bool self_attention = true;
    std::string encoder = "stub";
    int token_dim = 8;   // width of each semantic token
    int patch = 4;       // pooling cell size on the LQ frame
};

struct ModelConfig {
    int latent_channels = 4;
    int base_channels = 32;
    std::vector<int> channel_mult = {1, 2};
    int res_blocks = 1;
    std::vector<int> attention_levels = {1};
    int heads = 1;
    int time_embed_dim = 64;
    int norm_groups = 8;
    double norm_eps = 1e-5;
    int ffn_expansion = 4;
    SemanticConfig semantic;
    bool temporal_enabled = true;
    bool tsam_enabled = true;
    int max_frames = 16;
};

struct DiffusionConfig {
    int timesteps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
};

struct CodecTrainConfig {
    int hidden = 16;
    int epochs = 500;
    int batch = 2;
    double lr = 3e-3;
    int crop = 32;
};

struct DegradeConfig {
    double blur_sigma_min = 0.2, blur_sigma_max = 2.0;
    double noise_std_min = 0.0, noise_std_max = 0.05;
    double quality_min = 60.0, quality_max = 95.0;
    bool blur_enabled = true;
    bool noise_enabled = true;
    bool compress_enabled = true;
};

struct TrainConfig {
    int batch_size = 3;
    int segment_frames_stage1 = 1;
    int segment_frames_stage2 = 4;
    int crop = 32;  // HQ crop edge; the LQ crop is crop/4
    double lr_stage1 = 1e-4;
    double lr_stage2 = 5e-5;
    int steps_stage1 = 2000;
    int steps_stage2 = 200;
    double grad_clip = 1.0;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
    int log_every = 50;
    int checkpoint_every = 0;  // 0 = final only
    uint64_t seed = 1234;
};

struct SampleConfig {
    int steps = 50;
    int segment_frames = 4;
};

struct AblateConfig {
    std::string data_dir;  // empty = synthesize a toy set under the output dir
    int steps_stage1 = 120;
    int steps_stage2 = 60;
    int sr_steps = 10;
    int eval_clips = 2;
    int eval_frames = 4;
    int hq_size = 32;
    int profile_row = 8;
};

struct RunConfig {
    static constexpr int kSchemaVersion = 1;
    ModelConfig model;
    DiffusionConfig diffusion;
    CodecTrainConfig codec;
    DegradeConfig degrade;
    TrainConfig train;
    SampleConfig sample;
    AblateConfig ablate;
};

inline void validate_config(const RunConfig& c) {
    const ModelConfig& m = c.model;
    check(m.latent_channels >= 1 && m.base_channels >= 1, "config: channel counts must be positive");
    check(!m.channel_mult.empty(), "config: channel_mult must be non-empty");
    for (int v : m.channel_mult) check(v >= 1, "config: channel_mult entries must be positive");
    check(m.res_blocks >= 1, "config: res_blocks must be positive");
    int levels = static_cast<int>(m.channel_mult.size());
    for (int l : m.attention_levels) {
        check(l >= 0 && l < levels, "config: attention level out of range");
        check((m.base_channels * m.channel_mult[static_cast<size_t>(l)]) % 2 == 0,
              "config: channels must be even at attention levels");
    }
    check(m.heads >= 1, "config: heads must be positive");
    check(m.time_embed_dim >= 2 && m.time_embed_dim % 2 == 0, "config: time_embed_dim must be even and >= 2");
    check(m.norm_groups >= 1, "config: norm_groups must be positive");
    check(m.norm_eps > 0, "config: norm_eps must be positive");
    check(m.ffn_expansion >= 1, "config: ffn_expansion must be positive");
    check(m.max_frames >= 1, "config: max_frames must be positive");
    check(m.semantic.token_dim >= 1 && m.semantic.patch >= 1, "config: semantic dims must be positive");
    check(c.diffusion.timesteps >= 1, "config: timesteps must be positive");
    check(c.diffusion.beta_start > 0 && c.diffusion.beta_start <= c.diffusion.beta_end && c.diffusion.beta_end < 1,
          "config: need 0 < beta_start <= beta_end < 1");
    const DegradeConfig& d = c.degrade;
    check(d.blur_sigma_min <= d.blur_sigma_max && d.blur_sigma_min > 0, "config: bad blur sigma range");
    check(d.noise_std_min <= d.noise_std_max && d.noise_std_min >= 0, "config: bad noise std range");
    check(d.quality_min <= d.quality_max && d.quality_min >= 1 && d.quality_max <= 100, "config: bad quality range");
    const TrainConfig& t = c.train;
    check(t.batch_size >= 1 && t.steps_stage1 >= 1 && t.steps_stage2 >= 0, "config: bad train sizes");
    check(t.segment_frames_stage1 >= 1 && t.segment_frames_stage2 >= 1, "config: segment frames must be positive");
    check(t.segment_frames_stage2 <= m.max_frames, "config: stage-2 segment longer than max_frames");
    check(t.crop >= 4 && t.crop % 4 == 0, "config: crop must be a positive multiple of 4");
    check(t.lr_stage1 > 0 && t.lr_stage2 > 0, "config: learning rates must be positive");
    if (m.semantic.enabled)
        check((t.crop / 4) % m.semantic.patch == 0, "config: LQ crop (crop/4) must be divisible by semantic patch");
    check(c.sample.steps >= 1 && c.sample.steps <= c.diffusion.timesteps,
          "config: sample steps must lie in [1, timesteps]");
    check(c.sample.segment_frames >= 1 && c.sample.segment_frames <= m.max_frames,
          "config: sample segment_frames must lie in [1, max_frames]");
    check(c.codec.hidden >= 1 && c.codec.epochs >= 1 && c.codec.batch >= 1 && c.codec.lr > 0 && c.codec.crop >= 8,
          "config: bad codec training values");
    check(c.codec.crop % 4 == 0, "config: codec crop must be a multiple of 4");
}

inline RunConfig config_from_json(const json& j) {
    using namespace cfgdetail;
    expect_object(j, "<root>");
    reject_unknown(j, "<root>",
                   {"schema_version", "model", "diffusion", "codec", "degrade", "train", "sample", "ablate"});
    check(j.contains("schema_version"), "config: missing schema_version");
    int ver = j.at("schema_version").get<int>();
    check(ver == RunConfig::kSchemaVersion,
          "config: unsupported schema_version " + std::to_string(ver) + " (expected " +
              std::to_string(RunConfig::kSchemaVersion) + ")");
    RunConfig c;
    if (j.contains("model")) {
        const json& m = j.at("model");
        expect_object(m, "model");
        reject_unknown(m, "model",
                       {"latent_channels", "base_channels", "channel_mult", "res_blocks", "attention_levels", "heads",
                        "time_embed_dim", "norm_groups", "norm_eps", "ffn_expansion", "semantic", "temporal_enabled",
                        "tsam_enabled", "max_frames"});
        c.model.latent_channels = get_or(m, "latent_channels", c.model.latent_channels);
        c.model.base_channels = get_or(m, "base_channels", c.model.base_channels);
        c.model.channel_mult = get_int_list(m, "channel_mult", c.model.channel_mult);
        c.model.res_blocks = get_or(m, "res_blocks", c.model.res_blocks);
        c.model.attention_levels = get_int_list(m, "attention_levels", c.model.attention_levels);
        c.model.heads = get_or(m, "heads", c.model.heads);
        c.model.time_embed_dim = get_or(m, "time_embed_dim", c.model.time_embed_dim);
        c.model.norm_groups = get_or(m, "norm_groups", c.model.norm_groups);
        c.model.norm_eps = get_or(m, "norm_eps", c.model.norm_eps);
        c.model.ffn_expansion = get_or(m, "ffn_expansion", c.model.ffn_expansion);
        c.model.temporal_enabled = get_or(m, "temporal_enabled", c.model.temporal_enabled);
        c.model.tsam_enabled = get_or(m, "tsam_enabled", c.model.tsam_enabled);
        c.model.max_frames = get_or(m, "max_frames", c.model.max_frames);
        if (m.contains("semantic")) {
            const json& s = m.at("semantic");
            expect_object(s, "model.semantic");
            reject_unknown(s, "model.semantic", {"enabled", "self_attention", "encoder", "token_dim", "patch"});
            c.model.semantic.enabled = get_or(s, "enabled", c.model.semantic.enabled);
            c.model.semantic.self_attention = get_or(s, "self_attention", c.model.semantic.self_attention);
            c.model.semantic.encoder = get_or(s, "encoder", c.model.semantic.encoder);
            c.model.semantic.token_dim = get_or(s, "token_dim", c.model.semantic.token_dim);
            c.model.semantic.patch = get_or(s, "patch", c.model.semantic.patch);
        }
    }
    if (j.contains("diffusion")) {
        const json& d = j.at("diffusion");
        expect_object(d, "diffusion");
        reject_unknown(d, "diffusion", {"timesteps", "beta_start", "beta_end"});
        c.diffusion.timesteps = get_or(d, "timesteps", c.diffusion.timesteps);
        c.diffusion.beta_start = get_or(d, "beta_start", c.diffusion.beta_start);
        c.diffusion.beta_end = get_or(d, "beta_end", c.diffusion.beta_end);
    }
    if (j.contains("codec")) {
        const json& k = j.at("codec");
        expect_object(k, "codec");
        reject_unknown(k, "codec", {"hidden", "epochs", "batch", "lr", "crop"});
        c.codec.hidden = get_or(k, "hidden", c.codec.hidden);
        c.codec.epochs = get_or(k, "epochs", c.codec.epochs);
        c.codec.batch = get_or(k, "batch", c.codec.batch);
        c.codec.lr = get_or(k, "lr", c.codec.lr);
        c.codec.crop = get_or(k, "crop", c.codec.crop);
    }
    if (j.contains("degrade")) {
        const json& d = j.at("degrade");
        expect_object(d, "degrade");
        reject_unknown(d, "degrade",
                       {"blur_sigma_min", "blur_sigma_max", "noise_std_min", "noise_std_max", "quality_min",
                        "quality_max", "blur_enabled", "noise_enabled", "compress_enabled"});
        c.degrade.blur_sigma_min = get_or(d, "blur_sigma_min", c.degrade.blur_sigma_min);
        c.degrade.blur_sigma_max = get_or(d, "blur_sigma_max", c.degrade.blur_sigma_max);
        c.degrade.noise_std_min = get_or(d, "noise_std_min", c.degrade.noise_std_min);
        c.degrade.noise_std_max = get_or(d, "noise_std_max", c.degrade.noise_std_max);
        c.degrade.quality_min = get_or(d, "quality_min", c.degrade.quality_min);
        c.degrade.quality_max = get_or(d, "quality_max", c.degrade.quality_max);
        c.degrade.blur_enabled = get_or(d, "blur_enabled", c.degrade.blur_enabled);
        c.degrade.noise_enabled = get_or(d, "noise_enabled", c.degrade.noise_enabled);
        c.degrade.compress_enabled = get_or(d, "compress_enabled", c.degrade.compress_enabled);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        expect_object(t, "train");
        reject_unknown(t, "train",
                       {"batch_size", "segment_frames_stage1", "segment_frames_stage2", "crop", "lr_stage1",
                        "lr_stage2", "steps_stage1", "steps_stage2", "grad_clip", "adam_beta1", "adam_beta2",
                        "adam_eps", "log_every", "checkpoint_every", "seed"});
        c.train.batch_size = get_or(t, "batch_size", c.train.batch_size);
        c.train.segment_frames_stage1 = get_or(t, "segment_frames_stage1", c.train.segment_frames_stage1);
        c.train.segment_frames_stage2 = get_or(t, "segment_frames_stage2", c.train.segment_frames_stage2);
        c.train.crop = get_or(t, "crop", c.train.crop);
        c.train.lr_stage1 = get_or(t, "lr_stage1", c.train.lr_stage1);
        c.train.lr_stage2 = get_or(t, "lr_stage2", c.train.lr_stage2);
        c.train.steps_stage1 = get_or(t, "steps_stage1", c.train.steps_stage1);
        c.train.steps_stage2 = get_or(t, "steps_stage2", c.train.steps_stage2);
        c.train.grad_clip = get_or(t, "grad_clip", c.train.grad_clip);
        c.train.adam_beta1 = get_or(t, "adam_beta1", c.train.adam_beta1);
        c.train.adam_beta2 = get_or(t, "adam_beta2", c.train.adam_beta2);
        c.train.adam_eps = get_or(t, "adam_eps", c.train.adam_eps);
        c.train.log_every = get_or(t, "log_every", c.train.log_every);
        c.train.checkpoint_every = get_or(t, "checkpoint_every", c.train.checkpoint_every);
        c.train.seed = get_or(t, "seed", c.train.seed);
    }
    if (j.contains("sample")) {
        const json& s = j.at("sample");
        expect_object(s, "sample");
        reject_unknown(s, "sample", {"steps", "segment_frames"});
        c.sample.steps = get_or(s, "steps", c.sample.steps);
        c.sample.segment_frames = get_or(s, "segment_frames", c.sample.segment_frames);
    }
    if (j.contains("ablate")) {
        const json& a = j.at("ablate");
        expect_object(a, "ablate");
        reject_unknown(a, "ablate",
                       {"data_dir", "steps_stage1", "steps_stage2", "sr_steps", "eval_clips", "eval_frames", "hq_size",
                        "profile_row"});
        c.ablate.data_dir = get_or(a, "data_dir", c.ablate.data_dir);
        c.ablate.steps_stage1 = get_or(a, "steps_stage1", c.ablate.steps_stage1);
        c.ablate.steps_stage2 = get_or(a, "steps_stage2", c.ablate.steps_stage2);
        c.ablate.sr_steps = get_or(a, "sr_steps", c.ablate.sr_steps);
        c.ablate.eval_clips = get_or(a, "eval_clips", c.ablate.eval_clips);
        c.ablate.eval_frames = get_or(a, "eval_frames", c.ablate.eval_frames);
        c.ablate.hq_size = get_or(a, "hq_size", c.ablate.hq_size);
        c.ablate.profile_row = get_or(a, "profile_row", c.ablate.profile_row);
    }
    validate_config(c);
    return c;
}

inline json config_to_json(const RunConfig& c) {
    json j;
    j["schema_version"] = RunConfig::kSchemaVersion;
    j["model"] = {{"latent_channels", c.model.latent_channels},
                  {"base_channels", c.model.base_channels},
                  {"channel_mult", c.model.channel_mult},
                  {"res_blocks", c.model.res_blocks},
                  {"attention_levels", c.model.attention_levels},
                  {"heads", c.model.heads},
                  {"time_embed_dim", c.model.time_embed_dim},
                  {"norm_groups", c.model.norm_groups},
                  {"norm_eps", c.model.norm_eps},
                  {"ffn_expansion", c.model.ffn_expansion},
                  {"semantic",
                   {{"enabled", c.model.semantic.enabled},
                    {"self_attention", c.model.semantic.self_attention},
                    {"encoder", c.model.semantic.encoder},
                    {"token_dim", c.model.semantic.token_dim},
                    {"patch", c.model.semantic.patch}}},
                  {"temporal_enabled", c.model.temporal_enabled},
                  {"tsam_enabled", c.model.tsam_enabled},
                  {"max_frames", c.model.max_frames}};
    j["diffusion"] = {{"timesteps", c.diffusion.timesteps},
                      {"beta_start", c.diffusion.beta_start},
                      {"beta_end", c.diffusion.beta_end}};
    j["codec"] = {{"hidden", c.codec.hidden},
                  {"epochs", c.codec.epochs},
                  {"batch", c.codec.batch},
                  {"lr", c.codec.lr},
                  {"crop", c.codec.crop}};
    j["degrade"] = {{"blur_sigma_min", c.degrade.blur_sigma_min}, {"blur_sigma_max", c.degrade.blur_sigma_max},
                    {"noise_std_min", c.degrade.noise_std_min},   {"noise_std_max", c.degrade.noise_std_max},
                    {"quality_min", c.degrade.quality_min},       {"quality_max", c.degrade.quality_max},
                    {"blur_enabled", c.degrade.blur_enabled},     {"noise_enabled", c.degrade.noise_enabled},
                    {"compress_enabled", c.degrade.compress_enabled}};
    j["train"] = {{"batch_size", c.train.batch_size},
                  {"segment_frames_stage1", c.train.segment_frames_stage1},
                  {"segment_frames_stage2", c.train.segment_frames_stage2},
                  {"crop", c.train.crop},
                  {"lr_stage1", c.train.lr_stage1},
                  {"lr_stage2", c.train.lr_stage2},
                  {"steps_stage1", c.train.steps_stage1},
                  {"steps_stage2", c.train.steps_stage2},
                  {"grad_clip", c.train.grad_clip},
                  {"adam_beta1", c.train.adam_beta1},
                  {"adam_beta2", c.train.adam_beta2},
                  {"adam_eps", c.train.adam_eps},
                  {"log_every", c.train.log_every},
                  {"checkpoint_every", c.train.checkpoint_every},
                  {"seed", c.train.seed}};
    j["sample"] = {{"steps", c.sample.steps}, {"segment_frames", c.sample.segment_frames}};
    j["ablate"] = {{"data_dir", c.ablate.data_dir},     {"steps_stage1", c.ablate.steps_stage1},
                   {"steps_stage2", c.ablate.steps_stage2}, {"sr_steps", c.ablate.sr_steps},
                   {"eval_clips", c.ablate.eval_clips}, {"eval_frames", c.ablate.eval_frames},
                   {"hq_size", c.ablate.hq_size},       {"profile_row", c.ablate.profile_row}};
    return j;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    check(static_cast<bool>(is), "config: cannot open: " + path);
    json j = json::parse(is, nullptr, false);
    check(!j.is_discarded(), "config: invalid JSON in " + path);
    return config_from_json(j);
}

}  // namespace lvsr
