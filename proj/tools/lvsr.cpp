// Command-line front end. Subcommands map one-to-one onto the pipeline
// layer; this file only parses flags, resolves the default seed from
// LVSR_SEED, and maps error kinds to exit codes (2 validation, 3 numeric
// or unexpected).
#include <cstdio>
#include <cstdlib>
#include <string>

#include "CLI11.hpp"
#include "lvsr/pipeline.hpp"

namespace {

uint64_t env_seed() {
    const char* s = std::getenv("LVSR_SEED");
    if (s == nullptr || *s == '\0') return 0;
    char* end = nullptr;
    uint64_t v = std::strtoull(s, &end, 10);
    if (end == nullptr || *end != '\0') {
        std::fprintf(stderr, "error: LVSR_SEED is not a non-negative integer: %s\n", s);
        std::exit(2);
    }
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-diffusion video super-resolution toolkit"};
    app.require_subcommand(1);
    uint64_t default_seed = env_seed();

    lvsr::DegradeArgs dg;
    dg.seed = default_seed;
    CLI::App* c_dg = app.add_subcommand("degrade", "synthesize LQ clips from HQ clips");
    c_dg->add_option("--in", dg.in_dir, "HQ clip directory (or directory of clip directories)")->required();
    c_dg->add_option("--out", dg.out_dir, "output directory for LQ clips")->required();
    c_dg->add_option("--seed", dg.seed, "degradation seed");
    c_dg->add_option("--config", dg.config_path, "config file (JSON)");

    lvsr::TrainArgs tr;
    tr.seed = default_seed;
    CLI::App* c_tr = app.add_subcommand("train", "train the denoiser (stage 1 or 2)");
    c_tr->add_option("--stage", tr.stage, "training stage")->required()->check(CLI::Range(1, 2));
    c_tr->add_option("--config", tr.config_path, "config file (JSON)");
    c_tr->add_option("--data", tr.data_dir, "dataset root containing hq/ and lq/")->required();
    c_tr->add_option("--out", tr.out_ckpt, "output checkpoint path")->required();
    c_tr->add_option("--resume-from", tr.resume_from, "checkpoint to resume or promote from");
    CLI::Option* tr_seed = c_tr->add_option("--seed", tr.seed, "overrides the config seed");
    c_tr->add_flag("--quiet", "suppress per-step console echo");

    lvsr::SrArgs sr;
    sr.seed = default_seed;
    CLI::App* c_sr = app.add_subcommand("sr", "super-resolve LQ clips with a trained checkpoint");
    c_sr->add_option("--in", sr.in_dir, "LQ clip directory (or directory of clip directories)")->required();
    c_sr->add_option("--ckpt", sr.ckpt_path, "checkpoint file")->required();
    c_sr->add_option("--out", sr.out_dir, "output directory")->required();
    c_sr->add_option("--steps", sr.steps, "diffusion steps (default: from checkpoint config)");
    c_sr->add_option("--segment-frames", sr.segment_frames, "segment length (default: from checkpoint config)");
    c_sr->add_option("--seed", sr.seed, "sampling seed");
    c_sr->add_flag("--no-seam", sr.no_seam, "disable semantic cross-attention");
    c_sr->add_flag("--no-tsam", sr.no_tsam, "disable the temporal transformer and fusion");

    lvsr::EvalArgs ev;
    CLI::App* c_ev = app.add_subcommand("eval", "report PSNR / flicker / temporal profiles");
    c_ev->add_option("--pred", ev.pred_dir, "predicted clip directory")->required();
    c_ev->add_option("--ref", ev.ref_dir, "reference clip directory (optional)");
    c_ev->add_option("--profile-row", ev.profile_row, "pixel row for the temporal profile");
    c_ev->add_option("--out", ev.out_dir, "output directory for the report and profiles")->required();

    lvsr::AblateArgs ab;
    ab.seed = default_seed;
    CLI::App* c_ab = app.add_subcommand("ablate", "run the four module-toggle configurations end to end");
    c_ab->add_option("--config", ab.config_path, "config file (JSON)");
    c_ab->add_option("--out", ab.out_dir, "output directory")->required();
    CLI::Option* ab_seed = c_ab->add_option("--seed", ab.seed, "overrides the config seed");
    c_ab->add_flag("--verbose", ab.echo, "echo per-row progress");

    lvsr::SynthArgs sy;
    sy.seed = default_seed;
    CLI::App* c_sy = app.add_subcommand("synth-data", "write a deterministic toy HQ dataset");
    c_sy->add_option("--out", sy.out_dir, "output dataset root (clips go under hq/)")->required();
    c_sy->add_option("--clips", sy.clips, "number of clips");
    c_sy->add_option("--frames", sy.frames, "frames per clip");
    c_sy->add_option("--size", sy.size, "square HQ frame edge");
    c_sy->add_option("--seed", sy.seed, "content seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (c_dg->parsed()) lvsr::cmd_degrade(dg);
        if (c_tr->parsed()) {
            tr.has_seed = tr_seed->count() > 0;
            tr.echo = c_tr->count("--quiet") == 0;
            lvsr::cmd_train(tr);
        }
        if (c_sr->parsed()) lvsr::cmd_sr(sr);
        if (c_ev->parsed()) lvsr::cmd_eval(ev);
        if (c_ab->parsed()) {
            ab.has_seed = ab_seed->count() > 0;
            lvsr::cmd_ablate(ab);
        }
        if (c_sy->parsed()) lvsr::cmd_synth_data(sy);
    } catch (const lvsr::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.kind == lvsr::Error::Kind::validation ? 2 : 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
