#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowscale/experiment.hpp"

namespace {

using namespace flowscale;

struct CommonOpts {
    std::string spec_path;
    std::string out_dir;
    std::vector<std::uint64_t> seeds;
    std::string preset = "guidance";
};

void add_common(CLI::App* cmd, CommonOpts& opts, const std::string& default_preset) {
    opts.preset = default_preset;
    cmd->add_option("--spec", opts.spec_path, "experiment spec JSON file");
    cmd->add_option("--out", opts.out_dir, "output directory override");
    cmd->add_option("--seed", opts.seeds, "seed list override");
    cmd->add_option("--preset", opts.preset, "named preset when no spec file is given");
}

ExperimentSpec resolve_spec(const CommonOpts& opts) {
    ExperimentSpec spec = opts.spec_path.empty() ? ExperimentSpec::preset(opts.preset)
                                                 : ExperimentSpec::load(opts.spec_path);
    if (!opts.seeds.empty()) spec.seeds = opts.seeds;
    // precedence: --out, then FLOWSCALE_OUT_DIR, then the spec's own directory
    if (!opts.out_dir.empty()) {
        spec.output_dir = opts.out_dir;
    } else if (const char* env = std::getenv("FLOWSCALE_OUT_DIR")) {
        spec.output_dir = env;
    }
    spec.validate();
    return spec;
}

std::vector<double> default_probes(int steps) {
    std::vector<double> ts;
    for (int i = 1; i < steps; ++i) ts.push_back(static_cast<double>(i) / steps);
    return ts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowscale: resolution-extrapolation lab for rectified-flow sampling"};
    app.require_subcommand(1);

    CommonOpts sample_opts, compare_opts, loss_opts, rope_opts, entropy_opts;

    CLI::App* sample = app.add_subcommand("sample", "two-stage guided sampling run");
    add_common(sample, sample_opts, "guidance");

    CLI::App* compare =
        app.add_subcommand("compare-guidance", "paired comparison across guidance modes");
    add_common(compare, compare_opts, "guidance");
    std::vector<std::string> mode_names{"projected_flow", "skip_residual", "sdedit", "none"};
    compare->add_option("--modes", mode_names, "guidance modes to compare");

    CLI::App* loss = app.add_subcommand("loss-curve", "velocity-loss diagnostic curves");
    add_common(loss, loss_opts, "loss_curve");
    int n_samples = 2000;
    loss->add_option("--samples", n_samples, "Monte-Carlo samples per probe");

    CLI::App* rope = app.add_subcommand("rope-audit", "RoPE angle table");
    add_common(rope, rope_opts, "audit");

    CLI::App* entropy = app.add_subcommand("entropy-audit", "attention entropy/mass audit");
    add_common(entropy, entropy_opts, "audit");

    CLI::App* render_cmd = app.add_subcommand("render", "grid file to 8-bit png");
    std::string grid_in, png_out;
    double win_lo = -3.0, win_hi = 3.0;
    render_cmd->add_option("grid", grid_in, "input .grid file")->required();
    render_cmd->add_option("--out", png_out, "output png path")->required();
    render_cmd->add_option("--min", win_lo, "window minimum");
    render_cmd->add_option("--max", win_hi, "window maximum");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sample->parsed()) {
            run_sample(resolve_spec(sample_opts));
        } else if (compare->parsed()) {
            std::vector<GuidanceMode> modes;
            for (const std::string& m : mode_names) modes.push_back(guidance_mode_from_string(m));
            run_guidance_comparison(resolve_spec(compare_opts), modes);
        } else if (loss->parsed()) {
            ExperimentSpec spec = resolve_spec(loss_opts);
            run_loss_curve(spec, default_probes(spec.steps_extra), n_samples);
        } else if (rope->parsed()) {
            run_rope_audit(resolve_spec(rope_opts));
        } else if (entropy->parsed()) {
            run_entropy_audit(resolve_spec(entropy_opts));
        } else if (render_cmd->parsed()) {
            render(grid_in, png_out, win_lo, win_hi);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
