#include "flowscale/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "flowscale/gridio.hpp"
#include "flowscale/mmdit.hpp"
#include "flowscale/rng.hpp"
#include "json.hpp"

namespace flowscale {

namespace {

constexpr int kAuditTextLen = 32;

std::string filter_kind_name(FilterKind k) {
    return k == FilterKind::ideal ? "ideal" : "raised_cosine";
}

FilterKind filter_kind_from(const std::string& s) {
    if (s == "ideal") return FilterKind::ideal;
    if (s == "raised_cosine") return FilterKind::raised_cosine;
    throw std::invalid_argument("unknown filter kind: " + s);
}

nlohmann::json guidance_to_json(const GuidanceConfig& g) {
    nlohmann::json j;
    j["mode"] = to_string(g.mode);
    j["alpha_schedule"] =
        g.alpha_schedule == AlphaSchedule::cosine_decay ? "cosine_decay" : "constant";
    j["alpha_value"] = g.alpha_value;
    j["sdedit_start_t"] = g.sdedit_start_t;
    j["skip_residual_weight"] =
        g.skip_residual_weight == WeightSchedule::cosine_ramp ? "cosine_ramp" : "constant";
    j["skip_residual_value"] = g.skip_residual_value;
    j["projection"] = {{"cutoff_fraction", g.projection.cutoff_fraction},
                       {"filter_kind", filter_kind_name(g.projection.filter_kind)},
                       {"transition_width", g.projection.transition_width}};
    return j;
}

GuidanceConfig guidance_from_json(const nlohmann::json& j) {
    GuidanceConfig g;
    g.mode = guidance_mode_from_string(j.value("mode", "projected_flow"));
    const std::string sched = j.value("alpha_schedule", "cosine_decay");
    if (sched == "cosine_decay") {
        g.alpha_schedule = AlphaSchedule::cosine_decay;
    } else if (sched == "constant") {
        g.alpha_schedule = AlphaSchedule::constant;
    } else {
        throw std::invalid_argument("unknown alpha schedule: " + sched);
    }
    g.alpha_value = j.value("alpha_value", 1.0);
    g.sdedit_start_t = j.value("sdedit_start_t", 0.6);
    const std::string w = j.value("skip_residual_weight", "cosine_ramp");
    if (w == "cosine_ramp") {
        g.skip_residual_weight = WeightSchedule::cosine_ramp;
    } else if (w == "constant") {
        g.skip_residual_weight = WeightSchedule::constant;
    } else {
        throw std::invalid_argument("unknown skip residual weight schedule: " + w);
    }
    g.skip_residual_value = j.value("skip_residual_value", 1.0);
    if (j.contains("projection")) {
        const auto& p = j.at("projection");
        g.projection.cutoff_fraction = p.value("cutoff_fraction", 1.0);
        g.projection.filter_kind = filter_kind_from(p.value("filter_kind", "ideal"));
        g.projection.transition_width = p.value("transition_width", 0.0);
    }
    return g;
}

nlohmann::json toolkit_to_json(const ToolkitConfig& t) {
    nlohmann::json j;
    j["rope"] = {{"head_dim", t.rope.head_dim},
                 {"base", t.rope.base},
                 {"base_multiplier", t.rope.base_multiplier}};
    j["s_star_multiplier"] = t.s_star_multiplier;
    j["attention_scale_mode"] =
        t.attention_scale_mode == AttnScaleMode::off ? "off" : "entropy_matching";
    j["text_duplication"] = t.text_duplication;
    return j;
}

ToolkitConfig toolkit_from_json(const nlohmann::json& j, ScalePair scale) {
    ToolkitConfig t;
    if (j.contains("preset")) t = toolkit_preset(j.at("preset").get<std::string>(), scale);
    t.rope.scale = scale;
    if (j.contains("rope")) {
        const auto& r = j.at("rope");
        t.rope.head_dim = r.value("head_dim", t.rope.head_dim);
        t.rope.base = r.value("base", t.rope.base);
        t.rope.base_multiplier = r.value("base_multiplier", t.rope.base_multiplier);
    }
    t.s_star_multiplier = j.value("s_star_multiplier", t.s_star_multiplier);
    if (j.contains("attention_scale_mode")) {
        const std::string m = j.at("attention_scale_mode").get<std::string>();
        if (m == "off") {
            t.attention_scale_mode = AttnScaleMode::off;
        } else if (m == "entropy_matching") {
            t.attention_scale_mode = AttnScaleMode::entropy_matching;
        } else {
            throw std::invalid_argument("unknown attention scale mode: " + m);
        }
    }
    t.text_duplication = j.value("text_duplication", t.text_duplication);
    return t;
}

std::filesystem::path ensure_output_dir(const ExperimentSpec& spec) {
    std::filesystem::path dir(spec.output_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void ExperimentSpec::validate() const {
    mixture.validate();
    if (native_res <= 0 || extra_res <= native_res || extra_res % native_res != 0)
        throw std::invalid_argument(
            "ExperimentSpec: extra_res must be a proper multiple of native_res");
    if (steps_native < 1 || steps_extra < 1)
        throw std::invalid_argument("ExperimentSpec: step counts must be positive");
    if (seeds.empty()) throw std::invalid_argument("ExperimentSpec: seeds must be nonempty");
    std::vector<std::uint64_t> sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("ExperimentSpec: seeds must be distinct");
    if (output_dir.empty()) throw std::invalid_argument("ExperimentSpec: output_dir empty");
}

std::string ExperimentSpec::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["mixture"] = nlohmann::json::parse(mixture.to_json());
    j["native_res"] = native_res;
    j["extra_res"] = extra_res;
    j["steps_native"] = steps_native;
    j["steps_extra"] = steps_extra;
    j["guidance"] = guidance_to_json(guidance);
    j["toolkit"] = toolkit_to_json(toolkit);
    j["degradation"] = {{"gap", degradation.gap},
                        {"hf_noise_scale", degradation.hf_noise_scale},
                        {"posterior_temperature", degradation.posterior_temperature},
                        {"seed", degradation.seed}};
    j["seeds"] = seeds;
    j["output_dir"] = output_dir;
    return j.dump(2);
}

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ExperimentSpec s;
    if (j.contains("preset")) s = preset(j.at("preset").get<std::string>());
    s.name = j.value("name", s.name);
    if (j.contains("mixture")) s.mixture = MixtureSpec::from_json(j.at("mixture").dump());
    s.native_res = j.value("native_res", s.native_res);
    s.extra_res = j.value("extra_res", s.extra_res);
    s.steps_native = j.value("steps_native", s.steps_native);
    s.steps_extra = j.value("steps_extra", s.steps_extra);
    if (j.contains("guidance")) s.guidance = guidance_from_json(j.at("guidance"));
    ScalePair scale{static_cast<long>(s.native_res) * s.native_res,
                    static_cast<long>(s.extra_res) * s.extra_res};
    if (j.contains("toolkit")) {
        s.toolkit = toolkit_from_json(j.at("toolkit"), scale);
    } else {
        s.toolkit.rope.scale = scale;
    }
    if (j.contains("degradation")) {
        const auto& d = j.at("degradation");
        s.degradation.gap = d.value("gap", s.degradation.gap);
        s.degradation.hf_noise_scale = d.value("hf_noise_scale", s.degradation.hf_noise_scale);
        s.degradation.posterior_temperature =
            d.value("posterior_temperature", s.degradation.posterior_temperature);
        s.degradation.seed = d.value("seed", s.degradation.seed);
    }
    if (j.contains("seeds")) s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    s.output_dir = j.value("output_dir", s.output_dir);
    s.validate();
    return s;
}

ExperimentSpec ExperimentSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spec file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

ExperimentSpec ExperimentSpec::preset(const std::string& name) {
    ExperimentSpec s;
    s.name = name;
    if (name == "guidance" || name == "default") {
        s.mixture.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        s.mixture.data_spread = 0.02;
        s.mixture.canonical_resolution = 16;
        s.mixture.band_resolution = 8;
        s.mixture.mean_seed = 7;
        s.mixture.mean_rms = 0.5;
        s.native_res = 8;
        s.extra_res = 16;
        s.steps_native = 8;
        s.steps_extra = 8;
        s.degradation.gap = 1.0;
        s.degradation.hf_noise_scale = 0.02;
        s.degradation.posterior_temperature = 1e6;
        s.degradation.seed = 17;
        s.guidance.mode = GuidanceMode::projected_flow;
        s.guidance.projection = ProjectionConfig::native_band(s.native_res, s.extra_res);
        for (std::uint64_t i = 0; i < 64; ++i) s.seeds.push_back(i);
    } else if (name == "loss_curve") {
        s.mixture.weights = {0.25, 0.25, 0.25, 0.25};
        s.mixture.data_spread = 5.5;
        s.mixture.canonical_resolution = 32;
        s.mixture.band_resolution = 8;
        s.mixture.mean_seed = 7;
        s.mixture.mean_rms = 3.5;
        s.native_res = 8;
        s.extra_res = 16;
        s.steps_native = 30;
        s.steps_extra = 30;
        s.degradation.gap = 1.0;
        s.degradation.hf_noise_scale = 0.02;
        s.degradation.posterior_temperature = 1000.0;
        s.degradation.seed = 12;
        s.guidance.projection = ProjectionConfig::native_band(s.native_res, s.extra_res);
        s.seeds = {11};
    } else if (name == "audit") {
        // audits never sample the mixture, but the spec still has to validate
        s.mixture.weights = {1.0};
        s.mixture.canonical_resolution = 64;
        s.mixture.band_resolution = 16;
        s.native_res = 16;
        s.extra_res = 64;
        s.seeds = {0, 1, 2, 3, 4, 5, 6, 7};
    } else {
        throw std::invalid_argument("unknown experiment preset: " + name);
    }
    s.toolkit.rope.scale = ScalePair{static_cast<long>(s.native_res) * s.native_res,
                                     static_cast<long>(s.extra_res) * s.extra_res};
    return s;
}

SampleMetrics run_one(const ExperimentSpec& spec, GuidanceMode mode, std::uint64_t seed,
                      TwoStageResult* result) {
    ResolvedMixture native_mix(spec.mixture, spec.native_res);
    ResolvedMixture extra_mix(spec.mixture, spec.extra_res);
    DegradationConfig deg = spec.degradation;
    deg.seed = derive_seed(spec.degradation.seed, seed);  // fresh hf noise per run
    auto native_source = [&](const Grid& x, double t) { return native_mix.velocity(x, t); };
    auto extra_source = [&](const Grid& x, double t) {
        return extra_mix.degraded_velocity(x, t, deg, spec.native_res);
    };
    GuidanceConfig guidance = spec.guidance;
    guidance.mode = mode;

    std::vector<double> step_rms;
    TwoStageResult r = two_stage_sample(
        native_source, extra_source, spec.mixture.channels, spec.native_res, spec.extra_res,
        TimeSchedule::uniform(spec.steps_native), TimeSchedule::uniform(spec.steps_extra),
        guidance, seed, &step_rms);

    SampleMetrics m;
    m.seed = seed;
    m.projection_error = projection_endpoint_error(r.x1_extra, r.x1_native_up,
                                                   guidance.projection);
    m.high_band_energy = rms(highpass(r.x1_extra, guidance.projection));
    if (!step_rms.empty()) {
        for (double v : step_rms) m.guidance_magnitude += v;
        m.guidance_magnitude /= static_cast<double>(step_rms.size());
    }
    if (result) *result = std::move(r);
    return m;
}

void run_sample(const ExperimentSpec& spec) {
    spec.validate();
    const auto dir = ensure_output_dir(spec);
    CsvWriter csv((dir / (spec.name + "_metrics.csv")).string(), "experiment,seed,metric,t,value",
                  spec_hash(spec.to_json()));
    for (std::uint64_t seed : spec.seeds) {
        TwoStageResult r;
        SampleMetrics m = run_one(spec, spec.guidance.mode, seed, &r);
        const std::string stem = spec.name + "_seed" + std::to_string(seed);
        write_grid(r.x1_native, (dir / (stem + "_native.grid")).string());
        write_grid(r.x1_extra, (dir / (stem + "_extra.grid")).string());
        write_png(r.x1_native, (dir / (stem + "_native.png")).string());
        write_png(r.x1_extra, (dir / (stem + "_extra.png")).string());
        const std::string s = std::to_string(seed);
        csv.row({spec.name, s, "projection_error", "", CsvWriter::num(m.projection_error)});
        csv.row({spec.name, s, "high_band_energy", "", CsvWriter::num(m.high_band_energy)});
        csv.row({spec.name, s, "guidance_magnitude", "", CsvWriter::num(m.guidance_magnitude)});
    }
}

void run_guidance_comparison(const ExperimentSpec& spec,
                             const std::vector<GuidanceMode>& modes) {
    spec.validate();
    if (modes.size() < 2)
        throw std::invalid_argument("run_guidance_comparison: need at least two modes");
    const auto dir = ensure_output_dir(spec);
    CsvWriter csv((dir / (spec.name + "_comparison.csv")).string(),
                  "experiment,seed,metric,t,value", spec_hash(spec.to_json()));
    for (GuidanceMode mode : modes) {
        std::vector<double> errors;
        for (std::uint64_t seed : spec.seeds) {
            SampleMetrics m = run_one(spec, mode, seed);
            errors.push_back(m.projection_error);
            csv.row({spec.name, std::to_string(seed), to_string(mode) + "_projection_error", "",
                     CsvWriter::num(m.projection_error)});
        }
        csv.row({spec.name, "median", to_string(mode) + "_projection_error", "",
                 CsvWriter::num(median(errors))});
    }
}

void run_loss_curve(const ExperimentSpec& spec, const std::vector<double>& timesteps,
                    int n_samples) {
    spec.validate();
    for (double t : timesteps)
        if (!(t > 0.0 && t < 1.0))
            throw std::invalid_argument("run_loss_curve: timesteps must be interior to (0,1)");
    const auto dir = ensure_output_dir(spec);
    const std::vector<LossRatioRow> rows = loss_ratio_curve(
        spec.mixture, spec.native_res, spec.extra_res, timesteps, spec.degradation, n_samples,
        spec.seeds.front());
    CsvWriter csv((dir / (spec.name + "_loss_curve.csv")).string(), "resolution,t,loss,ratio",
                  spec_hash(spec.to_json()));
    for (const LossRatioRow& r : rows) {
        csv.row({std::to_string(spec.native_res), CsvWriter::num(r.t),
                 CsvWriter::num(r.loss_native), CsvWriter::num(1.0)});
    }
    for (const LossRatioRow& r : rows) {
        csv.row({std::to_string(spec.extra_res), CsvWriter::num(r.t),
                 CsvWriter::num(r.loss_extra),
                 r.defined ? CsvWriter::num(r.ratio) : std::string("undefined")});
    }
}

void run_rope_audit(const ExperimentSpec& spec) {
    spec.validate();
    const auto dir = ensure_output_dir(spec);
    const auto rows = rope_angle_audit(spec.toolkit.rope, spec.native_res, spec.extra_res);
    RopeConfig scaled = spec.toolkit.rope;
    scaled.scale = ScalePair{static_cast<long>(spec.native_res) * spec.native_res,
                             static_cast<long>(spec.extra_res) * spec.extra_res};
    const double effective_base = ntk_scaled_base(scaled);
    CsvWriter csv((dir / (spec.name + "_rope_audit.csv")).string(),
                  "dim,max_native_angle,max_extra_angle_scaled,max_extra_angle_unscaled,"
                  "effective_base",
                  spec_hash(spec.to_json()));
    for (const RopeAngleRow& r : rows) {
        csv.row({std::to_string(r.dim), CsvWriter::num(r.max_native_angle),
                 CsvWriter::num(r.max_extra_angle_scaled),
                 CsvWriter::num(r.max_extra_angle_unscaled), CsvWriter::num(effective_base)});
    }
}

void run_entropy_audit(const ExperimentSpec& spec) {
    spec.validate();
    const auto dir = ensure_output_dir(spec);
    CsvWriter csv((dir / (spec.name + "_entropy_audit.csv")).string(),
                  "variant,seed,layer,head,entropy,mean_text_mass", spec_hash(spec.to_json()));
    const ScalePair native_scale{static_cast<long>(spec.native_res) * spec.native_res,
                                 static_cast<long>(spec.native_res) * spec.native_res};
    const ScalePair extra_scale{static_cast<long>(spec.native_res) * spec.native_res,
                                static_cast<long>(spec.extra_res) * spec.extra_res};
    struct Variant {
        const char* name;
        int grid;
        ScalePair scale;
        AttnScaleMode mode;
        bool duplicate;
    };
    const Variant variants[] = {
        {"native", spec.native_res, native_scale, AttnScaleMode::off, false},
        {"extra_unscaled", spec.extra_res, extra_scale, AttnScaleMode::off, false},
        {"extra_scaled", spec.extra_res, extra_scale, AttnScaleMode::entropy_matching, false},
        {"extra_duplicated", spec.extra_res, extra_scale, AttnScaleMode::off, true},
    };
    for (std::uint64_t seed : spec.seeds) {
        const MmditModel model = build_model(seed);
        for (const Variant& var : variants) {
            ToolkitConfig tk = spec.toolkit;
            tk.rope.scale = var.scale;
            tk.attention_scale_mode = var.mode;
            tk.text_duplication = var.duplicate;
            const TokenSequence seq = make_sequence(kAuditTextLen, var.grid, var.grid, tk,
                                                    model.model_dim, derive_seed(seed, 99));
            const std::vector<AttnStats> stats = forward_audit(model, seq, tk);
            for (size_t layer = 0; layer < stats.size(); ++layer) {
                double mass = 0.0;
                for (double v : stats[layer].text_mass_per_image_token) mass += v;
                mass /= static_cast<double>(stats[layer].text_mass_per_image_token.size());
                for (size_t head = 0; head < stats[layer].per_head_entropy.size(); ++head) {
                    csv.row({var.name, std::to_string(seed), std::to_string(layer),
                             std::to_string(head),
                             CsvWriter::num(stats[layer].per_head_entropy[head]),
                             CsvWriter::num(mass)});
                }
            }
        }
    }
}

void render(const std::string& grid_path, const std::string& out_path, double lo, double hi) {
    write_png(read_grid(grid_path), out_path, lo, hi);
}

}  // namespace flowscale
