#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowscale/guidance.hpp"
#include "flowscale/mixture.hpp"
#include "flowscale/toolkit.hpp"

namespace flowscale {

struct ExperimentSpec {
    std::string name = "default";
    MixtureSpec mixture;
    int native_res = 8;
    int extra_res = 16;
    int steps_native = 8;
    int steps_extra = 8;
    GuidanceConfig guidance;
    ToolkitConfig toolkit;
    DegradationConfig degradation;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "out";

    int factor() const { return extra_res / native_res; }
    void validate() const;  // throws std::invalid_argument

    std::string to_json() const;
    static ExperimentSpec from_json(const std::string& text);
    static ExperimentSpec load(const std::string& path);

    // Named presets: "guidance" (the standard gap=1 comparison testbed) and
    // "loss_curve" (the section-3.5 diagnostic testbed).
    static ExperimentSpec preset(const std::string& name);
};

// Per-seed outcome of one two-stage run.
struct SampleMetrics {
    std::uint64_t seed = 0;
    double projection_error = 0.0;   // rms(lowpass(x1_extra) - x1_native_up)
    double high_band_energy = 0.0;   // rms of the high band of x1_extra
    double guidance_magnitude = 0.0; // mean per-step rms(v_guided - v)
};

// Runs the configured guidance on one seed; optionally writes grid/png artifacts.
SampleMetrics run_one(const ExperimentSpec& spec, GuidanceMode mode, std::uint64_t seed,
                      TwoStageResult* result = nullptr);

// Writes metrics.csv plus per-seed grid and png dumps under spec.output_dir.
void run_sample(const ExperimentSpec& spec);

// Paired per-seed comparison across modes; writes comparison.csv with medians.
void run_guidance_comparison(const ExperimentSpec& spec,
                             const std::vector<GuidanceMode>& modes);

// Writes loss_curve.csv with header resolution,t,loss,ratio; native rows carry
// ratio 1, extrapolated rows the extra/native loss ratio.
void run_loss_curve(const ExperimentSpec& spec, const std::vector<double>& timesteps,
                    int n_samples = 2000);

void run_rope_audit(const ExperimentSpec& spec);
void run_entropy_audit(const ExperimentSpec& spec);

// Grid file -> 8-bit image with the given display window.
void render(const std::string& grid_path, const std::string& out_path, double lo = -3.0,
            double hi = 3.0);

}  // namespace flowscale
