#pragma once

#include <cstdint>
#include <string>

#include "flowscale/flow.hpp"
#include "flowscale/grid.hpp"
#include "flowscale/projection.hpp"

namespace flowscale {

enum class GuidanceMode { none, projected_flow, sdedit, skip_residual };
enum class AlphaSchedule { cosine_decay, constant };
enum class WeightSchedule { cosine_ramp, constant };

GuidanceMode guidance_mode_from_string(const std::string& name);
std::string to_string(GuidanceMode mode);

struct GuidanceConfig {
    GuidanceMode mode = GuidanceMode::projected_flow;
    AlphaSchedule alpha_schedule = AlphaSchedule::cosine_decay;
    double alpha_value = 1.0;  // used when alpha_schedule == constant
    double sdedit_start_t = 0.6;
    WeightSchedule skip_residual_weight = WeightSchedule::cosine_ramp;
    double skip_residual_value = 1.0;  // used when skip_residual_weight == constant
    ProjectionConfig projection;

    double alpha(double t) const;
    double skip_weight(double t) const;
};

// Everything the extrapolated stage needs from the native stage.
struct GuidanceContext {
    Grid x1_native_up;  // native endpoint, band-limited-upsampled to extrapolated size
    Grid x0_extra;      // the extrapolated run's own initial noise
    ScalePair scale;
};

// 1 + 0.5*cos(pi*t), the ramp-down of Eq. 5.
double alpha_cosine(double t);

// v + alpha*((x1_native_up - P(x_t))/(1-t) - P(v)); high band passes through.
Grid projected_flow_velocity(const Grid& v, const Grid& x_t, const GuidanceContext& ctx,
                             double t, double alpha, const ProjectionConfig& proj);

// State at t = start_t: interpolate(fresh noise, x1_native_up, start_t).
FlowState sdedit_start(const GuidanceContext& ctx, double start_t, std::uint64_t seed);

// v + weight*(r_t - x_t)/(1-t) with r_t = interpolate(x0_extra, x1_native_up, t).
Grid skip_residual_velocity(const Grid& v, const Grid& x_t, const GuidanceContext& ctx,
                            double t, double weight);

struct TwoStageResult {
    Grid x1_native;
    Grid x1_native_up;
    Grid x1_extra;
};

// Stage 1: unguided native sample from the exact-regime source. Stage 2: upsample
// into a GuidanceContext, then sample at extrapolated size with the configured
// guidance. Stage seeds are derived independently from master_seed.
TwoStageResult two_stage_sample(const VelocitySource& native_source,
                                const VelocitySource& extra_source, int channels,
                                int native_res, int extra_res,
                                const TimeSchedule& native_schedule,
                                const TimeSchedule& extra_schedule,
                                const GuidanceConfig& guidance, std::uint64_t master_seed,
                                std::vector<double>* step_guidance_rms = nullptr);

// Primary metric: rms(lowpass(x1_extra) - x1_native_up) under the given projection.
double projection_endpoint_error(const Grid& x1_extra, const Grid& x1_native_up,
                                 const ProjectionConfig& proj);

}  // namespace flowscale
