#include "flowscale/guidance.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "flowscale/rng.hpp"

namespace flowscale {

GuidanceMode guidance_mode_from_string(const std::string& name) {
    if (name == "none") return GuidanceMode::none;
    if (name == "projected_flow") return GuidanceMode::projected_flow;
    if (name == "sdedit") return GuidanceMode::sdedit;
    if (name == "skip_residual") return GuidanceMode::skip_residual;
    throw std::invalid_argument("unknown guidance mode: " + name);
}

std::string to_string(GuidanceMode mode) {
    switch (mode) {
        case GuidanceMode::none: return "none";
        case GuidanceMode::projected_flow: return "projected_flow";
        case GuidanceMode::sdedit: return "sdedit";
        case GuidanceMode::skip_residual: return "skip_residual";
    }
    throw std::logic_error("invalid guidance mode");
}

double alpha_cosine(double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("alpha_cosine: t must lie in [0,1]");
    return 1.0 + 0.5 * std::cos(std::numbers::pi * t);
}

double GuidanceConfig::alpha(double t) const {
    return alpha_schedule == AlphaSchedule::cosine_decay ? alpha_cosine(t) : alpha_value;
}

double GuidanceConfig::skip_weight(double t) const {
    if (skip_residual_weight == WeightSchedule::cosine_ramp)
        return 0.5 * (1.0 + std::cos(std::numbers::pi * t));
    return skip_residual_value;
}

Grid projected_flow_velocity(const Grid& v, const Grid& x_t, const GuidanceContext& ctx,
                             double t, double alpha, const ProjectionConfig& proj) {
    if (!(t < 1.0)) throw std::invalid_argument("projected_flow_velocity: t must be < 1");
    require_same_shape(v, x_t, "projected_flow_velocity");
    require_same_shape(v, ctx.x1_native_up, "projected_flow_velocity");
    if (alpha == 0.0) return v;
    Grid px = lowpass(x_t, proj);
    Grid pv = lowpass(v, proj);
    Grid out = v;
    const double inv = 1.0 / (1.0 - t);
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] += alpha * ((ctx.x1_native_up.data[i] - px.data[i]) * inv - pv.data[i]);
    }
    return out;
}

FlowState sdedit_start(const GuidanceContext& ctx, double start_t, std::uint64_t seed) {
    if (!(start_t > 0.0 && start_t < 1.0))
        throw std::invalid_argument("sdedit_start: start_t must lie in (0,1)");
    Grid fresh = gaussian_grid(ctx.x1_native_up.channels, ctx.x1_native_up.height,
                               ctx.x1_native_up.width, seed);
    return FlowState{interpolate(fresh, ctx.x1_native_up, start_t), start_t};
}

Grid skip_residual_velocity(const Grid& v, const Grid& x_t, const GuidanceContext& ctx,
                            double t, double weight) {
    if (!(t < 1.0)) throw std::invalid_argument("skip_residual_velocity: t must be < 1");
    require_same_shape(v, x_t, "skip_residual_velocity");
    require_same_shape(v, ctx.x0_extra, "skip_residual_velocity");
    if (weight == 0.0) return v;
    Grid out = v;
    const double inv = weight / (1.0 - t);
    for (size_t i = 0; i < out.data.size(); ++i) {
        const double r = t * ctx.x1_native_up.data[i] + (1.0 - t) * ctx.x0_extra.data[i];
        out.data[i] += (r - x_t.data[i]) * inv;
    }
    return out;
}

namespace {

// Euler integration over an explicit increasing time list ending at 1.
Grid integrate_from(const VelocitySource& source, const std::vector<double>& times, Grid x) {
    for (size_t i = 0; i + 1 < times.size(); ++i) {
        Grid v = source(x, times[i]);
        if (!all_finite(v))
            throw std::runtime_error("two_stage_sample: non-finite velocity at t = " +
                                     std::to_string(times[i]));
        axpy(x, times[i + 1] - times[i], v);
    }
    return x;
}

}  // namespace

TwoStageResult two_stage_sample(const VelocitySource& native_source,
                                const VelocitySource& extra_source, int channels,
                                int native_res, int extra_res,
                                const TimeSchedule& native_schedule,
                                const TimeSchedule& extra_schedule,
                                const GuidanceConfig& guidance, std::uint64_t master_seed,
                                std::vector<double>* step_guidance_rms) {
    if (native_res <= 0 || extra_res <= 0 || extra_res % native_res != 0)
        throw std::invalid_argument(
            "two_stage_sample: extra_res must be a positive multiple of native_res");
    const int factor = extra_res / native_res;

    Grid x0_native = gaussian_grid(channels, native_res, native_res, derive_seed(master_seed, 0));
    TwoStageResult out;
    out.x1_native = sample(native_source, native_schedule, x0_native);
    out.x1_native_up = upsample_bandlimited(out.x1_native, factor);

    GuidanceContext ctx;
    ctx.x1_native_up = out.x1_native_up;
    ctx.x0_extra = gaussian_grid(channels, extra_res, extra_res, derive_seed(master_seed, 1));
    ctx.scale.native_len = static_cast<long>(native_res) * native_res;
    ctx.scale.extra_len = static_cast<long>(extra_res) * extra_res;

    switch (guidance.mode) {
        case GuidanceMode::none:
            out.x1_extra = sample(extra_source, extra_schedule, ctx.x0_extra);
            break;
        case GuidanceMode::projected_flow: {
            auto transform = [&](const Grid& v, const Grid& x, double t) {
                Grid g = projected_flow_velocity(v, x, ctx, t, guidance.alpha(t),
                                                 guidance.projection);
                if (step_guidance_rms) step_guidance_rms->push_back(rms(g - v));
                return g;
            };
            out.x1_extra = sample(extra_source, extra_schedule, ctx.x0_extra, transform);
            break;
        }
        case GuidanceMode::skip_residual: {
            auto transform = [&](const Grid& v, const Grid& x, double t) {
                Grid g = skip_residual_velocity(v, x, ctx, t, guidance.skip_weight(t));
                if (step_guidance_rms) step_guidance_rms->push_back(rms(g - v));
                return g;
            };
            out.x1_extra = sample(extra_source, extra_schedule, ctx.x0_extra, transform);
            break;
        }
        case GuidanceMode::sdedit: {
            FlowState start =
                sdedit_start(ctx, guidance.sdedit_start_t, derive_seed(master_seed, 2));
            std::vector<double> times{start.t};
            for (double t : extra_schedule.times)
                if (t > start.t) times.push_back(t);
            out.x1_extra = integrate_from(extra_source, times, std::move(start.x));
            break;
        }
    }
    return out;
}

double projection_endpoint_error(const Grid& x1_extra, const Grid& x1_native_up,
                                 const ProjectionConfig& proj) {
    require_same_shape(x1_extra, x1_native_up, "projection_endpoint_error");
    Grid diff = lowpass(x1_extra, proj) - x1_native_up;
    return rms(diff);
}

}  // namespace flowscale
