#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "flowscale/grid.hpp"

namespace flowscale {

// Gaussian-mixture "image distribution": K band-limited procedural mean images at a
// canonical resolution, per-pixel spread around the selected mean. Mean images are
// regenerated from seeds and never stored raw.
struct MixtureSpec {
    std::vector<double> weights;   // positive, sum to 1 within 1e-12
    double data_spread = 1.0;      // per-pixel stddev around the mean image
    int canonical_resolution = 128;
    int band_resolution = 32;      // means band-limited to this grid's Nyquist band
    int channels = 1;
    std::uint64_t mean_seed = 7;
    std::vector<std::uint64_t> mean_seeds;  // per component; derived from mean_seed if empty
    double mean_rms = 1.0;

    int components() const { return static_cast<int>(weights.size()); }
    std::uint64_t component_seed(int k) const;
    void validate() const;  // throws std::invalid_argument

    std::string to_json() const;
    static MixtureSpec from_json(const std::string& text);
};

struct DegradationConfig {
    double gap = 0.0;                  // blend strength in [0,1]
    double hf_noise_scale = 0.0;       // high-band noise amplitude
    double posterior_temperature = 1.0;
    std::uint64_t seed = 0;
};

// Mean images pooled to one resolution; cached per (spec, resolution).
class ResolvedMixture {
  public:
    ResolvedMixture(const MixtureSpec& spec, int resolution);

    const MixtureSpec& spec() const { return spec_; }
    int resolution() const { return resolution_; }
    const Grid& mean(int k) const { return means_[k]; }

    // Log-posterior over components for state x at time t (max-subtracted).
    std::vector<double> log_posterior(const Grid& x, double t) const;
    std::vector<double> posterior(const Grid& x, double t) const;

    // Closed-form marginal velocity E[X1 - X0 | X_t = x] at time t in [0,1).
    Grid velocity(const Grid& x, double t) const;

    // Degraded velocity: low band (native Nyquist of `native_band_res` and below)
    // blends exact with temperature-corrupted; high band gains seeded noise.
    Grid degraded_velocity(const Grid& x, double t, const DegradationConfig& deg,
                           int native_band_res) const;

    // Seeded draw of (x0, x1); component chosen from the weights.
    std::pair<Grid, Grid> sample_pair(std::uint64_t seed) const;
    // Component index for systematic (stratified) sampling at rank i of n.
    int systematic_component(std::uint64_t i, std::uint64_t n) const;
    Grid sample_endpoint(int component, std::uint64_t seed) const;

  private:
    MixtureSpec spec_;
    int resolution_;
    std::vector<Grid> means_;
    mutable std::map<std::uint64_t, Grid> hf_cache_;  // keyed by derived noise seed
};

// Canonical mean image for component k (band-limited, normalized to mean_rms).
Grid canonical_mean(const MixtureSpec& spec, int k);

std::pair<Grid, Grid> sample_pair(const MixtureSpec& spec, int resolution, std::uint64_t seed);

Grid mixture_velocity(const Grid& x, double t, const MixtureSpec& spec);
Grid degraded_velocity(const Grid& x, double t, const MixtureSpec& spec,
                       const DegradationConfig& deg, int native_band_res);

// Mean squared velocity-prediction error per pixel over n seeded (x0, x1) pairs.
// Sample streams are keyed by sample index only, so probes at different t are paired.
using LossVelocitySource = std::function<Grid(const Grid& x, double t)>;
double velocity_loss(const LossVelocitySource& source, const MixtureSpec& spec,
                     int resolution, double t, int n_samples, std::uint64_t seed);

struct LossRatioRow {
    double t = 0.0;
    double loss_native = 0.0;
    double loss_extra = 0.0;
    double ratio = 0.0;
    bool defined = true;  // false when native loss is exactly zero
};

std::vector<LossRatioRow> loss_ratio_curve(const MixtureSpec& spec, int native_res,
                                           int extra_res, const std::vector<double>& times,
                                           const DegradationConfig& deg, int n_samples,
                                           std::uint64_t seed);

}  // namespace flowscale
