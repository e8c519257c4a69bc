#include "flowscale/mixture.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "flowscale/projection.hpp"
#include "flowscale/rng.hpp"
#include "json.hpp"

namespace flowscale {

namespace {

double sigma_sq(double t, double rho) {
    return t * t * rho * rho + (1.0 - t) * (1.0 - t);
}

void require_time(double t, const char* where) {
    if (!(t >= 0.0 && t < 1.0)) {
        throw std::invalid_argument(std::string(where) + ": t must lie in [0,1)");
    }
}

}  // namespace

void MixtureSpec::validate() const {
    if (weights.empty()) throw std::invalid_argument("MixtureSpec: need >= 1 component");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw std::invalid_argument("MixtureSpec: weights must be positive");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("MixtureSpec: weights must sum to 1 within 1e-12");
    if (data_spread < 0.0) throw std::invalid_argument("MixtureSpec: data_spread must be >= 0");
    if (canonical_resolution <= 0 || band_resolution <= 0 || channels <= 0)
        throw std::invalid_argument("MixtureSpec: dimensions must be positive");
    if (band_resolution > canonical_resolution)
        throw std::invalid_argument("MixtureSpec: band_resolution exceeds canonical resolution");
    if (mean_rms < 0.0) throw std::invalid_argument("MixtureSpec: mean_rms must be >= 0");
    if (!mean_seeds.empty() && mean_seeds.size() != weights.size())
        throw std::invalid_argument("MixtureSpec: mean_seeds must match component count");
}

std::uint64_t MixtureSpec::component_seed(int k) const {
    return mean_seeds.empty() ? derive_seed(mean_seed, static_cast<std::uint64_t>(k))
                              : mean_seeds[static_cast<size_t>(k)];
}

std::string MixtureSpec::to_json() const {
    nlohmann::json j;
    j["weights"] = weights;
    j["data_spread"] = data_spread;
    j["canonical_resolution"] = canonical_resolution;
    j["band_resolution"] = band_resolution;
    j["channels"] = channels;
    j["mean_seed"] = mean_seed;
    if (!mean_seeds.empty()) j["mean_seeds"] = mean_seeds;
    j["mean_rms"] = mean_rms;
    return j.dump(2);
}

MixtureSpec MixtureSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    MixtureSpec s;
    s.weights = j.at("weights").get<std::vector<double>>();
    s.data_spread = j.at("data_spread").get<double>();
    s.canonical_resolution = j.at("canonical_resolution").get<int>();
    s.band_resolution = j.at("band_resolution").get<int>();
    s.channels = j.value("channels", 1);
    s.mean_seed = j.at("mean_seed").get<std::uint64_t>();
    if (j.contains("mean_seeds"))
        s.mean_seeds = j.at("mean_seeds").get<std::vector<std::uint64_t>>();
    s.mean_rms = j.at("mean_rms").get<double>();
    s.validate();
    return s;
}

Grid canonical_mean(const MixtureSpec& spec, int k) {
    spec.validate();
    if (k < 0 || k >= spec.components())
        throw std::invalid_argument("canonical_mean: component index out of range");
    const int n = spec.canonical_resolution;
    Grid noise(spec.channels, n, n);
    GaussianStream stream(spec.component_seed(k));
    stream.fill(noise);
    Grid mean = lowpass(noise, ProjectionConfig::native_band(spec.band_resolution, n));
    const double r = rms(mean);
    if (r > 0.0) {
        const double scale = spec.mean_rms / r;
        for (double& v : mean.data) v *= scale;
    }
    return mean;
}

ResolvedMixture::ResolvedMixture(const MixtureSpec& spec, int resolution)
    : spec_(spec), resolution_(resolution) {
    spec_.validate();
    if (resolution <= 0 || spec.canonical_resolution % resolution != 0)
        throw std::invalid_argument("ResolvedMixture: resolution must divide the canonical resolution");
    if (resolution < spec.band_resolution)
        throw std::invalid_argument("ResolvedMixture: resolution below the mean band resolution");
    const int factor = spec.canonical_resolution / resolution;
    means_.reserve(spec.components());
    for (int k = 0; k < spec.components(); ++k) {
        means_.push_back(downsample(canonical_mean(spec, k), factor));
    }
}

std::vector<double> ResolvedMixture::log_posterior(const Grid& x, double t) const {
    if (x.channels != spec_.channels || x.height != resolution_ || x.width != resolution_)
        throw std::invalid_argument("log_posterior: state shape " + x.shape_str() +
                                    " does not match the resolved mixture");
    const double s2 = sigma_sq(t, spec_.data_spread);
    const int K = spec_.components();
    std::vector<double> lp(K);
    for (int k = 0; k < K; ++k) {
        double d2 = 0.0;
        const Grid& mu = means_[k];
        for (size_t i = 0; i < x.data.size(); ++i) {
            const double d = x.data[i] - t * mu.data[i];
            d2 += d * d;
        }
        lp[k] = std::log(spec_.weights[k]) - d2 / (2.0 * s2);
    }
    const double m = *std::max_element(lp.begin(), lp.end());
    for (double& v : lp) v -= m;
    return lp;
}

std::vector<double> ResolvedMixture::posterior(const Grid& x, double t) const {
    std::vector<double> w = log_posterior(x, t);
    double total = 0.0;
    for (double& v : w) {
        v = std::exp(v);
        total += v;
    }
    for (double& v : w) v /= total;
    return w;
}

Grid ResolvedMixture::velocity(const Grid& x, double t) const {
    require_time(t, "mixture velocity");
    const std::vector<double> w = posterior(x, t);
    const double s2 = sigma_sq(t, spec_.data_spread);
    const double shrink = t * spec_.data_spread * spec_.data_spread / s2;
    Grid wm(x.channels, x.height, x.width);
    for (int k = 0; k < spec_.components(); ++k) axpy(wm, w[k], means_[k]);
    // E[X1|x] = wm + shrink*(x - t*wm); velocity = (E[X1|x] - x)/(1-t).
    Grid v(x.channels, x.height, x.width);
    const double inv = 1.0 / (1.0 - t);
    for (size_t i = 0; i < v.data.size(); ++i) {
        const double e1 = wm.data[i] + shrink * (x.data[i] - t * wm.data[i]);
        v.data[i] = (e1 - x.data[i]) * inv;
    }
    return v;
}

Grid ResolvedMixture::degraded_velocity(const Grid& x, double t, const DegradationConfig& deg,
                                        int native_band_res) const {
    require_time(t, "degraded velocity");
    if (!(deg.gap >= 0.0 && deg.gap <= 1.0))
        throw std::invalid_argument("degraded_velocity: gap must lie in [0,1]");
    if (!(deg.posterior_temperature > 0.0))
        throw std::invalid_argument("degraded_velocity: posterior_temperature must be positive");
    Grid v = velocity(x, t);
    if (deg.gap == 0.0) return v;  // bit-for-bit the exact oracle

    // Corrupted-minus-exact velocity is (1 - t*shrink)/(1-t) * sum_k (wt_k - w_k) mu_k,
    // a combination of band-limited means, hence already inside the low band: the
    // low-band blend reduces to adding it scaled by gap.
    const std::vector<double> lp = log_posterior(x, t);
    std::vector<double> w(lp.size()), wt(lp.size());
    double sw = 0.0, swt = 0.0;
    for (size_t k = 0; k < lp.size(); ++k) {
        w[k] = std::exp(lp[k]);
        wt[k] = std::exp(lp[k] / deg.posterior_temperature);
        sw += w[k];
        swt += wt[k];
    }
    const double s2 = sigma_sq(t, spec_.data_spread);
    const double shrink = t * spec_.data_spread * spec_.data_spread / s2;
    const double coef = deg.gap * (1.0 - t * shrink) / (1.0 - t);
    for (size_t k = 0; k < lp.size(); ++k) {
        axpy(v, coef * (wt[k] / swt - w[k] / sw), means_[k]);
    }

    if (deg.hf_noise_scale > 0.0) {
        // cache key doubles as the noise seed: unique per (degradation seed, t)
        const std::uint64_t key = derive_seed(deg.seed, std::bit_cast<std::uint64_t>(t));
        auto it = hf_cache_.find(key);
        if (it == hf_cache_.end()) {
            Grid noise = gaussian_grid(x.channels, x.height, x.width, key);
            Grid hf = highpass(noise, ProjectionConfig::native_band(native_band_res, resolution_));
            it = hf_cache_.emplace(key, std::move(hf)).first;
        }
        axpy(v, deg.gap * deg.hf_noise_scale, it->second);
    }
    return v;
}

int ResolvedMixture::systematic_component(std::uint64_t i, std::uint64_t n) const {
    // Deterministic proportional allocation: inverse CDF at rank midpoints.
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    double acc = 0.0;
    for (int k = 0; k < spec_.components(); ++k) {
        acc += spec_.weights[k];
        if (u <= acc) return k;
    }
    return spec_.components() - 1;
}

Grid ResolvedMixture::sample_endpoint(int component, std::uint64_t seed) const {
    Grid x1 = means_[component];
    if (spec_.data_spread > 0.0) {
        GaussianStream stream(seed);
        for (double& v : x1.data) v += spec_.data_spread * stream.next();
    }
    return x1;
}

std::pair<Grid, Grid> ResolvedMixture::sample_pair(std::uint64_t seed) const {
    GaussianStream stream(derive_seed(seed, 0));
    const double u = stream.uniform();
    int k = 0;
    double acc = 0.0;
    for (int j = 0; j < spec_.components(); ++j) {
        acc += spec_.weights[j];
        if (u <= acc) {
            k = j;
            break;
        }
        k = j;
    }
    Grid x0 = gaussian_grid(spec_.channels, resolution_, resolution_, derive_seed(seed, 1));
    Grid x1 = sample_endpoint(k, derive_seed(seed, 2));
    return {std::move(x0), std::move(x1)};
}

std::pair<Grid, Grid> sample_pair(const MixtureSpec& spec, int resolution, std::uint64_t seed) {
    return ResolvedMixture(spec, resolution).sample_pair(seed);
}

Grid mixture_velocity(const Grid& x, double t, const MixtureSpec& spec) {
    return ResolvedMixture(spec, x.height).velocity(x, t);
}

Grid degraded_velocity(const Grid& x, double t, const MixtureSpec& spec,
                       const DegradationConfig& deg, int native_band_res) {
    return ResolvedMixture(spec, x.height).degraded_velocity(x, t, deg, native_band_res);
}

double velocity_loss(const LossVelocitySource& source, const MixtureSpec& spec,
                     int resolution, double t, int n_samples, std::uint64_t seed) {
    require_time(t, "velocity_loss");
    if (n_samples < 1) throw std::invalid_argument("velocity_loss: n_samples must be >= 1");
    ResolvedMixture mix(spec, resolution);
    const size_t pixels = static_cast<size_t>(spec.channels) * resolution * resolution;
    double total = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const std::uint64_t si = derive_seed(seed, static_cast<std::uint64_t>(i));
        const int k = mix.systematic_component(static_cast<std::uint64_t>(i),
                                               static_cast<std::uint64_t>(n_samples));
        Grid x1 = mix.sample_endpoint(k, derive_seed(si, 1));
        Grid x0 = gaussian_grid(spec.channels, resolution, resolution, derive_seed(si, 2));
        Grid xt = x0;
        for (size_t j = 0; j < xt.data.size(); ++j)
            xt.data[j] = t * x1.data[j] + (1.0 - t) * x0.data[j];
        Grid v = source(xt, t);
        double err = 0.0;
        for (size_t j = 0; j < v.data.size(); ++j) {
            const double d = v.data[j] - (x1.data[j] - x0.data[j]);
            err += d * d;
        }
        total += err / static_cast<double>(pixels);
    }
    return total / n_samples;
}

std::vector<LossRatioRow> loss_ratio_curve(const MixtureSpec& spec, int native_res,
                                           int extra_res, const std::vector<double>& times,
                                           const DegradationConfig& deg, int n_samples,
                                           std::uint64_t seed) {
    if (extra_res <= native_res)
        throw std::invalid_argument("loss_ratio_curve: extra_res must exceed native_res");
    ResolvedMixture native_mix(spec, native_res);
    ResolvedMixture extra_mix(spec, extra_res);
    auto exact_native = [&](const Grid& x, double t) { return native_mix.velocity(x, t); };
    auto degraded_extra = [&](const Grid& x, double t) {
        return extra_mix.degraded_velocity(x, t, deg, native_res);
    };
    std::vector<LossRatioRow> rows;
    rows.reserve(times.size());
    for (double t : times) {
        if (!(t > 0.0 && t < 1.0))
            throw std::invalid_argument("loss_ratio_curve: probe times must be interior to (0,1)");
        LossRatioRow row;
        row.t = t;
        row.loss_native = velocity_loss(exact_native, spec, native_res, t, n_samples,
                                        derive_seed(seed, 1));
        row.loss_extra = velocity_loss(degraded_extra, spec, extra_res, t, n_samples,
                                       derive_seed(seed, 2));
        if (row.loss_native == 0.0) {
            row.defined = false;
            row.ratio = 0.0;
        } else {
            row.ratio = row.loss_extra / row.loss_native;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace flowscale
