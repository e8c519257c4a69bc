#include "flowscale/flow.hpp"

#include <sstream>
#include <stdexcept>

namespace flowscale {

TimeSchedule TimeSchedule::uniform(int steps) {
    if (steps < 1) throw std::invalid_argument("TimeSchedule: steps must be >= 1");
    TimeSchedule s;
    s.times.resize(steps + 1);
    for (int i = 0; i <= steps; ++i) s.times[i] = static_cast<double>(i) / steps;
    s.times.back() = 1.0;
    return s;
}

void TimeSchedule::validate() const {
    if (times.size() < 2) throw std::invalid_argument("TimeSchedule: need at least two times");
    if (times.front() != 0.0) throw std::invalid_argument("TimeSchedule: must start at 0");
    if (times.back() != 1.0) throw std::invalid_argument("TimeSchedule: must end at 1");
    for (size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw std::invalid_argument("TimeSchedule: times must be strictly increasing");
}

Grid interpolate(const Grid& x0, const Grid& x1, double t) {
    require_same_shape(x0, x1, "interpolate");
    Grid out(x0.channels, x0.height, x0.width);
    const double u = 1.0 - t;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = t * x1.data[i] + u * x0.data[i];
    return out;
}

FlowState euler_step(const FlowState& state, const Grid& v, double dt) {
    if (dt <= 0.0) throw std::invalid_argument("euler_step: dt must be positive");
    if (state.t + dt > 1.0 + 1e-12) throw std::invalid_argument("euler_step: step exceeds t = 1");
    require_same_shape(state.x, v, "euler_step");
    FlowState next{state.x, std::min(state.t + dt, 1.0)};
    for (size_t i = 0; i < next.x.data.size(); ++i) next.x.data[i] += dt * v.data[i];
    return next;
}

double shift_time(double t, double s_star) {
    if (s_star < 1.0) throw std::invalid_argument("shift_time: s_star must be >= 1");
    return t / (s_star - s_star * t + t);
}

TimeSchedule shift_schedule(const TimeSchedule& schedule, double s_star) {
    if (s_star < 1.0) throw std::invalid_argument("shift_schedule: s_star must be >= 1");
    TimeSchedule out = schedule;
    for (size_t i = 1; i + 1 < out.times.size(); ++i) out.times[i] = shift_time(out.times[i], s_star);
    out.validate();
    return out;
}

Grid sample(const VelocitySource& source, const TimeSchedule& schedule, const Grid& x0,
            const VelocityTransform& guidance) {
    schedule.validate();
    Grid x = x0;
    for (size_t i = 0; i + 1 < schedule.times.size(); ++i) {
        const double t = schedule.times[i];
        const double dt = schedule.times[i + 1] - t;
        Grid v = source(x, t);
        if (guidance) v = guidance(v, x, t);
        if (!all_finite(v)) {
            std::ostringstream msg;
            msg << "sample: non-finite velocity at t = " << t;
            throw std::runtime_error(msg.str());
        }
        for (size_t j = 0; j < x.data.size(); ++j) x.data[j] += dt * v.data[j];
    }
    return x;
}

}  // namespace flowscale
