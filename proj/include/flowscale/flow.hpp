#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "flowscale/grid.hpp"

namespace flowscale {

// Time convention: t = 0 is noise, t = 1 is data; schedules run 0 -> 1.
struct FlowState {
    Grid x;
    double t = 0.0;
};

struct TimeSchedule {
    std::vector<double> times;  // strictly increasing, times.front()==0, times.back()==1

    static TimeSchedule uniform(int steps);
    void validate() const;  // throws std::invalid_argument on violation
    int steps() const { return static_cast<int>(times.size()) - 1; }
};

struct ScalePair {
    long native_len = 1;
    long extra_len = 1;

    double s() const { return std::sqrt(static_cast<double>(extra_len) / static_cast<double>(native_len)); }
};

Grid interpolate(const Grid& x0, const Grid& x1, double t);

FlowState euler_step(const FlowState& state, const Grid& v, double dt);

// t / (s* - s*.t + t), applied to interior times; endpoints fixed.
double shift_time(double t, double s_star);
TimeSchedule shift_schedule(const TimeSchedule& schedule, double s_star);

using VelocitySource = std::function<Grid(const Grid& x, double t)>;
// Optional per-step velocity transform (guidance hook): receives v, x, t.
using VelocityTransform = std::function<Grid(const Grid& v, const Grid& x, double t)>;

// Euler integration over the schedule; velocity evaluated at left endpoints only.
// Throws std::runtime_error naming the timestep if a non-finite velocity appears.
Grid sample(const VelocitySource& source, const TimeSchedule& schedule, const Grid& x0,
            const VelocityTransform& guidance = nullptr);

}  // namespace flowscale
