#pragma once

#include <cmath>
#include <span>

#include "dolphinlap/error.hpp"
#include "dolphinlap/ingest.hpp"
#include "dolphinlap/types.hpp"

namespace dolphinlap {

/// Central difference in the interior, first-order one-sided differences at
/// the two endpoints. Output has the input's length.
inline Channel central_diff(std::span<const double> x, double dt) {
    if (x.size() < 3) throw AnalysisError("central difference needs at least 3 samples");
    if (!(dt > 0.0)) throw AnalysisError("central difference dt must be positive");
    const std::size_t n = x.size();
    Channel d(n);
    d[0] = (x[1] - x[0]) / dt;
    d[n - 1] = (x[n - 1] - x[n - 2]) / dt;
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (x[i + 1] - x[i - 1]) / (2.0 * dt);
    return d;
}

/// Per-sample fused state on the master timeline (structure of arrays).
struct KinematicSeries {
    double dt = 0.2;
    std::vector<double> t;
    Channel v;      // smoothed body-frame speed, m/s
    Channel v_xy;   // planar projection of the measured speed, v_raw*cos(pitch), m/s
    Channel pitch;  // rad
    Channel yaw;    // unwrapped, smoothed, rad
    Channel depth;  // m
    Channel a_t;    // tangential acceleration, m/s^2
    Channel omega;  // signed planar angular rate, rad/s
    Channel a_n;    // signed normal acceleration omega*v, m/s^2
    Channel v_bl;   // body lengths per second

    std::size_t size() const { return t.size(); }
};

struct KinematicsOptions {
    double smoothing_window_s = 1.0;
};

/// Builds the kinematic state from channels already aligned on `timeline`.
/// Speed and yaw are smoothed; pitch and depth are used as given. The planar
/// speed projects the measured (unsmoothed) speed.
inline KinematicSeries compute_kinematics(std::span<const double> v_raw, std::span<const double> pitch,
                                          std::span<const double> yaw, std::span<const double> depth,
                                          double body_length, const MasterTimeline& timeline,
                                          const KinematicsOptions& opt = {}) {
    const std::size_t n = timeline.n;
    if (v_raw.size() != n || pitch.size() != n || yaw.size() != n || depth.size() != n)
        throw AnalysisError("kinematic channels are not aligned with the timeline");
    if (!(body_length > 0.0)) throw AnalysisError("body length must be positive");

    KinematicSeries k;
    k.dt = timeline.dt;
    k.t = timeline.times();
    k.v = moving_average(v_raw, opt.smoothing_window_s, timeline.dt);
    for (double& v : k.v) v = std::max(v, 0.0);
    k.yaw = moving_average(unwrap(yaw), opt.smoothing_window_s, timeline.dt);
    k.pitch.assign(pitch.begin(), pitch.end());
    k.depth.assign(depth.begin(), depth.end());
    k.a_t = central_diff(k.v, timeline.dt);
    k.omega = central_diff(k.yaw, timeline.dt);

    k.a_n.resize(n);
    k.v_xy.resize(n);
    k.v_bl.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        k.a_n[i] = k.omega[i] * k.v[i];
        k.v_xy[i] = std::max(v_raw[i], 0.0) * std::cos(k.pitch[i]);
        k.v_bl[i] = k.v[i] / body_length;
    }
    return k;
}

}  // namespace dolphinlap
