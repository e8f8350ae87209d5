#pragma once

// Gradient-descent AHRS (Madgwick-style) on the native IMU stream.
//
// Frames: world x/y horizontal (x east, y north), z up. Body x forward,
// y left, z up. The quaternion rotates body vectors into the world frame.
// Euler angles follow the Z-Y-X sequence with pitch reported nose-up
// positive, i.e. q = qz(yaw) * qy(-pitch) * qx(roll).

#include <cmath>
#include <optional>
#include <span>

#include "dolphinlap/error.hpp"
#include "dolphinlap/ingest.hpp"
#include "dolphinlap/types.hpp"

namespace dolphinlap {

struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    Quaternion normalized() const {
        const double n = norm();
        return {w / n, x / n, y / n, z / n};
    }

    Quaternion conjugate() const { return {w, -x, -y, -z}; }

    friend Quaternion operator*(const Quaternion& a, const Quaternion& b) {
        return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
    }

    /// Rotates a body-frame vector into the world frame.
    Vec3 rotate(const Vec3& v) const {
        const Quaternion r = (*this) * Quaternion{0.0, v[0], v[1], v[2]} * conjugate();
        return {r.x, r.y, r.z};
    }

    /// World-frame vector expressed in the body frame.
    Vec3 rotate_inverse(const Vec3& v) const { return conjugate().rotate(v); }

    static Quaternion from_axis_angle(const Vec3& axis, double angle) {
        const double n = norm3(axis);
        const double s = std::sin(0.5 * angle) / n;
        return {std::cos(0.5 * angle), axis[0] * s, axis[1] * s, axis[2] * s};
    }
};

struct EulerPose {
    double pitch = 0.0;  // rad, nose-up positive, in [-pi/2, pi/2]
    double roll = 0.0;   // rad
    double yaw = 0.0;    // rad, counter-clockwise from world +x
};

inline Quaternion euler_to_quat(const EulerPose& e) {
    const Quaternion qz = Quaternion::from_axis_angle({0, 0, 1}, e.yaw);
    const Quaternion qy = Quaternion::from_axis_angle({0, 1, 0}, -e.pitch);
    const Quaternion qx = Quaternion::from_axis_angle({1, 0, 0}, e.roll);
    return qz * qy * qx;
}

inline EulerPose quat_to_euler(const Quaternion& q) {
    const double s = std::clamp(2.0 * (q.w * q.y - q.x * q.z), -1.0, 1.0);
    EulerPose e;
    e.pitch = -std::asin(s);
    if (std::abs(s) > 1.0 - 1e-12) {
        // Gimbal lock: roll and yaw share one degree of freedom; put it in yaw.
        e.roll = 0.0;
        e.yaw = 2.0 * std::atan2(q.z, q.w);
    } else {
        e.roll = std::atan2(2.0 * (q.w * q.x + q.y * q.z), 1.0 - 2.0 * (q.x * q.x + q.y * q.y));
        e.yaw = std::atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z));
    }
    return e;
}

namespace detail {

// Accumulates J^T (R(q)^T d - s) for a world reference d and a body
// measurement s, where J is the Jacobian of R(q)^T d with respect to (w,x,y,z).
inline void add_direction_gradient(const Quaternion& q, const Vec3& d, const Vec3& s, double grad[4]) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    const double dx = d[0], dy = d[1], dz = d[2];
    const double f0 = dx * (1 - 2 * y * y - 2 * z * z) + 2 * dy * (w * z + x * y) + 2 * dz * (x * z - w * y) - s[0];
    const double f1 = 2 * dx * (x * y - w * z) + dy * (1 - 2 * x * x - 2 * z * z) + 2 * dz * (w * x + y * z) - s[1];
    const double f2 = 2 * dx * (w * y + x * z) + 2 * dy * (y * z - w * x) + dz * (1 - 2 * x * x - 2 * y * y) - s[2];

    const double j0[4] = {2 * dy * z - 2 * dz * y, 2 * dy * y + 2 * dz * z, -4 * dx * y + 2 * dy * x - 2 * dz * w,
                          -4 * dx * z + 2 * dy * w + 2 * dz * x};
    const double j1[4] = {-2 * dx * z + 2 * dz * x, 2 * dx * y - 4 * dy * x + 2 * dz * w, 2 * dx * x + 2 * dz * z,
                          -2 * dx * w - 4 * dy * z + 2 * dz * y};
    const double j2[4] = {2 * dx * y - 2 * dy * x, 2 * dx * z - 2 * dy * w - 4 * dz * x,
                          2 * dx * w + 2 * dy * z - 4 * dz * y, 2 * dx * x + 2 * dy * y};
    for (int k = 0; k < 4; ++k) grad[k] += j0[k] * f0 + j1[k] * f1 + j2[k] * f2;
}

inline Vec3 normalized3(const Vec3& v) {
    const double n = norm3(v);
    return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace detail

/// One filter step. With beta = 0 this is plain gyro integration. The
/// magnetometer term is skipped when `mag` is empty or zero.
inline Quaternion ahrs_update(const Quaternion& q, const Vec3& gyro, const Vec3& accel, std::optional<Vec3> mag,
                              double beta, double dt) {
    if (!(dt > 0.0)) throw AnalysisError("ahrs dt must be positive");
    if (norm3(accel) == 0.0) throw AnalysisError("zero-norm accelerometer vector");

    const Quaternion rate = q * Quaternion{0.0, gyro[0], gyro[1], gyro[2]};
    double qdot[4] = {0.5 * rate.w, 0.5 * rate.x, 0.5 * rate.y, 0.5 * rate.z};

    if (beta > 0.0) {
        double grad[4] = {0, 0, 0, 0};
        detail::add_direction_gradient(q, {0, 0, 1}, detail::normalized3(accel), grad);
        if (mag && norm3(*mag) > 0.0) {
            const Vec3 m = detail::normalized3(*mag);
            const Vec3 h = q.rotate(m);
            const Vec3 b{std::hypot(h[0], h[1]), 0.0, h[2]};
            detail::add_direction_gradient(q, b, m, grad);
        }
        const double gn = std::sqrt(grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2] + grad[3] * grad[3]);
        if (gn > 0.0)
            for (int k = 0; k < 4; ++k) qdot[k] -= beta * grad[k] / gn;
    }

    Quaternion out{q.w + qdot[0] * dt, q.x + qdot[1] * dt, q.y + qdot[2] * dt, q.z + qdot[3] * dt};
    return out.normalized();
}

/// Attitude from a single accelerometer (and optional magnetometer) sample.
/// Without a magnetometer the yaw is `heading`.
inline Quaternion initial_attitude(const Vec3& accel, std::optional<Vec3> mag, double heading = 0.0) {
    if (norm3(accel) == 0.0) throw AnalysisError("zero-norm accelerometer vector");
    const Vec3 a = detail::normalized3(accel);
    EulerPose e;
    e.roll = std::atan2(a[1], a[2]);
    e.pitch = std::atan2(a[0], std::hypot(a[1], a[2]));
    e.yaw = 0.0;
    if (mag && norm3(*mag) > 0.0) {
        const Vec3 h = euler_to_quat(e).rotate(*mag);
        e.yaw = -std::atan2(h[1], h[0]);
    } else {
        e.yaw = heading;
    }
    return euler_to_quat(e);
}

struct AhrsOptions {
    /// Gradient step gain. Kept low so sustained turning and surging
    /// accelerations do not drag the attitude off gravity.
    double beta = 0.005;
    /// Angle of the horizontal magnetic field from world +x (declination in
    /// the local frame). Added to the filter yaw when a magnetometer is used.
    double mag_heading_offset = 0.0;
    /// Seed heading when no magnetometer is available.
    double initial_heading = 0.0;
    bool use_mag = true;
};

/// Orientation on the IMU time base; yaw is unwrapped.
struct OrientationSeries {
    std::vector<double> t;
    Channel pitch, roll, yaw;
};

inline OrientationSeries estimate_orientation(const ImuSeries& imu, const AhrsOptions& opt = {}) {
    if (imu.size() < 2) throw AnalysisError("orientation needs at least 2 IMU samples");
    const bool mag = opt.use_mag && imu.has_mag();
    auto mag_at = [&](std::size_t i) -> std::optional<Vec3> {
        if (!mag) return std::nullopt;
        return imu.mag[i];
    };

    OrientationSeries out;
    out.t = imu.t;
    out.pitch.resize(imu.size());
    out.roll.resize(imu.size());
    Channel yaw(imu.size());

    Quaternion q = initial_attitude(imu.accel[0], mag_at(0), opt.initial_heading);
    for (std::size_t i = 0; i < imu.size(); ++i) {
        if (i > 0) {
            // Mean rate over the step rather than the end-point rate: removes
            // the half-sample lag of rectangle integration.
            const Vec3 w{0.5 * (imu.gyro[i - 1][0] + imu.gyro[i][0]), 0.5 * (imu.gyro[i - 1][1] + imu.gyro[i][1]),
                         0.5 * (imu.gyro[i - 1][2] + imu.gyro[i][2])};
            q = ahrs_update(q, w, imu.accel[i], mag_at(i), opt.beta, imu.t[i] - imu.t[i - 1]);
        }
        const EulerPose e = quat_to_euler(q);
        out.pitch[i] = e.pitch;
        out.roll[i] = e.roll;
        yaw[i] = e.yaw;
    }
    out.yaw = unwrap(yaw);
    if (mag)
        for (double& v : out.yaw) v += opt.mag_heading_offset;
    return out;
}

}  // namespace dolphinlap
