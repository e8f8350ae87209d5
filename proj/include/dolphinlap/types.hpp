#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace dolphinlap {

using Channel = std::vector<double>;
using Vec3 = std::array<double, 3>;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

inline double norm3(const Vec3& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

/// Samples of one scalar quantity at their own (strictly increasing) instants.
struct TimedChannel {
    std::vector<double> t;
    Channel value;

    std::size_t size() const { return t.size(); }
    bool empty() const { return t.empty(); }
};

}  // namespace dolphinlap
