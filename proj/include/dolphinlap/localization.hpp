#pragma once

// Planar dead reckoning, discrete curvature radius, algebraic circle fits and
// corner alignment of lap tracks.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dolphinlap/error.hpp"
#include "dolphinlap/ingest.hpp"
#include "dolphinlap/io.hpp"
#include "dolphinlap/kinematics.hpp"
#include "dolphinlap/types.hpp"

namespace dolphinlap {

struct Track {
    std::vector<double> t;
    Channel x, y;
    Channel radius;  // per-sample curvature radius, +inf on straights and at the ends

    std::size_t size() const { return t.size(); }
    Point2 point(std::size_t i) const { return {x[i], y[i]}; }

    Track slice(std::size_t begin, std::size_t end) const {
        Track s;
        s.t.assign(t.begin() + begin, t.begin() + end);
        s.x.assign(x.begin() + begin, x.begin() + end);
        s.y.assign(y.begin() + begin, y.begin() + end);
        if (!radius.empty()) s.radius.assign(radius.begin() + begin, radius.begin() + end);
        return s;
    }
};

struct CircleFit {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 0.0;
    double rms_residual = 0.0;
};

/// Forward-Euler position update from planar speed and heading. The first
/// sample sits at `p0`; sample i+1 uses the speed and heading of sample i.
inline Track dead_reckon(std::span<const double> t, std::span<const double> v_xy, std::span<const double> yaw,
                         double dt, Point2 p0) {
    if (v_xy.size() != t.size() || yaw.size() != t.size())
        throw AnalysisError("dead reckoning channels are not aligned");
    if (!std::isfinite(p0.x) || !std::isfinite(p0.y)) throw AnalysisError("start position must be finite");
    Track tr;
    tr.t.assign(t.begin(), t.end());
    tr.x.resize(t.size());
    tr.y.resize(t.size());
    if (t.empty()) return tr;
    tr.x[0] = p0.x;
    tr.y[0] = p0.y;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        tr.x[i + 1] = tr.x[i] + v_xy[i] * std::cos(yaw[i]) * dt;
        tr.y[i + 1] = tr.y[i] + v_xy[i] * std::sin(yaw[i]) * dt;
    }
    return tr;
}

/// Dead reckoning over samples [begin, end) of a kinematic series.
inline Track dead_reckon(const KinematicSeries& k, Point2 p0, std::size_t begin = 0,
                         std::size_t end = static_cast<std::size_t>(-1)) {
    end = std::min(end, k.size());
    if (begin > end) throw AnalysisError("dead reckoning window is inverted");
    const std::size_t n = end - begin;
    return dead_reckon(std::span(k.t).subspan(begin, n), std::span(k.v_xy).subspan(begin, n),
                       std::span(k.yaw).subspan(begin, n), k.dt, p0);
}

inline constexpr double kCurvatureEpsilon = 1e-6;

/// Radius of curvature from central first and second differences. Samples
/// whose cross term falls below `eps` (straight motion) and the two end
/// samples are +inf.
inline Channel curvature_radius(std::span<const double> x, std::span<const double> y, double dt,
                                double eps = kCurvatureEpsilon) {
    if (x.size() != y.size()) throw AnalysisError("curvature channels are not aligned");
    const std::size_t n = x.size();
    Channel r(n, kInf);
    if (n < 3) return r;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double xd = (x[i + 1] - x[i - 1]) / (2.0 * dt);
        const double yd = (y[i + 1] - y[i - 1]) / (2.0 * dt);
        const double xdd = (x[i + 1] - 2.0 * x[i] + x[i - 1]) / (dt * dt);
        const double ydd = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (dt * dt);
        const double cross = std::abs(xd * ydd - yd * xdd);
        if (cross < eps) continue;
        r[i] = std::pow(xd * xd + yd * yd, 1.5) / cross;
    }
    return r;
}

inline void attach_curvature(Track& tr, double dt, double eps = kCurvatureEpsilon) {
    tr.radius = curvature_radius(tr.x, tr.y, dt, eps);
}

/// Kasa algebraic least-squares circle: minimizes sum (x^2 + y^2 + D x + E y + F)^2.
inline CircleFit fit_circle(std::span<const Point2> pts) {
    if (pts.size() < 3) throw AnalysisError("circle fit needs at least 3 points");
    // Center the data for conditioning.
    double mx = 0.0, my = 0.0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());

    double suu = 0, svv = 0, suv = 0, suuu = 0, svvv = 0, suvv = 0, svuu = 0;
    double scale = 0.0;
    for (const auto& p : pts) scale = std::max({scale, std::abs(p.x - mx), std::abs(p.y - my)});
    if (scale == 0.0) throw AnalysisError("collinear points");
    for (const auto& p : pts) {
        const double u = (p.x - mx) / scale, v = (p.y - my) / scale;
        suu += u * u;
        svv += v * v;
        suv += u * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suvv += u * v * v;
        svuu += v * u * u;
    }
    // Normal equations for the centre (uc, vc) in centred, scaled coordinates.
    const double a11 = suu, a12 = suv, a22 = svv;
    const double b1 = 0.5 * (suuu + suvv), b2 = 0.5 * (svvv + svuu);
    const double det = a11 * a22 - a12 * a12;
    if (std::abs(det) < 1e-12 * std::max(1.0, a11 * a22)) throw AnalysisError("collinear points");
    const double uc = (b1 * a22 - b2 * a12) / det;
    const double vc = (a11 * b2 - a12 * b1) / det;
    const double n = static_cast<double>(pts.size());
    const double r2 = uc * uc + vc * vc + (suu + svv) / n;

    CircleFit fit;
    fit.cx = mx + uc * scale;
    fit.cy = my + vc * scale;
    fit.radius = std::sqrt(r2) * scale;
    double ss = 0.0;
    for (const auto& p : pts) {
        const double d = std::hypot(p.x - fit.cx, p.y - fit.cy) - fit.radius;
        ss += d * d;
    }
    fit.rms_residual = std::sqrt(ss / n);
    return fit;
}

/// Translates each track so its corner sample is the origin and rotates it
/// so the mean pre-corner heading points along +x.
inline std::vector<Track> align_at_corner(std::span<const Track> tracks,
                                          std::span<const std::optional<std::size_t>> corner_indices) {
    if (tracks.size() != corner_indices.size()) throw AnalysisError("one corner index per track is required");
    std::vector<Track> out;
    out.reserve(tracks.size());
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        const Track& tr = tracks[k];
        if (!corner_indices[k] || *corner_indices[k] >= tr.size())
            throw AnalysisError("missing corner index for track " + std::to_string(k));
        const std::size_t c = *corner_indices[k];
        double hx = 0.0, hy = 0.0;
        for (std::size_t i = 0; i < c; ++i) {
            const double dx = tr.x[i + 1] - tr.x[i], dy = tr.y[i + 1] - tr.y[i];
            const double len = std::hypot(dx, dy);
            if (len > 0.0) {
                hx += dx / len;
                hy += dy / len;
            }
        }
        const double heading = (hx == 0.0 && hy == 0.0) ? 0.0 : std::atan2(hy, hx);
        const double cs = std::cos(-heading), sn = std::sin(-heading);
        Track a = tr;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const double dx = tr.x[i] - tr.x[c], dy = tr.y[i] - tr.y[c];
            a.x[i] = cs * dx - sn * dy;
            a.y[i] = sn * dx + cs * dy;
        }
        a.x[c] = 0.0;
        a.y[c] = 0.0;
        out.push_back(std::move(a));
    }
    return out;
}

/// Polyline length of a track.
inline double path_length(const Track& tr) {
    double s = 0.0;
    for (std::size_t i = 1; i < tr.size(); ++i) s += std::hypot(tr.x[i] - tr.x[i - 1], tr.y[i] - tr.y[i - 1]);
    return s;
}

inline std::string track_to_geojson(std::span<const Track> laps, const GeoPoint& origin) {
    nlohmann::json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = nlohmann::json::array();
    for (std::size_t k = 0; k < laps.size(); ++k) {
        nlohmann::json coords = nlohmann::json::array();
        for (std::size_t i = 0; i < laps[k].size(); ++i) {
            const GeoPoint g = local_to_latlon(laps[k].point(i), origin);
            coords.push_back({g.lon, g.lat});
        }
        nlohmann::json f;
        f["type"] = "Feature";
        f["properties"] = {{"lap", k + 1}};
        f["geometry"] = {{"type", "LineString"}, {"coordinates", coords}};
        fc["features"].push_back(f);
    }
    return fc.dump(1) + "\n";
}

}  // namespace dolphinlap
