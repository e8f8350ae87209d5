#pragma once

// Tag-channel ingestion: CSV parsing, master-timeline resampling, centered
// moving-average smoothing, yaw unwrapping and the local tangent-plane
// projection used for lagoon boundaries.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "dolphinlap/error.hpp"
#include "dolphinlap/io.hpp"
#include "dolphinlap/types.hpp"

namespace dolphinlap {

/// Native-rate IMU stream (nominally 50 Hz).
struct ImuSeries {
    std::vector<double> t;
    std::vector<Vec3> accel;  // m/s^2, body frame
    std::vector<Vec3> gyro;   // rad/s, body frame
    std::vector<Vec3> mag;    // normalized, body frame; empty when absent
    bool has_mag() const { return !mag.empty() && mag.size() == t.size(); }
    std::size_t size() const { return t.size(); }
};

/// Raw tag channels at their native rates.
struct TagSeries {
    ImuSeries imu;
    TimedChannel depth;  // m, positive down (nominally 5 Hz)
    TimedChannel speed;  // m/s, body-forward turbine speed (nominally 5 Hz)
    TimedChannel temp;   // degC, optional
    /// 1-based data-row numbers that carried non-finite or out-of-range
    /// values. Those cells are excluded from their channel group.
    std::vector<std::size_t> flagged_rows;
};

/// Uniform analysis grid; every downstream equation runs on it.
struct MasterTimeline {
    double t0 = 0.0;
    double dt = 0.2;
    std::size_t n = 0;

    double at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    double end() const { return n ? at(n - 1) : t0; }

    std::vector<double> times() const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = at(i);
        return out;
    }

    /// Largest grid starting at `start` that stays inside [start, stop].
    static MasterTimeline covering(double start, double stop, double dt) {
        if (!(dt > 0.0)) throw AnalysisError("timeline dt must be positive");
        if (stop < start) throw AnalysisError("timeline stop precedes start");
        const auto steps = static_cast<std::size_t>(std::floor((stop - start) / dt + 1e-9));
        return {start, dt, steps + 1};
    }
};

/// Logical channel name -> CSV header name. Unlisted names map to themselves.
struct ColumnSchema {
    std::map<std::string, std::string> columns;

    std::string header_for(const std::string& logical) const {
        auto it = columns.find(logical);
        return it == columns.end() ? logical : it->second;
    }
};

inline TagSeries parse_tag_csv(std::istream& in, const ColumnSchema& schema = {}) {
    const io::Table table = io::read_table(in);
    if (table.rows.empty()) throw InputError("empty file");

    auto col = [&](const std::string& logical, bool required) {
        const int c = table.column(schema.header_for(logical));
        if (c < 0 && required)
            throw InputError("missing column '" + schema.header_for(logical) + "'");
        return c;
    };
    const int ct = col("t", true);
    const int ca[3] = {col("ax", true), col("ay", true), col("az", true)};
    const int cg[3] = {col("gx", true), col("gy", true), col("gz", true)};
    const int cm[3] = {col("mx", false), col("my", false), col("mz", false)};
    const int cd = col("depth", true);
    const int cs = col("speed", true);
    const int ctemp = col("temp", false);
    const bool mag_columns = cm[0] >= 0 && cm[1] >= 0 && cm[2] >= 0;

    TagSeries out;
    bool mag_everywhere = mag_columns;
    std::vector<Vec3> mags;
    double last_t = -kInf;

    auto cell = [&](const std::vector<std::string>& row, int c, double& v) {
        if (c < 0 || static_cast<std::size_t>(c) >= row.size()) return false;
        return io::parse_cell(row[c], v);
    };

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        double t = 0.0;
        if (!cell(row, ct, t) || !std::isfinite(t))
            throw InputError("row " + std::to_string(r + 1) + ": missing or non-finite time");
        if (!(t > last_t))
            throw InputError("non-monotone time at row " + std::to_string(r + 1));
        last_t = t;
        bool flagged = false;

        Vec3 a{}, g{}, m{};
        int present = 0;
        for (int k = 0; k < 3; ++k) {
            present += cell(row, ca[k], a[k]);
            present += cell(row, cg[k], g[k]);
        }
        if (present == 6) {
            const bool finite = std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); }) &&
                                std::all_of(g.begin(), g.end(), [](double v) { return std::isfinite(v); });
            if (finite) {
                bool mag_ok = mag_columns;
                if (mag_columns) {
                    int mp = 0;
                    for (int k = 0; k < 3; ++k) mp += cell(row, cm[k], m[k]);
                    mag_ok = mp == 3 && std::isfinite(m[0]) && std::isfinite(m[1]) && std::isfinite(m[2]);
                }
                if (mag_columns && !mag_ok) mag_everywhere = false;
                out.imu.t.push_back(t);
                out.imu.accel.push_back(a);
                out.imu.gyro.push_back(g);
                mags.push_back(m);
            } else {
                flagged = true;
            }
        } else if (present != 0) {
            flagged = true;  // partial IMU row
        }

        double v = 0.0;
        if (cell(row, cd, v)) {
            if (std::isfinite(v) && v >= 0.0) {
                out.depth.t.push_back(t);
                out.depth.value.push_back(v);
            } else {
                flagged = true;
            }
        }
        if (cell(row, cs, v)) {
            if (std::isfinite(v) && v >= 0.0) {
                out.speed.t.push_back(t);
                out.speed.value.push_back(v);
            } else {
                flagged = true;
            }
        }
        if (cell(row, ctemp, v)) {
            if (std::isfinite(v)) {
                out.temp.t.push_back(t);
                out.temp.value.push_back(v);
            } else {
                flagged = true;
            }
        }
        if (flagged) out.flagged_rows.push_back(r + 1);
    }
    if (mag_everywhere && !mags.empty()) out.imu.mag = std::move(mags);
    return out;
}

inline TagSeries parse_tag_csv(const std::string& path, const ColumnSchema& schema = {}) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_tag_csv(in, schema);
}

/// Linear interpolation of `series` at every timeline instant. Never
/// extrapolates: the timeline must lie inside the channel's support.
inline Channel resample_linear(const TimedChannel& series, const MasterTimeline& timeline) {
    if (series.size() < 2) throw AnalysisError("resample needs at least 2 samples");
    const double tol = 1e-9 * std::max(1.0, std::abs(series.t.back()));
    if (timeline.n == 0) return {};
    if (timeline.at(0) < series.t.front() - tol || timeline.end() > series.t.back() + tol)
        throw AnalysisError("timeline extends beyond channel support");

    Channel out(timeline.n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < timeline.n; ++i) {
        const double t = timeline.at(i);
        while (j + 2 < series.size() && series.t[j + 1] <= t) ++j;
        const double t0 = series.t[j], t1 = series.t[j + 1];
        const double w = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
        // Hitting a sample exactly returns it unchanged.
        out[i] = w == 0.0 ? series.value[j] : w == 1.0 ? series.value[j + 1]
                                                       : series.value[j] + w * (series.value[j + 1] - series.value[j]);
    }
    return out;
}

/// Number of samples in a centered window of `window_s` seconds, forced odd.
inline std::size_t moving_average_width(double window_s, double dt) {
    auto w = static_cast<std::size_t>(std::llround(window_s / dt));
    if (w < 1) w = 1;
    if (w % 2 == 0) ++w;
    return w;
}

/// Centered moving average. Near the edges the window shrinks symmetrically
/// so that it stays centered on the output sample.
inline Channel moving_average(std::span<const double> x, double window_s, double dt) {
    if (x.empty()) throw AnalysisError("moving average of an empty channel");
    if (!(window_s > 0.0) || !(dt > 0.0)) throw AnalysisError("moving average window must be positive");
    const std::size_t half = moving_average_width(window_s, dt) / 2;
    const std::size_t n = x.size();

    Channel out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = std::min({half, i, n - 1 - i});
        double sum = 0.0;
        for (std::size_t j = i - k; j <= i + k; ++j) sum += x[j];
        out[i] = sum / static_cast<double>(2 * k + 1);
    }
    return out;
}

/// Removes 2*pi jumps so consecutive samples differ by less than pi.
inline Channel unwrap(std::span<const double> angle) {
    Channel out(angle.begin(), angle.end());
    double offset = 0.0;
    for (std::size_t i = 1; i < out.size(); ++i) {
        double d = angle[i] - angle[i - 1];
        if (d > kPi) offset -= 2.0 * kPi * std::round(d / (2.0 * kPi));
        else if (d < -kPi) offset += 2.0 * kPi * std::round(-d / (2.0 * kPi));
        out[i] = angle[i] + offset;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Geographic conversion

inline constexpr double kEarthRadius = 6371000.0;

struct GeoPoint {
    double lat = 0.0;  // deg
    double lon = 0.0;  // deg
};

/// Equirectangular local tangent plane: x east, y north, metres.
inline Point2 latlon_to_local(double lat, double lon, const GeoPoint& origin) {
    if (std::abs(lat) > 90.0) throw InputError("latitude out of range");
    const double x = kEarthRadius * std::cos(deg2rad(origin.lat)) * deg2rad(lon - origin.lon);
    const double y = kEarthRadius * deg2rad(lat - origin.lat);
    return {x, y};
}

inline GeoPoint local_to_latlon(const Point2& p, const GeoPoint& origin) {
    const double lat = origin.lat + rad2deg(p.y / kEarthRadius);
    const double lon = origin.lon + rad2deg(p.x / (kEarthRadius * std::cos(deg2rad(origin.lat))));
    return {lat, lon};
}

struct LagoonBoundary {
    std::vector<Point2> vertices;  // local metres, ring not repeated
    GeoPoint origin;
};

namespace detail {

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool segments_cross(const Point2& p1, const Point2& p2, const Point2& q1, const Point2& q2) {
    const double d1 = cross(q1, q2, p1), d2 = cross(q1, q2, p2);
    const double d3 = cross(p1, p2, q1), d4 = cross(p1, p2, q2);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

}  // namespace detail

inline bool polygon_is_simple(std::span<const Point2> v) {
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // adjacent edges
            if (detail::segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) return false;
        }
    }
    return true;
}

/// Reads a GeoJSON Polygon (bare geometry, Feature or first Feature of a
/// FeatureCollection). The outer ring is projected about `origin`, or about
/// its first vertex when no origin is given.
inline LagoonBoundary parse_boundary_geojson(const nlohmann::json& doc, std::optional<GeoPoint> origin = {}) {
    const nlohmann::json* geom = &doc;
    if (doc.value("type", "") == "FeatureCollection") {
        if (!doc.contains("features") || doc["features"].empty())
            throw InputError("boundary FeatureCollection has no features");
        geom = &doc["features"][0];
    }
    if (geom->value("type", "") == "Feature") geom = &(*geom)["geometry"];
    if (geom->value("type", "") != "Polygon") throw InputError("boundary must be a GeoJSON Polygon");
    const auto& ring = (*geom)["coordinates"].at(0);

    std::vector<GeoPoint> pts;
    for (const auto& c : ring) pts.push_back({c.at(1).get<double>(), c.at(0).get<double>()});
    if (pts.size() >= 2 && pts.front().lat == pts.back().lat && pts.front().lon == pts.back().lon) pts.pop_back();
    if (pts.size() < 3) throw InputError("boundary polygon needs at least 3 vertices");

    LagoonBoundary b;
    b.origin = origin.value_or(pts.front());
    for (const auto& p : pts) b.vertices.push_back(latlon_to_local(p.lat, p.lon, b.origin));
    if (!polygon_is_simple(b.vertices)) throw InputError("boundary polygon is self-intersecting");
    return b;
}

inline LagoonBoundary load_boundary(const std::string& path, std::optional<GeoPoint> origin = {}) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("boundary '" + path + "': " + e.what());
    }
    return parse_boundary_geojson(doc, origin);
}

}  // namespace dolphinlap
