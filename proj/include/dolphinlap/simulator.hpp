#pragma once

// Synthetic lap trials with analytic ground truth.
//
// A lap is a straight leg, a semicircular corner and a straight return leg.
// The planar speed follows cosine ramps between constant-speed holds, so
// distance, speed and acceleration are closed-form in time. Pitch is a
// depth-slope term plus a fluke oscillation; the turbine reads the planar
// speed divided by cos(pitch). Tag channels are generated from the same
// closed-form state: body rates from the Euler-angle rates, accelerometer
// from gravity plus the path acceleration, magnetometer from a fixed field.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "dolphinlap/energetics.hpp"
#include "dolphinlap/error.hpp"
#include "dolphinlap/ingest.hpp"
#include "dolphinlap/io.hpp"
#include "dolphinlap/orientation.hpp"
#include "dolphinlap/types.hpp"

namespace dolphinlap::sim {

struct SpeedProfile {
    double cruise = 4.0;         // m/s, outgoing straight
    double corner = 2.0;         // m/s, through the semicircle
    double ret = 4.0;            // m/s, return straight
    double accel = 1.0;          // m/s^2, mean start-up acceleration
    double corner_decel = 1.0;   // m/s^2, mean braking into the corner
    double return_accel = 1.0;   // m/s^2, mean acceleration out of the corner
    double glide_decel = 1.0;    // m/s^2, mean deceleration of the terminal glide
};

struct DepthProfile {
    double station = 0.4;  // m
    double outgoing = 1.5;
    double corner = 1.0;
    double ret = 1.8;
};

struct NoiseModel {
    double accel = 0.0;  // m/s^2
    double gyro = 0.0;   // rad/s
    double mag = 0.0;    // normalized units
    double depth = 0.0;  // m
    double speed = 0.0;  // m/s
};

enum class TurnPattern { left, right, alternate };

struct LapScenario {
    std::string name = "default";
    double straight_length = 30.0;  // m
    double corner_radius = 1.5;     // m
    SpeedProfile speed;
    double fluke_frequency = 1.7;      // Hz
    double fluke_amplitude_deg = 8.0;  // deg
    DepthProfile depth;
    AnimalParams animal = AnimalParams::tt01();
    NoiseModel noise;
    std::uint64_t seed = 1;

    int laps = 8;
    double rest_before = 5.0;    // s
    double station_rest = 7.0;   // s between laps
    double rest_after = 5.0;     // s
    TurnPattern turns = TurnPattern::alternate;
    double start_heading = 0.0;  // rad
    Point2 start{0.0, 0.0};
    double mag_declination = 0.0;        // rad, horizontal field angle from +x
    double mag_inclination_deg = 35.0;   // deg, field dip below horizontal
    double imu_rate = 50.0;              // Hz
    double aux_rate = 5.0;               // Hz, depth and speed
    double temperature = 25.0;           // degC

    void validate() const;
};

/// Phase of the prescribed motion, used only as ground-truth labelling.
enum class Segment { rest, accel, cruise, brake, corner, recover, cruise_return, glide };

inline const char* segment_name(Segment s) {
    switch (s) {
        case Segment::rest: return "rest";
        case Segment::accel: return "accel";
        case Segment::cruise: return "cruise";
        case Segment::brake: return "brake";
        case Segment::corner: return "corner";
        case Segment::recover: return "recover";
        case Segment::cruise_return: return "cruise_return";
        case Segment::glide: return "glide";
    }
    return "?";
}

/// Closed-form kinematic state at one instant.
struct TruthState {
    double t = 0.0;
    double x = 0.0, y = 0.0;
    double v = 0.0;       // turbine (body-forward) speed
    double v_xy = 0.0;    // planar speed
    double a_xy = 0.0;    // d v_xy / dt
    double a_t = 0.0;     // d v / dt
    double yaw = 0.0;     // cumulative
    double yaw_rate = 0.0;
    double pitch = 0.0;
    double pitch_rate = 0.0;
    double depth = 0.0;
    double depth_accel = 0.0;
    double a_n = 0.0;     // yaw_rate * v
    int lap = -1;         // 0-based, -1 at rest
    Segment segment = Segment::rest;
    bool fluking = false;
};

/// Ground-truth lap timing, absolute seconds.
struct TruthLap {
    double start = 0.0;
    double corner_entry = 0.0;
    double apex = 0.0;
    double corner_exit = 0.0;
    double glide_start = 0.0;
    double end = 0.0;
    double path_length = 0.0;
    int turn_sign = 1;  // +1 left (counter-clockwise), -1 right
};

namespace detail {

// Cosine ramp from v1 to v2 over T seconds; exact distance and derivatives.
struct Ramp {
    double t0 = 0.0, duration = 0.0, v1 = 0.0, v2 = 0.0, s0 = 0.0;
    Segment segment = Segment::cruise;

    double end() const { return t0 + duration; }
    double distance() const { return 0.5 * (v1 + v2) * duration; }

    void eval(double t, double& s, double& v, double& a) const {
        const double tau = std::clamp(t - t0, 0.0, duration);
        if (duration <= 0.0) {
            s = s0;
            v = v2;
            a = 0.0;
            return;
        }
        const double w = kPi / duration;
        const double dv = v2 - v1;
        v = v1 + 0.5 * dv * (1.0 - std::cos(w * tau));
        a = 0.5 * dv * w * std::sin(w * tau);
        s = s0 + v1 * tau + 0.5 * dv * (tau - std::sin(w * tau) / w);
    }
};

// Cosine blend between two levels; returns value, first and second derivative.
inline void cosine_blend(double t, double t0, double duration, double y1, double y2, double& y, double& yd,
                         double& ydd) {
    if (duration <= 0.0 || t >= t0 + duration) {
        y = y2;
        yd = ydd = 0.0;
        return;
    }
    if (t <= t0) {
        y = y1;
        yd = ydd = 0.0;
        return;
    }
    const double w = kPi / duration, tau = t - t0, dy = y2 - y1;
    y = y1 + 0.5 * dy * (1.0 - std::cos(w * tau));
    yd = 0.5 * dy * w * std::sin(w * tau);
    ydd = 0.5 * dy * w * w * std::cos(w * tau);
}

// Smooth 0 -> 1 step with zero slope at both ends.
inline void smooth_step(double t, double t0, double duration, double& e, double& ed) {
    double dummy;
    cosine_blend(t, t0, duration, 0.0, 1.0, e, ed, dummy);
}

}  // namespace detail

inline void LapScenario::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string("scenario field '") + what + "' must be positive");
    };
    positive(straight_length, "straight_length");
    positive(corner_radius, "corner_radius");
    positive(speed.cruise, "speed.cruise");
    positive(speed.corner, "speed.corner");
    positive(speed.ret, "speed.return");
    positive(speed.accel, "speed.accel");
    positive(speed.corner_decel, "speed.corner_decel");
    positive(speed.return_accel, "speed.return_accel");
    positive(speed.glide_decel, "speed.glide_decel");
    positive(fluke_frequency, "fluke_frequency");
    positive(imu_rate, "imu_rate");
    positive(aux_rate, "aux_rate");
    if (fluke_amplitude_deg < 0.0) throw InputError("scenario field 'fluke_amplitude_deg' must be non-negative");
    if (laps < 1) throw InputError("scenario field 'laps' must be at least 1");
    if (rest_before < 0.0 || station_rest < 0.0 || rest_after < 0.0) throw InputError("rest durations must be non-negative");
    if (depth.station < 0.0 || depth.outgoing < 0.0 || depth.corner < 0.0 || depth.ret < 0.0)
        throw InputError("depths must be non-negative");
    const double ratio = imu_rate / aux_rate;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) throw InputError("imu_rate must be an integer multiple of aux_rate");
    for (double sd : {noise.accel, noise.gyro, noise.mag, noise.depth, noise.speed})
        if (sd < 0.0) throw InputError("noise standard deviations must be non-negative");
    animal.validate();
}

/// Evaluates the prescribed trial at arbitrary times.
class TrialModel {
   public:
    explicit TrialModel(const LapScenario& sc) : sc_(sc) {
        sc_.validate();
        build();
    }

    const LapScenario& scenario() const { return sc_; }
    const std::vector<TruthLap>& laps() const { return laps_; }
    double duration() const { return duration_; }

    TruthState state(double t) const {
        TruthState st;
        st.t = t;
        const std::size_t k = lap_index_at(t);
        const LapPlan& lp = plans_[k];
        if (t < lp.ramps.front().t0 || t > lp.ramps.back().end()) return rest_state(t, k);

        st.lap = static_cast<int>(k);
        const detail::Ramp* r = &lp.ramps.front();
        for (const auto& ramp : lp.ramps)
            if (t >= ramp.t0) r = &ramp;
        double s = 0.0;
        r->eval(t, s, st.v_xy, st.a_xy);
        st.segment = r->segment;

        // Geometry in the lap frame: u along the first leg, n to its left.
        const double L = sc_.straight_length, R = sc_.corner_radius, sg = lp.sign;
        const double ux = std::cos(lp.heading), uy = std::sin(lp.heading);
        const double nx = -uy, ny = ux;
        double along = 0.0, side = 0.0, turn = 0.0;
        st.yaw_rate = 0.0;
        if (s <= L) {
            along = s;
        } else if (s <= L + kPi * R) {
            const double phi = (s - L) / R;
            along = L + R * std::sin(phi);
            side = sg * R * (1.0 - std::cos(phi));
            turn = sg * phi;
            st.yaw_rate = sg * st.v_xy / R;
        } else {
            along = L - (s - L - kPi * R);
            side = sg * 2.0 * R;
            turn = sg * kPi;
        }
        st.x = lp.origin.x + along * ux + side * nx;
        st.y = lp.origin.y + along * uy + side * ny;
        st.yaw = lp.heading + turn;

        // Depth: cosine blends during the start-up, braking, recovery and glide ramps.
        const auto& d = sc_.depth;
        double dep = d.station, dd = 0.0, ddd = 0.0;
        const detail::Ramp& acc = lp.ramps[0];
        const detail::Ramp& brk = lp.ramps[2];
        const detail::Ramp& rec = lp.ramps[4];
        const detail::Ramp& gl = lp.ramps[6];
        if (t < brk.t0) detail::cosine_blend(t, acc.t0, acc.duration, d.station, d.outgoing, dep, dd, ddd);
        else if (t < rec.t0) detail::cosine_blend(t, brk.t0, brk.duration, d.outgoing, d.corner, dep, dd, ddd);
        else if (t < gl.t0) detail::cosine_blend(t, rec.t0, rec.duration, d.corner, d.ret, dep, dd, ddd);
        else detail::cosine_blend(t, gl.t0, gl.duration, d.ret, d.station, dep, dd, ddd);
        st.depth = dep;
        st.depth_accel = ddd;

        // Pitch: depth slope (nose down while descending) plus fluke stroke.
        const double ve = st.v_xy + kSlopeSpeed;
        const double u = -dd / ve;
        const double udot = (-ddd * ve + dd * st.a_xy) / (ve * ve);
        double pitch = std::atan(u);
        double pitch_rate = udot / (1.0 + u * u);

        double on = 0.0, on_d = 0.0, off = 0.0, off_d = 0.0;
        detail::smooth_step(t, acc.t0, kFlukeRamp, on, on_d);
        detail::smooth_step(t, gl.t0, kFlukeRamp, off, off_d);
        const double env = on * (1.0 - off);
        const double env_d = on_d * (1.0 - off) - on * off_d;
        const double amp = deg2rad(sc_.fluke_amplitude_deg);
        const double w = 2.0 * kPi * sc_.fluke_frequency;
        const double ph = w * (t - acc.t0);
        pitch += amp * env * std::sin(ph);
        pitch_rate += amp * (env_d * std::sin(ph) + env * w * std::cos(ph));
        st.pitch = pitch;
        st.pitch_rate = pitch_rate;
        st.fluking = env > 0.5;

        const double c = std::cos(pitch);
        st.v = st.v_xy / c;
        st.a_t = st.a_xy / c + st.v_xy * std::sin(pitch) * pitch_rate / (c * c);
        st.a_n = st.yaw_rate * st.v;
        return st;
    }

    /// Body-frame specific force (accelerometer reading, m/s^2).
    Vec3 specific_force(const TruthState& st) const {
        const double cy = std::cos(st.yaw), sy = std::sin(st.yaw);
        const double a_lat = st.yaw_rate * st.v_xy;
        const Vec3 world{st.a_xy * cy - a_lat * sy, st.a_xy * sy + a_lat * cy, -st.depth_accel + kGravity};
        return euler_to_quat({st.pitch, 0.0, st.yaw}).rotate_inverse(world);
    }

    /// Body angular rate for roll-free motion (gyro reading, rad/s).
    static Vec3 body_rate(const TruthState& st) {
        return {st.yaw_rate * std::sin(st.pitch), -st.pitch_rate, st.yaw_rate * std::cos(st.pitch)};
    }

    /// Unit magnetic field in the body frame.
    Vec3 magnetic_field(const TruthState& st) const {
        const double inc = deg2rad(sc_.mag_inclination_deg), dec = sc_.mag_declination;
        const Vec3 world{std::cos(inc) * std::cos(dec), std::cos(inc) * std::sin(dec), -std::sin(inc)};
        return euler_to_quat({st.pitch, 0.0, st.yaw}).rotate_inverse(world);
    }

    static constexpr double kGravity = 9.81;

   private:
    static constexpr double kSlopeSpeed = 0.5;  // m/s, keeps the slope pitch finite at rest
    static constexpr double kFlukeRamp = 0.4;   // s, fluke amplitude on/off blend
    static constexpr double kReorientTime = 4.0;

    struct LapPlan {
        std::vector<detail::Ramp> ramps;  // accel, cruise, brake, corner, recover, cruise_return, glide
        Point2 origin;
        double heading = 0.0;
        double sign = 1.0;
    };

    void build() {
        const auto& sp = sc_.speed;
        const double L = sc_.straight_length, R = sc_.corner_radius;
        if (sp.corner > sp.cruise || sp.corner > sp.ret)
            throw InputError("infeasible profile: corner speed exceeds straight-leg speed");

        double t = sc_.rest_before;
        Point2 origin = sc_.start;
        double heading = sc_.start_heading;
        for (int k = 0; k < sc_.laps; ++k) {
            LapPlan lp;
            lp.origin = origin;
            lp.heading = heading;
            lp.sign = sc_.turns == TurnPattern::right ? -1.0
                      : sc_.turns == TurnPattern::left ? 1.0
                                                       : (k % 2 == 0 ? 1.0 : -1.0);

            const double t_acc = sp.cruise / sp.accel;
            const double t_brk = (sp.cruise - sp.corner) / sp.corner_decel;
            const double d_out = L - 0.5 * sp.cruise * t_acc - 0.5 * (sp.cruise + sp.corner) * t_brk;
            const double t_rec = (sp.ret - sp.corner) / sp.return_accel;
            const double t_gl = sp.ret / sp.glide_decel;
            const double d_ret = L - 0.5 * (sp.corner + sp.ret) * t_rec - 0.5 * sp.ret * t_gl;
            if (d_out < 0.0 || d_ret < 0.0)
                throw InputError("infeasible profile: straight legs too short for the speed ramps");

            const struct {
                double duration, v1, v2;
                Segment seg;
            } plan[7] = {{t_acc, 0.0, sp.cruise, Segment::accel},
                         {d_out / sp.cruise, sp.cruise, sp.cruise, Segment::cruise},
                         {t_brk, sp.cruise, sp.corner, Segment::brake},
                         {kPi * R / sp.corner, sp.corner, sp.corner, Segment::corner},
                         {t_rec, sp.corner, sp.ret, Segment::recover},
                         {d_ret / sp.ret, sp.ret, sp.ret, Segment::cruise_return},
                         {t_gl, sp.ret, 0.0, Segment::glide}};
            double s = 0.0;
            for (const auto& p : plan) {
                detail::Ramp r;
                r.t0 = t;
                r.duration = p.duration;
                r.v1 = p.v1;
                r.v2 = p.v2;
                r.s0 = s;
                r.segment = p.seg;
                s += r.distance();
                t += r.duration;
                lp.ramps.push_back(r);
            }

            TruthLap tl;
            tl.start = lp.ramps[0].t0;
            tl.corner_entry = lp.ramps[3].t0;
            tl.corner_exit = lp.ramps[3].end();
            tl.apex = 0.5 * (tl.corner_entry + tl.corner_exit);
            tl.glide_start = lp.ramps[6].t0;
            tl.end = lp.ramps[6].end();
            tl.path_length = s;
            tl.turn_sign = lp.sign > 0 ? 1 : -1;
            laps_.push_back(tl);

            const double ux = std::cos(heading), uy = std::sin(heading);
            origin = {origin.x - lp.sign * 2.0 * R * uy, origin.y + lp.sign * 2.0 * R * ux};
            // Turn back towards the far end while stationed, same hand as the corner.
            heading += lp.sign * 2.0 * kPi;
            plans_.push_back(std::move(lp));
            t += (k + 1 < sc_.laps) ? sc_.station_rest : sc_.rest_after;
        }
        duration_ = t;
    }

    std::size_t lap_index_at(double t) const {
        std::size_t k = 0;
        while (k + 1 < plans_.size() && t > plans_[k].ramps.back().end()) ++k;
        return k;
    }

    TruthState rest_state(double t, std::size_t k) const {
        TruthState st;
        st.t = t;
        st.depth = sc_.depth.station;
        const LapPlan& lp = plans_[k];
        if (t < lp.ramps.front().t0) {
            // Before lap k: at its start point, facing along its first leg.
            st.x = lp.origin.x;
            st.y = lp.origin.y;
            st.yaw = lp.heading;
            if (k > 0) {
                // Reorient in place after the previous lap (half turn, same hand).
                const LapPlan& prev = plans_[k - 1];
                const double t0 = prev.ramps.back().end();
                const double rest = lp.ramps.front().t0 - t0;
                const double dur = std::min(kReorientTime, 0.8 * rest);
                const double start = t0 + 0.5 * (rest - dur);
                double y, yd, ydd;
                detail::cosine_blend(t, start, dur, prev.heading + prev.sign * kPi, lp.heading, y, yd, ydd);
                st.yaw = y;
                st.yaw_rate = yd;
            }
            return st;
        }
        // After the final lap.
        const double ux = std::cos(lp.heading), uy = std::sin(lp.heading);
        st.x = lp.origin.x - lp.sign * 2.0 * sc_.corner_radius * uy;
        st.y = lp.origin.y + lp.sign * 2.0 * sc_.corner_radius * ux;
        st.yaw = lp.heading + lp.sign * kPi;
        return st;
    }

    LapScenario sc_;
    std::vector<LapPlan> plans_;
    std::vector<TruthLap> laps_;
    double duration_ = 0.0;
};

/// Ground truth sampled on the analysis grid.
struct TruthSeries {
    double dt = 0.2;
    std::vector<TruthState> samples;
    std::vector<TruthLap> laps;
};

inline std::size_t sample_count(double duration, double rate) {
    return static_cast<std::size_t>(std::llround(duration * rate));
}

/// Aux rows sit on every ratio-th IMU row starting with the first.
inline std::size_t aux_sample_count(double duration, double imu_rate, double aux_rate) {
    const auto ratio = static_cast<std::size_t>(std::llround(imu_rate / aux_rate));
    return (sample_count(duration, imu_rate) + ratio - 1) / ratio;
}

inline TruthSeries generate_truth(const LapScenario& sc) {
    const TrialModel model(sc);
    TruthSeries out;
    out.dt = 1.0 / sc.aux_rate;
    out.laps = model.laps();
    const std::size_t n = aux_sample_count(model.duration(), sc.imu_rate, sc.aux_rate);
    out.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.samples.push_back(model.state(static_cast<double>(i) / sc.aux_rate));
    return out;
}

/// Tag channels for the scenario: IMU at imu_rate, depth/speed/temperature at
/// aux_rate on the same clock. Deterministic for a fixed seed.
inline TagSeries synthesize_tag(const LapScenario& sc) {
    const TrialModel model(sc);
    std::mt19937_64 rng(sc.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    auto noisy = [&](double v, double sd) { return sd > 0.0 ? v + sd * unit(rng) : v; };

    TagSeries tag;
    const std::size_t n_imu = sample_count(model.duration(), sc.imu_rate);
    const auto ratio = static_cast<std::size_t>(std::llround(sc.imu_rate / sc.aux_rate));
    for (std::size_t i = 0; i < n_imu; ++i) {
        const double t = static_cast<double>(i) / sc.imu_rate;
        const TruthState st = model.state(t);
        const Vec3 f = model.specific_force(st);
        const Vec3 w = TrialModel::body_rate(st);
        const Vec3 m = model.magnetic_field(st);
        tag.imu.t.push_back(t);
        tag.imu.accel.push_back({noisy(f[0], sc.noise.accel), noisy(f[1], sc.noise.accel), noisy(f[2], sc.noise.accel)});
        tag.imu.gyro.push_back({noisy(w[0], sc.noise.gyro), noisy(w[1], sc.noise.gyro), noisy(w[2], sc.noise.gyro)});
        tag.imu.mag.push_back({noisy(m[0], sc.noise.mag), noisy(m[1], sc.noise.mag), noisy(m[2], sc.noise.mag)});
        if (i % ratio == 0) {
            const double ta = static_cast<double>(i / ratio) / sc.aux_rate;
            tag.depth.t.push_back(ta);
            tag.depth.value.push_back(std::max(0.0, noisy(st.depth, sc.noise.depth)));
            tag.speed.t.push_back(ta);
            tag.speed.value.push_back(std::max(0.0, noisy(st.v, sc.noise.speed)));
            tag.temp.t.push_back(ta);
            tag.temp.value.push_back(sc.temperature);
        }
    }
    return tag;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string tag_to_csv(const TagSeries& tag) {
    io::CsvWriter w({"t", "ax", "ay", "az", "gx", "gy", "gz", "mx", "my", "mz", "depth", "speed", "temp"});
    std::size_t aux = 0;
    for (std::size_t i = 0; i < tag.imu.size(); ++i) {
        const double t = tag.imu.t[i];
        w.num(t);
        for (double v : tag.imu.accel[i]) w.num(v);
        for (double v : tag.imu.gyro[i]) w.num(v);
        if (tag.imu.has_mag())
            for (double v : tag.imu.mag[i]) w.num(v);
        else
            w.text("").text("").text("");
        if (aux < tag.depth.size() && std::abs(tag.depth.t[aux] - t) < 1e-9) {
            w.num(tag.depth.value[aux]).num(tag.speed.value[aux]);
            if (aux < tag.temp.size()) w.num(tag.temp.value[aux]);
            else w.text("");
            ++aux;
        } else {
            w.text("").text("").text("");
        }
        w.end_row();
    }
    return w.str();
}

inline std::string truth_to_csv(const TruthSeries& truth) {
    io::CsvWriter w({"t", "x", "y", "v", "v_xy", "yaw", "pitch", "depth", "a_t", "omega", "a_n", "lap", "segment"});
    for (const auto& s : truth.samples) {
        w.num(s.t).num(s.x).num(s.y).num(s.v).num(s.v_xy).num(s.yaw).num(s.pitch).num(s.depth);
        w.num(s.a_t).num(s.yaw_rate).num(s.a_n).integer(s.lap + 1).text(segment_name(s.segment));
        w.end_row();
    }
    return w.str();
}

inline std::string truth_laps_to_csv(const TruthSeries& truth) {
    io::CsvWriter w({"lap", "t_start", "t_corner_entry", "t_apex", "t_corner_exit", "t_glide", "t_end", "path_length",
                     "turn"});
    for (std::size_t k = 0; k < truth.laps.size(); ++k) {
        const auto& l = truth.laps[k];
        w.integer(static_cast<long long>(k + 1)).num(l.start).num(l.corner_entry).num(l.apex).num(l.corner_exit);
        w.num(l.glide_start).num(l.end).num(l.path_length).text(l.turn_sign > 0 ? "left" : "right");
        w.end_row();
    }
    return w.str();
}

// ---------------------------------------------------------------------------
// Presets and scenario files

/// Canonical closed-loop lap: 30 m straights, 1.5 m corner, 4 m/s cruise.
inline LapScenario default_scenario() { return LapScenario{}; }

/// Lap scenarios parameterized to the three animals' reported speeds,
/// corner radii and glide durations.
inline std::optional<LapScenario> preset_scenario(const std::string& name) {
    LapScenario s;
    s.name = name;
    s.noise = {0.02, 0.002, 0.005, 0.01, 0.02};
    s.station_rest = 7.0;
    if (name == "TT01") {
        s.animal = AnimalParams::tt01();
        s.straight_length = 38.0;
        s.corner_radius = 1.3;
        s.speed = {2.6, 2.4, 2.9, 0.45, 0.4, 0.45, 0.34};
        s.fluke_frequency = 1.4;
        s.depth = {0.4, 1.4, 1.0, 1.6};
        s.seed = 101;
    } else if (name == "TT02") {
        s.animal = AnimalParams::tt02();
        s.straight_length = 38.0;
        s.corner_radius = 1.9;
        s.speed = {4.6, 3.6, 5.2, 1.0, 1.0, 0.7, 1.68};
        s.fluke_frequency = 1.9;
        s.depth = {0.4, 1.6, 1.1, 1.9};
        s.seed = 202;
    } else if (name == "TT03") {
        s.animal = AnimalParams::tt03();
        s.straight_length = 37.0;
        s.corner_radius = 1.0;
        s.speed = {4.0, 2.0, 4.2, 0.9, 1.2, 0.8, 1.14};
        s.fluke_frequency = 1.7;
        s.depth = {0.4, 1.5, 1.0, 1.8};
        s.seed = 303;
    } else {
        return std::nullopt;
    }
    return s;
}

inline nlohmann::json scenario_to_json(const LapScenario& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["straight_length"] = s.straight_length;
    j["corner_radius"] = s.corner_radius;
    j["speed"] = {{"cruise", s.speed.cruise},
                  {"corner", s.speed.corner},
                  {"return", s.speed.ret},
                  {"accel", s.speed.accel},
                  {"corner_decel", s.speed.corner_decel},
                  {"return_accel", s.speed.return_accel},
                  {"glide_decel", s.speed.glide_decel}};
    j["fluke_frequency"] = s.fluke_frequency;
    j["fluke_amplitude_deg"] = s.fluke_amplitude_deg;
    j["depth"] = {{"station", s.depth.station}, {"outgoing", s.depth.outgoing}, {"corner", s.depth.corner}, {"return", s.depth.ret}};
    j["animal"] = {{"name", s.animal.name}, {"mass", s.animal.mass}, {"length", s.animal.length},
                   {"volume", s.animal.volume}, {"p_rmr", s.animal.p_rmr}};
    j["noise"] = {{"accel", s.noise.accel}, {"gyro", s.noise.gyro}, {"mag", s.noise.mag},
                  {"depth", s.noise.depth}, {"speed", s.noise.speed}};
    j["seed"] = s.seed;
    j["laps"] = s.laps;
    j["rest_before"] = s.rest_before;
    j["station_rest"] = s.station_rest;
    j["rest_after"] = s.rest_after;
    j["turns"] = s.turns == TurnPattern::left ? "left" : s.turns == TurnPattern::right ? "right" : "alternate";
    j["start_heading"] = s.start_heading;
    j["start"] = {s.start.x, s.start.y};
    j["mag_declination"] = s.mag_declination;
    j["mag_inclination_deg"] = s.mag_inclination_deg;
    j["imu_rate"] = s.imu_rate;
    j["aux_rate"] = s.aux_rate;
    j["temperature"] = s.temperature;
    return j;
}

/// Reads a scenario document. A "preset" key selects TT01/TT02/TT03 as the
/// base; every other key overrides that base.
inline LapScenario scenario_from_json(const nlohmann::json& j) {
    LapScenario s;
    try {
        if (j.contains("preset")) {
            auto p = preset_scenario(j["preset"].get<std::string>());
            if (!p) throw InputError("unknown preset '" + j["preset"].get<std::string>() + "'");
            s = *p;
        }
        auto num = [&](const nlohmann::json& obj, const char* key, double& dst) {
            if (obj.contains(key)) dst = obj[key].get<double>();
        };
        if (j.contains("name")) s.name = j["name"].get<std::string>();
        num(j, "straight_length", s.straight_length);
        num(j, "corner_radius", s.corner_radius);
        if (j.contains("speed")) {
            const auto& sp = j["speed"];
            num(sp, "cruise", s.speed.cruise);
            num(sp, "corner", s.speed.corner);
            num(sp, "return", s.speed.ret);
            num(sp, "accel", s.speed.accel);
            num(sp, "corner_decel", s.speed.corner_decel);
            num(sp, "return_accel", s.speed.return_accel);
            num(sp, "glide_decel", s.speed.glide_decel);
        }
        num(j, "fluke_frequency", s.fluke_frequency);
        num(j, "fluke_amplitude_deg", s.fluke_amplitude_deg);
        if (j.contains("depth")) {
            const auto& d = j["depth"];
            num(d, "station", s.depth.station);
            num(d, "outgoing", s.depth.outgoing);
            num(d, "corner", s.depth.corner);
            num(d, "return", s.depth.ret);
        }
        if (j.contains("animal")) {
            const auto& a = j["animal"];
            if (a.contains("preset")) {
                auto p = AnimalParams::preset(a["preset"].get<std::string>());
                if (!p) throw InputError("unknown animal preset");
                s.animal = *p;
            }
            if (a.contains("name")) s.animal.name = a["name"].get<std::string>();
            num(a, "mass", s.animal.mass);
            num(a, "length", s.animal.length);
            if (a.contains("mass") && !a.contains("volume")) s.animal.volume = s.animal.mass / 1025.0;
            num(a, "volume", s.animal.volume);
            num(a, "p_rmr", s.animal.p_rmr);
        }
        if (j.contains("noise")) {
            const auto& n = j["noise"];
            num(n, "accel", s.noise.accel);
            num(n, "gyro", s.noise.gyro);
            num(n, "mag", s.noise.mag);
            num(n, "depth", s.noise.depth);
            num(n, "speed", s.noise.speed);
        }
        if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("laps")) s.laps = j["laps"].get<int>();
        num(j, "rest_before", s.rest_before);
        num(j, "station_rest", s.station_rest);
        num(j, "rest_after", s.rest_after);
        if (j.contains("turns")) {
            const auto t = j["turns"].get<std::string>();
            if (t == "left") s.turns = TurnPattern::left;
            else if (t == "right") s.turns = TurnPattern::right;
            else if (t == "alternate") s.turns = TurnPattern::alternate;
            else throw InputError("turns must be left, right or alternate");
        }
        num(j, "start_heading", s.start_heading);
        if (j.contains("start")) s.start = {j["start"].at(0).get<double>(), j["start"].at(1).get<double>()};
        num(j, "mag_declination", s.mag_declination);
        num(j, "mag_inclination_deg", s.mag_inclination_deg);
        num(j, "imu_rate", s.imu_rate);
        num(j, "aux_rate", s.aux_rate);
        num(j, "temperature", s.temperature);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("invalid scenario field: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace dolphinlap::sim
