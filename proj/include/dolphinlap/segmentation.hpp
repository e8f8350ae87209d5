#pragma once

// Lap detection, cornering event, swimming phases and percent-lap
// normalization.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dolphinlap/energetics.hpp"
#include "dolphinlap/error.hpp"
#include "dolphinlap/ingest.hpp"
#include "dolphinlap/kinematics.hpp"
#include "dolphinlap/localization.hpp"
#include "dolphinlap/types.hpp"

namespace dolphinlap {

enum class Phase { rest = 0, transient = 1, consistent_speed = 2, glide = 3 };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::rest: return "rest";
        case Phase::transient: return "transient";
        case Phase::consistent_speed: return "consistent_speed";
        case Phase::glide: return "glide";
    }
    return "?";
}

inline bool is_active_fluking(Phase p) { return p == Phase::transient || p == Phase::consistent_speed; }

struct SegmentationOptions {
    double v_start = 0.5;            // m/s
    double v_rest = 0.05;            // m/s, lap bounds are pushed out to this level
    double start_sustain_s = 1.0;
    double end_sustain_s = 2.0;
    double a_thresh = 0.2;           // m/s^2
    double transient_sustain_s = 1.0;
    double osc_threshold_deg = 5.0;  // half peak-to-peak pitch oscillation
    double osc_window_s = 2.0;
    double min_phase_s = 0.6;
    double turn_fraction = 0.55;
    double tie_tolerance = 0.01;     // relative, for argmax |a_n|
};

/// Lap boundaries on the master timeline. Samples [begin, end) belong to the
/// lap; `end` is the first sample back at rest speed, so t_e = t[end].
struct LapEvents {
    std::size_t begin = 0;
    std::size_t corner = 0;
    std::size_t end = 0;
    double t_s = 0.0;
    double t_c = 0.0;
    double t_e = 0.0;
    double turn_start = 0.0;
    double turn_end = 0.0;
    double peak_abs_a_n = 0.0;
    std::vector<std::string> warnings;

    double duration() const { return t_e - t_s; }
    double turn_duration() const { return turn_end - turn_start; }
};

/// Pitch oscillation amplitude: half peak-to-peak of the pitch after removing
/// its own moving average. The centred window of `window_s` is split at the
/// sample and the smaller of the two half-window amplitudes is kept, so the
/// amplitude drops as soon as the strokes stop on either side.
inline Channel pitch_oscillation(std::span<const double> pitch, double window_s, double dt) {
    const Channel trend = moving_average(pitch, window_s, dt);
    const std::size_t n = pitch.size();
    Channel detr(n);
    for (std::size_t i = 0; i < n; ++i) detr[i] = pitch[i] - trend[i];
    const std::size_t half = moving_average_width(window_s, dt) / 2;
    auto half_pp = [&](std::size_t lo, std::size_t hi) {
        const auto [mn, mx] = std::minmax_element(detr.begin() + static_cast<std::ptrdiff_t>(lo),
                                                  detr.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
        return 0.5 * (*mx - *mn);
    };
    Channel amp(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        amp[i] = std::min(half_pp(lo, i), half_pp(i, hi));
    }
    return amp;
}

namespace detail {

inline std::size_t samples_for(double seconds, double dt) {
    return static_cast<std::size_t>(std::max(1.0, std::round(seconds / dt)));
}

// Flips runs shorter than `min_len` to the value of their left neighbour
// (right neighbour for a leading run), repeating until stable.
template <typename T>
void merge_short_runs(std::span<T> x, std::size_t min_len) {
    if (x.empty() || min_len <= 1) return;
    for (int pass = 0; pass < 64; ++pass) {
        bool changed = false;
        std::size_t i = 0;
        while (i < x.size()) {
            std::size_t j = i;
            while (j < x.size() && x[j] == x[i]) ++j;
            const bool whole = i == 0 && j == x.size();
            if (!whole && j - i < min_len) {
                const T fill = i > 0 ? x[i - 1] : x[j];
                std::fill(x.begin() + static_cast<std::ptrdiff_t>(i), x.begin() + static_cast<std::ptrdiff_t>(j), fill);
                changed = true;
            }
            i = j;
        }
        if (!changed) break;
    }
}

// Time at which |a_n| crosses `level` between samples i0 and i1.
inline double crossing_time(const KinematicSeries& k, std::size_t i0, std::size_t i1, double level) {
    const double y0 = std::abs(k.a_n[i0]), y1 = std::abs(k.a_n[i1]);
    if (y1 == y0) return k.t[i1];
    const double f = std::clamp((level - y0) / (y1 - y0), 0.0, 1.0);
    return k.t[i0] + f * (k.t[i1] - k.t[i0]);
}

}  // namespace detail

/// Per-sample fluking flag: oscillation amplitude at or above the threshold,
/// with runs shorter than the minimum phase duration merged away.
inline std::vector<char> fluking_mask(const KinematicSeries& k, const SegmentationOptions& opt = {}) {
    const Channel amp = pitch_oscillation(k.pitch, opt.osc_window_s, k.dt);
    const double thr = deg2rad(opt.osc_threshold_deg);
    std::vector<char> m(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) m[i] = amp[i] >= thr ? 1 : 0;
    detail::merge_short_runs(std::span<char>(m), detail::samples_for(opt.min_phase_s, k.dt));
    return m;
}

/// Locates the cornering event and turn window inside [ev.begin, ev.end).
/// Returns false when the lap has no normal acceleration at all.
inline bool locate_corner(const KinematicSeries& k, LapEvents& ev, const SegmentationOptions& opt = {}) {
    double peak = 0.0;
    for (std::size_t i = ev.begin; i < ev.end; ++i) peak = std::max(peak, std::abs(k.a_n[i]));
    if (!(peak > 0.0)) return false;
    ev.peak_abs_a_n = peak;

    // Samples within tolerance of the peak. A single contiguous plateau is
    // resolved to its middle sample; separate plateaus go to the earliest.
    const double tie = (1.0 - opt.tie_tolerance) * peak;
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    for (std::size_t i = ev.begin; i < ev.end; ++i) {
        if (std::abs(k.a_n[i]) < tie) continue;
        if (!runs.empty() && runs.back().second + 1 == i) runs.back().second = i;
        else runs.push_back({i, i});
    }
    if (runs.size() > 1) ev.warnings.push_back("multiple normal-acceleration maxima within tolerance; earliest kept");
    ev.corner = (runs.front().first + runs.front().second + 1) / 2;
    ev.t_c = k.t[ev.corner];

    const double level = opt.turn_fraction * peak;
    std::size_t i = ev.corner;
    while (i > ev.begin && std::abs(k.a_n[i - 1]) >= level) --i;
    ev.turn_start = i > ev.begin ? detail::crossing_time(k, i - 1, i, level) : k.t[ev.begin];
    std::size_t j = ev.corner;
    while (j + 1 < ev.end && std::abs(k.a_n[j + 1]) >= level) ++j;
    ev.turn_end = j + 1 < ev.end ? detail::crossing_time(k, j + 1, j, level) : k.t[ev.end - 1];
    return true;
}

/// Finds laps in a full-trial kinematic series. A lap begins when the speed
/// rises above v_start for at least start_sustain_s with fluking nearby and
/// ends when it stays below v_start for end_sustain_s. Bounds are then moved
/// outwards along the monotone speed flanks to the rest level. Laps that run
/// off either end of the record or show no turning are skipped.
inline std::vector<LapEvents> detect_laps(const KinematicSeries& k, const SegmentationOptions& opt = {},
                                          std::vector<std::string>* warnings = nullptr) {
    std::vector<LapEvents> laps;
    const std::size_t n = k.size();
    if (n < 3) return laps;
    const std::vector<char> fluke = fluking_mask(k, opt);
    const std::size_t ns = detail::samples_for(opt.start_sustain_s, k.dt);
    const std::size_t ne = detail::samples_for(opt.end_sustain_s, k.dt);

    auto above = [&](std::size_t i) { return k.v[i] > opt.v_start; };
    std::size_t floor_idx = 0;  // laps may not reach back before this sample
    std::size_t i = 1;
    while (i < n) {
        if (!(above(i) && !above(i - 1))) {
            ++i;
            continue;
        }
        bool sustained = i + ns <= n;
        for (std::size_t j = i; sustained && j < i + ns; ++j) sustained = above(j);
        bool fluking = false;
        for (std::size_t j = i >= ns ? i - ns : 0; j < std::min(n, i + 2 * ns); ++j) fluking |= fluke[j] != 0;
        if (!sustained || !fluking) {
            ++i;
            continue;
        }

        // End: first drop below v_start that stays below for ne samples.
        std::optional<std::size_t> drop;
        for (std::size_t j = i + ns; j < n; ++j) {
            if (above(j)) continue;
            std::size_t m = j;
            while (m < n && m < j + ne && !above(m)) ++m;
            if (m == j + ne || m == n) {
                drop = j;
                break;
            }
            j = m;
        }
        if (!drop) {
            if (warnings) warnings->push_back("trailing lap is still in motion at end of record; skipped");
            break;
        }

        LapEvents ev;
        std::size_t s = i - 1;
        while (s > floor_idx && k.v[s] > opt.v_rest && k.v[s - 1] < k.v[s]) --s;
        std::size_t e = *drop;
        while (e + 1 < n && k.v[e] > opt.v_rest && k.v[e + 1] < k.v[e]) ++e;
        ev.begin = s;
        ev.end = e;
        ev.t_s = k.t[s];
        ev.t_e = k.t[e];
        floor_idx = e;
        i = std::max(e, *drop + 1);

        if (ev.end <= ev.begin + 2 || !locate_corner(k, ev, opt) || !(ev.t_s < ev.t_c && ev.t_c < ev.t_e)) {
            if (warnings) warnings->push_back("lap at t=" + io::format_number(ev.t_s) + " has no cornering event; skipped");
            continue;
        }
        if (warnings)
            for (const auto& w : ev.warnings) warnings->push_back("lap at t=" + io::format_number(ev.t_s) + ": " + w);
        laps.push_back(std::move(ev));
    }
    return laps;
}

/// Per-sample phase labels over the full series. Inside a lap a sample is
/// transient or consistent_speed while fluking and glide otherwise; samples
/// outside every lap are rest.
inline std::vector<Phase> classify_phases(const KinematicSeries& k, std::span<const LapEvents> laps,
                                          const SegmentationOptions& opt = {}) {
    const std::size_t n = k.size();
    std::vector<Phase> out(n, Phase::rest);
    if (n == 0) return out;
    const std::vector<char> fluke = fluking_mask(k, opt);

    std::vector<char> accel(n);
    for (std::size_t i = 0; i < n; ++i) accel[i] = std::abs(k.a_t[i]) >= opt.a_thresh ? 1 : 0;
    // Acceleration episodes must last transient_sustain_s.
    const std::size_t sustain = detail::samples_for(opt.transient_sustain_s, k.dt);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && accel[j] == accel[i]) ++j;
        if (accel[i] && j - i < sustain) std::fill(accel.begin() + static_cast<std::ptrdiff_t>(i), accel.begin() + static_cast<std::ptrdiff_t>(j), 0);
        i = j;
    }

    const std::size_t min_len = detail::samples_for(opt.min_phase_s, k.dt);
    for (const auto& ev : laps) {
        if (ev.end > n || ev.begin >= ev.end) throw AnalysisError("lap events out of range");
        for (std::size_t i = ev.begin; i < ev.end; ++i) {
            if (!fluke[i]) out[i] = Phase::glide;
            else out[i] = accel[i] ? Phase::transient : Phase::consistent_speed;
        }
        detail::merge_short_runs(std::span<Phase>(out.data() + ev.begin, ev.end - ev.begin), min_len);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Percent-lap normalization

/// Piecewise-linear map of lap time onto [0, 100] with the corner at 50.
/// `t` is absolute; the map is clamped outside [t_s, t_e].
inline double percent_lap(double t, double t_s, double t_c, double t_e) {
    if (!(t_s < t_c && t_c < t_e)) throw AnalysisError("degenerate lap: corner must lie strictly inside the lap");
    const double tend = t_e - t_s, tc = t_c - t_s;
    const double tr = std::clamp(t - t_s, 0.0, tend);
    // Each branch already divided by t_end, so t = t_c lands on 50 exactly.
    if (tr <= tc) return 50.0 * (tr / tc);
    return 100.0 - 50.0 * ((tend - tr) / (tend - tc));
}

/// Inverse of percent_lap.
inline double time_at_percent(double pct, double t_s, double t_c, double t_e) {
    if (!(t_s < t_c && t_c < t_e)) throw AnalysisError("degenerate lap: corner must lie strictly inside the lap");
    const double f = std::clamp(pct, 0.0, 100.0) / 100.0;
    const double tend = t_e - t_s, tc = t_c - t_s;
    if (f <= 0.5) return t_s + 2.0 * tc * f;
    return t_s + tend - (1.0 - f) * 2.0 * (tend - tc);
}

inline constexpr std::array<const char*, 8> kNormalizedChannels = {"v", "a_t", "a_n", "depth", "P_thrust", "COT", "x", "y"};

struct NormalizedLap {
    std::vector<double> pct;
    std::array<Channel, kNormalizedChannels.size()> channels;

    const Channel& channel(std::string_view name) const {
        for (std::size_t c = 0; c < kNormalizedChannels.size(); ++c)
            if (name == kNormalizedChannels[c]) return channels[c];
        throw AnalysisError("unknown normalized channel '" + std::string(name) + "'");
    }
};

/// Linear interpolation of y(t) at tq; t strictly increasing.
inline double interpolate_at(std::span<const double> t, std::span<const double> y, double tq) {
    if (t.empty()) return kNaN;
    if (tq <= t.front()) return y.front();
    if (tq >= t.back()) return y.back();
    const auto it = std::upper_bound(t.begin(), t.end(), tq);
    const std::size_t j = static_cast<std::size_t>(it - t.begin());
    const double f = (tq - t[j - 1]) / (t[j] - t[j - 1]);
    if (f == 0.0) return y[j - 1];
    return y[j - 1] + f * (y[j] - y[j - 1]);
}

/// Resamples a lap's channels onto a uniform percent grid. `track` holds the
/// lap's positions for samples [begin, end].
inline NormalizedLap normalize_lap(const KinematicSeries& k, std::span<const PowerSample> power, const Track& track,
                                   const LapEvents& ev, std::size_t grid_n = 201) {
    if (grid_n < 2) throw AnalysisError("normalized grid needs at least 2 points");
    if (!(ev.t_s < ev.t_c && ev.t_c < ev.t_e)) throw AnalysisError("degenerate lap: corner must lie strictly inside the lap");
    const std::size_t b = ev.begin, m = ev.end - ev.begin + 1;
    if (ev.end >= k.size() || power.size() != k.size() || track.size() != m)
        throw AnalysisError("lap channels do not cover the lap");

    std::span<const double> t(k.t.data() + b, m);
    std::array<Channel, kNormalizedChannels.size()> src;
    src[0].assign(k.v.begin() + b, k.v.begin() + b + m);
    src[1].assign(k.a_t.begin() + b, k.a_t.begin() + b + m);
    src[2].assign(k.a_n.begin() + b, k.a_n.begin() + b + m);
    src[3].assign(k.depth.begin() + b, k.depth.begin() + b + m);
    for (std::size_t i = 0; i < m; ++i) {
        src[4].push_back(power[b + i].p_thrust);
        src[5].push_back(power[b + i].cot);
    }
    src[6] = track.x;
    src[7] = track.y;

    NormalizedLap out;
    out.pct.resize(grid_n);
    for (auto& c : out.channels) c.resize(grid_n);
    for (std::size_t g = 0; g < grid_n; ++g) {
        const double pct = 100.0 * static_cast<double>(g) / static_cast<double>(grid_n - 1);
        out.pct[g] = pct;
        const double tq = time_at_percent(pct, ev.t_s, ev.t_c, ev.t_e);
        for (std::size_t c = 0; c < src.size(); ++c) out.channels[c][g] = interpolate_at(t, src[c], tq);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lap summary

struct LegPhases {
    double transient = 0.0;  // s
    double consistent = 0.0;
    double glide = 0.0;
    double active() const { return transient + consistent; }
    double total() const { return transient + consistent + glide; }
};

struct PhaseWork {
    WorkSummary transient, consistent, glide;
    WorkSummary active() const {
        WorkSummary w = transient;
        w += consistent;
        return w;
    }
    WorkSummary total() const {
        WorkSummary w = active();
        w += glide;
        return w;
    }
};

/// Mean speed and power over one phase class of one leg; NaN when empty.
struct PhaseMean {
    double v = kNaN;
    double p_thrust = kNaN;
    std::size_t samples = 0;
};

struct LapSummary {
    int lap = 0;  // 1-based
    LapEvents events;
    double duration = 0.0;
    LegPhases outgoing, ret;  // corner sample counts toward the outgoing leg
    double path_length = 0.0;
    double endpoint_offset = 0.0;  // distance between first and last track point
    double peak_speed = 0.0;
    double mean_speed = 0.0;
    double peak_power = 0.0;
    double mean_power = 0.0;
    double peak_omega = 0.0;
    double peak_a_n = 0.0;
    double corner_radius = kInf;     // curvature radius at t_c
    double mean_turn_radius = kNaN;  // mean finite radius inside the turn window
    std::array<double, 3> fit_radius{kNaN, kNaN, kNaN};  // circle fits at 20/50/80 % lap
    PhaseWork work;
    double mean_cot = kNaN;
    std::array<PhaseMean, 2> active_mean, consistent_mean;  // [outgoing, return]
};

inline constexpr std::array<double, 3> kCircleFitCentres = {20.0, 50.0, 80.0};
inline constexpr double kCircleFitWidth = 10.0;

/// Summarizes one lap. `track` holds positions for samples [begin, end] with
/// curvature attached.
inline LapSummary lap_metrics(const KinematicSeries& k, std::span<const PowerSample> power,
                              std::span<const Phase> phases, const Track& track, const LapEvents& ev, int lap_number) {
    const std::size_t b = ev.begin, e = ev.end;
    if (e >= k.size() || e <= b || power.size() != k.size() || phases.size() != k.size() || track.size() != e - b + 1)
        throw AnalysisError("lap channels do not cover the lap");

    LapSummary s;
    s.lap = lap_number;
    s.events = ev;
    s.duration = ev.duration();
    s.peak_a_n = ev.peak_abs_a_n;
    const double dt = k.dt;

    double v_sum = 0.0, p_sum = 0.0, cot_sum = 0.0;
    std::size_t cot_n = 0;
    std::array<double, 2> av{}, ap{}, cv{}, cp{};
    std::array<std::size_t, 2> an{}, cn{};
    for (std::size_t i = b; i < e; ++i) {
        const bool out_leg = i <= ev.corner;
        LegPhases& leg = out_leg ? s.outgoing : s.ret;
        const std::size_t li = out_leg ? 0 : 1;
        const PowerSample& p = power[i];
        WorkSummary w;
        w.thrust_signed = p.p_thrust * dt;
        w.thrust_rectified = std::max(p.p_thrust, 0.0) * dt;
        w.drag = p.p_drag * dt;
        switch (phases[i]) {
            case Phase::transient:
                leg.transient += dt;
                s.work.transient += w;
                break;
            case Phase::consistent_speed:
                leg.consistent += dt;
                s.work.consistent += w;
                cv[li] += k.v[i];
                cp[li] += p.p_thrust;
                ++cn[li];
                break;
            case Phase::glide:
            case Phase::rest:
                leg.glide += dt;
                s.work.glide += w;
                break;
        }
        if (is_active_fluking(phases[i])) {
            av[li] += k.v[i];
            ap[li] += p.p_thrust;
            ++an[li];
        }
        s.peak_speed = std::max(s.peak_speed, k.v[i]);
        s.peak_power = std::max(s.peak_power, p.p_thrust);
        s.peak_omega = std::max(s.peak_omega, std::abs(k.omega[i]));
        v_sum += k.v[i];
        p_sum += p.p_thrust;
        if (std::isfinite(p.cot)) {
            cot_sum += p.cot;
            ++cot_n;
        }
    }
    const double cnt = static_cast<double>(e - b);
    s.mean_speed = v_sum / cnt;
    s.mean_power = p_sum / cnt;
    if (cot_n) s.mean_cot = cot_sum / static_cast<double>(cot_n);
    for (std::size_t li = 0; li < 2; ++li) {
        if (an[li]) s.active_mean[li] = {av[li] / static_cast<double>(an[li]), ap[li] / static_cast<double>(an[li]), an[li]};
        if (cn[li]) s.consistent_mean[li] = {cv[li] / static_cast<double>(cn[li]), cp[li] / static_cast<double>(cn[li]), cn[li]};
    }

    s.path_length = path_length(track);
    s.endpoint_offset = std::hypot(track.x.back() - track.x.front(), track.y.back() - track.y.front());
    if (!track.radius.empty()) {
        s.corner_radius = track.radius[ev.corner - b];
        double r_sum = 0.0;
        std::size_t r_n = 0;
        for (std::size_t i = 0; i < track.size(); ++i) {
            if (track.t[i] < ev.turn_start || track.t[i] > ev.turn_end || !std::isfinite(track.radius[i])) continue;
            r_sum += track.radius[i];
            ++r_n;
        }
        if (r_n) s.mean_turn_radius = r_sum / static_cast<double>(r_n);
    }

    for (std::size_t f = 0; f < kCircleFitCentres.size(); ++f) {
        std::vector<Point2> pts;
        for (std::size_t i = 0; i < track.size(); ++i) {
            const double pct = percent_lap(track.t[i], ev.t_s, ev.t_c, ev.t_e);
            if (std::abs(pct - kCircleFitCentres[f]) <= 0.5 * kCircleFitWidth) pts.push_back(track.point(i));
        }
        try {
            s.fit_radius[f] = fit_circle(pts).radius;
        } catch (const AnalysisError&) {
            s.fit_radius[f] = kNaN;
        }
    }
    return s;
}

}  // namespace dolphinlap
