#pragma once

// End-to-end trial analysis, run configuration, artifact writers and the
// cross-trial report.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dolphinlap/energetics.hpp"
#include "dolphinlap/error.hpp"
#include "dolphinlap/ingest.hpp"
#include "dolphinlap/io.hpp"
#include "dolphinlap/kinematics.hpp"
#include "dolphinlap/localization.hpp"
#include "dolphinlap/orientation.hpp"
#include "dolphinlap/segmentation.hpp"

namespace dolphinlap {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;
using nlohmann::json;

struct TrialInput {
    std::string path;
    std::optional<AnimalParams> animal;  // falls back to RunConfig::animal
};

struct RunConfig {
    std::vector<TrialInput> inputs;
    std::string output_dir = "out";
    std::string boundary_path;
    std::optional<GeoPoint> origin;
    std::optional<Point2> station;
    AnimalParams animal = AnimalParams::tt01();
    ColumnSchema columns;
    double dt = 0.2;
    KinematicsOptions kinematics;
    AhrsOptions ahrs;
    SegmentationOptions segmentation;
    EnergeticsOptions energetics;
    std::size_t grid_n = 201;
    std::set<std::string> emit{"tracks", "laps", "energetics", "normalized", "fits"};
    int jobs = 1;

    bool emits(const std::string& what) const { return emit.count(what) > 0; }
    void validate() const;
};

inline const std::set<std::string>& emit_kinds() {
    static const std::set<std::string> k{"tracks", "laps", "energetics", "normalized", "fits"};
    return k;
}

// ---------------------------------------------------------------------------
// Config (de)serialization

inline json animal_to_json(const AnimalParams& a) {
    return {{"name", a.name},     {"mass", a.mass},     {"length", a.length}, {"volume", a.volume},
            {"p_rmr", a.p_rmr},   {"eta_ms", a.eta_ms}, {"eta_sp", a.eta_sp}, {"rho", a.rho},
            {"nu", a.nu},         {"g", a.g}};
}

/// Accepts a preset name ("TT01") or an object with an optional "preset"
/// base and field overrides.
inline AnimalParams animal_from_json(const json& j, const AnimalParams& base = AnimalParams::tt01()) {
    AnimalParams a = base;
    if (j.is_string()) {
        auto p = AnimalParams::preset(j.get<std::string>());
        if (!p) throw InputError("unknown animal preset '" + j.get<std::string>() + "'");
        return *p;
    }
    if (!j.is_object()) throw InputError("animal must be a preset name or an object");
    if (j.contains("preset")) a = animal_from_json(j["preset"]);
    if (j.contains("name")) a.name = j["name"].get<std::string>();
    auto num = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = j[key].get<double>();
    };
    num("mass", a.mass);
    num("length", a.length);
    if (j.contains("mass") && !j.contains("volume")) a.volume = a.mass / 1025.0;
    num("volume", a.volume);
    num("p_rmr", a.p_rmr);
    num("eta_ms", a.eta_ms);
    num("eta_sp", a.eta_sp);
    num("rho", a.rho);
    num("nu", a.nu);
    num("g", a.g);
    a.validate();
    return a;
}

/// Parameters that change numeric results. Paths, job count and emit flags
/// are excluded so the hash tracks thresholds and constants only.
inline json config_parameters(const RunConfig& c) {
    json gamma = json::array();
    for (const auto& [r, g] : c.energetics.gamma.points) gamma.push_back({r, g});
    json j;
    j["animal"] = animal_to_json(c.animal);
    j["station"] = c.station ? json{c.station->x, c.station->y} : json(nullptr);
    j["origin"] = c.origin ? json{{"lat", c.origin->lat}, {"lon", c.origin->lon}} : json(nullptr);
    j["columns"] = c.columns.columns;
    j["timeline"] = {{"dt", c.dt}};
    j["kinematics"] = {{"smoothing_window_s", c.kinematics.smoothing_window_s}};
    j["ahrs"] = {{"beta", c.ahrs.beta},
                 {"mag_heading_offset", c.ahrs.mag_heading_offset},
                 {"initial_heading", c.ahrs.initial_heading},
                 {"use_mag", c.ahrs.use_mag}};
    const auto& s = c.segmentation;
    j["segmentation"] = {{"v_start", s.v_start},
                         {"v_rest", s.v_rest},
                         {"start_sustain_s", s.start_sustain_s},
                         {"end_sustain_s", s.end_sustain_s},
                         {"a_thresh", s.a_thresh},
                         {"transient_sustain_s", s.transient_sustain_s},
                         {"osc_threshold_deg", s.osc_threshold_deg},
                         {"osc_window_s", s.osc_window_s},
                         {"min_phase_s", s.min_phase_s},
                         {"turn_fraction", s.turn_fraction},
                         {"tie_tolerance", s.tie_tolerance}};
    j["energetics"] = {{"gamma", gamma}, {"diameter_ratio", c.energetics.diameter_ratio}, {"v_min", c.energetics.v_min}};
    j["normalize"] = {{"grid_n", c.grid_n}};
    return j;
}

inline std::string config_hash(const RunConfig& c) { return io::hex64(io::fnv1a64(config_parameters(c).dump())); }

/// Applies a JSON config document on top of `c`.
inline void apply_config_json(RunConfig& c, const json& j) {
    try {
        if (j.contains("inputs")) {
            c.inputs.clear();
            for (const auto& in : j["inputs"]) {
                TrialInput ti;
                if (in.is_string()) {
                    ti.path = in.get<std::string>();
                } else {
                    ti.path = in.at("path").get<std::string>();
                    if (in.contains("animal")) ti.animal = animal_from_json(in["animal"], c.animal);
                }
                c.inputs.push_back(ti);
            }
        }
        if (j.contains("output")) c.output_dir = j["output"].get<std::string>();
        if (j.contains("boundary")) c.boundary_path = j["boundary"].get<std::string>();
        if (j.contains("origin")) c.origin = GeoPoint{j["origin"].at("lat").get<double>(), j["origin"].at("lon").get<double>()};
        if (j.contains("station")) c.station = Point2{j["station"].at(0).get<double>(), j["station"].at(1).get<double>()};
        if (j.contains("animal")) c.animal = animal_from_json(j["animal"], c.animal);
        if (j.contains("columns"))
            for (const auto& [k, v] : j["columns"].items()) c.columns.columns[k] = v.get<std::string>();
        if (j.contains("timeline")) c.dt = j["timeline"].value("dt", c.dt);
        if (j.contains("kinematics"))
            c.kinematics.smoothing_window_s = j["kinematics"].value("smoothing_window_s", c.kinematics.smoothing_window_s);
        if (j.contains("ahrs")) {
            const auto& a = j["ahrs"];
            c.ahrs.beta = a.value("beta", c.ahrs.beta);
            c.ahrs.mag_heading_offset = a.value("mag_heading_offset", c.ahrs.mag_heading_offset);
            c.ahrs.initial_heading = a.value("initial_heading", c.ahrs.initial_heading);
            c.ahrs.use_mag = a.value("use_mag", c.ahrs.use_mag);
        }
        if (j.contains("segmentation")) {
            const auto& s = j["segmentation"];
            auto& o = c.segmentation;
            o.v_start = s.value("v_start", o.v_start);
            o.v_rest = s.value("v_rest", o.v_rest);
            o.start_sustain_s = s.value("start_sustain_s", o.start_sustain_s);
            o.end_sustain_s = s.value("end_sustain_s", o.end_sustain_s);
            o.a_thresh = s.value("a_thresh", o.a_thresh);
            o.transient_sustain_s = s.value("transient_sustain_s", o.transient_sustain_s);
            o.osc_threshold_deg = s.value("osc_threshold_deg", o.osc_threshold_deg);
            o.osc_window_s = s.value("osc_window_s", o.osc_window_s);
            o.min_phase_s = s.value("min_phase_s", o.min_phase_s);
            o.turn_fraction = s.value("turn_fraction", o.turn_fraction);
            o.tie_tolerance = s.value("tie_tolerance", o.tie_tolerance);
        }
        if (j.contains("energetics")) {
            const auto& e = j["energetics"];
            if (e.contains("gamma")) {
                c.energetics.gamma.points.clear();
                for (const auto& p : e["gamma"]) c.energetics.gamma.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            }
            c.energetics.diameter_ratio = e.value("diameter_ratio", c.energetics.diameter_ratio);
            c.energetics.v_min = e.value("v_min", c.energetics.v_min);
        }
        if (j.contains("normalize")) c.grid_n = j["normalize"].value("grid_n", c.grid_n);
        if (j.contains("emit")) {
            c.emit.clear();
            for (const auto& e : j["emit"]) c.emit.insert(e.get<std::string>());
        }
        if (j.contains("jobs")) c.jobs = j["jobs"].get<int>();
    } catch (const json::exception& e) {
        throw InputError(std::string("invalid config: ") + e.what());
    }
}

inline void RunConfig::validate() const {
    animal.validate();
    for (const auto& in : inputs)
        if (in.animal) in.animal->validate();
    energetics.gamma.validate();
    if (!(dt > 0.0)) throw InputError("timeline dt must be positive");
    if (!(kinematics.smoothing_window_s > 0.0)) throw InputError("smoothing window must be positive");
    if (ahrs.beta < 0.0) throw InputError("ahrs beta must be non-negative");
    if (!(energetics.diameter_ratio > 0.0)) throw InputError("diameter_ratio must be positive");
    if (grid_n < 2) throw InputError("grid_n must be at least 2");
    if (jobs < 1) throw InputError("jobs must be at least 1");
    const auto& s = segmentation;
    if (!(s.v_start > 0.0) || s.v_rest < 0.0 || s.v_rest > s.v_start) throw InputError("invalid speed thresholds");
    if (!(s.turn_fraction > 0.0 && s.turn_fraction < 1.0)) throw InputError("turn_fraction must be in (0, 1)");
    for (const auto& e : emit)
        if (!emit_kinds().count(e)) throw InputError("unknown emit kind '" + e + "'");
}

// ---------------------------------------------------------------------------
// Single-trial analysis

struct LapResult {
    LapEvents events;
    Track track;  // samples [begin, end]
    LapSummary summary;
    NormalizedLap normalized;
};

struct TrialAnalysis {
    std::string name;
    AnimalParams animal;
    MasterTimeline timeline;
    KinematicSeries kin;
    std::vector<PowerSample> power;
    std::vector<Phase> phases;
    std::vector<LapResult> laps;
    std::vector<std::string> warnings;
    std::size_t flagged_rows = 0;
};

struct AnalysisSettings {
    AnimalParams animal;
    Point2 station{0.0, 0.0};
    double dt = 0.2;
    KinematicsOptions kinematics;
    AhrsOptions ahrs;
    SegmentationOptions segmentation;
    EnergeticsOptions energetics;
    std::size_t grid_n = 201;
};

/// Orientation at the IMU rate, then every channel resampled onto the
/// common master grid.
inline KinematicSeries tag_kinematics(const TagSeries& tag, const AnalysisSettings& s, MasterTimeline* timeline_out = nullptr) {
    if (tag.imu.size() < 2 || tag.depth.size() < 2 || tag.speed.size() < 2)
        throw AnalysisError("tag record is too short to analyze");
    const OrientationSeries ori = estimate_orientation(tag.imu, s.ahrs);
    const double start = std::max({tag.imu.t.front(), tag.depth.t.front(), tag.speed.t.front()});
    const double stop = std::min({tag.imu.t.back(), tag.depth.t.back(), tag.speed.t.back()});
    const MasterTimeline tl = MasterTimeline::covering(start, stop, s.dt);
    if (tl.n < 3) throw AnalysisError("tag record is too short to analyze");

    const Channel pitch = resample_linear({ori.t, ori.pitch}, tl);
    const Channel yaw = resample_linear({ori.t, ori.yaw}, tl);
    const Channel depth = resample_linear(tag.depth, tl);
    const Channel speed = resample_linear(tag.speed, tl);
    if (timeline_out) *timeline_out = tl;
    return compute_kinematics(speed, pitch, yaw, depth, s.animal.length, tl, s.kinematics);
}

/// Segmentation, tracks and energetics on an existing kinematic series.
inline TrialAnalysis analyze_kinematics(KinematicSeries kin, const AnalysisSettings& s, std::string name = "trial") {
    TrialAnalysis a;
    a.name = std::move(name);
    a.animal = s.animal;
    a.kin = std::move(kin);
    const KinematicSeries& k = a.kin;
    a.power = power_series(k, s.animal, s.energetics);
    const auto events = detect_laps(k, s.segmentation, &a.warnings);
    if (events.empty()) throw AnalysisError("no lap found");
    a.phases = classify_phases(k, events, s.segmentation);

    int number = 0;
    for (const auto& ev : events) {
        LapResult r;
        r.events = ev;
        r.track = dead_reckon(k, s.station, ev.begin, ev.end + 1);
        attach_curvature(r.track, k.dt);
        r.summary = lap_metrics(k, a.power, a.phases, r.track, ev, ++number);
        r.normalized = normalize_lap(k, a.power, r.track, ev, s.grid_n);
        a.laps.push_back(std::move(r));
    }
    return a;
}

inline TrialAnalysis analyze_tag(const TagSeries& tag, const AnalysisSettings& s, std::string name = "trial") {
    MasterTimeline tl;
    KinematicSeries k = tag_kinematics(tag, s, &tl);
    TrialAnalysis a = analyze_kinematics(std::move(k), s, std::move(name));
    a.timeline = tl;
    a.flagged_rows = tag.flagged_rows.size();
    if (!tag.flagged_rows.empty())
        a.warnings.push_back(std::to_string(tag.flagged_rows.size()) + " rows carried non-finite or out-of-range values");
    return a;
}

// ---------------------------------------------------------------------------
// Power-law fits over a trial

struct TrialFits {
    std::optional<PowerLawFit> af_nd, cs_nd;    // P_nd vs BL/s
    std::optional<PowerLawFit> af_dim, cs_dim;  // W vs m/s
    std::size_t af_points = 0, cs_points = 0;
};

/// Fits P = a1 v^a2 to the per-leg mean speed and power of each lap, for the
/// active-fluking and consistent-speed classes separately.
inline TrialFits fit_trial(const TrialAnalysis& a) {
    TrialFits f;
    auto run = [&](bool active, std::optional<PowerLawFit>& nd, std::optional<PowerLawFit>& dim, std::size_t& count) {
        std::vector<double> v, p, vb, pn;
        for (const auto& lap : a.laps) {
            for (std::size_t leg = 0; leg < 2; ++leg) {
                const PhaseMean& m = active ? lap.summary.active_mean[leg] : lap.summary.consistent_mean[leg];
                if (!m.samples || !(m.v > 0.0) || !(m.p_thrust > 0.0)) continue;
                v.push_back(m.v);
                p.push_back(m.p_thrust);
                vb.push_back(m.v / a.animal.length);
                pn.push_back(nondimensionalize(m.p_thrust, a.animal));
            }
        }
        count = v.size();
        if (v.size() < 3) return;
        try {
            dim = fit_power_law(v, p);
            nd = fit_power_law(vb, pn);
        } catch (const AnalysisError&) {
            dim.reset();
            nd.reset();
        }
    };
    run(true, f.af_nd, f.af_dim, f.af_points);
    run(false, f.cs_nd, f.cs_dim, f.cs_points);
    return f;
}

// ---------------------------------------------------------------------------
// Artifacts

inline std::string laps_csv(const TrialAnalysis& a) {
    io::CsvWriter w({"lap", "t_s", "t_c", "t_e", "duration", "turn_start", "turn_end", "turn_duration",
                     "out_transient", "out_consistent", "out_glide", "out_active", "ret_transient", "ret_consistent",
                     "ret_glide", "ret_active", "out_transient_pct", "out_consistent_pct", "out_glide_pct",
                     "ret_transient_pct", "ret_consistent_pct", "ret_glide_pct", "path_length", "endpoint_offset",
                     "peak_speed", "mean_speed", "peak_power", "mean_power", "peak_omega", "peak_a_n",
                     "corner_radius", "mean_turn_radius", "fit_radius_20", "fit_radius_50", "fit_radius_80",
                     "work_signed", "work_rectified", "work_drag", "work_nd", "transient_work_signed",
                     "transient_work_rectified", "consistent_work_signed", "consistent_work_rectified",
                     "glide_work_signed", "glide_work_rectified", "active_work_signed", "active_work_rectified",
                     "mean_cot", "af_out_v", "af_out_p", "af_ret_v", "af_ret_p", "cs_out_v", "cs_out_p",
                     "cs_ret_v", "cs_ret_p"});
    for (const auto& lap : a.laps) {
        const LapSummary& s = lap.summary;
        const LapEvents& e = s.events;
        const double pct = 100.0 / s.duration;
        const WorkSummary total = s.work.total(), active = s.work.active();
        w.integer(s.lap).num(e.t_s).num(e.t_c).num(e.t_e).num(s.duration).num(e.turn_start).num(e.turn_end);
        w.num(e.turn_duration());
        w.num(s.outgoing.transient).num(s.outgoing.consistent).num(s.outgoing.glide).num(s.outgoing.active());
        w.num(s.ret.transient).num(s.ret.consistent).num(s.ret.glide).num(s.ret.active());
        w.num(s.outgoing.transient * pct).num(s.outgoing.consistent * pct).num(s.outgoing.glide * pct);
        w.num(s.ret.transient * pct).num(s.ret.consistent * pct).num(s.ret.glide * pct);
        w.num(s.path_length).num(s.endpoint_offset).num(s.peak_speed).num(s.mean_speed).num(s.peak_power);
        w.num(s.mean_power).num(s.peak_omega).num(s.peak_a_n).num(s.corner_radius).num(s.mean_turn_radius);
        w.num(s.fit_radius[0]).num(s.fit_radius[1]).num(s.fit_radius[2]);
        w.num(total.thrust_signed).num(total.thrust_rectified).num(total.drag);
        w.num(nondimensionalize(total.thrust_signed, a.animal));
        w.num(s.work.transient.thrust_signed).num(s.work.transient.thrust_rectified);
        w.num(s.work.consistent.thrust_signed).num(s.work.consistent.thrust_rectified);
        w.num(s.work.glide.thrust_signed).num(s.work.glide.thrust_rectified);
        w.num(active.thrust_signed).num(active.thrust_rectified).num(s.mean_cot);
        for (const auto* m : {&s.active_mean, &s.consistent_mean})
            for (std::size_t leg = 0; leg < 2; ++leg) w.num((*m)[leg].v).num((*m)[leg].p_thrust);
        w.end_row();
    }
    return w.str();
}

inline std::string track_csv(const TrialAnalysis& a) {
    io::CsvWriter w({"lap", "t", "x", "y", "R"});
    for (std::size_t k = 0; k < a.laps.size(); ++k) {
        const Track& tr = a.laps[k].track;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            w.integer(static_cast<long long>(k + 1)).num(tr.t[i]).num(tr.x[i]).num(tr.y[i]).num(tr.radius[i]);
            w.end_row();
        }
    }
    return w.str();
}

inline std::string energetics_csv(const TrialAnalysis& a) {
    io::CsvWriter w({"t", "v", "a_t", "a_n", "omega", "depth", "phase", "gamma", "F_drag", "F_thrust", "P_inertial",
                     "P_drag", "P_thrust", "P_t_nd", "COT"});
    for (std::size_t i = 0; i < a.power.size(); ++i) {
        const PowerSample& p = a.power[i];
        w.num(p.t).num(p.v).num(p.a_t).num(a.kin.a_n[i]).num(a.kin.omega[i]).num(p.depth);
        w.text(phase_name(a.phases[i])).num(p.gamma).num(p.f_drag).num(p.f_thrust).num(p.p_inertial);
        w.num(p.p_drag).num(p.p_thrust).num(p.p_t_nd).num(p.cot);
        w.end_row();
    }
    return w.str();
}

inline std::string normalized_csv(const TrialAnalysis& a) {
    std::vector<std::string> header{"lap", "pct"};
    for (const char* c : kNormalizedChannels) header.emplace_back(c);
    io::CsvWriter w(header);
    for (std::size_t k = 0; k < a.laps.size(); ++k) {
        const NormalizedLap& nl = a.laps[k].normalized;
        for (std::size_t g = 0; g < nl.pct.size(); ++g) {
            w.integer(static_cast<long long>(k + 1)).num(nl.pct[g]);
            for (const auto& ch : nl.channels) w.num(ch[g]);
            w.end_row();
        }
    }
    return w.str();
}

inline json fit_to_json(const std::optional<PowerLawFit>& f, const char* coef, const char* expo) {
    if (!f) return nullptr;
    return {{coef, f->coefficient}, {expo, f->exponent}, {"rms", f->rms}};
}

inline std::string fits_json(const TrialAnalysis& a, const TrialFits& f) {
    json j;
    j["trial"] = a.name;
    j["animal"] = a.animal.name;
    j["active_fluking"] = {{"points", f.af_points},
                           {"nondimensional", fit_to_json(f.af_nd, "b1", "b2")},
                           {"dimensional", fit_to_json(f.af_dim, "a1", "a2")}};
    j["consistent_speed"] = {{"points", f.cs_points},
                             {"nondimensional", fit_to_json(f.cs_nd, "b1", "b2")},
                             {"dimensional", fit_to_json(f.cs_dim, "a1", "a2")}};
    return j.dump(2) + "\n";
}

inline std::string trial_name_for(const std::string& path) { return fs::path(path).stem().string(); }

/// Writes the selected artifacts for one trial into `dir`.
inline void write_trial_artifacts(const TrialAnalysis& a, const RunConfig& c, const std::string& dir,
                                  const GeoPoint& origin) {
    fs::create_directories(dir);
    const fs::path d(dir);
    if (c.emits("laps")) io::write_text_file((d / "laps.csv").string(), laps_csv(a));
    if (c.emits("tracks")) {
        io::write_text_file((d / "track.csv").string(), track_csv(a));
        std::vector<Track> tracks;
        for (const auto& lap : a.laps) tracks.push_back(lap.track);
        io::write_text_file((d / "track.geojson").string(), track_to_geojson(tracks, origin));
    }
    if (c.emits("energetics")) io::write_text_file((d / "energetics.csv").string(), energetics_csv(a));
    if (c.emits("normalized")) io::write_text_file((d / "normalized.csv").string(), normalized_csv(a));
    if (c.emits("fits")) io::write_text_file((d / "fits.json").string(), fits_json(a, fit_trial(a)));
}

// ---------------------------------------------------------------------------
// Batch run

struct TrialOutcome {
    std::string path;
    std::string name;
    std::string status = "ok";  // ok | input_error | analysis_error
    std::string error;
    std::vector<std::string> warnings;
    std::size_t flagged_rows = 0;
    std::size_t laps = 0;
    AnimalParams animal;
};

struct RunResult {
    std::vector<TrialOutcome> trials;
    int exit_code = 0;
};

inline RunResult cmd_analyze(const RunConfig& config) {
    config.validate();
    if (config.inputs.empty()) throw InputError("no input files given");

    GeoPoint origin = config.origin.value_or(GeoPoint{0.0, 0.0});
    Point2 station = config.station.value_or(Point2{0.0, 0.0});
    if (!config.boundary_path.empty()) {
        const LagoonBoundary b = load_boundary(config.boundary_path, config.origin);
        origin = b.origin;
        if (!config.station) station = b.vertices.front();
    }

    // Trial names must be unique; repeated stems get a numeric suffix.
    std::vector<std::string> names;
    std::map<std::string, int> seen;
    for (const auto& in : config.inputs) {
        std::string n = trial_name_for(in.path);
        const int count = seen[n]++;
        if (count) n += "_" + std::to_string(count + 1);
        names.push_back(n);
    }

    fs::create_directories(config.output_dir);
    RunResult result;
    result.trials.resize(config.inputs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < config.inputs.size(); i = next++) {
            TrialOutcome& out = result.trials[i];
            const TrialInput& in = config.inputs[i];
            out.path = in.path;
            out.name = names[i];
            out.animal = in.animal.value_or(config.animal);
            try {
                if (!fs::exists(in.path)) throw InputError("input file not found: '" + in.path + "'");
                const TagSeries tag = parse_tag_csv(in.path, config.columns);
                AnalysisSettings s;
                s.animal = out.animal;
                s.station = station;
                s.dt = config.dt;
                s.kinematics = config.kinematics;
                s.ahrs = config.ahrs;
                s.segmentation = config.segmentation;
                s.energetics = config.energetics;
                s.grid_n = config.grid_n;
                const TrialAnalysis a = analyze_tag(tag, s, out.name);
                out.warnings = a.warnings;
                out.flagged_rows = a.flagged_rows;
                out.laps = a.laps.size();
                write_trial_artifacts(a, config, (fs::path(config.output_dir) / out.name).string(), origin);
            } catch (const InputError& e) {
                out.status = "input_error";
                out.error = e.what();
            } catch (const std::exception& e) {
                out.status = "analysis_error";
                out.error = e.what();
            }
        }
    };
    const int n_threads = std::max(1, std::min<int>(config.jobs, static_cast<int>(config.inputs.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    json manifest;
    manifest["tool"] = "dolphinlap";
    manifest["version"] = kVersion;
    manifest["config_hash"] = config_hash(config);
    manifest["parameters"] = config_parameters(config);
    manifest["emit"] = std::vector<std::string>(config.emit.begin(), config.emit.end());
    manifest["trials"] = json::array();
    for (const auto& t : result.trials) {
        json e;
        e["input"] = t.path;
        e["trial"] = t.name;
        e["status"] = t.status;
        e["error"] = t.error.empty() ? json(nullptr) : json(t.error);
        e["warnings"] = t.warnings;
        e["flagged_rows"] = t.flagged_rows;
        e["laps"] = t.laps;
        e["animal"] = animal_to_json(t.animal);
        manifest["trials"].push_back(e);
        if (t.status == "input_error") result.exit_code = 2;
        else if (t.status == "analysis_error" && result.exit_code == 0) result.exit_code = 1;
    }
    manifest["complete"] = true;
    io::write_text_file((fs::path(config.output_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    return result;
}

// ---------------------------------------------------------------------------
// Report over a finished run

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    std::size_t n = 0;
    for (double x : v)
        if (std::isfinite(x)) {
            s += x;
            ++n;
        }
    return n ? s / static_cast<double>(n) : kNaN;
}

// Sample standard deviation of the finite values; 0 for a single value.
inline double std_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    std::size_t n = 0;
    for (double x : v)
        if (std::isfinite(x)) {
            s += (x - m) * (x - m);
            ++n;
        }
    if (n == 0) return kNaN;
    return n > 1 ? std::sqrt(s / static_cast<double>(n - 1)) : 0.0;
}

}  // namespace detail

/// Builds summary tables from a completed run directory into `out_dir`.
inline void cmd_report(const std::string& run_dir, const std::string& out_dir) {
    const fs::path run(run_dir);
    const fs::path mpath = run / "manifest.json";
    if (!fs::exists(mpath)) throw InputError("run manifest not found: '" + mpath.string() + "'");
    json manifest;
    try {
        manifest = json::parse(io::read_text_file(mpath.string()));
    } catch (const json::exception& e) {
        throw InputError("incomplete run manifest: " + std::string(e.what()));
    }
    if (!manifest.value("complete", false) || !manifest.contains("trials"))
        throw InputError("incomplete run manifest: '" + mpath.string() + "'");
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    std::vector<std::string> norm_header{"trial", "pct", "laps"};
    for (const char* c : kNormalizedChannels) {
        norm_header.push_back(std::string(c) + "_mean");
        norm_header.push_back(std::string(c) + "_std");
    }
    io::CsvWriter norm(norm_header);
    io::CsvWriter corner({"trial", "lap", "t_rel", "x", "y"});
    io::CsvWriter work({"trial", "lap", "class", "work_signed", "work_rectified", "work_nd"});
    io::CsvWriter speed({"trial", "lap", "leg", "class", "v", "v_bl", "P_thrust", "P_t_nd", "COT"});
    io::CsvWriter summary({"trial", "animal", "laps", "duration_mean", "duration_std", "turn_duration_mean",
                           "path_length_mean", "mean_speed", "peak_speed_mean", "peak_power_mean", "mean_power",
                           "corner_radius_mean", "work_signed_mean", "work_nd_mean", "mean_cot"});

    for (const auto& t : manifest["trials"]) {
        if (t.value("status", "") != "ok") continue;
        const std::string name = t.at("trial").get<std::string>();
        const AnimalParams animal = animal_from_json(t.at("animal"));
        const fs::path tdir = run / name;
        const fs::path laps_path = tdir / "laps.csv";
        if (!fs::exists(laps_path)) throw InputError("incomplete run: missing '" + laps_path.string() + "'");
        const io::Table laps = io::read_table_file(laps_path.string());

        if (fs::exists(tdir / "normalized.csv")) {
            const io::Table nt = io::read_table_file((tdir / "normalized.csv").string());
            std::map<std::string, std::vector<std::size_t>> by_pct;
            std::vector<std::string> order;
            for (std::size_t r = 0; r < nt.rows.size(); ++r) {
                const std::string& key = nt.text(r, "pct");
                if (!by_pct.count(key)) order.push_back(key);
                by_pct[key].push_back(r);
            }
            for (const auto& key : order) {
                const auto& rows = by_pct[key];
                norm.text(name).text(key).integer(static_cast<long long>(rows.size()));
                for (const char* c : kNormalizedChannels) {
                    std::vector<double> vals;
                    for (std::size_t r : rows) vals.push_back(nt.number(r, c));
                    norm.num(detail::mean_of(vals)).num(detail::std_of(vals));
                }
                norm.end_row();
            }
        }

        if (fs::exists(tdir / "track.csv")) {
            const io::Table tt = io::read_table_file((tdir / "track.csv").string());
            std::map<long long, Track> tracks;
            for (std::size_t r = 0; r < tt.rows.size(); ++r) {
                Track& tr = tracks[std::llround(tt.number(r, "lap"))];
                tr.t.push_back(tt.number(r, "t"));
                tr.x.push_back(tt.number(r, "x"));
                tr.y.push_back(tt.number(r, "y"));
            }
            std::vector<Track> list;
            std::vector<std::optional<std::size_t>> corners;
            std::vector<long long> ids;
            std::vector<double> t_c;
            for (std::size_t r = 0; r < laps.rows.size(); ++r) {
                const long long id = std::llround(laps.number(r, "lap"));
                if (!tracks.count(id)) continue;
                const Track& tr = tracks[id];
                const double tc = laps.number(r, "t_c");
                std::size_t best = 0;
                for (std::size_t i = 1; i < tr.size(); ++i)
                    if (std::abs(tr.t[i] - tc) < std::abs(tr.t[best] - tc)) best = i;
                list.push_back(tr);
                corners.push_back(best);
                ids.push_back(id);
                t_c.push_back(tc);
            }
            const auto aligned = align_at_corner(list, corners);
            for (std::size_t k = 0; k < aligned.size(); ++k)
                for (std::size_t i = 0; i < aligned[k].size(); ++i) {
                    corner.text(name).integer(ids[k]).num(aligned[k].t[i] - t_c[k]).num(aligned[k].x[i]).num(aligned[k].y[i]);
                    corner.end_row();
                }
        }

        std::vector<double> dur, turn, path, mspeed, pspeed, ppow, mpow, rad, wsig, wnd, cot;
        for (std::size_t r = 0; r < laps.rows.size(); ++r) {
            const long long id = std::llround(laps.number(r, "lap"));
            const struct {
                const char* cls;
                const char* sig;
                const char* rect;
            } classes[] = {{"transient", "transient_work_signed", "transient_work_rectified"},
                           {"consistent_speed", "consistent_work_signed", "consistent_work_rectified"},
                           {"active_fluking", "active_work_signed", "active_work_rectified"},
                           {"glide", "glide_work_signed", "glide_work_rectified"},
                           {"total", "work_signed", "work_rectified"}};
            for (const auto& c : classes) {
                const double ws = laps.number(r, c.sig);
                work.text(name).integer(id).text(c.cls).num(ws).num(laps.number(r, c.rect));
                work.num(nondimensionalize(ws, animal));
                work.end_row();
            }
            const struct {
                const char* leg;
                const char* cls;
                const char* v;
                const char* p;
            } legs[] = {{"outgoing", "active_fluking", "af_out_v", "af_out_p"},
                        {"return", "active_fluking", "af_ret_v", "af_ret_p"},
                        {"outgoing", "consistent_speed", "cs_out_v", "cs_out_p"},
                        {"return", "consistent_speed", "cs_ret_v", "cs_ret_p"}};
            for (const auto& l : legs) {
                const double v = laps.number(r, l.v), p = laps.number(r, l.p);
                if (!std::isfinite(v)) continue;
                speed.text(name).integer(id).text(l.leg).text(l.cls).num(v).num(v / animal.length).num(p);
                speed.num(nondimensionalize(p, animal)).num(cost_of_transport(p, v, animal).value_or(kNaN));
                speed.end_row();
            }
            dur.push_back(laps.number(r, "duration"));
            turn.push_back(laps.number(r, "turn_duration"));
            path.push_back(laps.number(r, "path_length"));
            mspeed.push_back(laps.number(r, "mean_speed"));
            pspeed.push_back(laps.number(r, "peak_speed"));
            ppow.push_back(laps.number(r, "peak_power"));
            mpow.push_back(laps.number(r, "mean_power"));
            rad.push_back(laps.number(r, "corner_radius"));
            wsig.push_back(laps.number(r, "work_signed"));
            wnd.push_back(laps.number(r, "work_nd"));
            cot.push_back(laps.number(r, "mean_cot"));
        }
        summary.text(name).text(animal.name).integer(static_cast<long long>(laps.rows.size()));
        summary.num(detail::mean_of(dur)).num(detail::std_of(dur)).num(detail::mean_of(turn));
        summary.num(detail::mean_of(path)).num(detail::mean_of(mspeed)).num(detail::mean_of(pspeed));
        summary.num(detail::mean_of(ppow)).num(detail::mean_of(mpow)).num(detail::mean_of(rad));
        summary.num(detail::mean_of(wsig)).num(detail::mean_of(wnd)).num(detail::mean_of(cot));
        summary.end_row();
    }

    io::write_text_file((out / "normalized_mean.csv").string(), norm.str());
    io::write_text_file((out / "corner_tracks.csv").string(), corner.str());
    io::write_text_file((out / "phase_work.csv").string(), work.str());
    io::write_text_file((out / "speed_power.csv").string(), speed.str());
    io::write_text_file((out / "summary.csv").string(), summary.str());
}

}  // namespace dolphinlap
