// dolphinlap: simulate tag trials, analyze tag CSVs, build reports.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dolphinlap/dolphinlap.hpp"

namespace fs = std::filesystem;
using namespace dolphinlap;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!io::trim(item).empty()) out.push_back(io::trim(item));
    return out;
}

struct SimulateArgs {
    std::string scenario;
    std::string preset;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> laps;
    bool zero_noise = false;
};

int run_simulate(const SimulateArgs& a) {
    sim::LapScenario sc = sim::default_scenario();
    if (!a.scenario.empty()) {
        if (!fs::exists(a.scenario)) throw InputError("scenario file not found: '" + a.scenario + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(io::read_text_file(a.scenario));
        } catch (const nlohmann::json::exception& e) {
            throw InputError("scenario '" + a.scenario + "': " + e.what());
        }
        sc = sim::scenario_from_json(j);
    } else if (!a.preset.empty()) {
        auto p = sim::preset_scenario(a.preset);
        if (!p) throw InputError("unknown preset '" + a.preset + "'");
        sc = *p;
    }
    if (a.seed) sc.seed = *a.seed;
    if (a.laps) sc.laps = *a.laps;
    if (a.zero_noise) sc.noise = {};
    sc.validate();

    fs::create_directories(a.out);
    const fs::path d(a.out);
    const TagSeries tag = sim::synthesize_tag(sc);
    const sim::TruthSeries truth = sim::generate_truth(sc);
    io::write_text_file((d / (sc.name + ".csv")).string(), sim::tag_to_csv(tag));
    io::write_text_file((d / (sc.name + "_truth.csv")).string(), sim::truth_to_csv(truth));
    io::write_text_file((d / (sc.name + "_truth_laps.csv")).string(), sim::truth_laps_to_csv(truth));
    io::write_text_file((d / (sc.name + "_scenario.json")).string(), sim::scenario_to_json(sc).dump(2) + "\n");
    std::cout << "wrote " << tag.imu.size() << " tag rows and " << truth.samples.size() << " truth rows to "
              << a.out << "\n";
    return 0;
}

struct AnalyzeArgs {
    std::string config;
    std::vector<std::string> inputs;
    std::string out;
    std::string animal;
    std::optional<double> mass, length, p_rmr;
    std::string boundary;
    std::optional<double> origin_lat, origin_lon, station_x, station_y;
    std::string emit;
    std::optional<int> jobs;
    std::optional<double> beta, mag_heading_offset, v_start, a_thresh, osc_threshold_deg, turn_fraction;
    std::optional<std::size_t> grid_n;
};

int run_analyze(const AnalyzeArgs& a) {
    RunConfig c;
    if (!a.config.empty()) {
        if (!fs::exists(a.config)) throw InputError("config file not found: '" + a.config + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(io::read_text_file(a.config));
        } catch (const nlohmann::json::exception& e) {
            throw InputError("config '" + a.config + "': " + e.what());
        }
        apply_config_json(c, j);
    }
    if (!a.inputs.empty()) {
        c.inputs.clear();
        for (const auto& p : a.inputs) c.inputs.push_back({p, std::nullopt});
    }
    if (!a.out.empty()) c.output_dir = a.out;
    if (!a.animal.empty()) c.animal = animal_from_json(nlohmann::json(a.animal));
    if (a.mass) {
        c.animal.mass = *a.mass;
        c.animal.volume = *a.mass / 1025.0;
    }
    if (a.length) c.animal.length = *a.length;
    if (a.p_rmr) c.animal.p_rmr = *a.p_rmr;
    if (!a.boundary.empty()) c.boundary_path = a.boundary;
    if (a.origin_lat || a.origin_lon) {
        if (!(a.origin_lat && a.origin_lon)) throw InputError("--origin-lat and --origin-lon go together");
        c.origin = GeoPoint{*a.origin_lat, *a.origin_lon};
    }
    if (a.station_x || a.station_y) c.station = Point2{a.station_x.value_or(0.0), a.station_y.value_or(0.0)};
    if (!a.emit.empty()) {
        const auto kinds = split_list(a.emit);
        c.emit = std::set<std::string>(kinds.begin(), kinds.end());
    }
    if (a.jobs) c.jobs = *a.jobs;
    if (a.beta) c.ahrs.beta = *a.beta;
    if (a.mag_heading_offset) c.ahrs.mag_heading_offset = *a.mag_heading_offset;
    if (a.v_start) c.segmentation.v_start = *a.v_start;
    if (a.a_thresh) c.segmentation.a_thresh = *a.a_thresh;
    if (a.osc_threshold_deg) c.segmentation.osc_threshold_deg = *a.osc_threshold_deg;
    if (a.turn_fraction) c.segmentation.turn_fraction = *a.turn_fraction;
    if (a.grid_n) c.grid_n = *a.grid_n;
    if (!c.boundary_path.empty() && !fs::exists(c.boundary_path))
        throw InputError("boundary file not found: '" + c.boundary_path + "'");

    const RunResult r = cmd_analyze(c);
    for (const auto& t : r.trials) {
        if (t.status == "ok") {
            std::cout << t.name << ": " << t.laps << " laps\n";
            for (const auto& w : t.warnings) std::cerr << t.name << ": warning: " << w << "\n";
        } else {
            std::cerr << t.name << ": " << t.status << ": " << t.error << "\n";
        }
    }
    return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lap-swimming tag analysis: dead reckoning, cornering, thrust power and cost of transport"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    SimulateArgs sa;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic tag CSV with ground truth");
    sim_cmd->add_option("--scenario", sa.scenario, "Scenario JSON file");
    sim_cmd->add_option("--preset", sa.preset, "Built-in scenario: TT01, TT02 or TT03");
    sim_cmd->add_option("--out", sa.out, "Output directory");
    sim_cmd->add_option("--seed", sa.seed, "Override the noise seed");
    sim_cmd->add_option("--laps", sa.laps, "Override the number of laps");
    sim_cmd->add_flag("--zero-noise", sa.zero_noise, "Disable sensor noise");

    AnalyzeArgs aa;
    auto* an_cmd = app.add_subcommand("analyze", "Analyze tag CSV files");
    an_cmd->add_option("--config", aa.config, "Run configuration JSON");
    an_cmd->add_option("--input", aa.inputs, "Tag CSV file (repeatable)");
    an_cmd->add_option("--out", aa.out, "Output directory");
    an_cmd->add_option("--animal", aa.animal, "Animal preset: TT01, TT02 or TT03");
    an_cmd->add_option("--mass", aa.mass, "Body mass, kg");
    an_cmd->add_option("--length", aa.length, "Body length, m");
    an_cmd->add_option("--p-rmr", aa.p_rmr, "Resting metabolic power, W");
    an_cmd->add_option("--boundary", aa.boundary, "Lagoon boundary GeoJSON");
    an_cmd->add_option("--origin-lat", aa.origin_lat, "Local frame origin latitude, deg");
    an_cmd->add_option("--origin-lon", aa.origin_lon, "Local frame origin longitude, deg");
    an_cmd->add_option("--station-x", aa.station_x, "Lap start position x, m");
    an_cmd->add_option("--station-y", aa.station_y, "Lap start position y, m");
    an_cmd->add_option("--emit", aa.emit, "Comma list of tracks,laps,energetics,normalized,fits");
    an_cmd->add_option("--jobs", aa.jobs, "Trials analyzed in parallel");
    an_cmd->add_option("--beta", aa.beta, "AHRS gain");
    an_cmd->add_option("--mag-heading-offset", aa.mag_heading_offset, "Magnetic field angle from +x, rad");
    an_cmd->add_option("--v-start", aa.v_start, "Lap start speed threshold, m/s");
    an_cmd->add_option("--a-thresh", aa.a_thresh, "Transient acceleration threshold, m/s^2");
    an_cmd->add_option("--osc-threshold-deg", aa.osc_threshold_deg, "Fluking pitch amplitude threshold, deg");
    an_cmd->add_option("--turn-fraction", aa.turn_fraction, "Turn window level as a fraction of peak |a_n|");
    an_cmd->add_option("--grid-n", aa.grid_n, "Points on the percent-lap grid");

    std::string run_dir, report_out;
    auto* rep_cmd = app.add_subcommand("report", "Summarize a finished analyze run");
    rep_cmd->add_option("--run", run_dir, "Directory written by analyze")->required();
    rep_cmd->add_option("--out", report_out, "Report directory (default <run>/report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sim_cmd) return run_simulate(sa);
        if (*an_cmd) return run_analyze(aa);
        if (*rep_cmd) {
            const std::string out = report_out.empty() ? (fs::path(run_dir) / "report").string() : report_out;
            cmd_report(run_dir, out);
            std::cout << "report written to " << out << "\n";
            return 0;
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
