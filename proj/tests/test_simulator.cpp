#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dolphinlap/ingest.hpp"
#include "dolphinlap/simulator.hpp"

using namespace dolphinlap;
using namespace dolphinlap::sim;

namespace {

template <typename F>
double numeric_rate(const TrialModel& m, double t, F f, double h = 1e-5) {
    return (f(m.state(t + h)) - f(m.state(t - h))) / (2.0 * h);
}

}  // namespace

TEST(Simulator, StationaryPeriodIsGravityOnly) {
    const LapScenario sc = default_scenario();
    const TagSeries tag = synthesize_tag(sc);
    for (std::size_t i = 0; tag.imu.t[i] < sc.rest_before - 1.0; ++i) {
        EXPECT_NEAR(tag.imu.accel[i][0], 0.0, 1e-12);
        EXPECT_NEAR(tag.imu.accel[i][1], 0.0, 1e-12);
        EXPECT_NEAR(tag.imu.accel[i][2], TrialModel::kGravity, 1e-12);
        for (double g : tag.imu.gyro[i]) EXPECT_NEAR(g, 0.0, 1e-12);
    }
}

TEST(Simulator, StraightCruiseHasNoTurning) {
    LapScenario sc = default_scenario();
    sc.fluke_amplitude_deg = 0.0;
    const TrialModel m(sc);
    bool seen = false;
    for (double t = 0.0; t < m.laps()[0].corner_entry; t += 0.05) {
        const TruthState st = m.state(t);
        if (st.segment != Segment::cruise) continue;
        seen = true;
        EXPECT_EQ(st.a_n, 0.0);
        EXPECT_EQ(st.yaw_rate, 0.0);
        EXPECT_NEAR(st.v_xy, sc.speed.cruise, 1e-12);
        EXPECT_NEAR(st.a_xy, 0.0, 1e-12);
    }
    EXPECT_TRUE(seen);
}

TEST(Simulator, ArcLateralAccelerationIsVSquaredOverR) {
    const LapScenario sc = default_scenario();
    const TrialModel m(sc);
    const TruthLap& lap = m.laps()[0];
    const double expect = sc.speed.corner * sc.speed.corner / sc.corner_radius;
    for (double t = lap.corner_entry + 0.01; t < lap.corner_exit; t += 0.05) {
        const TruthState st = m.state(t);
        ASSERT_EQ(st.segment, Segment::corner);
        EXPECT_NEAR(st.yaw_rate * st.v_xy, expect, 1e-9);
        EXPECT_NEAR(st.a_n, expect, 0.02 * expect);
    }
}

TEST(Simulator, AnalyticDerivativesMatchDifferences) {
    for (const char* name : {"TT01", "TT02", "TT03"}) {
        const LapScenario sc = preset_scenario(name).value();
        const TrialModel m(sc);
        for (double t = 0.37; t < m.duration() - 0.5; t += 0.731) {
            const TruthState st = m.state(t);
            EXPECT_NEAR(numeric_rate(m, t, [](const TruthState& s) { return s.x; }), st.v_xy * std::cos(st.yaw), 1e-5);
            EXPECT_NEAR(numeric_rate(m, t, [](const TruthState& s) { return s.y; }), st.v_xy * std::sin(st.yaw), 1e-5);
            EXPECT_NEAR(numeric_rate(m, t, [](const TruthState& s) { return s.yaw; }), st.yaw_rate, 1e-5);
            EXPECT_NEAR(numeric_rate(m, t, [](const TruthState& s) { return s.v_xy; }), st.a_xy, 1e-4);
            EXPECT_NEAR(numeric_rate(m, t, [](const TruthState& s) { return s.pitch; }), st.pitch_rate, 1e-4);
            EXPECT_NEAR(numeric_rate(m, t, [](const TruthState& s) { return s.v; }), st.a_t, 1e-4);
        }
    }
}

TEST(Simulator, LapGeometryAndTiming) {
    const LapScenario sc = default_scenario();
    const TrialModel m(sc);
    ASSERT_EQ(m.laps().size(), 8u);
    for (std::size_t k = 0; k < m.laps().size(); ++k) {
        const TruthLap& lap = m.laps()[k];
        EXPECT_NEAR(lap.path_length, 2.0 * sc.straight_length + kPi * sc.corner_radius, 1e-9);
        EXPECT_EQ(lap.turn_sign, k % 2 == 0 ? 1 : -1);
        // The lap ends a corner diameter sideways from where it began.
        const TruthState a = m.state(lap.start), b = m.state(lap.end);
        EXPECT_NEAR(std::hypot(b.x - a.x, b.y - a.y), 2.0 * sc.corner_radius, 1e-6);
        EXPECT_NEAR(b.yaw - a.yaw, lap.turn_sign * kPi, 1e-9);
    }
}

TEST(Simulator, PresetPeakAngularRate) {
    const LapScenario sc = preset_scenario("TT03").value();
    const TrialModel m(sc);
    double peak = 0.0;
    for (double t = 0.0; t < m.duration(); t += 0.02) peak = std::max(peak, std::abs(m.state(t).yaw_rate));
    EXPECT_NEAR(peak, sc.speed.corner / sc.corner_radius, 1e-6);
    EXPECT_GT(peak, 1.5);
    EXPECT_LT(peak, 2.5);
}

TEST(Simulator, DeterministicForSeed) {
    const LapScenario sc = preset_scenario("TT02").value();
    EXPECT_EQ(tag_to_csv(synthesize_tag(sc)), tag_to_csv(synthesize_tag(sc)));
    LapScenario other = sc;
    other.seed = sc.seed + 1;
    EXPECT_NE(tag_to_csv(synthesize_tag(sc)), tag_to_csv(synthesize_tag(other)));
}

TEST(Simulator, RowCountsFollowDurationAndRate) {
    const LapScenario sc = default_scenario();
    const TrialModel m(sc);
    const TagSeries tag = synthesize_tag(sc);
    EXPECT_EQ(tag.imu.size(), sample_count(m.duration(), sc.imu_rate));
    const std::size_t ratio = 10;
    ASSERT_EQ(sc.imu_rate, ratio * sc.aux_rate);
    EXPECT_EQ(tag.depth.t.size(), (tag.imu.size() + ratio - 1) / ratio);
    EXPECT_EQ(generate_truth(sc).samples.size(), tag.depth.t.size());
}

TEST(Simulator, CsvRoundTripsThroughIngest) {
    LapScenario sc = default_scenario();
    sc.laps = 1;
    const TagSeries tag = synthesize_tag(sc);
    std::istringstream in(tag_to_csv(tag));
    const TagSeries back = parse_tag_csv(in);
    ASSERT_EQ(back.imu.size(), tag.imu.size());
    ASSERT_EQ(back.speed.t.size(), tag.speed.t.size());
    for (std::size_t i = 0; i < tag.imu.size(); i += 37) EXPECT_NEAR(back.imu.accel[i][2], tag.imu.accel[i][2], 1e-7);
    for (std::size_t i = 0; i < tag.speed.t.size(); ++i) EXPECT_NEAR(back.speed.value[i], tag.speed.value[i], 1e-7);
}

TEST(Simulator, InfeasibleProfilesRejected) {
    LapScenario sc = default_scenario();
    sc.speed.corner = 5.0;
    EXPECT_THROW(TrialModel{sc}, InputError);
    sc = default_scenario();
    sc.straight_length = 5.0;
    EXPECT_THROW(TrialModel{sc}, InputError);
    sc = default_scenario();
    sc.corner_radius = -1.0;
    EXPECT_THROW(sc.validate(), InputError);
}

TEST(Simulator, ScenarioJsonRoundTrip) {
    const LapScenario sc = preset_scenario("TT01").value();
    const LapScenario back = scenario_from_json(scenario_to_json(sc));
    EXPECT_EQ(scenario_to_json(back).dump(), scenario_to_json(sc).dump());
    const LapScenario over = scenario_from_json(nlohmann::json{{"preset", "TT03"}, {"laps", 2}, {"speed", {{"cruise", 4.5}}}});
    EXPECT_EQ(over.laps, 2);
    EXPECT_EQ(over.speed.cruise, 4.5);
    EXPECT_EQ(over.corner_radius, 1.0);
    EXPECT_THROW(scenario_from_json(nlohmann::json{{"preset", "TT99"}}), InputError);
    EXPECT_THROW(scenario_from_json(nlohmann::json{{"laps", "many"}}), InputError);
}

TEST(Simulator, TruthCsvColumns) {
    LapScenario sc = default_scenario();
    sc.laps = 1;
    const TruthSeries truth = generate_truth(sc);
    const std::string csv = truth_to_csv(truth);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x,y,v,v_xy,yaw,pitch,depth,a_t,omega,a_n,lap,segment");
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), truth.samples.size() + 1);
}
