#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dolphinlap/ingest.hpp"
#include "dolphinlap/io.hpp"
#include "dolphinlap/simulator.hpp"

using namespace dolphinlap;

namespace {

const char* kHeader = "t,ax,ay,az,gx,gy,gz,mx,my,mz,depth,speed,temp\n";

TagSeries parse(const std::string& text, const ColumnSchema& schema = {}) {
    std::istringstream in(text);
    return parse_tag_csv(in, schema);
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(FormatNumber, NineSignificantDigits) {
    EXPECT_EQ(io::format_number(1.0 / 3.0), "0.333333333");
    EXPECT_EQ(io::format_number(-0.0), "0");
    EXPECT_EQ(io::format_number(kInf), "inf");
    EXPECT_EQ(io::format_number(-kInf), "-inf");
    EXPECT_EQ(io::format_number(kNaN), "nan");
    EXPECT_EQ(io::format_number(123456789012.0), "1.23456789e+11");
}

TEST(ParseCell, RejectsTrailingGarbage) {
    double v = 0.0;
    EXPECT_TRUE(io::parse_cell(" 2.5 ", v));
    EXPECT_DOUBLE_EQ(v, 2.5);
    EXPECT_FALSE(io::parse_cell("", v));
    EXPECT_THROW(io::parse_cell("2.5x", v), InputError);
}

TEST(ParseTagCsv, ThreeWellFormedRows) {
    const TagSeries s = parse(std::string(kHeader) +
                              "0,0,0,9.81,0,0,0,1,0,0,0.4,0,25\n"
                              "0.02,0,0,9.81,0,0,0,1,0,0,0.4,0,25\n"
                              "0.04,0,0,9.81,0,0,0,1,0,0,0.4,0.1,25\n");
    EXPECT_EQ(s.imu.size(), 3u);
    EXPECT_EQ(s.depth.size(), 3u);
    EXPECT_EQ(s.speed.size(), 3u);
    EXPECT_TRUE(s.imu.has_mag());
    EXPECT_TRUE(s.flagged_rows.empty());
    EXPECT_DOUBLE_EQ(s.speed.value[2], 0.1);
}

TEST(ParseTagCsv, DuplicatedTimestampIsNonMonotone) {
    const std::string msg = error_of(std::string(kHeader) +
                                     "0,0,0,9.81,0,0,0,1,0,0,0.4,0,25\n"
                                     "0,0,0,9.81,0,0,0,1,0,0,0.4,0,25\n");
    EXPECT_NE(msg.find("non-monotone time"), std::string::npos) << msg;
}

TEST(ParseTagCsv, MissingColumnAndEmptyFile) {
    EXPECT_NE(error_of("t,ax,ay,az,gx,gy,gz,depth\n0,0,0,9.8,0,0,0,1\n").find("missing column 'speed'"),
              std::string::npos);
    EXPECT_NE(error_of("").find("empty file"), std::string::npos);
    EXPECT_NE(error_of(kHeader).find("empty file"), std::string::npos);
}

TEST(ParseTagCsv, NonFiniteRowsAreFlaggedNotDropped) {
    const TagSeries s = parse(std::string(kHeader) +
                              "0,0,0,9.81,0,0,0,1,0,0,0.4,0,25\n"
                              "0.02,nan,0,9.81,0,0,0,1,0,0,-1,0,25\n"
                              "0.04,0,0,9.81,0,0,0,1,0,0,0.4,0.2,25\n");
    ASSERT_EQ(s.flagged_rows.size(), 1u);
    EXPECT_EQ(s.flagged_rows[0], 2u);
    EXPECT_EQ(s.imu.size(), 2u);
    EXPECT_EQ(s.depth.size(), 2u);  // negative depth excluded
    EXPECT_EQ(s.speed.size(), 3u);  // the row's valid speed is kept
}

TEST(ParseTagCsv, ColumnSchemaMapsExportHeaders) {
    ColumnSchema schema;
    schema.columns = {{"t", "Time"}, {"ax", "AccX"}, {"depth", "Depth_m"}};
    const TagSeries s = parse("Time,AccX,ay,az,gx,gy,gz,Depth_m,speed\n0,0,0,9.81,0,0,0,1.2,0\n0.1,0,0,9.81,0,0,0,1.3,0\n",
                              schema);
    EXPECT_EQ(s.imu.size(), 2u);
    EXPECT_FALSE(s.imu.has_mag());
    EXPECT_DOUBLE_EQ(s.depth.value[1], 1.3);
}

TEST(ParseTagCsv, SimulatorFilePreservesBothNativeRates) {
    sim::LapScenario sc = sim::default_scenario();
    sc.laps = 1;
    const TagSeries tag = sim::synthesize_tag(sc);
    const TagSeries back = parse(sim::tag_to_csv(tag));
    EXPECT_EQ(back.imu.size(), tag.imu.size());
    EXPECT_EQ(back.depth.size(), tag.depth.size());
    EXPECT_EQ(back.speed.size(), tag.speed.size());
    // Aux cells sit on every tenth IMU row starting with the first.
    EXPECT_EQ(back.depth.size(), (back.imu.size() + 9) / 10);
    EXPECT_NEAR(back.imu.t[1] - back.imu.t[0], 0.02, 1e-12);
    EXPECT_NEAR(back.depth.t[1] - back.depth.t[0], 0.2, 1e-12);
    EXPECT_TRUE(back.flagged_rows.empty());
}

TEST(ResampleLinear, ConstantAndRampAreExact) {
    TimedChannel c;
    for (int i = 0; i <= 500; ++i) {
        c.t.push_back(i * 0.02);
        c.value.push_back(i * 0.02);
    }
    const MasterTimeline tl = MasterTimeline::covering(0.0, 10.0, 0.2);
    EXPECT_EQ(tl.n, 51u);
    const Channel r = resample_linear(c, tl);
    for (std::size_t i = 0; i < tl.n; ++i) EXPECT_NEAR(r[i], tl.at(i), 1e-12);

    for (double& v : c.value) v = 3.5;
    for (double v : resample_linear(c, tl)) EXPECT_EQ(v, 3.5);
}

TEST(ResampleLinear, SineWithinInterpolationBound) {
    TimedChannel c;
    for (int i = 0; i <= 1000; ++i) {
        c.t.push_back(i * 0.02);
        c.value.push_back(std::sin(i * 0.02));
    }
    // Shift the grid off the native samples so interpolation actually happens.
    const MasterTimeline tl = MasterTimeline::covering(0.01, 19.9, 0.2);
    const Channel r = resample_linear(c, tl);
    double worst = 0.0;
    for (std::size_t i = 0; i < tl.n; ++i) worst = std::max(worst, std::abs(r[i] - std::sin(tl.at(i))));
    EXPECT_LT(worst, 2e-4);
}

TEST(ResampleLinear, IdempotentOnTimelineData) {
    const MasterTimeline tl = MasterTimeline::covering(1.0, 5.0, 0.2);
    TimedChannel c{tl.times(), {}};
    for (double t : c.t) c.value.push_back(std::cos(3.0 * t));
    const Channel r = resample_linear(c, tl);
    for (std::size_t i = 0; i < tl.n; ++i) EXPECT_EQ(r[i], c.value[i]);
}

TEST(ResampleLinear, RefusesToExtrapolate) {
    TimedChannel c{{0.0, 1.0}, {0.0, 1.0}};
    EXPECT_THROW(resample_linear(c, MasterTimeline{0.0, 0.2, 7}), AnalysisError);
    EXPECT_THROW(resample_linear(TimedChannel{{0.0}, {1.0}}, MasterTimeline{0.0, 0.2, 1}), AnalysisError);
}

TEST(MovingAverage, WindowWidthIsOdd) {
    EXPECT_EQ(moving_average_width(1.0, 0.2), 5u);
    EXPECT_EQ(moving_average_width(0.8, 0.2), 5u);
    EXPECT_EQ(moving_average_width(0.4, 0.2), 3u);
    EXPECT_EQ(moving_average_width(0.01, 0.2), 1u);
}

TEST(MovingAverage, ConstantRampAndImpulse) {
    const Channel c(20, 4.0);
    for (double v : moving_average(c, 1.0, 0.2)) EXPECT_DOUBLE_EQ(v, 4.0);

    Channel ramp(20);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.5 * static_cast<double>(i) - 3.0;
    const Channel r = moving_average(ramp, 1.0, 0.2);
    for (std::size_t i = 0; i < ramp.size(); ++i) EXPECT_NEAR(r[i], ramp[i], 1e-12);  // edges shrink symmetrically too

    Channel imp(15, 0.0);
    imp[7] = 1.0;
    const Channel m = moving_average(imp, 1.0, 0.2);
    for (std::size_t i = 0; i < imp.size(); ++i) EXPECT_NEAR(m[i], (i >= 5 && i <= 9) ? 0.2 : 0.0, 1e-15);
}

TEST(MovingAverage, EdgeWindowsShrinkSymmetrically) {
    const Channel x{1.0, 2.0, 10.0, 3.0, 5.0, 8.0};
    const Channel m = moving_average(x, 1.0, 0.2);
    EXPECT_DOUBLE_EQ(m[0], 1.0);
    EXPECT_DOUBLE_EQ(m[1], (1.0 + 2.0 + 10.0) / 3.0);
    EXPECT_DOUBLE_EQ(m[2], (1.0 + 2.0 + 10.0 + 3.0 + 5.0) / 5.0);
    EXPECT_DOUBLE_EQ(m[4], (3.0 + 5.0 + 8.0) / 3.0);
    EXPECT_DOUBLE_EQ(m[5], 8.0);
    EXPECT_THROW(moving_average(Channel{}, 1.0, 0.2), AnalysisError);
}

TEST(MovingAverage, CommutesWithConstantOffset) {
    Channel x(40);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.7 * static_cast<double>(i));
    Channel y = x;
    for (double& v : y) v += 2.5;
    const Channel mx = moving_average(x, 1.0, 0.2), my = moving_average(y, 1.0, 0.2);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(my[i], mx[i] + 2.5, 1e-12);
}

TEST(MovingAverage, PreservesMeanOfPeriodicSignalAwayFromEdges) {
    // Period of 5 samples equals the window, so the interior output is the mean.
    Channel x(50);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0 + std::sin(2.0 * kPi * static_cast<double>(i) / 5.0);
    const Channel m = moving_average(x, 1.0, 0.2);
    for (std::size_t i = 2; i + 2 < x.size(); ++i) EXPECT_NEAR(m[i], 1.0, 1e-12);
}

TEST(Unwrap, RemovesTwoPiJumps) {
    Channel wrapped;
    Channel truth;
    for (int i = 0; i < 200; ++i) {
        const double a = 0.1 * i;
        truth.push_back(a);
        wrapped.push_back(std::atan2(std::sin(a), std::cos(a)));
    }
    const Channel u = unwrap(wrapped);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(u[i], truth[i], 1e-9);
}

TEST(LatLonToLocal, OriginAndSmallOffsets) {
    const GeoPoint o{21.28, -157.83};
    const Point2 p0 = latlon_to_local(o.lat, o.lon, o);
    EXPECT_EQ(p0.x, 0.0);
    EXPECT_EQ(p0.y, 0.0);

    const Point2 north = latlon_to_local(o.lat + 1e-4, o.lon, o);
    EXPECT_NEAR(north.y, 6371000.0 * 1e-4 * kPi / 180.0, 1e-9);
    EXPECT_NEAR(north.y, 11.12, 0.005);
    EXPECT_EQ(north.x, 0.0);

    const Point2 east = latlon_to_local(0.0, 1e-4, GeoPoint{0.0, 0.0});
    EXPECT_NEAR(east.x, 11.12, 0.005);
}

TEST(LatLonToLocal, RoundTripBelowMicrometre) {
    const GeoPoint o{21.28, -157.83};
    for (double dx : {-400.0, -3.0, 0.5, 250.0, 700.0})
        for (double dy : {-650.0, 0.0, 12.0, 480.0}) {
            const GeoPoint g = local_to_latlon({dx, dy}, o);
            const Point2 back = latlon_to_local(g.lat, g.lon, o);
            EXPECT_NEAR(back.x, dx, 1e-6);
            EXPECT_NEAR(back.y, dy, 1e-6);
        }
}

TEST(Boundary, ParsesPolygonAndRejectsBowtie) {
    const nlohmann::json square = {
        {"type", "Feature"},
        {"geometry",
         {{"type", "Polygon"},
          {"coordinates", {{{-157.83, 21.28}, {-157.8296, 21.28}, {-157.8296, 21.2804}, {-157.83, 21.2804}, {-157.83, 21.28}}}}}}};
    const LagoonBoundary b = parse_boundary_geojson(square);
    ASSERT_EQ(b.vertices.size(), 4u);
    EXPECT_EQ(b.vertices[0].x, 0.0);
    EXPECT_NEAR(b.vertices[2].y, 44.48, 0.01);

    const nlohmann::json bowtie = {
        {"type", "Polygon"},
        {"coordinates", {{{0.0, 0.0}, {0.001, 0.001}, {0.001, 0.0}, {0.0, 0.001}, {0.0, 0.0}}}}};
    EXPECT_THROW(parse_boundary_geojson(bowtie), InputError);
    const nlohmann::json line = {{"type", "Polygon"}, {"coordinates", {{{0.0, 0.0}, {0.001, 0.0}, {0.0, 0.0}}}}};
    EXPECT_THROW(parse_boundary_geojson(line), InputError);
}

TEST(Fnv1a, KnownVector) {
    EXPECT_EQ(io::hex64(io::fnv1a64("")), "cbf29ce484222325");
    EXPECT_EQ(io::hex64(io::fnv1a64("a")), "af63dc4c8601ec8c");
}
