#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>

#include "dolphinlap/localization.hpp"
#include "dolphinlap/pipeline.hpp"
#include "dolphinlap/simulator.hpp"

using namespace dolphinlap;

namespace {

struct Arc {
    std::vector<double> t, x, y;
};

// Points on a circle of radius r traversed at speed v.
Arc circle_samples(double r, double v, double dt, std::size_t n) {
    Arc a;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double phi = v * t / r;
        a.t.push_back(t);
        a.x.push_back(r * std::cos(phi));
        a.y.push_back(r * std::sin(phi));
    }
    return a;
}

double interior_worst_radius_error(const Channel& radius, double r) {
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < radius.size(); ++i) worst = std::max(worst, std::abs(radius[i] - r));
    return worst;
}

}  // namespace

TEST(DeadReckon, StationaryStaysAtStart) {
    const std::vector<double> t{0.0, 0.2, 0.4, 0.6};
    const Track tr = dead_reckon(t, Channel(4, 0.0), Channel(4, 1.0), 0.2, {3.0, -2.0});
    for (std::size_t i = 0; i < tr.size(); ++i) {
        EXPECT_EQ(tr.x[i], 3.0);
        EXPECT_EQ(tr.y[i], -2.0);
    }
}

TEST(DeadReckon, StraightLine) {
    const std::vector<double> t{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    const Track tr = dead_reckon(t, Channel(6, 2.0), Channel(6, 0.0), 0.2, {0.0, 0.0});
    EXPECT_NEAR(tr.x.back(), 2.0, 1e-12);
    EXPECT_EQ(tr.y.back(), 0.0);
}

TEST(DeadReckon, TranslationAndRotationEquivariant) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t n = 50;
    std::vector<double> t(n), v(n), yaw(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = 0.2 * static_cast<double>(i);
        v[i] = 3.0 * u(rng);
        yaw[i] = 6.0 * u(rng);
    }
    const Point2 p0{1.5, -4.0};
    const double phi = 0.83;
    const Track a = dead_reckon(t, v, yaw, 0.2, p0);
    const Track shifted = dead_reckon(t, v, yaw, 0.2, {p0.x + 10.0, p0.y - 3.0});
    std::vector<double> yaw_r = yaw;
    for (double& y : yaw_r) y += phi;
    const Track rotated = dead_reckon(t, v, yaw_r, 0.2, p0);
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(shifted.x[i] - a.x[i], 10.0, 1e-12);
        EXPECT_NEAR(shifted.y[i] - a.y[i], -3.0, 1e-12);
        const double dx = a.x[i] - p0.x, dy = a.y[i] - p0.y;
        EXPECT_NEAR(rotated.x[i], p0.x + std::cos(phi) * dx - std::sin(phi) * dy, 1e-12);
        EXPECT_NEAR(rotated.y[i], p0.y + std::sin(phi) * dx + std::cos(phi) * dy, 1e-12);
    }
}

TEST(DeadReckon, SegmentAdditivity) {
    const std::size_t n = 30;
    std::vector<double> t(n), v(n), yaw(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = 0.2 * static_cast<double>(i);
        v[i] = 1.0 + 0.1 * static_cast<double>(i % 7);
        yaw[i] = 0.05 * static_cast<double>(i * i % 11);
    }
    const Track whole = dead_reckon(t, v, yaw, 0.2, {0.0, 0.0});
    const std::size_t cut = 12;
    const Track a = dead_reckon(std::span(t).first(cut + 1), std::span(v).first(cut + 1), std::span(yaw).first(cut + 1), 0.2,
                                {0.0, 0.0});
    const Track b = dead_reckon(std::span(t).subspan(cut), std::span(v).subspan(cut), std::span(yaw).subspan(cut), 0.2,
                                a.point(cut));
    for (std::size_t i = 0; i < b.size(); ++i) {
        EXPECT_NEAR(b.x[i], whole.x[cut + i], 1e-12);
        EXPECT_NEAR(b.y[i], whole.y[cut + i], 1e-12);
    }
}

TEST(DeadReckon, PathLengthEqualsSpeedSum) {
    const std::size_t n = 40;
    std::vector<double> t(n), v(n), yaw(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = 0.2 * static_cast<double>(i);
        v[i] = 2.0 + std::sin(0.3 * static_cast<double>(i));
        yaw[i] = 0.2 * static_cast<double>(i);
        if (i + 1 < n) sum += v[i] * 0.2;
    }
    EXPECT_NEAR(path_length(dead_reckon(t, v, yaw, 0.2, {0.0, 0.0})), sum, 1e-12);
}

TEST(DeadReckon, ArcMatchesGeometricSeries) {
    // Constant speed and turn rate: the Euler polygon endpoint is the
    // geometric sum v*dt*(1 - e^{i n h}) / (1 - e^{i h}) with h = omega*dt.
    const double r = 1.5, v = 2.0, dt = 0.2, h = v * dt / r;
    const std::size_t n = 24;
    std::vector<double> t(n + 1), vs(n + 1, v), yaw(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        t[i] = dt * static_cast<double>(i);
        yaw[i] = h * static_cast<double>(i);
    }
    const Track tr = dead_reckon(t, vs, yaw, dt, {0.0, 0.0});
    const std::complex<double> z = v * dt * (1.0 - std::polar(1.0, h * n)) / (1.0 - std::polar(1.0, h));
    EXPECT_NEAR(tr.x.back(), z.real(), 1e-12);
    EXPECT_NEAR(tr.y.back(), z.imag(), 1e-12);
}

TEST(DeadReckon, SimulatorLapEndpointWithinOnePercentOfPath) {
    // Heading lag over the semicircle displaces the endpoint by about v*dt;
    // the straights add nothing.
    sim::LapScenario sc = sim::default_scenario();
    sc.laps = 2;
    const sim::TrialModel model(sc);
    const TrialAnalysis a = analyze_tag(sim::synthesize_tag(sc), AnalysisSettings{});
    ASSERT_EQ(a.laps.size(), 2u);
    Point2 start = sc.start;
    for (const auto& lap : a.laps) {
        const Track tr = dead_reckon(a.kin, start, lap.events.begin, lap.events.end + 1);
        const sim::TruthState s0 = model.state(lap.events.t_s), s1 = model.state(lap.events.t_e);
        const double ex = s1.x - s0.x + start.x, ey = s1.y - s0.y + start.y;
        const double path = path_length(tr);
        EXPECT_LT(std::hypot(tr.x.back() - ex, tr.y.back() - ey), 0.01 * path);
        start = {s1.x, s1.y};
    }
}

TEST(CurvatureRadius, CircleInteriorWithinTwoPercent) {
    const Arc a = circle_samples(1.8, 2.0, 0.2, 20);
    const Channel r = curvature_radius(a.x, a.y, 0.2);
    EXPECT_TRUE(std::isinf(r.front()));
    EXPECT_TRUE(std::isinf(r.back()));
    EXPECT_LT(interior_worst_radius_error(r, 1.8), 0.02 * 1.8);
}

TEST(CurvatureRadius, CollinearIsInfinite) {
    const Channel x{0.0, 1.0, 2.0, 3.0, 4.0}, y{0.0, 0.5, 1.0, 1.5, 2.0};
    for (double r : curvature_radius(x, y, 0.2)) EXPECT_TRUE(std::isinf(r));
}

TEST(CurvatureRadius, SecondOrderConvergence) {
    double err[2];
    int k = 0;
    for (double dt : {0.2, 0.1}) {
        const Arc a = circle_samples(1.8, 2.0, dt, static_cast<std::size_t>(std::lround(2.0 / dt)) + 1);
        err[k++] = interior_worst_radius_error(curvature_radius(a.x, a.y, dt), 1.8);
    }
    EXPECT_NEAR(err[0] / err[1], 4.0, 0.2);
}

TEST(FitCircle, ExactPointsAndThreePointCircle) {
    std::vector<Point2> pts;
    for (double a : {0.1, 1.2, 2.9, 4.4}) pts.push_back({1.0 + 3.0 * std::cos(a), 2.0 + 3.0 * std::sin(a)});
    CircleFit f = fit_circle(pts);
    EXPECT_NEAR(f.cx, 1.0, 1e-9);
    EXPECT_NEAR(f.cy, 2.0, 1e-9);
    EXPECT_NEAR(f.radius, 3.0, 1e-9);
    EXPECT_NEAR(f.rms_residual, 0.0, 1e-9);

    // Circumscribed circle of a right triangle: centre at the hypotenuse midpoint.
    const std::vector<Point2> tri{{0.0, 0.0}, {4.0, 0.0}, {0.0, 3.0}};
    f = fit_circle(tri);
    EXPECT_NEAR(f.cx, 2.0, 1e-9);
    EXPECT_NEAR(f.cy, 1.5, 1e-9);
    EXPECT_NEAR(f.radius, 2.5, 1e-9);
}

TEST(FitCircle, UniformNoise) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    std::vector<Point2> pts;
    for (int i = 0; i < 60; ++i) {
        const double a = 0.05 * i;
        pts.push_back({-3.0 + 1.5 * std::cos(a) + noise(rng), 4.0 + 1.5 * std::sin(a) + noise(rng)});
    }
    EXPECT_NEAR(fit_circle(pts).radius, 1.5, 0.02);
}

TEST(FitCircle, CollinearThrows) {
    const std::vector<Point2> line{{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}};
    EXPECT_THROW(fit_circle(line), AnalysisError);
    EXPECT_THROW(fit_circle(std::vector<Point2>{{0.0, 0.0}, {1.0, 0.0}}), AnalysisError);
}

TEST(AlignAtCorner, TranslationInvarianceAndOrigin) {
    Track a;
    for (int i = 0; i < 10; ++i) {
        a.t.push_back(0.2 * i);
        a.x.push_back(0.5 * i);
        a.y.push_back(i < 5 ? 0.0 : 0.3 * (i - 5));
    }
    Track b = a;
    for (auto& x : b.x) x += 7.0;
    for (auto& y : b.y) y -= 2.0;
    const std::vector<Track> in{a, b};
    const std::vector<std::optional<std::size_t>> corners{5, 5};
    const auto out = align_at_corner(in, corners);
    EXPECT_EQ(out[0].x[5], 0.0);
    EXPECT_EQ(out[0].y[5], 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(out[0].x[i], out[1].x[i], 1e-12);
        EXPECT_NEAR(out[0].y[i], out[1].y[i], 1e-12);
    }
    // Pre-corner heading along +x.
    EXPECT_NEAR(out[0].y[0], 0.0, 1e-12);
    EXPECT_LT(out[0].x[0], 0.0);

    const std::vector<std::optional<std::size_t>> missing{5, std::nullopt};
    EXPECT_THROW(align_at_corner(in, missing), AnalysisError);
}

TEST(AlignAtCorner, MirroredTurnsMirrorAboutXAxis) {
    sim::LapScenario sc = sim::default_scenario();
    sc.laps = 2;  // alternate: left then right
    AnalysisSettings s;
    const TrialAnalysis a = analyze_tag(sim::synthesize_tag(sc), s);
    ASSERT_EQ(a.laps.size(), 2u);
    std::vector<Track> tracks{a.laps[0].track, a.laps[1].track};
    std::vector<std::optional<std::size_t>> corners{a.laps[0].events.corner - a.laps[0].events.begin,
                                                    a.laps[1].events.corner - a.laps[1].events.begin};
    const auto out = align_at_corner(tracks, corners);
    // Compare the corner neighbourhood sample by sample. The corner sample can
    // sit up to half a sample spacing from the true apex.
    const double tol = 0.5 * sc.speed.corner / sc.aux_rate;
    for (int d = -5; d <= 5; ++d) {
        const std::size_t i0 = static_cast<std::size_t>(static_cast<long>(*corners[0]) + d);
        const std::size_t i1 = static_cast<std::size_t>(static_cast<long>(*corners[1]) + d);
        EXPECT_NEAR(out[0].x[i0], out[1].x[i1], tol);
        EXPECT_NEAR(out[0].y[i0], -out[1].y[i1], tol);
    }
    // The left lap ends up on the +y side, the right lap on -y.
    EXPECT_GT(out[0].y.back(), 1.0);
    EXPECT_LT(out[1].y.back(), -1.0);
}

TEST(TrackGeoJson, LineStringPerLap) {
    Track tr;
    tr.t = {0.0, 0.2};
    tr.x = {0.0, 11.12};
    tr.y = {0.0, 0.0};
    const std::vector<Track> laps{tr};
    const auto doc = nlohmann::json::parse(track_to_geojson(laps, GeoPoint{0.0, 0.0}));
    EXPECT_EQ(doc["type"], "FeatureCollection");
    const auto& coords = doc["features"][0]["geometry"]["coordinates"];
    EXPECT_EQ(coords.size(), 2u);
    EXPECT_NEAR(coords[1][0].get<double>(), 1e-4, 1e-6);  // lon
}
