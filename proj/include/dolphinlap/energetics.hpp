#pragma once

// Rigid-body hydrodynamic model: effective mass with added mass, depth
// dependent drag, thrust power, cost of transport, work integrals and the
// m*g^1.5*L^0.5 normalization.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dolphinlap/error.hpp"
#include "dolphinlap/kinematics.hpp"
#include "dolphinlap/types.hpp"

namespace dolphinlap {

struct AnimalParams {
    std::string name;
    double mass = 156.2;         // kg
    double length = 2.24;        // m
    double volume = 156.2 / 1025.0;  // m^3
    double p_rmr = 347.9;        // W, resting metabolic power
    double eta_ms = 0.25;        // metabolic -> mechanical
    double eta_sp = 0.85;        // internal -> propulsive
    double rho = 1030.0;         // kg/m^3
    double nu = 1.044e-6;        // m^2/s
    double g = 9.81;             // m/s^2
    /// Optional speed-dependent propulsive efficiency; overrides eta_sp.
    std::function<double(double)> eta_sp_of_speed;

    double eta_sp_at(double v) const { return eta_sp_of_speed ? eta_sp_of_speed(v) : eta_sp; }

    void validate() const {
        auto positive = [](double v, const char* what) {
            if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string("animal parameter '") + what + "' must be positive");
        };
        positive(mass, "mass");
        positive(length, "length");
        positive(volume, "volume");
        positive(p_rmr, "p_rmr");
        positive(rho, "rho");
        positive(nu, "nu");
        positive(g, "g");
        if (!(eta_ms > 0.0 && eta_ms <= 1.0)) throw InputError("eta_ms must be in (0, 1]");
        if (!(eta_sp > 0.0 && eta_sp <= 1.0)) throw InputError("eta_sp must be in (0, 1]");
    }

    /// Animal with volume defaulted to near-neutral tissue density.
    static AnimalParams make(std::string name, double mass, double length, double p_rmr) {
        AnimalParams p;
        p.name = std::move(name);
        p.mass = mass;
        p.length = length;
        p.volume = mass / 1025.0;
        p.p_rmr = p_rmr;
        return p;
    }

    static AnimalParams tt01() { return make("TT01", 156.2, 2.24, 347.9); }
    static AnimalParams tt02() { return make("TT02", 244.7, 2.54, 442.9); }
    static AnimalParams tt03() { return make("TT03", 142.6, 2.20, 317.6); }

    static std::optional<AnimalParams> preset(const std::string& name) {
        if (name == "TT01") return tt01();
        if (name == "TT02") return tt02();
        if (name == "TT03") return tt03();
        return std::nullopt;
    }
};

/// Wave-drag multiplier as a piecewise-linear function of submergence
/// depth over body diameter. Clamped to the end values outside the table.
struct GammaTable {
    std::vector<std::pair<double, double>> points{{0.5, 2.5}, {3.0, 1.0}};

    double at(double ratio) const {
        if (points.empty()) return 1.0;
        if (ratio <= points.front().first) return points.front().second;
        if (ratio >= points.back().first) return points.back().second;
        for (std::size_t i = 1; i < points.size(); ++i) {
            if (ratio <= points[i].first) {
                const auto [x0, y0] = points[i - 1];
                const auto [x1, y1] = points[i];
                return y0 + (y1 - y0) * (ratio - x0) / (x1 - x0);
            }
        }
        return points.back().second;
    }

    void validate() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].second < 1.0) throw InputError("gamma table values must be >= 1");
            if (i && !(points[i].first > points[i - 1].first))
                throw InputError("gamma table depth ratios must increase");
        }
    }
};

struct EnergeticsOptions {
    GammaTable gamma;
    double diameter_ratio = 0.2;  // body diameter = ratio * L
    double v_min = 0.05;          // m/s, COT undefined at or below
};

inline double wave_drag_factor(double depth, double body_diameter, const GammaTable& table = {}) {
    if (!(body_diameter > 0.0)) throw AnalysisError("body diameter must be positive");
    return table.at(std::max(depth, 0.0) / body_diameter);
}

inline double surface_area(const AnimalParams& p) { return 0.08 * std::pow(p.mass, 0.65); }

inline double reynolds_number(double v, const AnimalParams& p) { return v * p.length / p.nu; }

inline double drag_coefficient(double v, const AnimalParams& p) {
    return 16.99 * std::pow(reynolds_number(v, p), -0.47);
}

inline double effective_mass(const AnimalParams& p) { return p.mass + 0.4 * p.rho * p.volume; }

/// Drag force along the swimming direction (<= 0) for a given wave factor.
inline double drag_force_gamma(double v, double gamma, const AnimalParams& p) {
    if (v < 0.0) throw AnalysisError("speed must be non-negative");
    if (v == 0.0) return 0.0;
    return -0.5 * p.rho * surface_area(p) * drag_coefficient(v, p) * gamma * v * v;
}

inline double drag_force(double v, double depth, const AnimalParams& p, const EnergeticsOptions& opt = {}) {
    return drag_force_gamma(v, wave_drag_factor(depth, opt.diameter_ratio * p.length, opt.gamma), p);
}

struct PowerSample {
    double t = 0.0;
    double v = 0.0;
    double a_t = 0.0;
    double depth = 0.0;
    double gamma = 1.0;
    double f_drag = 0.0;      // N, <= 0
    double f_thrust = 0.0;    // N
    double p_inertial = 0.0;  // W
    double p_drag = 0.0;      // W, drag power F_drag * v (<= 0)
    double p_thrust = 0.0;    // W
    double p_t_nd = 0.0;
    double cot = kNaN;        // J/(kg m); NaN where undefined
};

inline double normalization_constant(const AnimalParams& p) {
    return p.mass * std::pow(p.g, 1.5) * std::sqrt(p.length);
}

/// Power or work divided by m*g^1.5*L^0.5.
inline double nondimensionalize(double value, const AnimalParams& p) { return value / normalization_constant(p); }

/// Cost of transport; nullopt when v <= v_min.
inline std::optional<double> cost_of_transport(double p_thrust, double v, const AnimalParams& p, double v_min = 0.05) {
    if (!(v > v_min)) return std::nullopt;
    return (p_thrust / (p.eta_ms * p.eta_sp_at(v)) + p.p_rmr) / (p.mass * v);
}

inline PowerSample thrust_power(double v, double a_t, double depth, const AnimalParams& p,
                                const EnergeticsOptions& opt = {}) {
    if (v < 0.0) throw AnalysisError("speed must be non-negative");
    PowerSample s;
    s.v = v;
    s.a_t = a_t;
    s.depth = depth;
    s.gamma = wave_drag_factor(depth, opt.diameter_ratio * p.length, opt.gamma);
    s.f_drag = drag_force_gamma(v, s.gamma, p);
    const double m_eff = effective_mass(p);
    s.f_thrust = m_eff * a_t - s.f_drag;
    s.p_inertial = m_eff * a_t * v;
    s.p_drag = s.f_drag * v;
    s.p_thrust = s.p_inertial - s.p_drag;
    s.p_t_nd = nondimensionalize(s.p_thrust, p);
    s.cot = cost_of_transport(s.p_thrust, v, p, opt.v_min).value_or(kNaN);
    return s;
}

inline std::vector<PowerSample> power_series(const KinematicSeries& k, const AnimalParams& p,
                                             const EnergeticsOptions& opt = {}) {
    std::vector<PowerSample> out(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        out[i] = thrust_power(k.v[i], k.a_t[i], k.depth[i], p, opt);
        out[i].t = k.t[i];
    }
    return out;
}

struct WorkSummary {
    double thrust_signed = 0.0;     // J, sum of P_thrust dt
    double thrust_rectified = 0.0;  // J, sum of max(P_thrust, 0) dt
    double drag = 0.0;              // J, sum of P_drag dt (<= 0)

    WorkSummary& operator+=(const WorkSummary& o) {
        thrust_signed += o.thrust_signed;
        thrust_rectified += o.thrust_rectified;
        drag += o.drag;
        return *this;
    }
};

/// Rectangle-rule work over samples [begin, end).
inline WorkSummary thrust_work(std::span<const PowerSample> samples, double dt, std::size_t begin, std::size_t end) {
    if (begin >= end || end > samples.size()) throw AnalysisError("empty or out-of-range work window");
    WorkSummary w;
    for (std::size_t i = begin; i < end; ++i) {
        w.thrust_signed += samples[i].p_thrust * dt;
        w.thrust_rectified += std::max(samples[i].p_thrust, 0.0) * dt;
        w.drag += samples[i].p_drag * dt;
    }
    return w;
}

// ---------------------------------------------------------------------------
// Power-law fits P = a1 * v^a2

struct PowerLawFit {
    double coefficient = 0.0;  // a1 (or b1)
    double exponent = 0.0;     // a2 (or b2)
    double rms = 0.0;          // RMS residual in the data's units
    int iterations = 0;

    double operator()(double v) const { return coefficient * std::pow(v, exponent); }
};

/// Residual space for power-law fits. Log residuals suit multiplicative
/// scatter, which is what per-lap power estimates show; linear residuals
/// weight the fast, high-power points most.
enum class FitResidual { log, linear };

/// Least-squares fit of y = a1 * x^a2. The log-log regression is the exact
/// solution for log residuals and seeds a Levenberg-Marquardt refinement for
/// linear ones.
inline PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y,
                                 FitResidual residual = FitResidual::log) {
    if (x.size() != y.size()) throw AnalysisError("power-law fit needs paired samples");
    if (x.size() < 3) throw AnalysisError("power-law fit needs at least 3 points");
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i)
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw AnalysisError("power-law fit requires positive data");

    // Seed: ordinary least squares in log space.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double dn = static_cast<double>(n);
    const double varx = sxx - sx * sx / dn;
    if (!(varx > 1e-14 * std::max(1.0, sxx))) throw AnalysisError("singular normal equations");
    double b = (sxy - sx * sy / dn) / varx;
    double a = std::exp((sy - b * sx) / dn);

    auto sse_linear = [&](double ca, double cb) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - ca * std::pow(x[i], cb);
            s += r * r;
        }
        return s;
    };

    PowerLawFit fit;
    if (residual == FitResidual::log) {
        fit.coefficient = a;
        fit.exponent = b;
        fit.iterations = 1;
        fit.rms = std::sqrt(sse_linear(a, b) / dn);
        return fit;
    }

    double lambda = 1e-3;
    double cost = sse_linear(a, b);
    bool converged = false;
    for (int it = 0; it < 200 && !converged; ++it) {
        fit.iterations = it + 1;
        double jaa = 0, jab = 0, jbb = 0, ga = 0, gb = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::pow(x[i], b);
            const double db = a * p * std::log(x[i]);
            const double r = y[i] - a * p;
            jaa += p * p;
            jab += p * db;
            jbb += db * db;
            ga += p * r;
            gb += db * r;
        }
        bool improved = false;
        for (int tries = 0; tries < 30 && !improved; ++tries) {
            const double m11 = jaa * (1.0 + lambda), m22 = jbb * (1.0 + lambda);
            const double det = m11 * m22 - jab * jab;
            if (!(std::abs(det) > 0.0)) throw AnalysisError("singular normal equations");
            const double step_a = (ga * m22 - gb * jab) / det;
            const double step_b = (m11 * gb - jab * ga) / det;
            const double ncost = sse_linear(a + step_a, b + step_b);
            if (a + step_a > 0.0 && ncost <= cost) {
                converged = std::abs(step_a) <= 1e-14 * a && std::abs(step_b) <= 1e-14 * std::max(std::abs(b), 1.0);
                a += step_a;
                b += step_b;
                cost = ncost;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved) converged = true;
    }
    fit.coefficient = a;
    fit.exponent = b;
    fit.rms = std::sqrt(cost / dn);
    return fit;
}

/// Model cost of transport for a fitted dimensional power law.
inline double predicted_cot(double v, const PowerLawFit& power, const AnimalParams& p) {
    return (power(v) / (p.eta_ms * p.eta_sp_at(v)) + p.p_rmr) / (p.mass * v);
}

/// Speed minimizing the model COT with constant efficiencies. Exists for
/// exponents above 1.
inline std::optional<double> minimum_cot_speed(const PowerLawFit& power, const AnimalParams& p) {
    if (!(power.exponent > 1.0) || !(power.coefficient > 0.0)) return std::nullopt;
    const double eta = p.eta_ms * p.eta_sp;
    return std::pow(p.p_rmr * eta / (power.coefficient * (power.exponent - 1.0)), 1.0 / power.exponent);
}

/// Converts a fit of P_nd against body-length speed into dimensional form
/// P = a1 * v^a2 for one animal.
inline PowerLawFit dimensional_from_nondimensional(const PowerLawFit& nd, const AnimalParams& p) {
    PowerLawFit out = nd;
    out.coefficient = nd.coefficient * normalization_constant(p) / std::pow(p.length, nd.exponent);
    return out;
}

}  // namespace dolphinlap
