#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "splinefusion/beamsim.hpp"
#include "splinefusion/bspline.hpp"
#include "splinefusion/config.hpp"
#include "splinefusion/errors.hpp"
#include "splinefusion/fusion.hpp"
#include "splinefusion/kalman.hpp"
#include "splinefusion/statespace.hpp"
#include "splinefusion/timeseries.hpp"

namespace splinefusion::io {

// Default collocated stations: 8 equally spaced at x_i = 4iL/39, clear of
// the clamped root and of the thin tip region.
inline Eigen::VectorXd collocated_stations(double length) {
    Eigen::VectorXd out(8);
    for (int i = 1; i <= 8; ++i) out(i - 1) = 4.0 * i * length / 39.0;
    return out;
}

// Non-collocated layout: accelerometers at odd, gauges at even multiples of L/16.
inline Eigen::VectorXd noncollocated_accel_stations(double length) {
    Eigen::VectorXd out(8);
    for (int i = 1; i <= 8; ++i) out(i - 1) = (2 * i - 1) * length / 16.0;
    return out;
}

inline Eigen::VectorXd noncollocated_strain_stations(double length) {
    Eigen::VectorXd out(8);
    for (int i = 1; i <= 8; ++i) out(i - 1) = 2 * i * length / 16.0;
    return out;
}

inline beamsim::BeamGeometry make_geometry(const ScenarioConfig& cfg) {
    beamsim::BeamGeometry g;
    g.length = cfg.length;
    g.width = cfg.width;
    g.depth_root = cfg.depth_root;
    g.depth_tip = cfg.depth_tip;
    g.youngs_modulus = cfg.youngs_modulus;
    g.density = cfg.density;
    g.n_elements = cfg.n_elements;
    return g;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Resolves the sensor blocks: empty accel positions fall back to the
// collocated default stations, empty strain positions to the accel
// stations, empty depths to the surface value h(x)/2 at each gauge.
inline statespace::SensorLayout make_layout(const ScenarioConfig& cfg) {
    const beamsim::BeamGeometry geometry = make_geometry(cfg);
    statespace::SensorLayout layout;
    layout.accel_positions =
        cfg.accel_positions.empty() ? collocated_stations(cfg.length) : to_eigen(cfg.accel_positions);
    layout.strain_positions =
        cfg.strain_positions.empty() ? layout.accel_positions : to_eigen(cfg.strain_positions);
    if (cfg.strain_depths.empty()) {
        layout.strain_depths.resize(layout.strain_positions.size());
        for (Eigen::Index i = 0; i < layout.strain_positions.size(); ++i)
            layout.strain_depths(i) = geometry.depth_at(layout.strain_positions(i)) / 2.0;
    } else {
        if (cfg.strain_depths.size() != static_cast<size_t>(layout.strain_positions.size()))
            throw ConfigError("sensors.strain_depths must align with the strain stations");
        layout.strain_depths = to_eigen(cfg.strain_depths);
    }
    layout.bc_displacement_positions = to_eigen(cfg.bc_displacement_positions);
    layout.bc_displacement_values = to_eigen(cfg.bc_displacement_values);
    layout.bc_slope_positions = to_eigen(cfg.bc_slope_positions);
    layout.bc_slope_values = to_eigen(cfg.bc_slope_values);
    return layout;
}

// k = m + order, i.e. n_internal = m - degree + 1, uniform over [0, L].
inline bspline::BasisSet make_basis(const ScenarioConfig& cfg, int m_override = 0) {
    int n_internal = cfg.n_internal_knots;
    if (m_override > 0) {
        n_internal = m_override - cfg.degree + 1;
        if (n_internal < 2)
            throw ConfigError("infeasible spline count m=" + std::to_string(m_override) +
                              " for degree " + std::to_string(cfg.degree));
    }
    return bspline::BasisSet(bspline::build_knot_vector(0.0, cfg.length, n_internal, cfg.degree));
}

inline Eigen::VectorXd query_grid(const ScenarioConfig& cfg) {
    if (!cfg.query_positions.empty()) return to_eigen(cfg.query_positions);
    return Eigen::VectorXd::LinSpaced(cfg.query_grid_count, 0.0, cfg.length);
}

struct ScenarioData {
    TimeSeriesMatrix accel;         // noisy
    TimeSeriesMatrix strain;        // noisy
    TimeSeriesMatrix accel_clean;
    TimeSeriesMatrix strain_clean;
    TimeSeriesMatrix truth;         // displacement at the query grid
};

// FE model -> Rayleigh damping -> chirp -> Newmark -> sensor sampling ->
// calibrated noise injection. Deterministic for a given (config, seed).
inline ScenarioData simulate_scenario(const ScenarioConfig& cfg) {
    validate_config(cfg);
    const beamsim::BeamGeometry geometry = make_geometry(cfg);
    beamsim::FEModel model = beamsim::build_fe_model(geometry);
    model = beamsim::rayleigh_damping(std::move(model), cfg.zeta1_percent, cfg.zeta2_percent);
    const double load_position = cfg.position < 0 ? cfg.length : cfg.position;
    const beamsim::PointLoad load =
        beamsim::chirp_load(cfg.f0, cfg.f1, cfg.duration, cfg.amplitude, load_position);
    const beamsim::SimulationResult result = beamsim::newmark_integrate(model, load, cfg.dt, cfg.duration);

    const statespace::SensorLayout layout = make_layout(cfg);
    const beamsim::SensorSamples samples =
        beamsim::sample_sensors(result, model, layout, query_grid(cfg));

    ScenarioData data;
    data.accel_clean = samples.accel;
    data.strain_clean = samples.strain;
    data.truth = samples.displacement;
    data.accel = beamsim::add_noise(samples.accel, cfg.noise_accel_percent,
                                    beamsim::detail::mix_seed(cfg.seed, 101));
    data.strain = beamsim::add_noise(samples.strain, cfg.noise_strain_percent,
                                     beamsim::detail::mix_seed(cfg.seed, 202));
    return data;
}

// Filter noise levels. Explicit q_acc / r_strain from the config win;
// otherwise q_acc_i = sqrt(noise%^2 + model%^2)/100 * RMS(accel channel i)
// (the model term absorbs zero-order-hold and spline-truncation process
// error), and r_strain is a single sigma for all gauges derived from the
// pooled strain RMS (per-channel sigmas over-weight near-zero-strain
// channels and bias the curvature fit).
inline statespace::NoiseSpec derive_noise(const ScenarioConfig& cfg, const TimeSeriesMatrix& accel,
                                          const TimeSeriesMatrix& strain) {
    statespace::NoiseSpec noise;
    noise.bc_variance_floor = cfg.bc_variance_floor;

    if (!cfg.q_acc.empty()) {
        if (cfg.q_acc.size() != static_cast<size_t>(accel.channels()))
            throw ConfigError("filter.q_acc must have one entry per accelerometer");
        noise.accel_noise_std = to_eigen(cfg.q_acc);
    } else {
        const double pct = std::hypot(cfg.noise_accel_percent, cfg.q_acc_model_percent) / 100.0;
        noise.accel_noise_std.resize(accel.channels());
        for (Eigen::Index c = 0; c < accel.channels(); ++c)
            noise.accel_noise_std(c) = pct * accel.channel_rms(c);
    }

    if (!cfg.r_strain.empty()) {
        if (cfg.r_strain.size() != static_cast<size_t>(strain.channels()))
            throw ConfigError("filter.r_strain must have one entry per strain gauge");
        noise.strain_noise_std = to_eigen(cfg.r_strain);
    } else {
        const double pct = std::hypot(cfg.noise_strain_percent, cfg.r_strain_model_percent) / 100.0;
        const double pooled = std::sqrt(strain.values.squaredNorm() /
                                        static_cast<double>(strain.values.size()));
        noise.strain_noise_std = Eigen::VectorXd::Constant(strain.channels(), pct * pooled);
    }
    return noise;
}

struct FusionResult {
    bspline::BasisSet basis;
    statespace::DiscreteModel model;
    kalman::FilterTrajectory trajectory;
    fusion::DisplacementField field;  // displacement at the query grid
};

namespace detail {

inline void check_positions(const Eigen::VectorXd& data_positions, const Eigen::VectorXd& expected,
                            const char* what) {
    if (data_positions.size() != expected.size())
        throw DataError(std::string(what) + ": channel count does not match the configured sensors");
    for (Eigen::Index i = 0; i < expected.size(); ++i) {
        const double tol = 1e-9 * std::max(1.0, std::abs(expected(i)));
        if (std::abs(data_positions(i) - expected(i)) > tol)
            throw DataError(std::string(what) + ": channel positions do not match the configured sensors");
    }
}

}  // namespace detail

// Single-pass fusion of one acceleration/strain pair under a config.
// m_override rebuilds the basis for that spline count (used by the sweep).
inline FusionResult fuse_scenario(const ScenarioConfig& cfg, const TimeSeriesMatrix& accel,
                                  const TimeSeriesMatrix& strain, int m_override = 0) {
    validate_config(cfg);
    if (!accel.quantity.empty() && accel.quantity != "acc")
        throw DataError("acceleration input holds '" + accel.quantity + "' channels, expected 'acc'");
    if (!strain.quantity.empty() && strain.quantity != "eps")
        throw DataError("strain input holds '" + strain.quantity + "' channels, expected 'eps'");
    const statespace::SensorLayout layout = make_layout(cfg);
    detail::check_positions(accel.positions, layout.accel_positions, "acceleration input");
    detail::check_positions(strain.positions, layout.strain_positions, "strain input");

    const double dt = accel.dt();
    if (std::abs(strain.dt() - dt) > 1e-9 * dt)
        throw DataError("acceleration and strain files disagree on the sampling interval");
    if (std::abs(dt - cfg.dt) > 1e-9 * cfg.dt)
        throw DataError("input sampling interval does not match sampling.dt in the config");

    bspline::BasisSet basis = make_basis(cfg, m_override);
    if (basis.size() > std::min(layout.accel_count(), layout.strain_count()))
        throw ConfigError("infeasible spline count m=" + std::to_string(basis.size()) +
                          ": need m <= min(p, q) sensors");
    const statespace::NoiseSpec noise = derive_noise(cfg, accel, strain);
    statespace::DiscreteModel model = statespace::build_discrete_model(basis, layout, noise, dt);

    kalman::FilterState init = kalman::init_state(basis.size(), cfg.theta0_scale);
    kalman::FilterTrajectory trajectory =
        kalman::run_filter(model, accel, strain, layout.bc_values(), std::move(init));
    fusion::DisplacementField field =
        fusion::reconstruct_displacement(trajectory, basis, query_grid(cfg));

    return FusionResult{std::move(basis), std::move(model), std::move(trajectory), std::move(field)};
}

inline TimeSeriesMatrix field_to_timeseries(const fusion::DisplacementField& field) {
    return TimeSeriesMatrix{"u", field.times, field.positions, field.values};
}

struct EvaluationReport {
    Eigen::VectorXd positions;
    Eigen::VectorXd nrms_percent;  // NaN where the reference RMS vanishes
    double mean_percent = 0.0;     // over valid positions
    double max_percent = 0.0;
};

// Per-position NRMS of `estimated` against `reference` on identical grids,
// optionally ignoring samples before t_min. Positions whose reference RMS
// is numerically zero (the clamped end) are reported as NaN and excluded
// from the summaries.
inline EvaluationReport evaluate_displacement(const TimeSeriesMatrix& estimated,
                                              const TimeSeriesMatrix& reference, double t_min = 0.0) {
    if (estimated.samples() != reference.samples() || estimated.channels() != reference.channels())
        throw DataError("evaluate: estimated and reference grids have different shapes");
    const double dt = reference.dt();
    if ((estimated.times - reference.times).cwiseAbs().maxCoeff() > 1e-9 * dt)
        throw DataError("evaluate: time grids are not aligned");
    for (Eigen::Index c = 0; c < reference.channels(); ++c) {
        if (std::abs(estimated.positions(c) - reference.positions(c)) >
            1e-9 * std::max(1.0, std::abs(reference.positions(c))))
            throw DataError("evaluate: position grids are not aligned");
    }

    Eigen::Index first = 0;
    while (first < reference.samples() && reference.times(first) < t_min - 1e-12) ++first;
    const Eigen::Index n = reference.samples() - first;
    if (n < 2) throw DataError("evaluate: no samples after t_min");

    EvaluationReport report;
    report.positions = reference.positions;
    report.nrms_percent.resize(reference.channels());

    double ref_scale = 0.0;
    for (Eigen::Index c = 0; c < reference.channels(); ++c)
        ref_scale = std::max(ref_scale, rms(reference.values.col(c).tail(n)));

    double sum = 0.0, maxv = 0.0;
    int valid = 0;
    for (Eigen::Index c = 0; c < reference.channels(); ++c) {
        const double ref_rms = rms(reference.values.col(c).tail(n));
        if (ref_rms <= 1e-12 * ref_scale) {
            report.nrms_percent(c) = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double e = fusion::nrms_error(estimated.values.col(c).tail(n),
                                            reference.values.col(c).tail(n));
        report.nrms_percent(c) = e;
        sum += e;
        maxv = std::max(maxv, e);
        ++valid;
    }
    if (valid == 0) throw DataError("evaluate: reference signal is identically zero");
    report.mean_percent = sum / valid;
    report.max_percent = maxv;
    return report;
}

}  // namespace splinefusion::io

namespace splinefusion::fusion {

// Reruns the full pipeline for each candidate spline count on one noisy
// dataset (single noise realization, fixed seed) and reports the mean and
// maximum NRMS over the query grid.
inline SweepReport spline_sweep(const io::ScenarioConfig& cfg, const std::vector<int>& m_candidates) {
    if (m_candidates.empty()) throw ConfigError("spline_sweep: no candidates");
    if (std::set<int>(m_candidates.begin(), m_candidates.end()).size() != m_candidates.size())
        throw ConfigError("spline_sweep: duplicate spline counts");

    const statespace::SensorLayout layout = io::make_layout(cfg);
    const auto sensor_cap = std::min(layout.accel_count(), layout.strain_count());
    for (int m : m_candidates) {
        if (m > sensor_cap)
            throw ConfigError("infeasible spline count m=" + std::to_string(m) +
                              ": need m <= min(p, q) sensors");
        if (m - cfg.degree + 1 < 2)
            throw ConfigError("infeasible spline count m=" + std::to_string(m) + " for degree " +
                              std::to_string(cfg.degree));
    }

    const io::ScenarioData data = io::simulate_scenario(cfg);
    SweepReport report;
    report.m_values = m_candidates;
    report.mean_nrms.resize(static_cast<Eigen::Index>(m_candidates.size()));
    report.max_nrms.resize(static_cast<Eigen::Index>(m_candidates.size()));
    for (size_t i = 0; i < m_candidates.size(); ++i) {
        const io::FusionResult fused = io::fuse_scenario(cfg, data.accel, data.strain, m_candidates[i]);
        const io::EvaluationReport eval =
            io::evaluate_displacement(io::field_to_timeseries(fused.field), data.truth);
        report.mean_nrms(static_cast<Eigen::Index>(i)) = eval.mean_percent;
        report.max_nrms(static_cast<Eigen::Index>(i)) = eval.max_percent;
    }
    return report;
}

}  // namespace splinefusion::fusion
