#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>

#include "splinefusion/errors.hpp"
#include "splinefusion/statespace.hpp"
#include "splinefusion/timeseries.hpp"

namespace splinefusion::kalman {

// State [lambda; lambda_dot] (spline coefficients and their rates) with the
// error covariance, re-symmetrized after every update.
struct FilterState {
    Eigen::VectorXd state;       // 2m
    Eigen::MatrixXd covariance;  // 2m x 2m
    long step = 0;
};

struct FilterTrajectory {
    Eigen::VectorXd times;             // T
    Eigen::MatrixXd coeffs;            // T x m, lambda(k)
    Eigen::MatrixXd coeff_rates;       // T x m, lambda_dot(k)
    Eigen::MatrixXd innovations;       // T x (q+alpha+beta); row 0 is zero
    Eigen::VectorXd covariance_trace;  // T
};

inline FilterState init_state(int m, double theta0_scale) {
    if (m < 1) throw std::invalid_argument("init_state: m must be positive");
    if (!(theta0_scale > 0)) throw std::invalid_argument("init_state: theta0_scale must be positive");
    FilterState s;
    s.state = Eigen::VectorXd::Zero(2 * m);
    s.covariance = theta0_scale * Eigen::MatrixXd::Identity(2 * m, 2 * m);
    s.step = 0;
    return s;
}

inline FilterState time_update(const FilterState& state, const statespace::DiscreteModel& model,
                               const Eigen::VectorXd& accel_sample) {
    if (state.state.size() != model.state_dim())
        throw std::invalid_argument("time_update: state dimension mismatch");
    if (accel_sample.size() != model.p)
        throw std::invalid_argument("time_update: acceleration sample dimension mismatch");
    if (!accel_sample.allFinite()) throw DataError("time_update: non-finite acceleration sample");
    FilterState out;
    out.state = model.A_d * state.state + model.B_d * accel_sample;
    Eigen::MatrixXd theta = model.A_d * state.covariance * model.A_d.transpose() + model.Q_d;
    out.covariance = 0.5 * (theta + theta.transpose());
    out.step = state.step + 1;
    return out;
}

// K = Theta C^T (C Theta C^T + R)^{-1}, with the innovation covariance
// solved by a symmetric factorization rather than explicit inversion.
inline Eigen::MatrixXd gain(const Eigen::MatrixXd& covariance, const Eigen::MatrixXd& C,
                            const Eigen::MatrixXd& R) {
    Eigen::MatrixXd S = C * covariance * C.transpose() + R;
    S = 0.5 * (S + S.transpose());
    Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
    if (ldlt.info() != Eigen::Success)
        throw NumericalError("gain: innovation covariance factorization failed");
    if (ldlt.rcond() < 1e-14)
        throw NumericalError("gain: singular innovation covariance (condition > 1e14)");
    return ldlt.solve(C * covariance).transpose();
}

inline Eigen::MatrixXd gain(const FilterState& state, const statespace::DiscreteModel& model) {
    return gain(state.covariance, model.C_d, model.R_d);
}

// Joseph-stabilized covariance update, algebraically equal to the plain
// (I - K C) Theta form but robust with the near-zero boundary-condition
// rows of R_d.
inline FilterState measurement_update(const FilterState& state, const statespace::DiscreteModel& model,
                                      const Eigen::MatrixXd& gain_matrix,
                                      const Eigen::VectorXd& measurement) {
    if (measurement.size() != model.measurement_dim())
        throw std::invalid_argument("measurement_update: measurement dimension mismatch");
    if (gain_matrix.rows() != model.state_dim() || gain_matrix.cols() != model.measurement_dim())
        throw std::invalid_argument("measurement_update: gain dimension mismatch");
    if (!measurement.allFinite()) throw DataError("measurement_update: non-finite measurement");
    FilterState out;
    out.state = state.state + gain_matrix * (measurement - model.C_d * state.state);
    const Eigen::MatrixXd ikc =
        Eigen::MatrixXd::Identity(model.state_dim(), model.state_dim()) - gain_matrix * model.C_d;
    Eigen::MatrixXd theta = ikc * state.covariance * ikc.transpose() +
                            gain_matrix * model.R_d * gain_matrix.transpose();
    out.covariance = 0.5 * (theta + theta.transpose());
    out.step = state.step;
    return out;
}

// One pass over the synchronized streams: acceleration sample k drives the
// prediction to k+1, strain sample k+1 (stacked with the prescribed boundary
// values) corrects it. Row 0 of the histories holds the initial state.
inline FilterTrajectory run_filter(const statespace::DiscreteModel& model,
                                   const TimeSeriesMatrix& accel, const TimeSeriesMatrix& strain,
                                   const Eigen::VectorXd& bc_values, FilterState state) {
    if (accel.samples() != strain.samples())
        throw DataError("run_filter: acceleration and strain sample counts differ");
    if (accel.channels() != model.p) throw DataError("run_filter: acceleration channel count mismatch");
    if (strain.channels() != model.q) throw DataError("run_filter: strain channel count mismatch");
    if (bc_values.size() != model.bc_disp + model.bc_slope)
        throw std::invalid_argument("run_filter: boundary value count mismatch");
    if (state.state.size() != model.state_dim())
        throw std::invalid_argument("run_filter: initial state dimension mismatch");
    const double dt_in = accel.dt();
    if (std::abs(dt_in - model.dt) > 1e-9 * model.dt)
        throw DataError("run_filter: sampling interval differs from the model dt");
    if (std::abs(strain.dt() - model.dt) > 1e-9 * model.dt)
        throw DataError("run_filter: strain sampling interval differs from the model dt");

    const auto T = accel.samples();
    const int m = model.m;
    FilterTrajectory traj;
    traj.times = accel.times;
    traj.coeffs.resize(T, m);
    traj.coeff_rates.resize(T, m);
    traj.innovations = Eigen::MatrixXd::Zero(T, model.measurement_dim());
    traj.covariance_trace.resize(T);

    auto record = [&](Eigen::Index k, const FilterState& s) {
        traj.coeffs.row(k) = s.state.head(m).transpose();
        traj.coeff_rates.row(k) = s.state.tail(m).transpose();
        traj.covariance_trace(k) = s.covariance.trace();
    };
    record(0, state);

    Eigen::VectorXd measurement(model.measurement_dim());
    for (Eigen::Index k = 0; k + 1 < T; ++k) {
        state = time_update(state, model, accel.values.row(k).transpose());
        const Eigen::MatrixXd K = gain(state, model);
        measurement << strain.values.row(k + 1).transpose(), bc_values;
        traj.innovations.row(k + 1) = (measurement - model.C_d * state.state).transpose();
        state = measurement_update(state, model, K, measurement);
        record(k + 1, state);
    }
    return traj;
}

}  // namespace splinefusion::kalman
