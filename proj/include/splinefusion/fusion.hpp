#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "splinefusion/bspline.hpp"
#include "splinefusion/errors.hpp"
#include "splinefusion/kalman.hpp"
#include "splinefusion/timeseries.hpp"

namespace splinefusion::fusion {

// u(x_j, t_k) = sum_i phi_i(x_j) lambda_i(t_k), evaluable anywhere in the
// domain, not only at sensor stations.
struct DisplacementField {
    Eigen::VectorXd positions;  // n_q
    Eigen::VectorXd times;      // T
    Eigen::MatrixXd values;     // T x n_q
};

inline DisplacementField reconstruct_displacement(const kalman::FilterTrajectory& trajectory,
                                                  const bspline::BasisSet& basis,
                                                  const Eigen::VectorXd& query_positions) {
    DisplacementField field;
    field.positions = query_positions;
    field.times = trajectory.times;
    field.values = trajectory.coeffs * basis.matrix(query_positions, 0).transpose();
    return field;
}

inline DisplacementField reconstruct_slope(const kalman::FilterTrajectory& trajectory,
                                           const bspline::BasisSet& basis,
                                           const Eigen::VectorXd& query_positions) {
    DisplacementField field;
    field.positions = query_positions;
    field.times = trajectory.times;
    field.values = trajectory.coeffs * basis.matrix(query_positions, 1).transpose();
    return field;
}

// Flexural strain -z(x) u''(x, t) from the filtered coefficients; depths
// must align with query_positions.
inline DisplacementField reconstruct_strain(const kalman::FilterTrajectory& trajectory,
                                            const bspline::BasisSet& basis,
                                            const Eigen::VectorXd& query_positions,
                                            const Eigen::VectorXd& depths) {
    if (depths.size() != query_positions.size())
        throw std::invalid_argument("reconstruct_strain: depths must align with query positions");
    DisplacementField field;
    field.positions = query_positions;
    field.times = trajectory.times;
    field.values = trajectory.coeffs * basis.matrix(query_positions, 2).transpose() *
                   (-depths).asDiagonal();
    return field;
}

// 100 * RMS(estimated - reference) / RMS(reference).
inline double nrms_error(const Eigen::Ref<const Eigen::VectorXd>& estimated,
                         const Eigen::Ref<const Eigen::VectorXd>& reference) {
    if (estimated.size() != reference.size())
        throw std::invalid_argument("nrms_error: signal lengths differ");
    if (estimated.size() == 0) throw std::invalid_argument("nrms_error: empty signals");
    const double ref_rms = rms(reference);
    if (ref_rms == 0.0) throw std::domain_error("nrms_error: reference signal has zero RMS");
    return 100.0 * rms(estimated - reference) / ref_rms;
}

struct SweepReport {
    std::vector<int> m_values;
    Eigen::VectorXd mean_nrms;  // percent
    Eigen::VectorXd max_nrms;   // percent
};

// spline_sweep(config, candidates) is defined in pipeline.hpp, where the
// scenario configuration and the simulator are both visible.

}  // namespace splinefusion::fusion
