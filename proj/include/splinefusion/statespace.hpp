#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "splinefusion/bspline.hpp"
#include "splinefusion/errors.hpp"

namespace splinefusion::statespace {

// Accelerometer and strain-gauge stations plus the boundary-condition rows
// appended to the measurement vector. strain_depths holds z(x), the distance
// of the measured surface from the neutral axis at each gauge.
struct SensorLayout {
    Eigen::VectorXd accel_positions;            // p stations
    Eigen::VectorXd strain_positions;           // q stations
    Eigen::VectorXd strain_depths;              // q entries, > 0
    Eigen::VectorXd bc_displacement_positions;  // alpha stations
    Eigen::VectorXd bc_displacement_values;
    Eigen::VectorXd bc_slope_positions;         // beta stations
    Eigen::VectorXd bc_slope_values;

    Eigen::Index accel_count() const { return accel_positions.size(); }
    Eigen::Index strain_count() const { return strain_positions.size(); }
    Eigen::Index bc_count() const { return bc_displacement_positions.size() + bc_slope_positions.size(); }

    // Prescribed boundary values in measurement-row order [displacement; slope].
    Eigen::VectorXd bc_values() const {
        Eigen::VectorXd out(bc_count());
        out << bc_displacement_values, bc_slope_values;
        return out;
    }
};

// Per-channel noise standard deviations. The boundary rows carry no physical
// noise; bc_variance_floor keeps the innovation covariance invertible while
// enforcing the boundary conditions to machine precision.
struct NoiseSpec {
    Eigen::VectorXd accel_noise_std;   // per accel channel, m/s^2
    Eigen::VectorXd strain_noise_std;  // per gauge, dimensionless strain
    double bc_variance_floor = 1e-12;
};

struct ContinuousModel {
    Eigen::MatrixXd A;  // 2m x 2m, nilpotent (A^2 = 0)
    Eigen::MatrixXd B;  // 2m x p
    Eigen::MatrixXd C;  // (q+alpha+beta) x 2m, right half zero
    double observability_condition = 0.0;  // cond of C's first m columns
};

struct DiscreteModel {
    Eigen::MatrixXd A_d;  // 2m x 2m
    Eigen::MatrixXd B_d;  // 2m x p
    Eigen::MatrixXd C_d;  // (q+alpha+beta) x 2m
    Eigen::MatrixXd Q_d;  // 2m x 2m
    Eigen::MatrixXd R_d;  // (q+alpha+beta) x (q+alpha+beta)
    double dt = 0.0;
    int m = 0, p = 0, q = 0;
    int bc_disp = 0, bc_slope = 0;
    double observability_condition = 0.0;

    int state_dim() const { return 2 * m; }
    int measurement_dim() const { return q + bc_disp + bc_slope; }
};

// Moore-Penrose pseudo-inverse by SVD; singular values below
// rel_tol * sigma_max are treated as zero.
inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M, double rel_tol = 1e-10) {
    if (M.size() == 0) throw std::invalid_argument("pseudo_inverse: empty matrix");
    if (!M.allFinite()) throw NumericalError("pseudo_inverse: non-finite entries");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const double cutoff = rel_tol * s(0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > cutoff ? 1.0 / s(i) : 0.0;
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

namespace detail {

inline void validate_layout(const bspline::BasisSet& basis, const SensorLayout& layout) {
    const auto m = basis.size();
    if (layout.accel_count() < m || layout.strain_count() < m)
        throw std::invalid_argument("SensorLayout: need p >= m and q >= m sensors");
    if (layout.strain_depths.size() != layout.strain_count())
        throw std::invalid_argument("SensorLayout: strain_depths must match strain_positions");
    if ((layout.strain_depths.array() <= 0.0).any())
        throw std::invalid_argument("SensorLayout: strain depths must be positive");
    if (layout.bc_displacement_values.size() != layout.bc_displacement_positions.size() ||
        layout.bc_slope_values.size() != layout.bc_slope_positions.size())
        throw std::invalid_argument("SensorLayout: boundary positions and values must align");
}

}  // namespace detail

// A_c = [[0, I], [0, 0]]; B_c = [0; I] * pinv(Phi_acc); C_c stacks the strain
// rows -diag(z) * Phi''_strain and the boundary rows Phi(x_u), Phi'(x_u'),
// all padded with zeros on the velocity half of the state.
inline ContinuousModel assemble_continuous(const bspline::BasisSet& basis, const SensorLayout& layout) {
    detail::validate_layout(basis, layout);
    const int m = basis.size();
    const auto p = layout.accel_count();
    const auto q = layout.strain_count();
    const auto alpha = layout.bc_displacement_positions.size();
    const auto beta = layout.bc_slope_positions.size();

    ContinuousModel model;
    model.A = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    model.A.topRightCorner(m, m).setIdentity();

    const Eigen::MatrixXd phi_acc = basis.matrix(layout.accel_positions, 0);
    model.B = Eigen::MatrixXd::Zero(2 * m, p);
    model.B.bottomRows(m) = pseudo_inverse(phi_acc);

    model.C = Eigen::MatrixXd::Zero(q + alpha + beta, 2 * m);
    model.C.topLeftCorner(q, m) =
        (-layout.strain_depths).asDiagonal() * basis.matrix(layout.strain_positions, 2);
    if (alpha > 0) model.C.block(q, 0, alpha, m) = basis.matrix(layout.bc_displacement_positions, 0);
    if (beta > 0) model.C.block(q + alpha, 0, beta, m) = basis.matrix(layout.bc_slope_positions, 1);

    // Identifiability: the measurement rows restricted to the displacement
    // half must have full column rank m.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.C.leftCols(m));
    const Eigen::VectorXd& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    model.observability_condition = smin > 0 ? s(0) / smin : std::numeric_limits<double>::infinity();
    if (!(model.observability_condition < 1e12))
        throw NumericalError("assemble_continuous: unidentifiable configuration, "
                             "measurement matrix column rank < m (condition " +
                             std::to_string(model.observability_condition) + ")");
    return model;
}

// Exact discretization: the series for expm(A_c dt) terminates because A_c
// is nilpotent, so A_d = I + A_c dt and B_d = B_c dt + A_c B_c dt^2 / 2.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretize(const Eigen::MatrixXd& A_c,
                                                              const Eigen::MatrixXd& B_c,
                                                              double dt) {
    if (dt < 0) throw std::invalid_argument("discretize: dt must be non-negative");
    if (!A_c.allFinite() || !B_c.allFinite()) throw NumericalError("discretize: non-finite inputs");
    Eigen::MatrixXd A_d = Eigen::MatrixXd::Identity(A_c.rows(), A_c.cols()) + A_c * dt;
    Eigen::MatrixXd B_d = B_c * dt + A_c * B_c * (dt * dt / 2.0);
    return {std::move(A_d), std::move(B_d)};
}

// Qhat = (pinv(Phi_acc) diag(q_acc)) (pinv(Phi_acc) diag(q_acc))^T;
// Q_d = [[dt^3/3 Qhat, dt^2/2 Qhat], [dt^2/2 Qhat, dt Qhat]].
inline Eigen::MatrixXd process_noise(const bspline::BasisSet& basis, const SensorLayout& layout,
                                     const NoiseSpec& noise, double dt) {
    detail::validate_layout(basis, layout);
    if (!(dt > 0)) throw std::invalid_argument("process_noise: dt must be positive");
    if (noise.accel_noise_std.size() != layout.accel_count())
        throw std::invalid_argument("process_noise: accel noise size mismatch");
    const int m = basis.size();
    const Eigen::MatrixXd pinv = pseudo_inverse(basis.matrix(layout.accel_positions, 0));
    const Eigen::MatrixXd w = pinv * noise.accel_noise_std.asDiagonal();
    Eigen::MatrixXd qhat = w * w.transpose();
    qhat = 0.5 * (qhat + qhat.transpose());  // exact symmetry
    Eigen::MatrixXd Q_d(2 * m, 2 * m);
    Q_d.topLeftCorner(m, m) = (dt * dt * dt / 3.0) * qhat;
    Q_d.topRightCorner(m, m) = (dt * dt / 2.0) * qhat;
    Q_d.bottomLeftCorner(m, m) = (dt * dt / 2.0) * qhat;
    Q_d.bottomRightCorner(m, m) = dt * qhat;
    return Q_d;
}

// R_d = diag(r_strain^2) / dt on the strain rows; the boundary rows get the
// bc_variance_floor instead of the formal zero.
inline Eigen::MatrixXd measurement_noise(const NoiseSpec& noise, double dt,
                                         Eigen::Index bc_disp, Eigen::Index bc_slope) {
    if (!(dt > 0)) throw std::invalid_argument("measurement_noise: dt must be positive");
    if (!(noise.bc_variance_floor > 0))
        throw std::invalid_argument("measurement_noise: bc_variance_floor must be positive");
    const auto q = noise.strain_noise_std.size();
    const auto dim = q + bc_disp + bc_slope;
    Eigen::MatrixXd R_d = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < q; ++i) {
        const double r = noise.strain_noise_std(i);
        R_d(i, i) = r * r / dt;
    }
    for (Eigen::Index i = q; i < dim; ++i) R_d(i, i) = noise.bc_variance_floor;
    return R_d;
}

inline DiscreteModel build_discrete_model(const bspline::BasisSet& basis, const SensorLayout& layout,
                                          const NoiseSpec& noise, double dt) {
    if (!(dt > 0)) throw std::invalid_argument("build_discrete_model: dt must be positive");
    ContinuousModel cont = assemble_continuous(basis, layout);
    DiscreteModel model;
    std::tie(model.A_d, model.B_d) = discretize(cont.A, cont.B, dt);
    model.C_d = std::move(cont.C);
    model.Q_d = process_noise(basis, layout, noise, dt);
    model.R_d = measurement_noise(noise, dt, layout.bc_displacement_positions.size(),
                                  layout.bc_slope_positions.size());
    model.dt = dt;
    model.m = basis.size();
    model.p = static_cast<int>(layout.accel_count());
    model.q = static_cast<int>(layout.strain_count());
    model.bc_disp = static_cast<int>(layout.bc_displacement_positions.size());
    model.bc_slope = static_cast<int>(layout.bc_slope_positions.size());
    model.observability_condition = cont.observability_condition;
    return model;
}

}  // namespace splinefusion::statespace
