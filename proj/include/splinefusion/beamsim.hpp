#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "splinefusion/errors.hpp"
#include "splinefusion/statespace.hpp"
#include "splinefusion/timeseries.hpp"

namespace splinefusion::beamsim {

// Tapered rectangular cross-section cantilever: depth varies linearly from
// depth_root at x=0 to depth_tip at x=length.
struct BeamGeometry {
    double length = 0.0;          // m
    double width = 0.0;           // m
    double depth_root = 0.0;      // m
    double depth_tip = 0.0;       // m
    double youngs_modulus = 0.0;  // N/m^2
    double density = 0.0;         // kg/m^3
    int n_elements = 0;

    double depth_at(double x) const { return depth_root + (depth_tip - depth_root) * x / length; }
    double area_at(double x) const { return width * depth_at(x); }
    double inertia_at(double x) const {
        const double h = depth_at(x);
        return width * h * h * h / 12.0;
    }

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0)) throw std::invalid_argument(std::string("BeamGeometry: ") + name + " must be positive");
        };
        positive(length, "length");
        positive(width, "width");
        positive(depth_root, "depth_root");
        positive(depth_tip, "depth_tip");
        positive(youngs_modulus, "youngs_modulus");
        positive(density, "density");
        if (n_elements < 2) throw std::invalid_argument("BeamGeometry: n_elements must be at least 2");
    }
};

// Assembled Euler-Bernoulli model. DOF ordering: (u_1, theta_1, u_2, theta_2, ...);
// the fixed-end DOFs 0 and 1 are constrained by row/column elimination when solving.
struct FEModel {
    BeamGeometry geometry;
    Eigen::VectorXd node_positions;  // n = n_elements + 1
    Eigen::MatrixXd mass;            // 2n x 2n
    Eigen::MatrixXd stiffness;       // 2n x 2n
    Eigen::MatrixXd damping;         // 2n x 2n, a0*M + a1*K once assigned
    std::vector<int> constrained_dofs;
    std::vector<int> free_dofs;

    int dof_count() const { return static_cast<int>(mass.rows()); }

    Eigen::MatrixXd free_submatrix(const Eigen::MatrixXd& full) const {
        const auto nf = static_cast<Eigen::Index>(free_dofs.size());
        Eigen::MatrixXd out(nf, nf);
        for (Eigen::Index i = 0; i < nf; ++i)
            for (Eigen::Index j = 0; j < nf; ++j) out(i, j) = full(free_dofs[i], free_dofs[j]);
        return out;
    }
};

// Hermite shape-function row for the displacement field (deriv 0), slope
// (deriv 1) or curvature (deriv 2) at position x, over all 2n DOFs.
inline Eigen::RowVectorXd hermite_row(const FEModel& model, double x, int deriv) {
    const auto& xn = model.node_positions;
    const int ne = static_cast<int>(xn.size()) - 1;
    if (x < xn(0) - 1e-12 || x > xn(ne) + 1e-12)
        throw std::invalid_argument("hermite_row: position outside the beam");
    const double le = xn(1) - xn(0);
    int e = std::min(static_cast<int>((x - xn(0)) / le), ne - 1);
    if (e < 0) e = 0;
    const double xi = (x - xn(e)) / le;
    double n1, n2, n3, n4;
    switch (deriv) {
        case 0:
            n1 = 1 - 3 * xi * xi + 2 * xi * xi * xi;
            n2 = le * (xi - 2 * xi * xi + xi * xi * xi);
            n3 = 3 * xi * xi - 2 * xi * xi * xi;
            n4 = le * (-xi * xi + xi * xi * xi);
            break;
        case 1:
            n1 = (-6 * xi + 6 * xi * xi) / le;
            n2 = 1 - 4 * xi + 3 * xi * xi;
            n3 = (6 * xi - 6 * xi * xi) / le;
            n4 = -2 * xi + 3 * xi * xi;
            break;
        case 2:
            n1 = (-6 + 12 * xi) / (le * le);
            n2 = (-4 + 6 * xi) / le;
            n3 = (6 - 12 * xi) / (le * le);
            n4 = (-2 + 6 * xi) / le;
            break;
        default:
            throw std::invalid_argument("hermite_row: derivative order must be 0, 1 or 2");
    }
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(model.dof_count());
    row(2 * e) = n1;
    row(2 * e + 1) = n2;
    row(2 * e + 2) = n3;
    row(2 * e + 3) = n4;
    return row;
}

// Standard Hermite-cubic Euler-Bernoulli elements of equal length; tapered
// section properties evaluated at element midpoints (constant per element),
// consistent mass matrices, fixed end at x = 0.
inline FEModel build_fe_model(const BeamGeometry& geometry) {
    geometry.validate();
    const int ne = geometry.n_elements;
    const int n = ne + 1;
    FEModel model;
    model.geometry = geometry;
    model.node_positions = Eigen::VectorXd::LinSpaced(n, 0.0, geometry.length);
    model.mass = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    model.stiffness = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    model.damping = Eigen::MatrixXd::Zero(2 * n, 2 * n);

    const double l = geometry.length / ne;
    Eigen::Matrix4d ke, me;
    for (int e = 0; e < ne; ++e) {
        const double xm = (model.node_positions(e) + model.node_positions(e + 1)) / 2.0;
        const double ei = geometry.youngs_modulus * geometry.inertia_at(xm);
        const double rho_a = geometry.density * geometry.area_at(xm);
        const double l2 = l * l;
        ke << 12, 6 * l, -12, 6 * l,
              6 * l, 4 * l2, -6 * l, 2 * l2,
              -12, -6 * l, 12, -6 * l,
              6 * l, 2 * l2, -6 * l, 4 * l2;
        ke *= ei / (l2 * l);
        me << 156, 22 * l, 54, -13 * l,
              22 * l, 4 * l2, 13 * l, -3 * l2,
              54, 13 * l, 156, -22 * l,
              -13 * l, -3 * l2, -22 * l, 4 * l2;
        me *= rho_a * l / 420.0;
        const int base = 2 * e;
        model.stiffness.block<4, 4>(base, base) += ke;
        model.mass.block<4, 4>(base, base) += me;
    }

    model.constrained_dofs = {0, 1};
    model.free_dofs.reserve(2 * n - 2);
    for (int d = 2; d < 2 * n; ++d) model.free_dofs.push_back(d);
    return model;
}

// Undamped natural frequencies (Hz) of the constrained model, ascending.
inline Eigen::VectorXd natural_frequencies_hz(const FEModel& model, int count) {
    const Eigen::MatrixXd kf = model.free_submatrix(model.stiffness);
    const Eigen::MatrixXd mf = model.free_submatrix(model.mass);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(kf, mf);
    if (solver.info() != Eigen::Success) throw NumericalError("natural_frequencies: eigensolver failed");
    const int available = static_cast<int>(solver.eigenvalues().size());
    count = std::min(count, available);
    Eigen::VectorXd out(count);
    for (int i = 0; i < count; ++i)
        out(i) = std::sqrt(std::max(solver.eigenvalues()(i), 0.0)) / (2.0 * std::numbers::pi);
    return out;
}

// Solves a0, a1 from zeta_i = (a0/w_i + a1 w_i)/2 at the first two undamped
// natural frequencies.
inline std::pair<double, double> rayleigh_coefficients(const FEModel& model, double zeta1_percent,
                                                       double zeta2_percent) {
    if (static_cast<int>(model.free_dofs.size()) < 2)
        throw std::invalid_argument("rayleigh_coefficients: model needs at least two elastic modes");
    const Eigen::VectorXd f = natural_frequencies_hz(model, 2);
    const double w1 = 2.0 * std::numbers::pi * f(0);
    const double w2 = 2.0 * std::numbers::pi * f(1);
    if (std::abs(w2 - w1) < 1e-12 * std::max(w1, w2))
        throw NumericalError("rayleigh_coefficients: repeated natural frequencies");
    Eigen::Matrix2d a;
    a << 0.5 / w1, 0.5 * w1,
         0.5 / w2, 0.5 * w2;
    const Eigen::Vector2d zeta(zeta1_percent / 100.0, zeta2_percent / 100.0);
    const Eigen::Vector2d coeffs = a.fullPivLu().solve(zeta);
    return {coeffs(0), coeffs(1)};
}

inline FEModel rayleigh_damping(FEModel model, double zeta1_percent, double zeta2_percent) {
    const auto [a0, a1] = rayleigh_coefficients(model, zeta1_percent, zeta2_percent);
    model.damping = a0 * model.mass + a1 * model.stiffness;
    return model;
}

// Point force with an arbitrary time history, distributed to the element
// DOFs through the Hermite shape functions (reduces to a pure nodal force
// when the position coincides with a node).
struct PointLoad {
    double position = 0.0;
    std::function<double(double)> force;  // N at time t
    std::string description;
};

// F(t) = amplitude * sin(2*pi*(f0 t + (f1-f0) t^2 / (2 duration))), so the
// instantaneous frequency runs linearly from f0 at t=0 to f1 at t=duration.
inline PointLoad chirp_load(double f0, double f1, double duration, double amplitude, double position) {
    if (!(f0 > 0) || f1 < f0) throw std::invalid_argument("chirp_load: need f1 >= f0 > 0");
    if (!(duration > 0)) throw std::invalid_argument("chirp_load: duration must be positive");
    PointLoad load;
    load.position = position;
    load.description = "chirp " + std::to_string(f0) + "-" + std::to_string(f1) + " Hz, " +
                       std::to_string(amplitude) + " N at x=" + std::to_string(position);
    load.force = [=](double t) {
        return amplitude * std::sin(2.0 * std::numbers::pi * (f0 * t + (f1 - f0) * t * t / (2.0 * duration)));
    };
    return load;
}

struct SimulationResult {
    Eigen::VectorXd times;
    Eigen::MatrixXd displacement;  // T x 2n, constrained DOFs identically zero
    Eigen::MatrixXd velocity;      // T x 2n
    Eigen::MatrixXd acceleration;  // T x 2n
    double dt = 0.0;
    std::string load_description;
};

struct NewmarkHistory {
    Eigen::MatrixXd u, v, a;  // T x ndof each
};

// Newmark average-acceleration integrator (gamma = 1/2, beta = 1/4,
// unconditionally stable) on arbitrary (M, C, K) with a force callback.
inline NewmarkHistory newmark_core(const Eigen::MatrixXd& M, const Eigen::MatrixXd& C,
                                   const Eigen::MatrixXd& K,
                                   const std::function<Eigen::VectorXd(double)>& force, double dt,
                                   Eigen::Index steps, const Eigen::VectorXd& u0,
                                   const Eigen::VectorXd& v0) {
    if (!(dt > 0)) throw std::invalid_argument("newmark_core: dt must be positive");
    if (steps < 1) throw std::invalid_argument("newmark_core: need at least one step");
    constexpr double beta = 0.25;
    constexpr double gamma = 0.5;
    const auto nd = M.rows();

    NewmarkHistory h;
    h.u.setZero(steps, nd);
    h.v.setZero(steps, nd);
    h.a.setZero(steps, nd);
    h.u.row(0) = u0.transpose();
    h.v.row(0) = v0.transpose();

    Eigen::LDLT<Eigen::MatrixXd> mass_ldlt(M);
    if (mass_ldlt.info() != Eigen::Success) throw NumericalError("newmark_core: mass factorization failed");
    h.a.row(0) = mass_ldlt.solve(force(0.0) - C * v0 - K * u0).transpose();

    const Eigen::MatrixXd keff = K + (gamma / (beta * dt)) * C + (1.0 / (beta * dt * dt)) * M;
    Eigen::LDLT<Eigen::MatrixXd> keff_ldlt(keff);
    if (keff_ldlt.info() != Eigen::Success)
        throw NumericalError("newmark_core: effective stiffness factorization failed");

    Eigen::VectorXd u = u0, v = v0, a = h.a.row(0).transpose();
    for (Eigen::Index k = 0; k + 1 < steps; ++k) {
        const double t_next = (k + 1) * dt;
        const Eigen::VectorXd rhs =
            force(t_next) +
            M * (u / (beta * dt * dt) + v / (beta * dt) + (0.5 / beta - 1.0) * a) +
            C * ((gamma / (beta * dt)) * u + (gamma / beta - 1.0) * v + dt * (0.5 * gamma / beta - 1.0) * a);
        const Eigen::VectorXd u_next = keff_ldlt.solve(rhs);
        const Eigen::VectorXd a_next =
            (u_next - u - dt * v) / (beta * dt * dt) - (0.5 / beta - 1.0) * a;
        const Eigen::VectorXd v_next = v + dt * ((1.0 - gamma) * a + gamma * a_next);
        u = u_next;
        v = v_next;
        a = a_next;
        h.u.row(k + 1) = u.transpose();
        h.v.row(k + 1) = v.transpose();
        h.a.row(k + 1) = a.transpose();
    }
    return h;
}

// Time-marches the constrained model from rest under the point load;
// duration/dt must give an integral step count (endpoints inclusive).
inline SimulationResult newmark_integrate(const FEModel& model, const PointLoad& load, double dt,
                                          double duration) {
    if (!(dt > 0) || !(duration > 0))
        throw std::invalid_argument("newmark_integrate: dt and duration must be positive");
    const auto steps = static_cast<Eigen::Index>(std::llround(duration / dt)) + 1;

    const Eigen::MatrixXd mf = model.free_submatrix(model.mass);
    const Eigen::MatrixXd cf = model.free_submatrix(model.damping);
    const Eigen::MatrixXd kf = model.free_submatrix(model.stiffness);
    const Eigen::RowVectorXd load_row = hermite_row(model, load.position, 0);
    const auto nf = static_cast<Eigen::Index>(model.free_dofs.size());
    Eigen::VectorXd load_free(nf);
    for (Eigen::Index i = 0; i < nf; ++i) load_free(i) = load_row(model.free_dofs[i]);

    auto force = [&](double t) -> Eigen::VectorXd { return load.force(t) * load_free; };
    const NewmarkHistory h = newmark_core(mf, cf, kf, force, dt, steps, Eigen::VectorXd::Zero(nf),
                                          Eigen::VectorXd::Zero(nf));

    SimulationResult result;
    result.times = Eigen::VectorXd::LinSpaced(steps, 0.0, (steps - 1) * dt);
    result.dt = dt;
    result.load_description = load.description;
    const int nd = model.dof_count();
    result.displacement.setZero(steps, nd);
    result.velocity.setZero(steps, nd);
    result.acceleration.setZero(steps, nd);
    for (Eigen::Index i = 0; i < nf; ++i) {
        result.displacement.col(model.free_dofs[i]) = h.u.col(i);
        result.velocity.col(model.free_dofs[i]) = h.v.col(i);
        result.acceleration.col(model.free_dofs[i]) = h.a.col(i);
    }
    return result;
}

struct SensorSamples {
    TimeSeriesMatrix accel;         // at layout.accel_positions
    TimeSeriesMatrix strain;        // at layout.strain_positions, surface strain
    TimeSeriesMatrix displacement;  // truth at query_positions
};

// Interpolates nodal histories through the Hermite shape functions: nodal
// acceleration for the accelerometers, -z(x) * curvature of the displacement
// field for the gauges, displacement at the query stations.
inline SensorSamples sample_sensors(const SimulationResult& result, const FEModel& model,
                                    const statespace::SensorLayout& layout,
                                    const Eigen::VectorXd& query_positions) {
    if (layout.strain_depths.size() != layout.strain_count())
        throw std::invalid_argument("sample_sensors: strain_depths must match strain_positions");
    auto interpolate = [&](const Eigen::MatrixXd& nodal, const Eigen::VectorXd& xs, int deriv) {
        Eigen::MatrixXd rows(xs.size(), model.dof_count());
        for (Eigen::Index j = 0; j < xs.size(); ++j) rows.row(j) = hermite_row(model, xs(j), deriv);
        return Eigen::MatrixXd(nodal * rows.transpose());
    };

    SensorSamples s;
    s.accel = {"acc", result.times, layout.accel_positions,
               interpolate(result.acceleration, layout.accel_positions, 0)};
    Eigen::MatrixXd curvature = interpolate(result.displacement, layout.strain_positions, 2);
    s.strain = {"eps", result.times, layout.strain_positions,
                curvature * (-layout.strain_depths).asDiagonal()};
    s.displacement = {"u", result.times, query_positions,
                      interpolate(result.displacement, query_positions, 0)};
    return s;
}

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Box-Muller over mt19937_64. std::normal_distribution is implementation
// defined; this keeps (config, seed) -> output byte-identical across
// standard libraries.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;          // [0, 1)
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace detail

// Adds zero-mean Gaussian noise with per-channel standard deviation
// (percent/100) * RMS(channel); deterministic under a fixed seed and
// independent of the other channels.
inline TimeSeriesMatrix add_noise(const TimeSeriesMatrix& signal, double percent, std::uint64_t seed) {
    if (percent < 0) throw std::invalid_argument("add_noise: percent must be non-negative");
    TimeSeriesMatrix out = signal;
    if (percent == 0) return out;
    for (Eigen::Index c = 0; c < signal.channels(); ++c) {
        const double sigma = percent / 100.0 * signal.channel_rms(c);
        detail::GaussianSampler gauss(detail::mix_seed(seed, static_cast<std::uint64_t>(c)));
        for (Eigen::Index k = 0; k < signal.samples(); ++k) out.values(k, c) += sigma * gauss();
    }
    return out;
}

}  // namespace splinefusion::beamsim
