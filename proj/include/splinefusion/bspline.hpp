#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "splinefusion/errors.hpp"

namespace splinefusion::bspline {

// Extended ("closed-ended") knot grid: n_internal equally spaced knots
// spanning [a, b], continued at the same spacing by `degree` external knots
// on each side. Every basis function acting on [a, b] then has full support
// and a smooth second derivative at the domain boundaries, unlike the
// clamped construction with repeated end knots.
struct KnotVector {
    Eigen::VectorXd knots;  // length k, strictly increasing
    int degree = 0;         // N
    double domain_min = 0.0;
    double domain_max = 0.0;

    int order() const { return degree + 1; }
    Eigen::Index count() const { return knots.size(); }
};

inline KnotVector build_knot_vector(double a, double b, int n_internal, int degree) {
    if (!(b > a)) throw std::invalid_argument("build_knot_vector: invalid domain, need b > a");
    if (n_internal < 2) throw std::invalid_argument("build_knot_vector: need at least 2 internal knots");
    if (degree < 0) throw std::invalid_argument("build_knot_vector: degree must be non-negative");

    const double h = (b - a) / static_cast<double>(n_internal - 1);
    const int k = n_internal + 2 * degree;
    KnotVector kv;
    kv.knots.resize(k);
    for (int i = 0; i < k; ++i) kv.knots(i) = a + (i - degree) * h;
    kv.knots(degree) = a;  // pin the domain ends exactly
    kv.knots(k - 1 - degree) = b;
    kv.degree = degree;
    kv.domain_min = a;
    kv.domain_max = b;
    return kv;
}

// B-spline basis over an extended knot grid, evaluated by the Cox-de Boor
// recursion. m = k - order functions; each is nonzero on `order` consecutive
// knot spans, and on the domain they form a partition of unity.
//
// Evaluation convention: right-continuous at interior knots, left-limit at
// the right domain boundary, so evaluation is total on [a, b].
class BasisSet {
public:
    explicit BasisSet(KnotVector kv) : kv_(std::move(kv)) {
        m_ = static_cast<int>(kv_.count()) - kv_.order();
        if (m_ < 1) throw std::invalid_argument("BasisSet: knot vector too short for the degree");
        for (Eigen::Index i = 1; i < kv_.count(); ++i) {
            if (!(kv_.knots(i) > kv_.knots(i - 1)))
                throw std::invalid_argument("BasisSet: knots must be strictly increasing");
        }
    }

    int size() const { return m_; }  // number of basis functions
    int degree() const { return kv_.degree; }
    double domain_min() const { return kv_.domain_min; }
    double domain_max() const { return kv_.domain_max; }
    const KnotVector& knot_vector() const { return kv_; }

    // (phi_1(x) ... phi_m(x)) for deriv_order 0, first/second derivatives
    // for 1/2, via the B-spline derivative recurrence (never finite
    // differences). At most `order` entries are nonzero.
    Eigen::VectorXd eval(double x, int deriv_order = 0) const {
        check_point(x);
        check_deriv(deriv_order);
        Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
        const int N = kv_.degree;
        const int span = find_span(x);
        const int first = span - N;
        const auto& t = kv_.knots;

        if (deriv_order == 0) {
            std::vector<double> b(static_cast<size_t>(N) + 1);
            local_basis(span, x, N, b.data());
            for (int r = 0; r <= N; ++r) out(first + r) = b[r];
            return out;
        }

        if (deriv_order == 1) {
            // phi'_{i,N} = N * ( B_{i,N-1}/(t_{i+N}-t_i) - B_{i+1,N-1}/(t_{i+N+1}-t_{i+1}) )
            std::vector<double> lower(static_cast<size_t>(N));
            local_basis(span, x, N - 1, lower.data());
            auto b_low = [&](int i) {
                const int r = i - (span - (N - 1));
                return (r >= 0 && r <= N - 1) ? lower[static_cast<size_t>(r)] : 0.0;
            };
            for (int i = first; i <= span; ++i) {
                const double d1 = t(i + N) - t(i);
                const double d2 = t(i + N + 1) - t(i + 1);
                out(i) = N * (b_low(i) / d1 - b_low(i + 1) / d2);
            }
            return out;
        }

        // deriv_order == 2: apply the recurrence twice from degree N-2 values
        std::vector<double> lower2(static_cast<size_t>(N) - 1);
        local_basis(span, x, N - 2, lower2.data());
        auto b_low2 = [&](int i) {
            const int r = i - (span - (N - 2));
            return (r >= 0 && r <= N - 2) ? lower2[static_cast<size_t>(r)] : 0.0;
        };
        auto d_low = [&](int i) {  // d/dx B_{i,N-1}(x)
            const double d1 = t(i + N - 1) - t(i);
            const double d2 = t(i + N) - t(i + 1);
            return (N - 1) * (b_low2(i) / d1 - b_low2(i + 1) / d2);
        };
        for (int i = first; i <= span; ++i) {
            const double d1 = t(i + N) - t(i);
            const double d2 = t(i + N + 1) - t(i + 1);
            out(i) = N * (d_low(i) / d1 - d_low(i + 1) / d2);
        }
        return out;
    }

    // Row j is eval(xs[j], deriv_order); shape xs.size() x m.
    Eigen::MatrixXd matrix(const Eigen::Ref<const Eigen::VectorXd>& xs, int deriv_order = 0) const {
        Eigen::MatrixXd out(xs.size(), m_);
        for (Eigen::Index j = 0; j < xs.size(); ++j) out.row(j) = eval(xs(j), deriv_order).transpose();
        return out;
    }

private:
    KnotVector kv_;
    int m_ = 0;

    void check_point(double x) const {
        if (!(x >= kv_.domain_min && x <= kv_.domain_max))
            throw std::domain_error("BasisSet: evaluation point outside the basis domain");
    }

    void check_deriv(int deriv_order) const {
        if (deriv_order < 0 || deriv_order > 2 || deriv_order > kv_.degree)
            throw std::invalid_argument("BasisSet: unsupported derivative order");
    }

    // Index j with knots[j] <= x < knots[j+1], restricted to domain spans;
    // x == domain_max maps to the final domain span (left limit).
    int find_span(double x) const {
        const auto& t = kv_.knots;
        const int N = kv_.degree;
        const int last = static_cast<int>(t.size()) - 2 - N;
        if (x >= kv_.domain_max) return last;
        const double* lo = t.data() + N;
        const double* hi = t.data() + last + 2;
        const double* it = std::upper_bound(lo, hi, x);
        const int j = static_cast<int>(it - t.data()) - 1;
        return std::clamp(j, N, last);
    }

    // Triangular Cox-de Boor scheme: out[r] = B_{span-d+r, d}(x) for the
    // d+1 functions of degree d that are nonzero on `span`.
    void local_basis(int span, double x, int d, double* out) const {
        const auto& t = kv_.knots;
        out[0] = 1.0;
        std::vector<double> left(static_cast<size_t>(d) + 1), right(static_cast<size_t>(d) + 1);
        for (int j = 1; j <= d; ++j) {
            left[j] = x - t(span + 1 - j);
            right[j] = t(span + j) - x;
            double saved = 0.0;
            for (int r = 0; r < j; ++r) {
                const double tmp = out[r] / (right[r + 1] + left[j - r]);
                out[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            out[j] = saved;
        }
    }
};

}  // namespace splinefusion::bspline
