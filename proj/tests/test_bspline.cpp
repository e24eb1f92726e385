#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "splinefusion/bspline.hpp"

using namespace splinefusion::bspline;
using Catch::Approx;

TEST_CASE("knot vector construction") {
    SECTION("tapered-beam grid: 5 internal knots, degree 3") {
        const KnotVector kv = build_knot_vector(0.0, 1.65, 5, 3);
        REQUIRE(kv.count() == 11);
        CHECK(kv.knots(0) == Approx(-1.2375).margin(1e-14));
        CHECK(kv.knots(10) == Approx(2.8875).margin(1e-14));
        CHECK(kv.knots(3) == 0.0);
        CHECK(kv.knots(7) == 1.65);
        for (int i = 1; i < 11; ++i)
            CHECK(kv.knots(i) - kv.knots(i - 1) == Approx(0.4125).margin(1e-14));
        CHECK(BasisSet(kv).size() == 7);
    }
    SECTION("degree-0 base case") {
        const BasisSet basis(build_knot_vector(0.0, 1.0, 2, 0));
        REQUIRE(basis.size() == 1);
        CHECK(basis.eval(0.0, 0)(0) == 1.0);
        CHECK(basis.eval(0.5, 0)(0) == 1.0);
        CHECK(basis.eval(1.0, 0)(0) == 1.0);  // left limit at the right boundary
    }
    SECTION("11 internal knots, degree 3") {
        const KnotVector kv = build_knot_vector(0.0, 1.0, 11, 3);
        REQUIRE(kv.count() == 17);
        for (int i = 1; i < 17; ++i)
            CHECK(kv.knots(i) - kv.knots(i - 1) == Approx(0.1).margin(1e-14));
        CHECK(BasisSet(kv).size() == 13);
    }
    SECTION("rejects bad input") {
        CHECK_THROWS_AS(build_knot_vector(1.0, 1.0, 5, 3), std::invalid_argument);
        CHECK_THROWS_AS(build_knot_vector(1.0, 0.0, 5, 3), std::invalid_argument);
        CHECK_THROWS_AS(build_knot_vector(0.0, 1.0, 1, 3), std::invalid_argument);
        CHECK_THROWS_AS(build_knot_vector(0.0, 1.0, 5, -1), std::invalid_argument);
    }
}

TEST_CASE("basis evaluation") {
    const BasisSet basis(build_knot_vector(0.0, 1.65, 5, 3));

    SECTION("classic uniform cubic values at an interior knot") {
        // On a uniform grid the cubic B-spline takes {1/6, 4/6, 1/6} on the
        // three functions overlapping a knot.
        const BasisSet b(build_knot_vector(0.0, 4.0, 5, 3));
        const Eigen::VectorXd v = b.eval(2.0, 0);
        int nonzero = 0;
        for (int i = 0; i < b.size(); ++i)
            if (v(i) != 0.0) ++nonzero;
        CHECK(nonzero == 3);
        CHECK(v(2) == Approx(1.0 / 6.0).epsilon(1e-13));
        CHECK(v(3) == Approx(4.0 / 6.0).epsilon(1e-13));
        CHECK(v(4) == Approx(1.0 / 6.0).epsilon(1e-13));
    }
    SECTION("out-of-domain and bad derivative order rejected") {
        CHECK_THROWS_AS(basis.eval(-0.01, 0), std::domain_error);
        CHECK_THROWS_AS(basis.eval(1.66, 0), std::domain_error);
        CHECK_THROWS_AS(basis.eval(0.5, 3), std::invalid_argument);
        const BasisSet linear(build_knot_vector(0.0, 1.0, 4, 1));
        CHECK_THROWS_AS(linear.eval(0.5, 2), std::invalid_argument);
    }
}

TEST_CASE("basis matrix") {
    const BasisSet basis(build_knot_vector(0.0, 1.65, 5, 3));
    const Eigen::VectorXd xs = Eigen::VectorXd::LinSpaced(8, 0.1, 1.6);

    const Eigen::MatrixXd phi = basis.matrix(xs, 0);
    REQUIRE(phi.rows() == 8);
    REQUIRE(phi.cols() == 7);
    for (int j = 0; j < 8; ++j) CHECK(phi.row(j).sum() == Approx(1.0).margin(1e-13));

    SECTION("repeated position gives identical rows") {
        Eigen::VectorXd two(2);
        two << 0.7321, 0.7321;
        const Eigen::MatrixXd rows = basis.matrix(two, 2);
        CHECK((rows.row(0) - rows.row(1)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("partition of unity and derivative sums on a dense grid") {
    const BasisSet basis(build_knot_vector(0.0, 1.65, 5, 3));
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(10001, 0.0, 1.65);
    double max_pou = 0.0, max_d1 = 0.0, max_d2 = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        max_pou = std::max(max_pou, std::abs(basis.eval(grid(i), 0).sum() - 1.0));
        max_d1 = std::max(max_d1, std::abs(basis.eval(grid(i), 1).sum()));
        max_d2 = std::max(max_d2, std::abs(basis.eval(grid(i), 2).sum()));
    }
    CHECK(max_pou < 1e-12);
    CHECK(max_d1 < 1e-9);
    CHECK(max_d2 < 1e-9);
}

TEST_CASE("analytic derivatives match finite differences") {
    const BasisSet basis(build_knot_vector(0.0, 1.65, 5, 3));
    const auto& knots = basis.knot_vector().knots;
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(1e-3, 1.65 - 1e-3);

    int tested = 0;
    while (tested < 100) {
        const double x = u(rng);
        bool near_knot = false;
        for (Eigen::Index j = 0; j < knots.size(); ++j)
            if (std::abs(x - knots(j)) < 1e-4) near_knot = true;
        if (near_knot) continue;
        ++tested;

        const double h = 1e-6;
        const Eigen::VectorXd d1 = basis.eval(x, 1);
        const Eigen::VectorXd d2 = basis.eval(x, 2);
        const Eigen::VectorXd fd1 = (basis.eval(x + h, 0) - basis.eval(x - h, 0)) / (2 * h);
        const Eigen::VectorXd fd2 = (basis.eval(x + h, 1) - basis.eval(x - h, 1)) / (2 * h);
        for (int i = 0; i < basis.size(); ++i) {
            CHECK(std::abs(d1(i) - fd1(i)) / std::max(1.0, std::abs(d1(i))) < 1e-5);
            CHECK(std::abs(d2(i) - fd2(i)) / std::max(1.0, std::abs(d2(i))) < 1e-5);
        }
    }
}

TEST_CASE("compact support is exact and values are non-negative") {
    const BasisSet basis(build_knot_vector(0.0, 1.65, 5, 3));
    const auto& kv = basis.knot_vector();
    const int order = kv.order();
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(2001, 0.0, 1.65);
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
        const Eigen::VectorXd v = basis.eval(grid(g), 0);
        for (int i = 0; i < basis.size(); ++i) {
            CHECK(v(i) >= 0.0);
            const bool inside = grid(g) >= kv.knots(i) && grid(g) <= kv.knots(i + order);
            if (!inside) CHECK(v(i) == 0.0);
        }
    }
}
