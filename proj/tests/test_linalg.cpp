#include <doctest.h>

#include <random>
#include <utility>
#include <vector>

#include "cotrack/linalg.hpp"

using namespace cotrack;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
    return m;
}

// Gauss-Jordan with partial pivoting on plain nested vectors.
std::vector<std::vector<double>> eliminate(const MatrixXd& a, const MatrixXd& b) {
    const int n = static_cast<int>(a.rows());
    const int q = static_cast<int>(b.cols());
    std::vector<std::vector<double>> m(n, std::vector<double>(n + q));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m[i][j] = a(i, j);
        for (int j = 0; j < q; ++j) m[i][n + j] = b(i, j);
    }
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int j = col; j < n + q; ++j) m[r][j] -= f * m[col][j];
        }
    }
    std::vector<std::vector<double>> x(n, std::vector<double>(q));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < q; ++j) x[i][j] = m[i][n + j] / m[i][i];
    return x;
}

}  // namespace

TEST_CASE("spd_solve small cases") {
    const MatrixXd x = linalg::spd_solve(MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3));
    CHECK((x - MatrixXd::Identity(3, 3)).norm() == 0.0);

    MatrixXd a(1, 1), b(1, 1);
    a << 2.0;
    b << 4.0;
    CHECK(linalg::spd_solve(a, b)(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("spd_solve matches an elimination oracle") {
    std::mt19937_64 rng(11);
    const MatrixXd m = random_matrix(5, 5, rng);
    const MatrixXd a = m * m.transpose() + MatrixXd::Identity(5, 5);
    const MatrixXd b = random_matrix(5, 3, rng);
    const MatrixXd x = linalg::spd_solve(a, b);
    const auto oracle = eliminate(a, b);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 3; ++j) CHECK(x(i, j) == doctest::Approx(oracle[i][j]).epsilon(1e-10));
    CHECK((a * x - b).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("spd_solve reports the failing pivot") {
    MatrixXd a(3, 3);
    a << 1, 0, 0,
         0, 0, 0,
         0, 0, 1;
    try {
        linalg::spd_solve(a, MatrixXd::Identity(3, 3));
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(e.index() == 1);
    }
    MatrixXd asym(2, 2);
    asym << 2, 1,
            0, 2;
    CHECK_THROWS_AS(linalg::spd_solve(asym, MatrixXd::Identity(2, 2)), InvalidInput);
    CHECK_THROWS_AS(linalg::spd_solve(MatrixXd::Identity(2, 2), MatrixXd::Identity(3, 3)), InvalidInput);
}

TEST_CASE("ridge closed forms") {
    const MatrixXd i2 = MatrixXd::Identity(2, 2);
    CHECK((linalg::ridge_primal(i2, 1.0) - 0.5 * i2).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((linalg::ridge_dual(i2, 1.0) - 0.5 * i2).cwiseAbs().maxCoeff() < 1e-15);

    MatrixXd d(2, 3);
    d << 1, 0, 0,
         0, 1, 0;
    CHECK((linalg::ridge_dual(d, 1.0) - 0.5 * d.transpose()).cwiseAbs().maxCoeff() < 1e-15);

    MatrixXd one(1, 1);
    one << 2.0;
    CHECK_THROWS_AS(linalg::ridge_primal(one, 0.0), InvalidInput);
    CHECK_THROWS_AS(linalg::ridge_dual(one, -1.0), InvalidInput);
}

TEST_CASE("primal and dual banks agree") {
    std::mt19937_64 rng(5);
    const MatrixXd small = random_matrix(4, 6, rng);
    CHECK((linalg::ridge_primal(small, 0.1) - linalg::ridge_dual(small, 0.1)).cwiseAbs().maxCoeff() < 1e-10);
    const MatrixXd wide = random_matrix(5, 200, rng);
    CHECK((linalg::ridge_primal(wide, 0.1) - linalg::ridge_dual(wide, 0.1)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((linalg::ridge(wide, 0.1) - linalg::ridge_dual(wide, 0.1)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("weighted solve and rescale factor") {
    std::mt19937_64 rng(9);
    const MatrixXd d = random_matrix(6, 9, rng);
    const MatrixXd c = linalg::ridge_primal(d, 0.2);

    const VectorXd unweighted = linalg::ridge_weighted(d, 2, 1.0, 0.2);
    CHECK((unweighted - c.col(2)).norm() < 1e-12);

    const VectorXd theta = linalg::ridge_weighted(d, 2, 6.0, 0.2);
    const double cosine = theta.dot(c.col(2)) / (theta.norm() * c.col(2).norm());
    CHECK(cosine >= 1.0 - 1e-10);

    for (double omega : {6.0, 7.0}) {
        const VectorXd th = linalg::ridge_weighted(d, 4, omega, 0.2);
        const double q = linalg::rescale_factor(omega, d.row(4).dot(c.col(4)));
        CHECK((th - q * c.col(4)).norm() <= 1e-9);
    }

    CHECK(linalg::rescale_factor(37.0, 1.0) == doctest::Approx(1.0));
    CHECK(linalg::rescale_factor(2.0, 0.0) == doctest::Approx(2.0));
    CHECK_THROWS_AS(linalg::ridge_weighted(d, 6, 2.0, 0.2), InvalidInput);
    CHECK_THROWS_AS(linalg::ridge_weighted(d, 0, 0.5, 0.2), InvalidInput);
}
