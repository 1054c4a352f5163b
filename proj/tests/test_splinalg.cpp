#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cmath>
#include <vector>

#include "lossydc/admittance.hpp"
#include "lossydc/linsolve.hpp"
#include "lossydc/rng.hpp"
#include "lossydc/topology.hpp"
#include "testnets.hpp"

using namespace lossydc;
using namespace testnets;

namespace {

Eigen::SparseMatrix<double> sparse_of(const Eigen::MatrixXd& m) {
    return m.sparseView();
}

// Reduced Laplacian of a random connected weighted graph (tree + `extra`
// chords) with bus 0 grounded. Always SPD.
Eigen::SparseMatrix<double> random_laplacian(UniformRng& rng, int nb, int extra) {
    std::vector<Eigen::Triplet<double>> trips;
    auto stamp = [&](int u, int v, double w) {
        if (u > 0) trips.emplace_back(u - 1, u - 1, w);
        if (v > 0) trips.emplace_back(v - 1, v - 1, w);
        if (u > 0 && v > 0) {
            trips.emplace_back(u - 1, v - 1, -w);
            trips.emplace_back(v - 1, u - 1, -w);
        }
    };
    for (int v = 1; v < nb; ++v)
        stamp(static_cast<int>(rng.next() * v), v, rng.range(0.1, 10.0));
    for (int e = 0; e < extra; ++e) {
        const int u = static_cast<int>(rng.next() * nb);
        const int v = static_cast<int>(rng.next() * nb);
        if (u != v) stamp(u, v, rng.range(0.1, 10.0));
    }
    Eigen::SparseMatrix<double> lap(nb - 1, nb - 1);
    lap.setFromTriplets(trips.begin(), trips.end());
    return lap;
}

TopologyCache cache_of(const Network& net) {
    return build_topology(net, build_admittance(net));
}

}  // namespace

TEST_CASE("factorize: identity") {
    Eigen::SparseMatrix<double> eye(3, 3);
    eye.setIdentity();
    const auto op = SpdOperator::factorize(eye);
    CHECK(op.dimension() == 3);
    Eigen::VectorXd b(3);
    b << 1.0, 2.0, 3.0;
    CHECK((op.solve(b) - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("factorize: 2x2 grounded chain") {
    Eigen::MatrixXd m(2, 2);
    m << 2.0, -1.0, -1.0, 1.0;
    const auto op = SpdOperator::factorize(sparse_of(m));
    Eigen::VectorXd b(2);
    b << 1.0, 0.0;
    const Eigen::VectorXd x = op.solve(b);
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("factorize: indefinite matrix is rejected") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
    CHECK_THROWS_AS(SpdOperator::factorize(sparse_of(m)), IndefiniteError);
}

TEST_CASE("factorize: shape and symmetry are enforced") {
    Eigen::MatrixXd rect(2, 3);
    rect.setZero();
    CHECK_THROWS_AS(SpdOperator::factorize(sparse_of(rect)), DimensionError);

    Eigen::MatrixXd asym(2, 2);
    asym << 2.0, -1.0, -0.5, 1.0;
    CHECK_THROWS_AS(SpdOperator::factorize(sparse_of(asym)), DimensionError);

    const auto op = SpdOperator::factorize(sparse_of(Eigen::MatrixXd::Identity(2, 2)));
    CHECK_THROWS_AS(op.solve(Eigen::VectorXd::Zero(3)), DimensionError);
    CHECK_THROWS_AS(SpdOperator().solve(Eigen::VectorXd::Zero(2)), Error);
}

TEST_CASE("solve: zero rhs gives exact zero") {
    UniformRng rng(31);
    const auto lap = random_laplacian(rng, 40, 10);
    const auto op = SpdOperator::factorize(lap);
    const Eigen::VectorXd x = op.solve(Eigen::VectorXd::Zero(39));
    CHECK(x.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve: matrix columns map back to unit vectors") {
    UniformRng rng(32);
    const auto lap = random_laplacian(rng, 12, 4);
    const auto op = SpdOperator::factorize(lap);
    const Eigen::MatrixXd d = Eigen::MatrixXd(lap);
    for (int j = 0; j < d.cols(); ++j) {
        const Eigen::VectorXd ej = op.solve(d.col(j));
        CHECK(std::abs(ej[j] - 1.0) <= 1e-10);
        Eigen::VectorXd rest = ej;
        rest[j] = 0.0;
        CHECK(rest.cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("solve: factor once, reuse deterministically") {
    UniformRng rng(33);
    const auto lap = random_laplacian(rng, 60, 20);
    Eigen::VectorXd b(59);
    for (int i = 0; i < b.size(); ++i) b[i] = rng.range(-1.0, 1.0);

    const auto op = SpdOperator::factorize(lap);
    const Eigen::VectorXd first = op.solve(b);
    for (int rep = 0; rep < 1000; ++rep) {
        const Eigen::VectorXd again = op.solve(b);
        REQUIRE((again - first).cwiseAbs().maxCoeff() == 0.0);  // bitwise stable
    }

    // A fresh factorization of the same matrix agrees to rounding.
    const Eigen::VectorXd other = SpdOperator::factorize(lap).solve(b);
    CHECK((other - first).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("solve: solve_count tracks backsolves") {
    UniformRng rng(34);
    const auto op = SpdOperator::factorize(random_laplacian(rng, 20, 5));
    CHECK(op.solve_count() == 0);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(19);
    const int k = 17;
    for (int i = 0; i < k; ++i) b = op.solve(b);
    CHECK(op.solve_count() == k);
}

TEST_CASE("property: random Laplacian solves meet the residual bound") {
    UniformRng rng(20240902);
    for (int trial = 0; trial < 1000; ++trial) {
        const int nb = 2 + static_cast<int>(rng.next() * 199);
        const int extra = static_cast<int>(rng.next() * nb);
        const auto lap = random_laplacian(rng, nb, extra);
        const auto op = SpdOperator::factorize(lap);

        Eigen::VectorXd b(nb - 1);
        for (int i = 0; i < b.size(); ++i) b[i] = rng.range(-10.0, 10.0);
        const Eigen::VectorXd x = op.solve(b);
        const double resid = (lap * x - b).cwiseAbs().maxCoeff();
        CHECK(resid <= 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("sparse LU: nonsymmetric systems") {
    Eigen::MatrixXd m(2, 2);
    m << 0.0, 1.0, 2.0, 0.0;
    const auto op = SparseLuOperator::factorize(sparse_of(m));
    Eigen::VectorXd b(2);
    b << 3.0, 4.0;
    const Eigen::VectorXd x = op.solve(b);
    CHECK(x[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(x[1] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK_THROWS_AS(SparseLuOperator::factorize(sparse_of(Eigen::MatrixXd::Zero(2, 2))),
                    LinearSolveError);
}

TEST_CASE("recover_angles: path network accumulates branch differences") {
    // Edges 1->2, 2->3 with slack 3: theta_2 = d_2, theta_1 = d_1 + d_2.
    const auto cache = cache_of(path3(0.0, 0.0));
    Eigen::VectorXd d(2);
    d << 0.1, 0.2;
    const Eigen::VectorXd theta = recover_angles(cache.A_r, cache.gram, d);
    REQUIRE(theta.size() == 2);
    CHECK(theta[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(theta[1] == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("recover_angles: consistent data is reproduced exactly") {
    UniformRng rng(35);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.next() * 18);
        const int extra = static_cast<int>(rng.next() * 3);
        const auto cache = cache_of(random_connected(rng, n, extra));
        Eigen::VectorXd v(cache.n);
        for (int i = 0; i < cache.n; ++i) v[i] = rng.range(-0.5, 0.5);
        const Eigen::VectorXd d = cache.A_r.transpose() * v;
        const Eigen::VectorXd back = recover_angles(cache.A_r, cache.gram, d);
        CHECK((back - v).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("recover_angles: inconsistent data matches dense least squares") {
    const auto cache = cache_of(triangle(0.1, -0.2));
    REQUIRE(cache.c == 1);
    Eigen::VectorXd d(3);
    d << 0.10, 0.25, -0.07;  // not in range(A_r^T): cycle sum != 0

    const Eigen::VectorXd theta = recover_angles(cache.A_r, d);
    const Eigen::MatrixXd at = dense(cache.A_r).transpose();  // 3 x 2, full column rank
    const Eigen::VectorXd oracle = at.colPivHouseholderQr().solve(d);
    CHECK((theta - oracle).cwiseAbs().maxCoeff() <= 1e-10);

    // Both recover_angles overloads agree.
    const Eigen::VectorXd theta2 = recover_angles(cache.A_r, cache.gram, d);
    CHECK((theta - theta2).cwiseAbs().maxCoeff() <= 1e-12);
}
