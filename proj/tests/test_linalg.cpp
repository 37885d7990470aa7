#include <doctest.h>

#include <chrono>
#include <random>

#include "volterra/linalg.hpp"

using namespace volterra::linalg;

namespace {

std::mt19937 rng(12345);

BandedMatrix random_banded(Index rows, Index cols, Index l, Index u) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    BandedMatrix a(rows, cols, l, u);
    for (Index j = 0; j < cols; ++j) {
        const Index i0 = std::max<Index>(0, j - a.upper_bw());
        const Index i1 = std::min(rows - 1, j + a.lower_bw());
        for (Index i = i0; i <= i1; ++i) a.at(i, j) = dist(rng);
    }
    return a;
}

Vector random_vec(Index n) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = dist(rng);
    return v;
}

// Diagonally dominant almost-banded test matrix, well conditioned.
AlmostBandedMatrix random_almost_banded(Index n, Index l, Index u, Index r) {
    BandedMatrix band = random_banded(n, n, l, u);
    for (Index i = 0; i < n; ++i) band.at(i, i) += 4.0;
    DenseMatrix top(r, n);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < n; ++j) top(i, j) = dist(rng) + (i == j ? 4.0 : 0.0);
    return {band, r, top};
}

}  // namespace

TEST_CASE("band_mul_vec identity and zero") {
    BandedMatrix id = BandedMatrix::identity(3);
    Vector v(3);
    v << 1, 2, 3;
    CHECK((band_mul_vec(id, v) - v).norm() == 0.0);

    BandedMatrix z(3, 3, 1, 1);
    CHECK(band_mul_vec(z, v).norm() == 0.0);
}

TEST_CASE("band_mul_vec matches dense reference") {
    BandedMatrix a = random_banded(8, 8, 2, 1);
    Vector v = random_vec(8);
    Vector ref = a.to_dense() * v;
    CHECK((band_mul_vec(a, v) - ref).lpNorm<Eigen::Infinity>() <= 1e-15);
}

TEST_CASE("band_mul_vec rejects dimension mismatch") {
    BandedMatrix a = random_banded(4, 5, 1, 1);
    CHECK_THROWS_AS(band_mul_vec(a, random_vec(4)), std::invalid_argument);
}

TEST_CASE("band_mul_band basics") {
    BandedMatrix b = random_banded(6, 6, 1, 2);
    BandedMatrix ib = band_mul_band(BandedMatrix::identity(6), b);
    CHECK((ib.to_dense() - b.to_dense()).cwiseAbs().maxCoeff() == 0.0);

    // two upper-bidiagonal factors give an upper bandwidth 2 profile
    BandedMatrix u1 = random_banded(6, 6, 0, 1);
    BandedMatrix u2 = random_banded(6, 6, 0, 1);
    BandedMatrix p = band_mul_band(u1, u2);
    CHECK(p.upper_bw() == 2);
    CHECK(p.lower_bw() == 0);

    BandedMatrix a = random_banded(7, 7, 2, 1);
    DenseMatrix ref = a.to_dense() * a.transpose().to_dense();
    BandedMatrix prod = band_mul_band(a, a.transpose());
    CHECK((prod.to_dense() - ref).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("bandwidth additivity property") {
    std::uniform_int_distribution<int> size_dist(4, 64);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = size_dist(rng);
        std::uniform_int_distribution<Index> bw(0, std::min<Index>(3, n - 1));
        BandedMatrix a = random_banded(n, n, bw(rng), bw(rng));
        BandedMatrix b = random_banded(n, n, bw(rng), bw(rng));
        BandedMatrix c = band_mul_band(a, b);
        CHECK(c.lower_bw() <= a.lower_bw() + b.lower_bw());
        CHECK(c.upper_bw() <= a.upper_bw() + b.upper_bw());
        DenseMatrix ref = a.to_dense() * b.to_dense();
        CHECK((c.to_dense() - ref).cwiseAbs().maxCoeff() <= 1e-14 * (1 + ref.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("almost_banded_solve trivial cases") {
    AlmostBandedMatrix id{BandedMatrix::identity(4), 0, DenseMatrix(0, 4)};
    Vector b = random_vec(4);
    CHECK((almost_banded_solve(id, b) - b).lpNorm<Eigen::Infinity>() <= 1e-14);

    // one dense top row [1,1,1] over an identity band
    BandedMatrix band = BandedMatrix::identity(3);
    DenseMatrix top(1, 3);
    top << 1, 1, 1;
    AlmostBandedMatrix a{band, 1, top};
    Vector rhs(3);
    rhs << 6, 2, 3;
    Vector x = almost_banded_solve(a, rhs);
    Vector expect(3);
    expect << 1, 2, 3;
    CHECK((x - expect).lpNorm<Eigen::Infinity>() <= 1e-13);
}

TEST_CASE("almost_banded_solve matches dense LU") {
    AlmostBandedMatrix a = random_almost_banded(60, 2, 3, 2);
    Vector b = random_vec(60);
    Vector x = almost_banded_solve(a, b);
    Vector ref = dense_solve(a.to_dense(), b);
    CHECK((x - ref).norm() <= 1e-11 * ref.norm());
    CHECK((a.apply(x) - b).norm() <= 1e-12 * b.norm());
}

TEST_CASE("almost_banded_solve and dense_solve agree on random well-conditioned systems") {
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = 50 + trial * 15;  // up to 185
        AlmostBandedMatrix a = random_almost_banded(n, 3, 2, 2);
        DenseMatrix d = a.to_dense();
        Eigen::JacobiSVD<DenseMatrix> svd(d);
        const double cond = svd.singularValues()(0) / svd.singularValues().tail(1)(0);
        REQUIRE(cond < 1e6);
        Vector b = random_vec(n);
        Vector x = almost_banded_solve(a, b);
        Vector ref = dense_solve(d, b);
        CHECK((x - ref).norm() <= 1e-10 * (1 + ref.norm()));
    }
}

TEST_CASE("almost_banded_solve flags singular systems") {
    BandedMatrix band = BandedMatrix::identity(4);
    band.at(2, 2) = 0.0;
    AlmostBandedMatrix a{band, 0, DenseMatrix(0, 4)};
    CHECK_THROWS_AS(almost_banded_solve(a, random_vec(4)), SingularMatrixError);
}

TEST_CASE("dense_solve basics") {
    DenseMatrix id = DenseMatrix::Identity(3, 3);
    Vector b = random_vec(3);
    CHECK((dense_solve(id, b) - b).norm() == 0.0);

    DenseMatrix d2 = 2.0 * DenseMatrix::Identity(2, 2);
    Vector b2(2);
    b2 << 2, 4;
    Vector x2 = dense_solve(d2, b2);
    CHECK(x2[0] == doctest::Approx(1.0));
    CHECK(x2[1] == doctest::Approx(2.0));
}

TEST_CASE("dense_solve Hilbert residual bound") {
    DenseMatrix h(5, 5);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j) h(i, j) = 1.0 / (i + j + 1.0);
    Vector b = random_vec(5);
    Vector x = dense_solve(h, b);
    CHECK((h * x - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("dense_solve flags singular matrix") {
    DenseMatrix s = DenseMatrix::Zero(3, 3);
    s(0, 0) = 1.0;
    CHECK_THROWS_AS(dense_solve(s, random_vec(3)), SingularMatrixError);
}

TEST_CASE("almost_banded_solve cost scales linearly in n") {
    auto timed_solve = [](Index n) {
        AlmostBandedMatrix a = random_almost_banded(n, 3, 3, 2);
        Vector b = random_vec(n);
        const auto t0 = std::chrono::steady_clock::now();
        for (int rep = 0; rep < 5; ++rep) {
            Vector x = almost_banded_solve(a, b);
            CHECK(x.allFinite());
        }
        const auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(t1 - t0).count();
    };
    timed_solve(1000);  // warm up
    const double t1000 = timed_solve(1000);
    const double t4000 = timed_solve(4000);
    CHECK(t4000 < 10.0 * t1000);
}
