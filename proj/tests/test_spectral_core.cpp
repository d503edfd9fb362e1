#include <doctest.h>

#include <random>

#include "specboot/rng.hpp"
#include "specboot/spectral_core.hpp"

using namespace specboot;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                              std::uint64_t seed) {
    Xoshiro256pp rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = nd(rng);
    return M;
}

}  // namespace

TEST_CASE("sample covariance basics") {
    Eigen::MatrixXd X(2, 1);
    X << 1, -1;
    auto S = sample_covariance(DataMatrix(X));
    CHECK(S.matrix(0, 0) == doctest::Approx(1.0));

    auto S2 = sample_covariance(DataMatrix(Eigen::MatrixXd::Identity(2, 2)));
    CHECK(S2.matrix(0, 0) == doctest::Approx(0.5));
    CHECK(S2.matrix(0, 1) == doctest::Approx(0.0));
    CHECK(S2.matrix(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("sample covariance equals row outer-product sum") {
    Eigen::MatrixXd X = random_matrix(6, 3, 17);
    auto S = sample_covariance(DataMatrix(X));
    Eigen::MatrixXd brute = Eigen::MatrixXd::Zero(3, 3);
    for (int i = 0; i < 6; ++i)
        brute += X.row(i).transpose() * X.row(i) / 6.0;
    CHECK((S.matrix - brute).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sample covariance rejects bad input") {
    Eigen::MatrixXd X(2, 1);
    X << 1, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(DataMatrix{X}, input_error);
    CHECK_THROWS_AS(DataMatrix{Eigen::MatrixXd::Ones(1, 3)}, input_error);
}

TEST_CASE("eigendecomposition of simple matrices") {
    SampleCovariance S{Eigen::Vector2d(3, 1).asDiagonal().toDenseMatrix(), 2};
    auto [vals, vecs] = sym_eigendecompose(S);
    CHECK(vals(0) == doctest::Approx(3));
    CHECK(vals(1) == doctest::Approx(1));
    CHECK(std::abs(vecs(0, 0)) == doctest::Approx(1));

    Eigen::MatrixXd M(2, 2);
    M << 2, 1, 1, 2;
    auto [vals2, vecs2] = sym_eigendecompose(SampleCovariance{M, 2});
    CHECK(vals2(0) == doctest::Approx(3));
    CHECK(vals2(1) == doctest::Approx(1));
}

TEST_CASE("eigendecomposition reconstruction and orthonormality") {
    Eigen::MatrixXd A = random_matrix(8, 8, 3);
    Eigen::MatrixXd S = A * A.transpose();
    auto [vals, vecs] = sym_eigendecompose(SampleCovariance{S, 8});
    Eigen::MatrixXd recon = vecs * vals.asDiagonal() * vecs.transpose();
    CHECK((recon - S).norm() < 1e-8 * S.norm());
    Eigen::MatrixXd gram = vecs.transpose() * vecs;
    CHECK((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() <
          1e-10);
    for (int j = 1; j < 8; ++j) CHECK(vals(j) <= vals(j - 1));
}

TEST_CASE("large reconstruction bound holds up to p = 600") {
    Eigen::MatrixXd A = random_matrix(600, 600, 11);
    Eigen::MatrixXd S = (A * A.transpose()) / 600.0;
    auto [vals, vecs] = sym_eigendecompose(SampleCovariance{S, 600});
    CHECK((vecs * vals.asDiagonal() * vecs.transpose() - S).norm() <
          1e-8 * S.norm());
    CHECK((vecs.transpose() * vecs -
           Eigen::MatrixXd::Identity(600, 600)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("statistic evaluation on known eigenvalues") {
    Eigen::VectorXd ones4 = Eigen::VectorXd::Ones(4);
    CHECK(evaluate_statistic(ones4, SpectralStatistic::lss(LssFunction::X)) ==
          doctest::Approx(1.0));

    Eigen::VectorXd l2(2);
    l2 << 3, 1;
    CHECK(evaluate_statistic(l2, SpectralStatistic::lrt()) ==
          doctest::Approx(3 - std::log(3.0) - 1).epsilon(1e-5));

    Eigen::VectorXd l3(3);
    l3 << 2, 1, 1;
    CHECK(evaluate_statistic(l3, SpectralStatistic::john()) ==
          doctest::Approx(0.375));

    CHECK(evaluate_statistic(l3, SpectralStatistic::max_eig()) ==
          doctest::Approx(2));
    CHECK(evaluate_statistic(l3, SpectralStatistic::top_k_sum(2)) ==
          doctest::Approx(3));
    CHECK(evaluate_statistic(l3, SpectralStatistic::spectral_gap()) ==
          doctest::Approx(1));
    CHECK(evaluate_statistic(l3, SpectralStatistic::condition_number()) ==
          doctest::Approx(2));
}

TEST_CASE("statistic domain and parameter errors") {
    Eigen::VectorXd lam(2);
    lam << 1, 0;
    CHECK_THROWS_AS(
        evaluate_statistic(lam, SpectralStatistic::lss(LssFunction::LogX)),
        domain_error);
    CHECK_THROWS_AS(evaluate_statistic(lam, SpectralStatistic::lrt()),
                    domain_error);
    CHECK_THROWS_AS(evaluate_statistic(lam, SpectralStatistic::top_k_sum(5)),
                    parameter_error);
}

TEST_CASE("LSS linearity over the registry") {
    Eigen::VectorXd lam(5);
    lam << 2.5, 1.5, 1.0, 0.7, 0.3;
    const LssFunction fns[] = {LssFunction::X, LssFunction::X2,
                               LssFunction::LogX, LssFunction::LrtF};
    for (auto f : fns) {
        for (auto g : fns) {
            auto sum_stat = SpectralStatistic::lss_custom([=](double x) {
                return evaluate_lss_function(f, x) + evaluate_lss_function(g, x);
            });
            const double lhs = evaluate_statistic(lam, sum_stat);
            const double rhs =
                evaluate_statistic(lam, SpectralStatistic::lss(f)) +
                evaluate_statistic(lam, SpectralStatistic::lss(g));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("scale equivariance of statistics") {
    Eigen::VectorXd lam(6);
    lam << 3.2, 2.0, 1.1, 0.9, 0.5, 0.2;
    for (double c : {0.1, 7.0}) {
        Eigen::VectorXd scaled = c * lam;
        CHECK(evaluate_statistic(scaled, SpectralStatistic::lss(LssFunction::X)) ==
              doctest::Approx(
                  c * evaluate_statistic(lam, SpectralStatistic::lss(LssFunction::X))));
        CHECK(evaluate_statistic(scaled,
                                 SpectralStatistic::lss(LssFunction::X2)) ==
              doctest::Approx(c * c * evaluate_statistic(
                                          lam, SpectralStatistic::lss(LssFunction::X2))));
        CHECK(evaluate_statistic(scaled,
                                 SpectralStatistic::lss(LssFunction::LogX)) ==
              doctest::Approx(std::log(c) +
                              evaluate_statistic(
                                  lam, SpectralStatistic::lss(LssFunction::LogX))));
        CHECK(evaluate_statistic(scaled, SpectralStatistic::john()) ==
              doctest::Approx(evaluate_statistic(lam, SpectralStatistic::john())));
        CHECK(evaluate_statistic(scaled, SpectralStatistic::condition_number()) ==
              doctest::Approx(
                  evaluate_statistic(lam, SpectralStatistic::condition_number())));
    }
}

TEST_CASE("john statistic matches matrix form") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        Eigen::MatrixXd A = random_matrix(10, 10, seed);
        Eigen::MatrixXd S = (A * A.transpose()) / 10.0;
        auto [vals, vecs] = sym_eigendecompose(SampleCovariance{S, 10});
        const double from_evals =
            evaluate_statistic(vals, SpectralStatistic::john());
        Eigen::MatrixXd inner =
            10.0 * S / S.trace() - Eigen::MatrixXd::Identity(10, 10);
        const double from_matrix = (inner * inner).trace();
        CHECK(from_evals == doctest::Approx(from_matrix).epsilon(1e-8));
    }
}

TEST_CASE("statistic name parsing round-trips") {
    for (const char* name :
         {"x", "x^2", "log", "max_eig", "top10_sum", "spectral_gap", "john",
          "condition_number", "lrt"}) {
        auto stat = SpectralStatistic::parse(name);
        REQUIRE(stat.has_value());
        CHECK(SpectralStatistic::parse(stat->name()).has_value());
    }
    CHECK(!SpectralStatistic::parse("bogus").has_value());
}
