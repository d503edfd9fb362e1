#include <doctest.h>

#include <cmath>
#include <complex>

#include "specboot/mp_law.hpp"

using namespace specboot;

namespace {

// closed-form density for the identity population, gamma < 1
double mp_identity_density(double x, double gamma) {
    const double a = std::pow(1.0 - std::sqrt(gamma), 2);
    const double b = std::pow(1.0 + std::sqrt(gamma), 2);
    if (x <= a || x >= b) return 0.0;
    return std::sqrt((b - x) * (x - a)) / (2.0 * M_PI * gamma * x);
}

double density_at(const MpLaw& law, double x) {
    for (Eigen::Index i = 1; i < law.grid.size(); ++i) {
        if (law.grid[i] >= x) {
            const double w =
                (x - law.grid[i - 1]) / (law.grid[i] - law.grid[i - 1]);
            return (1.0 - w) * law.density[i - 1] + w * law.density[i];
        }
    }
    return 0.0;
}

}  // namespace

TEST_CASE("companion transform satisfies its defining quadratic") {
    auto H = PopulationSpectrum::point_mass(1.0);
    for (double gamma : {0.25, 0.5, 2.0}) {
        for (std::complex<double> z :
             {std::complex<double>(1.0, 0.1), {0.3, 0.01}, {4.0, 1.0},
              {-0.5, 0.2}, {2.0, -0.05}}) {
            CAPTURE(gamma);
            std::complex<double> m = stieltjes_companion(H, gamma, z);
            // identity population: z m^2 + (z + 1 - gamma) m + 1 = 0
            std::complex<double> res = z * m * m + (z + 1.0 - gamma) * m + 1.0;
            CHECK(std::abs(res) < 1e-9);
            CHECK(m.imag() * z.imag() > 0.0);
        }
    }
    CHECK_THROWS_AS(stieltjes_companion(H, 0.5, {1.0, 0.0}), parameter_error);
    CHECK_THROWS_AS(stieltjes_companion(H, -1.0, {1.0, 0.1}), parameter_error);
}

TEST_CASE("identity population recovers the classical law") {
    for (double gamma : {0.25, 0.5}) {
        CAPTURE(gamma);
        MpLaw law = solve_mp_law(PopulationSpectrum::point_mass(1.0), gamma);
        const double a = std::pow(1.0 - std::sqrt(gamma), 2);
        const double b = std::pow(1.0 + std::sqrt(gamma), 2);

        REQUIRE(law.support.size() == 1);
        CHECK(law.support.front().lo == doctest::Approx(a).epsilon(0.02));
        CHECK(law.support.front().hi == doctest::Approx(b).epsilon(0.02));
        CHECK(law.point_mass_at_zero == 0.0);
        CHECK(law.total_mass() == doctest::Approx(1.0).epsilon(0.01));

        // density against the closed form at interior points
        for (double x : {0.7 * a + 0.3 * b, 0.5 * a + 0.5 * b,
                         0.2 * a + 0.8 * b})
            CHECK(density_at(law, x) ==
                  doctest::Approx(mp_identity_density(x, gamma)).epsilon(0.01));

        // first two moments: 1 and 1 + gamma
        CHECK(law.integrate([](double x) { return x; }) ==
              doctest::Approx(1.0).epsilon(0.005));
        CHECK(law.integrate([](double x) { return x * x; }) ==
              doctest::Approx(1.0 + gamma).epsilon(0.005));
    }
}

TEST_CASE("gamma above one produces the zero atom") {
    MpLaw law = solve_mp_law(PopulationSpectrum::point_mass(1.0), 2.0);
    CHECK(law.point_mass_at_zero == doctest::Approx(0.5));
    const double a = std::pow(1.0 - std::sqrt(2.0), 2);
    const double b = std::pow(1.0 + std::sqrt(2.0), 2);
    REQUIRE(!law.support.empty());
    CHECK(law.support.back().hi == doctest::Approx(b).epsilon(0.02));
    CHECK(law.support.back().lo == doctest::Approx(a).epsilon(0.1));
    CHECK(law.integrate([](double x) { return x; }) ==
          doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("well-separated atoms split the support") {
    Eigen::VectorXd atoms(2);
    atoms << 8.0, 1.0;
    MpLaw law = solve_mp_law(PopulationSpectrum(
        atoms, Eigen::VectorXd::Constant(2, 0.5)), 0.05);
    REQUIRE(law.support.size() == 2);
    CHECK(law.support[0].hi < 2.0);
    CHECK(law.support[1].lo > 4.0);
    CHECK(law.total_mass() == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("quantiles invert the cdf") {
    MpLaw law = solve_mp_law(PopulationSpectrum::point_mass(1.0), 0.25);
    Eigen::VectorXd probs(5);
    probs << 0.05, 0.25, 0.5, 0.75, 0.95;
    Eigen::VectorXd q = mp_quantiles(law, probs);
    for (Eigen::Index k = 1; k < q.size(); ++k) CHECK(q[k] > q[k - 1]);
    // read the cdf back at each quantile
    for (Eigen::Index k = 0; k < q.size(); ++k) {
        double cdf = 0.0;
        for (Eigen::Index i = 1; i < law.grid.size(); ++i)
            if (law.grid[i] <= q[k]) cdf = law.cdf[i];
        CHECK(cdf == doctest::Approx(probs[k]).epsilon(0.02));
    }

    // gamma > 1: probabilities inside the zero atom map to zero
    MpLaw heavy = solve_mp_law(PopulationSpectrum::point_mass(1.0), 2.0);
    Eigen::VectorXd low(1);
    low << 0.3;
    CHECK(mp_quantiles(heavy, low)[0] == 0.0);

    Eigen::VectorXd bad(1);
    bad << 1.5;
    CHECK_THROWS_AS(mp_quantiles(law, bad), parameter_error);
}

TEST_CASE("theta functional matches moment identities") {
    Eigen::VectorXd atoms(2);
    atoms << 2.0, 1.0;
    PopulationSpectrum H(atoms, Eigen::VectorXd::Constant(2, 0.5));
    const double gamma = 0.5;

    // trace preservation and the quadratic moment map
    CHECK(theta_functional(H, gamma, SpectralStatistic::lss(LssFunction::X)) ==
          doctest::Approx(1.5).epsilon(0.005));
    const double m1 = 1.5, m2 = 2.5;
    CHECK(theta_functional(H, gamma, SpectralStatistic::lss(LssFunction::X2)) ==
          doctest::Approx(m2 + gamma * m1 * m1).epsilon(0.005));

    // log moment of the classical law: (g-1)/g log(1-g) - 1
    const double g = 0.5;
    const double expected_log = (g - 1.0) / g * std::log(1.0 - g) - 1.0;
    CHECK(theta_functional(PopulationSpectrum::point_mass(1.0), g,
                           SpectralStatistic::lss(LssFunction::LogX)) ==
          doctest::Approx(expected_log).epsilon(0.01));

    CHECK_THROWS_AS(theta_functional(H, 2.0,
                                     SpectralStatistic::lss(LssFunction::LogX)),
                    domain_error);
    CHECK_THROWS_AS(theta_functional(H, gamma, SpectralStatistic::john()),
                    parameter_error);
}

TEST_CASE("monte-carlo centering agrees with quadrature") {
    // identity population at p = 20, n = 50; modest block scale
    PopulationSpectrum H = PopulationSpectrum::uniform(
        Eigen::VectorXd::Ones(20));
    const double gamma = 0.4;
    MonteCarloBlock mc;
    mc.scale_m = 8;
    mc.reps = 8;
    mc.seed = 2024;
    for (auto f : {LssFunction::X, LssFunction::X2}) {
        const double quad =
            theta_functional(H, gamma, SpectralStatistic::lss(f));
        const double monte = theta_functional(
            H, gamma, SpectralStatistic::lss(f), ThetaMethod::MonteCarlo, mc);
        CHECK(monte == doctest::Approx(quad).epsilon(0.05));
    }
}

TEST_CASE("population spectrum validation and quantile") {
    Eigen::VectorXd atoms(2), weights(2);
    atoms << 1.0, 2.0;  // ascending: invalid
    weights << 0.5, 0.5;
    CHECK_THROWS_AS(PopulationSpectrum(atoms, weights), input_error);

    auto H = PopulationSpectrum::uniform((Eigen::VectorXd(4) << 4, 3, 2, 1)
                                             .finished());
    CHECK(H.quantile(0.2) == doctest::Approx(1.0));
    CHECK(H.quantile(0.5) == doctest::Approx(2.0));
    CHECK(H.quantile(0.9) == doctest::Approx(4.0));
    CHECK(H.mean() == doctest::Approx(2.5));
}
