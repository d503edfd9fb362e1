#pragma once

// Bootstrap-calibrated sphericity tests of H0: Sigma = I via the LRT,
// John, and condition-number statistics. Null replicates use the identity
// spectrum with the estimated kurtosis.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "specboot/bootstrap.hpp"
#include "specboot/common.hpp"
#include "specboot/moments.hpp"
#include "specboot/spectral_core.hpp"

namespace specboot {

struct SphericityResult {
    std::string test;
    double statistic = 0.0;
    double critical_value = 0.0;
    double p_value = 0.0;
    bool reject = false;
};

struct SphericityReport {
    double kappa_hat = 0.0;
    Eigen::Index n = 0, p = 0;
    double alpha = 0.05;
    int B = 0;
    std::uint64_t seed = 0;
    std::vector<SphericityResult> results;
};

/// Run the requested tests on a (pre-standardized) data matrix. All tests
/// share one set of null replicate eigensolves per call.
inline SphericityReport run_sphericity(const DataMatrix& X,
                                       const std::vector<SpectralStatistic>& tests,
                                       int B, double alpha, std::uint64_t seed,
                                       int workers = 1) {
    const double gamma_n = X.gamma_n();
    for (const auto& t : tests) {
        if (t.kind != SpectralStatistic::Kind::LRT &&
            t.kind != SpectralStatistic::Kind::John &&
            t.kind != SpectralStatistic::Kind::ConditionNumber)
            throw parameter_error("unsupported sphericity test: " + t.name());
        if (t.needs_positive_spectrum() && gamma_n >= 1.0)
            throw domain_error(t.name() +
                               " requires p < n; the John test remains valid "
                               "for gamma >= 1");
    }

    SphericityReport report;
    report.n = X.n();
    report.p = X.p();
    report.alpha = alpha;
    report.B = B;
    report.seed = seed;
    report.kappa_hat = kappa_hat(X);

    const Eigen::VectorXd observed_evals = esd_from_data(X).eigenvalues;

    BootstrapConfig cfg;
    cfg.B = B;
    cfg.n = X.n();
    cfg.lambda_tilde = Eigen::VectorXd::Ones(X.p());
    cfg.kappa = report.kappa_hat;
    cfg.statistics = tests;
    cfg.master_seed = seed;
    cfg.workers = workers;
    BootstrapDistribution null_dist = bootstrap_replicates(cfg);

    for (std::size_t s = 0; s < tests.size(); ++s) {
        SphericityResult r;
        r.test = tests[s].name();
        r.statistic = evaluate_statistic(observed_evals, tests[s]);
        Eigen::VectorXd col = null_dist.column(s);
        r.critical_value = empirical_quantile(col, 1.0 - alpha);
        r.p_value = p_value(r.statistic, col);
        r.reject = r.statistic > r.critical_value;
        report.results.push_back(std::move(r));
    }
    return report;
}

}  // namespace specboot
