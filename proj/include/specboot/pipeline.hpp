#pragma once

// Full estimation pipeline tying the modules together: data -> kurtosis
// estimate -> spectrum estimate -> bootstrap replicates, with optional
// centering constants and contour-formula cross-checks.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "specboot/bootstrap.hpp"
#include "specboot/clt.hpp"
#include "specboot/common.hpp"
#include "specboot/moments.hpp"
#include "specboot/mp_law.hpp"
#include "specboot/spectral_core.hpp"
#include "specboot/spectrum_est.hpp"

namespace specboot {

struct PipelineOptions {
    int B = 500;
    std::uint64_t seed = 0;
    int workers = 1;
    SpectrumEstParams spectrum_params;
    double truncation_multiplier = 2.0;
    bool compute_theta = false;        // ϑ̃ per LSS statistic (quadrature)
    bool compute_clt = false;          // contour-formula η̂, v̂ per LSS
    ThetaMethod theta_method = ThetaMethod::Quadrature;
    MonteCarloBlock theta_mc;          // used when theta_method == MonteCarlo
};

struct PipelineResult {
    double kappa_hat = 0.0;
    EmpiricalSpectralDistribution esd;
    SpectrumEstimate spectrum;
    BootstrapConfig config;
    BootstrapDistribution distribution;
    Eigen::VectorXd theta_tilde;                 // empty unless computed
    std::vector<std::optional<CltEstimates>> clt;  // per statistic
};

inline PipelineResult run_pipeline(const DataMatrix& X,
                                   const std::vector<SpectralStatistic>& stats,
                                   const PipelineOptions& opts) {
    PipelineResult out;
    out.kappa_hat = kappa_hat(X);
    out.esd = esd_from_data(X);
    out.spectrum = estimate_lambda_tilde(out.esd, opts.spectrum_params,
                                         opts.truncation_multiplier);

    out.config.B = opts.B;
    out.config.n = X.n();
    out.config.lambda_tilde = out.spectrum.lambda_tilde;
    out.config.kappa = out.kappa_hat;
    out.config.statistics = stats;
    out.config.master_seed = opts.seed;
    out.config.workers = opts.workers;

    if (opts.compute_theta) {
        out.theta_tilde.resize(Eigen::Index(stats.size()));
        PopulationSpectrum h_tilde =
            PopulationSpectrum::uniform(out.spectrum.lambda_tilde);
        for (std::size_t s = 0; s < stats.size(); ++s) {
            if (!stats[s].is_lss())
                throw parameter_error(
                    "theta centering is defined for LSS only (got " +
                    stats[s].name() + ")");
            out.theta_tilde[Eigen::Index(s)] =
                theta_functional(h_tilde, out.esd.gamma_n, stats[s],
                                 opts.theta_method, opts.theta_mc);
        }
        out.config.centering = Centering::ThetaTilde;
        out.config.theta_tilde = out.theta_tilde;
    } else {
        // nonlinear statistics center by their empirical replicate mean
        out.config.centering = Centering::EmpiricalMean;
    }

    out.distribution = bootstrap_replicates(out.config);

    if (opts.compute_clt) {
        out.clt.resize(stats.size());
        for (std::size_t s = 0; s < stats.size(); ++s) {
            if (stats[s].kind == SpectralStatistic::Kind::LSS &&
                !stats[s].custom) {
                out.clt[s] = clt_estimates(stats[s], out.esd,
                                           out.spectrum.lambda_tilde,
                                           out.kappa_hat);
            }
        }
    }
    return out;
}

}  // namespace specboot
