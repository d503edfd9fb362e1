#pragma once

// High-dimensional kurtosis estimator and its three ratio-consistent
// component estimators.

#include <Eigen/Dense>

#include "specboot/common.hpp"
#include "specboot/spectral_core.hpp"

namespace specboot {

struct MomentComponents {
    double tau_hat = 0.0;    // estimates ‖Σ‖²_F
    double nu_hat = 0.0;     // estimates var ‖X₁.‖²
    double omega_hat = 0.0;  // estimates Σⱼ σⱼ⁴
};

/// tau_hat = tr(Σ̂²) − tr(Σ̂)²/n
/// nu_hat  = (n−1)⁻¹ Σᵢ (‖Xᵢ.‖² − mean row norm²)²
/// omega_hat = Σⱼ (n⁻¹ Σᵢ Xᵢⱼ²)²
/// Row norms are taken on raw X with no centering; the model is mean-zero
/// and silent centering would change nu_hat's target.
inline MomentComponents estimate_moment_components(const DataMatrix& X) {
    const Eigen::Index n = X.n();
    if (n < 2) throw parameter_error("moment components require n >= 2");

    SampleCovariance S = sample_covariance(X);
    MomentComponents out;
    out.tau_hat =
        S.matrix.squaredNorm() - S.matrix.trace() * S.matrix.trace() / double(n);

    Eigen::VectorXd row_sq = X.values.rowwise().squaredNorm();
    const double mean_sq = row_sq.mean();
    out.nu_hat = (row_sq.array() - mean_sq).square().sum() / double(n - 1);

    Eigen::VectorXd col_mean_sq = X.values.array().square().colwise().mean();
    out.omega_hat = col_mean_sq.squaredNorm();
    return out;
}

/// kappa_hat = max(3 + (nu_hat − 2 tau_hat)/omega_hat, 1); returns 3 when
/// omega_hat = 0 (only the all-zero matrix, where the ratio is undefined).
inline double kappa_hat(const DataMatrix& X) {
    MomentComponents c = estimate_moment_components(X);
    if (c.omega_hat == 0.0) return 3.0;
    return std::max(3.0 + (c.nu_hat - 2.0 * c.tau_hat) / c.omega_hat, 1.0);
}

}  // namespace specboot
