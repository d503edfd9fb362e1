#pragma once

// Population-spectrum estimation by quantile matching through the MP
// forward map, plus the truncation rule producing the bootstrap spectrum.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include "specboot/common.hpp"
#include "specboot/mp_law.hpp"
#include "specboot/spectral_core.hpp"

namespace specboot {

struct SpectrumEstimate {
    Eigen::VectorXd lambda_tilde;     // length p, descending, truncated
    PopulationSpectrum raw_estimate;  // weighted atoms, pre-truncation
    double truncation_bound = 0.0;
    double loss_value = 0.0;
    bool converged = false;
};

struct SpectrumEstParams {
    // Atom-grid size. Kept moderate so the finite-difference gradient
    // (one MP solve per atom per iteration) stays affordable.
    int grid_atoms = 40;
    int max_iters = 100;
    double fd_step = 1e-4;
    double rel_improvement_tol = 1e-6;
    int patience = 10;
    int law_grid_points = 250;      // coarse grid used inside the loss
    double fixed_point_tol = 1e-10;
    bool warn_gamma_one = true;
};

namespace detail {

struct QuantileLoss {
    const Eigen::VectorXd& atoms;      // candidate atom grid, descending
    const Eigen::VectorXd& sample_desc;  // sample eigenvalues in the loss
    Eigen::VectorXd probs;             // CDF levels of each sample eigenvalue
    double gamma;
    MpGridSpec grid_spec;

    double operator()(const Eigen::VectorXd& w) const {
        PopulationSpectrum H(atoms, w);
        MpLaw law = solve_mp_law(H, gamma, grid_spec);
        Eigen::VectorXd q = mp_quantiles(law, probs);
        return (q - sample_desc).squaredNorm();
    }
};

}  // namespace detail

/// Estimate the population spectral distribution H from sample
/// eigenvalues: weights on a fixed log-spaced atom grid minimizing the
/// squared quantile mismatch of the MP forward map, by exponentiated
/// gradient descent on the simplex with finite-difference gradients.
inline PopulationSpectrum estimate_spectrum(
    const EmpiricalSpectralDistribution& esd,
    const SpectrumEstParams& params = {}, double* loss_out = nullptr,
    bool* converged_out = nullptr) {
    const Eigen::Index p = esd.p();
    if (p < 2) throw input_error("spectrum estimation requires p >= 2");
    const double gamma = esd.gamma_n;
    if (esd.eigenvalues[0] <= 0.0)
        throw input_error("degenerate spectral distribution: all eigenvalues 0");
    if (params.warn_gamma_one && std::abs(gamma - 1.0) < 1e-12)
        std::cerr << "warning: gamma = 1; quantile matching proceeds but the "
                     "MP map is ill-conditioned near the lower edge\n";

    const double lam1 = esd.eigenvalues[0];
    const double lam_min = esd.eigenvalues[p - 1];
    const double sqrt_g = std::sqrt(gamma);

    // gamma > 1: zero eigenvalues carry no information about H's positive part
    Eigen::Index p_used = p;
    while (p_used > 1 && esd.eigenvalues[p_used - 1] <= 0.0) --p_used;

    // candidate atoms bracketing the feasible population range
    const int G = params.grid_atoms;
    const double a_lo =
        std::max(lam_min, lam1 * 1e-4) / std::pow(1.0 + sqrt_g, 2);
    const double a_hi = lam1;
    Eigen::VectorXd atoms(G);
    for (int i = 0; i < G; ++i)
        atoms[i] = a_hi * std::pow(a_lo / a_hi, double(i) / double(G - 1));

    // CDF levels of the descending sample eigenvalues: the j-th largest
    // sits at level 1 − (j − ½)/p
    Eigen::VectorXd sample_desc = esd.eigenvalues.head(p_used);
    Eigen::VectorXd probs(p_used);
    for (Eigen::Index j = 0; j < p_used; ++j)
        probs[j] = 1.0 - (double(j) + 0.5) / double(p);

    MpGridSpec grid_spec;
    grid_spec.n_points = params.law_grid_points;
    grid_spec.fixed_point_tol = params.fixed_point_tol;
    detail::QuantileLoss loss{atoms, sample_desc, probs, gamma, grid_spec};

    // initialize from a kernel-smoothed histogram of sample eigenvalues
    // shrunk toward their grand mean by 1/(1 + gamma)
    Eigen::VectorXd w(G);
    {
        const double mean = sample_desc.mean();
        Eigen::VectorXd shrunk =
            (mean + (sample_desc.array() - mean) / (1.0 + gamma)).matrix();
        const double sd = std::sqrt(
            (shrunk.array() - shrunk.mean()).square().sum() /
            std::max<double>(1.0, double(p_used - 1)));
        const double h =
            std::max(1.06 * sd * std::pow(double(p_used), -0.2), 1e-3 * lam1);
        for (int i = 0; i < G; ++i) {
            double acc = 1e-8;
            for (Eigen::Index j = 0; j < p_used; ++j) {
                const double u = (atoms[i] - shrunk[j]) / h;
                acc += std::exp(-0.5 * u * u);
            }
            w[i] = acc;
        }
        w /= w.sum();
    }

    double current = loss(w);
    double eta = 0.5;
    bool converged = false;
    int no_improve = 0;
    Eigen::VectorXd grad(G), trial(G);
    for (int it = 0; it < params.max_iters; ++it) {
        // forward differences along renormalized coordinate perturbations
        const double h = params.fd_step;
        for (int i = 0; i < G; ++i) {
            trial = w;
            trial[i] += h;
            trial /= trial.sum();
            grad[i] = (loss(trial) - current) / h;
        }
        const double gmax = grad.cwiseAbs().maxCoeff();
        if (gmax == 0.0) {
            converged = true;
            break;
        }

        double best = current;
        Eigen::VectorXd best_w = w;
        double step = eta;
        for (int bt = 0; bt < 6; ++bt) {
            trial = (w.array() * (-step * grad.array() / gmax).exp()).matrix();
            trial /= trial.sum();
            const double val = loss(trial);
            if (val < best) {
                best = val;
                best_w = trial;
                break;
            }
            step *= 0.5;
        }
        const double improvement = (current - best) / std::max(current, 1e-300);
        w = best_w;
        current = best;
        eta = std::min(step * 2.0, 2.0);

        if (improvement < params.rel_improvement_tol) {
            if (++no_improve >= params.patience) {
                converged = true;
                break;
            }
        } else {
            no_improve = 0;
        }
    }
    // never aborts: exhausted budget returns the best iterate

    if (loss_out) *loss_out = current;
    if (converged_out) *converged_out = converged;
    return PopulationSpectrum(atoms, w);
}

/// Per-eigenvalue truncation λ̃_j = min(raw_j, multiplier · λ₁(Σ̂)).
inline SpectrumEstimate truncate_spectrum(const Eigen::VectorXd& raw_quantiles,
                                          double lambda1_sample,
                                          double multiplier = 2.0) {
    if (!(lambda1_sample > 0.0))
        throw parameter_error("truncation requires lambda1 > 0");
    if (!(multiplier > 1.0))
        throw parameter_error("truncation multiplier must exceed 1");
    SpectrumEstimate est;
    est.truncation_bound = multiplier * lambda1_sample;
    est.lambda_tilde = raw_quantiles.cwiseMin(est.truncation_bound);
    est.raw_estimate = PopulationSpectrum::uniform(raw_quantiles);
    return est;
}

/// Full pipeline: estimate H, read off per-eigenvalue estimates as
/// quantiles of the estimated distribution, then truncate.
inline SpectrumEstimate estimate_lambda_tilde(
    const EmpiricalSpectralDistribution& esd,
    const SpectrumEstParams& params = {}, double truncation_multiplier = 2.0) {
    double loss = 0.0;
    bool converged = false;
    PopulationSpectrum H = estimate_spectrum(esd, params, &loss, &converged);

    const Eigen::Index p = esd.p();
    Eigen::VectorXd raw(p);
    for (Eigen::Index j = 0; j < p; ++j)
        raw[j] = H.quantile(1.0 - (double(j) + 0.5) / double(p));

    SpectrumEstimate est =
        truncate_spectrum(raw, esd.eigenvalues[0], truncation_multiplier);
    est.raw_estimate = H;
    est.loss_value = loss;
    est.converged = converged;
    return est;
}

}  // namespace specboot
