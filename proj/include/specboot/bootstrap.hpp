#pragma once

// The spectral bootstrap engine: replicate generation from estimated
// spectrum and kurtosis, joint statistic evaluation, summaries, the bias
// estimate, and null-calibrated critical values / p-values.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <thread>
#include <vector>

#include "specboot/common.hpp"
#include "specboot/moments.hpp"
#include "specboot/pearson.hpp"
#include "specboot/rng.hpp"
#include "specboot/spectral_core.hpp"

namespace specboot {

enum class Centering { None, EmpiricalMean, ThetaTilde };

struct BootstrapConfig {
    int B = 500;
    Eigen::Index n = 0;
    Eigen::VectorXd lambda_tilde;  // estimated population spectrum (descending)
    double kappa = 3.0;
    std::vector<SpectralStatistic> statistics;
    std::uint64_t master_seed = 0;
    Centering centering = Centering::None;
    Eigen::VectorXd theta_tilde;  // per-statistic, Centering::ThetaTilde only
    int workers = 1;

    void validate() const {
        if (B < 1) throw parameter_error("bootstrap requires B >= 1");
        if (n < 2) throw parameter_error("bootstrap requires n >= 2");
        if (lambda_tilde.size() < 1)
            throw parameter_error("bootstrap requires a nonempty spectrum");
        if (statistics.empty())
            throw parameter_error("bootstrap requires at least one statistic");
        if (centering == Centering::ThetaTilde &&
            theta_tilde.size() != Eigen::Index(statistics.size()))
            throw parameter_error("theta_tilde size must match statistics");
    }
};

struct BootstrapDistribution {
    Eigen::MatrixXd replicates;  // B x (number of statistics)
    std::vector<std::uint64_t> seeds;  // per-replicate stream keys
    std::uint64_t master_seed = 0;
    Eigen::Index p = 0;

    Eigen::VectorXd column(std::size_t stat_index) const {
        return replicates.col(Eigen::Index(stat_index));
    }
};

namespace detail {

inline void run_replicate_range(const BootstrapConfig& cfg,
                                const PearsonSpec& pearson,
                                const Eigen::VectorXd& sqrt_lambda, int b_begin,
                                int b_end, BootstrapDistribution& out) {
    const Eigen::Index p = cfg.lambda_tilde.size();
    const Eigen::Index n = cfg.n;
    Eigen::MatrixXd X(n, p), S(p, p);
    PearsonSampler draw(pearson);
    for (int b = b_begin; b < b_end; ++b) {
        // eigensolver failure gets a fresh derived seed, at most 3 retries
        for (std::uint64_t attempt = 0;; ++attempt) {
            try {
                Xoshiro256pp stream =
                    derive_stream(cfg.master_seed, std::uint64_t(b), attempt);
                PearsonSampler local = draw;
                for (Eigen::Index j = 0; j < p; ++j) {
                    const double s = sqrt_lambda[j];
                    for (Eigen::Index i = 0; i < n; ++i)
                        X(i, j) = s * local(stream);
                }
                S.setZero();
                S.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(),
                                                             1.0 / double(n));
                S.triangularView<Eigen::StrictlyUpper>() = S.transpose();
                Eigen::VectorXd evals = sym_eigenvalues(S);
                for (std::size_t s_idx = 0; s_idx < cfg.statistics.size(); ++s_idx)
                    out.replicates(b, Eigen::Index(s_idx)) =
                        evaluate_statistic(evals, cfg.statistics[s_idx]);
                out.seeds[std::size_t(b)] =
                    derive_stream_key(cfg.master_seed, std::uint64_t(b), attempt);
                break;
            } catch (const numerical_error&) {
                if (attempt >= 3) throw;
            }
        }
    }
}

}  // namespace detail

/// Run the bootstrap: per replicate, draw Z* from Pearson(0,1,0,κ̂), form
/// Σ̂* = Λ̃^{1/2} Z*ᵀZ* Λ̃^{1/2} / n via column scaling of Z*, eigendecompose
/// once, and evaluate every requested statistic on the shared eigenvalues.
inline BootstrapDistribution bootstrap_replicates(const BootstrapConfig& cfg) {
    cfg.validate();
    const Eigen::Index p = cfg.lambda_tilde.size();
    const double gamma_n = double(p) / double(cfg.n);
    for (const auto& stat : cfg.statistics) {
        if (stat.needs_positive_spectrum() && gamma_n >= 1.0)
            throw domain_error("statistic " + stat.name() +
                               " needs gamma_n < 1 (singular covariance)");
        if (stat.needs_positive_spectrum() &&
            cfg.lambda_tilde[p - 1] <= 0.0)
            std::cerr << "warning: " << stat.name()
                      << " with estimated spectrum touching zero\n";
    }

    BootstrapDistribution out;
    out.master_seed = cfg.master_seed;
    out.p = p;
    out.replicates.resize(cfg.B, Eigen::Index(cfg.statistics.size()));
    out.seeds.resize(std::size_t(cfg.B));

    const PearsonSpec pearson = resolve_pearson(cfg.kappa);
    const Eigen::VectorXd sqrt_lambda = cfg.lambda_tilde.cwiseSqrt();

    const int workers = std::max(cfg.workers, 1);
    if (workers == 1 || cfg.B < 2 * workers) {
        detail::run_replicate_range(cfg, pearson, sqrt_lambda, 0, cfg.B, out);
    } else {
        // replicates partitioned by index; streams are keyed per replicate
        // so assembly order cannot affect the result
        std::vector<std::thread> pool;
        const int chunk = (cfg.B + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const int lo = w * chunk;
            const int hi = std::min(cfg.B, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                detail::run_replicate_range(cfg, pearson, sqrt_lambda, lo, hi, out);
            });
        }
        for (auto& t : pool) t.join();
    }
    return out;
}

struct StatisticSummary {
    std::string statistic;
    double mean = 0.0;
    double sd = 0.0;
    std::vector<std::pair<double, double>> quantiles;  // (prob, value)
};

/// Empirical quantile with linear interpolation at rank q(B−1)+1.
inline double empirical_quantile(Eigen::VectorXd values, double prob) {
    if (values.size() < 1) throw parameter_error("quantile of empty sample");
    if (!(prob > 0.0 && prob < 1.0))
        throw parameter_error("quantile prob must lie in (0,1)");
    std::sort(values.data(), values.data() + values.size());
    const double rank = prob * double(values.size() - 1);
    const Eigen::Index lo = Eigen::Index(std::floor(rank));
    const Eigen::Index hi = std::min(lo + 1, values.size() - 1);
    const double w = rank - double(lo);
    return (1.0 - w) * values[lo] + w * values[hi];
}

/// Per-statistic summaries. ThetaTilde centering subtracts ϑ̃ and, with
/// scale_by_p, multiplies by p to match the p{T* − ϑ̃} displays.
inline std::vector<StatisticSummary> summarize(
    const BootstrapDistribution& dist, const BootstrapConfig& cfg,
    const std::vector<double>& extra_probs = {}, bool scale_by_p = false) {
    const Eigen::Index B = dist.replicates.rows();
    if (B < 2) throw parameter_error("summaries require B >= 2 for sd");
    std::vector<double> probs{0.95, 0.99};
    probs.insert(probs.end(), extra_probs.begin(), extra_probs.end());

    std::vector<StatisticSummary> out;
    for (std::size_t s = 0; s < cfg.statistics.size(); ++s) {
        Eigen::VectorXd col = dist.column(s);
        switch (cfg.centering) {
            case Centering::None:
                break;
            case Centering::EmpiricalMean:
                col.array() -= col.mean();
                break;
            case Centering::ThetaTilde:
                col.array() -= cfg.theta_tilde[Eigen::Index(s)];
                break;
        }
        if (scale_by_p) col *= double(dist.p);

        StatisticSummary summary;
        summary.statistic = cfg.statistics[s].name();
        summary.mean = col.mean();
        summary.sd = std::sqrt((col.array() - summary.mean).square().sum() /
                               double(B - 1));
        for (double prob : probs)
            summary.quantiles.emplace_back(prob, empirical_quantile(col, prob));
        out.push_back(std::move(summary));
    }
    return out;
}

/// Bootstrap bias estimate: replicate mean minus ϑ̃, per LSS statistic.
inline Eigen::VectorXd bias_estimate(const BootstrapDistribution& dist,
                                     const BootstrapConfig& cfg,
                                     const Eigen::VectorXd& theta_tilde) {
    if (theta_tilde.size() != Eigen::Index(cfg.statistics.size()))
        throw parameter_error("theta_tilde size must match statistics");
    Eigen::VectorXd out(theta_tilde.size());
    for (std::size_t s = 0; s < cfg.statistics.size(); ++s) {
        if (!cfg.statistics[s].is_lss())
            throw parameter_error("bias estimate is defined for LSS only (got " +
                                  cfg.statistics[s].name() + ")");
        out[Eigen::Index(s)] = dist.column(s).mean() - theta_tilde[Eigen::Index(s)];
    }
    return out;
}

/// Null-calibrated critical value (sphericity): bootstrap with the
/// identity spectrum and the estimated kurtosis, 1−α empirical quantile.
inline double null_critical_value(Eigen::Index n, Eigen::Index p, double kappa,
                                  const SpectralStatistic& stat, int B,
                                  double alpha, std::uint64_t seed,
                                  int workers = 1) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw parameter_error("alpha must lie in (0,1)");
    if (double(B) * alpha < 5.0)
        std::cerr << "warning: B*alpha = " << double(B) * alpha
                  << " < 5; the critical value estimate will be noisy\n";
    BootstrapConfig cfg;
    cfg.B = B;
    cfg.n = n;
    cfg.lambda_tilde = Eigen::VectorXd::Ones(p);
    cfg.kappa = kappa;
    cfg.statistics = {stat};
    cfg.master_seed = seed;
    cfg.workers = workers;
    BootstrapDistribution dist = bootstrap_replicates(cfg);
    return empirical_quantile(dist.column(0), 1.0 - alpha);
}

enum class Tail { Upper };

/// Finite-sample valid p-value (1 + #{T* >= observed}) / (B + 1).
inline double p_value(double observed, const Eigen::VectorXd& null_replicates,
                      Tail tail = Tail::Upper) {
    (void)tail;
    const Eigen::Index B = null_replicates.size();
    if (B < 1) throw parameter_error("p-value requires nonempty replicates");
    Eigen::Index count = 0;
    for (Eigen::Index b = 0; b < B; ++b)
        if (null_replicates[b] >= observed) ++count;
    return double(1 + count) / double(B + 1);
}

}  // namespace specboot
