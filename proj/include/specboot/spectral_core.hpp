#pragma once

// Dense symmetric linear algebra for sample covariance matrices, empirical
// spectral distributions, and the registry of spectral statistics (linear
// and nonlinear) evaluated on eigenvalue vectors.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "specboot/common.hpp"

namespace specboot {

/// n x p data matrix: n samples (rows) by p features (columns).
struct DataMatrix {
    Eigen::MatrixXd values;

    DataMatrix() = default;
    explicit DataMatrix(Eigen::MatrixXd v) : values(std::move(v)) {
        if (values.rows() < 2 || values.cols() < 1)
            throw input_error("DataMatrix requires n >= 2 and p >= 1");
        if (!values.allFinite())
            throw input_error("DataMatrix contains non-finite entries");
    }

    Eigen::Index n() const { return values.rows(); }
    Eigen::Index p() const { return values.cols(); }
    double gamma_n() const { return double(p()) / double(n()); }
};

/// Sample covariance XᵀX / n (mean-zero model, no centering).
struct SampleCovariance {
    Eigen::MatrixXd matrix;
    Eigen::Index source_n = 0;
};

inline SampleCovariance sample_covariance(const DataMatrix& X) {
    const double n = double(X.n());
    Eigen::MatrixXd S(X.p(), X.p());
    S.setZero();
    S.selfadjointView<Eigen::Lower>().rankUpdate(X.values.transpose(), 1.0 / n);
    S.triangularView<Eigen::StrictlyUpper>() = S.transpose();
    // symmetrize exactly against accumulated roundoff
    S = 0.5 * (S + S.transpose()).eval();
    return {std::move(S), X.n()};
}

/// Sample eigenvalues sorted descending, plus the source dimensions
/// defining the step CDF Ĥ_n and the aspect ratio γ_n = p/n.
struct EmpiricalSpectralDistribution {
    Eigen::VectorXd eigenvalues;  // descending, nonnegative
    Eigen::Index n_source = 0;
    double gamma_n = 0.0;

    Eigen::Index p() const { return eigenvalues.size(); }

    /// Step CDF Ĥ_n(x) = p⁻¹ #{ j : λ_j <= x }.
    double cdf(double x) const {
        Eigen::Index count = 0;
        for (Eigen::Index j = 0; j < eigenvalues.size(); ++j)
            if (eigenvalues[j] <= x) ++count;
        return double(count) / double(eigenvalues.size());
    }
};

namespace detail {

// Clamp tiny negative eigenvalues (roundoff from a PSD matrix) to zero;
// anything more negative than clamp_tol = 1e-10 * lambda1 signals an
// upstream bug and raises.
inline void clamp_eigenvalues(Eigen::VectorXd& descending) {
    const double lam1 = descending.size() ? descending[0] : 0.0;
    const double clamp_tol = 1e-10 * std::max(lam1, 0.0);
    for (Eigen::Index j = 0; j < descending.size(); ++j) {
        if (descending[j] < 0.0) {
            if (descending[j] < -clamp_tol - 1e-300)
                throw numerical_error(
                    "eigenvalue " + std::to_string(descending[j]) +
                    " below clamp tolerance " + std::to_string(-clamp_tol));
            descending[j] = 0.0;
        }
    }
}

}  // namespace detail

/// Eigenvalues only (descending), the bootstrap hot path.
inline Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S,
                                                          Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw numerical_error("symmetric eigensolver failed to converge (p=" +
                              std::to_string(S.rows()) + ", |S|_max=" +
                              std::to_string(S.cwiseAbs().maxCoeff()) + ")");
    Eigen::VectorXd vals = solver.eigenvalues().reverse();
    detail::clamp_eigenvalues(vals);
    return vals;
}

/// Full decomposition S = U diag(λ) Uᵀ with λ descending.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> sym_eigendecompose(
    const SampleCovariance& S) {
    const auto& M = S.matrix;
    const double scale = std::max(M.cwiseAbs().maxCoeff(), 1.0);
    if (((M - M.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * scale)
        throw input_error("matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M);
    if (solver.info() != Eigen::Success)
        throw numerical_error("symmetric eigensolver failed to converge (p=" +
                              std::to_string(M.rows()) + ")");
    Eigen::VectorXd vals = solver.eigenvalues().reverse();
    Eigen::MatrixXd vecs = solver.eigenvectors().rowwise().reverse();
    detail::clamp_eigenvalues(vals);
    return {std::move(vals), std::move(vecs)};
}

inline EmpiricalSpectralDistribution esd_from_covariance(
    const SampleCovariance& S) {
    EmpiricalSpectralDistribution esd;
    esd.eigenvalues = sym_eigenvalues(S.matrix);
    esd.n_source = S.source_n;
    esd.gamma_n = double(S.matrix.rows()) / double(S.source_n);
    return esd;
}

inline EmpiricalSpectralDistribution esd_from_data(const DataMatrix& X) {
    return esd_from_covariance(sample_covariance(X));
}

/// Named smooth functions for linear spectral statistics.
enum class LssFunction { X, X2, LogX, LrtF };  // x, x², log x, x − log x − 1

inline double evaluate_lss_function(LssFunction f, double x) {
    switch (f) {
        case LssFunction::X: return x;
        case LssFunction::X2: return x * x;
        case LssFunction::LogX: return std::log(x);
        case LssFunction::LrtF: return x - std::log(x) - 1.0;
    }
    return 0.0;
}

inline bool lss_function_needs_positive(LssFunction f) {
    return f == LssFunction::LogX || f == LssFunction::LrtF;
}

inline std::string lss_function_name(LssFunction f) {
    switch (f) {
        case LssFunction::X: return "x";
        case LssFunction::X2: return "x^2";
        case LssFunction::LogX: return "log";
        case LssFunction::LrtF: return "lrt_f";
    }
    return "?";
}

/// A spectral statistic: linear (LSS over a named or custom f) or one of
/// the nonlinear kinds used in the experiments and sphericity tests.
struct SpectralStatistic {
    enum class Kind { LSS, MaxEig, TopKSum, SpectralGap, John, ConditionNumber, LRT };

    Kind kind = Kind::LSS;
    LssFunction f = LssFunction::X;
    int k = 10;  // TopKSum only
    // Optional caller-supplied evaluable for LSS; the named registry is
    // what the CLI exposes.
    std::function<double(double)> custom;
    bool custom_needs_positive = false;

    static SpectralStatistic lss(LssFunction f) {
        SpectralStatistic s;
        s.kind = Kind::LSS;
        s.f = f;
        return s;
    }
    static SpectralStatistic lss_custom(std::function<double(double)> fn,
                                        bool needs_positive = false) {
        SpectralStatistic s;
        s.kind = Kind::LSS;
        s.custom = std::move(fn);
        s.custom_needs_positive = needs_positive;
        return s;
    }
    static SpectralStatistic max_eig() { return make(Kind::MaxEig); }
    static SpectralStatistic top_k_sum(int k) {
        SpectralStatistic s = make(Kind::TopKSum);
        s.k = k;
        return s;
    }
    static SpectralStatistic spectral_gap() { return make(Kind::SpectralGap); }
    static SpectralStatistic john() { return make(Kind::John); }
    static SpectralStatistic condition_number() {
        return make(Kind::ConditionNumber);
    }
    static SpectralStatistic lrt() { return make(Kind::LRT); }

    bool is_lss() const { return kind == Kind::LSS; }

    bool needs_positive_spectrum() const {
        switch (kind) {
            case Kind::LSS:
                return custom ? custom_needs_positive
                              : lss_function_needs_positive(f);
            case Kind::ConditionNumber:
            case Kind::LRT:
                return true;
            default:
                return false;
        }
    }

    std::string name() const {
        switch (kind) {
            case Kind::LSS:
                return custom ? "lss:custom" : "lss:" + lss_function_name(f);
            case Kind::MaxEig: return "max_eig";
            case Kind::TopKSum: return "top" + std::to_string(k) + "_sum";
            case Kind::SpectralGap: return "spectral_gap";
            case Kind::John: return "john";
            case Kind::ConditionNumber: return "condition_number";
            case Kind::LRT: return "lrt";
        }
        return "?";
    }

    /// Parse a statistic name as used by the CLI: x, x^2, log,
    /// max_eig, top10_sum, spectral_gap, john, condition_number, lrt.
    static std::optional<SpectralStatistic> parse(const std::string& raw) {
        const std::string name =
            raw.rfind("lss:", 0) == 0 ? raw.substr(4) : raw;
        if (name == "x") return lss(LssFunction::X);
        if (name == "x^2" || name == "x2") return lss(LssFunction::X2);
        if (name == "log" || name == "log_x") return lss(LssFunction::LogX);
        if (name == "lrt_f") return lss(LssFunction::LrtF);
        if (name == "max_eig") return max_eig();
        if (name == "spectral_gap") return spectral_gap();
        if (name == "john") return john();
        if (name == "condition_number" || name == "cn") return condition_number();
        if (name == "lrt") return lrt();
        if (name.rfind("top", 0) == 0) {
            auto end = name.find("_sum");
            if (end != std::string::npos && end > 3) {
                try {
                    int k = std::stoi(name.substr(3, end - 3));
                    if (k >= 1) return top_k_sum(k);
                } catch (...) {
                }
            }
        }
        return std::nullopt;
    }

private:
    static SpectralStatistic make(Kind kind) {
        SpectralStatistic s;
        s.kind = kind;
        return s;
    }
};

/// Evaluate a statistic on a descending eigenvalue vector.
inline double evaluate_statistic(const Eigen::VectorXd& lambda,
                                 const SpectralStatistic& stat) {
    const Eigen::Index p = lambda.size();
    if (p < 1) throw parameter_error("empty eigenvalue vector");
    if (stat.needs_positive_spectrum() && lambda[p - 1] <= 0.0)
        throw domain_error("statistic " + stat.name() +
                           " requires a strictly positive spectrum "
                           "(smallest eigenvalue is " +
                           std::to_string(lambda[p - 1]) + ")");
    switch (stat.kind) {
        case SpectralStatistic::Kind::LSS: {
            double acc = 0.0;
            if (stat.custom) {
                for (Eigen::Index j = 0; j < p; ++j) acc += stat.custom(lambda[j]);
            } else {
                for (Eigen::Index j = 0; j < p; ++j)
                    acc += evaluate_lss_function(stat.f, lambda[j]);
            }
            return acc / double(p);
        }
        case SpectralStatistic::Kind::MaxEig:
            return lambda[0];
        case SpectralStatistic::Kind::TopKSum: {
            if (stat.k > p)
                throw parameter_error("top-k sum with k=" + std::to_string(stat.k) +
                                      " exceeds p=" + std::to_string(p));
            return lambda.head(stat.k).sum();
        }
        case SpectralStatistic::Kind::SpectralGap: {
            if (p < 2) throw parameter_error("spectral gap requires p >= 2");
            return lambda[0] - lambda[1];
        }
        case SpectralStatistic::Kind::John: {
            const double tr = lambda.sum();
            if (tr <= 0.0) throw domain_error("john statistic requires tr > 0");
            double acc = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                const double d = double(p) * lambda[j] / tr - 1.0;
                acc += d * d;
            }
            return acc;
        }
        case SpectralStatistic::Kind::ConditionNumber:
            return lambda[0] / lambda[p - 1];
        case SpectralStatistic::Kind::LRT: {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < p; ++j)
                acc += lambda[j] - std::log(lambda[j]) - 1.0;
            return acc;
        }
    }
    throw parameter_error("unknown statistic kind");
}

inline double evaluate_statistic(const EmpiricalSpectralDistribution& esd,
                                 const SpectralStatistic& stat) {
    return evaluate_statistic(esd.eigenvalues, stat);
}

}  // namespace specboot
