#pragma once

// Covariance-model fixtures used by the simulation harness: spiked and
// spread spectra with Haar eigenvectors, rank-k reflection eigenvectors,
// identity, and population matrices built from data files.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "specboot/common.hpp"
#include "specboot/csv.hpp"
#include "specboot/pearson.hpp"
#include "specboot/rng.hpp"
#include "specboot/spectral_core.hpp"

namespace specboot {

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// Q columns sign-corrected by the R diagonal.
inline Eigen::MatrixXd haar_orthogonal(Eigen::Index p, Xoshiro256pp& stream) {
    if (p < 1) throw parameter_error("haar_orthogonal requires p >= 1");
    std::normal_distribution<double> normal;
    Eigen::MatrixXd G(p, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < p; ++i) G(i, j) = normal(stream);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ();
    Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < p; ++j)
        if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
    return Q;
}

struct CovarianceModel {
    enum class Kind { Identity, Spiked, Spread, RankKReflection, FromData };

    Kind kind = Kind::Identity;
    Eigen::Index p = 0;

    // Spiked
    int spike_count = 10;
    double spike_value = 3.0;
    bool haar = true;

    // RankKReflection
    int reflection_rank = 1;
    Eigen::VectorXd base_eigenvalues;

    // FromData
    std::string data_path;

    static CovarianceModel identity(Eigen::Index p) {
        CovarianceModel m;
        m.kind = Kind::Identity;
        m.p = p;
        return m;
    }
    static CovarianceModel spiked(Eigen::Index p, int k = 10,
                                  double value = 3.0, bool haar = true) {
        if (!(value > 1.0)) throw parameter_error("spike value must exceed 1");
        if (k >= p) throw parameter_error("spike count must be below p");
        CovarianceModel m;
        m.kind = Kind::Spiked;
        m.p = p;
        m.spike_count = k;
        m.spike_value = value;
        m.haar = haar;
        return m;
    }
    static CovarianceModel spread(Eigen::Index p) {
        CovarianceModel m;
        m.kind = Kind::Spread;
        m.p = p;
        return m;
    }
    static CovarianceModel rank_k_reflection(Eigen::Index p, int rank,
                                             Eigen::VectorXd base) {
        if (rank >= p) throw parameter_error("reflection rank must be below p");
        CovarianceModel m;
        m.kind = Kind::RankKReflection;
        m.p = p;
        m.reflection_rank = rank;
        m.base_eigenvalues = std::move(base);
        return m;
    }
    static CovarianceModel from_data(std::string path, Eigen::Index p_target) {
        CovarianceModel m;
        m.kind = Kind::FromData;
        m.p = p_target;
        m.data_path = std::move(path);
        return m;
    }

    std::string name() const {
        switch (kind) {
            case Kind::Identity: return "identity";
            case Kind::Spiked: return "spiked";
            case Kind::Spread: return "spread";
            case Kind::RankKReflection: return "rank_k_reflection";
            case Kind::FromData: return "from_data";
        }
        return "?";
    }
};

struct CovarianceFixture {
    Eigen::MatrixXd sigma;
    Eigen::MatrixXd sqrt_sigma;
    Eigen::VectorXd eigenvalues;  // descending
};

namespace detail {

inline CovarianceFixture from_eigensystem(const Eigen::MatrixXd& U,
                                          const Eigen::VectorXd& lambda) {
    CovarianceFixture out;
    out.eigenvalues = lambda;
    out.sigma = U * lambda.asDiagonal() * U.transpose();
    out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
    out.sqrt_sigma = U * lambda.cwiseSqrt().asDiagonal() * U.transpose();
    return out;
}

}  // namespace detail

inline CovarianceFixture make_covariance(const CovarianceModel& model,
                                         Xoshiro256pp& stream) {
    const Eigen::Index p = model.p;
    switch (model.kind) {
        case CovarianceModel::Kind::Identity: {
            CovarianceFixture out;
            out.sigma = Eigen::MatrixXd::Identity(p, p);
            out.sqrt_sigma = out.sigma;
            out.eigenvalues = Eigen::VectorXd::Ones(p);
            return out;
        }
        case CovarianceModel::Kind::Spiked: {
            Eigen::VectorXd lambda = Eigen::VectorXd::Ones(p);
            lambda.head(model.spike_count).setConstant(model.spike_value);
            if (!model.haar)
                return detail::from_eigensystem(Eigen::MatrixXd::Identity(p, p),
                                                lambda);
            return detail::from_eigensystem(haar_orthogonal(p, stream), lambda);
        }
        case CovarianceModel::Kind::Spread: {
            Eigen::VectorXd lambda(p);
            for (Eigen::Index j = 0; j < p; ++j)
                lambda[j] = 1.0 / std::sqrt(double(j + 1));
            return detail::from_eigensystem(haar_orthogonal(p, stream), lambda);
        }
        case CovarianceModel::Kind::RankKReflection: {
            if (model.base_eigenvalues.size() != p)
                throw parameter_error("base eigenvalues must have length p");
            // U = I − 2Π with Π a random rank-k orthogonal projection
            Eigen::MatrixXd frame =
                haar_orthogonal(p, stream).leftCols(model.reflection_rank);
            Eigen::MatrixXd U = Eigen::MatrixXd::Identity(p, p) -
                                2.0 * frame * frame.transpose();
            Eigen::VectorXd lambda = model.base_eigenvalues;
            std::sort(lambda.data(), lambda.data() + lambda.size(),
                      std::greater<double>());
            return detail::from_eigensystem(U, lambda);
        }
        case CovarianceModel::Kind::FromData: {
            DataMatrix X = load_and_standardize(model.data_path, true);
            // center rows, standardize columns, project onto the first
            // p principal components, then take the projected covariance
            Eigen::MatrixXd V = X.values;
            V.colwise() -= V.rowwise().mean();
            for (Eigen::Index j = 0; j < V.cols(); ++j) {
                const double mu = V.col(j).mean();
                const double sd = std::sqrt(
                    (V.col(j).array() - mu).square().sum() / double(V.rows() - 1));
                if (sd <= 0.0)
                    throw input_error("constant column " + std::to_string(j) +
                                      " after row centering");
                V.col(j) = (V.col(j).array() - mu) / sd;
            }
            if (p > V.cols())
                throw input_error("p_target exceeds available feature count");
            SampleCovariance cov{
                Eigen::MatrixXd((V.transpose() * V) / double(V.rows())),
                V.rows()};
            auto [evals, evecs] = sym_eigendecompose(cov);
            Eigen::MatrixXd projected = V * evecs.leftCols(p);
            Eigen::MatrixXd sigma =
                projected.transpose() * projected / double(V.rows());
            sigma = 0.5 * (sigma + sigma.transpose()).eval();
            auto [lam, U] = sym_eigendecompose(
                SampleCovariance{sigma, V.rows()});
            return detail::from_eigensystem(U, lam);
        }
    }
    throw parameter_error("unknown covariance model");
}

/// Draw X = Z Σ^{1/2} with i.i.d. entries from the given Pearson member.
inline DataMatrix sample_data(const CovarianceFixture& fixture,
                              const PearsonSpec& entries, Eigen::Index n,
                              Xoshiro256pp& stream) {
    const Eigen::Index p = fixture.sigma.rows();
    DataMatrix Z = sample_matrix(entries, n, p, stream);
    return DataMatrix(Z.values * fixture.sqrt_sigma);
}

}  // namespace specboot
