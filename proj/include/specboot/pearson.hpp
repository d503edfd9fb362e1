#pragma once

// Pearson-system sampler: resolve the symmetric family member with first
// four moments (0, 1, 0, kappa) and draw i.i.d. matrices from it.

#include <cmath>
#include <random>
#include <string>

#include "specboot/common.hpp"
#include "specboot/rng.hpp"
#include "specboot/spectral_core.hpp"

namespace specboot {

struct PearsonSpec {
    enum class Family { Rademacher, SymmetricBetaII, Gaussian, StudentVII };

    double kappa = 3.0;
    Family family = Family::Gaussian;
    double alpha = 0.0;  // SymmetricBetaII: Beta(alpha, alpha) shape
    double nu = 0.0;     // StudentVII: t degrees of freedom
    double scale = 1.0;  // variate multiplier giving unit variance

    std::string family_name() const {
        switch (family) {
            case Family::Rademacher: return "rademacher";
            case Family::SymmetricBetaII: return "symmetric_beta_II";
            case Family::Gaussian: return "gaussian";
            case Family::StudentVII: return "student_VII";
        }
        return "?";
    }
};

/// Family selection as a deterministic function of kappa.
///   kappa = 1        -> Rademacher (two-point, mass 1/2 at ±1)
///   1 < kappa < 3    -> symmetric Type II: (2B−1)·√(2α+1), B ~ Beta(α, α),
///                       α = 3(κ−1) / (2(3−κ))
///   kappa = 3        -> Gaussian
///   kappa > 3        -> Type VII: t_ν · √((ν−2)/ν), ν = 4 + 6/(κ−3)
/// All four target moments hold analytically for these parameters.
inline PearsonSpec resolve_pearson(double kappa) {
    if (!(kappa >= 1.0))
        throw parameter_error("kappa must be >= 1 (E(Z^4) >= E(Z^2)^2 = 1); got " +
                              std::to_string(kappa));
    PearsonSpec spec;
    spec.kappa = kappa;
    if (kappa < 1.0 + 1e-6) {
        // alpha -> 0 makes Beta sampling unstable; the limit law is Rademacher
        spec.family = PearsonSpec::Family::Rademacher;
        spec.scale = 1.0;
    } else if (std::abs(kappa - 3.0) < 1e-9) {
        spec.family = PearsonSpec::Family::Gaussian;
        spec.scale = 1.0;
    } else if (kappa < 3.0) {
        spec.family = PearsonSpec::Family::SymmetricBetaII;
        spec.alpha = 3.0 * (kappa - 1.0) / (2.0 * (3.0 - kappa));
        spec.scale = std::sqrt(2.0 * spec.alpha + 1.0);
    } else {
        spec.family = PearsonSpec::Family::StudentVII;
        spec.nu = 4.0 + 6.0 / (kappa - 3.0);
        spec.scale = std::sqrt((spec.nu - 2.0) / spec.nu);
    }
    return spec;
}

/// Single draw from the resolved family. Beta and Student-t variates come
/// from the standard <random> transforms over the caller's stream.
class PearsonSampler {
public:
    explicit PearsonSampler(const PearsonSpec& spec) : spec_(spec) {
        if (spec.family == PearsonSpec::Family::SymmetricBetaII)
            gamma_ = std::gamma_distribution<double>(spec.alpha, 1.0);
        else if (spec.family == PearsonSpec::Family::StudentVII)
            chisq_ = std::gamma_distribution<double>(spec.nu / 2.0, 2.0);
    }

    template <class Rng>
    double operator()(Rng& rng) {
        switch (spec_.family) {
            case PearsonSpec::Family::Rademacher:
                return (rng() >> 63) ? 1.0 : -1.0;
            case PearsonSpec::Family::Gaussian:
                return normal_(rng);
            case PearsonSpec::Family::SymmetricBetaII: {
                const double g1 = gamma_(rng);
                const double g2 = gamma_(rng);
                const double b = g1 / (g1 + g2);
                return (2.0 * b - 1.0) * spec_.scale;
            }
            case PearsonSpec::Family::StudentVII: {
                const double z = normal_(rng);
                const double c = chisq_(rng);
                return spec_.scale * z / std::sqrt(c / spec_.nu);
            }
        }
        return 0.0;
    }

private:
    PearsonSpec spec_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::gamma_distribution<double> gamma_;
    std::gamma_distribution<double> chisq_;
};

/// n x p matrix of i.i.d. draws. Identical (stream seed, spec, n, p) gives
/// bit-identical output; entries are filled column-major.
inline DataMatrix sample_matrix(const PearsonSpec& spec, Eigen::Index n,
                                Eigen::Index p, Xoshiro256pp& stream) {
    if (n < 2 || p < 1)
        throw parameter_error("sample_matrix requires n >= 2 and p >= 1");
    Eigen::MatrixXd Z(n, p);
    PearsonSampler draw(spec);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) Z(i, j) = draw(stream);
    return DataMatrix(std::move(Z));
}

}  // namespace specboot
