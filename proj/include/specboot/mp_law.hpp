#pragma once

// Marčenko–Pastur forward map F(H, γ): companion Stieltjes-transform
// fixed-point solver, spectral density by inversion, support detection,
// quantiles, moments, and the centering functional ϑ.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "specboot/common.hpp"
#include "specboot/pearson.hpp"
#include "specboot/rng.hpp"
#include "specboot/spectral_core.hpp"

namespace specboot {

/// Discrete population spectral distribution: atoms sorted descending
/// with nonnegative weights summing to 1 (uniform 1/p when representing a
/// population eigenvalue vector).
struct PopulationSpectrum {
    Eigen::VectorXd atoms;
    Eigen::VectorXd weights;

    PopulationSpectrum() = default;
    PopulationSpectrum(Eigen::VectorXd a, Eigen::VectorXd w)
        : atoms(std::move(a)), weights(std::move(w)) {
        validate();
    }

    static PopulationSpectrum uniform(Eigen::VectorXd a) {
        std::sort(a.data(), a.data() + a.size(), std::greater<double>());
        Eigen::VectorXd w =
            Eigen::VectorXd::Constant(a.size(), 1.0 / double(a.size()));
        return PopulationSpectrum(std::move(a), std::move(w));
    }

    static PopulationSpectrum point_mass(double a) {
        return uniform(Eigen::VectorXd::Constant(1, a));
    }

    void validate() const {
        if (atoms.size() == 0 || atoms.size() != weights.size())
            throw input_error("spectrum atoms/weights size mismatch");
        if (!atoms.allFinite() || atoms.minCoeff() < 0.0)
            throw input_error("spectrum atoms must be finite and >= 0");
        if (weights.minCoeff() < -1e-15)
            throw input_error("spectrum weights must be nonnegative");
        if (std::abs(weights.sum() - 1.0) > 1e-12)
            throw input_error("spectrum weights must sum to 1");
        for (Eigen::Index i = 1; i < atoms.size(); ++i)
            if (atoms[i] > atoms[i - 1] + 1e-12)
                throw input_error("spectrum atoms must be sorted descending");
    }

    double mean() const { return atoms.dot(weights); }
    double second_moment() const {
        return atoms.array().square().matrix().dot(weights);
    }
    double weight_at_zero() const {
        double w0 = 0.0;
        for (Eigen::Index i = 0; i < atoms.size(); ++i)
            if (atoms[i] <= 0.0) w0 += weights[i];
        return w0;
    }
    double min_positive_atom() const {
        double m = 0.0;
        for (Eigen::Index i = 0; i < atoms.size(); ++i)
            if (atoms[i] > 0.0) m = atoms[i];  // descending order: last positive
        return m;
    }

    /// Quantile of the discrete distribution (left-continuous inverse).
    double quantile(double prob) const {
        if (!(prob > 0.0 && prob < 1.0))
            throw parameter_error("quantile prob must lie in (0,1)");
        // accumulate from the smallest atom upward
        double acc = 0.0;
        for (Eigen::Index i = atoms.size() - 1; i >= 0; --i) {
            acc += weights[i];
            if (acc >= prob - 1e-15) return atoms[i];
        }
        return atoms[0];
    }
};

struct SupportInterval {
    double lo = 0.0, hi = 0.0;
};

/// Grid/solver controls for solve_mp_law.
struct MpGridSpec {
    int n_points = 2000;
    double density_floor = 1e-7;
    int max_fixed_point_iters = 2000;
    double fixed_point_tol = 1e-12;
};

/// Companion Stieltjes transform m̲(z) of F(H, γ): the unique root of
///   m̲ = 1 / ( −z + γ ∫ t / (1 + t m̲) dH(t) )
/// with Im m̲ · Im z > 0. Plain iteration with damping fallback when the
/// residual stalls (standard behavior near support edges).
inline std::complex<double> stieltjes_companion(
    const PopulationSpectrum& spectrum, double gamma, std::complex<double> z,
    std::complex<double> initial_guess = {0.0, 0.0},
    int max_iters = 2000, double tol = 1e-12) {
    if (z.imag() == 0.0)
        throw parameter_error("stieltjes_companion requires Im z != 0");
    spectrum.validate();
    if (!(gamma > 0.0)) throw parameter_error("gamma must be positive");

    const Eigen::Index q = spectrum.atoms.size();
    auto step = [&](std::complex<double> m) {
        std::complex<double> integral = 0.0;
        for (Eigen::Index i = 0; i < q; ++i) {
            const double t = spectrum.atoms[i];
            integral += spectrum.weights[i] * t / (1.0 + t * m);
        }
        return 1.0 / (-z + gamma * integral);
    };
    // derivative of the iteration map, for the Newton fallback
    auto step_prime = [&](std::complex<double> m, std::complex<double> s) {
        std::complex<double> d_integral = 0.0;
        for (Eigen::Index i = 0; i < q; ++i) {
            const double t = spectrum.atoms[i];
            const std::complex<double> denom = 1.0 + t * m;
            d_integral -= spectrum.weights[i] * t * t / (denom * denom);
        }
        return -gamma * d_integral * s * s;
    };

    // Iterate at a fixed point zc, returning the converged root or nothing.
    auto solve_at = [&](std::complex<double> zc, std::complex<double> m0,
                        int iters) -> std::optional<std::complex<double>> {
        auto step_c = [&](std::complex<double> m) {
            std::complex<double> integral = 0.0;
            for (Eigen::Index i = 0; i < q; ++i) {
                const double t = spectrum.atoms[i];
                integral += spectrum.weights[i] * t / (1.0 + t * m);
            }
            return 1.0 / (-zc + gamma * integral);
        };
        std::complex<double> m = m0;
        const int burn_in = std::min(30, iters / 4);
        for (int it = 0; it < iters; ++it) {
            const std::complex<double> next = step_c(m);
            const double res = std::abs(next - m);
            if (res < tol * (1.0 + std::abs(m))) return next;

            // plain iteration for a short burn-in, then Newton on
            // g(m) = m - step(m); plain iteration barely contracts near
            // support edges while Newton is quadratic
            std::complex<double> updated = next;
            if (it >= burn_in) {
                const std::complex<double> gp = 1.0 - step_prime(m, next);
                if (std::abs(gp) > 1e-14) {
                    const std::complex<double> candidate =
                        m - (m - next) / gp;
                    if (std::isfinite(candidate.real()) &&
                        std::isfinite(candidate.imag()))
                        updated = candidate;
                }
            }
            m = updated;
        }
        return std::nullopt;
    };

    const double sign = (z.imag() > 0.0) ? 1.0 : -1.0;
    auto branch_ok = [&](std::complex<double> m) {
        return m.imag() * sign > 0.0;
    };

    std::complex<double> m0 =
        (initial_guess == std::complex<double>{0.0, 0.0}) ? -1.0 / z
                                                          : initial_guess;
    if (m0.imag() * sign <= 0.0) m0 = -1.0 / z;

    if (auto m = solve_at(z, m0, max_iters); m && branch_ok(*m)) return *m;

    // Homotopy fallback: start high above the real axis where the correct
    // branch is the unique attractor, then continue the root down to z.
    const double eps_target = std::abs(z.imag());
    double eps = std::max(1.0, 2.0 * std::abs(z));
    std::complex<double> zc(z.real(), sign * eps);
    std::complex<double> m = -1.0 / zc;
    while (true) {
        auto r = solve_at(zc, m, max_iters);
        if (!r)
            throw numerical_error(
                "companion Stieltjes fixed point did not converge at z = (" +
                std::to_string(zc.real()) + ", " + std::to_string(zc.imag()) +
                ")");
        m = *r;
        if (eps <= eps_target) break;
        eps = std::max(eps / 4.0, eps_target);
        zc = {z.real(), sign * eps};
    }
    if (!branch_ok(m))
        throw numerical_error("companion transform converged to wrong branch "
                              "at z = (" + std::to_string(z.real()) + ", " +
                              std::to_string(z.imag()) + ")");
    return m;
}

/// Solved MP law: density/CDF tables on a grid plus support intervals and
/// the point mass at zero. Immutable after solve.
struct MpLaw {
    double gamma = 0.0;
    PopulationSpectrum spectrum;
    std::vector<SupportInterval> support;
    Eigen::VectorXd grid;      // abscissae (increasing)
    Eigen::VectorXd density;   // raw inverted density (>= 0)
    Eigen::VectorXd cdf;       // normalized monotone table incl. zero mass
    double point_mass_at_zero = 0.0;
    double raw_density_mass = 0.0;  // trapezoid integral before normalization

    double total_mass() const { return point_mass_at_zero + raw_density_mass; }

    double moment(int order) const {
        double acc = 0.0;
        for (Eigen::Index i = 1; i < grid.size(); ++i) {
            const double xm = 0.5 * (grid[i] + grid[i - 1]);
            const double fm = 0.5 * (density[i] + density[i - 1]);
            acc += std::pow(xm, order) * fm * (grid[i] - grid[i - 1]);
        }
        // zero atom contributes nothing for order >= 1
        return acc;
    }

    /// ∫ f dF over the continuous part (trapezoid) plus f(0)·mass0.
    double integrate(const std::function<double(double)>& f) const {
        double acc = 0.0;
        for (Eigen::Index i = 1; i < grid.size(); ++i) {
            const double dx = grid[i] - grid[i - 1];
            acc += 0.5 * (f(grid[i]) * density[i] + f(grid[i - 1]) * density[i - 1]) * dx;
        }
        // normalize the continuous part so total mass is exactly 1
        if (raw_density_mass > 0.0)
            acc *= (1.0 - point_mass_at_zero) / raw_density_mass;
        if (point_mass_at_zero > 0.0) acc += point_mass_at_zero * f(0.0);
        return acc;
    }
};

inline MpLaw solve_mp_law(const PopulationSpectrum& spectrum, double gamma,
                          const MpGridSpec& grid_spec = {}) {
    spectrum.validate();
    if (!(gamma > 0.0)) throw parameter_error("gamma must be positive");

    MpLaw law;
    law.gamma = gamma;
    law.spectrum = spectrum;

    const double max_atom = spectrum.atoms[0];
    if (max_atom <= 0.0) throw input_error("spectrum has no positive atoms");
    const double min_pos = spectrum.min_positive_atom();
    const double sqrt_g = std::sqrt(gamma);
    const double lo_edge = 0.5 * std::pow(std::max(1.0 - sqrt_g, 0.0), 2) * min_pos;
    const double hi_edge = 1.1 * std::pow(1.0 + sqrt_g, 2) * max_atom;

    const int N = grid_spec.n_points;
    law.grid.resize(N);
    if (gamma > 1.0) {
        // log-spaced leading segment resolves the near-zero edge
        const int n_log = N / 4;
        const double log_lo = std::max(hi_edge * 1e-6, 1e-12);
        const double log_hi = std::max(0.05 * hi_edge, log_lo * 10.0);
        for (int i = 0; i < n_log; ++i)
            law.grid[i] = log_lo * std::pow(log_hi / log_lo,
                                            double(i) / double(n_log));
        for (int i = n_log; i < N; ++i)
            law.grid[i] = log_hi + (hi_edge - log_hi) * double(i - n_log) /
                                       double(N - 1 - n_log);
    } else {
        const double lo = std::max(lo_edge, 0.0);
        for (int i = 0; i < N; ++i)
            law.grid[i] = lo + (hi_edge - lo) * double(i) / double(N - 1);
    }

    // fraction of zero sample eigenvalues: rank deficiency from γ > 1
    // and/or zero population atoms
    const double h0 = spectrum.weight_at_zero();
    law.point_mass_at_zero = std::max(std::max(1.0 - 1.0 / gamma, h0), 0.0);

    // inversion height: small enough that the ε-smoothing tail outside the
    // support stays below the detection threshold
    const double dx = (law.grid[N - 1] - law.grid[0]) / double(N - 1);
    const double eps = std::max(1e-9, 1e-8 * hi_edge);

    law.density.resize(N);
    std::complex<double> warm{0.0, 0.0};
    for (int i = 0; i < N; ++i) {
        const std::complex<double> z(law.grid[i], eps);
        const std::complex<double> m = stieltjes_companion(
            spectrum, gamma, z, warm, grid_spec.max_fixed_point_iters,
            grid_spec.fixed_point_tol);
        warm = m;
        // recover the p-side transform t(z) = (m̲ + (1−γ)/z) / γ and
        // remove the analytic contribution of the atom at zero, which
        // otherwise leaks a spurious spike into the continuous density
        const std::complex<double> t = (m + (1.0 - gamma) / z) / gamma +
                                       law.point_mass_at_zero / z;
        law.density[i] = std::max(t.imag() / M_PI, 0.0);
    }

    double mass = 0.0;
    for (int i = 1; i < N; ++i)
        mass += 0.5 * (law.density[i] + law.density[i - 1]) *
                (law.grid[i] - law.grid[i - 1]);
    law.raw_density_mass = mass;

    // support: maximal runs of density above the floor, merging gaps
    // shorter than 2 cells (inversion smoothing fragments edges); the
    // threshold scales with the density peak so the residual ε tail
    // outside the support never registers
    {
        const double peak = law.density.maxCoeff();
        const double threshold =
            std::max(grid_spec.density_floor, 1e-4 * peak);
        std::vector<SupportInterval> raw;
        int start = -1;
        for (int i = 0; i < N; ++i) {
            const bool on = law.density[i] > threshold;
            if (on && start < 0) start = i;
            if ((!on || i == N - 1) && start >= 0) {
                const int end = on ? i : i - 1;
                raw.push_back({law.grid[start], law.grid[end]});
                start = -1;
            }
        }
        for (const auto& iv : raw) {
            if (!law.support.empty() &&
                iv.lo - law.support.back().hi < 2.0 * dx)
                law.support.back().hi = iv.hi;
            else
                law.support.push_back(iv);
        }
    }

    // normalized CDF table: zero atom then the continuous part
    law.cdf.resize(N);
    const double scale = (mass > 0.0) ? (1.0 - law.point_mass_at_zero) / mass : 0.0;
    double acc = law.point_mass_at_zero;
    law.cdf[0] = acc;
    for (int i = 1; i < N; ++i) {
        acc += scale * 0.5 * (law.density[i] + law.density[i - 1]) *
               (law.grid[i] - law.grid[i - 1]);
        law.cdf[i] = std::min(acc, 1.0);
    }
    return law;
}

/// Quantiles by monotone interpolation of the CDF table; probabilities
/// below the zero atom map to 0.
inline Eigen::VectorXd mp_quantiles(const MpLaw& law,
                                    const Eigen::VectorXd& probs) {
    Eigen::VectorXd out(probs.size());
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        const double prob = probs[k];
        if (!(prob > 0.0 && prob < 1.0))
            throw parameter_error("quantile prob must lie in (0,1)");
        if (prob <= law.point_mass_at_zero) {
            out[k] = 0.0;
            continue;
        }
        // first grid index with cdf >= prob
        const Eigen::Index N = law.grid.size();
        Eigen::Index lo = 0, hi = N - 1;
        while (lo < hi) {
            const Eigen::Index mid = (lo + hi) / 2;
            if (law.cdf[mid] < prob)
                lo = mid + 1;
            else
                hi = mid;
        }
        if (lo == 0) {
            out[k] = law.grid[0];
        } else {
            const double c0 = law.cdf[lo - 1], c1 = law.cdf[lo];
            const double w = (c1 > c0) ? (prob - c0) / (c1 - c0) : 1.0;
            out[k] = law.grid[lo - 1] + w * (law.grid[lo] - law.grid[lo - 1]);
        }
    }
    return out;
}

/// Monte-Carlo centering method: one (M·n)×(M·p) draw with the population
/// spectrum replicated M-fold, averaged over R realizations.
struct MonteCarloBlock {
    int scale_m = 40;
    int reps = 50;
    double kappa = 3.0;
    std::uint64_t seed = 0;
};

enum class ThetaMethod { Quadrature, MonteCarlo };

/// Centering constant ϑ(f) = ∫ f dF(H, γ).
/// Quadrature integrates the solved density; Monte Carlo averages the LSS
/// of block-replicated draws. For log-based f, quadrature demands support
/// bounded away from zero and no zero atom.
inline double theta_functional(const PopulationSpectrum& spectrum, double gamma,
                               const SpectralStatistic& f,
                               ThetaMethod method = ThetaMethod::Quadrature,
                               const MonteCarloBlock& mc = {},
                               const MpGridSpec& grid_spec = {}) {
    if (!f.is_lss())
        throw parameter_error("theta functional is defined for LSS only");
    if (method == ThetaMethod::Quadrature) {
        MpLaw law = solve_mp_law(spectrum, gamma, grid_spec);
        if (f.needs_positive_spectrum()) {
            const bool mass_at_zero = law.point_mass_at_zero > 0.0;
            const bool support_near_zero =
                law.support.empty() || law.support.front().lo <= 1e-10;
            if (mass_at_zero || support_near_zero)
                throw domain_error(
                    "log-based theta under quadrature requires support bounded "
                    "away from 0; use the Monte-Carlo method");
        }
        auto fn = [&](double x) {
            if (f.custom) return f.custom(x);
            return evaluate_lss_function(f.f, x);
        };
        return law.integrate(fn);
    }

    // Monte-Carlo block method
    const Eigen::Index p = spectrum.atoms.size();
    const Eigen::Index n =
        std::max<Eigen::Index>(Eigen::Index(std::lround(double(p) / gamma)), 2);
    const Eigen::Index Mp = Eigen::Index(mc.scale_m) * p;
    const Eigen::Index Mn = Eigen::Index(mc.scale_m) * n;

    // atom values replicated M-fold as the block-diagonal spectrum
    Eigen::VectorXd lam(Mp);
    for (Eigen::Index i = 0; i < p; ++i)
        for (int r = 0; r < mc.scale_m; ++r)
            lam[i * mc.scale_m + r] = spectrum.atoms[i];
    Eigen::VectorXd sqrt_lam = lam.cwiseSqrt();

    const PearsonSpec pearson = resolve_pearson(mc.kappa);
    double acc = 0.0;
    for (int rep = 0; rep < mc.reps; ++rep) {
        Xoshiro256pp stream = derive_stream(mc.seed, std::uint64_t(rep));
        DataMatrix Z = sample_matrix(pearson, Mn, Mp, stream);
        Eigen::MatrixXd X = Z.values * sqrt_lam.asDiagonal();
        Eigen::MatrixXd S(Mp, Mp);
        S.setZero();
        S.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(),
                                                     1.0 / double(Mn));
        S.triangularView<Eigen::StrictlyUpper>() = S.transpose();
        Eigen::VectorXd evals = sym_eigenvalues(S);
        acc += evaluate_statistic(evals, f);
    }
    return acc / double(mc.reps);
}

}  // namespace specboot
