#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tatum/errors.hpp"

namespace tatum {

/// Identifies one scalar dimension of a potential's domain.  Callers pick
/// the encoding; the state-space layer packs (time slice, state dim) into
/// one id so products across neighboring slices align automatically.
using VarId = std::int64_t;

/// Unnormalized Gaussian in canonical (information) form over the labeled
/// dimensions:
///
///   phi(x) = exp(g + h'x - x'Kx/2)
///
/// K is symmetric but not necessarily positive definite: conditional and
/// backward-message potentials are legitimately improper.  Only operations
/// that integrate (to_moments, marginalize's eliminated block) demand
/// positive definiteness, checked by factorization pivots.
///
/// An empty domain (dim() == 0) is a plain scalar exp(g); it shows up when
/// everything has been marginalized out and carries the log-integral.
struct GaussianPotential {
    std::vector<VarId> labels;
    Eigen::VectorXd h;
    Eigen::MatrixXd K;
    double g = 0.0;

    int dim() const { return static_cast<int>(labels.size()); }

    /// The unit potential [0, 0, 0] on the given domain.
    static GaussianPotential flat(std::vector<VarId> labels);
};

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    double log_integral = 0.0; // log of the total mass under phi
};

/// Canonical form of a scaled Gaussian density with the given moments:
/// integral of the result equals exp(log_scale).
GaussianPotential from_moments(std::vector<VarId> labels,
                               const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& cov,
                               double log_scale = 0.0);

/// Requires K positive definite; throws ImproperError otherwise.
Moments to_moments(const GaussianPotential& p);

/// log of the integral of phi over its whole domain.
double log_integral(const GaussianPotential& p);

/// log phi(x); x is aligned with p.labels.
double log_density(const GaussianPotential& p, const Eigen::VectorXd& x);

/// Pointwise product.  Domains are merged by label (a's order first, then
/// b's unseen labels); parameters are zero-padded onto the merged domain
/// and added.
GaussianPotential multiply(const GaussianPotential& a, const GaussianPotential& b);

/// Integrates out every dimension not listed in `keep` (a subset of the
/// domain; order of the result follows p's label order).  The eliminated
/// block of K must be positive definite.
GaussianPotential marginalize(const GaussianPotential& p,
                              const std::vector<VarId>& keep);

/// Fixes the `observed` dimensions at `values` and returns the potential
/// over the remaining dimensions (slice, not a conditional density).
GaussianPotential condition(const GaussianPotential& p,
                            const std::vector<VarId>& observed,
                            const Eigen::VectorXd& values);

/// Process-wide count of potential operations (multiply, marginalize,
/// condition, to_moments/log_integral).  Cost proxy for benchmarks.
std::uint64_t potential_op_count();
void reset_potential_op_count();

/// Minimum factorization pivot accepted as positive definite.
inline constexpr double kPivotTol = 1e-12;

} // namespace tatum
