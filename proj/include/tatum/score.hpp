#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "tatum/rational.hpp"

namespace tatum {

/// Recursive subdivision of a unit period: divisor s_i at iteration i.
/// The lattice after all iterations has denominator prod(divisors).
struct SubdivisionSchema {
    std::vector<int> divisors; // each >= 2
    double lambda = 1.0;       // depth penalty weight, > 0

    std::int64_t lattice_den() const;
};

/// Nesting depth of the fraction part of a location: 0 for integers, else
/// the first subdivision iteration whose lattice contains c mod 1.
/// Throws OffGridError when no iteration reaches it.
int depth(const Rational& c, const SubdivisionSchema& schema);

/// A quantized performance: intervals gamma_k (k = 1..K) between
/// consecutive onsets, plus the first onset's location fraction c0.
/// Locations are c_k = c0 + sum_{j<=k} gamma_j.
struct Score {
    std::vector<Rational> gammas;
    Rational c0 = Rational(0);

    int intervals() const { return static_cast<int>(gammas.size()); }
    std::vector<Rational> locations() const; // c_0..c_K
};

/// Prior over score locations.  Two modes:
///  - depth: mixture of subdivision schemas, p(c) = sum_S p(S)
///    exp(-lambda_S depth(c|S)) / Z_S, each Z_S normalizing over one unit
///    period of S's lattice;
///  - table: explicit probabilities for fractions in [0,1); unlisted
///    lattice positions get a floor mass and the whole table renormalizes.
/// Construct via make_depth_prior / make_table_prior so normalizers are
/// precomputed.
struct ScorePrior {
    enum class Mode { depth, table } mode = Mode::depth;

    struct WeightedSchema {
        SubdivisionSchema schema;
        double prob;
        double log_z; // log of the per-period normalizer
    };
    std::vector<WeightedSchema> schemas;

    std::map<Rational, double> table_log_prob; // normalized log p(fraction)
    std::int64_t table_den = 1;                // lattice the table lives on
    double table_log_floor = 0.0;              // normalized log of floor mass

    std::vector<Rational> gamma_grid; // allowed interval values, ascending
};

ScorePrior make_depth_prior(std::vector<SubdivisionSchema> schemas,
                            std::vector<double> schema_probs,
                            std::vector<Rational> gamma_grid);

ScorePrior make_table_prior(const std::map<Rational, double>& table,
                            std::vector<Rational> gamma_grid,
                            double floor_mass = 1e-6);

/// log p of a single location (uses only c mod 1).
double log_prior_c(const Rational& c, const ScorePrior& prior);

/// Joint log-prior of a score: sum of log_prior_c over c_1..c_K.  The
/// first location c_0 carries no prior term (uniform over the period).
double log_prior_score(const Score& score, const ScorePrior& prior);

/// Joint log-prior of the score with gammas[begin..end) replaced.
/// Replacing an interval shifts every later location, so all terms from
/// `begin` to the end of the sequence change value, not just the block's.
double conditional_log_prior(const Score& score, int begin, int end,
                             const std::vector<Rational>& replacement,
                             const ScorePrior& prior);

/// Default interval grid {0, 1/4, 2/4, ..., 3}.
std::vector<Rational> default_gamma_grid();

/// Five binary subdivisions; lattice denominator 32.
SubdivisionSchema default_binary_schema(double lambda = 1.0);

} // namespace tatum
