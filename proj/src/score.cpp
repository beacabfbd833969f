#include "tatum/score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tatum {

namespace {

double log_sum_exp(const std::vector<double>& v) {
    double best = -std::numeric_limits<double>::infinity();
    for (double x : v) best = std::max(best, x);
    if (!std::isfinite(best)) return best;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - best);
    return best + std::log(acc);
}

void check_schema(const SubdivisionSchema& s) {
    if (s.divisors.empty())
        throw DimensionError("schema needs at least one divisor");
    for (int d : s.divisors)
        if (d < 2) throw DimensionError("schema divisors must be >= 2");
    if (!(s.lambda > 0)) throw DimensionError("schema lambda must be > 0");
}

} // namespace

std::int64_t SubdivisionSchema::lattice_den() const {
    std::int64_t den = 1;
    for (int d : divisors) den *= d;
    return den;
}

int depth(const Rational& c, const SubdivisionSchema& schema) {
    check_schema(schema);
    Rational f = c.mod1();
    if (f.num == 0) return 0;
    std::int64_t lattice = 1;
    for (size_t i = 0; i < schema.divisors.size(); ++i) {
        lattice *= schema.divisors[i];
        if (lattice % f.den == 0) return static_cast<int>(i + 1);
    }
    throw OffGridError("location " + c.str() + " outside subdivision lattice");
}

std::vector<Rational> Score::locations() const {
    std::vector<Rational> c;
    c.reserve(gammas.size() + 1);
    c.push_back(c0);
    Rational acc = c0;
    for (const Rational& gm : gammas) {
        acc = acc + gm;
        c.push_back(acc);
    }
    return c;
}

ScorePrior make_depth_prior(std::vector<SubdivisionSchema> schemas,
                            std::vector<double> schema_probs,
                            std::vector<Rational> gamma_grid) {
    if (schemas.empty() || schemas.size() != schema_probs.size())
        throw DimensionError("schemas and schema_probs must match and be non-empty");
    double total = std::accumulate(schema_probs.begin(), schema_probs.end(), 0.0);
    if (!(total > 0)) throw DimensionError("schema probabilities must have mass");

    ScorePrior prior;
    prior.mode = ScorePrior::Mode::depth;
    for (size_t i = 0; i < schemas.size(); ++i) {
        check_schema(schemas[i]);
        ScorePrior::WeightedSchema ws;
        ws.schema = schemas[i];
        ws.prob = schema_probs[i] / total;
        const std::int64_t den = ws.schema.lattice_den();
        std::vector<double> terms;
        terms.reserve(den);
        for (std::int64_t j = 0; j < den; ++j)
            terms.push_back(-ws.schema.lambda * depth(Rational(j, den), ws.schema));
        ws.log_z = log_sum_exp(terms);
        prior.schemas.push_back(std::move(ws));
    }
    prior.gamma_grid = std::move(gamma_grid);
    std::sort(prior.gamma_grid.begin(), prior.gamma_grid.end());
    return prior;
}

ScorePrior make_table_prior(const std::map<Rational, double>& table,
                            std::vector<Rational> gamma_grid,
                            double floor_mass) {
    if (table.empty()) throw DimensionError("empty prior table");
    ScorePrior prior;
    prior.mode = ScorePrior::Mode::table;
    prior.gamma_grid = std::move(gamma_grid);
    std::sort(prior.gamma_grid.begin(), prior.gamma_grid.end());

    // lattice: common denominator of table keys and grid fractions
    std::int64_t den = 1;
    for (const auto& [c, p] : table) {
        if (c < Rational(0) || !(c < Rational(1)))
            throw DimensionError("table keys must lie in [0, 1)");
        if (!(p > 0)) throw DimensionError("table probabilities must be > 0");
        den = std::lcm(den, c.den);
    }
    for (const Rational& gm : prior.gamma_grid)
        den = std::lcm(den, gm.mod1().den);
    prior.table_den = den;

    double listed = 0.0;
    for (const auto& [c, p] : table) listed += p;
    const std::int64_t unlisted = den - static_cast<std::int64_t>(table.size());
    const double z = listed + floor_mass * static_cast<double>(unlisted);
    for (const auto& [c, p] : table)
        prior.table_log_prob[c] = std::log(p / z);
    prior.table_log_floor = std::log(floor_mass / z);
    return prior;
}

double log_prior_c(const Rational& c, const ScorePrior& prior) {
    const Rational f = c.mod1();
    if (prior.mode == ScorePrior::Mode::table) {
        auto it = prior.table_log_prob.find(f);
        if (it != prior.table_log_prob.end()) return it->second;
        if (prior.table_den % f.den != 0)
            throw OffGridError("location " + c.str() + " outside prior table lattice");
        return prior.table_log_floor;
    }
    std::vector<double> terms;
    terms.reserve(prior.schemas.size());
    bool on_some_grid = false;
    for (const auto& ws : prior.schemas) {
        if (ws.schema.lattice_den() % f.den != 0) continue;
        on_some_grid = true;
        terms.push_back(std::log(ws.prob) - ws.schema.lambda * depth(f, ws.schema)
                        - ws.log_z);
    }
    if (!on_some_grid)
        throw OffGridError("location " + c.str() + " outside every schema lattice");
    return log_sum_exp(terms);
}

double log_prior_score(const Score& score, const ScorePrior& prior) {
    double acc = 0.0;
    Rational c = score.c0;
    for (const Rational& gm : score.gammas) {
        c = c + gm;
        acc += log_prior_c(c, prior);
    }
    return acc;
}

double conditional_log_prior(const Score& score, int begin, int end,
                             const std::vector<Rational>& replacement,
                             const ScorePrior& prior) {
    const int K = score.intervals();
    if (begin < 0 || end < begin || end > K)
        throw DimensionError("conditional_log_prior: bad range");
    if (static_cast<int>(replacement.size()) != end - begin)
        throw DimensionError("conditional_log_prior: replacement length mismatch");
    double acc = 0.0;
    Rational c = score.c0;
    for (int k = 0; k < begin; ++k) {
        c = c + score.gammas[k];
        acc += log_prior_c(c, prior);
    }
    for (int k = begin; k < end; ++k) {
        c = c + replacement[k - begin];
        acc += log_prior_c(c, prior);
    }
    for (int k = end; k < K; ++k) {
        c = c + score.gammas[k];
        acc += log_prior_c(c, prior);
    }
    return acc;
}

std::vector<Rational> default_gamma_grid() {
    std::vector<Rational> grid;
    for (int j = 0; j <= 12; ++j) grid.push_back(Rational(j, 4));
    return grid;
}

SubdivisionSchema default_binary_schema(double lambda) {
    SubdivisionSchema s;
    s.divisors = {2, 2, 2, 2, 2};
    s.lambda = lambda;
    return s;
}

} // namespace tatum
