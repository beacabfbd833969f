#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "tatum/errors.hpp"
#include "tatum/gaussian.hpp"
#include "oracles.hpp"

using namespace tatum;

namespace {

std::mt19937_64 rng(20260819);

Eigen::VectorXd random_vec(int n) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

Eigen::MatrixXd random_cov(int n) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    return a * a.transpose() + 0.5 * n * Eigen::MatrixXd::Identity(n, n);
}

// Dense-route reference: log of a scaled Gaussian density at x.
double ref_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                       const Eigen::MatrixXd& cov, double log_scale) {
    return log_scale + oracle::mvn_logpdf(x, mean, cov);
}

} // namespace

TEST_CASE("moments round-trip and carry the scale") {
    const Eigen::VectorXd mean = random_vec(3);
    const Eigen::MatrixXd cov = random_cov(3);
    const GaussianPotential p = from_moments({4, 7, 9}, mean, cov, -1.25);
    const Moments m = to_moments(p);
    CHECK((m.mean - mean).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((m.cov - cov).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(m.log_integral == doctest::Approx(-1.25).epsilon(1e-12));
    CHECK(log_integral(p) == doctest::Approx(-1.25).epsilon(1e-12));
}

TEST_CASE("product of two standard normals integrates to 1/(2 sqrt(pi))") {
    const GaussianPotential n1 =
        from_moments({0}, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    const GaussianPotential prod = multiply(n1, n1);
    CHECK(log_integral(prod) ==
          doctest::Approx(-1.2655121234846454).epsilon(1e-12));
}

TEST_CASE("multiply is pointwise with label alignment") {
    // overlapping domains {1,2,3} x {3,5}: checked against the sum of the
    // factors' dense densities at random points
    const Eigen::VectorXd ma = random_vec(3), mb = random_vec(2);
    const Eigen::MatrixXd ca = random_cov(3), cb = random_cov(2);
    const GaussianPotential a = from_moments({1, 2, 3}, ma, ca, 0.3);
    const GaussianPotential b = from_moments({3, 5}, mb, cb, -0.7);
    const GaussianPotential ab = multiply(a, b);
    REQUIRE(ab.labels == std::vector<VarId>{1, 2, 3, 5});
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd x = random_vec(4); // (x1, x2, x3, x5)
        Eigen::VectorXd xa = x.head(3), xb(2);
        xb << x[2], x[3];
        const double expect = ref_log_density(xa, ma, ca, 0.3) +
                              ref_log_density(xb, mb, cb, -0.7);
        CHECK(log_density(ab, x) == doctest::Approx(expect).epsilon(1e-10));
    }
    // commutativity up to label order
    const GaussianPotential ba = multiply(b, a);
    REQUIRE(ba.labels == std::vector<VarId>{3, 5, 1, 2});
    Eigen::VectorXd x = random_vec(4);
    Eigen::VectorXd xr(4);
    xr << x[2], x[3], x[0], x[1];
    CHECK(log_density(ab, x) == doctest::Approx(log_density(ba, xr)).epsilon(1e-10));
}

TEST_CASE("marginalize matches dense moment-block elimination") {
    const Eigen::VectorXd mean = random_vec(4);
    const Eigen::MatrixXd cov = random_cov(4);
    const GaussianPotential p = from_moments({10, 11, 12, 13}, mean, cov, 0.4);
    const GaussianPotential m = marginalize(p, {11, 13});
    REQUIRE(m.labels == std::vector<VarId>{11, 13});
    // dense route: marginal of a Gaussian = dropped blocks
    Eigen::VectorXd sub_mean(2);
    sub_mean << mean[1], mean[3];
    Eigen::MatrixXd sub_cov(2, 2);
    sub_cov << cov(1, 1), cov(1, 3), cov(3, 1), cov(3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd x = random_vec(2);
        CHECK(log_density(m, x) ==
              doctest::Approx(ref_log_density(x, sub_mean, sub_cov, 0.4)).epsilon(1e-9));
    }
    CHECK(log_integral(m) == doctest::Approx(0.4).epsilon(1e-10));

    // eliminating everything leaves the scale as a 0-dim potential
    const GaussianPotential all = marginalize(p, {});
    CHECK(all.dim() == 0);
    CHECK(all.g == doctest::Approx(0.4).epsilon(1e-10));
}

TEST_CASE("condition slices the density") {
    const Eigen::VectorXd mean = random_vec(3);
    const Eigen::MatrixXd cov = random_cov(3);
    const GaussianPotential p = from_moments({1, 2, 3}, mean, cov, -0.2);
    Eigen::VectorXd obs(1);
    obs << 0.7;
    const GaussianPotential c = condition(p, {2}, obs);
    REQUIRE(c.labels == std::vector<VarId>{1, 3});
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXd x = random_vec(2);
        Eigen::VectorXd full(3);
        full << x[0], obs[0], x[1];
        CHECK(log_density(c, x) == doctest::Approx(log_density(p, full)).epsilon(1e-10));
    }
}

TEST_CASE("marginalize then condition agree with dense posterior algebra") {
    // p(x, y) with y observed: condition + normalize == dense conditional
    const Eigen::VectorXd mean = random_vec(4);
    const Eigen::MatrixXd cov = random_cov(4);
    const GaussianPotential joint = from_moments({0, 1, 2, 3}, mean, cov);
    Eigen::VectorXd obs(2);
    obs << 0.3, -0.9;
    const Moments cm = to_moments(condition(joint, {2, 3}, obs));
    // dense: mu_1|2 = mu1 + S12 S22^-1 (y - mu2), S_1|2 = S11 - S12 S22^-1 S21
    const Eigen::MatrixXd s11 = cov.topLeftCorner(2, 2), s12 = cov.topRightCorner(2, 2),
                          s22 = cov.bottomRightCorner(2, 2);
    const Eigen::VectorXd dm = mean.head(2) + s12 * s22.ldlt().solve(obs - mean.tail(2));
    const Eigen::MatrixXd dc = s11 - s12 * s22.ldlt().solve(s12.transpose());
    CHECK((cm.mean - dm).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK((cm.cov - dc).lpNorm<Eigen::Infinity>() < 1e-9);
    // and its mass is the marginal density of the observation
    Eigen::VectorXd obs_mean = mean.tail(2);
    CHECK(log_integral(condition(joint, {2, 3}, obs)) ==
          doctest::Approx(oracle::mvn_logpdf(obs, obs_mean, s22)).epsilon(1e-9));
}

TEST_CASE("flat potentials are multiplicative identities") {
    const GaussianPotential p =
        from_moments({5, 6}, random_vec(2), random_cov(2), 0.1);
    const GaussianPotential f = GaussianPotential::flat({6, 7});
    const GaussianPotential pf = multiply(p, f);
    REQUIRE(pf.labels == std::vector<VarId>{5, 6, 7});
    // density in the shared dims unchanged, flat in the new one
    Eigen::VectorXd x = random_vec(3);
    Eigen::VectorXd x2 = x;
    x2[2] += 3.0;
    CHECK(log_density(pf, x) == doctest::Approx(log_density(pf, x2)).epsilon(1e-12));
    CHECK(log_density(pf, x) ==
          doctest::Approx(log_density(p, x.head(2))).epsilon(1e-12));
    CHECK_THROWS_AS(to_moments(f), ImproperError);
}

TEST_CASE("improper and malformed inputs are rejected") {
    const GaussianPotential flat2 = GaussianPotential::flat({1, 2});
    CHECK_THROWS_AS(marginalize(flat2, {1}), ImproperError);
    const GaussianPotential p = from_moments({1, 2}, random_vec(2), random_cov(2));
    CHECK_THROWS_AS(marginalize(p, {3}), LabelError);
    Eigen::VectorXd one(1);
    one << 0.0;
    CHECK_THROWS_AS(condition(p, {9}, one), LabelError);
    CHECK_THROWS_AS(condition(p, {1}, Eigen::VectorXd(2)), DimensionError);
    CHECK_THROWS_AS(from_moments({1}, random_vec(2), random_cov(2)), DimensionError);
    CHECK_THROWS_AS(log_density(p, one), DimensionError);
}

TEST_CASE("operation counter advances") {
    reset_potential_op_count();
    const GaussianPotential p = from_moments({1}, random_vec(1), random_cov(1));
    (void)multiply(p, p);
    (void)log_integral(p);
    CHECK(potential_op_count() >= 2);
}
