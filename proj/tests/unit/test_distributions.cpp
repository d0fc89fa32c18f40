#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../oracles.hpp"
#include "hbmu/distributions.hpp"
#include "hbmu/errors.hpp"

using namespace hbmu;

namespace {

Matrix draws_gaussian(const GaussianSpec& s, Rng& rng, int n) {
  Matrix out(n, s.mean.size());
  for (int i = 0; i < n; ++i) out.row(i) = sample_gaussian(s, rng).transpose();
  return out;
}

Matrix covariance(const Matrix& x) {
  const Matrix c = x.rowwise() - x.colwise().mean();
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

}  // namespace

TEST_CASE("Gaussian sampling moments") {
  Rng rng(1);
  SUBCASE("identity precision") {
    const Matrix x = draws_gaussian({Vector::Zero(3), Matrix::Identity(3, 3)}, rng, 100000);
    CHECK(x.colwise().mean().cwiseAbs().maxCoeff() < 0.01);
  }
  SUBCASE("scalar precision 4") {
    const Matrix x = draws_gaussian({Vector::Zero(1), Matrix::Constant(1, 1, 4.0)}, rng, 100000);
    CHECK(covariance(x)(0, 0) == doctest::Approx(0.25).epsilon(0.04));
  }
  SUBCASE("correlated precision") {
    const Matrix p = (Matrix(2, 2) << 2, -1, -1, 2).finished();
    const Matrix c = covariance(draws_gaussian({Vector::Zero(2), p}, rng, 100000));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(c(i, j) == doctest::Approx(oracle::kCorrelatedCov(i, j)).epsilon(0.02));
  }
}

TEST_CASE("Gamma sampling moments") {
  Rng rng(2);
  SUBCASE("exponential special case") {
    Vector x(100000);
    for (auto& v : x) v = sample_gamma({1.0, 4.0}, rng);
    CHECK(oracle::sample_mean(x) == doctest::Approx(0.25).epsilon(0.01));
  }
  SUBCASE("shape and rate 145") {
    // 145 = 1 + N_m N_d / 2 for 8 modes on 36 DOFs.
    CHECK(1.0 + oracle::kBetaShapeModes * oracle::kBetaShapeDofs / 2.0 == oracle::kBetaShape);
    Vector x(100000);
    for (auto& v : x) v = sample_gamma({oracle::kBetaShape, oracle::kBetaShape}, rng);
    CHECK(std::abs(oracle::sample_mean(x) - 1.0) < 0.01);
    CHECK(oracle::sample_variance(x) == doctest::Approx(1.0 / oracle::kBetaShape).epsilon(0.03));
  }
  SUBCASE("variance shape / rate^2") {
    Vector x(100000);
    for (auto& v : x) v = sample_gamma({3.0, 2.0}, rng);
    CHECK(oracle::sample_variance(x) == doctest::Approx(0.75).epsilon(0.03));
  }
}

TEST_CASE("Student-t sampling") {
  Rng rng(3);
  SUBCASE("large dof approaches the Gaussian") {
    const GammaSpec beta{1e6, 2e6};
    const StudentTSpec t = gamma_gaussian_mixture(Vector::Zero(1), Matrix::Constant(1, 1, 1.0), beta);
    Vector x(400000);
    for (auto& v : x) v = sample_student_t(t, rng)[0];
    CHECK(oracle::sample_variance(x) == doctest::Approx(2.0).epsilon(0.01));
    CHECK(std::abs(oracle::sample_mean(x)) < 0.01);
  }
  SUBCASE("dof 4 variance") {
    const StudentTSpec t = gamma_gaussian_mixture(Vector::Zero(1), Matrix::Constant(1, 1, 1.0), {2.0, 2.0});
    CHECK(t.dof == 4.0);
    Vector x(400000);
    for (auto& v : x) v = sample_student_t(t, rng)[0];
    // b/a * dof/(dof - 2) = 2
    CHECK(oracle::sample_variance(x) == doctest::Approx(2.0).epsilon(0.05));
  }
  SUBCASE("same stream as the Gamma-then-Gaussian composition") {
    const Vector mu = (Vector(2) << 0.3, -1.0).finished();
    const Matrix lam = (Matrix(2, 2) << 2, 0.5, 0.5, 1).finished();
    const GammaSpec g{3.0, 1.5};
    const StudentTSpec t = gamma_gaussian_mixture(mu, lam, g);
    Rng a(9), b(9);
    for (int i = 0; i < 100; ++i) {
      const Vector x = sample_student_t(t, a);
      const double w = b.gamma(t.dof / 2.0, t.dof / 2.0);
      const Vector y = sample_gaussian(t.mean, PrecisionFactor(w * t.scale_precision), b);
      CHECK((x - y).norm() < 1e-12);
    }
  }
}

TEST_CASE("log densities") {
  CHECK(logpdf_gaussian({Vector::Zero(1), Matrix::Identity(1, 1)}, Vector::Zero(1)) ==
        doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
  CHECK(logpdf_gamma({1.0, 3.0}, 0.7) == doctest::Approx(std::log(3.0) - 3.0 * 0.7));

  Rng rng(4);
  const Vector mu = (Vector(3) << 0.1, 0.2, -0.3).finished();
  const Matrix a = Matrix::Random(3, 3);
  const Matrix lam = a * a.transpose() + Matrix::Identity(3, 3);
  const GammaSpec g{2.5, 0.7};
  const StudentTSpec t = gamma_gaussian_mixture(mu, lam, g);
  for (int i = 0; i < 20; ++i) {
    const Vector x = mu + rng.normal_vector(3);
    const double ref = oracle::mixture_logpdf(x, mu, lam, g.shape, g.rate);
    CHECK(logpdf_student_t(t, x) == doctest::Approx(ref).epsilon(1e-6));
    CHECK(logpdf_gaussian({mu, lam}, x) == doctest::Approx(oracle::gaussian_logpdf(x, mu, lam)).epsilon(1e-12));
  }

  // 1-D normalization by trapezoid quadrature.
  const StudentTSpec t1 = gamma_gaussian_mixture(Vector::Zero(1), Matrix::Constant(1, 1, 2.0), {3.0, 1.0});
  double sum = 0.0;
  const double h = 0.001;
  for (double x = -400.0; x <= 400.0; x += h) sum += std::exp(logpdf_student_t(t1, Vector::Constant(1, x)));
  CHECK(sum * h == doctest::Approx(1.0).epsilon(1e-4));
  double gsum = 0.0;
  for (double x = h / 2; x < 60.0; x += h) gsum += std::exp(logpdf_gamma({2.5, 0.7}, x));
  CHECK(gsum * h == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("precision factor jitter policy") {
  const Matrix singular = (Matrix(2, 2) << 1, 1, 1, 1).finished();
  const PrecisionFactor f(singular);
  CHECK(f.jitter() > 0.0);
  CHECK(f.jitter() <= 1e-8 * 1.0 + 1e-20);
  CHECK(PrecisionFactor(Matrix::Identity(2, 2)).jitter() == 0.0);
  const Matrix indefinite = (Matrix(2, 2) << 1, 0, 0, -1).finished();
  CHECK_THROWS_AS(PrecisionFactor{indefinite}, NumericalError);
}

TEST_CASE("random streams") {
  Rng a(5, 1), b(5, 1), c(5, 2);
  bool differ = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    if (x != c.normal()) differ = true;
  }
  CHECK(differ);
  Rng d(5, 1);
  const Rng s1 = d.split(3), s2 = d.split(3);
  CHECK(Rng(s1).uniform() == Rng(s2).uniform());
  for (int i = 0; i < 1000; ++i) CHECK(a.index(7) < 7);
}
