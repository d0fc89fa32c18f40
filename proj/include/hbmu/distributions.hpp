#pragma once

// Gaussian, Gamma and Student-t sampling and log-densities in the precision
// parameterization used by the conditional posteriors.

#include <cstdint>
#include <random>

#include "hbmu/model.hpp"

namespace hbmu {

// Random stream: a 64-bit Mersenne Twister whose state is seeded from
// SplitMix64 applied to (seed, stream). Distinct stream ids under one seed
// give statistically independent generators, so each Gibbs chain owns one.
// Draw sequences are bit-reproducible for a given (seed, stream) on a given
// standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  // Gamma with the given shape and rate (mean shape / rate).
  double gamma(double shape, double rate);
  // Uniform on {0, ..., n - 1}.
  std::size_t index(std::size_t n);
  Vector normal_vector(Eigen::Index n);

  // Child stream keyed by (this stream's seed material, id).
  Rng split(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Cholesky factor of a symmetric positive-definite precision matrix. When the
// plain factorization fails, eps * mean(diag) * I is added with eps in
// {1e-12, 1e-10, 1e-8}; after that a NumericalError is thrown.
class PrecisionFactor {
 public:
  PrecisionFactor() = default;
  explicit PrecisionFactor(const Matrix& precision);

  Eigen::Index dim() const { return llt_.rows(); }
  // Added diagonal (0 when the matrix factorized as given).
  double jitter() const { return jitter_; }

  Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }
  Matrix covariance() const;
  double log_det() const;
  // L^{-T} z, a draw with covariance precision^{-1} when z is standard normal.
  Vector whiten_inverse(const Vector& z) const;
  // (x - mu)' P (x - mu) using the factor.
  double mahalanobis_sq(const Vector& delta) const;

 private:
  Eigen::LLT<Matrix> llt_;
  double jitter_ = 0.0;
};

struct GaussianSpec {
  Vector mean;
  Matrix precision;
};

struct GammaSpec {
  double shape = 1.0;
  double rate = 1.0;

  double mean() const { return shape / rate; }
};

// St(x | mean, scale_precision, dof) in the precision-scale form
//   p(x) = Gamma((v+M)/2) / (Gamma(v/2) (v pi)^{M/2}) |P|^{1/2}
//          (1 + (x-mu)' P (x-mu) / v)^{-(v+M)/2}.
// The Gamma(a, b) mixture of N(mu, (beta Lambda)^{-1}) is St(mu, (a/b) Lambda, 2a).
struct StudentTSpec {
  Vector mean;
  Matrix scale_precision;
  double dof = 1.0;
};

Vector sample_gaussian(const GaussianSpec& spec, Rng& rng);
Vector sample_gaussian(const Vector& mean, const PrecisionFactor& precision, Rng& rng);

double sample_gamma(const GammaSpec& spec, Rng& rng);

// Draws w ~ Gamma(dof/2, dof/2), then x ~ N(mean, (w P)^{-1}).
Vector sample_student_t(const StudentTSpec& spec, Rng& rng);
Vector sample_student_t(const Vector& mean, const PrecisionFactor& scale_precision, double dof,
                        Rng& rng);

double logpdf_gaussian(const GaussianSpec& spec, const Vector& x);
double logpdf_gamma(const GammaSpec& spec, double x);
double logpdf_student_t(const StudentTSpec& spec, const Vector& x);

// Builds the Student-t that results from mixing N(mean, (beta Lambda)^{-1})
// over beta ~ Gamma(shape, rate).
StudentTSpec gamma_gaussian_mixture(const Vector& mean, const Matrix& lambda,
                                    const GammaSpec& beta);

}  // namespace hbmu
