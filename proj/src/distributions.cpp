#include "hbmu/distributions.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hbmu/errors.hpp"

namespace hbmu {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    s = splitmix64(s);
    words[i] = static_cast<std::uint32_t>(s);
    words[i + 1] = static_cast<std::uint32_t>(s >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(seeded_engine(seed, stream)) {}

double Rng::gamma(double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
}

std::size_t Rng::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

Vector Rng::normal_vector(Eigen::Index n) {
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = normal();
  return z;
}

Rng Rng::split(std::uint64_t id) const {
  return Rng(splitmix64(seed_ ^ (stream_ * 0xd1342543de82ef95ULL)), id);
}

PrecisionFactor::PrecisionFactor(const Matrix& precision) {
  if (precision.rows() != precision.cols())
    throw InputError("precision matrix must be square");
  llt_.compute(precision);
  if (llt_.info() == Eigen::Success && std::isfinite(llt_.matrixLLT().diagonal().sum())) return;

  const double scale = precision.diagonal().cwiseAbs().mean();
  for (double eps : {1e-12, 1e-10, 1e-8}) {
    jitter_ = eps * scale;
    Matrix shifted = precision;
    shifted.diagonal().array() += jitter_;
    llt_.compute(shifted);
    if (llt_.info() == Eigen::Success && std::isfinite(llt_.matrixLLT().diagonal().sum()))
      return;
  }
  std::ostringstream msg;
  msg << "precision matrix of size " << precision.rows()
      << " is not positive definite after jitter up to 1e-8 * mean(diag) = " << jitter_;
  throw NumericalError(msg.str());
}

Matrix PrecisionFactor::covariance() const {
  Matrix linv = Matrix::Identity(dim(), dim());
  llt_.matrixL().solveInPlace(linv);
  return linv.transpose() * linv;
}

double PrecisionFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Vector PrecisionFactor::whiten_inverse(const Vector& z) const {
  return llt_.matrixU().solve(z);
}

double PrecisionFactor::mahalanobis_sq(const Vector& delta) const {
  return (llt_.matrixU() * delta).squaredNorm();
}

Vector sample_gaussian(const Vector& mean, const PrecisionFactor& precision, Rng& rng) {
  return mean + precision.whiten_inverse(rng.normal_vector(mean.size()));
}

Vector sample_gaussian(const GaussianSpec& spec, Rng& rng) {
  return sample_gaussian(spec.mean, PrecisionFactor(spec.precision), rng);
}

double sample_gamma(const GammaSpec& spec, Rng& rng) { return rng.gamma(spec.shape, spec.rate); }

Vector sample_student_t(const Vector& mean, const PrecisionFactor& scale_precision, double dof,
                        Rng& rng) {
  const double w = rng.gamma(0.5 * dof, 0.5 * dof);
  return mean + scale_precision.whiten_inverse(rng.normal_vector(mean.size())) / std::sqrt(w);
}

Vector sample_student_t(const StudentTSpec& spec, Rng& rng) {
  return sample_student_t(spec.mean, PrecisionFactor(spec.scale_precision), spec.dof, rng);
}

double logpdf_gaussian(const GaussianSpec& spec, const Vector& x) {
  const PrecisionFactor f(spec.precision);
  const double m = static_cast<double>(x.size());
  return -0.5 * m * std::log(2.0 * std::numbers::pi) + 0.5 * f.log_det() -
         0.5 * f.mahalanobis_sq(x - spec.mean);
}

double logpdf_gamma(const GammaSpec& spec, double x) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return spec.shape * std::log(spec.rate) - std::lgamma(spec.shape) +
         (spec.shape - 1.0) * std::log(x) - spec.rate * x;
}

double logpdf_student_t(const StudentTSpec& spec, const Vector& x) {
  const PrecisionFactor f(spec.scale_precision);
  const double m = static_cast<double>(x.size());
  const double v = spec.dof;
  return std::lgamma(0.5 * (v + m)) - std::lgamma(0.5 * v) -
         0.5 * m * std::log(v * std::numbers::pi) + 0.5 * f.log_det() -
         0.5 * (v + m) * std::log1p(f.mahalanobis_sq(x - spec.mean) / v);
}

StudentTSpec gamma_gaussian_mixture(const Vector& mean, const Matrix& lambda,
                                    const GammaSpec& beta) {
  return StudentTSpec{mean, (beta.shape / beta.rate) * lambda, 2.0 * beta.shape};
}

}  // namespace hbmu
