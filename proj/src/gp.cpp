// Copyright 2026 The tsflow Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tsflow/gp.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "tsflow/error.hpp"

namespace tsflow::gp {

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "isotropic" || name == "iso") return KernelKind::kIsotropic;
  if (name == "se" || name == "SE") return KernelKind::kSE;
  if (name == "ou" || name == "OU") return KernelKind::kOU;
  if (name == "pe" || name == "PE") return KernelKind::kPE;
  throw ValidationError("unknown kernel kind '" + std::string(name) + "'");
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::kIsotropic: return "isotropic";
    case KernelKind::kSE: return "se";
    case KernelKind::kOU: return "ou";
    case KernelKind::kPE: return "pe";
  }
  return "?";
}

double default_length_scale(KernelKind kind) {
  switch (kind) {
    case KernelKind::kSE: return std::sqrt(0.5);
    case KernelKind::kOU: return 1.0;
    case KernelKind::kPE: return std::sqrt(2.0);
    case KernelKind::kIsotropic: return 1.0;
  }
  return 1.0;
}

KernelSpec KernelSpec::with_defaults(KernelKind kind) {
  return KernelSpec{kind, default_length_scale(kind), kDefaultWhiteNoise};
}

void KernelSpec::validate() const {
  if (!(length_scale > 0.0) || !std::isfinite(length_scale))
    throw ValidationError("kernel.length_scale must be > 0");
  if (!(white_noise >= 0.0) || !std::isfinite(white_noise))
    throw ValidationError("kernel.white_noise must be >= 0");
}

Eigen::VectorXd normalize_times(std::span<const std::int64_t> indices,
                                int period) {
  if (period < 1) throw ValidationError("period must be >= 1");
  Eigen::VectorXd t(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i)
    t(static_cast<Eigen::Index>(i)) =
        static_cast<double>(indices[i]) * std::numbers::pi / period;
  return t;
}

Eigen::VectorXd normalize_times(std::int64_t first, int count, int period) {
  if (period < 1) throw ValidationError("period must be >= 1");
  Eigen::VectorXd t(count);
  for (int i = 0; i < count; ++i)
    t(i) = static_cast<double>(first + i) * std::numbers::pi / period;
  return t;
}

double kernel_eval(const KernelSpec& spec, double d) {
  const double l = spec.length_scale;
  switch (spec.kind) {
    case KernelKind::kIsotropic:
      return d == 0.0 ? 1.0 : 0.0;
    case KernelKind::kSE:
      return std::exp(-d * d / (2.0 * l * l));
    case KernelKind::kOU:
      return std::exp(-std::abs(d) / l);
    case KernelKind::kPE: {
      const double s = std::sin(d);
      return std::exp(-(2.0 / (l * l)) * s * s);
    }
  }
  return 0.0;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b) {
  Eigen::MatrixXd k(a.size(), b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j)
    for (Eigen::Index i = 0; i < a.size(); ++i)
      k(i, j) = kernel_eval(spec, a(i) - b(j));
  return k;
}

double factorize_with_jitter(const Eigen::MatrixXd& base, double jitter,
                             Eigen::MatrixXd& chol, Eigen::MatrixXd* sigma) {
  const Eigen::Index n = base.rows();
  auto attempt = [&](double j) {
    Eigen::MatrixXd s = base;
    s.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) return false;
    Eigen::MatrixXd l = llt.matrixL();
    if ((l.diagonal().array() <= 0.0).any() || !l.allFinite()) return false;
    chol = std::move(l);
    if (sigma) *sigma = std::move(s);
    return true;
  };
  if (n > 0 && attempt(jitter)) return jitter;
  double j = std::max(jitter, kDefaultWhiteNoise);
  while (j < kMaxJitter) {
    j = std::min(j * 10.0, kMaxJitter);
    if (attempt(j)) {
      spdlog::warn("covariance not positive definite; jitter raised to {:g}", j);
      return j;
    }
  }
  throw NumericalError("covariance is not positive definite (final jitter " +
                       std::to_string(j) + ", n=" + std::to_string(n) + ")");
}

CovMatrix build_cov(const KernelSpec& spec, const Eigen::VectorXd& times) {
  spec.validate();
  if (times.size() < 1) throw ValidationError("build_cov: no time points");
  CovMatrix cov;
  const Eigen::MatrixXd k = kernel_matrix(spec, times, times);
  cov.jitter = factorize_with_jitter(k, spec.white_noise, cov.chol, &cov.sigma);
  return cov;
}

Eigen::MatrixXd gp_sample(const CovMatrix& cov, int count, std::uint64_t seed) {
  Rng rng(seed);
  return gp_sample(cov, count, rng);
}

Eigen::MatrixXd gp_sample(const CovMatrix& cov, int count, Rng& rng) {
  if (count < 0) throw ValidationError("gp_sample: negative count");
  const Eigen::MatrixXd z = standard_normal(rng, cov.size(), count);
  return (cov.chol.triangularView<Eigen::Lower>() * z).transpose();
}

LogDensity gp_logpdf_score(const CovMatrix& cov, const Eigen::VectorXd& x) {
  const Eigen::Index n = cov.size();
  if (x.size() != n)
    throw ValidationError("gp_logpdf_score: dimension " +
                          std::to_string(x.size()) + " != " + std::to_string(n));
  const Eigen::VectorXd y = cov.chol.triangularView<Eigen::Lower>().solve(x);
  const Eigen::VectorXd alpha =
      cov.chol.transpose().triangularView<Eigen::Upper>().solve(y);
  LogDensity out;
  out.logp = -0.5 * y.squaredNorm() -
             cov.chol.diagonal().array().log().sum() -
             0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  out.score = -alpha;
  return out;
}

Eigen::MatrixXd gp_score(const CovMatrix& cov, const Eigen::MatrixXd& x) {
  if (x.rows() != cov.size())
    throw ValidationError("gp_score: dimension mismatch");
  const Eigen::MatrixXd y = cov.chol.triangularView<Eigen::Lower>().solve(x);
  return -cov.chol.transpose().triangularView<Eigen::Upper>().solve(y);
}

GprConditioner::GprConditioner(const KernelSpec& spec,
                               const Eigen::VectorXd& past_times,
                               const Eigen::VectorXd& future_times) {
  spec.validate();
  if (past_times.size() < 1 || future_times.size() < 1)
    throw ValidationError("gpr: past and future must be non-empty");
  Eigen::MatrixXd chol_pp;
  factorize_with_jitter(kernel_matrix(spec, past_times, past_times),
                        spec.white_noise, chol_pp, nullptr);
  const Eigen::MatrixXd k_pf = kernel_matrix(spec, past_times, future_times);
  Eigen::MatrixXd k_ff = kernel_matrix(spec, future_times, future_times);
  k_ff.diagonal().array() += spec.white_noise;

  const Eigen::MatrixXd v =
      chol_pp.triangularView<Eigen::Lower>().solve(k_pf);  // C x P
  gain_ = chol_pp.transpose()
              .triangularView<Eigen::Upper>()
              .solve(v)
              .transpose();  // P x C
  cov_ = k_ff - v.transpose() * v;
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() == Eigen::Success &&
      (llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
    factor_ = llt.matrixL();
    return;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  Eigen::VectorXd lambda = eig.eigenvalues();
  if (lambda.minCoeff() < -1e-8)
    spdlog::warn("gpr: conditional covariance eigenvalue {:g} clipped to 0",
                 lambda.minCoeff());
  lambda = lambda.cwiseMax(0.0);
  factor_ = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
}

GaussianDist GprConditioner::condition(const Eigen::VectorXd& y_p) const {
  if (y_p.size() != gain_.cols())
    throw ValidationError("gpr: y_p has length " + std::to_string(y_p.size()) +
                          ", expected " + std::to_string(gain_.cols()));
  return GaussianDist{gain_ * y_p, factor_};
}

GaussianDist gpr_condition(const KernelSpec& spec,
                           const Eigen::VectorXd& past_times,
                           const Eigen::VectorXd& future_times,
                           const Eigen::VectorXd& y_p) {
  return GprConditioner(spec, past_times, future_times).condition(y_p);
}

Eigen::VectorXd cond_prior_sample(const GaussianDist& gpr,
                                  const Eigen::VectorXd& y_p,
                                  std::uint64_t seed) {
  Rng rng(seed);
  return cond_prior_sample(gpr, y_p, rng);
}

Eigen::VectorXd cond_prior_sample(const GaussianDist& gpr,
                                  const Eigen::VectorXd& y_p, Rng& rng) {
  const Eigen::Index c = y_p.size();
  const Eigen::Index p = gpr.mean.size();
  if (gpr.factor.rows() != p || gpr.factor.cols() != p)
    throw ValidationError("cond_prior_sample: factor shape mismatch");
  Eigen::VectorXd out(c + p);
  out.head(c) = y_p + standard_normal(rng, c);
  out.tail(p) = gpr.mean + gpr.factor * standard_normal(rng, p);
  return out;
}

}  // namespace tsflow::gp
