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

#ifndef TSFLOW_GP_HPP_
#define TSFLOW_GP_HPP_

// Gaussian-process priors over a window of normalized time points: kernels,
// covariance factorization, sampling, log-density/score, and GP regression.

#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Core>

#include "tsflow/random.hpp"

namespace tsflow::gp {

enum class KernelKind { kIsotropic, kSE, kOU, kPE };

KernelKind parse_kernel_kind(std::string_view name);
std::string_view to_string(KernelKind kind);

inline constexpr double kDefaultWhiteNoise = 1e-6;
inline constexpr double kMaxJitter = 1e-2;

// SE: sqrt(1/2), OU: 1, PE: sqrt(2). Isotropic ignores the length scale.
double default_length_scale(KernelKind kind);

struct KernelSpec {
  KernelKind kind = KernelKind::kOU;
  double length_scale = 1.0;
  double white_noise = kDefaultWhiteNoise;

  static KernelSpec with_defaults(KernelKind kind);
  void validate() const;
};

// t_i * pi / period: one full period spans pi.
Eigen::VectorXd normalize_times(std::span<const std::int64_t> indices,
                                int period);
// Times of indices first, first+1, ..., first+count-1.
Eigen::VectorXd normalize_times(std::int64_t first, int count, int period);

// Kernel value at lag d (no white-noise term).
double kernel_eval(const KernelSpec& spec, double d);

// K(a_i, b_j) without white noise.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b);

// Covariance with its lower Cholesky factor. `jitter` is the diagonal term
// that was actually added (white noise, or the escalated value).
struct CovMatrix {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd chol;
  double jitter = 0.0;

  Eigen::Index size() const { return sigma.rows(); }
};

// Sigma_ij = K(t_i - t_j) + white_noise * delta_ij. On a failed Cholesky the
// diagonal term is raised tenfold (from at least 1e-6) up to 1e-2.
CovMatrix build_cov(const KernelSpec& spec, const Eigen::VectorXd& times);

// Lower Cholesky of a symmetric matrix with the same jitter escalation.
// Returns the jitter used.
double factorize_with_jitter(const Eigen::MatrixXd& base, double jitter,
                             Eigen::MatrixXd& chol, Eigen::MatrixXd* sigma);

// Rows are independent draws L z, z ~ N(0, I).
Eigen::MatrixXd gp_sample(const CovMatrix& cov, int count, std::uint64_t seed);
Eigen::MatrixXd gp_sample(const CovMatrix& cov, int count, Rng& rng);

struct LogDensity {
  double logp = 0.0;
  Eigen::VectorXd score;
};

LogDensity gp_logpdf_score(const CovMatrix& cov, const Eigen::VectorXd& x);

// -Sigma^{-1} X for every column of X.
Eigen::MatrixXd gp_score(const CovMatrix& cov, const Eigen::MatrixXd& x);

// N(mean, factor factor^T). `factor` is lower triangular whenever a Cholesky
// of the covariance exists, otherwise the clipped eigen square root.
struct GaussianDist {
  Eigen::VectorXd mean;
  Eigen::MatrixXd factor;
};

// GP regression of the future block on the past block:
//   mean = S_fp S_pp^-1 y_p,  cov = S_ff - S_fp S_pp^-1 S_pf.
// Everything except the mean is independent of y_p and computed once.
class GprConditioner {
 public:
  GprConditioner(const KernelSpec& spec, const Eigen::VectorXd& past_times,
                 const Eigen::VectorXd& future_times);

  GaussianDist condition(const Eigen::VectorXd& y_p) const;

  // S_fp S_pp^-1, shape [P x C].
  const Eigen::MatrixXd& gain() const { return gain_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  const Eigen::MatrixXd& factor() const { return factor_; }
  Eigen::Index past_size() const { return gain_.cols(); }
  Eigen::Index future_size() const { return gain_.rows(); }

 private:
  Eigen::MatrixXd gain_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
};

GaussianDist gpr_condition(const KernelSpec& spec,
                           const Eigen::VectorXd& past_times,
                           const Eigen::VectorXd& future_times,
                           const Eigen::VectorXd& y_p);

// (x_p, x_f) with x_p ~ N(y_p, I) and x_f ~ gpr, independently.
Eigen::VectorXd cond_prior_sample(const GaussianDist& gpr,
                                  const Eigen::VectorXd& y_p,
                                  std::uint64_t seed);
Eigen::VectorXd cond_prior_sample(const GaussianDist& gpr,
                                  const Eigen::VectorXd& y_p, Rng& rng);

}  // namespace tsflow::gp

#endif  // TSFLOW_GP_HPP_
