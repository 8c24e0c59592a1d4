#pragma once

// Estimation module: per-window moments, empirical VaR/CVaR, and the Euler
// risk decomposition used by risk-parity solvers.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "folio/common.hpp"

namespace folio {

/// Sample moments of one K×N estimation window.
struct MomentEstimates {
  VectorXd mu;        // column means of daily log returns
  MatrixXd sigma_mat; // sample covariance, 1/(K-1), symmetrized, PSD-repaired
  VectorXd vols;      // sqrt of the covariance diagonal
  bool psd_repaired = false;  // set when negative eigenvalues were clipped
};

constexpr double kPsdEpsilon = 1e-10;

/// μ = column means; Σ = 1/(K−1) sample covariance symmetrized as (Σ+Σᵀ)/2.
/// If the symmetrized matrix has an eigenvalue below −ε_psd, eigenvalues are
/// clipped at zero and the repair is flagged.
inline MomentEstimates estimate_moments(const MatrixXd& window) {
  const Eigen::Index K = window.rows();
  const Eigen::Index N = window.cols();
  if (K < 2) throw ValidationError("estimate_moments requires at least 2 rows");
  MomentEstimates est;
  est.mu = window.colwise().mean();
  const MatrixXd centered = window.rowwise() - est.mu.transpose();
  MatrixXd sigma = (centered.transpose() * centered) / static_cast<double>(K - 1);
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sigma);
  if (eig.eigenvalues().minCoeff() < -kPsdEpsilon) {
    const VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    sigma = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    sigma = 0.5 * (sigma + sigma.transpose()).eval();
    est.psd_repaired = true;
  }
  est.sigma_mat = std::move(sigma);
  est.vols = est.sigma_mat.diagonal().cwiseMax(0.0).cwiseSqrt();
  (void)N;
  return est;
}

struct VarCvar {
  double var = 0.0;   // positive loss at the α-quantile
  double cvar = 0.0;  // positive expected loss over the α-tail
};

/// Empirical VaR/CVaR of a return sample at tail level α ∈ (0, 0.5):
/// m = ceil(α·S) worst observations; VaR = −(m-th smallest return);
/// CVaR = −(mean of the m smallest returns).
inline VarCvar empirical_var_cvar(const VectorXd& port_returns, double alpha) {
  const Eigen::Index S = port_returns.size();
  if (!(alpha > 0.0 && alpha < 0.5)) throw ValidationError("alpha must lie in (0, 0.5)");
  if (S < static_cast<Eigen::Index>(std::ceil(1.0 / alpha)))
    throw ValidationError("empirical_var_cvar: need at least ceil(1/alpha) observations");
  const auto m = static_cast<Eigen::Index>(std::ceil(alpha * static_cast<double>(S)));
  std::vector<double> sorted(port_returns.data(), port_returns.data() + S);
  std::partial_sort(sorted.begin(), sorted.begin() + m, sorted.end());
  double tail_sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) tail_sum += sorted[static_cast<std::size_t>(i)];
  VarCvar out;
  out.var = -sorted[static_cast<std::size_t>(m - 1)];
  out.cvar = -tail_sum / static_cast<double>(m);
  return out;
}

/// Euler decomposition σᵢ(w) = wᵢ·(Σw)ᵢ/σ_P(w); the contributions sum to the
/// portfolio volatility σ_P(w) = √(wᵀΣw).
inline VectorXd risk_contributions(const VectorXd& w, const MatrixXd& sigma_mat) {
  const VectorXd sigma_w = sigma_mat * w;
  const double variance = w.dot(sigma_w);
  if (!(variance > 0.0))
    throw ValidationError("risk_contributions: portfolio volatility is zero");
  const double vol = std::sqrt(variance);
  return (w.array() * sigma_w.array() / vol).matrix();
}

}  // namespace folio
