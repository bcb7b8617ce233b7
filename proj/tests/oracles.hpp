// Test-only reference implementations, independent of the library's solver
// paths: plain gradient descent for the regularized least squares, coordinate
// descent for support-restricted L1 problems, exhaustive K-sparse search, and
// a 1-D grid minimizer for robust-loss objectives.

#ifndef MMTOMO_TESTS_ORACLES_HPP
#define MMTOMO_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace oracles {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using cplx = std::complex<double>;

/// Minimizes ||Rx - g||^2 / sigma2 + ||x||^2 / tau by gradient descent.
inline VectorXcd gradient_descent_ridge(const MatrixXcd& R, const VectorXcd& g,
                                        double sigma2, double tau,
                                        int max_iter = 200000,
                                        double grad_tol = 1e-12) {
  // Lipschitz bound via the Gram spectral radius.
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(R * R.adjoint());
  double lip = 2.0 * eig.eigenvalues().maxCoeff() / sigma2 + 2.0 / tau;
  double step = 1.0 / lip;
  VectorXcd x = VectorXcd::Zero(R.cols());
  for (int k = 0; k < max_iter; ++k) {
    VectorXcd grad = 2.0 * (R.adjoint() * (R * x - g)) / sigma2 + 2.0 * x / tau;
    x -= step * grad;
    if (grad.norm() < grad_tol * (1.0 + x.norm())) break;
  }
  return x;
}

inline double lasso_objective(const MatrixXcd& R, const VectorXcd& g,
                              const VectorXcd& x, double lambda) {
  double obj = (R * x - g).squaredNorm();
  for (int i = 0; i < x.size(); ++i) obj += lambda * std::abs(x(i));
  return obj;
}

/// Coordinate descent on min ||R_S a - g||^2 + lambda sum |a| for a fixed
/// support S (columns of R_S). Exact scalar prox updates.
inline VectorXcd restricted_lasso_cd(const MatrixXcd& Rs, const VectorXcd& g,
                                     double lambda, int max_sweeps = 4000,
                                     double tol = 1e-14) {
  const int k = static_cast<int>(Rs.cols());
  VectorXcd a = VectorXcd::Zero(k);
  std::vector<double> col_norm2(k);
  for (int j = 0; j < k; ++j) col_norm2[j] = Rs.col(j).squaredNorm();
  VectorXcd residual = g;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (int j = 0; j < k; ++j) {
      residual += Rs.col(j) * a(j);
      cplx rho = Rs.col(j).dot(residual);  // col^H residual
      double mag = std::abs(rho);
      double thr = lambda / 2.0;
      cplx next = mag > thr ? rho * ((mag - thr) / mag) / col_norm2[j]
                            : cplx(0.0, 0.0);
      change = std::max(change, std::abs(next - a(j)));
      a(j) = next;
      residual -= Rs.col(j) * a(j);
    }
    if (change < tol) break;
  }
  return a;
}

/// Best K-sparse lasso objective by exhaustive support enumeration (K <= 2).
inline double best_k_sparse_objective(const MatrixXcd& R, const VectorXcd& g,
                                      double lambda, int k) {
  const int l = static_cast<int>(R.cols());
  if (k <= 0) return g.squaredNorm();
  double best = std::numeric_limits<double>::infinity();
  if (k == 1) {
    for (int i = 0; i < l; ++i) {
      VectorXcd a = restricted_lasso_cd(R.col(i), g, lambda);
      VectorXcd x = VectorXcd::Zero(l);
      x(i) = a(0);
      best = std::min(best, lasso_objective(R, g, x, lambda));
    }
    return best;
  }
  for (int i = 0; i < l; ++i)
    for (int j = i + 1; j < l; ++j) {
      MatrixXcd Rs(R.rows(), 2);
      Rs.col(0) = R.col(i);
      Rs.col(1) = R.col(j);
      VectorXcd a = restricted_lasso_cd(Rs, g, lambda);
      VectorXcd x = VectorXcd::Zero(l);
      x(i) = a(0);
      x(j) = a(1);
      best = std::min(best, lasso_objective(R, g, x, lambda));
    }
  return best;
}

/// argmin over a uniform 1-D grid of an arbitrary objective.
template <typename F>
double grid_search_min(F&& objective, double lo, double hi, double step) {
  double best_x = lo;
  double best_f = objective(lo);
  for (double x = lo; x <= hi + 1e-15; x += step) {
    double f = objective(x);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }
  return best_x;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
  double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace oracles

#endif
