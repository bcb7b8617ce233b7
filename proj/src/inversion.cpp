#include "mmtomo/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mmtomo/parallel.hpp"

namespace mmt::inv {

namespace {

double objective_value(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& g,
                       const Eigen::VectorXcd& x, double lambda) {
  double fit = (A * x - g).squaredNorm();
  double l1 = 0.0;
  for (int i = 0; i < x.size(); ++i) l1 += std::abs(x(i));
  return fit + lambda * l1;
}

Eigen::VectorXcd soft_threshold(const Eigen::VectorXcd& v, double thr) {
  Eigen::VectorXcd out(v.size());
  for (int i = 0; i < v.size(); ++i) {
    double mag = std::abs(v(i));
    out(i) = mag > thr ? v(i) * ((mag - thr) / mag) : cplx(0.0, 0.0);
  }
  return out;
}

/// Golden-section maximizer of f on [lo, hi].
template <typename F>
double golden_max(F&& f, double lo, double hi, int iterations = 60) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iterations; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

struct TwoFit {
  Eigen::Vector2cd amplitudes;
  double rss = 0.0;
  bool ok = false;
};

TwoFit fit_two(const geometry::SensingMatrix& R, const Eigen::VectorXcd& g,
               double s1, double s2) {
  TwoFit out;
  Eigen::VectorXcd r1 = R.steering(s1);
  Eigen::VectorXcd r2 = R.steering(s2);
  const double n = static_cast<double>(r1.size());
  cplx cross = r1.dot(r2);  // r1^H r2
  double det = n * n - std::norm(cross);
  if (det <= 1e-9 * n * n) return out;  // near-collinear steering vectors
  cplx b1 = r1.dot(g);
  cplx b2 = r2.dot(g);
  out.amplitudes(0) = (n * b1 - cross * b2) / det;
  out.amplitudes(1) = (n * b2 - std::conj(cross) * b1) / det;
  out.rss = (g - r1 * out.amplitudes(0) - r2 * out.amplitudes(1)).squaredNorm();
  out.ok = true;
  return out;
}

}  // namespace

ProfileEstimate svd_estimate(const MeasurementVector& g,
                             const geometry::SensingMatrix& R,
                             const RegularizationSpec& prior) {
  require(prior.prior_variance > 0.0, ErrorKind::validation,
          "prior variance must be positive");
  require(g.noise_level >= 0.0, ErrorKind::validation,
          "noise level must be nonnegative");
  require(g.values.allFinite(), ErrorKind::validation,
          "measurement vector is not finite");
  const auto& A = R.entries();
  require(g.values.size() == A.rows(), ErrorKind::validation,
          "measurement length does not match sensing matrix");

  // Dual N x N form: x = tau R^H (tau R R^H + sigma^2 I)^-1 g.
  const double tau = prior.prior_variance;
  Eigen::MatrixXcd M = tau * (A * A.adjoint());
  M.diagonal().array() += g.noise_level;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(M);
  double lo = eig.eigenvalues().minCoeff();
  double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > prior.condition_limit) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "ill-conditioned normal system: condition number %.3e",
                  lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
    fail(ErrorKind::conditioning, buf);
  }

  Eigen::VectorXcd dual =
      eig.eigenvectors() *
      (eig.eigenvalues().cwiseInverse().asDiagonal() *
       (eig.eigenvectors().adjoint() * g.values));
  ProfileEstimate out;
  out.solution = tau * (A.adjoint() * dual);
  out.profile = out.solution.cwiseAbs();
  out.method = ProfileMethod::svd;
  out.residual_norm = (A * out.solution - g.values).norm();
  return out;
}

ProfileEstimate cs_estimate(const MeasurementVector& g,
                            const geometry::SensingMatrix& R, double lambda_reg,
                            int max_iterations, double tolerance) {
  require(lambda_reg >= 0.0, ErrorKind::validation,
          "l1 weight must be nonnegative");
  require(g.values.allFinite(), ErrorKind::validation,
          "measurement vector is not finite");
  const auto& A = R.entries();
  require(g.values.size() == A.rows(), ErrorKind::validation,
          "measurement length does not match sensing matrix");
  const int l = static_cast<int>(A.cols());

  // Gradient Lipschitz constant 2 * lambda_max(A^H A) via the small Gram.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(A * A.adjoint());
  double lip = 2.0 * eig.eigenvalues().maxCoeff();
  require(lip > 0.0, ErrorKind::validation, "degenerate sensing matrix");
  const double step = 1.0 / lip;

  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(l);
  Eigen::VectorXcd y = x;
  double t = 1.0;
  double fx = objective_value(A, g.values, x, lambda_reg);

  ProfileEstimate out;
  out.method = ProfileMethod::cs;
  out.converged = false;

  int k = 0;
  for (; k < max_iterations; ++k) {
    Eigen::VectorXcd grad = 2.0 * (A.adjoint() * (A * y - g.values));
    Eigen::VectorXcd z = soft_threshold(y - step * grad, step * lambda_reg);
    double fz = objective_value(A, g.values, z, lambda_reg);
    if (fz > fx) {
      // Monotone restart: plain proximal step from the best iterate.
      grad = 2.0 * (A.adjoint() * (A * x - g.values));
      z = soft_threshold(x - step * grad, step * lambda_reg);
      fz = objective_value(A, g.values, z, lambda_reg);
      t = 1.0;
    }
    require(fz <= fx + 1e-9 * (1.0 + std::abs(fx)), ErrorKind::internal,
            "proximal gradient objective increased");
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / t_next) * (z - x);
    double decrease = fx - fz;
    x = z;
    fx = fz;
    t = t_next;
    if (decrease <= tolerance * std::max(fx, 1e-300)) {
      out.converged = true;
      ++k;
      break;
    }
  }

  out.solution = x;
  out.profile = x.cwiseAbs();
  out.residual_norm = (A * x - g.values).norm();
  out.objective = fx;
  out.iterations = k;
  return out;
}

Eigen::VectorXd beamform_profile(const MeasurementVector& g,
                                 const geometry::SensingMatrix& R) {
  const auto& A = R.entries();
  require(g.values.size() == A.rows(), ErrorKind::validation,
          "measurement length does not match sensing matrix");
  return (A.adjoint() * g.values).cwiseAbs() / static_cast<double>(A.rows());
}

std::vector<int> extract_peaks(const Eigen::VectorXd& profile, double frac,
                               int min_separation_cells, int max_peaks) {
  const int l = static_cast<int>(profile.size());
  std::vector<int> candidates;
  for (int i = 0; i < l; ++i) {
    double v = profile(i);
    if (v <= 0.0) continue;
    if (i > 0 && profile(i - 1) > v) continue;
    if (i + 1 < l && profile(i + 1) > v) continue;
    // skip plateau duplicates: only the first sample of a flat run counts
    if (i > 0 && profile(i - 1) == v) continue;
    candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    if (profile(a) != profile(b)) return profile(a) > profile(b);
    return a < b;
  });
  std::vector<int> kept;
  if (candidates.empty()) return kept;
  double threshold = frac * profile(candidates.front());
  for (int c : candidates) {
    if (profile(c) < threshold) break;
    bool separated = true;
    for (int k : kept)
      if (std::abs(k - c) < min_separation_cells) {
        separated = false;
        break;
      }
    if (!separated) continue;
    kept.push_back(c);
    if (static_cast<int>(kept.size()) >= max_peaks) break;
  }
  return kept;
}

namespace {

struct Hypotheses {
  double rss1 = 0.0;
  double s1 = 0.0;
  double rss2 = std::numeric_limits<double>::infinity();
  double s2a = 0.0, s2b = 0.0;
  bool two_valid = false;
};

Hypotheses fit_hypotheses(const MeasurementVector& g,
                          const geometry::SensingMatrix& R,
                          const geometry::ElevationGrid& grid, int max_order) {
  Hypotheses hyp;
  const auto& A = R.entries();
  const double n = static_cast<double>(A.rows());
  const double gn2 = g.values.squaredNorm();
  const double ds = grid.spacing() > 0.0 ? grid.spacing() : 1.0;

  Eigen::VectorXcd corr = A.adjoint() * g.values;
  int l1 = 0;
  corr.cwiseAbs().maxCoeff(&l1);
  auto match1 = [&](double s) {
    return std::norm(R.steering(s).dot(g.values));
  };
  double lo = std::max(grid.front(), grid.sample(l1) - ds);
  double hi = std::min(grid.back(), grid.sample(l1) + ds);
  hyp.s1 = golden_max(match1, lo, hi);
  hyp.rss1 = gn2 - match1(hyp.s1) / n;

  if (max_order >= 2 && grid.size() >= 2) {
    // CLEAN-style initialization: strongest residual cell at least one grid
    // cell away from the first scatterer.
    Eigen::VectorXcd r1 = R.steering(hyp.s1);
    cplx a1 = r1.dot(g.values) / n;
    Eigen::VectorXcd residual = g.values - r1 * a1;
    Eigen::VectorXd bf_res = (A.adjoint() * residual).cwiseAbs();
    int l2 = -1;
    double best = -1.0;
    for (int i = 0; i < grid.size(); ++i) {
      if (std::abs(grid.sample(i) - hyp.s1) < ds) continue;
      if (bf_res(i) > best) {
        best = bf_res(i);
        l2 = i;
      }
    }
    if (l2 >= 0) {
      double s1 = hyp.s1;
      double s2 = grid.sample(l2);
      for (int sweep = 0; sweep < 3; ++sweep) {
        auto rss_s1 = [&](double s) {
          TwoFit f = fit_two(R, g.values, s, s2);
          return f.ok ? -f.rss : -std::numeric_limits<double>::infinity();
        };
        s1 = golden_max(rss_s1, std::max(grid.front(), s1 - ds),
                        std::min(grid.back(), s1 + ds));
        auto rss_s2 = [&](double s) {
          TwoFit f = fit_two(R, g.values, s1, s);
          return f.ok ? -f.rss : -std::numeric_limits<double>::infinity();
        };
        s2 = golden_max(rss_s2, std::max(grid.front(), s2 - ds),
                        std::min(grid.back(), s2 + ds));
      }
      if (std::abs(s1 - s2) >= ds) {
        TwoFit f = fit_two(R, g.values, s1, s2);
        if (f.ok) {
          hyp.rss2 = f.rss;
          hyp.s2a = s1;
          hyp.s2b = s2;
          hyp.two_valid = true;
        }
      }
    }
  }
  return hyp;
}

}  // namespace

ScattererSet select_model(const MeasurementVector& g,
                          const geometry::SensingMatrix& R,
                          const geometry::ElevationGrid& grid,
                          const SelectionConfig& config) {
  config.validate();
  const auto& A = R.entries();
  require(g.values.size() == A.rows(), ErrorKind::validation,
          "measurement length does not match sensing matrix");
  require(g.values.allFinite(), ErrorKind::validation,
          "measurement vector is not finite");
  const double n = static_cast<double>(A.rows());
  const int l = static_cast<int>(A.cols());
  const double gn2 = g.values.squaredNorm();
  const double ds = grid.spacing() > 0.0 ? grid.spacing() : 1.0;

  ScattererSet out;
  if (gn2 == 0.0) return out;  // K = 0, dark pixel

  double sigma2 = g.noise_level;
  if (sigma2 <= 0.0) sigma2 = 1e-12 * (gn2 / n) + 1e-300;

  auto penalty = [&](int order) {
    return config.penalty_multiplier * 2.0 * (3.0 * order) * std::log(2.0 * n);
  };

  Hypotheses hyp = fit_hypotheses(g, R, grid, config.max_order);

  double bic0 = 2.0 * gn2 / sigma2;
  double bic1 = config.max_order >= 1
                    ? 2.0 * hyp.rss1 / sigma2 + penalty(1)
                    : std::numeric_limits<double>::infinity();
  double bic2 = (config.max_order >= 2 && hyp.two_valid)
                    ? 2.0 * hyp.rss2 / sigma2 + penalty(2)
                    : std::numeric_limits<double>::infinity();

  int order = 0;
  double best = bic0;
  if (bic1 < best) {
    best = bic1;
    order = 1;
  }
  if (bic2 < best) {
    best = bic2;
    order = 2;
  }
  double runner_up = std::numeric_limits<double>::infinity();
  for (double b : {bic0, bic1, bic2})
    if (b > best && b < runner_up) runner_up = b;
  out.score = std::isfinite(runner_up) ? runner_up - best : 0.0;
  out.order = order;

  if (order == 1) {
    cplx a = R.steering(hyp.s1).dot(g.values) / n;
    out.scatterers[0] = {hyp.s1, std::abs(a)};
    if (out.scatterers[0].power <= 0.0) out.order = 0;
    return out;
  }
  if (order == 0) return out;

  // Multi-scatterer pixel: refine with the sparsity-driven estimate. The
  // noise-derived weight gets a scale-tied floor so noise-free measurements
  // still produce a sparse profile worth extracting peaks from.
  double s1 = hyp.s2a, s2 = hyp.s2b;
  double lambda_noise =
      config.lambda_scale * std::sqrt(sigma2 * 2.0 * std::log(std::max(2, l)) * n);
  double lambda_floor =
      1e-3 * 2.0 * (A.adjoint() * g.values).cwiseAbs().maxCoeff();
  double lambda = config.lambda_reg >= 0.0 ? config.lambda_reg
                                           : std::max(lambda_noise, lambda_floor);
  ProfileEstimate cs =
      cs_estimate(g, R, lambda, config.cs_max_iterations, config.cs_tolerance);
  out.used_cs = true;
  out.converged = cs.converged;
  std::vector<int> peaks = extract_peaks(cs.profile, config.peak_fraction, 1, 2);
  if (peaks.size() == 2) {
    s1 = grid.sample(peaks[0]);
    s2 = grid.sample(peaks[1]);
    for (int sweep = 0; sweep < 3; ++sweep) {
      auto rss_s1 = [&](double s) {
        TwoFit f = fit_two(R, g.values, s, s2);
        return f.ok ? -f.rss : -std::numeric_limits<double>::infinity();
      };
      s1 = golden_max(rss_s1, std::max(grid.front(), s1 - ds),
                      std::min(grid.back(), s1 + ds));
      auto rss_s2 = [&](double s) {
        TwoFit f = fit_two(R, g.values, s1, s);
        return f.ok ? -f.rss : -std::numeric_limits<double>::infinity();
      };
      s2 = golden_max(rss_s2, std::max(grid.front(), s2 - ds),
                      std::min(grid.back(), s2 + ds));
    }
    // Keep whichever candidate pair explains the measurement better.
    TwoFit polished = fit_two(R, g.values, s1, s2);
    bool worse = !polished.ok || std::abs(s1 - s2) < ds ||
                 (hyp.two_valid && polished.rss > hyp.rss2);
    if (worse) {
      s1 = hyp.s2a;
      s2 = hyp.s2b;
    }
  }

  TwoFit fit = fit_two(R, g.values, s1, s2);
  if (!fit.ok) {
    // Collapse to the single-scatterer solution.
    out.order = 1;
    cplx a = R.steering(hyp.s1).dot(g.values) / n;
    out.scatterers[0] = {hyp.s1, std::abs(a)};
    return out;
  }
  double p1 = std::abs(fit.amplitudes(0));
  double p2 = std::abs(fit.amplitudes(1));
  if (s1 > s2) {
    std::swap(s1, s2);
    std::swap(p1, p2);
  }
  if (p1 <= 0.0 || p2 <= 0.0 ||
      std::min(p1, p2) < config.min_power_fraction * std::max(p1, p2)) {
    out.order = 1;
    double s = p1 > p2 ? s1 : s2;
    cplx a = R.steering(s).dot(g.values) / n;
    out.scatterers[0] = {s, std::abs(a)};
    return out;
  }
  out.scatterers[0] = {s1, p1};
  out.scatterers[1] = {s2, p2};
  return out;
}

ScattererRaster invert_stack(const nonlocal::FilteredStack& filtered,
                             const geometry::ElevationGrid& grid,
                             const SelectionConfig& config, int workers,
                             InversionReport* report) {
  config.validate();
  const auto& stack = filtered.stack();
  const int w = stack.width();
  const int h = stack.height();
  const int n = stack.count();

  geometry::SensingMatrix R = geometry::build_sensing_matrix(stack.geometry(), grid);

  ScattererRaster raster(w, h);
  parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      MeasurementVector g;
      g.values.resize(n);
      double intensity_product = 0.0;
      for (int layer = 0; layer < n; ++layer) {
        const auto& L = stack.layer(layer);
        g.values(layer) = cplx(L.interferogram.at(x, y));
        intensity_product += static_cast<double>(L.intensity1.at(x, y)) *
                             L.intensity2.at(x, y);
      }
      double enl = std::max(1.0, static_cast<double>(filtered.enl().at(x, y)));
      g.noise_level = intensity_product / n / enl;
      try {
        raster.at(x, y) = select_model(g, R, grid, config);
      } catch (const Error&) {
        ScattererSet failed;
        failed.failed = true;
        raster.at(x, y) = failed;
      }
    }
  });

  if (report) {
    *report = InversionReport{};
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const auto& r = raster.at(x, y);
        if (r.failed) {
          ++report->failed_pixels;
          if (report->errors.size() < 16) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "pixel (%d, %d): inversion failed", x, y);
            report->errors.emplace_back(buf);
          }
          continue;
        }
        ++report->order_counts[r.order];
        if (r.used_cs) {
          ++report->cs_pixels;
          if (!r.converged) ++report->cs_nonconverged;
        }
      }
  }
  return raster;
}

}  // namespace mmt::inv
