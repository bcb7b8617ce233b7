#include "mmtomo/nonlocal.hpp"

#include <algorithm>
#include <cmath>

#include "mmtomo/parallel.hpp"

namespace mmt::nonlocal {

namespace {

// Cap for the intensity likelihood-ratio term; reached only when one side of
// a pair is exactly zero (synthetic noiseless scenes).
constexpr double kDissimCap = 50.0;
constexpr double kLn4 = 1.3862943611198906188;

// ln((x+y)^2 / (4xy)) for a pair of single-look intensities.
inline double intensity_glr(double x, double y, double lx, double ly) {
  if (x == y) return 0.0;
  if (x <= 0.0 || y <= 0.0) return kDissimCap;
  double v = 2.0 * std::log(x + y) - kLn4 - lx - ly;
  return v < kDissimCap ? v : kDissimCap;
}

// Per-layer channel views with precomputed logs and unit interferogram.
struct LayerView {
  std::vector<double> i1, i2, li1, li2, ure, uim;
};

std::vector<LayerView> precompute_views(const sim::InterferogramStack& stack) {
  const int w = stack.width();
  const int h = stack.height();
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<LayerView> views(stack.count());
  for (int layer = 0; layer < stack.count(); ++layer) {
    auto& v = views[layer];
    v.i1.resize(n);
    v.i2.resize(n);
    v.li1.resize(n);
    v.li2.resize(n);
    v.ure.resize(n);
    v.uim.resize(n);
    const auto& L = stack.layer(layer);
    for (std::size_t i = 0; i < n; ++i) {
      double a = L.intensity1[i];
      double b = L.intensity2[i];
      v.i1[i] = a;
      v.i2[i] = b;
      v.li1[i] = a > 0.0 ? std::log(a) : 0.0;
      v.li2[i] = b > 0.0 ? std::log(b) : 0.0;
      cplx g(L.interferogram[i]);
      double mag = std::abs(g);
      if (mag > 0.0) {
        v.ure[i] = g.real() / mag;
        v.uim[i] = g.imag() / mag;
      } else {
        v.ure[i] = 0.0;
        v.uim[i] = 0.0;
      }
    }
  }
  return views;
}

inline double point_dissim(const std::vector<LayerView>& views, std::size_t p,
                           std::size_t q, double phase_weight) {
  double d = 0.0;
  for (const auto& v : views) {
    d += intensity_glr(v.i1[p], v.i1[q], v.li1[p], v.li1[q]);
    d += intensity_glr(v.i2[p], v.i2[q], v.li2[p], v.li2[q]);
    double dre = v.ure[p] - v.ure[q];
    double dim = v.uim[p] - v.uim[q];
    d += phase_weight * (dre * dre + dim * dim);
  }
  return d;
}

inline double point_dissim_layer(const LayerView& v, std::size_t p, std::size_t q,
                                 double phase_weight) {
  double d = intensity_glr(v.i1[p], v.i1[q], v.li1[p], v.li1[q]) +
             intensity_glr(v.i2[p], v.i2[q], v.li2[p], v.li2[q]);
  double dre = v.ure[p] - v.ure[q];
  double dim = v.uim[p] - v.uim[q];
  return d + phase_weight * (dre * dre + dim * dim);
}

}  // namespace

WeightMap::WeightMap(int cx, int cy, int search_radius, int patch_radius,
                     std::vector<WeightEntry> entries)
    : cx_(cx),
      cy_(cy),
      search_radius_(search_radius),
      patch_radius_(patch_radius),
      entries_(std::move(entries)) {
  require(!entries_.empty(), ErrorKind::validation, "weight map is empty");
  double max_w = 0.0;
  double self_w = -1.0;
  double total = 0.0;
  for (const auto& e : entries_) {
    require(e.w >= 0.0 && e.w <= 1.0, ErrorKind::validation,
            "weight outside [0, 1]");
    max_w = std::max(max_w, e.w);
    total += e.w;
    if (e.x == cx_ && e.y == cy_) self_w = e.w;
  }
  require(total > 0.0, ErrorKind::validation, "weight map sums to zero");
  require(self_w >= max_w, ErrorKind::validation,
          "self weight is not the maximum");
}

double WeightMap::sum() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.w;
  return s;
}

double WeightMap::sum_squares() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.w * e.w;
  return s;
}

double WeightMap::enl() const {
  double s = sum();
  return s * s / sum_squares();
}

FilteredStack::FilteredStack(sim::InterferogramStack stack, Image<float> enl)
    : stack_(std::move(stack)), enl_(std::move(enl)) {
  require(enl_.width() == stack_.width() && enl_.height() == stack_.height(),
          ErrorKind::validation, "ENL map dimensions differ from stack");
  for (std::size_t i = 0; i < enl_.size(); ++i)
    require(enl_[i] >= 1.0f - 1e-6f, ErrorKind::validation, "ENL below one");
}

double patch_similarity(const sim::InterferogramStack& stack, int layer, int cx,
                        int cy, int sx, int sy, int patch_radius,
                        double phase_weight) {
  const auto views = precompute_views(stack);
  const auto& v = views[layer];
  const auto& img = stack.layer(layer).intensity1;
  const int w = stack.width();

  double sum = 0.0;
  int count = 0;
  for (int oy = -patch_radius; oy <= patch_radius; ++oy) {
    for (int ox = -patch_radius; ox <= patch_radius; ++ox) {
      int px = img.mirror_x(cx + ox);
      int py = img.mirror_y(cy + oy);
      int qx = img.mirror_x(sx + ox);
      int qy = img.mirror_y(sy + oy);
      std::size_t p = static_cast<std::size_t>(py) * w + px;
      std::size_t q = static_cast<std::size_t>(qy) * w + qx;
      sum += point_dissim_layer(v, p, q, phase_weight);
      ++count;
    }
  }
  return sum / count;
}

WeightMap compute_weights(const sim::InterferogramStack& stack, int cx, int cy,
                          const FilterConfig& config) {
  config.validate();
  const auto views = precompute_views(stack);
  const int w = stack.width();
  const int h = stack.height();
  const int pr = config.patch_radius;
  const int sr = config.search_radius;
  const auto& img = stack.layer(0).intensity1;
  const int count = (2 * pr + 1) * (2 * pr + 1);

  std::vector<WeightEntry> entries;
  for (int sy = std::max(0, cy - sr); sy <= std::min(h - 1, cy + sr); ++sy) {
    for (int sx = std::max(0, cx - sr); sx <= std::min(w - 1, cx + sr); ++sx) {
      double dissim = 0.0;
      for (int oy = -pr; oy <= pr; ++oy) {
        for (int ox = -pr; ox <= pr; ++ox) {
          int px = img.mirror_x(cx + ox);
          int py = img.mirror_y(cy + oy);
          int qx = img.mirror_x(sx + ox);
          int qy = img.mirror_y(sy + oy);
          dissim += point_dissim(views,
                                 static_cast<std::size_t>(py) * w + px,
                                 static_cast<std::size_t>(qy) * w + qx,
                                 config.phase_weight);
        }
      }
      double weight = std::exp(-(dissim / count) / config.bandwidth);
      entries.push_back({sx, sy, weight});
    }
  }
  return WeightMap(cx, cy, sr, pr, std::move(entries));
}

PixelEstimate apply_weights(const sim::InterferogramStack& stack, int layer,
                            const WeightMap& weights) {
  const auto& L = stack.layer(layer);
  double sw = 0.0, sw2 = 0.0, i1 = 0.0, i2 = 0.0;
  cplx ifg(0.0, 0.0);
  for (const auto& e : weights.entries()) {
    sw += e.w;
    sw2 += e.w * e.w;
    ifg += e.w * cplx(L.interferogram.at(e.x, e.y));
    i1 += e.w * L.intensity1.at(e.x, e.y);
    i2 += e.w * L.intensity2.at(e.x, e.y);
  }
  require(sw > 0.0, ErrorKind::internal, "all-zero weights in apply_weights");
  PixelEstimate out;
  out.interferogram = ifg / sw;
  out.intensity1 = i1 / sw;
  out.intensity2 = i2 / sw;
  out.enl = sw * sw / sw2;
  return out;
}

FilterParams estimate_params(const sim::InterferogramStack& stack, int layer,
                             const WeightMap& weights) {
  PixelEstimate est = apply_weights(stack, layer, weights);
  const auto& L = stack.layer(layer);
  double sw = 0.0, var = 0.0;
  for (const auto& e : weights.entries()) {
    sw += e.w;
    var += e.w * std::norm(cplx(L.interferogram.at(e.x, e.y)) - est.interferogram);
  }
  FilterParams params;
  params.psi = std::abs(est.interferogram) > 0.0 ? std::arg(est.interferogram) : 0.0;
  params.mu = 0.5 * (est.intensity1 + est.intensity2);
  params.sigma_sq = var / sw;
  return params;
}

namespace {

struct Accumulators {
  std::vector<double> sw, sw2;
  // per layer
  std::vector<std::vector<double>> ifg_re, ifg_im, i1, i2;
};

/// One filtering pass: dissimilarities from `sim_source`, averages over the
/// values of `values`. The two stacks share dimensions.
FilteredStack filter_pass(const sim::InterferogramStack& values,
                          const sim::InterferogramStack& sim_source,
                          const FilterConfig& config, int workers) {
  const int w = values.width();
  const int h = values.height();
  const int n_layers = values.count();
  const int pr = config.patch_radius;
  const int sr = config.search_radius;
  const int patch_count = (2 * pr + 1) * (2 * pr + 1);
  const std::size_t n_px = static_cast<std::size_t>(w) * h;
  const double inv_h = 1.0 / config.bandwidth;

  const auto views = precompute_views(sim_source);

  Accumulators acc;
  acc.sw.assign(n_px, 1.0);  // self weight
  acc.sw2.assign(n_px, 1.0);
  acc.ifg_re.assign(n_layers, std::vector<double>(n_px));
  acc.ifg_im.assign(n_layers, std::vector<double>(n_px));
  acc.i1.assign(n_layers, std::vector<double>(n_px));
  acc.i2.assign(n_layers, std::vector<double>(n_px));
  for (int l = 0; l < n_layers; ++l) {
    const auto& L = values.layer(l);
    for (std::size_t i = 0; i < n_px; ++i) {
      acc.ifg_re[l][i] = L.interferogram[i].real();
      acc.ifg_im[l][i] = L.interferogram[i].imag();
      acc.i1[l][i] = L.intensity1[i];
      acc.i2[l][i] = L.intensity2[i];
    }
  }

  // Scratch buffers for the per-offset sweep.
  const int pw = w + 2 * pr;
  const int ph = h + 2 * pr;
  std::vector<double> q(static_cast<std::size_t>(pw) * ph);
  std::vector<double> mid(static_cast<std::size_t>(w) * ph);
  std::vector<double> box(n_px);
  std::vector<int> mx(pw), my(ph), mxs(pw), mys(ph);
  const auto& img = values.layer(0).intensity1;  // for mirror helpers

  // Offsets from the half-space {dy > 0} U {dy == 0, dx > 0}; each pass
  // serves the offset and its negation, so every candidate pair is visited
  // exactly once.
  for (int dy = 0; dy <= sr; ++dy) {
    int dx_start = (dy == 0) ? 1 : -sr;
    for (int dx = dx_start; dx <= sr; ++dx) {
      for (int xp = 0; xp < pw; ++xp) {
        mx[xp] = img.mirror_x(xp - pr);
        mxs[xp] = img.mirror_x(xp - pr + dx);
      }
      for (int yp = 0; yp < ph; ++yp) {
        my[yp] = img.mirror_y(yp - pr);
        mys[yp] = img.mirror_y(yp - pr + dy);
      }

      // Pointwise dissimilarity on the mirror-padded domain, layers summed.
      parallel_for(static_cast<std::size_t>(ph), workers, [&](std::size_t yp) {
        double* row = &q[yp * pw];
        std::size_t base_p = static_cast<std::size_t>(my[yp]) * w;
        std::size_t base_q = static_cast<std::size_t>(mys[yp]) * w;
        for (int xp = 0; xp < pw; ++xp)
          row[xp] = point_dissim(views, base_p + mx[xp], base_q + mxs[xp],
                                 config.phase_weight);
      });

      // Horizontal then vertical moving sums over the patch footprint.
      parallel_for(static_cast<std::size_t>(ph), workers, [&](std::size_t yp) {
        const double* row = &q[yp * pw];
        double s = 0.0;
        for (int u = 0; u < 2 * pr + 1; ++u) s += row[u];
        mid[yp * w] = s;
        for (int x = 1; x < w; ++x) {
          s += row[x + 2 * pr] - row[x - 1];
          mid[yp * w + x] = s;
        }
      });
      parallel_for(static_cast<std::size_t>(w), workers, [&](std::size_t x) {
        double s = 0.0;
        for (int v = 0; v < 2 * pr + 1; ++v) s += mid[static_cast<std::size_t>(v) * w + x];
        box[x] = s;
        for (int y = 1; y < h; ++y) {
          s += mid[static_cast<std::size_t>(y + 2 * pr) * w + x] -
               mid[static_cast<std::size_t>(y - 1) * w + x];
          box[static_cast<std::size_t>(y) * w + x] = s;
        }
      });

      // Accumulate the offset and its negation.
      parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t y_) {
        const int y = static_cast<int>(y_);
        // forward: candidate s = c + (dx, dy)
        int sy = y + dy;
        if (sy >= 0 && sy < h) {
          int x_lo = std::max(0, -dx);
          int x_hi = std::min(w, w - dx);
          for (int x = x_lo; x < x_hi; ++x) {
            std::size_t c = static_cast<std::size_t>(y) * w + x;
            std::size_t s = static_cast<std::size_t>(sy) * w + (x + dx);
            double wgt = std::exp(-(box[c] / patch_count) * inv_h);
            acc.sw[c] += wgt;
            acc.sw2[c] += wgt * wgt;
            for (int l = 0; l < n_layers; ++l) {
              const auto& L = values.layer(l);
              acc.ifg_re[l][c] += wgt * L.interferogram[s].real();
              acc.ifg_im[l][c] += wgt * L.interferogram[s].imag();
              acc.i1[l][c] += wgt * L.intensity1[s];
              acc.i2[l][c] += wgt * L.intensity2[s];
            }
          }
        }
        // reverse: candidate s = c - (dx, dy); dissimilarity from box at s
        int ry = y - dy;
        if (ry >= 0 && ry < h) {
          int x_lo = std::max(0, dx);
          int x_hi = std::min(w, w + dx);
          for (int x = x_lo; x < x_hi; ++x) {
            std::size_t c = static_cast<std::size_t>(y) * w + x;
            std::size_t s = static_cast<std::size_t>(ry) * w + (x - dx);
            double wgt = std::exp(-(box[s] / patch_count) * inv_h);
            acc.sw[c] += wgt;
            acc.sw2[c] += wgt * wgt;
            for (int l = 0; l < n_layers; ++l) {
              const auto& L = values.layer(l);
              acc.ifg_re[l][c] += wgt * L.interferogram[s].real();
              acc.ifg_im[l][c] += wgt * L.interferogram[s].imag();
              acc.i1[l][c] += wgt * L.intensity1[s];
              acc.i2[l][c] += wgt * L.intensity2[s];
            }
          }
        }
      });
    }
  }

  std::vector<sim::StackLayer> out_layers;
  out_layers.reserve(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    sim::StackLayer layer{Image<cplxf>(w, h), Image<float>(w, h), Image<float>(w, h)};
    for (std::size_t i = 0; i < n_px; ++i) {
      double inv_sw = 1.0 / acc.sw[i];
      layer.interferogram[i] =
          cplxf(static_cast<float>(acc.ifg_re[l][i] * inv_sw),
                static_cast<float>(acc.ifg_im[l][i] * inv_sw));
      layer.intensity1[i] = static_cast<float>(acc.i1[l][i] * inv_sw);
      layer.intensity2[i] = static_cast<float>(acc.i2[l][i] * inv_sw);
    }
    out_layers.push_back(std::move(layer));
  }
  Image<float> enl(w, h);
  for (std::size_t i = 0; i < n_px; ++i)
    enl[i] = static_cast<float>(acc.sw[i] * acc.sw[i] / acc.sw2[i]);

  sim::InterferogramStack out(std::move(out_layers), values.geometry());
  out.pixel_spacing_range = values.pixel_spacing_range;
  out.pixel_spacing_azimuth = values.pixel_spacing_azimuth;
  out.incidence_deg = values.incidence_deg;
  return FilteredStack(std::move(out), std::move(enl));
}

}  // namespace

FilteredStack wmle_filter(const sim::InterferogramStack& stack,
                          const FilterConfig& config, int workers) {
  config.validate();
  FilteredStack result = filter_pass(stack, stack, config, workers);
  FilterConfig refine = config;
  refine.patch_radius = config.refine_patch_radius;
  refine.bandwidth = config.refine_bandwidth;
  for (int it = 1; it < config.iterations; ++it)
    result = filter_pass(stack, result.stack(), refine, workers);
  return result;
}

}  // namespace mmt::nonlocal
