#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "markent/errors.hpp"
#include "markent/kernel.hpp"
#include "markent/manifold.hpp"
#include "markent/math.hpp"
#include "markent/point_process.hpp"

namespace markent {

// Estimator configuration for one window B'. Bandwidth condition (b1):
// 0 < b < r0 < injectivity radius, so the curvature correction stays bounded.
struct KdeConfig {
  KernelProfile kernel;
  double bandwidth = 0.0;
  double r0 = 0.0;
  double lambda = 0.0;
  BoxWindow window;  // B'

  void validate(const Manifold& m) const {
    if (kernel.dim() != m.dim()) throw input_error("KdeConfig: kernel dimension != manifold dimension");
    if (!(bandwidth > 0.0 && bandwidth < r0 && r0 < m.injectivity_radius()))
      throw input_error("KdeConfig: need 0 < b < r0 < injectivity radius");
    if (!(lambda > 0.0)) throw input_error("KdeConfig: lambda must be positive");
    if (!(window.volume() > 0.0)) throw input_error("KdeConfig: window must have positive volume");
  }
};

// Kernel weight F(eta, xi) = K(d(eta,xi)/b) / (b^p theta_eta(xi)); zero
// outside the geodesic ball of radius b.
inline double fn_weight(const Manifold& m, const KernelProfile& kernel, double b, const Point& eta,
                        const Point& xi) {
  const double r = m.distance(eta, xi);
  if (r >= b) return 0.0;
  return kernel.evaluate(r / b) / (math::ipow(b, m.dim()) * m.volume_density(eta, xi));
}

// C_theta = sup over base points and r < r0 of 1/theta. Closed form on the
// supported manifolds: (r0/sin r0)^{p-1} on spheres, 1 on flat ones.
inline double c_theta(const Manifold& m, double r0) {
  if (!(r0 > 0.0 && r0 < m.injectivity_radius()))
    throw input_error("c_theta: r0 must lie in (0, injectivity radius)");
  if (m.kind() != ManifoldKind::Sphere) return 1.0;
  return math::ipow(1.0 / math::sinc_ratio(r0), m.dim() - 1);
}

inline double bias_bound(double b, double c2, double k2) {
  if (b < 0.0 || c2 < 0.0 || k2 < 0.0) throw input_error("bias_bound: negative input");
  return b * b * c2 * k2;
}

// Mean integrated squared error bound: variance term + squared-bias term.
inline double l2_bound(double c_th, double omega_p, double k0, double lambda, double bprime_vol,
                       double b, int p, double c2, double k2, double manifold_vol) {
  const double variance_term = c_th * omega_p * k0 * k0 / (lambda * bprime_vol * math::ipow(b, p));
  const double bias_term = math::ipow(b, 4) * c2 * c2 * k2 * k2 * manifold_vol;
  return variance_term + bias_term;
}

// Unique minimizer of the L2 bound in b. Degenerate when c2 = 0 (no bias
// term): callers fall back to b = |B'|^{-1/(p+4)}.
inline double optimal_bandwidth_density(int p, double c_th, double omega_p, double k0, double c2,
                                        double k2, double manifold_vol, double lambda,
                                        double bprime_vol) {
  if (!(c2 > 0.0))
    throw degenerate_error(
        "optimal_bandwidth_density: C2 = 0 has no interior minimum; use the fallback "
        "b = |B'|^(-1/(p+4))");
  const double num = p * c_th * omega_p * k0 * k0;
  const double den = 4.0 * c2 * c2 * k2 * k2 * manifold_vol * lambda * bprime_vol;
  return std::pow(num / den, 1.0 / (p + 4));
}

inline double fallback_bandwidth_density(double bprime_vol, int p) {
  return std::pow(bprime_vol, -1.0 / (p + 4));
}

struct ConsistencySchedule {
  double bandwidth = 0.0;
  double bprime_side = 0.0;
  double bprime_vol = 0.0;
};

// Almost-sure consistency schedule: b_n = n^{-(1+delta)/4} / log(n+1) and the
// minimal integer-sided cube with b_n^p |B'_n| > n^{1+delta}.
inline ConsistencySchedule as_consistency_schedule(double delta, long n, int p, int d = 1) {
  if (!(delta > 0.0) || n < 1 || p < 1 || d < 1)
    throw input_error("as_consistency_schedule: bad parameters");
  ConsistencySchedule s;
  s.bandwidth = std::pow(static_cast<double>(n), -(1.0 + delta) / 4.0) /
                std::log(static_cast<double>(n) + 1.0);
  const double threshold = std::pow(static_cast<double>(n), 1.0 + delta) /
                           math::ipow(s.bandwidth, p);
  s.bprime_side = std::floor(std::pow(threshold, 1.0 / d)) + 1.0;
  s.bprime_vol = math::ipow(s.bprime_side, d);
  return s;
}

// Inputs echoed next to every computed bound so each report is recomputable.
struct BoundReport {
  double bias_bound = 0.0;
  double variance_bound = 0.0;  // integrated E[F^2] bound, C_theta omega_p K0^2 / b^p
  double l2_bound = 0.0;
  double entropy_l2_bound = 0.0;
  double c_theta = 0.0, c2 = 0.0, k0 = 0.0, k2 = 0.0;
  double manifold_vol = 0.0, lambda = 0.0, bn_vol = 0.0, bprime_vol = 0.0, bandwidth = 0.0;
  int p = 0;
  double l1 = 0.0, l2 = 0.0;
};

// ---------------------------------------------------------------------------
// Evaluation engine.
//
// The kernel has compact support b on the mark space and the estimator's
// indicator restricts locations to a (possibly translated) box, so pairs are
// bucketed by (location cell, mark cell): location cells have the side of B'
// (a translate overlaps at most 2 per axis), mark cells come from an angular
// grid (circle/torus) or a Euclidean grid over the embedding cube (spheres)
// sized to the chord of the bandwidth ball. A query touches only the buckets
// that can intersect the query box x ball; every candidate is then checked
// exactly, so the result equals the naive sum up to summation order.
// Enumeration order is fixed (lexicographic cells, ascending indices), which
// keeps evaluations deterministic for any thread count.
// ---------------------------------------------------------------------------
class KdeEngine {
 public:
  KdeEngine(const Manifold& m, const MppSample& sample, const KdeConfig& cfg)
      : m_(m), sample_(&sample), cfg_(cfg) {
    cfg_.validate(m);
    if (sample.dim != cfg_.window.dim())
      throw input_error("KdeEngine: sample and window dimension mismatch");
    if (sample.mark_size != m.point_size())
      throw input_error("KdeEngine: sample mark size does not match the manifold");
    b_pow_p_ = math::ipow(cfg_.bandwidth, m.dim());
    inv_norm_ = 1.0 / (cfg_.lambda * cfg_.window.volume());
    build_location_grid();
    build_mark_grid();
    bucket();
  }

  const KdeConfig& config() const { return cfg_; }

  // f-hat with the window B' itself (no translation).
  double evaluate(const Point& eta, std::ptrdiff_t exclude = -1) const {
    static const std::array<double, 3> zero{};
    return evaluate_translated(std::span<const double>(zero.data(), cfg_.window.dim()), eta,
                               exclude);
  }

  // f-hat with indicator on B' + shift. The translated window must be fully
  // inside the sample window (otherwise the simulation was not dilated enough).
  double evaluate_translated(std::span<const double> shift, const Point& eta,
                             std::ptrdiff_t exclude = -1) const {
    const int d = sample_->dim;
    std::array<double, 3> lo{}, hi{};
    for (int k = 0; k < d; ++k) {
      lo[k] = cfg_.window.origin[k] + shift[k];
      hi[k] = lo[k] + cfg_.window.side[k];
      const double wlo = sample_->window.origin[k];
      const double whi = wlo + sample_->window.side[k];
      if (lo[k] < wlo - 1e-9 || hi[k] > whi + 1e-9)
        throw input_error("kde: translated window leaves the sample window (insufficient dilation)");
    }

    std::array<int, 3> c0{}, c1{};
    for (int k = 0; k < d; ++k) {
      c0[k] = std::clamp(cell_of(lo[k], k), 0, loc_cells_[k] - 1);
      c1[k] = std::clamp(cell_of(hi[k], k), 0, loc_cells_[k] - 1);
    }

    std::array<std::array<int, 4>, 4> mark_ranges;  // per mark axis: lo, hi (inclusive), n, wrap
    const int mark_axes = mark_cell_ranges(eta, mark_ranges);

    double sum = 0.0;
    std::array<int, 3> lc{};
    for (lc[0] = c0[0]; lc[0] <= c1[0]; ++lc[0]) {
      for (lc[1] = (d > 1 ? c0[1] : 0); lc[1] <= (d > 1 ? c1[1] : 0); ++lc[1]) {
        for (lc[2] = (d > 2 ? c0[2] : 0); lc[2] <= (d > 2 ? c1[2] : 0); ++lc[2]) {
          std::uint64_t loc_lin = 0;
          for (int k = 0; k < d; ++k) loc_lin = loc_lin * loc_cells_[k] + lc[k];
          sum += scan_mark_cells(loc_lin, mark_ranges, mark_axes, lo, hi, eta, exclude);
        }
      }
    }
    return sum * inv_norm_;
  }

 private:
  int cell_of(double x, int axis) const {
    return static_cast<int>(std::floor((x - grid_origin_[axis]) / loc_cell_side_[axis]));
  }

  void build_location_grid() {
    const int d = sample_->dim;
    for (int k = 0; k < d; ++k) {
      grid_origin_[k] = sample_->window.origin[k];
      loc_cell_side_[k] = cfg_.window.side[k];
      loc_cells_[k] =
          std::max(1, static_cast<int>(std::floor(sample_->window.side[k] / loc_cell_side_[k])) + 1);
    }
    for (int k = d; k < 3; ++k) loc_cells_[k] = 1;
  }

  void build_mark_grid() {
    const double b = cfg_.bandwidth;
    switch (m_.kind()) {
      case ManifoldKind::Circle:
        mark_bins_[0] = std::clamp(static_cast<int>(std::floor(math::two_pi / b)), 1, 1024);
        mark_axes_n_ = 1;
        break;
      case ManifoldKind::FlatTorus2:
        mark_bins_[0] = mark_bins_[1] =
            std::clamp(static_cast<int>(std::floor(math::two_pi / b)), 1, 256);
        mark_axes_n_ = 2;
        break;
      case ManifoldKind::Sphere: {
        chord_ = 2.0 * std::sin(std::min(b, math::pi) / 2.0);
        const int cells = std::clamp(static_cast<int>(std::floor(2.0 / chord_)), 1, 48);
        mark_axes_n_ = m_.dim() + 1;
        for (int k = 0; k < mark_axes_n_; ++k) mark_bins_[k] = cells;
        break;
      }
    }
    total_mark_cells_ = 1;
    for (int k = 0; k < mark_axes_n_; ++k) total_mark_cells_ *= mark_bins_[k];
  }

  std::uint64_t mark_cell_of(const Point& x) const {
    std::uint64_t lin = 0;
    if (m_.kind() == ManifoldKind::Sphere) {
      for (int k = 0; k < mark_axes_n_; ++k) {
        const double h = 2.0 / mark_bins_[k];
        int c = static_cast<int>(std::floor((x[k] + 1.0) / h));
        c = std::clamp(c, 0, mark_bins_[k] - 1);
        lin = lin * mark_bins_[k] + c;
      }
    } else {
      for (int k = 0; k < mark_axes_n_; ++k) {
        const double h = math::two_pi / mark_bins_[k];
        int c = static_cast<int>(std::floor(x[k] / h));
        c = std::clamp(c, 0, mark_bins_[k] - 1);
        lin = lin * mark_bins_[k] + c;
      }
    }
    return lin;
  }

  // Candidate mark-cell index ranges covering the bandwidth ball around eta.
  // Angular axes wrap; embedding axes clip.
  int mark_cell_ranges(const Point& eta, std::array<std::array<int, 4>, 4>& out) const {
    if (m_.kind() == ManifoldKind::Sphere) {
      for (int k = 0; k < mark_axes_n_; ++k) {
        const double h = 2.0 / mark_bins_[k];
        int lo = static_cast<int>(std::floor((eta[k] - chord_ + 1.0) / h));
        int hi = static_cast<int>(std::floor((eta[k] + chord_ + 1.0) / h));
        out[k] = {std::clamp(lo, 0, mark_bins_[k] - 1), std::clamp(hi, 0, mark_bins_[k] - 1),
                  mark_bins_[k], 0};
      }
    } else {
      for (int k = 0; k < mark_axes_n_; ++k) {
        const double h = math::two_pi / mark_bins_[k];
        const int span = static_cast<int>(std::floor(cfg_.bandwidth / h)) + 1;
        const int c = static_cast<int>(std::floor(eta[k] / h));
        if (2 * span + 1 >= mark_bins_[k])
          out[k] = {0, mark_bins_[k] - 1, mark_bins_[k], 0};
        else
          out[k] = {c - span, c + span, mark_bins_[k], 1};  // wrapping range
      }
    }
    return mark_axes_n_;
  }

  void bucket() {
    const std::size_t n = sample_->size();
    std::vector<std::pair<std::uint64_t, std::uint32_t>> entries(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = sample_->location(i);
      std::uint64_t loc_lin = 0;
      for (int k = 0; k < sample_->dim; ++k) {
        const int c = std::clamp(cell_of(y[k], k), 0, loc_cells_[k] - 1);
        loc_lin = loc_lin * loc_cells_[k] + c;
      }
      entries[i] = {loc_lin * total_mark_cells_ + mark_cell_of(sample_->mark_point(i)),
                    static_cast<std::uint32_t>(i)};
    }
    std::sort(entries.begin(), entries.end());
    idx_.resize(n);
    keys_.clear();
    offsets_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      idx_[i] = entries[i].second;
      if (i == 0 || entries[i].first != entries[i - 1].first) {
        keys_.push_back(entries[i].first);
        offsets_.push_back(i);
      }
    }
    offsets_.push_back(n);
  }

  double scan_mark_cells(std::uint64_t loc_lin, const std::array<std::array<int, 4>, 4>& ranges,
                         int axes, const std::array<double, 3>& lo, const std::array<double, 3>& hi,
                         const Point& eta, std::ptrdiff_t exclude) const {
    double sum = 0.0;
    std::array<int, 4> it{};
    for (int k = 0; k < axes; ++k) it[k] = ranges[k][0];
    for (;;) {
      std::uint64_t mark_lin = 0;
      for (int k = 0; k < axes; ++k) {
        int c = it[k];
        if (ranges[k][3]) {  // wrap
          c %= ranges[k][2];
          if (c < 0) c += ranges[k][2];
        }
        mark_lin = mark_lin * ranges[k][2] + c;
      }
      sum += scan_bucket(loc_lin * total_mark_cells_ + mark_lin, lo, hi, eta, exclude);
      int k = axes - 1;
      for (; k >= 0; --k) {
        if (++it[k] <= ranges[k][1]) break;
        it[k] = ranges[k][0];
      }
      if (k < 0) break;
    }
    return sum;
  }

  double scan_bucket(std::uint64_t key, const std::array<double, 3>& lo,
                     const std::array<double, 3>& hi, const Point& eta,
                     std::ptrdiff_t exclude) const {
    const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return 0.0;
    const std::size_t bucket = static_cast<std::size_t>(it - keys_.begin());
    const int d = sample_->dim;
    double sum = 0.0;
    for (std::size_t j = offsets_[bucket]; j < offsets_[bucket + 1]; ++j) {
      const std::uint32_t i = idx_[j];
      if (static_cast<std::ptrdiff_t>(i) == exclude) continue;
      const double* y = sample_->loc.data() + static_cast<std::size_t>(i) * d;
      bool inside = true;
      for (int k = 0; k < d; ++k)
        if (!(y[k] >= lo[k] && y[k] < hi[k])) {
          inside = false;
          break;
        }
      if (!inside) continue;
      const Point xi = sample_->mark_point(i);
      const double r = m_.distance(eta, xi);
      if (r >= cfg_.bandwidth) continue;
      sum += cfg_.kernel.evaluate(r / cfg_.bandwidth) / (b_pow_p_ * m_.volume_density(eta, xi));
    }
    return sum;
  }

  Manifold m_;
  const MppSample* sample_;
  KdeConfig cfg_;
  double b_pow_p_ = 0.0, inv_norm_ = 0.0, chord_ = 0.0;
  std::array<double, 3> grid_origin_{}, loc_cell_side_{};
  std::array<int, 3> loc_cells_{};
  std::array<int, 4> mark_bins_{};
  int mark_axes_n_ = 0;
  std::uint64_t total_mark_cells_ = 1;
  std::vector<std::uint64_t> keys_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> idx_;
};

// One-shot conveniences (experiments and hot loops hold a KdeEngine instead).
inline double kde_evaluate(const Manifold& m, const MppSample& sample, const KdeConfig& cfg,
                           const Point& eta) {
  if (!sample.window.contains_box(cfg.window))
    throw input_error("kde_evaluate: estimator window not contained in the sample window");
  return KdeEngine(m, sample, cfg).evaluate(eta);
}

inline double kde_translated(const Manifold& m, const MppSample& sample, const KdeConfig& cfg,
                             std::span<const double> shift, const Point& eta) {
  return KdeEngine(m, sample, cfg).evaluate_translated(shift, eta);
}

}  // namespace markent
