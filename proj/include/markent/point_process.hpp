#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "markent/errors.hpp"
#include "markent/manifold.hpp"
#include "markent/mark_density.hpp"
#include "markent/rng.hpp"

namespace markent {

// Axis-aligned half-open box  x_k in [origin_k, origin_k + side_k).
struct BoxWindow {
  std::vector<double> origin;
  std::vector<double> side;

  static BoxWindow cube(double side_length, int d, double origin_coord = 0.0) {
    if (!(side_length > 0.0) || d < 1) throw input_error("BoxWindow: bad cube parameters");
    BoxWindow w;
    w.origin.assign(d, origin_coord);
    w.side.assign(d, side_length);
    return w;
  }

  int dim() const { return static_cast<int>(side.size()); }

  double volume() const {
    double v = 1.0;
    for (double s : side) {
      if (!(s > 0.0)) throw input_error("BoxWindow: sides must be positive");
      v *= s;
    }
    return v;
  }

  bool contains(std::span<const double> x) const {
    for (int k = 0; k < dim(); ++k)
      if (!(x[k] >= origin[k] && x[k] < origin[k] + side[k])) return false;
    return true;
  }

  bool contains_box(const BoxWindow& sub) const {
    if (sub.dim() != dim()) return false;
    for (int k = 0; k < dim(); ++k) {
      if (sub.origin[k] < origin[k] - 1e-12) return false;
      if (sub.origin[k] + sub.side[k] > origin[k] + side[k] + 1e-12) return false;
    }
    return true;
  }

  BoxWindow translated(std::span<const double> shift) const {
    BoxWindow w = *this;
    for (int k = 0; k < dim(); ++k) w.origin[k] += shift[k];
    return w;
  }

  // Minkowski sum with another box anchored at its own origin: the window a
  // sample must cover so that `other + y` is observed for every y in *this.
  BoxWindow dilated_by(const BoxWindow& other) const {
    if (other.dim() != dim()) throw input_error("dilated_by: dimension mismatch");
    BoxWindow w;
    w.origin.resize(dim());
    w.side.resize(dim());
    for (int k = 0; k < dim(); ++k) {
      w.origin[k] = origin[k] + other.origin[k];
      w.side[k] = side[k] + other.side[k];
    }
    return w;
  }
};

// One realization of the marked process: locations in the window, one mark
// per location, stored flat for cache-friendly sweeps.
struct MppSample {
  int dim = 0;        // location dimension d
  int mark_size = 0;  // stored coordinates per mark
  std::vector<double> loc;   // size n * dim
  std::vector<double> mark;  // size n * mark_size
  double lambda = 0.0;
  BoxWindow window;
  std::uint64_t seed = 0;
  std::string manifold_tag;

  std::size_t size() const { return mark_size == 0 ? 0 : mark.size() / mark_size; }

  std::span<const double> location(std::size_t i) const {
    return {loc.data() + i * dim, static_cast<std::size_t>(dim)};
  }

  Point mark_point(std::size_t i) const {
    Point p{};
    for (int k = 0; k < mark_size; ++k) p[k] = mark[i * mark_size + k];
    return p;
  }
};

// Homogeneous Poisson process on the window with i.i.d. marks. Deterministic
// given (seed, parameters); locations and marks come from distinct derived
// streams.
inline MppSample simulate_mpp(double lambda, const BoxWindow& window, const MarkDensity& marks,
                              std::uint64_t seed) {
  if (!(lambda > 0.0)) throw input_error("simulate_mpp: lambda must be positive");
  const double mean_count = lambda * window.volume();
  if (mean_count > 1e9)
    throw resource_error("simulate_mpp: expected point count exceeds 1e9");

  rng::Stream root(seed);
  rng::Stream count_stream = root.derive(rng::kRoleGeneric);
  rng::Stream loc_stream = root.derive(rng::kRoleLocations);
  rng::Stream mark_stream = root.derive(rng::kRoleMarks);

  MppSample s;
  s.dim = window.dim();
  s.mark_size = marks.manifold().point_size();
  s.lambda = lambda;
  s.window = window;
  s.seed = seed;
  s.manifold_tag = marks.manifold().tag();

  const long n = count_stream.poisson(mean_count);
  s.loc.resize(static_cast<std::size_t>(n) * s.dim);
  s.mark.resize(static_cast<std::size_t>(n) * s.mark_size);
  for (long i = 0; i < n; ++i) {
    for (int k = 0; k < s.dim; ++k)
      s.loc[i * s.dim + k] = window.origin[k] + window.side[k] * loc_stream.uniform01();
    const Point m = marks.sample(mark_stream);
    for (int k = 0; k < s.mark_size; ++k) s.mark[i * s.mark_size + k] = m[k];
  }
  return s;
}

// Keep exactly the pairs with location inside `sub` (order preserved).
inline MppSample restrict(const MppSample& sample, const BoxWindow& sub) {
  if (!sample.window.contains_box(sub))
    throw input_error("restrict: sub-window not contained in the sample window");
  MppSample out;
  out.dim = sample.dim;
  out.mark_size = sample.mark_size;
  out.lambda = sample.lambda;
  out.window = sub;
  out.seed = sample.seed;
  out.manifold_tag = sample.manifold_tag;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (!sub.contains(sample.location(i))) continue;
    for (int k = 0; k < sample.dim; ++k) out.loc.push_back(sample.loc[i * sample.dim + k]);
    for (int k = 0; k < sample.mark_size; ++k)
      out.mark.push_back(sample.mark[i * sample.mark_size + k]);
  }
  return out;
}

}  // namespace markent
