#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "markent/errors.hpp"
#include "markent/io.hpp"
#include "markent/kde.hpp"
#include "markent/manifold.hpp"
#include "markent/mark_density.hpp"
#include "markent/math.hpp"
#include "markent/stats.hpp"

namespace markent {

struct Assertion {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentResult {
  io::json report;
  std::string rows_csv;
  std::string qq_csv;
  std::vector<Assertion> assertions;
  double wall_seconds = 0.0;

  bool all_pass() const {
    for (const auto& a : assertions)
      if (!a.pass) return false;
    return true;
  }
};

namespace detail {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_ = clock::now();
};

inline void add_assert(std::vector<Assertion>& out, const std::string& name, bool pass,
                       double value, double threshold, std::string detail = {}) {
  out.push_back({name, pass, value, threshold, std::move(detail)});
}

inline io::json assertions_json(const std::vector<Assertion>& as) {
  io::json arr = io::json::array();
  for (const auto& a : as) {
    io::json j;
    j["name"] = a.name;
    j["pass"] = a.pass;
    j["value"] = a.value;
    j["threshold"] = a.threshold;
    if (!a.detail.empty()) j["detail"] = a.detail;
    arr.push_back(j);
  }
  return arr;
}

// --- quadrature oracles over geodesic balls --------------------------------
//
// Textbook parametrizations anchored at a canonical pole; the integrand
// (fn_weight, volume_density) is called as a black box, so these integrals
// probe the geometry code rather than restating it.

inline Point canonical_pole(const Manifold& m) {
  Point p{};
  switch (m.kind()) {
    case ManifoldKind::Circle: p[0] = 0.0; break;
    case ManifoldKind::FlatTorus2: p[0] = math::pi; p[1] = math::pi; break;
    case ManifoldKind::Sphere: p[m.dim()] = 1.0; break;
  }
  return p;
}

// Integral over the geodesic ball B(pole, radius) of g(z) against the
// Riemannian measure, written in the native chart of each space.
template <typename G>
double ball_integral_at_pole(const Manifold& m, double radius, int n, G&& g) {
  const Point pole = canonical_pole(m);
  switch (m.kind()) {
    case ManifoldKind::Circle:
      return math::integrate_gl(
          [&](double t) {
            Point z{math::wrap_angle(pole[0] + t), 0, 0, 0};
            return g(z);
          },
          -radius, radius, n);
    case ManifoldKind::FlatTorus2: {
      // polar coordinates in the flat chart (radius < pi: no wrap)
      return math::integrate_gl(
          [&](double r) {
            double s = 0.0;
            const int nphi = 128;
            for (int j = 0; j < nphi; ++j) {
              const double phi = (j + 0.5) * math::two_pi / nphi;
              Point z{math::wrap_angle(pole[0] + r * std::cos(phi)),
                      math::wrap_angle(pole[1] + r * std::sin(phi)), 0, 0};
              s += g(z);
            }
            return r * s * math::two_pi / nphi;
          },
          0.0, radius, n);
    }
    case ManifoldKind::Sphere: {
      const int p = m.dim();
      if (p == 1) {
        // pole = (0, 1); arc parametrized by the signed angle
        return math::integrate_gl(
            [&](double t) {
              Point z{std::sin(t), std::cos(t), 0, 0};
              return g(z);
            },
            -radius, radius, n);
      }
      if (p == 2) {
        // z = (sin th cos phi, sin th sin phi, cos th), area sin th dth dphi
        return math::integrate_gl(
            [&](double th) {
              double s = 0.0;
              const int nphi = 128;
              for (int j = 0; j < nphi; ++j) {
                const double phi = (j + 0.5) * math::two_pi / nphi;
                Point z{std::sin(th) * std::cos(phi), std::sin(th) * std::sin(phi), std::cos(th),
                        0};
                s += g(z);
              }
              return std::sin(th) * s * math::two_pi / nphi;
            },
            0.0, radius, n);
      }
      // S^3 around (0,0,0,1): z = (sin chi * omega, cos chi), area sin^2 chi dchi dOmega
      const auto dirs = Manifold::sphere(2).quadrature_grid(24);
      return math::integrate_gl(
          [&](double chi) {
            double s = 0.0;
            for (const auto& d : dirs) {
              Point z{std::sin(chi) * d.point[0], std::sin(chi) * d.point[1],
                      std::sin(chi) * d.point[2], std::cos(chi)};
              s += d.weight * g(z);
            }
            return std::sin(chi) * std::sin(chi) * s;
          },
          0.0, radius, n);
    }
  }
  return 0.0;
}

// Mean of f over the geodesic sphere of radius r around eta, via exp of
// equidistributed tangent directions.
inline double directional_mean(const Manifold& m, const MarkDensity& f, const Point& eta,
                               double r, int ndir) {
  const int p = m.dim();
  auto eval = [&](double c0, double c1, double c2) {
    TangentVector v;
    v.base = eta;
    v.size = p;
    v.comp = {c0, c1, c2};
    return f.density(m.exp(v));
  };
  if (p == 1) return 0.5 * (eval(r, 0, 0) + eval(-r, 0, 0));
  if (p == 2) {
    double s = 0.0;
    for (int j = 0; j < ndir; ++j) {
      const double phi = (j + 0.5) * math::two_pi / ndir;
      s += eval(r * std::cos(phi), r * std::sin(phi), 0);
    }
    return s / ndir;
  }
  static const auto dirs = Manifold::sphere(2).quadrature_grid(12);
  double s = 0.0;
  for (const auto& dnode : dirs)
    s += dnode.weight * eval(r * dnode.point[0], r * dnode.point[1], r * dnode.point[2]);
  return s / (4.0 * math::pi);
}

// E[f-hat(eta)] = int F(eta, z) f(z) dv(z) in normal polar coordinates: the
// volume density cancels against F's denominator, leaving
//   surface(S^{p-1}) * int_0^b K(r/b) r^{p-1} / b^p * mean_dir f(exp(r w)) dr.
// Exact for the Poisson estimator by the Campbell theorem, so it serves as
// the bias oracle at arbitrary eta.
inline double expected_fhat(const Manifold& m, const MarkDensity& f, const KernelProfile& kernel,
                            double b, const Point& eta, int nr = 64, int ndir = 64) {
  const int p = m.dim();
  const double surface = math::unit_sphere_surface(p);
  return surface * math::integrate_gl(
                       [&](double r) {
                         return kernel.evaluate(r / b) * math::ipow(r, p - 1) /
                                math::ipow(b, p) * directional_mean(m, f, eta, r, ndir);
                       },
                       0.0, b, nr);
}

// E[F^2(eta, xi)]: one power of the volume density survives in the
// denominator.
inline double expected_fsq(const Manifold& m, const MarkDensity& f, const KernelProfile& kernel,
                           double b, const Point& eta, int nr = 64, int ndir = 64) {
  const int p = m.dim();
  const double surface = math::unit_sphere_surface(p);
  return surface * math::integrate_gl(
                       [&](double r) {
                         const double kr = kernel.evaluate(r / b);
                         const double theta = m.kind() == ManifoldKind::Sphere
                                                  ? math::ipow(math::sinc_ratio(r), p - 1)
                                                  : 1.0;
                         return kr * kr * math::ipow(r, p - 1) /
                                (math::ipow(b, 2 * p) * theta) *
                                directional_mean(m, f, eta, r, ndir);
                       },
                       0.0, b, nr);
}

inline std::string csv_row(std::initializer_list<std::string> cells) {
  std::string out;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ",";
    out += c;
    first = false;
  }
  out += "\n";
  return out;
}

inline std::string fmt(double x) { return io::format_double(x); }

}  // namespace detail

}  // namespace markent
