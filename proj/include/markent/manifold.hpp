#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "markent/errors.hpp"
#include "markent/math.hpp"
#include "markent/rng.hpp"

namespace markent {

// A point's coordinates. Circle: one angle in [0, 2*pi). Flat 2-torus: two
// angles. Sphere S^p: unit embedding vector in R^{p+1}. Unused entries are 0.
using Point = std::array<double, 4>;

struct TangentVector {
  Point base{};
  std::array<double, 3> comp{};  // normal coordinates at base
  int size = 0;

  double norm() const {
    double s = 0.0;
    for (int i = 0; i < size; ++i) s += comp[i] * comp[i];
    return std::sqrt(s);
  }
};

struct QuadNode {
  Point point{};
  double weight = 0.0;
};

enum class ManifoldKind { Circle, FlatTorus2, Sphere };

// The compact mark spaces: circle S^1 (angle chart), flat torus T^2 with unit
// side-circles, and round spheres S^p, p in {1,2,3}, stored as unit embedding
// vectors (no pole singularities in the distance/exp formulas).
//
// Volume density theta_eta(nu), the Jacobian of exp_eta: identically 1 on the
// flat manifolds, (sin r / r)^{p-1} on S^p with r the geodesic distance.
class Manifold {
 public:
  static Manifold circle() { return Manifold(ManifoldKind::Circle, 1); }
  static Manifold flat_torus2() { return Manifold(ManifoldKind::FlatTorus2, 2); }
  static Manifold sphere(int p) {
    if (p < 1 || p > 3) throw input_error("sphere: dimension must be 1, 2 or 3");
    return Manifold(ManifoldKind::Sphere, p);
  }

  // Config tags: "circle" | "torus2" | "sphere2" | "sphere3".
  static Manifold from_tag(std::string_view tag) {
    if (tag == "circle") return circle();
    if (tag == "torus2") return flat_torus2();
    if (tag == "sphere2") return sphere(2);
    if (tag == "sphere3") return sphere(3);
    throw input_error("unknown manifold tag '" + std::string(tag) + "'");
  }

  std::string tag() const {
    switch (kind_) {
      case ManifoldKind::Circle: return "circle";
      case ManifoldKind::FlatTorus2: return "torus2";
      case ManifoldKind::Sphere: return dim_ == 1 ? "sphere1" : (dim_ == 2 ? "sphere2" : "sphere3");
    }
    return {};
  }

  ManifoldKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int point_size() const { return kind_ == ManifoldKind::Sphere ? dim_ + 1 : dim_; }

  double injectivity_radius() const { return math::pi; }

  double total_volume() const {
    switch (kind_) {
      case ManifoldKind::Circle: return math::two_pi;
      case ManifoldKind::FlatTorus2: return math::two_pi * math::two_pi;
      case ManifoldKind::Sphere:
        return dim_ == 1 ? math::two_pi : (dim_ == 2 ? 4.0 * math::pi : 2.0 * math::pi * math::pi);
    }
    return 0.0;
  }

  // Diameter of the space (largest attainable geodesic distance).
  double diameter() const {
    return kind_ == ManifoldKind::FlatTorus2 ? math::pi * std::sqrt(2.0) : math::pi;
  }

  void validate(const Point& x) const {
    if (kind_ == ManifoldKind::Sphere) {
      double n2 = 0.0;
      for (int i = 0; i <= dim_; ++i) n2 += x[i] * x[i];
      if (std::abs(n2 - 1.0) > 1e-10)
        throw input_error("sphere point is not a unit vector (|x|^2 = " + std::to_string(n2) + ")");
    } else {
      for (int i = 0; i < dim_; ++i)
        if (!(x[i] >= 0.0 && x[i] < math::two_pi))
          throw input_error("angle coordinate outside [0, 2*pi)");
    }
  }

  double distance(const Point& a, const Point& b) const {
    switch (kind_) {
      case ManifoldKind::Circle:
        return std::abs(math::wrap_signed(a[0] - b[0]));
      case ManifoldKind::FlatTorus2: {
        const double d0 = math::wrap_signed(a[0] - b[0]);
        const double d1 = math::wrap_signed(a[1] - b[1]);
        return std::sqrt(d0 * d0 + d1 * d1);
      }
      case ManifoldKind::Sphere: {
        // 2*atan2(|a-b|, |a+b|): well conditioned both near coincident and
        // near antipodal points, unlike acos(dot).
        double dm = 0.0, dp = 0.0;
        for (int i = 0; i <= dim_; ++i) {
          const double m = a[i] - b[i], p = a[i] + b[i];
          dm += m * m;
          dp += p * p;
        }
        return 2.0 * std::atan2(std::sqrt(dm), std::sqrt(dp));
      }
    }
    return 0.0;
  }

  // theta_eta(nu); requires d(eta, nu) < injectivity radius.
  double volume_density(const Point& eta, const Point& nu) const {
    const double r = distance(eta, nu);
    if (r >= injectivity_radius())
      throw geometry_domain_error("volume_density: points at or beyond the injectivity radius");
    if (kind_ != ManifoldKind::Sphere) return 1.0;
    return math::ipow(math::sinc_ratio(r), dim_ - 1);
  }

  // Deterministic orthonormal basis of the tangent space (sphere only):
  // Householder reflector mapping the last coordinate axis onto eta.
  void tangent_basis(const Point& eta, std::array<Point, 3>& basis) const {
    const int n = dim_ + 1;
    Point u{};
    double uu = 0.0;
    for (int i = 0; i < n; ++i) {
      u[i] = eta[i] - (i == n - 1 ? 1.0 : 0.0);
      uu += u[i] * u[i];
    }
    for (int k = 0; k < dim_; ++k) {
      Point e{};
      if (uu < 1e-30) {
        e[k] = 1.0;
      } else {
        const double f = 2.0 * u[k] / uu;
        for (int i = 0; i < n; ++i) e[i] = (i == k ? 1.0 : 0.0) - f * u[i];
      }
      basis[k] = e;
    }
  }

  Point exp(const TangentVector& v) const {
    const double r = v.norm();
    if (r >= injectivity_radius())
      throw geometry_domain_error("exp_map: |v| >= injectivity radius");
    switch (kind_) {
      case ManifoldKind::Circle: {
        Point out{};
        out[0] = math::wrap_angle(v.base[0] + v.comp[0]);
        return out;
      }
      case ManifoldKind::FlatTorus2: {
        Point out{};
        out[0] = math::wrap_angle(v.base[0] + v.comp[0]);
        out[1] = math::wrap_angle(v.base[1] + v.comp[1]);
        return out;
      }
      case ManifoldKind::Sphere: {
        std::array<Point, 3> basis;
        tangent_basis(v.base, basis);
        const int n = dim_ + 1;
        Point w{};
        for (int k = 0; k < dim_; ++k)
          for (int i = 0; i < n; ++i) w[i] += v.comp[k] * basis[k][i];
        const double c = std::cos(r), s = math::sinc_ratio(r);
        Point out{};
        double norm2 = 0.0;
        for (int i = 0; i < n; ++i) {
          out[i] = c * v.base[i] + s * w[i];
          norm2 += out[i] * out[i];
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (int i = 0; i < n; ++i) out[i] *= inv;
        return out;
      }
    }
    return {};
  }

  TangentVector log(const Point& base, const Point& target) const {
    const double r = distance(base, target);
    if (r >= injectivity_radius() - 1e-6)
      throw geometry_domain_error("log_map: points are at or near the cut locus");
    TangentVector v;
    v.base = base;
    v.size = dim_;
    switch (kind_) {
      case ManifoldKind::Circle:
        v.comp[0] = math::wrap_signed(target[0] - base[0]);
        return v;
      case ManifoldKind::FlatTorus2:
        v.comp[0] = math::wrap_signed(target[0] - base[0]);
        v.comp[1] = math::wrap_signed(target[1] - base[1]);
        return v;
      case ManifoldKind::Sphere: {
        const int n = dim_ + 1;
        double c = 0.0;
        for (int i = 0; i < n; ++i) c += base[i] * target[i];
        // w = target - <base,target> base has norm sin(r); rescale to length r.
        const double scale = 1.0 / math::sinc_ratio(r);
        Point w{};
        for (int i = 0; i < n; ++i) w[i] = (target[i] - c * base[i]) * scale;
        std::array<Point, 3> basis;
        tangent_basis(base, basis);
        for (int k = 0; k < dim_; ++k) {
          double s = 0.0;
          for (int i = 0; i < n; ++i) s += basis[k][i] * w[i];
          v.comp[k] = s;
        }
        return v;
      }
    }
    return v;
  }

  Point sample_uniform(rng::Stream& rng) const {
    Point out{};
    switch (kind_) {
      case ManifoldKind::Circle:
        out[0] = rng.uniform(0.0, math::two_pi);
        return out;
      case ManifoldKind::FlatTorus2:
        out[0] = rng.uniform(0.0, math::two_pi);
        out[1] = rng.uniform(0.0, math::two_pi);
        return out;
      case ManifoldKind::Sphere: {
        const int n = dim_ + 1;
        for (;;) {
          double n2 = 0.0;
          for (int i = 0; i < n; ++i) {
            out[i] = rng.normal();
            n2 += out[i] * out[i];
          }
          if (n2 > 1e-12) {
            const double inv = 1.0 / std::sqrt(n2);
            for (int i = 0; i < n; ++i) out[i] *= inv;
            return out;
          }
        }
      }
    }
    return out;
  }

  // Product quadrature with weights summing to the total volume. Circle /
  // torus: periodic midpoint rule (spectrally exact for smooth integrands).
  // S^2: Gauss-Legendre in cos(colatitude) x uniform longitude. S^3: polar
  // angle chi with area element sin^2(chi) times an S^2 grid of directions.
  std::vector<QuadNode> quadrature_grid(int resolution) const {
    if (resolution < 8) throw input_error("quadrature_grid: resolution must be >= 8");
    std::vector<QuadNode> grid;
    switch (kind_) {
      case ManifoldKind::Circle: {
        const double h = math::two_pi / resolution;
        grid.reserve(resolution);
        for (int i = 0; i < resolution; ++i)
          grid.push_back({Point{(i + 0.5) * h, 0, 0, 0}, h});
        return grid;
      }
      case ManifoldKind::FlatTorus2: {
        const double h = math::two_pi / resolution;
        grid.reserve(static_cast<std::size_t>(resolution) * resolution);
        for (int i = 0; i < resolution; ++i)
          for (int j = 0; j < resolution; ++j)
            grid.push_back({Point{(i + 0.5) * h, (j + 0.5) * h, 0, 0}, h * h});
        return grid;
      }
      case ManifoldKind::Sphere:
        if (dim_ == 1) {
          const double h = math::two_pi / resolution;
          grid.reserve(resolution);
          for (int i = 0; i < resolution; ++i) {
            const double a = (i + 0.5) * h;
            grid.push_back({Point{std::cos(a), std::sin(a), 0, 0}, h});
          }
          return grid;
        }
        if (dim_ == 2) {
          const auto gl = math::gauss_legendre(resolution);
          const int nphi = 2 * resolution;
          const double hphi = math::two_pi / nphi;
          grid.reserve(static_cast<std::size_t>(resolution) * nphi);
          for (int i = 0; i < resolution; ++i) {
            const double z = gl.nodes[i];
            const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
            for (int j = 0; j < nphi; ++j) {
              const double phi = (j + 0.5) * hphi;
              grid.push_back({Point{s * std::cos(phi), s * std::sin(phi), z, 0},
                              gl.weights[i] * hphi});
            }
          }
          return grid;
        }
        {
          // S^3 as (cos chi, sin chi * omega), omega in S^2.
          const int nchi = std::max(resolution, 16);
          const auto gl = math::gauss_legendre(nchi);
          const auto dir = sphere(2).quadrature_grid(resolution);
          grid.reserve(static_cast<std::size_t>(nchi) * dir.size());
          for (int i = 0; i < nchi; ++i) {
            const double chi = 0.5 * math::pi * (gl.nodes[i] + 1.0);
            const double wchi = gl.weights[i] * 0.5 * math::pi * std::sin(chi) * std::sin(chi);
            const double c = std::cos(chi), s = std::sin(chi);
            for (const auto& d : dir)
              grid.push_back({Point{c, s * d.point[0], s * d.point[1], s * d.point[2]},
                              wchi * d.weight});
          }
          return grid;
        }
    }
    return grid;
  }

 private:
  Manifold(ManifoldKind k, int p) : kind_(k), dim_(p) {}

  ManifoldKind kind_;
  int dim_;
};

}  // namespace markent
