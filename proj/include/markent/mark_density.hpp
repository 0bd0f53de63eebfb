#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "markent/errors.hpp"
#include "markent/manifold.hpp"
#include "markent/math.hpp"
#include "markent/rng.hpp"

namespace markent {

enum class DensityFamily { Uniform, VonMisesFisher, WrappedNormalCircle, MixtureVmf };

// Constants of a mark density that enter the error bounds:
//   c2   -- sup over the manifold of the spectral norm of the Hessian of
//           f composed with exp (normal coordinates), inflated by 10%
//   l1   -- E[log^2 f(xi)]  = int f log^2 f
//   l2   -- E[(|grad f|/f)^2(xi)] = int |grad f|^2 / f
//   c0   -- inf f,  sup_f -- sup f
struct DensityConstants {
  double c2 = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double c0 = 0.0;
  double sup_f = 0.0;
};

// Mark distributions with evaluable density w.r.t. the Riemannian measure.
// All families have full support and are smooth, so (f2)/(f3)-style
// constants are finite and reported by constants().
class MarkDensity {
 public:
  static MarkDensity uniform(const Manifold& m) {
    MarkDensity d(m, DensityFamily::Uniform);
    return d;
  }

  // von Mises-Fisher on S^p (p = 1, 2, 3) around mean direction mu. On the
  // circle manifold mu is an angle and this is the classical von Mises law.
  static MarkDensity vmf(const Manifold& m, const Point& mu, double kappa) {
    if (m.kind() == ManifoldKind::FlatTorus2)
      throw input_error("vmf: mean-direction family is not defined on the torus");
    if (!(kappa > 0.0) || kappa > 50.0)
      throw input_error("vmf: kappa must lie in (0, 50]");
    MarkDensity d(m, DensityFamily::VonMisesFisher);
    m.validate(mu);
    d.mu_ = {mu};
    d.kappa_ = {kappa};
    d.weight_ = {1.0};
    d.log_norm_ = {std::log(vmf_mass(m, kappa))};
    return d;
  }

  // Wrapped normal on the circle with mean angle mu and mean resultant
  // length rho in (0,1); sigma^2 = -2 log rho.
  static MarkDensity wrapped_normal(const Manifold& m, double mu, double rho) {
    if (m.kind() != ManifoldKind::Circle)
      throw input_error("wrapped_normal: only defined on the circle");
    if (!(rho > 0.0 && rho < 1.0)) throw input_error("wrapped_normal: rho must lie in (0,1)");
    MarkDensity d(m, DensityFamily::WrappedNormalCircle);
    d.mu_ = {Point{math::wrap_angle(mu), 0, 0, 0}};
    d.rho_ = rho;
    d.sigma_ = std::sqrt(-2.0 * std::log(rho));
    return d;
  }

  static MarkDensity mixture_vmf(const Manifold& m, const std::vector<Point>& mus,
                                 const std::vector<double>& kappas,
                                 const std::vector<double>& weights) {
    if (mus.empty() || mus.size() != kappas.size() || mus.size() != weights.size())
      throw input_error("mixture_vmf: component lists must be nonempty and matched");
    if (m.kind() == ManifoldKind::FlatTorus2)
      throw input_error("mixture_vmf: not defined on the torus");
    MarkDensity d(m, DensityFamily::MixtureVmf);
    double wsum = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw input_error("mixture_vmf: weights must be positive");
      wsum += w;
    }
    for (std::size_t i = 0; i < mus.size(); ++i) {
      m.validate(mus[i]);
      if (!(kappas[i] > 0.0) || kappas[i] > 50.0)
        throw input_error("mixture_vmf: kappa must lie in (0, 50]");
      d.mu_.push_back(mus[i]);
      d.kappa_.push_back(kappas[i]);
      d.weight_.push_back(weights[i] / wsum);
      d.log_norm_.push_back(std::log(vmf_mass(m, kappas[i])));
    }
    return d;
  }

  const Manifold& manifold() const { return manifold_; }
  DensityFamily family() const { return family_; }
  bool is_uniform() const { return family_ == DensityFamily::Uniform; }

  double density(const Point& x) const {
    switch (family_) {
      case DensityFamily::Uniform:
        return 1.0 / manifold_.total_volume();
      case DensityFamily::VonMisesFisher:
        return std::exp(kappa_[0] * cos_to_mean(x, 0) - log_norm_[0]);
      case DensityFamily::WrappedNormalCircle:
        return wn_series(math::wrap_signed(x[0] - mu_[0][0]), 0);
      case DensityFamily::MixtureVmf: {
        double f = 0.0;
        for (std::size_t i = 0; i < weight_.size(); ++i)
          f += weight_[i] * std::exp(kappa_[i] * cos_to_mean(x, i) - log_norm_[i]);
        return f;
      }
    }
    return 0.0;
  }

  double log_density(const Point& x) const {
    if (family_ == DensityFamily::VonMisesFisher)
      return kappa_[0] * cos_to_mean(x, 0) - log_norm_[0];
    return std::log(density(x));
  }

  // Norm of the Riemannian gradient of f at x.
  double grad_norm(const Point& x) const {
    switch (family_) {
      case DensityFamily::Uniform:
        return 0.0;
      case DensityFamily::VonMisesFisher: {
        const double t = cos_to_mean(x, 0);
        return kappa_[0] * density(x) * std::sqrt(std::max(0.0, 1.0 - t * t));
      }
      case DensityFamily::WrappedNormalCircle:
        return std::abs(wn_series(math::wrap_signed(x[0] - mu_[0][0]), 1));
      case DensityFamily::MixtureVmf:
        return mixture_grad_norm(x);
    }
    return 0.0;
  }

  Point sample(rng::Stream& rng) const {
    switch (family_) {
      case DensityFamily::Uniform:
        return manifold_.sample_uniform(rng);
      case DensityFamily::VonMisesFisher:
        return vmf_sample(rng, 0);
      case DensityFamily::WrappedNormalCircle: {
        Point out{};
        out[0] = math::wrap_angle(mu_[0][0] + sigma_ * rng.normal());
        return out;
      }
      case DensityFamily::MixtureVmf: {
        const double u = rng.uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i < weight_.size(); ++i) {
          acc += weight_[i];
          if (u < acc || i + 1 == weight_.size()) return vmf_sample(rng, i);
        }
        return vmf_sample(rng, 0);
      }
    }
    return {};
  }

  // Quadrature mass of the density; should be 1 to grid accuracy.
  double mass(int resolution) const {
    double s = 0.0;
    for (const auto& node : manifold_.quadrature_grid(resolution)) s += node.weight * density(node.point);
    return s;
  }

  DensityConstants constants() const {
    const auto [res_a, res_b] = constant_resolutions();
    DensityConstants a = constants_at(res_a);
    DensityConstants b = constants_at(res_b);
    auto agree = [](double x, double y) {
      return std::abs(x - y) <= 1e-4 * std::max({1.0, std::abs(x), std::abs(y)});
    };
    if (!agree(a.l1, b.l1) || !agree(a.l2, b.l2))
      throw accuracy_error("density_constants: quadrature refinement disagreement");
    b.c2 = std::max(a.c2, b.c2);
    return b;
  }

 private:
  explicit MarkDensity(const Manifold& m, DensityFamily f) : manifold_(m), family_(f) {}

  // cos of the geodesic angle between x and component mean i.
  double cos_to_mean(const Point& x, std::size_t i) const {
    if (manifold_.kind() == ManifoldKind::Circle) return std::cos(x[0] - mu_[i][0]);
    double t = 0.0;
    for (int k = 0; k <= manifold_.dim(); ++k) t += x[k] * mu_[i][k];
    return std::clamp(t, -1.0, 1.0);
  }

  // Total mass of exp(kappa * cos(angle to mean)) w.r.t. the Riemannian
  // measure, by 1-D quadrature in the polar angle.
  static double vmf_mass(const Manifold& m, double kappa) {
    const int p = m.dim();
    if (m.kind() == ManifoldKind::Circle || p == 1) {
      return math::integrate_gl(
          [&](double a) { return std::exp(kappa * std::cos(a)); }, 0.0, math::two_pi, 200);
    }
    const double surface = math::unit_sphere_surface(p);  // of S^{p-1}
    return surface * math::integrate_gl(
                         [&](double th) {
                           return std::exp(kappa * std::cos(th)) *
                                  math::ipow(std::sin(th), p - 1);
                         },
                         0.0, math::pi, 200);
  }

  Point vmf_sample(rng::Stream& rng, std::size_t i) const {
    // Rejection against the uniform law; acceptance exp(kappa (t - 1)).
    for (long it = 0; it < 1000000; ++it) {
      Point x = manifold_.sample_uniform(rng);
      const double t = cos_to_mean(x, i);
      if (std::log(std::max(rng.uniform01(), 1e-300)) < kappa_[i] * (t - 1.0)) return x;
    }
    throw internal_error("vmf rejection sampler exceeded its retry cap");
  }

  // Wrapped normal Fourier series: derivative 0 -> density, 1 -> d/dtheta.
  double wn_series(double delta, int deriv) const {
    double s = deriv == 0 ? 1.0 : 0.0;
    for (int k = 1;; ++k) {
      const double coef = std::pow(rho_, static_cast<double>(k) * k);
      if (coef < 1e-18) break;
      s += deriv == 0 ? 2.0 * coef * std::cos(k * delta) : -2.0 * coef * k * std::sin(k * delta);
    }
    return s / math::two_pi;
  }

  double mixture_grad_norm(const Point& x) const {
    if (manifold_.kind() == ManifoldKind::Circle) {
      double g = 0.0;
      for (std::size_t i = 0; i < weight_.size(); ++i) {
        const double fi = std::exp(kappa_[i] * std::cos(x[0] - mu_[i][0]) - log_norm_[i]);
        g += weight_[i] * fi * kappa_[i] * (-std::sin(x[0] - mu_[i][0]));
      }
      return std::abs(g);
    }
    // grad f = sum_i w_i kappa_i f_i (mu_i - <mu_i, x> x), tangential.
    const int n = manifold_.dim() + 1;
    std::array<double, 4> g{};
    for (std::size_t i = 0; i < weight_.size(); ++i) {
      const double t = cos_to_mean(x, i);
      const double fi = std::exp(kappa_[i] * t - log_norm_[i]);
      for (int k = 0; k < n; ++k) g[k] += weight_[i] * kappa_[i] * fi * (mu_[i][k] - t * x[k]);
    }
    double n2 = 0.0;
    for (int k = 0; k < n; ++k) n2 += g[k] * g[k];
    return std::sqrt(n2);
  }

  std::pair<int, int> constant_resolutions() const {
    if (manifold_.kind() == ManifoldKind::Sphere && manifold_.dim() == 3) return {16, 24};
    return {48, 72};
  }

  DensityConstants constants_at(int res) const {
    DensityConstants c;
    const auto grid = manifold_.quadrature_grid(res);
    double mass_acc = 0.0;
    c.c0 = std::numeric_limits<double>::infinity();
    for (const auto& node : grid) {
      const double f = density(node.point);
      mass_acc += node.weight * f;
      const double lf = std::log(f);
      c.l1 += node.weight * f * lf * lf;
      if (!is_uniform()) {
        const double g = grad_norm(node.point);
        c.l2 += node.weight * g * g / f;
      }
      c.c0 = std::min(c.c0, f);
      c.sup_f = std::max(c.sup_f, f);
    }
    if (std::abs(mass_acc - 1.0) > 1e-6)
      throw accuracy_error("density mass deviates from 1 beyond 1e-6 at the working resolution");
    refine_extremum(c.c0, true);
    refine_extremum(c.sup_f, false);
    c.c2 = is_uniform() ? 0.0 : hessian_sup() * 1.1;
    return c;
  }

  // Local pattern search from the best grid value, walking along exp of the
  // tangent basis directions with shrinking steps.
  void refine_extremum(double& value, bool minimize) const {
    Point best{};
    bool found = false;
    const auto grid = manifold_.quadrature_grid(manifold_.dim() == 3 ? 16 : 48);
    for (const auto& node : grid) {
      const double f = density(node.point);
      if (!found || (minimize ? f < value : f > value)) {
        value = f;
        best = node.point;
        found = true;
      }
    }
    const int p = manifold_.dim();
    for (double step : {0.1, 0.02, 0.004, 8e-4}) {
      for (int iter = 0; iter < 60; ++iter) {
        bool improved = false;
        for (int k = 0; k < p && !improved; ++k) {
          for (double sgn : {1.0, -1.0}) {
            TangentVector v;
            v.base = best;
            v.size = p;
            v.comp[k] = sgn * step;
            const Point cand = manifold_.exp(v);
            const double f = density(cand);
            if (minimize ? f < value : f > value) {
              value = f;
              best = cand;
              improved = true;
              break;
            }
          }
        }
        if (!improved) break;
      }
    }
  }

  // Finite-difference Hessian of f(exp_eta(x)) at x = 0, maximized over a grid.
  double hessian_sup() const {
    const int p = manifold_.dim();
    const double h = 1e-3;
    const auto grid = manifold_.quadrature_grid(p == 3 ? 12 : (p == 1 ? 96 : 20));
    double sup = 0.0;
    for (const auto& node : grid) {
      const Point& eta = node.point;
      auto feval = [&](double a, double b, double cdir) {
        TangentVector v;
        v.base = eta;
        v.size = p;
        v.comp[0] = a;
        if (p > 1) v.comp[1] = b;
        if (p > 2) v.comp[2] = cdir;
        return density(manifold_.exp(v));
      };
      const double f0 = density(eta);
      std::array<double, 9> hess{};
      for (int i = 0; i < p; ++i) {
        std::array<double, 3> e{};
        e[i] = 1.0;
        const double fp = feval(h * e[0], h * e[1], h * e[2]);
        const double fm = feval(-h * e[0], -h * e[1], -h * e[2]);
        hess[i * 3 + i] = (fp - 2.0 * f0 + fm) / (h * h);
      }
      for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
          std::array<double, 3> ep{}, em{};
          ep[i] = 1.0;
          ep[j] = 1.0;
          em[i] = 1.0;
          em[j] = -1.0;
          const double fpp = feval(h * ep[0], h * ep[1], h * ep[2]);
          const double fmm = feval(-h * ep[0], -h * ep[1], -h * ep[2]);
          const double fpm = feval(h * em[0], h * em[1], h * em[2]);
          const double fmp = feval(-h * em[0], -h * em[1], -h * em[2]);
          const double v = (fpp + fmm - fpm - fmp) / (4.0 * h * h);
          hess[i * 3 + j] = hess[j * 3 + i] = v;
        }
      }
      sup = std::max(sup, math::spectral_norm_sym(hess, p));
    }
    return sup;
  }

  Manifold manifold_;
  DensityFamily family_;
  std::vector<Point> mu_;
  std::vector<double> kappa_;
  std::vector<double> weight_;
  std::vector<double> log_norm_;
  double rho_ = 0.0, sigma_ = 0.0;  // wrapped normal
};

}  // namespace markent
