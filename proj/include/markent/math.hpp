#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "markent/errors.hpp"

namespace markent::math {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Volume of the unit ball in R^p, p in {1,2,3}.
inline double unit_ball_volume(int p) {
  switch (p) {
    case 1: return 2.0;
    case 2: return pi;
    case 3: return 4.0 * pi / 3.0;
    default: throw input_error("unit_ball_volume: unsupported dimension " + std::to_string(p));
  }
}

// Surface measure of the unit sphere S^{p-1} in R^p (= p * omega_p).
inline double unit_sphere_surface(int p) { return p * unit_ball_volume(p); }

inline double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// sin(r)/r with a series branch near zero (avoids 0/0 and keeps full precision).
inline double sinc_ratio(double r) {
  if (std::abs(r) < 1e-4) {
    const double r2 = r * r;
    return 1.0 - r2 / 6.0 * (1.0 - r2 / 20.0);
  }
  return std::sin(r) / r;
}

// Wrap an angle into [0, 2*pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a, two_pi);
  if (w < 0.0) w += two_pi;
  return w == two_pi ? 0.0 : w;
}

// Signed wrap into [-pi, pi].
inline double wrap_signed(double a) { return std::remainder(a, two_pi); }

struct GaussLegendre {
  std::vector<double> nodes;    // on (-1, 1), ascending
  std::vector<double> weights;  // sum to 2
};

// Nodes by Newton iteration on the Legendre recurrence. Standard textbook
// construction; full double precision for the n used here.
inline GaussLegendre gauss_legendre(int n) {
  if (n < 1) throw input_error("gauss_legendre: n must be positive");
  GaussLegendre gl;
  gl.nodes.resize(n);
  gl.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = -p1 / dp;
      x += dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.nodes[i] = -std::abs(x);
    gl.weights[i] = w;
    gl.nodes[n - 1 - i] = std::abs(x);
    gl.weights[n - 1 - i] = w;
  }
  return gl;
}

// Integrate f over [a, b] with an n-node Gauss-Legendre rule.
template <typename F>
double integrate_gl(F&& f, double a, double b, int n) {
  const GaussLegendre gl = gauss_legendre(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += gl.weights[i] * f(mid + half * gl.nodes[i]);
  return half * s;
}

// Spectral norm of a symmetric p x p matrix, p <= 3, by cyclic Jacobi sweeps.
inline double spectral_norm_sym(const std::array<double, 9>& m, int p) {
  if (p == 1) return std::abs(m[0]);
  std::array<double, 9> a = m;
  auto at = [&](int i, int j) -> double& { return a[i * 3 + j]; };
  for (int sweep = 0; sweep < 16; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-30) break;
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) {
        if (std::abs(at(i, j)) < 1e-300) continue;
        const double theta = 0.5 * std::atan2(2.0 * at(i, j), at(j, j) - at(i, i));
        const double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < p; ++k) {
          const double aki = at(k, i), akj = at(k, j);
          at(k, i) = c * aki - s * akj;
          at(k, j) = s * aki + c * akj;
        }
        for (int k = 0; k < p; ++k) {
          const double aik = at(i, k), ajk = at(j, k);
          at(i, k) = c * aik - s * ajk;
          at(j, k) = s * aik + c * ajk;
        }
      }
    }
  }
  double r = 0.0;
  for (int i = 0; i < p; ++i) r = std::max(r, std::abs(at(i, i)));
  return r;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse standard normal CDF: Acklam's rational approximation polished by a
// single Halley step against erfc, accurate to ~1e-15 over (0, 1).
inline double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw input_error("normal_quantile: u must lie in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double x;
  if (u < plow) {
    const double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= phigh) {
    const double q = u - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - u;
  const double f = std::exp(-0.5 * x * x) / std::sqrt(two_pi);
  x -= e / (f + 0.5 * x * e);  // Halley
  return x;
}

}  // namespace markent::math
