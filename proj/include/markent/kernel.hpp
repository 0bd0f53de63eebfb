#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "markent/errors.hpp"
#include "markent/math.hpp"

namespace markent {

enum class KernelName { Epanechnikov, Triweight, Uniform };

// Radial kernel profile on [0,1], normalized so that the induced kernel on
// R^p integrates to one over the unit ball:
//   c * p * omega_p * int_0^1 k(r) r^{p-1} dr = 1.
// All three profiles are monotone with compact support, so the vector first
// moment vanishes by symmetry. K0 is the sup (attained at 0), K2 the second
// moment  c * p * omega_p * int_0^1 k(r) r^{p+1} dr.
class KernelProfile {
 public:
  static KernelProfile make(KernelName name, int p) {
    if (p < 1 || p > 3) throw input_error("make_kernel: dimension must be 1, 2 or 3");
    KernelProfile k;
    k.name_ = name;
    k.p_ = p;
    const double surface = math::unit_sphere_surface(p);
    // int_0^1 k(r) r^m dr in closed form for each profile.
    k.c_ = 1.0 / (surface * profile_moment(name, p - 1));
    k.k0_ = k.c_;  // k(0) = 1 for every profile
    k.k2_ = k.c_ * surface * profile_moment(name, p + 1);
    return k;
  }

  static KernelProfile from_tag(std::string_view tag, int p) {
    if (tag == "epanechnikov") return make(KernelName::Epanechnikov, p);
    if (tag == "triweight") return make(KernelName::Triweight, p);
    if (tag == "uniform") return make(KernelName::Uniform, p);
    throw input_error("unknown kernel tag '" + std::string(tag) + "'");
  }

  std::string tag() const {
    switch (name_) {
      case KernelName::Epanechnikov: return "epanechnikov";
      case KernelName::Triweight: return "triweight";
      case KernelName::Uniform: return "uniform";
    }
    return {};
  }

  KernelName name() const { return name_; }
  int dim() const { return p_; }
  double normalization() const { return c_; }
  double k0() const { return k0_; }
  double k2() const { return k2_; }

  double evaluate(double r) const {
    if (r < 0.0) throw input_error("kernel evaluate: negative radius");
    if (r > 1.0) return 0.0;
    switch (name_) {
      case KernelName::Epanechnikov: {
        const double t = 1.0 - r * r;
        return c_ * (t > 0.0 ? t : 0.0);
      }
      case KernelName::Triweight: {
        const double t = 1.0 - r * r;
        return t > 0.0 ? c_ * t * t * t : 0.0;
      }
      case KernelName::Uniform:
        return c_;
    }
    return 0.0;
  }

  // order 0 returns the unit mass, order 2 the second moment K2.
  double moment(int order) const {
    if (order != 0 && order != 2) throw input_error("kernel moment: order must be 0 or 2");
    const double surface = math::unit_sphere_surface(p_);
    return c_ * surface * profile_moment(name_, p_ - 1 + order);
  }

 private:
  // int_0^1 k(r) r^m dr for the unnormalized profile k.
  static double profile_moment(KernelName name, int m) {
    const double dm = static_cast<double>(m);
    switch (name) {
      case KernelName::Epanechnikov:
        return 1.0 / (dm + 1.0) - 1.0 / (dm + 3.0);
      case KernelName::Triweight:
        return 1.0 / (dm + 1.0) - 3.0 / (dm + 3.0) + 3.0 / (dm + 5.0) - 1.0 / (dm + 7.0);
      case KernelName::Uniform:
        return 1.0 / (dm + 1.0);
    }
    return 0.0;
  }

  KernelName name_ = KernelName::Epanechnikov;
  int p_ = 1;
  double c_ = 0.0, k0_ = 0.0, k2_ = 0.0;
};

}  // namespace markent
