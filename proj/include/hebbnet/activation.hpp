#pragma once

// Activation catalog. Each activation f comes paired with the regularizer F
// whose derivative satisfies F'(r) = u - r at r = f(u), with the integration
// constant fixed by F(0) = 0. The output bounds [a, b] are the infimum and
// supremum of the range of f.
//
//   capped_relu(lambda, cap):  f(u) = min(max(u - lambda, 0), cap)
//                              F(r) = lambda * r            on [0, cap]
//   tanh:                      f(u) = tanh(u)
//                              F(r) = r*atanh(r) + ln(1-r^2)/2 - r^2/2
//   linear:                    f(u) = u,  F = 0
//   shrinkage(lambda):         f(u) = sign(u) * max(|u| - lambda, 0)
//                              F(r) = lambda * |r|
//
// The unbounded kinds (linear, shrinkage, capped_relu with cap = inf) only
// admit a lower-bounded energy in single-layer networks with positive
// definite L; the network constructor enforces that restriction.

#include "hebbnet/common.hpp"

#include <cmath>
#include <string>

namespace hebbnet {

class Activation {
 public:
  enum class Kind { CappedRelu, Tanh, Linear, Shrinkage };

  static Activation capped_relu(double lambda, double cap) {
    if (!(lambda >= 0.0)) throw ConfigError("capped_relu: lambda must be >= 0");
    if (!(cap > 0.0)) throw ConfigError("capped_relu: cap must be > 0");
    return Activation(Kind::CappedRelu, lambda, cap);
  }
  static Activation tanh() { return Activation(Kind::Tanh, 0.0, 1.0); }
  static Activation linear() { return Activation(Kind::Linear, 0.0, kInf); }
  static Activation shrinkage(double lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("shrinkage: lambda must be >= 0");
    return Activation(Kind::Shrinkage, lambda, kInf);
  }

  Kind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double cap() const { return cap_; }

  double lower() const {
    switch (kind_) {
      case Kind::CappedRelu: return 0.0;
      case Kind::Tanh: return -1.0;
      default: return -kInf;
    }
  }
  double upper() const {
    switch (kind_) {
      case Kind::CappedRelu: return cap_;
      case Kind::Tanh: return 1.0;
      default: return kInf;
    }
  }
  bool bounded() const { return std::isfinite(lower()) && std::isfinite(upper()); }

  double f(double u) const {
    switch (kind_) {
      case Kind::CappedRelu: return std::min(std::max(u - lambda_, 0.0), cap_);
      case Kind::Tanh: return std::tanh(u);
      case Kind::Linear: return u;
      case Kind::Shrinkage:
        if (u > lambda_) return u - lambda_;
        if (u < -lambda_) return u + lambda_;
        return 0.0;
    }
    return u;
  }

  // f'(u); piecewise kinds report the one-sided slope of the active segment.
  double fprime(double u) const {
    switch (kind_) {
      case Kind::CappedRelu: return (u > lambda_ && u < cap_ + lambda_) ? 1.0 : 0.0;
      case Kind::Tanh: {
        double t = std::tanh(u);
        return 1.0 - t * t;
      }
      case Kind::Linear: return 1.0;
      case Kind::Shrinkage: return (u > lambda_ || u < -lambda_) ? 1.0 : 0.0;
    }
    return 1.0;
  }

  double F(double r) const {
    switch (kind_) {
      case Kind::CappedRelu: return lambda_ * r;
      case Kind::Tanh: {
        if (r == 1.0 || r == -1.0) return std::log(2.0) - 0.5;
        // (1+r)ln(1+r)/2 + (1-r)ln(1-r)/2 - r^2/2, stable up to |r| = 1.
        return 0.5 * ((1.0 + r) * std::log1p(r) + (1.0 - r) * std::log1p(-r)) -
               0.5 * r * r;
      }
      case Kind::Linear: return 0.0;
      case Kind::Shrinkage: return lambda_ * std::abs(r);
    }
    return 0.0;
  }

  // F'(r) = f^{-1}(r) - r on the open range. At closed boundaries of
  // capped_relu the subgradient at the nearest kink is used (u = lambda at
  // r = 0, u = cap + lambda at r = cap), which gives lambda at both ends.
  double Fprime(double r) const {
    switch (kind_) {
      case Kind::CappedRelu: return lambda_;
      case Kind::Tanh:
        if (r >= 1.0) return kInf;
        if (r <= -1.0) return -kInf;
        return std::atanh(r) - r;
      case Kind::Linear: return 0.0;
      case Kind::Shrinkage:
        return r > 0.0 ? lambda_ : (r < 0.0 ? -lambda_ : 0.0);
    }
    return 0.0;
  }

  Vec apply(const Vec& u) const {
    if (!all_finite(u)) throw InvalidInputError("apply_activation: non-finite input");
    Vec r(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) r[i] = f(u[i]);
    return r;
  }

  double regularizer_value(const Vec& r) const {
    const double a = lower(), b = upper();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (!(r[i] >= a && r[i] <= b))
        throw DomainError("regularizer_value: r outside [" + std::to_string(a) +
                          ", " + std::to_string(b) + "]");
      sum += F(r[i]);
    }
    return sum;
  }

  Vec regularizer_derivative(const Vec& r) const {
    const double a = lower(), b = upper();
    Vec out(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (!(r[i] >= a && r[i] <= b))
        throw DomainError("regularizer_derivative: r outside output bounds");
      out[i] = Fprime(r[i]);
    }
    return out;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::CappedRelu: return "capped_relu";
      case Kind::Tanh: return "tanh";
      case Kind::Linear: return "linear";
      case Kind::Shrinkage: return "shrinkage";
    }
    return "?";
  }

  bool operator==(const Activation& o) const {
    return kind_ == o.kind_ && lambda_ == o.lambda_ && cap_ == o.cap_;
  }

 private:
  Activation(Kind k, double lambda, double cap) : kind_(k), lambda_(lambda), cap_(cap) {}

  Kind kind_;
  double lambda_;
  double cap_;
};

// Convenience wrappers matching the catalog operation names.
inline Vec apply_activation(const Activation& act, const Vec& u) { return act.apply(u); }
inline double regularizer_value(const Activation& act, const Vec& r) {
  return act.regularizer_value(r);
}
inline Vec regularizer_derivative(const Activation& act, const Vec& r) {
  return act.regularizer_derivative(r);
}

}  // namespace hebbnet
