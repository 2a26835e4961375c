#ifndef WCMFB_CMFB_HPP_
#define WCMFB_CMFB_HPP_

// Cosine modulation of a linear-phase prototype and frequency responses of the
// prototype and of the (warped) channel filters.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "wcmfb/warpmap.hpp"

namespace wcmfb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

inline void check_order(int order_n, int channels_m) {
  if (channels_m < 1) throw std::invalid_argument("channel count must be >= 1");
  if (order_n < 2 || order_n % (2 * channels_m) != 0) {
    throw std::invalid_argument("prototype length N=" + std::to_string(order_n) +
                                " is not a positive multiple of 2M=" +
                                std::to_string(2 * channels_m));
  }
}

/// Free half h(N/2) ... h(N-1) of a symmetric, even-length prototype.
class PrototypeHalf {
 public:
  PrototypeHalf() = default;
  PrototypeHalf(Vector coeffs, int order_n, int channels_m)
      : coeffs_(std::move(coeffs)), order_n_(order_n), channels_m_(channels_m) {
    check_order(order_n, channels_m);
    if (coeffs_.size() != order_n / 2) {
      throw std::invalid_argument("half-vector must have N/2 entries");
    }
  }

  /// Builds the half-vector from a full symmetric impulse response.
  static PrototypeHalf from_full(const Vector& full, int channels_m) {
    const int n = static_cast<int>(full.size());
    check_order(n, channels_m);
    return PrototypeHalf(full.tail(n / 2), n, channels_m);
  }

  const Vector& coeffs() const noexcept { return coeffs_; }
  Vector& coeffs() noexcept { return coeffs_; }
  int order() const noexcept { return order_n_; }
  int channels() const noexcept { return channels_m_; }
  int half_length() const noexcept { return order_n_ / 2; }

  /// h[n] = h[N-1-n].
  Vector full() const {
    const int half = half_length();
    Vector h(order_n_);
    for (int i = 0; i < half; ++i) {
      h[half + i] = coeffs_[i];
      h[half - 1 - i] = coeffs_[i];
    }
    return h;
  }

 private:
  Vector coeffs_;
  int order_n_ = 0;
  int channels_m_ = 0;
};

/// Modulation constants of channel k.
struct ModulationConstants {
  complex a;    // e^{j (-1)^k pi/4}
  complex b;    // W_2M^{(k+0.5)(N-1)/2}
  complex w2m;  // e^{-j pi/M}
  double shift; // pi (k+0.5) / M

  static ModulationConstants of(int k, int order_n, int channels_m) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double shift = kPi * (k + 0.5) / channels_m;
    return {std::polar(1.0, sign * kPi / 4.0), std::polar(1.0, -shift * (order_n - 1) / 2.0),
            std::polar(1.0, -kPi / channels_m), shift};
  }
};

struct ChannelFilters {
  Matrix analysis;   // M x N, row k = h_k[n]
  Matrix synthesis;  // M x N, row k = f_k[n]
};

inline ChannelFilters modulate(const PrototypeHalf& prototype) {
  const int m = prototype.channels();
  const int n = prototype.order();
  const Vector h = prototype.full();
  ChannelFilters out{Matrix(m, n), Matrix(m, n)};
  for (int k = 0; k < m; ++k) {
    const double theta = ((k % 2 == 0) ? 1.0 : -1.0) * kPi / 4.0;
    const double rate = (2.0 * k + 1.0) * kPi / (2.0 * m);
    for (int i = 0; i < n; ++i) {
      const double arg = rate * (i - (n - 1) / 2.0);
      out.analysis(k, i) = 2.0 * h[i] * std::cos(arg + theta);
      out.synthesis(k, i) = 2.0 * h[i] * std::cos(arg - theta);
    }
  }
  return out;
}

/// C(w) = [2cos(w/2), 2cos(3w/2), ..., 2cos((N-1)w/2)].
inline Vector cosine_basis(double omega, int order_n) {
  if (order_n < 2 || order_n % 2 != 0) {
    throw std::invalid_argument("cosine_basis needs an even prototype length");
  }
  Vector c(order_n / 2);
  for (int i = 0; i < c.size(); ++i) c[i] = 2.0 * std::cos((i + 0.5) * omega);
  return c;
}

/// e^{-j(N-1)w/2} C(w): the prototype response is this vector dotted with h.
inline ComplexVector linear_phase_basis(double omega, int order_n) {
  const complex phase = std::polar(1.0, -(order_n - 1) * omega / 2.0);
  return cosine_basis(omega, order_n).cast<complex>() * phase;
}

/// H(e^jw) of the prototype.
inline complex prototype_response(const PrototypeHalf& prototype, double omega) {
  const double amplitude = cosine_basis(omega, prototype.order()).dot(prototype.coeffs());
  return std::polar(1.0, -(prototype.order() - 1) * omega / 2.0) * amplitude;
}

enum class FilterSide { analysis, synthesis };

namespace detail {
inline void check_channel(int k, int channels_m) {
  if (k < 0 || k >= channels_m) {
    throw std::out_of_range("channel index " + std::to_string(k) + " outside [0, " +
                            std::to_string(channels_m) + ")");
  }
}
}  // namespace detail

/// Channel k evaluated at uniform-axis frequency theta (z = e^{j theta}).
inline complex channel_response_uniform(const PrototypeHalf& prototype, int k, double theta,
                                        FilterSide side = FilterSide::analysis) {
  detail::check_channel(k, prototype.channels());
  const auto mc = ModulationConstants::of(k, prototype.order(), prototype.channels());
  const complex lo = prototype_response(prototype, theta - mc.shift);
  const complex hi = prototype_response(prototype, theta + mc.shift);
  if (side == FilterSide::analysis) {
    return mc.a * mc.b * lo + std::conj(mc.a * mc.b) * hi;
  }
  return std::conj(mc.a) * mc.b * lo + mc.a * std::conj(mc.b) * hi;
}

/// H_k(D(e^jw)) (or F_k for the synthesis side). Any real omega is accepted;
/// the warp is continued through the unwrapped allpass phase.
inline complex channel_response_warped(const PrototypeHalf& prototype, int k, double omega,
                                       WarpCoefficient alpha,
                                       FilterSide side = FilterSide::analysis) {
  return channel_response_uniform(prototype, k, -allpass_phase(omega, alpha), side);
}

}  // namespace wcmfb

#endif  // WCMFB_CMFB_HPP_
