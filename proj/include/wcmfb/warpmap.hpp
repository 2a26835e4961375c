#ifndef WCMFB_WARPMAP_HPP_
#define WCMFB_WARPMAP_HPP_

// First-order allpass frequency warping.
//
// Sign convention: a positive warping coefficient expands the low end of the
// spectrum onto the uniform axis (Bark-like), i.e. warp(w) > w on (0, pi).
// The delay element that realizes this mapping is
//
//     D(z) = (z^-1 - alpha) / (1 - alpha z^-1),   D(e^jw) = e^{j allpass_phase(w)}
//
// which is the textbook section (z^-1 + c)/(1 + c z^-1) with c = -alpha.

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wcmfb {

using complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

class WarpCoefficient {
 public:
  constexpr WarpCoefficient() = default;
  explicit WarpCoefficient(double alpha) : alpha_(alpha) {
    if (!(std::abs(alpha) < 1.0)) {
      throw std::invalid_argument("warp coefficient must satisfy |alpha| < 1, got " +
                                  std::to_string(alpha));
    }
  }

  constexpr double value() const noexcept { return alpha_; }
  WarpCoefficient negated() const { return WarpCoefficient(-alpha_); }

  friend constexpr bool operator==(WarpCoefficient, WarpCoefficient) = default;

 private:
  double alpha_ = 0.0;
};

/// Unwrapped phase of D(e^jw). Continuous on the whole real line with
/// phi(0) = 0, phi(pi) = -pi and phi(w + 2 pi) = phi(w) - 2 pi.
///
/// The arctangent term is taken with a strictly positive denominator
/// (1 - alpha cos w > 0 for |alpha| < 1), so no branch cut is ever crossed.
inline double allpass_phase(double omega, WarpCoefficient alpha) noexcept {
  const double a = alpha.value();
  return -omega - 2.0 * std::atan(a * std::sin(omega) / (1.0 - a * std::cos(omega)));
}

inline double allpass_phase(double omega, double alpha) {
  return allpass_phase(omega, WarpCoefficient(alpha));
}

/// Complex frequency response D(e^jw).
inline complex allpass_response(double omega, WarpCoefficient alpha) noexcept {
  const complex zinv = std::polar(1.0, -omega);
  return (zinv - alpha.value()) / (1.0 - alpha.value() * zinv);
}

namespace detail {
inline void check_band(double omega, const char* what) {
  if (!(omega >= 0.0 && omega <= kPi)) {
    throw std::domain_error(std::string(what) + ": frequency must lie in [0, pi], got " +
                            std::to_string(omega));
  }
}
}  // namespace detail

/// Increasing bijection of [0, pi] onto itself: real frequency -> uniform-bank
/// frequency. Equal to -allpass_phase.
inline double warp(double omega, WarpCoefficient alpha) {
  detail::check_band(omega, "warp");
  return -allpass_phase(omega, alpha);
}

inline double warp(double omega, double alpha) { return warp(omega, WarpCoefficient(alpha)); }

/// Uniform-bank frequency -> real frequency. Closed form through the -alpha
/// symmetry of the first-order map.
inline double warp_inverse(double nu, WarpCoefficient alpha) {
  detail::check_band(nu, "warp_inverse");
  return -allpass_phase(nu, alpha.negated());
}

inline double warp_inverse(double nu, double alpha) {
  return warp_inverse(nu, WarpCoefficient(alpha));
}

/// One first-order section of D(z):  y[n] - a y[n-1] = x[n-1] - a x[n].
class AllpassSection {
 public:
  AllpassSection() = default;
  explicit AllpassSection(WarpCoefficient alpha) : a_(alpha.value()) {}

  double step(double x) noexcept {
    const double y = x_prev_ - a_ * x + a_ * y_prev_;
    x_prev_ = x;
    y_prev_ = y;
    return y;
  }

  void reset() noexcept { x_prev_ = y_prev_ = 0.0; }

  double coefficient() const noexcept { return a_; }

 private:
  double a_ = 0.0;
  double x_prev_ = 0.0;
  double y_prev_ = 0.0;
};

inline double allpass_step(AllpassSection& section, double x) noexcept { return section.step(x); }

}  // namespace wcmfb

#endif  // WCMFB_WARPMAP_HPP_
