#ifndef WCMFB_TRANSFER_HPP_
#define WCMFB_TRANSFER_HPP_

// Overall, distortion and aliasing transfer functions of the warped bank and
// the quadratic form T_all(w) = h' U(w) h in the prototype half-vector.
//
//     U(w) = sum_k ( sum_l u_a(w, l, k) ) u_s(w, k)'
//
// u_a is the analysis basis evaluated at the l-th alias of w, u_s the
// synthesis basis at w itself. Down/up-sampling gains are not included; the
// time-domain engine compensates with a gain of S_k per channel.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wcmfb/cmfb.hpp"
#include "wcmfb/warpmap.hpp"

namespace wcmfb {

inline constexpr double kDbFloor = -300.0;

inline double to_db(double magnitude) {
  return magnitude > 0.0 ? std::max(20.0 * std::log10(magnitude), kDbFloor) : kDbFloor;
}

inline int default_grid_points(int order_n) { return std::max(8 * order_n, 1024); }

struct BankConfig {
  int channels_m = 0;
  int order_n = 0;
  WarpCoefficient alpha;
  std::vector<int> subsampling;  // S_k, one per channel
  int grid_points = 0;           // 0 selects default_grid_points(order_n)
  std::optional<double> sample_rate_hz;

  int half_length() const noexcept { return order_n / 2; }
  int resolved_grid_points() const {
    return grid_points > 0 ? grid_points : default_grid_points(order_n);
  }

  void validate() const {
    check_order(order_n, channels_m);
    if (static_cast<int>(subsampling.size()) != channels_m) {
      throw std::invalid_argument("subsampling vector has " + std::to_string(subsampling.size()) +
                                  " entries, expected " + std::to_string(channels_m));
    }
    for (int s : subsampling) {
      if (s < 1) throw std::invalid_argument("subsampling ratios must be >= 1");
    }
    if (grid_points != 0 && grid_points < 2) {
      throw std::invalid_argument("grid needs at least two points");
    }
  }
};

/// Frequencies over [0, pi] with per-point weights.
struct SpectralGrid {
  Vector omega;
  Vector weights;

  static SpectralGrid uniform(int points) {
    if (points < 2) throw std::invalid_argument("grid needs at least two points");
    SpectralGrid g{Vector::LinSpaced(points, 0.0, kPi), Vector::Ones(points)};
    g.omega[points - 1] = kPi;
    return g;
  }

  Eigen::Index size() const noexcept { return omega.size(); }
};

struct GammaPair {
  double gamma1;
  double gamma2;
};

/// Uniform-axis arguments at which the prototype is sampled for channel k at
/// alias l of frequency omega.
inline GammaPair gamma(double omega, int l, int k, const BankConfig& config) {
  if (k < 0 || k >= config.channels_m) throw std::out_of_range("channel index out of range");
  const int s = config.subsampling.at(k);
  if (l < 0 || l >= s) throw std::out_of_range("alias index out of range");
  const double theta = -allpass_phase(omega + 2.0 * kPi * l / s, config.alpha);
  const double shift = kPi * (k + 0.5) / config.channels_m;
  return {theta - shift, theta + shift};
}

struct QuadraticForm {
  Matrix u_real;
  Matrix u_imag;

  ComplexMatrix complex_form() const {
    ComplexMatrix u(u_real.rows(), u_real.cols());
    u.real() = u_real;
    u.imag() = u_imag;
    return u;
  }
};

namespace detail {

// Adds scale * e^{-j(N-1)theta/2} C(theta) to out. The cosines come from the
// three-term recurrence cos((i+1.5)t) = 2cos(t)cos((i+0.5)t) - cos((i-0.5)t).
template <typename Row>
inline void add_linear_phase_basis(Row&& out, double theta, int order_n, complex scale) {
  const int half = order_n / 2;
  const complex s = scale * std::polar(1.0, -(order_n - 1) * theta / 2.0);
  const double two_cos = 2.0 * std::cos(theta);
  double prev = std::cos(-0.5 * theta);
  double cur = std::cos(0.5 * theta);
  for (int i = 0; i < half; ++i) {
    out[i] += s * (2.0 * cur);
    const double next = two_cos * cur - prev;
    prev = cur;
    cur = next;
  }
}

template <typename Row>
inline void add_analysis_vector(Row&& out, double omega, int l, int k, const BankConfig& config,
                                const ModulationConstants& mc) {
  const GammaPair g = gamma(omega, l, k, config);
  add_linear_phase_basis(out, g.gamma1, config.order_n, mc.a * mc.b);
  add_linear_phase_basis(out, g.gamma2, config.order_n, std::conj(mc.a * mc.b));
}

template <typename Row>
inline void add_synthesis_vector(Row&& out, double omega, int k, const BankConfig& config,
                                 const ModulationConstants& mc) {
  const GammaPair g = gamma(omega, 0, k, config);
  add_linear_phase_basis(out, g.gamma1, config.order_n, std::conj(mc.a) * mc.b);
  add_linear_phase_basis(out, g.gamma2, config.order_n, mc.a * std::conj(mc.b));
}

}  // namespace detail

/// Per-frequency factors of U(w) for a whole grid. Row (i*M + k) of
/// analysis() holds sum_l u_a(w_i, l, k); the same row of synthesis() holds
/// u_s(w_i, k). Evaluating h' U h costs O(M N) per point instead of O(N^2).
class QuadraticTables {
 public:
  QuadraticTables(const BankConfig& config, const Vector& omega)
      : omega_(omega), channels_m_(config.channels_m), half_(config.half_length()) {
    config.validate();
    const Eigen::Index rows = omega.size() * channels_m_;
    analysis_ = ComplexMatrix::Zero(rows, half_);
    synthesis_ = ComplexMatrix::Zero(rows, half_);
    ComplexVector scratch(half_);
    for (Eigen::Index i = 0; i < omega.size(); ++i) {
      for (int k = 0; k < channels_m_; ++k) {
        const auto mc = ModulationConstants::of(k, config.order_n, channels_m_);
        const Eigen::Index row = i * channels_m_ + k;
        scratch.setZero();
        for (int l = 0; l < config.subsampling[k]; ++l) {
          detail::add_analysis_vector(scratch, omega[i], l, k, config, mc);
        }
        analysis_.row(row) = scratch.transpose();
        scratch.setZero();
        detail::add_synthesis_vector(scratch, omega[i], k, config, mc);
        synthesis_.row(row) = scratch.transpose();
      }
    }
  }

  Eigen::Index points() const noexcept { return omega_.size(); }
  int channels() const noexcept { return channels_m_; }
  int half_length() const noexcept { return half_; }
  const Vector& omega() const noexcept { return omega_; }
  const ComplexMatrix& analysis() const noexcept { return analysis_; }
  const ComplexMatrix& synthesis() const noexcept { return synthesis_; }

  /// Per-row projections a_r = u_a,r' h and s_r = u_s,r' h.
  std::pair<ComplexVector, ComplexVector> projections(const Vector& h) const {
    const ComplexVector hc = h.cast<complex>();
    return {analysis_ * hc, synthesis_ * hc};
  }

  /// T_all at every grid point.
  ComplexVector t_all(const Vector& h) const {
    const auto [a, s] = projections(h);
    ComplexVector t = ComplexVector::Zero(points());
    for (Eigen::Index i = 0; i < points(); ++i) {
      for (int k = 0; k < channels_m_; ++k) t[i] += a[i * channels_m_ + k] * s[i * channels_m_ + k];
    }
    return t;
  }

  /// (U + U')h at every grid point, one row per frequency. Its real and
  /// imaginary parts are the gradients of Re T_all and Im T_all.
  ComplexMatrix symmetric_products(const Vector& h) const {
    const auto [a, s] = projections(h);
    ComplexMatrix out = ComplexMatrix::Zero(points(), half_);
    for (Eigen::Index i = 0; i < points(); ++i) {
      for (int k = 0; k < channels_m_; ++k) {
        const Eigen::Index r = i * channels_m_ + k;
        out.row(i) += s[r] * analysis_.row(r) + a[r] * synthesis_.row(r);
      }
    }
    return out;
  }

  /// sum_i c_i (U_i + U_i') with complex per-point coefficients c_i.
  ComplexMatrix weighted_symmetric_sum(const ComplexVector& coeff) const {
    ComplexMatrix scaled = analysis_;
    for (Eigen::Index i = 0; i < points(); ++i) {
      scaled.middleRows(i * channels_m_, channels_m_) *= coeff[i];
    }
    ComplexMatrix w = scaled.transpose() * synthesis_;
    return w + w.transpose().eval();
  }

 private:
  Vector omega_;
  int channels_m_;
  int half_;
  ComplexMatrix analysis_;
  ComplexMatrix synthesis_;
};

/// Dense U(w) at a single frequency.
inline QuadraticForm assemble_u(double omega, const BankConfig& config) {
  config.validate();
  const int half = config.half_length();
  ComplexMatrix u = ComplexMatrix::Zero(half, half);
  ComplexVector ua(half), us(half);
  for (int k = 0; k < config.channels_m; ++k) {
    const auto mc = ModulationConstants::of(k, config.order_n, config.channels_m);
    ua.setZero();
    for (int l = 0; l < config.subsampling[k]; ++l) {
      detail::add_analysis_vector(ua, omega, l, k, config, mc);
    }
    us.setZero();
    detail::add_synthesis_vector(us, omega, k, config, mc);
    u.noalias() += ua * us.transpose();
  }
  return {u.real(), u.imag()};
}

inline void check_prototype(const PrototypeHalf& h, const BankConfig& config) {
  if (h.order() != config.order_n || h.channels() != config.channels_m) {
    throw std::invalid_argument("prototype does not match bank configuration");
  }
}

/// T_all(e^jw) = h' U(w) h.
inline complex t_all(const PrototypeHalf& h, double omega, const BankConfig& config) {
  check_prototype(h, config);
  const QuadraticForm u = assemble_u(omega, config);
  const Vector& c = h.coeffs();
  return {c.dot(u.u_real * c), c.dot(u.u_imag * c)};
}

struct TransferComponents {
  complex dist;
  complex alias;
  double alias_magnitude_sum = 0.0;  // sum_k sum_{l>=1} |H_k F_k|, incoherent bound

  complex all() const { return dist + alias; }
};

/// Distortion and aliasing parts by direct channel evaluation.
inline TransferComponents transfer_components(const PrototypeHalf& h, double omega,
                                              const BankConfig& config) {
  check_prototype(h, config);
  config.validate();
  TransferComponents out{};
  for (int k = 0; k < config.channels_m; ++k) {
    const complex fk = channel_response_warped(h, k, omega, config.alpha, FilterSide::synthesis);
    out.dist += channel_response_warped(h, k, omega, config.alpha) * fk;
    const int s = config.subsampling[k];
    for (int l = 1; l < s; ++l) {
      const complex term =
          channel_response_warped(h, k, omega + 2.0 * kPi * l / s, config.alpha) * fk;
      out.alias += term;
      out.alias_magnitude_sum += std::abs(term);
    }
  }
  return out;
}

inline complex t_dist(const PrototypeHalf& h, double omega, const BankConfig& config) {
  return transfer_components(h, omega, config).dist;
}

inline complex t_alias(const PrototypeHalf& h, double omega, const BankConfig& config) {
  return transfer_components(h, omega, config).alias;
}

/// E(w) = |T_all(e^jw)|^2 - 1 over the grid.
inline Vector error_function(const PrototypeHalf& h, const QuadraticTables& tables) {
  return tables.t_all(h.coeffs()).cwiseAbs2().array() - 1.0;
}

inline Vector error_function(const PrototypeHalf& h, const SpectralGrid& grid,
                             const BankConfig& config) {
  check_prototype(h, config);
  return error_function(h, QuadraticTables(config, grid.omega));
}

namespace detail {
inline Eigen::Index nearest_index(const Vector& grid, double omega) {
  const double* begin = grid.data();
  const double* end = begin + grid.size();
  const double* it = std::lower_bound(begin, end, omega);
  if (it == end) return grid.size() - 1;
  if (it == begin) return 0;
  return (omega - *(it - 1) <= *it - omega) ? (it - 1 - begin) : (it - begin);
}
}  // namespace detail

/// Bifrequency magnitude (dB), rows = input frequency, columns = output
/// frequency. Input e^{j w_in} through channel k leaves images at
/// w_in - 2 pi l / S_k; images are folded onto [0, pi] (conjugating the term)
/// and summed coherently in the nearest output cell. Empty cells sit at the
/// dB floor.
inline Matrix bifrequency_map(const PrototypeHalf& h, const BankConfig& config,
                              const SpectralGrid& in_grid, const SpectralGrid& out_grid) {
  check_prototype(h, config);
  config.validate();
  if (in_grid.size() < 2 || out_grid.size() < 2) {
    throw std::invalid_argument("bifrequency grids need at least two points");
  }
  for (const Vector* g : {&in_grid.omega, &out_grid.omega}) {
    for (Eigen::Index i = 0; i < g->size(); ++i) {
      if ((*g)[i] < 0.0 || (*g)[i] > kPi || (i > 0 && (*g)[i] <= (*g)[i - 1])) {
        throw std::invalid_argument("bifrequency grids must be increasing within [0, pi]");
      }
    }
  }
  const double two_pi = 2.0 * kPi;
  ComplexMatrix acc = ComplexMatrix::Zero(in_grid.size(), out_grid.size());
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> touched =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(in_grid.size(),
                                                                   out_grid.size(), false);
  for (Eigen::Index i = 0; i < in_grid.size(); ++i) {
    const double w_in = in_grid.omega[i];
    for (int k = 0; k < config.channels_m; ++k) {
      const complex hk = channel_response_warped(h, k, w_in, config.alpha);
      const int s = config.subsampling[k];
      for (int l = 0; l < s; ++l) {
        double w_out = std::fmod(w_in - two_pi * l / s, two_pi);
        if (w_out < 0.0) w_out += two_pi;
        complex term = hk * channel_response_warped(h, k, w_out, config.alpha, FilterSide::synthesis);
        if (w_out > kPi) {
          w_out = two_pi - w_out;
          term = std::conj(term);
        }
        const Eigen::Index j = (l == 0) ? detail::nearest_index(out_grid.omega, w_in)
                                        : detail::nearest_index(out_grid.omega, w_out);
        acc(i, j) += term;
        touched(i, j) = true;
      }
    }
  }
  Matrix db(in_grid.size(), out_grid.size());
  for (Eigen::Index i = 0; i < db.rows(); ++i) {
    for (Eigen::Index j = 0; j < db.cols(); ++j) {
      db(i, j) = touched(i, j) ? to_db(std::abs(acc(i, j))) : kDbFloor;
    }
  }
  return db;
}

}  // namespace wcmfb

#endif  // WCMFB_TRANSFER_HPP_
