#ifndef WCMFB_OPTIMIZER_HPP_
#define WCMFB_OPTIMIZER_HPP_

// Prototype design by reweighted least squares.
//
// Inner loop: damped Newton on g(h) = sum_w B(w) E(w)^2 with B fixed.
// Outer loop: B is reshaped by the piecewise-linear envelope of the extrema of
// |E|, which pushes the least-squares solution towards equiripple.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wcmfb/cmfb.hpp"
#include "wcmfb/transfer.hpp"

namespace wcmfb {

struct OptimizerOptions {
  double theta = 1.2;             // envelope exponent, 1 <= theta <= 1.5
  double psi = 0.6;               // envelope flatness for termination
  int max_inner = 50;
  int max_outer = 30;
  double step_tolerance = 1e-10;  // on ||e||^2
  double kaiser_beta = 9.0;
  // Outer loop also ends once max|E| has failed to improve by stall_tolerance
  // (relative) for stall_patience consecutive iterations.
  double stall_tolerance = 1e-2;
  int stall_patience = 3;
};

class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WeightState {
  Vector weights;
  int outer_iteration = 0;
};

/// Everything the inner loop needs at one iterate.
struct ObjectiveTerms {
  Vector error;      // E(w)
  double value = 0;  // g
  Vector gradient;
  Matrix hessian;
};

namespace detail {

inline void check_weights(const Vector& weights, Eigen::Index points) {
  if (weights.size() != points) throw std::invalid_argument("weight vector does not match grid");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("weights must be nonnegative");
}

inline ObjectiveTerms evaluate_objective(const Vector& h, const Vector& weights,
                                         const QuadraticTables& tables, bool with_gradient,
                                         bool with_hessian) {
  check_weights(weights, tables.points());
  ObjectiveTerms out;
  const ComplexVector t = tables.t_all(h);
  out.error = t.cwiseAbs2().array() - 1.0;
  out.value = (weights.array() * out.error.array().square()).sum();
  if (!with_gradient && !with_hessian) return out;

  // Row i: p_i = grad Re T, q_i = grad Im T.
  const ComplexMatrix sym_h = tables.symmetric_products(h);
  const Matrix p = sym_h.real();
  const Matrix q = sym_h.imag();
  const Vector tr = t.real();
  const Vector ti = t.imag();

  // grad E_i = 2 Tr_i p_i + 2 Ti_i q_i
  Matrix grad_e = 2.0 * (tr.asDiagonal() * p + ti.asDiagonal() * q);
  const Vector be = weights.cwiseProduct(out.error);
  out.gradient = 2.0 * grad_e.transpose() * be;
  if (!with_hessian) return out;

  // hess g = sum 2B gE gE' + 4BE (p p' + q q') + 4BE (Tr Sym_r + Ti Sym_i)
  const Vector two_b = 2.0 * weights;
  out.hessian = grad_e.transpose() * two_b.asDiagonal() * grad_e;
  const Vector four_be = 4.0 * be;
  out.hessian.noalias() += p.transpose() * four_be.asDiagonal() * p;
  out.hessian.noalias() += q.transpose() * four_be.asDiagonal() * q;
  ComplexVector coeff(tables.points());
  for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff[i] = four_be[i] * complex(tr[i], -ti[i]);
  out.hessian += tables.weighted_symmetric_sum(coeff).real();
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose()).eval();
  return out;
}

}  // namespace detail

inline double objective(const PrototypeHalf& h, const Vector& weights,
                        const QuadraticTables& tables) {
  return detail::evaluate_objective(h.coeffs(), weights, tables, false, false).value;
}

inline Vector gradient(const PrototypeHalf& h, const Vector& weights,
                       const QuadraticTables& tables) {
  return detail::evaluate_objective(h.coeffs(), weights, tables, true, false).gradient;
}

inline Matrix hessian(const PrototypeHalf& h, const Vector& weights,
                      const QuadraticTables& tables) {
  return detail::evaluate_objective(h.coeffs(), weights, tables, true, true).hessian;
}

inline double objective(const PrototypeHalf& h, const SpectralGrid& grid,
                        const BankConfig& config) {
  check_prototype(h, config);
  return objective(h, grid.weights, QuadraticTables(config, grid.omega));
}

inline Vector gradient(const PrototypeHalf& h, const SpectralGrid& grid,
                       const BankConfig& config) {
  check_prototype(h, config);
  return gradient(h, grid.weights, QuadraticTables(config, grid.omega));
}

inline Matrix hessian(const PrototypeHalf& h, const SpectralGrid& grid,
                      const BankConfig& config) {
  check_prototype(h, config);
  return hessian(h, grid.weights, QuadraticTables(config, grid.omega));
}

struct InnerResult {
  PrototypeHalf h;
  int iterations = 0;               // accepted steps
  std::vector<double> objective_trace;  // g at h0 and after every accepted step
  double damping = 0.0;             // final lambda
};

/// Newton steps (H + lambda I) e = -grad g. Lambda starts at 0, grows x10
/// when a step raises g or the factorization fails, shrinks x10 after every
/// accepted step. Stops when ||e||^2 <= step_tolerance.
inline InnerResult inner_loop(const PrototypeHalf& h0, const Vector& weights,
                              const QuadraticTables& tables,
                              const OptimizerOptions& options = {}) {
  if (!h0.coeffs().allFinite()) throw OptimizationError("initial coefficients are not finite");
  InnerResult result{h0, 0, {}, 0.0};
  Vector h = h0.coeffs();
  ObjectiveTerms terms = detail::evaluate_objective(h, weights, tables, true, true);
  if (!std::isfinite(terms.value)) throw OptimizationError("objective is not finite at h0");
  result.objective_trace.push_back(terms.value);

  double lambda = 0.0;
  for (int iter = 0; iter < options.max_inner; ++iter) {
    const double scale = std::max(terms.hessian.diagonal().cwiseAbs().maxCoeff(),
                                  std::numeric_limits<double>::min());
    const double lambda_max = 1e16 * scale;
    bool accepted = false;
    bool converged = false;
    while (true) {
      Matrix system = terms.hessian;
      system.diagonal().array() += lambda;
      Eigen::LLT<Matrix> llt(system);
      if (llt.info() == Eigen::Success) {
        const Vector step = llt.solve(-terms.gradient);
        const double step_sq = step.squaredNorm();
        if (step.allFinite()) {
          const Vector trial = h + step;
          ObjectiveTerms trial_terms =
              detail::evaluate_objective(trial, weights, tables, false, false);
          if (std::isfinite(trial_terms.value) && trial_terms.value <= terms.value) {
            h = trial;
            accepted = true;
            converged = step_sq <= options.step_tolerance;
            lambda /= 10.0;
            break;
          }
          if (step_sq <= options.step_tolerance) {
            converged = true;
            break;
          }
        }
      }
      lambda = (lambda == 0.0) ? 1e-12 * scale : 10.0 * lambda;
      if (lambda > lambda_max) {
        throw OptimizationError("Newton system stays singular at maximum damping (lambda=" +
                                std::to_string(lambda) + ", gradient norm=" +
                                std::to_string(terms.gradient.norm()) + ")");
      }
    }
    if (accepted) {
      ++result.iterations;
      terms = detail::evaluate_objective(h, weights, tables, !converged, !converged);
      result.objective_trace.push_back(terms.value);
    }
    if (converged) break;
  }
  result.h = PrototypeHalf(h, h0.order(), h0.channels());
  result.damping = lambda;
  return result;
}

struct Extremum {
  Eigen::Index index;
  double value;
};

/// Local maxima of |E| (endpoints always included), with every extremum that
/// does not exceed the smaller of its neighbours raised to that level.
inline std::vector<Extremum> find_extrema(const Vector& abs_error) {
  const Eigen::Index n = abs_error.size();
  std::vector<Extremum> raw;
  if (n == 0) return raw;
  raw.push_back({0, abs_error[0]});
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    if (abs_error[i] > abs_error[i - 1] && abs_error[i] >= abs_error[i + 1]) {
      raw.push_back({i, abs_error[i]});
    }
  }
  if (n > 1) raw.push_back({n - 1, abs_error[n - 1]});

  std::vector<Extremum> clamped = raw;
  for (std::size_t l = 0; l < raw.size(); ++l) {
    double threshold = std::numeric_limits<double>::infinity();
    if (l > 0) threshold = std::min(threshold, raw[l - 1].value);
    if (l + 1 < raw.size()) threshold = std::min(threshold, raw[l + 1].value);
    if (raw.size() > 1 && raw[l].value <= threshold) clamped[l].value = threshold;
  }
  return clamped;
}

/// Piecewise-linear interpolation of the extrema over the grid.
inline Vector envelope(const std::vector<Extremum>& extrema, const Vector& omega) {
  if (extrema.empty()) throw std::invalid_argument("envelope needs at least one extremum");
  Vector beta(omega.size());
  std::size_t l = 0;
  for (Eigen::Index i = 0; i < omega.size(); ++i) {
    const double w = omega[i];
    while (l + 1 < extrema.size() && omega[extrema[l + 1].index] < w) ++l;
    if (l + 1 >= extrema.size() || w <= omega[extrema[l].index]) {
      beta[i] = extrema[std::min(l, extrema.size() - 1)].value;
      continue;
    }
    const double w0 = omega[extrema[l].index];
    const double w1 = omega[extrema[l + 1].index];
    if (w == w1) {
      beta[i] = extrema[l + 1].value;
      continue;
    }
    beta[i] = ((w - w0) * extrema[l + 1].value + (w1 - w) * extrema[l].value) / (w1 - w0);
  }
  return beta;
}

struct WeightUpdate {
  Vector weights;
  double normalization = 0.0;  // A_mu
};

/// B' = B beta^theta / A,  A = sqrt(sum B^2 beta^(2 theta)).
inline WeightUpdate update_weights(const Vector& weights, const Vector& beta, double theta) {
  if (weights.size() != beta.size()) throw std::invalid_argument("weights/envelope size mismatch");
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  const Vector scaled = weights.array() * beta.array().pow(theta);
  const double a = scaled.norm();
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw OptimizationError("weight normalization vanished; envelope is identically zero");
  }
  return {scaled / a, a};
}

inline double envelope_flatness(const Vector& beta) {
  const double hi = beta.maxCoeff();
  const double lo = beta.minCoeff();
  return (hi + lo) > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
}

/// Zeroth-order modified Bessel function based Kaiser window.
inline Vector kaiser_window(int length, double beta) {
  Vector w(length);
  const double denom = std::cyl_bessel_i(0.0, beta);
  for (int n = 0; n < length; ++n) {
    const double r = length > 1 ? 2.0 * n / (length - 1) - 1.0 : 0.0;
    w[n] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
  }
  return w;
}

/// Kaiser-windowed sinc of length N and cutoff `cutoff`, DC gain 1.
inline Vector windowed_lowpass(int order_n, double cutoff, double beta) {
  const Vector win = kaiser_window(order_n, beta);
  Vector h(order_n);
  for (int n = 0; n < order_n; ++n) {
    const double t = n - (order_n - 1) / 2.0;
    h[n] = (cutoff / kPi) * (t == 0.0 ? 1.0 : std::sin(cutoff * t) / (cutoff * t)) * win[n];
  }
  return h / h.sum();
}

/// Windowed start point. The sinc cutoff is bisected so that the prototype is
/// power complementary at the channel crossover: |H(pi/2M)|^2 = 1/2.
inline PrototypeHalf initial_prototype(int order_n, int channels_m, double kaiser_beta = 9.0) {
  check_order(order_n, channels_m);
  const double crossover = kPi / (2.0 * channels_m);
  auto gain_sq = [&](double cutoff) {
    const auto half = PrototypeHalf::from_full(windowed_lowpass(order_n, cutoff, kaiser_beta),
                                               channels_m);
    return std::norm(prototype_response(half, crossover));
  };
  double lo = 0.25 * crossover;
  double hi = std::min(4.0 * crossover, kPi);
  if (gain_sq(lo) < 0.5 && gain_sq(hi) > 0.5) {
    for (int i = 0; i < 100 && hi - lo > 1e-15; ++i) {
      const double mid = 0.5 * (lo + hi);
      (gain_sq(mid) > 0.5 ? hi : lo) = mid;
    }
  } else {
    lo = hi = crossover;
  }
  return PrototypeHalf::from_full(windowed_lowpass(order_n, 0.5 * (lo + hi), kaiser_beta),
                                  channels_m);
}

inline PrototypeHalf initial_prototype(const BankConfig& config, double kaiser_beta = 9.0) {
  return initial_prototype(config.order_n, config.channels_m, kaiser_beta);
}

struct DesignMetrics {
  double ripple_db = 0.0;     // peak-to-peak of 20 log10 |T_all|
  double max_error = 0.0;     // max |E|
  double max_alias_db = kDbFloor;
  int outer_iterations = 0;
  bool converged = false;
};

enum class Termination { flatness, stalled, iteration_cap };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::flatness: return "flatness";
    case Termination::stalled: return "stalled";
    case Termination::iteration_cap: return "iteration_cap";
  }
  return "unknown";
}

struct OptimizerReport {
  std::vector<std::vector<double>> objective_trace;  // one inner trace per outer iteration
  std::vector<int> inner_iterations;
  std::vector<double> max_error;        // max |E| after each outer iteration
  std::vector<double> flatness;         // envelope flatness after each outer iteration
  std::vector<double> normalization;    // A_mu of each weight update
  std::vector<double> min_weight;       // min B after each weight update
  int outer_iterations = 0;
  double initial_ripple_db = 0.0;
  double final_ripple_db = 0.0;
  double final_alias_db = kDbFloor;
  Termination termination = Termination::iteration_cap;
};

struct BankDesign {
  BankConfig config;
  PrototypeHalf prototype;
  ChannelFilters filters;
  DesignMetrics metrics;
};

struct DesignResult {
  BankDesign design;
  OptimizerReport report;
};

inline double ripple_db(const ComplexVector& t) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double db = to_db(std::abs(t[i]));
    lo = std::min(lo, db);
    hi = std::max(hi, db);
  }
  return hi - lo;
}

/// Peak |T_alias| over the grid in dB.
inline double max_alias_db(const PrototypeHalf& h, const BankConfig& config, const Vector& omega) {
  double peak = 0.0;
  for (Eigen::Index i = 0; i < omega.size(); ++i) {
    peak = std::max(peak, std::abs(t_alias(h, omega[i], config)));
  }
  return to_db(peak);
}

inline DesignMetrics evaluate_metrics(const PrototypeHalf& h, const BankConfig& config,
                                      const QuadraticTables& tables) {
  DesignMetrics m;
  const ComplexVector t = tables.t_all(h.coeffs());
  m.ripple_db = ripple_db(t);
  m.max_error = (t.cwiseAbs2().array() - 1.0).abs().maxCoeff();
  m.max_alias_db = max_alias_db(h, config, tables.omega());
  return m;
}

/// Full design from a configuration whose subsampling vector is already set.
inline DesignResult design(const BankConfig& config, const OptimizerOptions& options = {},
                           std::optional<PrototypeHalf> start = std::nullopt) {
  config.validate();
  if (options.max_outer < 1 || options.max_inner < 1) {
    throw std::invalid_argument("iteration caps must be >= 1");
  }
  const SpectralGrid grid = SpectralGrid::uniform(config.resolved_grid_points());
  const QuadraticTables tables(config, grid.omega);

  PrototypeHalf h = start ? *start : initial_prototype(config, options.kaiser_beta);
  check_prototype(h, config);

  DesignResult result;
  OptimizerReport& report = result.report;
  report.initial_ripple_db = ripple_db(tables.t_all(h.coeffs()));

  Vector weights = grid.weights;
  PrototypeHalf best = h;
  double best_error = std::numeric_limits<double>::infinity();
  double stall_reference = std::numeric_limits<double>::infinity();
  int stall_count = 0;

  for (int mu = 0; mu < options.max_outer; ++mu) {
    InnerResult inner = inner_loop(h, weights, tables, options);
    h = inner.h;
    report.objective_trace.push_back(std::move(inner.objective_trace));
    report.inner_iterations.push_back(inner.iterations);
    report.outer_iterations = mu + 1;

    const Vector abs_error = error_function(h, tables).cwiseAbs();
    const double max_err = abs_error.maxCoeff();
    report.max_error.push_back(max_err);
    if (max_err < best_error) {
      best_error = max_err;
      best = h;
    }

    const Vector beta = envelope(find_extrema(abs_error), grid.omega);
    const double flat = envelope_flatness(beta);
    report.flatness.push_back(flat);
    if (flat <= options.psi) {
      report.termination = Termination::flatness;
      break;
    }

    if (max_err < stall_reference * (1.0 - options.stall_tolerance)) {
      stall_reference = max_err;
      stall_count = 0;
    } else if (++stall_count >= options.stall_patience) {
      report.termination = Termination::stalled;
      break;
    }

    if (mu + 1 == options.max_outer) break;
    WeightUpdate update = update_weights(weights, beta, options.theta);
    weights = std::move(update.weights);
    report.normalization.push_back(update.normalization);
    report.min_weight.push_back(weights.minCoeff());
  }

  BankDesign& d = result.design;
  d.config = config;
  d.prototype = best;
  d.filters = modulate(best);
  d.metrics = evaluate_metrics(best, config, tables);
  d.metrics.outer_iterations = report.outer_iterations;
  d.metrics.converged = report.termination != Termination::iteration_cap;
  report.final_ripple_db = d.metrics.ripple_db;
  report.final_alias_db = d.metrics.max_alias_db;
  return result;
}

}  // namespace wcmfb

#endif  // WCMFB_OPTIMIZER_HPP_
