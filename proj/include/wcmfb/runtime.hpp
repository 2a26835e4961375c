#ifndef WCMFB_RUNTIME_HPP_
#define WCMFB_RUNTIME_HPP_

// Sample-by-sample analysis -> decimation -> expansion -> synthesis with every
// unit delay replaced by the warping allpass section.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wcmfb/cmfb.hpp"
#include "wcmfb/optimizer.hpp"
#include "wcmfb/warpmap.hpp"

namespace wcmfb {

/// Tapped cascade of N-1 allpass sections; tap n holds D(z)^n applied to the input.
class AllpassLine {
 public:
  AllpassLine() = default;
  AllpassLine(int taps, WarpCoefficient alpha)
      : sections_(std::max(taps - 1, 0), AllpassSection(alpha)), taps_(taps, 0.0) {
    if (taps < 1) throw std::invalid_argument("allpass line needs at least one tap");
  }

  void push(double x) noexcept {
    taps_[0] = x;
    for (std::size_t i = 0; i < sections_.size(); ++i) taps_[i + 1] = sections_[i].step(taps_[i]);
  }

  void reset() noexcept {
    for (auto& s : sections_) s.reset();
    std::fill(taps_.begin(), taps_.end(), 0.0);
  }

  std::span<const double> taps() const noexcept { return taps_; }

  double dot(const double* coeffs) const noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < taps_.size(); ++i) acc += coeffs[i] * taps_[i];
    return acc;
  }

 private:
  std::vector<AllpassSection> sections_;
  std::vector<double> taps_;
};

struct SubbandFrame {
  int channel = 0;
  std::vector<double> samples;
  int ratio = 1;
  int phase = 0;
};

/// Row-major copies of the channel filters for tight inner loops.
struct RuntimeBank {
  int channels_m = 0;
  int order_n = 0;
  WarpCoefficient alpha;
  std::vector<int> ratios;
  std::vector<double> analysis;   // M*N
  std::vector<double> synthesis;  // M*N

  static RuntimeBank from(const BankDesign& design) {
    const auto& f = design.filters;
    RuntimeBank bank{design.config.channels_m, design.config.order_n, design.config.alpha,
                     design.config.subsampling, {}, {}};
    if (f.analysis.rows() != bank.channels_m || f.analysis.cols() != bank.order_n ||
        f.synthesis.rows() != bank.channels_m || f.synthesis.cols() != bank.order_n) {
      throw std::invalid_argument("channel filters do not match the configuration");
    }
    if (static_cast<int>(bank.ratios.size()) != bank.channels_m) {
      throw std::invalid_argument("design has no subsampling vector");
    }
    bank.analysis.resize(static_cast<std::size_t>(bank.channels_m) * bank.order_n);
    bank.synthesis.resize(bank.analysis.size());
    for (int k = 0; k < bank.channels_m; ++k) {
      for (int n = 0; n < bank.order_n; ++n) {
        bank.analysis[static_cast<std::size_t>(k) * bank.order_n + n] = f.analysis(k, n);
        bank.synthesis[static_cast<std::size_t>(k) * bank.order_n + n] = f.synthesis(k, n);
      }
    }
    return bank;
  }

  const double* analysis_row(int k) const {
    return analysis.data() + static_cast<std::size_t>(k) * order_n;
  }
  const double* synthesis_row(int k) const {
    return synthesis.data() + static_cast<std::size_t>(k) * order_n;
  }
};

/// Streaming analysis half: one shared allpass line feeds every channel.
class Analyzer {
 public:
  explicit Analyzer(RuntimeBank bank, int phase = 0)
      : bank_(std::move(bank)), line_(bank_.order_n, bank_.alpha), phase_(phase) {}

  /// Pushes one sample; channel k emits into out[k] when the sample index
  /// hits its decimation grid.
  void push(double x, std::vector<std::vector<double>>& out) {
    line_.push(x);
    for (int k = 0; k < bank_.channels_m; ++k) {
      const int s = bank_.ratios[k];
      if (((index_ - phase_ % s) % s + s) % s == 0) out[k].push_back(line_.dot(bank_.analysis_row(k)));
    }
    ++index_;
  }

  void reset() {
    line_.reset();
    index_ = 0;
  }

  const RuntimeBank& bank() const noexcept { return bank_; }

 private:
  RuntimeBank bank_;
  AllpassLine line_;
  int phase_;
  long long index_ = 0;
};

/// Streaming synthesis half: each channel owns its allpass line.
class Synthesizer {
 public:
  explicit Synthesizer(RuntimeBank bank, std::vector<double> gains = {}, int phase = 0)
      : bank_(std::move(bank)), gains_(std::move(gains)), phase_(phase) {
    if (gains_.empty()) gains_.assign(bank_.channels_m, 1.0);
    if (static_cast<int>(gains_.size()) != bank_.channels_m) {
      throw std::invalid_argument("one gain per channel required");
    }
    lines_.assign(bank_.channels_m, AllpassLine(bank_.order_n, bank_.alpha));
  }

  /// Next output sample. `subband(k)` is consulted only on channel k's grid.
  template <typename Fetch>
  double pull(Fetch&& subband) {
    double y = 0.0;
    for (int k = 0; k < bank_.channels_m; ++k) {
      const int s = bank_.ratios[k];
      const bool on_grid = ((index_ - phase_ % s) % s + s) % s == 0;
      const double v = on_grid ? s * gains_[k] * subband(k) : 0.0;
      lines_[k].push(v);
      y += lines_[k].dot(bank_.synthesis_row(k));
    }
    ++index_;
    return y;
  }

  void reset() {
    for (auto& l : lines_) l.reset();
    index_ = 0;
  }

 private:
  RuntimeBank bank_;
  std::vector<double> gains_;
  int phase_;
  std::vector<AllpassLine> lines_;
  long long index_ = 0;
};

inline std::vector<SubbandFrame> analyze(const BankDesign& design, std::span<const double> signal,
                                         int phase = 0) {
  if (signal.empty()) throw std::invalid_argument("analyze: empty signal");
  Analyzer analyzer(RuntimeBank::from(design), phase);
  const int m = design.config.channels_m;
  std::vector<std::vector<double>> buffers(m);
  for (int k = 0; k < m; ++k) {
    buffers[k].reserve(signal.size() / design.config.subsampling[k] + 1);
  }
  for (double x : signal) analyzer.push(x, buffers);
  std::vector<SubbandFrame> frames(m);
  for (int k = 0; k < m; ++k) {
    const int s = design.config.subsampling[k];
    frames[k] = {k, std::move(buffers[k]), s, ((phase % s) + s) % s};
  }
  return frames;
}

/// Output length equals `length`, or the longest reconstructible length when 0.
inline std::vector<double> synthesize(const BankDesign& design,
                                      const std::vector<SubbandFrame>& frames,
                                      std::vector<double> gains = {}, std::size_t length = 0) {
  const auto& cfg = design.config;
  if (static_cast<int>(frames.size()) != cfg.channels_m) {
    throw std::invalid_argument("synthesize: expected " + std::to_string(cfg.channels_m) +
                                " subband frames, got " + std::to_string(frames.size()));
  }
  std::size_t natural = std::numeric_limits<std::size_t>::max();
  int phase = 0;
  int widest = 0;
  for (const auto& f : frames) {
    if (f.ratio > widest) {
      widest = f.ratio;
      phase = f.phase;
    }
  }
  for (int k = 0; k < cfg.channels_m; ++k) {
    const auto& f = frames[k];
    if (f.channel != k || f.ratio != cfg.subsampling[k]) {
      throw std::invalid_argument("synthesize: frame " + std::to_string(k) +
                                  " does not match the design's channel/ratio");
    }
    if (f.phase != phase % f.ratio) {
      throw std::invalid_argument("synthesize: frames use inconsistent decimation phases");
    }
    natural = std::min(natural, f.samples.size() * static_cast<std::size_t>(f.ratio));
  }
  if (length == 0) length = natural;
  for (const auto& f : frames) {
    const std::size_t grid_points =
        length > static_cast<std::size_t>(f.phase) ? (length - f.phase + f.ratio - 1) / f.ratio : 0;
    if (f.samples.size() < grid_points) {
      throw std::invalid_argument("synthesize: frame " + std::to_string(f.channel) + " holds " +
                                  std::to_string(f.samples.size()) + " samples, " +
                                  std::to_string(grid_points) + " needed");
    }
  }
  Synthesizer synth(RuntimeBank::from(design), std::move(gains), phase);
  std::vector<std::size_t> cursor(cfg.channels_m, 0);
  std::vector<double> out(length);
  for (std::size_t n = 0; n < length; ++n) {
    out[n] = synth.pull([&](int k) {
      const auto& s = frames[k].samples;
      return cursor[k] < s.size() ? s[cursor[k]++] : 0.0;
    });
  }
  return out;
}

inline int default_settle(const BankDesign& design) {
  const auto& r = design.config.subsampling;
  return 4 * design.config.order_n * *std::max_element(r.begin(), r.end());
}

/// Steady-state |T_all| in dB from unit sinusoid probes, measured by
/// Hann-windowed quadrature correlation. Phase is discarded.
inline std::vector<double> measure_response(const BankDesign& design,
                                            std::span<const double> probe_freqs, int settle = -1,
                                            int window = 8192) {
  if (settle < 0) settle = default_settle(design);
  if (window < 16) throw std::invalid_argument("measurement window too short");
  for (double w : probe_freqs) {
    if (!(w > 0.0 && w < kPi)) {
      throw std::domain_error("probe frequency " + std::to_string(w) +
                              " must lie strictly inside (0, pi)");
    }
  }
  const RuntimeBank bank = RuntimeBank::from(design);
  std::vector<double> hann(window);
  for (int n = 0; n < window; ++n) hann[n] = 0.5 - 0.5 * std::cos(2.0 * kPi * (n + 0.5) / window);
  const double hann_sum = std::accumulate(hann.begin(), hann.end(), 0.0);

  std::vector<double> result;
  result.reserve(probe_freqs.size());
  const int m = bank.channels_m;
  for (double w : probe_freqs) {
    Analyzer analyzer(bank);
    Synthesizer synth(bank);
    std::vector<std::vector<double>> sub(m);
    std::vector<std::size_t> cursor(m, 0);
    std::complex<double> acc = 0.0;
    const long long total = static_cast<long long>(settle) + window;
    for (long long n = 0; n < total; ++n) {
      analyzer.push(std::cos(w * static_cast<double>(n)), sub);
      const double y = synth.pull([&](int k) { return sub[k][cursor[k]++]; });
      if (n >= settle) {
        const long long i = n - settle;
        acc += hann[i] * y * std::polar(1.0, -w * static_cast<double>(n));
      }
      // Drop consumed subband samples to bound memory.
      for (int k = 0; k < m; ++k) {
        if (cursor[k] > 4096) {
          sub[k].erase(sub[k].begin(), sub[k].begin() + static_cast<long>(cursor[k]));
          cursor[k] = 0;
        }
      }
    }
    result.push_back(to_db(2.0 * std::abs(acc) / hann_sum));
  }
  return result;
}

}  // namespace wcmfb

#endif  // WCMFB_RUNTIME_HPP_
