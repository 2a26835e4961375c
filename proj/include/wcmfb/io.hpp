#ifndef WCMFB_IO_HPP_
#define WCMFB_IO_HPP_

// Configuration and design files (JSON), CSV curves, WAV and raw float32 audio.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "wcmfb/optimizer.hpp"
#include "wcmfb/subsampling.hpp"

namespace wcmfb::io {

using nlohmann::json;

/// Malformed or inconsistent input file. The CLI maps this to exit status 2.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DesignConfigFile {
  int channels = 0;
  int order = 0;
  double alpha = 0.0;
  std::optional<double> sample_rate_hz;
  double theta = 1.2;
  double psi = 0.6;
  std::optional<int> grid_points;  // default max(8N, 1024)
  double kaiser_beta = 9.0;
  int max_inner = 50;
  int max_outer = 30;
  std::optional<std::vector<int>> subsampling;  // nullopt = "auto"

  friend bool operator==(const DesignConfigFile&, const DesignConfigFile&) = default;

  OptimizerOptions options() const {
    OptimizerOptions o;
    o.theta = theta;
    o.psi = psi;
    o.kaiser_beta = kaiser_beta;
    o.max_inner = max_inner;
    o.max_outer = max_outer;
    return o;
  }

  /// Bank configuration with "auto" subsampling resolved.
  BankConfig bank_config() const {
    BankConfig cfg;
    cfg.channels_m = channels;
    cfg.order_n = order;
    cfg.alpha = WarpCoefficient(alpha);
    cfg.subsampling = subsampling ? *subsampling : select_all(channels, cfg.alpha);
    cfg.grid_points = grid_points.value_or(0);
    cfg.sample_rate_hz = sample_rate_hz;
    cfg.validate();
    return cfg;
  }
};

namespace detail {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing required field '") + key + "'");
  try {
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ParseError(std::string("field '") + key + "' must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ParseError(std::string("field '") + key + "' must be an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ParseError(std::string("field '") + key + "' must be a number");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return field<T>(j, key);
}

}  // namespace detail

inline DesignConfigFile parse_config(const json& j) {
  if (!j.is_object()) throw ParseError("configuration must be a JSON object");
  static const std::array<const char*, 11> known = {
      "channels", "order",     "alpha",     "sample_rate_hz", "theta",      "psi",
      "grid_points", "kaiser_beta", "max_inner", "max_outer", "subsampling"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ParseError("unknown configuration field '" + key + "'");
  }
  DesignConfigFile c;
  c.channels = detail::field<int>(j, "channels");
  c.order = detail::field<int>(j, "order");
  c.alpha = detail::field<double>(j, "alpha");
  c.sample_rate_hz = detail::optional_field<double>(j, "sample_rate_hz");
  c.theta = detail::optional_field<double>(j, "theta").value_or(c.theta);
  c.psi = detail::optional_field<double>(j, "psi").value_or(c.psi);
  c.grid_points = detail::optional_field<int>(j, "grid_points");
  c.kaiser_beta = detail::optional_field<double>(j, "kaiser_beta").value_or(c.kaiser_beta);
  c.max_inner = detail::optional_field<int>(j, "max_inner").value_or(c.max_inner);
  c.max_outer = detail::optional_field<int>(j, "max_outer").value_or(c.max_outer);
  if (j.contains("subsampling")) {
    const json& s = j.at("subsampling");
    if (s.is_string()) {
      if (s.get<std::string>() != "auto") throw ParseError("subsampling must be \"auto\" or a list");
    } else if (s.is_array()) {
      std::vector<int> ratios;
      for (const auto& v : s) {
        if (!v.is_number_integer()) throw ParseError("subsampling entries must be integers");
        ratios.push_back(v.get<int>());
      }
      c.subsampling = std::move(ratios);
    } else {
      throw ParseError("subsampling must be \"auto\" or a list");
    }
  }

  try {
    check_order(c.order, c.channels);
    (void)WarpCoefficient(c.alpha);
  } catch (const std::exception& e) {
    throw ParseError(e.what());
  }
  if (c.subsampling && static_cast<int>(c.subsampling->size()) != c.channels) {
    throw ParseError("subsampling list must have one entry per channel");
  }
  if (c.subsampling) {
    for (int s : *c.subsampling) {
      if (s < 1) throw ParseError("subsampling ratios must be >= 1");
    }
  }
  if (c.grid_points && *c.grid_points < 2) throw ParseError("grid_points must be >= 2");
  if (!(c.theta > 0.0)) throw ParseError("theta must be positive");
  if (!(c.psi >= 0.0)) throw ParseError("psi must be nonnegative");
  if (c.max_inner < 1 || c.max_outer < 1) throw ParseError("iteration caps must be >= 1");
  return c;
}

inline json to_json(const DesignConfigFile& c) {
  json j;
  j["channels"] = c.channels;
  j["order"] = c.order;
  j["alpha"] = c.alpha;
  if (c.sample_rate_hz) j["sample_rate_hz"] = *c.sample_rate_hz;
  j["theta"] = c.theta;
  j["psi"] = c.psi;
  if (c.grid_points) j["grid_points"] = *c.grid_points;
  j["kaiser_beta"] = c.kaiser_beta;
  j["max_inner"] = c.max_inner;
  j["max_outer"] = c.max_outer;
  if (c.subsampling) {
    j["subsampling"] = *c.subsampling;
  } else {
    j["subsampling"] = "auto";
  }
  return j;
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline DesignConfigFile load_config(const std::string& path) { return parse_config(read_json(path)); }

// ---------------------------------------------------------------------------
// Design files

inline constexpr const char* kDesignFormat = "wcmfb-design";
inline constexpr int kDesignVersion = 1;

inline json to_json(const BankDesign& d) {
  const auto& c = d.config;
  json j;
  j["format"] = kDesignFormat;
  j["version"] = kDesignVersion;
  j["channels"] = c.channels_m;
  j["order"] = c.order_n;
  j["alpha"] = c.alpha.value();
  j["sample_rate_hz"] = c.sample_rate_hz ? json(*c.sample_rate_hz) : json(nullptr);
  j["grid_points"] = c.resolved_grid_points();
  j["subsampling"] = c.subsampling;
  const Vector full = d.prototype.full();
  j["prototype"] = std::vector<double>(full.data(), full.data() + full.size());
  const Vector& half = d.prototype.coeffs();
  j["prototype_half"] = std::vector<double>(half.data(), half.data() + half.size());
  j["metrics"] = {{"ripple_db", d.metrics.ripple_db},
                  {"max_error", d.metrics.max_error},
                  {"max_alias_db", d.metrics.max_alias_db},
                  {"outer_iterations", d.metrics.outer_iterations},
                  {"converged", d.metrics.converged}};
  return j;
}

inline BankDesign design_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != kDesignFormat) {
    throw ParseError("not a wcmfb design file");
  }
  if (detail::field<int>(j, "version") != kDesignVersion) throw ParseError("unsupported design file version");
  BankDesign d;
  auto& c = d.config;
  try {
    c.channels_m = detail::field<int>(j, "channels");
    c.order_n = detail::field<int>(j, "order");
    c.alpha = WarpCoefficient(detail::field<double>(j, "alpha"));
    c.sample_rate_hz = detail::optional_field<double>(j, "sample_rate_hz");
    c.grid_points = detail::field<int>(j, "grid_points");
    c.subsampling = detail::field<std::vector<int>>(j, "subsampling");
    c.validate();
    const auto full = detail::field<std::vector<double>>(j, "prototype");
    const auto half = detail::field<std::vector<double>>(j, "prototype_half");
    if (static_cast<int>(full.size()) != c.order_n || static_cast<int>(half.size()) != c.order_n / 2) {
      throw ParseError("prototype lengths do not match the order");
    }
    for (int i = 0; i < c.order_n / 2; ++i) {
      if (full[c.order_n / 2 + i] != half[i] || full[c.order_n / 2 - 1 - i] != half[i]) {
        throw ParseError("prototype is not the symmetric extension of prototype_half");
      }
    }
    d.prototype = PrototypeHalf(Eigen::Map<const Vector>(half.data(), static_cast<Eigen::Index>(half.size())),
                                c.order_n, c.channels_m);
    const json& m = j.at("metrics");
    d.metrics.ripple_db = detail::field<double>(m, "ripple_db");
    d.metrics.max_error = detail::field<double>(m, "max_error");
    d.metrics.max_alias_db = detail::field<double>(m, "max_alias_db");
    d.metrics.outer_iterations = detail::field<int>(m, "outer_iterations");
    d.metrics.converged = detail::field<bool>(m, "converged");
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("invalid design file: ") + e.what());
  }
  d.filters = modulate(d.prototype);
  return d;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void save_design(const BankDesign& d, const std::string& path) { write_text(path, dump(to_json(d))); }

inline BankDesign load_design(const std::string& path) { return design_from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// CSV

/// Nine significant digits, as used in every CSV export.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ostringstream s;
  write_csv(s, header, rows);
  write_text(path, s.str());
}

// ---------------------------------------------------------------------------
// WAV (mono, PCM16 or IEEE float32) and raw float32

enum class SampleFormat { pcm16, float32 };

struct WavData {
  int sample_rate = 0;
  SampleFormat format = SampleFormat::pcm16;
  std::vector<double> samples;
};

namespace detail {
inline std::uint32_t le32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
inline void put32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}
inline std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}
inline float float_from_bits(std::uint32_t bits) { return std::bit_cast<float>(bits); }
}  // namespace detail

inline WavData parse_wav(const std::vector<unsigned char>& bytes) {
  using detail::le16;
  using detail::le32;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ParseError("not a RIFF/WAVE file");
  }
  WavData wav;
  int channels = 0, bits = 0, tag = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      if (std::memcmp(chunk, "data", 4) == 0) {
        data = bytes.data() + body;
        data_size = bytes.size() - body;
      }
      break;
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw ParseError("short fmt chunk");
      tag = le16(chunk + 8);
      channels = le16(chunk + 10);
      wav.sample_rate = static_cast<int>(le32(chunk + 12));
      bits = le16(chunk + 22);
      if (tag == 0xFFFE && size >= 40) tag = le16(chunk + 8 + 24);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || data == nullptr) throw ParseError("WAV file lacks fmt or data chunk");
  if (channels != 1) throw ParseError("only mono WAV files are supported, got " + std::to_string(channels) + " channels");
  if (tag == 1 && bits == 16) {
    wav.format = SampleFormat::pcm16;
    wav.samples.resize(data_size / 2);
    for (std::size_t i = 0; i < wav.samples.size(); ++i) {
      wav.samples[i] = static_cast<std::int16_t>(le16(data + 2 * i)) / 32768.0;
    }
  } else if (tag == 3 && bits == 32) {
    wav.format = SampleFormat::float32;
    wav.samples.resize(data_size / 4);
    for (std::size_t i = 0; i < wav.samples.size(); ++i) {
      wav.samples[i] = detail::float_from_bits(le32(data + 4 * i));
    }
  } else {
    throw ParseError("unsupported WAV encoding (format tag " + std::to_string(tag) + ", " +
                     std::to_string(bits) + " bits); need PCM16 or float32");
  }
  return wav;
}

inline WavData read_wav(const std::string& path) { return parse_wav(detail::read_bytes(path)); }

inline std::string encode_wav(const WavData& wav) {
  const bool pcm = wav.format == SampleFormat::pcm16;
  const std::uint16_t bytes_per_sample = pcm ? 2 : 4;
  const auto data_size = static_cast<std::uint32_t>(wav.samples.size() * bytes_per_sample);
  std::string s;
  s.reserve(44 + data_size);
  s += "RIFF";
  detail::put32(s, 36 + data_size);
  s += "WAVEfmt ";
  detail::put32(s, 16);
  detail::put16(s, pcm ? 1 : 3);
  detail::put16(s, 1);
  detail::put32(s, static_cast<std::uint32_t>(wav.sample_rate));
  detail::put32(s, static_cast<std::uint32_t>(wav.sample_rate) * bytes_per_sample);
  detail::put16(s, bytes_per_sample);
  detail::put16(s, static_cast<std::uint16_t>(8 * bytes_per_sample));
  s += "data";
  detail::put32(s, data_size);
  for (double x : wav.samples) {
    if (pcm) {
      const double clipped = std::clamp(std::round(x * 32768.0), -32768.0, 32767.0);
      detail::put16(s, static_cast<std::uint16_t>(static_cast<std::int16_t>(clipped)));
    } else {
      detail::put32(s, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }
  }
  return s;
}

inline void write_wav(const std::string& path, const WavData& wav) { write_text(path, encode_wav(wav)); }

inline std::vector<double> read_raw_f32(const std::string& path) {
  const auto bytes = detail::read_bytes(path);
  if (bytes.size() % 4 != 0) throw ParseError(path + ": size is not a multiple of 4 bytes");
  std::vector<double> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::float_from_bits(detail::le32(bytes.data() + 4 * i));
  return out;
}

inline void write_raw_f32(const std::string& path, const std::vector<double>& samples) {
  std::string s;
  s.reserve(samples.size() * 4);
  for (double x : samples) detail::put32(s, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  write_text(path, s);
}

}  // namespace wcmfb::io

#endif  // WCMFB_IO_HPP_
