// wcmfb: design, inspect and run warped oversampled cosine-modulated filter banks.
//
// Exit status: 0 success, 1 runtime failure, 2 usage or input-file error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wcmfb/curves.hpp"
#include "wcmfb/io.hpp"
#include "wcmfb/wcmfb.hpp"

namespace {

using namespace wcmfb;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    parts.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return parts;
}

void print_metrics(const DesignResult& r) {
  const auto& m = r.design.metrics;
  std::printf("%-22s %s\n", "metric", "value");
  std::printf("%-22s %.6f\n", "initial ripple (dB)", r.report.initial_ripple_db);
  std::printf("%-22s %.6f\n", "ripple (dB)", m.ripple_db);
  std::printf("%-22s %.3e\n", "max |E|", m.max_error);
  std::printf("%-22s %.2f\n", "max alias (dB)", m.max_alias_db);
  std::printf("%-22s %d\n", "outer iterations", m.outer_iterations);
  std::printf("%-22s %s\n", "termination", to_string(r.report.termination));
  std::printf("%-22s %s\n", "converged", m.converged ? "yes" : "no");
}

int cmd_design(const std::string& config_path, const std::string& out_path) {
  const auto file = io::load_config(config_path);
  BankConfig cfg;
  try {
    cfg = file.bank_config();
  } catch (const std::invalid_argument& e) {
    throw io::ParseError(e.what());
  }
  std::printf("designing M=%d N=%d alpha=%g, S =", cfg.channels_m, cfg.order_n, cfg.alpha.value());
  for (int s : cfg.subsampling) std::printf(" %d", s);
  std::printf("\n");
  const DesignResult r = design(cfg, file.options());
  print_metrics(r);
  if (!r.design.metrics.converged) {
    std::fprintf(stderr, "warning: outer loop hit its iteration cap; best design so far written\n");
  }
  io::save_design(r.design, out_path);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_subsample(int channels, double alpha, const std::string& out_path) {
  WarpCoefficient a(0.0);
  try {
    a = WarpCoefficient(alpha);
    if (channels < 1) throw std::invalid_argument("channel count must be >= 1");
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto bands = select_bands(channels, a);
  std::printf("%3s %10s %10s %3s %4s\n", "k", "f_lower", "f_upper", "n", "S");
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < bands.size(); ++k) {
    const auto& b = bands[k];
    std::printf("%3zu %10.6f %10.6f %3d %4d\n", k, b.f_lower, b.f_upper, b.n_k, b.s_k);
    rows.push_back({static_cast<double>(k), b.f_lower, b.f_upper, static_cast<double>(b.n_k),
                    static_cast<double>(b.s_k)});
  }
  if (!out_path.empty()) io::write_csv(out_path, {"k", "f_lower", "f_upper", "n_k", "s_k"}, rows);
  return 0;
}

std::string output_for(const std::string& out, const std::string& curve, bool several) {
  if (!several) return out;
  const std::filesystem::path p(out);
  const std::string ext = p.has_extension() ? p.extension().string() : ".csv";
  return (p.parent_path() / (p.stem().string() + "_" + curve + ext)).string();
}

int cmd_evaluate(const std::string& design_path, const std::string& formats,
                 const std::string& out_path, int grid) {
  const BankDesign d = io::load_design(design_path);
  std::vector<std::string> names = split(formats, ',');
  std::vector<Curve> curves;
  for (const auto& n : names) {
    try {
      curves.push_back(parse_curve(n));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (curves.empty()) throw UsageError("--format needs at least one curve");
  const int points = grid > 0 ? grid : d.config.resolved_grid_points();
  if (points < 2) throw UsageError("--grid must be >= 2");
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const CurveTable t = tabulate(d, curves[i], points);
    const std::string path = output_for(out_path, names[i], curves.size() > 1);
    io::write_csv(path, t.header, t.rows);
    std::printf("wrote %s (%zu rows)\n", path.c_str(), t.rows.size());
  }
  return 0;
}

int cmd_bifreq(const std::string& design_path, int grid_in, int grid_out, const std::string& out_path) {
  if (grid_in < 2 || grid_out < 2) throw UsageError("--grid and --grid-out must be >= 2");
  const BankDesign d = io::load_design(design_path);
  const CurveTable t = tabulate_bifrequency(d, grid_in, grid_out);
  io::write_csv(out_path, t.header, t.rows);
  std::printf("wrote %s (%d x %d)\n", out_path.c_str(), grid_in, grid_out);
  return 0;
}

std::vector<double> parse_gains(const std::string& text, int channels) {
  std::vector<double> gains;
  if (text.empty()) return gains;
  for (const auto& part : split(text, ',')) {
    double db = 0.0;
    try {
      std::size_t used = 0;
      db = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("bad gain value '" + part + "' (dB, -inf allowed)");
    }
    if (std::isnan(db) || db == HUGE_VAL) throw UsageError("bad gain value '" + part + "'");
    gains.push_back(std::isinf(db) ? 0.0 : std::pow(10.0, db / 20.0));
  }
  if (static_cast<int>(gains.size()) != channels) {
    throw UsageError("--gains needs " + std::to_string(channels) + " values, got " +
                     std::to_string(gains.size()));
  }
  return gains;
}

int cmd_process(const std::string& design_path, const std::string& in_path, const std::string& out_path,
                const std::string& gains_text) {
  const BankDesign d = io::load_design(design_path);
  const auto gains = parse_gains(gains_text, d.config.channels_m);
  io::WavData wav = io::read_wav(in_path);
  if (wav.samples.empty()) throw std::runtime_error(in_path + " holds no samples");
  if (d.config.sample_rate_hz && std::abs(*d.config.sample_rate_hz - wav.sample_rate) > 0.5) {
    std::fprintf(stderr, "warning: design targets %g Hz, input is %d Hz\n", *d.config.sample_rate_hz,
                 wav.sample_rate);
  }
  const auto frames = analyze(d, wav.samples);
  wav.samples = synthesize(d, frames, gains, wav.samples.size());
  io::write_wav(out_path, wav);
  std::printf("wrote %s (%zu samples)\n", out_path.c_str(), wav.samples.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Warped oversampled cosine-modulated filter bank toolkit"};
  app.require_subcommand(1);

  std::string config, out, design_path, formats = "tall", in, gains;
  int channels = 0, grid = 0, grid_out = 0;
  double alpha = 0.0;

  auto* design_cmd = app.add_subcommand("design", "Optimize a prototype from a configuration file");
  design_cmd->add_option("--config", config, "Configuration file (JSON)")->required();
  design_cmd->add_option("--out", out, "Design file to write")->required();

  auto* sub_cmd = app.add_subcommand("subsample", "Print per-channel subsampling ratios");
  sub_cmd->add_option("--channels", channels, "Number of channels M")->required();
  sub_cmd->add_option("--alpha", alpha, "Warping coefficient")->required();
  sub_cmd->add_option("--out", out, "Optional CSV copy of the table");

  auto* eval_cmd = app.add_subcommand("evaluate", "Export frequency responses as CSV");
  eval_cmd->add_option("--design", design_path, "Design file")->required();
  eval_cmd->add_option("--format", formats,
                       "Comma-separated curves: prototype, channels, tall, tdist, talias, error");
  eval_cmd->add_option("--out", out, "CSV file (suffixed per curve when several are requested)")
      ->required();
  eval_cmd->add_option("--grid", grid, "Grid points over [0, pi] (default from design)");

  auto* bif_cmd = app.add_subcommand("bifreq", "Export the bifrequency map as CSV triplets");
  bif_cmd->add_option("--design", design_path, "Design file")->required();
  bif_cmd->add_option("--grid", grid, "Input-frequency grid points")->default_val(256);
  bif_cmd->add_option("--grid-out", grid_out, "Output-frequency grid points")->default_val(256);
  bif_cmd->add_option("--out", out, "CSV file")->required();

  auto* proc_cmd = app.add_subcommand("process", "Run a mono WAV file through the bank");
  proc_cmd->add_option("--design", design_path, "Design file")->required();
  proc_cmd->add_option("--in", in, "Input WAV (PCM16 or float32, mono)")->required();
  proc_cmd->add_option("--out", out, "Output WAV")->required();
  proc_cmd->add_option("--gains", gains, "Per-channel gains in dB, comma-separated (-inf mutes)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*design_cmd) return cmd_design(config, out);
    if (*sub_cmd) return cmd_subsample(channels, alpha, out);
    if (*eval_cmd) return cmd_evaluate(design_path, formats, out, grid);
    if (*bif_cmd) return cmd_bifreq(design_path, grid, grid_out, out);
    if (*proc_cmd) return cmd_process(design_path, in, out, gains);
  } catch (const io::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
