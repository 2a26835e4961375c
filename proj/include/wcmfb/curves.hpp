#ifndef WCMFB_CURVES_HPP_
#define WCMFB_CURVES_HPP_

// Tabulated curves for plotting: prototype, channel, transfer and error
// responses over a uniform [0, pi] grid.

#include <stdexcept>
#include <string>
#include <vector>

#include "wcmfb/optimizer.hpp"
#include "wcmfb/transfer.hpp"

namespace wcmfb {

enum class Curve { prototype, channels, tall, tdist, talias, error };

inline Curve parse_curve(const std::string& name) {
  if (name == "prototype") return Curve::prototype;
  if (name == "channels") return Curve::channels;
  if (name == "tall") return Curve::tall;
  if (name == "tdist") return Curve::tdist;
  if (name == "talias") return Curve::talias;
  if (name == "error") return Curve::error;
  throw std::invalid_argument("unknown curve '" + name +
                              "' (expected prototype|channels|tall|tdist|talias|error)");
}

struct CurveTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // first column omega/pi
};

inline CurveTable tabulate(const BankDesign& design, Curve curve, int grid_points) {
  const auto& cfg = design.config;
  const auto& h = design.prototype;
  const SpectralGrid grid = SpectralGrid::uniform(grid_points);
  CurveTable table;
  table.header = {"omega_norm"};
  if (curve == Curve::channels) {
    for (int k = 0; k < cfg.channels_m; ++k) table.header.push_back("ch" + std::to_string(k) + "_db");
  } else if (curve == Curve::error) {
    table.header.push_back("error");
  } else {
    table.header.push_back("value_db");
  }

  ComplexVector tall;
  if (curve == Curve::tall || curve == Curve::error) {
    tall = QuadraticTables(cfg, grid.omega).t_all(h.coeffs());
  }
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double w = grid.omega[i];
    std::vector<double> row{w / kPi};
    switch (curve) {
      case Curve::prototype:
        row.push_back(to_db(std::abs(prototype_response(h, w))));
        break;
      case Curve::channels:
        for (int k = 0; k < cfg.channels_m; ++k) {
          row.push_back(to_db(std::abs(channel_response_warped(h, k, w, cfg.alpha))));
        }
        break;
      case Curve::tall:
        row.push_back(to_db(std::abs(tall[i])));
        break;
      case Curve::tdist:
        row.push_back(to_db(std::abs(t_dist(h, w, cfg))));
        break;
      case Curve::talias:
        row.push_back(to_db(std::abs(t_alias(h, w, cfg))));
        break;
      case Curve::error:
        row.push_back(std::norm(tall[i]) - 1.0);
        break;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// Bifrequency raster as (omega_in/pi, omega_out/pi, dB) triplets.
inline CurveTable tabulate_bifrequency(const BankDesign& design, int in_points, int out_points) {
  const SpectralGrid in = SpectralGrid::uniform(in_points);
  const SpectralGrid out = SpectralGrid::uniform(out_points);
  const Matrix db = bifrequency_map(design.prototype, design.config, in, out);
  CurveTable table{{"omega_in", "omega_out", "mag_db"}, {}};
  table.rows.reserve(static_cast<std::size_t>(in_points) * out_points);
  for (Eigen::Index i = 0; i < db.rows(); ++i) {
    for (Eigen::Index j = 0; j < db.cols(); ++j) {
      table.rows.push_back({in.omega[i] / kPi, out.omega[j] / kPi, db(i, j)});
    }
  }
  return table;
}

}  // namespace wcmfb

#endif  // WCMFB_CURVES_HPP_
