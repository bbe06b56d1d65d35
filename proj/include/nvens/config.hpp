#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "nvens/antenna_field.hpp"
#include "nvens/ensemble_opt.hpp"
#include "nvens/holography.hpp"
#include "nvens/nv_photophysics.hpp"
#include "nvens/protocols.hpp"
#include "nvens/shotnoise_mc.hpp"

namespace nvens {

struct PenaltySettings {
  double mean_intensity = 1.5;  // in units of I_sat
  double nonuniformity = 0.328;
  double i_sat = 1.0;
  std::size_t sensors = 100000;  // size of the synthetic non-uniformity realisation
};

struct MCSettings {
  std::size_t shots = 100000;
  double fd_fraction = 1e-4;
  std::size_t streams = 64;
};

/// Everything a pipeline run needs. Built-in defaults match the documented model
/// constants; a config file must spell out every key.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  ensemble::DbConvention db = ensemble::DbConvention::ten_log;
  GridSpec grid;
  antenna::AntennaSpec antenna;
  antenna::NVFrame frame;
  double drive_scale = 1.0;
  std::optional<std::filesystem::path> field_import;
  protocols::ProtocolParams protocol;
  photophysics::RateModelParams rates;
  photophysics::ReadoutWindow window;
  PenaltySettings penalty;
  holography::OpticsConfig optics;
  MCSettings mc;

  void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);
/// Parses config text; unknown or missing keys raise ConfigError naming the key path.
RunConfig parse_config(const std::string& json_text);
std::string dump_config(const RunConfig& cfg);

}  // namespace nvens
