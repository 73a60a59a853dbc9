#pragma once

#include <optional>
#include <string>
#include <vector>

#include "magnonqed/hybrid_response.hpp"
#include "magnonqed/specfit.hpp"

namespace magnonqed {

/// One reproducible experiment: forward-model inputs plus the RNG seed.
/// All nested invariants are enforced on load with path-qualified messages.
struct ExperimentConfig {
  MagnetParams magnet;
  std::vector<SpinEnsembleParams> spins;
  FieldSweep field_sweep;
  FrequencyAxis f_axis;
  CouplingParams coupling;
  std::optional<SaturationParams> saturation;
  std::optional<StackingConfig> stacking;
  bool chiral_scaling = false;
  std::uint64_t seed = 0;

  void validate() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string dump_config(const ExperimentConfig& config);

/// CSV map layout: first row "b0_mT\\f_GHz" followed by the frequency axis,
/// then one row per field point (field value, |S21| per frequency).
/// Values are written with 17 significant digits and round-trip exactly.
/// A companion file holding arg(S21) preserves the phase when requested.
void write_map_csv(const SpectrumMap& map, const std::string& path,
                   bool with_phase_file = false);
SpectrumMap read_map_csv(const std::string& path);

/// JSON map format: schema_version, axes, re/im matrices and metadata.
/// Serialization of doubles is exact (shortest round-trip representation).
void write_map_json(const SpectrumMap& map, const std::string& path);
SpectrumMap read_map_json(const std::string& path);

/// Reads a map by extension: ".json" or ".csv" (phase companion detected).
SpectrumMap read_map_auto(const std::string& path);

std::string fit_to_json(const LorentzianFit& fit);
std::string extract_to_json(const CouplingExtract& extract);

/// Version tag carried by every JSON result document.
inline constexpr const char* kSchemaVersion = "1";

}  // namespace magnonqed
