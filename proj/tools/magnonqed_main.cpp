// magnonqed: forward simulation and inverse fitting of hybrid
// spin-magnon transmission experiments.
//
// Exit codes: 0 success, 2 invalid config/input, 3 solver failure,
// 4 nothing to fit.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "magnonqed/constants.hpp"
#include "magnonqed/io.hpp"
#include "magnonqed/saturation.hpp"
#include "magnonqed/specfit.hpp"

namespace {

using namespace magnonqed;

enum ExitCode { kOk = 0, kInvalid = 2, kSolverFail = 3, kNothingToFit = 4 };

int log_level() {
  const char* env = std::getenv("MAGNONQED_LOG");
  if (!env) return 0;
  const std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[info] " << msg << '\n';
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::optional<std::pair<double, double>> parse_range(const std::string& text,
                                                     const char* flag) {
  if (text.empty()) return std::nullopt;
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ValidationError(std::string(flag) + ": expected LO:HI");
  const double lo = std::strtod(text.substr(0, colon).c_str(), nullptr);
  const double hi = std::strtod(text.substr(colon + 1).c_str(), nullptr);
  if (!(hi > lo)) throw ValidationError(std::string(flag) + ": need LO < HI");
  return std::make_pair(lo, hi);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("output: cannot open " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

SpectrumMap simulate(const ExperimentConfig& cfg,
                     std::optional<double> power_dbm, int jobs) {
  SpectrumOptions options;
  options.chiral_scaling = cfg.chiral_scaling;
  options.stacking = cfg.stacking;
  options.jobs = jobs;
  if (power_dbm) {
    if (!cfg.saturation)
      throw ValidationError(
          "saturation: required in the config when --power-dbm is given");
    options.saturation = cfg.saturation;
    options.drive_power_mw = dbm_to_mw(*power_dbm);
  }
  return spectrum_map(cfg.magnet, cfg.spins, cfg.field_sweep, cfg.f_axis,
                      cfg.coupling, options);
}

int cmd_simulate_spectrum(const std::string& config_path,
                          const std::string& out_path,
                          const std::string& format,
                          std::optional<double> power_dbm, bool complex_out,
                          std::optional<std::uint64_t> seed_override, int jobs) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed_override) {
    cfg.seed = *seed_override;
    if (cfg.stacking) cfg.stacking->seed = *seed_override;
  }
  log_info("simulating " + std::to_string(cfg.field_sweep.steps) + " x " +
           std::to_string(cfg.f_axis.steps) + " map");
  SpectrumMap map = simulate(cfg, power_dbm, jobs);
  {
    // embed the resolved configuration for reproducibility
    nlohmann::json meta = nlohmann::json::parse(map.metadata, nullptr, false);
    if (meta.is_discarded()) meta = nlohmann::json::object();
    meta["config"] = nlohmann::json::parse(dump_config(cfg));
    map.metadata = meta.dump();
  }
  if (format == "json")
    write_map_json(map, out_path);
  else
    write_map_csv(map, out_path, complex_out);
  return kOk;
}

int cmd_fit_dips(const std::string& map_path, const std::string& out_path,
                 bool double_dip,
                 const std::optional<std::pair<double, double>>& window) {
  const SpectrumMap map = read_map_auto(map_path);
  nlohmann::json results = nlohmann::json::array();
  int fitted = 0;

  for (std::size_t i = 0; i < map.b0_axis_mt.size(); ++i) {
    Trace trace;
    trace.f_axis_ghz = map.f_axis_ghz;
    trace.values.resize(map.f_axis_ghz.size());
    for (std::size_t j = 0; j < trace.values.size(); ++j)
      trace.values[j] = std::abs(map.s21(i, j));

    nlohmann::json row;
    row["b0_mT"] = map.b0_axis_mt[i];
    row["dips"] = nlohmann::json::array();
    try {
      if (double_dip) {
        Trace windowed = trace;
        if (window) {
          windowed.f_axis_ghz.clear();
          windowed.values.clear();
          for (std::size_t j = 0; j < trace.f_axis_ghz.size(); ++j)
            if (trace.f_axis_ghz[j] >= window->first &&
                trace.f_axis_ghz[j] <= window->second) {
              windowed.f_axis_ghz.push_back(trace.f_axis_ghz[j]);
              windowed.values.push_back(trace.values[j]);
            }
        }
        const auto [lo, hi] = fit_double_dip(windowed);
        row["dips"].push_back(nlohmann::json::parse(fit_to_json(lo)));
        row["dips"].push_back(nlohmann::json::parse(fit_to_json(hi)));
      } else {
        const auto fit = fit_dip(trace, window);
        row["dips"].push_back(nlohmann::json::parse(fit_to_json(fit)));
      }
      ++fitted;
    } catch (const NoDipFoundError&) {
      row["error"] = "no_dip";
    } catch (const DegenerateFitError& err) {
      row["error"] = std::string("degenerate: ") + err.what();
    } catch (const NonConvergenceError& err) {
      row["error"] = std::string("non_convergence: ") + err.what();
    }
    results.push_back(std::move(row));
  }
  if (fitted == 0) {
    std::cerr << "error: no dips found in any trace\n";
    return kNothingToFit;
  }
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["results"] = std::move(results);
  write_text(out_path, doc.dump());
  return kOk;
}

int cmd_spin_levels(const std::string& config_path, const std::string& out_path) {
  const ExperimentConfig cfg = load_config(config_path);
  const auto& sp = cfg.spins.front();
  const int n = sp.dim();
  std::string csv = "b0_mT";
  for (int k = 0; k < n; ++k) csv += ",E" + std::to_string(k) + "_GHz";
  csv += ",delta_GHz\n";
  for (int i = 0; i < cfg.field_sweep.steps; ++i) {
    const double b = cfg.field_sweep.start_mt +
                     (cfg.field_sweep.stop_mt - cfg.field_sweep.start_mt) * i /
                         (cfg.field_sweep.steps - 1);
    const LevelSet levels = energy_levels(sp, b);
    csv += format17(b);
    for (double e : levels.energies_ghz) csv += "," + format17(e);
    csv += "," + format17(qubit_gap(sp, b)) + "\n";
  }
  write_text(out_path, csv);
  return kOk;
}

const char* to_string(Chirality c) {
  switch (c) {
    case Chirality::LH: return "LH";
    case Chirality::RH: return "RH";
    default: return "linear";
  }
}

int cmd_magnon_modes(const std::string& config_path, const std::string& out_path) {
  const ExperimentConfig cfg = load_config(config_path);
  std::string csv =
      "b0_mT,f_acoustic_GHz,f_optical_GHz,ellipticity_acoustic,"
      "ellipticity_optical,chirality_acoustic,chirality_optical\n";
  for (int i = 0; i < cfg.field_sweep.steps; ++i) {
    const double b = cfg.field_sweep.start_mt +
                     (cfg.field_sweep.stop_mt - cfg.field_sweep.start_mt) * i /
                         (cfg.field_sweep.steps - 1);
    const FieldConfig fc{b / 1000.0, cfg.field_sweep.theta_deg};
    const auto eq = equilibrium(cfg.magnet, fc);
    const auto modes = linearized_modes(cfg.magnet, fc, eq);
    const ModeSolution* acoustic = nullptr;
    const ModeSolution* optical = nullptr;
    for (const auto& m : modes)
      (m.branch == BranchLabel::Acoustic ? acoustic : optical) = &m;
    if (!acoustic || !optical) continue;
    csv += format17(b) + "," + format17(acoustic->frequency_ghz) + "," +
           format17(optical->frequency_ghz) + "," +
           format17(acoustic->ellipticity) + "," +
           format17(optical->ellipticity) + "," + to_string(acoustic->chirality) +
           "," + to_string(optical->chirality) + "\n";
  }
  write_text(out_path, csv);
  return kOk;
}

int cmd_saturation_curve(const std::string& config_path,
                         const std::string& out_path, double dbm_start,
                         double dbm_stop, int steps) {
  const ExperimentConfig cfg = load_config(config_path);
  if (!cfg.saturation)
    throw ValidationError("saturation: section required for saturation-curve");
  if (steps < 2) throw ValidationError("steps: must be >= 2");
  const auto& sat = *cfg.saturation;
  std::string csv = "p_dBm,p_mW,visibility,n_eq_fraction,G_eff_MHz\n";
  for (int i = 0; i < steps; ++i) {
    const double dbm = dbm_start + (dbm_stop - dbm_start) * i / (steps - 1);
    const double mw = dbm_to_mw(dbm);
    const double frac = equilibrium_fraction(mw, sat);
    csv += format17(dbm) + "," + format17(mw) + "," +
           format17(visibility(mw, sat)) + "," + format17(frac) + "," +
           format17(effective_coupling(cfg.coupling.g_mhz, frac)) + "\n";
  }
  write_text(out_path, csv);
  return kOk;
}

int cmd_extract_coupling(const std::string& map_path, const std::string& out_path,
                         std::optional<std::pair<double, double>> field_window) {
  const SpectrumMap map = read_map_auto(map_path);
  const std::pair<double, double> window =
      field_window.value_or(std::make_pair(map.b0_axis_mt.front(),
                                           map.b0_axis_mt.back()));
  const CouplingExtract extract = extract_coupling(map, window);
  write_text(out_path, extract_to_json(extract));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid spin-magnon transmission toolkit"};
  app.require_subcommand(1);

  std::string config_path, map_path, out_path, format = "csv", window_text,
                                               field_window_text;
  bool double_dip = false, complex_out = false;
  int jobs = 1, steps = 121;
  double power_dbm = 0.0, dbm_start = -40.0, dbm_stop = 20.0;
  bool have_power = false;
  std::uint64_t seed = 0;
  bool have_seed = false;

  auto* sim = app.add_subcommand("simulate-spectrum",
                                 "forward-model a transmission map");
  sim->add_option("--config", config_path, "experiment config JSON")->required();
  sim->add_option("--out", out_path, "output path")->required();
  sim->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sim->add_option("--jobs", jobs, "parallel field points");
  sim->add_flag("--complex", complex_out, "write the phase companion file");
  sim->add_option("--power-dbm", power_dbm, "drive power (needs saturation)")
      ->each([&](const std::string&) { have_power = true; });
  sim->add_option("--seed", seed, "override the config seed")
      ->each([&](const std::string&) { have_seed = true; });

  auto* fit = app.add_subcommand("fit-dips", "Lorentzian dip fits per trace");
  fit->add_option("--map", map_path, "spectrum map (csv or json)")->required();
  fit->add_option("--out", out_path, "result JSON path (default stdout)");
  fit->add_flag("--double", double_dip, "fit two shared-baseline dips");
  fit->add_option("--window", window_text, "frequency window F1:F2 in GHz");

  auto* lev = app.add_subcommand("spin-levels", "level diagram vs field");
  lev->add_option("--config", config_path)->required();
  lev->add_option("--out", out_path)->required();

  auto* modes = app.add_subcommand("magnon-modes", "mode branches vs field");
  modes->add_option("--config", config_path)->required();
  modes->add_option("--out", out_path)->required();

  auto* sat = app.add_subcommand("saturation-curve", "visibility vs power");
  sat->add_option("--config", config_path)->required();
  sat->add_option("--out", out_path)->required();
  sat->add_option("--dbm-start", dbm_start);
  sat->add_option("--dbm-stop", dbm_stop);
  sat->add_option("--steps", steps);

  auto* ext = app.add_subcommand("extract-coupling",
                                 "anticrossing coupling constants");
  ext->add_option("--map", map_path)->required();
  ext->add_option("--out", out_path, "result JSON path (default stdout)");
  ext->add_option("--field-window", field_window_text,
                  "field window B1:B2 in mT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate_spectrum(
          config_path, out_path, format,
          have_power ? std::optional<double>(power_dbm) : std::nullopt,
          complex_out,
          have_seed ? std::optional<std::uint64_t>(seed) : std::nullopt, jobs);
    if (fit->parsed())
      return cmd_fit_dips(map_path, out_path, double_dip,
                          parse_range(window_text, "--window"));
    if (lev->parsed()) return cmd_spin_levels(config_path, out_path);
    if (modes->parsed()) return cmd_magnon_modes(config_path, out_path);
    if (sat->parsed())
      return cmd_saturation_curve(config_path, out_path, dbm_start, dbm_stop,
                                  steps);
    if (ext->parsed())
      return cmd_extract_coupling(
          map_path, out_path, parse_range(field_window_text, "--field-window"));
  } catch (const NoDipFoundError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kNothingToFit;
  } catch (const ExtractError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kNothingToFit;
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kInvalid;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kSolverFail;
  }
  return kInvalid;
}
