#include "magnonqed/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace magnonqed {

using nlohmann::json;

namespace {

[[noreturn]] void missing(const std::string& path) {
  throw ValidationError(path + ": missing required field");
}

const json& member(const json& j, const char* key, const std::string& path) {
  const auto it = j.find(key);
  if (it == j.end()) missing(path);
  return *it;
}

double number(const json& j, const char* key, const std::string& path) {
  const json& v = member(j, key, path);
  if (!v.is_number()) throw ValidationError(path + ": must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, const std::string& path,
                 double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw ValidationError(path + ": must be a number");
  return v.get<double>();
}

int integer(const json& j, const char* key, const std::string& path) {
  const json& v = member(j, key, path);
  if (!v.is_number_integer()) throw ValidationError(path + ": must be an integer");
  return v.get<int>();
}

// Re-throw nested validation errors with the configuration path prefixed.
template <typename T>
void validate_at(const T& value, const std::string& prefix) {
  try {
    value.validate();
  } catch (const ValidationError& err) {
    throw ValidationError(prefix + "." + err.what());
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  validate_at(magnet, "magnet");
  if (spins.empty())
    throw ValidationError("spins: at least one spin ensemble required");
  for (std::size_t i = 0; i < spins.size(); ++i)
    validate_at(spins[i], "spins[" + std::to_string(i) + "]");
  validate_at(field_sweep, "field_sweep");
  validate_at(f_axis, "f_axis");
  validate_at(coupling, "coupling");
  if (saturation) validate_at(*saturation, "saturation");
  if (stacking) validate_at(*stacking, "stacking");
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded())
    throw ValidationError("config: not valid JSON");
  if (!j.is_object())
    throw ValidationError("config: top level must be an object");

  ExperimentConfig cfg;

  const json& magnet = member(j, "magnet", "magnet");
  cfg.magnet.h_e_t = number(magnet, "H_E_T", "magnet.H_E_T");
  cfg.magnet.h_a_t = number(magnet, "H_a_T", "magnet.H_a_T");
  cfg.magnet.h_c_t = number(magnet, "H_c_T", "magnet.H_c_T");
  cfg.magnet.g = number_or(magnet, "g", "magnet.g", 2.0);

  const json& spins = member(j, "spins", "spins");
  if (!spins.is_array() || spins.empty())
    throw ValidationError("spins: must be a non-empty array");
  for (std::size_t i = 0; i < spins.size(); ++i) {
    const std::string path = "spins[" + std::to_string(i) + "]";
    const json& sj = spins[i];
    SpinEnsembleParams sp;
    sp.spin = number_or(sj, "S", path + ".S", 3.5);
    sp.d_ghz = number(sj, "D_GHz", path + ".D_GHz");
    sp.e_ghz = number_or(sj, "E_GHz", path + ".E_GHz", 0.0);
    sp.g = number_or(sj, "g", path + ".g", 2.0);
    sp.phi_deg = number(sj, "phi_deg", path + ".phi_deg");
    sp.n_spins = number_or(sj, "n_spins", path + ".n_spins", 1.0);
    sp.temperature_k = number_or(sj, "temperature_K", path + ".temperature_K", 0.0);
    if (sj.contains("delta0_GHz"))
      sp.delta0_ghz = number(sj, "delta0_GHz", path + ".delta0_GHz");
    cfg.spins.push_back(sp);
  }

  const json& sweep = member(j, "field_sweep", "field_sweep");
  cfg.field_sweep.start_mt = number(sweep, "start_mT", "field_sweep.start_mT");
  cfg.field_sweep.stop_mt = number(sweep, "stop_mT", "field_sweep.stop_mT");
  cfg.field_sweep.steps = integer(sweep, "steps", "field_sweep.steps");
  cfg.field_sweep.theta_deg =
      number_or(sweep, "theta_deg", "field_sweep.theta_deg", 90.0);

  const json& fax = member(j, "f_axis", "f_axis");
  cfg.f_axis.start_ghz = number(fax, "start_GHz", "f_axis.start_GHz");
  cfg.f_axis.stop_ghz = number(fax, "stop_GHz", "f_axis.stop_GHz");
  cfg.f_axis.steps = integer(fax, "steps", "f_axis.steps");

  const json& cpl = member(j, "coupling", "coupling");
  cfg.coupling.g_mhz = number(cpl, "G_MHz", "coupling.G_MHz");
  cfg.coupling.kappa_e_mhz = number(cpl, "kappa_e_MHz", "coupling.kappa_e_MHz");
  cfg.coupling.kappa_i_mhz = number(cpl, "kappa_i_MHz", "coupling.kappa_i_MHz");
  cfg.coupling.gamma_e_mhz = number(cpl, "gamma_e_MHz", "coupling.gamma_e_MHz");
  cfg.coupling.gamma_i_mhz = number(cpl, "gamma_i_MHz", "coupling.gamma_i_MHz");
  if (cpl.contains("include_line_crosstalk")) {
    if (!cpl.at("include_line_crosstalk").is_boolean())
      throw ValidationError("coupling.include_line_crosstalk: must be a boolean");
    cfg.coupling.include_line_crosstalk =
        cpl.at("include_line_crosstalk").get<bool>();
  }

  if (j.contains("saturation")) {
    const json& sat = j.at("saturation");
    SaturationParams sp;
    sp.alpha_mhz2_per_mw =
        number(sat, "alpha_MHz2_per_mW", "saturation.alpha_MHz2_per_mW");
    sp.gamma_par_mhz = number(sat, "gamma_par_MHz", "saturation.gamma_par_MHz");
    sp.gamma_e_mhz = number_or(sat, "gamma_e_MHz", "saturation.gamma_e_MHz",
                               cfg.coupling.gamma_e_mhz);
    sp.gamma_i_mhz = number_or(sat, "gamma_i_MHz", "saturation.gamma_i_MHz",
                               cfg.coupling.gamma_i_mhz);
    cfg.saturation = sp;
  }

  if (j.contains("stacking")) {
    const json& st = j.at("stacking");
    StackingConfig sc;
    sc.n_layers = integer(st, "n_layers", "stacking.n_layers");
    sc.fault_probability =
        number(st, "fault_probability", "stacking.fault_probability");
    sc.fault_coupling_scale = number_or(
        st, "fault_coupling_scale", "stacking.fault_coupling_scale", -1.0);
    cfg.stacking = sc;
  }

  if (j.contains("chiral_scaling")) {
    if (!j.at("chiral_scaling").is_boolean())
      throw ValidationError("chiral_scaling: must be a boolean");
    cfg.chiral_scaling = j.at("chiral_scaling").get<bool>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer())
      throw ValidationError("seed: must be an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (cfg.stacking) cfg.stacking->seed = cfg.seed;

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["magnet"] = {{"H_E_T", cfg.magnet.h_e_t},
                 {"H_a_T", cfg.magnet.h_a_t},
                 {"H_c_T", cfg.magnet.h_c_t},
                 {"g", cfg.magnet.g}};
  j["spins"] = json::array();
  for (const auto& sp : cfg.spins) {
    json sj = {{"S", sp.spin},           {"D_GHz", sp.d_ghz},
               {"E_GHz", sp.e_ghz},      {"g", sp.g},
               {"phi_deg", sp.phi_deg},  {"n_spins", sp.n_spins},
               {"temperature_K", sp.temperature_k}};
    if (sp.delta0_ghz) sj["delta0_GHz"] = *sp.delta0_ghz;
    j["spins"].push_back(sj);
  }
  j["field_sweep"] = {{"start_mT", cfg.field_sweep.start_mt},
                      {"stop_mT", cfg.field_sweep.stop_mt},
                      {"steps", cfg.field_sweep.steps},
                      {"theta_deg", cfg.field_sweep.theta_deg}};
  j["f_axis"] = {{"start_GHz", cfg.f_axis.start_ghz},
                 {"stop_GHz", cfg.f_axis.stop_ghz},
                 {"steps", cfg.f_axis.steps}};
  j["coupling"] = {{"G_MHz", cfg.coupling.g_mhz},
                   {"kappa_e_MHz", cfg.coupling.kappa_e_mhz},
                   {"kappa_i_MHz", cfg.coupling.kappa_i_mhz},
                   {"gamma_e_MHz", cfg.coupling.gamma_e_mhz},
                   {"gamma_i_MHz", cfg.coupling.gamma_i_mhz},
                   {"include_line_crosstalk", cfg.coupling.include_line_crosstalk}};
  if (cfg.saturation)
    j["saturation"] = {{"alpha_MHz2_per_mW", cfg.saturation->alpha_mhz2_per_mw},
                       {"gamma_par_MHz", cfg.saturation->gamma_par_mhz},
                       {"gamma_e_MHz", cfg.saturation->gamma_e_mhz},
                       {"gamma_i_MHz", cfg.saturation->gamma_i_mhz}};
  if (cfg.stacking)
    j["stacking"] = {{"n_layers", cfg.stacking->n_layers},
                     {"fault_probability", cfg.stacking->fault_probability},
                     {"fault_coupling_scale", cfg.stacking->fault_coupling_scale}};
  j["chiral_scaling"] = cfg.chiral_scaling;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// CSV map format

namespace {

std::string phase_path_for(const std::string& path) {
  const auto dot = path.rfind(".csv");
  if (dot != std::string::npos && dot == path.size() - 4)
    return path.substr(0, dot) + ".phase.csv";
  return path + ".phase";
}

bool map_is_real(const SpectrumMap& map) {
  for (Eigen::Index i = 0; i < map.s21.rows(); ++i)
    for (Eigen::Index j = 0; j < map.s21.cols(); ++j)
      if (map.s21(i, j).imag() != 0.0) return false;
  return true;
}

void write_grid_csv(const std::string& path, const std::vector<double>& b_axis,
                    const std::vector<double>& f_axis,
                    const Eigen::MatrixXd& body) {
  std::ofstream out(path);
  if (!out) throw ValidationError("output: cannot open " + path);
  out << "b0_mT\\f_GHz";
  for (double f : f_axis) out << ',' << format_double(f);
  out << '\n';
  for (std::size_t i = 0; i < b_axis.size(); ++i) {
    out << format_double(b_axis[i]);
    for (Eigen::Index j = 0; j < body.cols(); ++j)
      out << ',' << format_double(body(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
}

struct GridCsv {
  std::vector<double> b_axis, f_axis;
  Eigen::MatrixXd body;
};

GridCsv read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("map: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw ValidationError("map: empty file " + path);

  GridCsv out;
  {
    std::stringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');  // corner token
    while (std::getline(header, cell, ','))
      out.f_axis.push_back(std::strtod(cell.c_str(), nullptr));
  }
  if (out.f_axis.empty())
    throw ValidationError("map: header holds no frequency axis in " + path);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    out.b_axis.push_back(std::strtod(cell.c_str(), nullptr));
    std::vector<double> row;
    while (std::getline(ss, cell, ','))
      row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != out.f_axis.size())
      throw ValidationError("map: ragged row in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("map: no field rows in " + path);
  out.body.resize(rows.size(), out.f_axis.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < out.f_axis.size(); ++j)
      out.body(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
  return out;
}

}  // namespace

void write_map_csv(const SpectrumMap& map, const std::string& path,
                   bool with_phase_file) {
  map.validate();
  // real-valued (processed) maps keep their sign; complex maps store
  // amplitude plus an optional phase companion
  Eigen::MatrixXd body(map.s21.rows(), map.s21.cols());
  const bool real = map_is_real(map);
  if (real)
    body = map.s21.real();
  else
    body = map.s21.cwiseAbs();
  write_grid_csv(path, map.b0_axis_mt, map.f_axis_ghz, body);
  if (with_phase_file && !real) {
    Eigen::MatrixXd phase(map.s21.rows(), map.s21.cols());
    for (Eigen::Index i = 0; i < map.s21.rows(); ++i)
      for (Eigen::Index j = 0; j < map.s21.cols(); ++j)
        phase(i, j) = std::arg(map.s21(i, j));
    write_grid_csv(phase_path_for(path), map.b0_axis_mt, map.f_axis_ghz, phase);
  }
}

SpectrumMap read_map_csv(const std::string& path) {
  const GridCsv amp = read_grid_csv(path);
  SpectrumMap map;
  map.b0_axis_mt = amp.b_axis;
  map.f_axis_ghz = amp.f_axis;
  map.s21.resize(amp.body.rows(), amp.body.cols());

  std::ifstream probe(phase_path_for(path));
  if (probe.good()) {
    const GridCsv phase = read_grid_csv(phase_path_for(path));
    if (phase.body.rows() != amp.body.rows() ||
        phase.body.cols() != amp.body.cols())
      throw ValidationError("map: phase companion shape mismatch");
    for (Eigen::Index i = 0; i < amp.body.rows(); ++i)
      for (Eigen::Index j = 0; j < amp.body.cols(); ++j)
        map.s21(i, j) = std::polar(amp.body(i, j), phase.body(i, j));
  } else {
    map.s21 = amp.body.cast<std::complex<double>>();
  }
  map.validate();
  return map;
}

// ---------------------------------------------------------------------------
// JSON map format

void write_map_json(const SpectrumMap& map, const std::string& path) {
  map.validate();
  json j;
  j["schema_version"] = kSchemaVersion;
  j["b0_axis_mT"] = map.b0_axis_mt;
  j["f_axis_GHz"] = map.f_axis_ghz;
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < map.s21.rows(); ++i) {
    json re_row = json::array(), im_row = json::array();
    for (Eigen::Index j2 = 0; j2 < map.s21.cols(); ++j2) {
      re_row.push_back(map.s21(i, j2).real());
      im_row.push_back(map.s21(i, j2).imag());
    }
    re.push_back(std::move(re_row));
    im.push_back(std::move(im_row));
  }
  j["s21_re"] = std::move(re);
  j["s21_im"] = std::move(im);
  json meta = json::parse(map.metadata, nullptr, false);
  j["metadata"] = meta.is_discarded() ? json(map.metadata) : meta;

  std::ofstream out(path);
  if (!out) throw ValidationError("output: cannot open " + path);
  out << j.dump() << '\n';
}

SpectrumMap read_map_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("map: cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ValidationError("map: not valid JSON: " + path);

  SpectrumMap map;
  try {
    map.b0_axis_mt = j.at("b0_axis_mT").get<std::vector<double>>();
    map.f_axis_ghz = j.at("f_axis_GHz").get<std::vector<double>>();
    const auto& re = j.at("s21_re");
    const auto& im = j.at("s21_im");
    map.s21.resize(map.b0_axis_mt.size(), map.f_axis_ghz.size());
    for (std::size_t i = 0; i < map.b0_axis_mt.size(); ++i)
      for (std::size_t k = 0; k < map.f_axis_ghz.size(); ++k)
        map.s21(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = {
            re.at(i).at(k).get<double>(), im.at(i).at(k).get<double>()};
    if (j.contains("metadata"))
      map.metadata = j.at("metadata").is_string()
                         ? j.at("metadata").get<std::string>()
                         : j.at("metadata").dump();
  } catch (const json::exception& err) {
    throw ValidationError(std::string("map: malformed JSON map: ") + err.what());
  }
  map.validate();
  return map;
}

SpectrumMap read_map_auto(const std::string& path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
    return read_map_json(path);
  return read_map_csv(path);
}

std::string fit_to_json(const LorentzianFit& fit) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["f_m_GHz"] = fit.f_m_ghz;
  j["w_m_MHz"] = fit.w_m_mhz;
  j["depth"] = fit.depth;
  j["baseline"] = fit.baseline;
  j["residual_norm"] = fit.residual_norm;
  json cov = json::array();
  for (int i = 0; i < 4; ++i) {
    json row = json::array();
    for (int k = 0; k < 4; ++k) row.push_back(fit.covariance(i, k));
    cov.push_back(std::move(row));
  }
  j["covariance"] = std::move(cov);
  return j.dump();
}

std::string extract_to_json(const CouplingExtract& extract) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["G_MHz"] = extract.g_mhz;
  j["crossing_field_mT"] = extract.crossing_field_mt;
  j["kappa_MHz"] = extract.kappa_mhz;
  j["gamma_MHz"] = extract.gamma_mhz;
  j["cooperativity"] = extract.cooperativity;
  return j.dump();
}

}  // namespace magnonqed
