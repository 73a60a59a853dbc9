#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "magnonqed/hybrid_response.hpp"
#include "magnonqed/io.hpp"
#include "magnonqed/saturation.hpp"
#include "magnonqed/specfit.hpp"

namespace py = pybind11;
using namespace magnonqed;

PYBIND11_MODULE(_core, m) {
  m.doc() = "forward simulation and inverse fitting of hybrid spin-magnon "
            "transmission experiments";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<StabilityError>(m, "StabilityError",
                                         PyExc_RuntimeError);
  py::register_exception<PoleError>(m, "PoleError", PyExc_ArithmeticError);
  py::register_exception<DegenerateModeError>(m, "DegenerateModeError",
                                              PyExc_ValueError);
  py::register_exception<NeverStrongError>(m, "NeverStrongError",
                                           PyExc_ValueError);
  py::register_exception<NoDipFoundError>(m, "NoDipFoundError",
                                          PyExc_RuntimeError);
  py::register_exception<DegenerateFitError>(m, "DegenerateFitError",
                                             PyExc_RuntimeError);
  py::register_exception<ExtractError>(m, "ExtractError", PyExc_RuntimeError);

  // ------------------------------------------------------------- spin levels
  py::class_<SpinEnsembleParams>(m, "SpinEnsembleParams")
      .def(py::init<>())
      .def_readwrite("spin", &SpinEnsembleParams::spin)
      .def_readwrite("d_ghz", &SpinEnsembleParams::d_ghz)
      .def_readwrite("e_ghz", &SpinEnsembleParams::e_ghz)
      .def_readwrite("g", &SpinEnsembleParams::g)
      .def_readwrite("phi_deg", &SpinEnsembleParams::phi_deg)
      .def_readwrite("n_spins", &SpinEnsembleParams::n_spins)
      .def_readwrite("temperature_k", &SpinEnsembleParams::temperature_k)
      .def_readwrite("delta0_ghz", &SpinEnsembleParams::delta0_ghz)
      .def("validate", &SpinEnsembleParams::validate)
      .def("dim", &SpinEnsembleParams::dim);

  py::class_<Transition>(m, "Transition")
      .def_readonly("lower", &Transition::lower)
      .def_readonly("upper", &Transition::upper)
      .def_readonly("frequency_ghz", &Transition::frequency_ghz)
      .def_readonly("dipole_weight", &Transition::dipole_weight);

  py::class_<LevelSet>(m, "LevelSet")
      .def_readonly("energies_ghz", &LevelSet::energies_ghz)
      .def_readonly("transitions", &LevelSet::transitions);

  m.def("build_hamiltonian", &build_hamiltonian, py::arg("params"),
        py::arg("b0_mt"));
  m.def("energy_levels", &energy_levels, py::arg("params"), py::arg("b0_mt"));
  m.def("qubit_gap", &qubit_gap, py::arg("params"), py::arg("b0_mt"));

  // --------------------------------------------------------------- afm modes
  py::class_<MagnetParams>(m, "MagnetParams")
      .def(py::init<>())
      .def_readwrite("h_e_t", &MagnetParams::h_e_t)
      .def_readwrite("h_a_t", &MagnetParams::h_a_t)
      .def_readwrite("h_c_t", &MagnetParams::h_c_t)
      .def_readwrite("g", &MagnetParams::g)
      .def("validate", &MagnetParams::validate);

  py::class_<FieldConfig>(m, "FieldConfig")
      .def(py::init<>())
      .def(py::init([](double b0_t, double theta_deg) {
             return FieldConfig{b0_t, theta_deg};
           }),
           py::arg("b0_t"), py::arg("theta_deg"))
      .def_readwrite("b0_t", &FieldConfig::b0_t)
      .def_readwrite("theta_deg", &FieldConfig::theta_deg)
      .def("direction", &FieldConfig::direction)
      .def("vector", &FieldConfig::vector);

  py::class_<Equilibrium>(m, "Equilibrium")
      .def_readwrite("m1", &Equilibrium::m1)
      .def_readwrite("m2", &Equilibrium::m2)
      .def_readwrite("energy_t", &Equilibrium::energy_t);

  py::enum_<Chirality>(m, "Chirality")
      .value("LH", Chirality::LH)
      .value("RH", Chirality::RH)
      .value("Linear", Chirality::Linear);

  py::enum_<BranchLabel>(m, "BranchLabel")
      .value("Acoustic", BranchLabel::Acoustic)
      .value("Optical", BranchLabel::Optical);

  py::class_<ModeSolution>(m, "ModeSolution")
      .def_readonly("frequency_ghz", &ModeSolution::frequency_ghz)
      .def_readonly("sublattice_ellipses", &ModeSolution::sublattice_ellipses)
      .def_readonly("net_orbit", &ModeSolution::net_orbit)
      .def_readonly("chirality", &ModeSolution::chirality)
      .def_readonly("ellipticity", &ModeSolution::ellipticity)
      .def_readonly("branch", &ModeSolution::branch);

  py::class_<StackingConfig>(m, "StackingConfig")
      .def(py::init<>())
      .def_readwrite("n_layers", &StackingConfig::n_layers)
      .def_readwrite("fault_probability", &StackingConfig::fault_probability)
      .def_readwrite("fault_coupling_scale", &StackingConfig::fault_coupling_scale)
      .def_readwrite("seed", &StackingConfig::seed)
      .def("validate", &StackingConfig::validate);

  py::class_<StackingMode>(m, "StackingMode")
      .def_readonly("frequency_ghz", &StackingMode::frequency_ghz)
      .def_readonly("weight", &StackingMode::weight);

  m.def("equilibrium", &equilibrium, py::arg("mag"), py::arg("field"));
  m.def("linearized_modes", &linearized_modes, py::arg("mag"),
        py::arg("field"), py::arg("eq"));
  m.def("stacking_spectrum", &stacking_spectrum, py::arg("mag"),
        py::arg("field"), py::arg("cfg"), py::arg("point_index") = 0);
  m.def("mode_rf_field", &mode_rf_field, py::arg("mode"));

  // ---------------------------------------------------------------- response
  py::class_<CouplingParams>(m, "CouplingParams")
      .def(py::init<>())
      .def_readwrite("g_mhz", &CouplingParams::g_mhz)
      .def_readwrite("kappa_e_mhz", &CouplingParams::kappa_e_mhz)
      .def_readwrite("kappa_i_mhz", &CouplingParams::kappa_i_mhz)
      .def_readwrite("gamma_e_mhz", &CouplingParams::gamma_e_mhz)
      .def_readwrite("gamma_i_mhz", &CouplingParams::gamma_i_mhz)
      .def_readwrite("include_line_crosstalk",
                     &CouplingParams::include_line_crosstalk)
      .def("kappa_mhz", &CouplingParams::kappa_mhz)
      .def("gamma_mhz", &CouplingParams::gamma_mhz)
      .def("validate", &CouplingParams::validate);

  py::class_<SpectrumMap>(m, "SpectrumMap")
      .def(py::init<>())
      .def_readwrite("b0_axis_mt", &SpectrumMap::b0_axis_mt)
      .def_readwrite("f_axis_ghz", &SpectrumMap::f_axis_ghz)
      .def_readwrite("s21", &SpectrumMap::s21)
      .def_readwrite("metadata", &SpectrumMap::metadata)
      .def("validate", &SpectrumMap::validate);

  py::class_<PolaritonBranch>(m, "PolaritonBranch")
      .def_readonly("frequency_ghz", &PolaritonBranch::frequency_ghz)
      .def_readonly("linewidth_mhz", &PolaritonBranch::linewidth_mhz)
      .def_readonly("mixing_angle_xi", &PolaritonBranch::mixing_angle_xi)
      .def_readonly("brightness", &PolaritonBranch::brightness);

  py::class_<FieldSweep>(m, "FieldSweep")
      .def(py::init<>())
      .def(py::init([](double start, double stop, int steps, double theta) {
             return FieldSweep{start, stop, steps, theta};
           }),
           py::arg("start_mt"), py::arg("stop_mt"), py::arg("steps"),
           py::arg("theta_deg") = 90.0)
      .def_readwrite("start_mt", &FieldSweep::start_mt)
      .def_readwrite("stop_mt", &FieldSweep::stop_mt)
      .def_readwrite("steps", &FieldSweep::steps)
      .def_readwrite("theta_deg", &FieldSweep::theta_deg);

  py::class_<FrequencyAxis>(m, "FrequencyAxis")
      .def(py::init<>())
      .def(py::init([](double start, double stop, int steps) {
             return FrequencyAxis{start, stop, steps};
           }),
           py::arg("start_ghz"), py::arg("stop_ghz"), py::arg("steps"))
      .def_readwrite("start_ghz", &FrequencyAxis::start_ghz)
      .def_readwrite("stop_ghz", &FrequencyAxis::stop_ghz)
      .def_readwrite("steps", &FrequencyAxis::steps);

  py::class_<SpectrumOptions>(m, "SpectrumOptions")
      .def(py::init<>())
      .def_readwrite("chiral_scaling", &SpectrumOptions::chiral_scaling)
      .def_readwrite("stacking", &SpectrumOptions::stacking)
      .def_readwrite("saturation", &SpectrumOptions::saturation)
      .def_readwrite("drive_power_mw", &SpectrumOptions::drive_power_mw)
      .def_readwrite("jobs", &SpectrumOptions::jobs);

  m.def("s21", &s21, py::arg("omega_ghz"), py::arg("magnon_freq_ghz"),
        py::arg("spin_freq_ghz"), py::arg("cp"));
  m.def("polariton_branches", &polariton_branches, py::arg("magnon_freq_ghz"),
        py::arg("spin_freq_ghz"), py::arg("cp"));
  m.def("chiral_projection", &chiral_projection, py::arg("mode_field"),
        py::arg("spins"), py::arg("field"));
  m.def("corotating_fraction", &corotating_fraction, py::arg("mode_field"),
        py::arg("spins"), py::arg("field"));
  m.def("spectrum_map", &spectrum_map, py::arg("mag"), py::arg("spins"),
        py::arg("sweep"), py::arg("f_axis"), py::arg("cp"),
        py::arg("options") = SpectrumOptions{},
        py::call_guard<py::gil_scoped_release>());

  // -------------------------------------------------------------- saturation
  py::class_<SaturationParams>(m, "SaturationParams")
      .def(py::init<>())
      .def_readwrite("alpha_mhz2_per_mw", &SaturationParams::alpha_mhz2_per_mw)
      .def_readwrite("gamma_par_mhz", &SaturationParams::gamma_par_mhz)
      .def_readwrite("gamma_e_mhz", &SaturationParams::gamma_e_mhz)
      .def_readwrite("gamma_i_mhz", &SaturationParams::gamma_i_mhz)
      .def("validate", &SaturationParams::validate);

  m.def("visibility", &visibility, py::arg("p_in_mw"), py::arg("sp"));
  m.def("equilibrium_fraction", &equilibrium_fraction, py::arg("p_in_mw"),
        py::arg("sp"));
  m.def("effective_coupling", &effective_coupling, py::arg("g_mhz"),
        py::arg("n_fraction"));
  m.def("threshold_power", &threshold_power, py::arg("g_mhz"),
        py::arg("kappa_mhz"), py::arg("gamma_mhz"), py::arg("sp"));
  m.def("calibrate_alpha", &calibrate_alpha, py::arg("g_mhz"),
        py::arg("kappa_mhz"), py::arg("gamma_mhz"), py::arg("gamma_i_mhz"),
        py::arg("gamma_par_mhz"), py::arg("p_threshold_mw"));

  // ----------------------------------------------------------------- specfit
  py::class_<Trace>(m, "Trace")
      .def(py::init<>())
      .def_readwrite("f_axis_ghz", &Trace::f_axis_ghz)
      .def_readwrite("values", &Trace::values)
      .def("validate", &Trace::validate);

  py::class_<LorentzianFit>(m, "LorentzianFit")
      .def_readonly("f_m_ghz", &LorentzianFit::f_m_ghz)
      .def_readonly("w_m_mhz", &LorentzianFit::w_m_mhz)
      .def_readonly("depth", &LorentzianFit::depth)
      .def_readonly("baseline", &LorentzianFit::baseline)
      .def_readonly("covariance", &LorentzianFit::covariance)
      .def_readonly("residual_norm", &LorentzianFit::residual_norm);

  py::class_<CouplingExtract>(m, "CouplingExtract")
      .def_readonly("g_mhz", &CouplingExtract::g_mhz)
      .def_readonly("crossing_field_mt", &CouplingExtract::crossing_field_mt)
      .def_readonly("kappa_mhz", &CouplingExtract::kappa_mhz)
      .def_readonly("gamma_mhz", &CouplingExtract::gamma_mhz)
      .def_readonly("cooperativity", &CouplingExtract::cooperativity);

  py::class_<DoubleDipInit>(m, "DoubleDipInit")
      .def(py::init<>())
      .def_readwrite("f1_ghz", &DoubleDipInit::f1_ghz)
      .def_readwrite("f2_ghz", &DoubleDipInit::f2_ghz);

  m.def("pseudo_derivative", &pseudo_derivative, py::arg("map"));
  m.def("background_subtract", &background_subtract, py::arg("map"));
  m.def("fit_dip", &fit_dip, py::arg("trace"),
        py::arg("window_ghz") = std::nullopt);
  m.def("fit_double_dip", &fit_double_dip, py::arg("trace"),
        py::arg("init") = std::nullopt);
  m.def("extract_coupling", &extract_coupling, py::arg("map"),
        py::arg("window_mt"));

  // ---------------------------------------------------------------------- io
  m.def("load_config", &load_config, py::arg("path"));
  m.def("parse_config", &parse_config, py::arg("json_text"));
  m.def("write_map_csv", &write_map_csv, py::arg("map"), py::arg("path"),
        py::arg("with_phase_file") = false);
  m.def("read_map_csv", &read_map_csv, py::arg("path"));
  m.def("write_map_json", &write_map_json, py::arg("map"), py::arg("path"));
  m.def("read_map_json", &read_map_json, py::arg("path"));

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_readwrite("magnet", &ExperimentConfig::magnet)
      .def_readwrite("spins", &ExperimentConfig::spins)
      .def_readwrite("field_sweep", &ExperimentConfig::field_sweep)
      .def_readwrite("f_axis", &ExperimentConfig::f_axis)
      .def_readwrite("coupling", &ExperimentConfig::coupling)
      .def_readwrite("saturation", &ExperimentConfig::saturation)
      .def_readwrite("stacking", &ExperimentConfig::stacking)
      .def_readwrite("chiral_scaling", &ExperimentConfig::chiral_scaling)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def("validate", &ExperimentConfig::validate);
}
