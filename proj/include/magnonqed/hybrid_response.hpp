#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "magnonqed/afm_modes.hpp"
#include "magnonqed/saturation.hpp"
#include "magnonqed/spin_levels.hpp"

namespace magnonqed {

/// Collective coupling and decay rates, all /2pi in MHz. Totals
/// kappa = kappa_e + kappa_i and gamma = gamma_e + gamma_i are derived.
struct CouplingParams {
  double g_mhz = 130.0;
  double kappa_e_mhz = 50.0;
  double kappa_i_mhz = 75.0;
  double gamma_e_mhz = 10.0;
  double gamma_i_mhz = 20.0;
  /// Waveguide-mediated dissipative cross-term i sqrt(kappa_e gamma_e)/2.
  /// Required for dark/bright state interference; on by default.
  bool include_line_crosstalk = true;

  double kappa_mhz() const { return kappa_e_mhz + kappa_i_mhz; }
  double gamma_mhz() const { return gamma_e_mhz + gamma_i_mhz; }
  void validate() const;
};

/// Rectangular grid of complex transmission over (field, frequency) --
/// the exchange format between the forward model and the fitter.
struct SpectrumMap {
  std::vector<double> b0_axis_mt;  ///< strictly monotone
  std::vector<double> f_axis_ghz;  ///< strictly monotone
  Eigen::MatrixXcd s21;            ///< rows: field, cols: frequency
  std::string metadata;            ///< JSON snapshot of generation parameters
  void validate() const;
};

struct PolaritonBranch {
  double frequency_ghz = 0.0;
  double linewidth_mhz = 0.0;
  double mixing_angle_xi = 0.0;  ///< atan(G / |Delta - omega_M|), radians
  double brightness = 0.0;       ///< transmission-line visibility weight in [0,1]
};

/// Input-output transmission of one magnon mode and one spin mode
/// side-coupled to a common line:
///   S21 = 1 - i v^T M^-1 v,  v = (sqrt(kappa_e/2), sqrt(gamma_e/2)),
///   M = [[w - w_M + i kappa/2, G + chi], [G + chi, w - Delta + i gamma/2]],
/// chi = i sqrt(kappa_e gamma_e)/2 when line crosstalk is enabled.
/// All frequencies in GHz. S21 -> 1 off resonance; dips are minima of |S21|.
std::complex<double> s21(double omega_ghz, double magnon_freq_ghz,
                         double spin_freq_ghz, const CouplingParams& cp);

/// Complex eigenvalues of the 2x2 non-Hermitian mode matrix: frequency from
/// the real part, linewidth from -2x the imaginary part. Brightness is
/// |sqrt(kappa_e) c_magnon + sqrt(gamma_e) c_spin|^2, normalized so the two
/// branches sum to 1. Returned sorted by frequency.
std::array<PolaritonBranch, 2> polariton_branches(double magnon_freq_ghz,
                                                  double spin_freq_ghz,
                                                  const CouplingParams& cp);

/// Geometric coupling scale of a magnon rf field onto the spin transition.
/// The spin's co-rotating axis is its easy axis (oriented along the field
/// projection); the factor is the co-rotating circular amplitude of the mode
/// field, normalized so an ideal hard-axis linear drive (the acoustic-mode
/// geometry) gives 1. A co-rotating circular drive then gives sqrt(2), a
/// counter-rotating one 0.
double chiral_projection(const Eigen::Vector3cd& mode_field,
                         const SpinEnsembleParams& spins,
                         const FieldConfig& field);

/// Co-rotating amplitude fraction in [0, 1] (chiral_projection / sqrt(2)).
double corotating_fraction(const Eigen::Vector3cd& mode_field,
                           const SpinEnsembleParams& spins,
                           const FieldConfig& field);

struct FieldSweep {
  double start_mt = 0.0;
  double stop_mt = 0.0;
  int steps = 2;
  double theta_deg = 90.0;
  void validate() const;
};

struct FrequencyAxis {
  double start_ghz = 0.0;
  double stop_ghz = 0.0;
  int steps = 2;
  void validate() const;
};

struct SpectrumOptions {
  bool chiral_scaling = false;
  std::optional<StackingConfig> stacking;
  /// Drive-power renormalization G -> G sqrt(N_eq/N): saturation parameters
  /// plus the input power in mW.
  std::optional<SaturationParams> saturation;
  std::optional<double> drive_power_mw;
  int jobs = 1;
};

/// Forward model: per field point the magnon branch comes from afm_modes
/// (acoustic mode, or the stacking ensemble) and the spin transition from
/// spin_levels; the hybrid response is evaluated on the frequency axis.
/// Multiple spin domains enter as independent modes sharing the coupling
/// budget (G_d = G/sqrt(n), gamma_e,d = gamma_e/n).
SpectrumMap spectrum_map(const MagnetParams& mag,
                         const std::vector<SpinEnsembleParams>& spins,
                         const FieldSweep& sweep, const FrequencyAxis& f_axis,
                         const CouplingParams& cp,
                         const SpectrumOptions& options = {});

}  // namespace magnonqed
