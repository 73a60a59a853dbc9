#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "magnonqed/errors.hpp"

namespace magnonqed {

/// Single-ion spin ensemble: spin quantum number, zero-field splitting and
/// Zeeman geometry. Energies are in GHz (E/h), fields in mT at the API.
struct SpinEnsembleParams {
  double spin = 3.5;      ///< S; 2S+1 must be an integer >= 2
  double d_ghz = -1.23;   ///< axial zero-field-splitting constant D
  double e_ghz = 0.0;     ///< rhombic zero-field-splitting constant E
  double g = 2.0;         ///< Lande factor
  double phi_deg = 0.0;   ///< angle between B0 and the easy z-axis
  double n_spins = 1.0;   ///< ensemble size N (saturation bookkeeping only)
  double temperature_k = 0.0;  ///< initial-occupation temperature
  /// Optional zero-field gap override. When set, qubit_gap() shifts the
  /// computed transition so that it equals this value at B0 = 0. This keeps
  /// the field dependence of the spin Hamiltonian while pinning the gap to a
  /// separately measured number.
  std::optional<double> delta0_ghz;

  int dim() const { return static_cast<int>(std::lround(2.0 * spin)) + 1; }
  void validate() const;  ///< throws ValidationError
};

struct Transition {
  int lower = 0;
  int upper = 0;
  double frequency_ghz = 0.0;
  double dipole_weight = 0.0;  ///< |<upper|S+|lower>|^2
};

struct LevelSet {
  std::vector<double> energies_ghz;     ///< sorted ascending, 2S+1 entries
  std::vector<Transition> transitions;  ///< all pairs lower < upper
};

/// H = D Sz^2 + E (Sx^2 - Sy^2) + (g mu_B/h) B0 (sin(phi) Sx + cos(phi) Sz),
/// in GHz, with the field in the x-z plane at angle phi from z.
Eigen::MatrixXcd build_hamiltonian(const SpinEnsembleParams& params, double b0_mt);

/// Diagonalizes the Hamiltonian; dipole weights are |<j|S+|i>|^2 between the
/// field-dressed eigenstates.
LevelSet energy_levels(const SpinEnsembleParams& params, double b0_mt);

/// Frequency of the transition out of the (possibly degenerate) ground
/// manifold with the largest occupation-weighted dipole weight. Applies the
/// delta0_ghz override as an additive shift when set.
double qubit_gap(const SpinEnsembleParams& params, double b0_mt);

namespace detail {
/// Spin operator matrices in the Sz eigenbasis, m descending from +S to -S.
Eigen::MatrixXcd spin_z(double s);
Eigen::MatrixXcd spin_plus(double s);
Eigen::MatrixXcd spin_x(double s);
Eigen::MatrixXcd spin_y(double s);
}  // namespace detail

}  // namespace magnonqed
