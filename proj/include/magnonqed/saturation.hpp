#pragma once

#include "magnonqed/errors.hpp"

namespace magnonqed {

/// Drive-power saturation of the spin ensemble. The photon number at the
/// sample scales as Lambda^2 = alpha * P_in; rates are /2pi in MHz.
struct SaturationParams {
  double alpha_mhz2_per_mw = 0.0;  ///< drive conversion factor
  double gamma_par_mhz = 0.0;      ///< longitudinal spin relaxation rate
  double gamma_e_mhz = 0.0;        ///< external spin decay
  double gamma_i_mhz = 0.0;        ///< intrinsic spin decay
  void validate() const;
};

/// Dip visibility Y(P) = (gamma_e/gamma) / (1 + 4 Lambda^2 / (gamma_i gamma_par)).
/// Returns the saturated limit 0 directly when gamma_i * gamma_par = 0 and
/// P > 0. Throws ValidationError when gamma = 0.
double visibility(double p_in_mw, const SaturationParams& sp);

/// N_eq/N = 1 / (1 + 4 Lambda^2 / (gamma_i gamma_par)).
double equilibrium_fraction(double p_in_mw, const SaturationParams& sp);

/// G_eff = G sqrt(N_eq/N).
double effective_coupling(double g_mhz, double n_fraction);

/// Smallest input power (mW) at which G_eff drops to max(kappa, gamma).
/// Returns +infinity when max(kappa, gamma) = 0 or alpha = 0 (always strong
/// below any finite power); throws NeverStrongError when G <= max(kappa, gamma).
double threshold_power(double g_mhz, double kappa_mhz, double gamma_mhz,
                       const SaturationParams& sp);

/// Alpha that places the strong-coupling threshold at p_threshold_mw.
double calibrate_alpha(double g_mhz, double kappa_mhz, double gamma_mhz,
                       double gamma_i_mhz, double gamma_par_mhz,
                       double p_threshold_mw);

}  // namespace magnonqed
