#include "magnonqed/saturation.hpp"

#include <cmath>
#include <limits>

namespace magnonqed {

void SaturationParams::validate() const {
  if (alpha_mhz2_per_mw < 0.0)
    throw ValidationError("alpha_MHz2_per_mW: must be non-negative");
  if (gamma_par_mhz < 0.0)
    throw ValidationError("gamma_par_MHz: must be non-negative");
  if (gamma_e_mhz < 0.0) throw ValidationError("gamma_e_MHz: must be non-negative");
  if (gamma_i_mhz < 0.0) throw ValidationError("gamma_i_MHz: must be non-negative");
}

double equilibrium_fraction(double p_in_mw, const SaturationParams& sp) {
  sp.validate();
  if (p_in_mw < 0.0) throw ValidationError("p_in_mW: must be non-negative");
  const double drive = 4.0 * sp.alpha_mhz2_per_mw * p_in_mw;
  const double relax = sp.gamma_i_mhz * sp.gamma_par_mhz;
  if (relax <= 0.0) return (drive > 0.0) ? 0.0 : 1.0;
  return 1.0 / (1.0 + drive / relax);
}

double visibility(double p_in_mw, const SaturationParams& sp) {
  sp.validate();
  const double gamma = sp.gamma_e_mhz + sp.gamma_i_mhz;
  if (gamma <= 0.0)
    throw ValidationError("gamma: visibility undefined for gamma = 0");
  return (sp.gamma_e_mhz / gamma) * equilibrium_fraction(p_in_mw, sp);
}

double effective_coupling(double g_mhz, double n_fraction) {
  if (n_fraction < 0.0 || n_fraction > 1.0)
    throw ValidationError("n_fraction: must lie in [0, 1]");
  return g_mhz * std::sqrt(n_fraction);
}

double threshold_power(double g_mhz, double kappa_mhz, double gamma_mhz,
                       const SaturationParams& sp) {
  sp.validate();
  const double limit = std::max(kappa_mhz, gamma_mhz);
  if (g_mhz <= limit)
    throw NeverStrongError("G <= max(kappa, gamma): never strongly coupled");
  if (limit <= 0.0 || sp.alpha_mhz2_per_mw <= 0.0)
    return std::numeric_limits<double>::infinity();  // always strong
  const double frac = (limit / g_mhz) * (limit / g_mhz);  // target N_eq/N
  return sp.gamma_i_mhz * sp.gamma_par_mhz * (1.0 / frac - 1.0) /
         (4.0 * sp.alpha_mhz2_per_mw);
}

double calibrate_alpha(double g_mhz, double kappa_mhz, double gamma_mhz,
                       double gamma_i_mhz, double gamma_par_mhz,
                       double p_threshold_mw) {
  const double limit = std::max(kappa_mhz, gamma_mhz);
  if (g_mhz <= limit)
    throw NeverStrongError("G <= max(kappa, gamma): never strongly coupled");
  if (!(p_threshold_mw > 0.0))
    throw ValidationError("p_threshold_mW: must be positive");
  const double frac = (limit / g_mhz) * (limit / g_mhz);
  return gamma_i_mhz * gamma_par_mhz * (1.0 / frac - 1.0) /
         (4.0 * p_threshold_mw);
}

}  // namespace magnonqed
