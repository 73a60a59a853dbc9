#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "magnonqed/errors.hpp"
#include "magnonqed/hybrid_response.hpp"

namespace magnonqed {

/// One transmission trace: |S21| (linear scale) or a processed amplitude
/// against a strictly monotone frequency grid.
struct Trace {
  std::vector<double> f_axis_ghz;
  std::vector<double> values;
  void validate() const;
};

/// Lorentzian dip fit: baseline - depth (w/2)^2 / ((f - f_m)^2 + (w/2)^2).
struct LorentzianFit {
  double f_m_ghz = 0.0;    ///< center
  double w_m_mhz = 0.0;    ///< full width at half depth
  double depth = 0.0;      ///< linear-scale dip amplitude
  double baseline = 0.0;
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();  ///< (f_m, w, depth, baseline)
  double residual_norm = 0.0;
};

struct CouplingExtract {
  double g_mhz = 0.0;
  double crossing_field_mt = 0.0;
  double kappa_mhz = 0.0;
  double gamma_mhz = 0.0;
  double cooperativity = 0.0;  ///< G^2 / (kappa gamma)
};

/// No dip above the prominence threshold (3x the median absolute deviation).
class NoDipFoundError : public Error {
 public:
  using Error::Error;
};

/// Damped least squares hit the iteration cap; carries the best parameters.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, LorentzianFit best)
      : Error(what), best_(std::move(best)) {}
  const LorentzianFit& best() const { return best_; }

 private:
  LorentzianFit best_;
};

/// Double-dip fit collapsed to a single dip.
class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// Anticrossing extraction failed (no interior separation minimum, or the
/// crossing region is unresolved).
class ExtractError : public Error {
 public:
  using Error::Error;
};

/// Centered finite difference of |S21| along the field axis (one-sided at the
/// edges). Output is a real-valued map on the same grid; the static
/// background along field vanishes by construction.
SpectrumMap pseudo_derivative(const SpectrumMap& map);

/// Subtracts the per-frequency median over the field axis from |S21|.
/// Robust against sparse resonances; idempotent.
SpectrumMap background_subtract(const SpectrumMap& map);

/// Single Lorentzian dip fit over an optional frequency window (GHz).
LorentzianFit fit_dip(const Trace& trace,
                      std::optional<std::pair<double, double>> window_ghz = {});

struct DoubleDipInit {
  double f1_ghz = 0.0;
  double f2_ghz = 0.0;
};

/// Two Lorentzian dips with a shared baseline frozen at the trace median;
/// six free parameters. Results are ordered by ascending center.
std::pair<LorentzianFit, LorentzianFit> fit_double_dip(
    const Trace& trace, std::optional<DoubleDipInit> init = {});

/// Per-field double-dip fits inside the window: G is half the minimum center
/// separation; kappa and gamma come from the asymptotic widths of the branch
/// with the smaller/larger dispersion slope far from the crossing.
CouplingExtract extract_coupling(const SpectrumMap& map,
                                 std::pair<double, double> window_mt);

}  // namespace magnonqed
