#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "magnonqed/errors.hpp"

namespace magnonqed {

/// Crystal frame: x = a (medium axis), y = b (easy axis), z = c (hard axis).
inline Eigen::Vector3d axis_a() { return {1.0, 0.0, 0.0}; }
inline Eigen::Vector3d axis_b() { return {0.0, 1.0, 0.0}; }
inline Eigen::Vector3d axis_c() { return {0.0, 0.0, 1.0}; }

/// Two-sublattice antiferromagnet in reduced field units (tesla per unit
/// sublattice moment): interlayer exchange plus biaxial anisotropy.
struct MagnetParams {
  double h_e_t = 0.392;  ///< interlayer exchange field
  double h_a_t = 0.380;  ///< in-plane anisotropy field along a
  double h_c_t = 1.32;   ///< out-of-plane anisotropy field along c
  double g = 2.0;        ///< Lande factor
  void validate() const;
};

/// Static field of magnitude b0 applied in the ab-plane at angle theta to the
/// easy b-axis (theta = 0: along b; theta = 90: along a).
struct FieldConfig {
  double b0_t = 0.0;
  double theta_deg = 0.0;
  void validate() const;
  Eigen::Vector3d direction() const;  ///< unit vector; +b for b0 = 0
  Eigen::Vector3d vector() const { return b0_t * direction(); }
};

struct Equilibrium {
  Eigen::Vector3d m1, m2;  ///< unit sublattice magnetizations, crystal frame
  double energy_t = 0.0;   ///< reduced energy density
};

enum class Chirality { LH, RH, Linear };
enum class BranchLabel { Acoustic, Optical };

/// One linearized mode. Complex 3-vectors describe the dynamic magnetization
/// in the convention m(t) = Re[p exp(-i w t)], so p ~ x + i y is a
/// right-handed orbit about z.
struct ModeSolution {
  double frequency_ghz = 0.0;
  std::array<Eigen::Vector3cd, 2> sublattice_ellipses;
  Eigen::Vector3cd net_orbit;  ///< coherent sum of the sublattice motions
  Chirality chirality = Chirality::Linear;  ///< with respect to B0 (b for B0=0)
  double ellipticity = 0.0;                 ///< minor/major axis of the orbit
  BranchLabel branch = BranchLabel::Acoustic;
};

/// N-layer chain with randomly faulted interlayer bonds. A faulted bond has
/// its exchange field multiplied by fault_coupling_scale (default -1, i.e.
/// flipped to ferromagnetic). The bond pattern depends only on seed; the
/// per-field-point minimizer restarts are decorrelated via point_index.
struct StackingConfig {
  int n_layers = 2;
  double fault_probability = 0.0;
  double fault_coupling_scale = -1.0;
  std::uint64_t seed = 0;
  void validate() const;
};

struct StackingMode {
  double frequency_ghz = 0.0;
  double weight = 0.0;  ///< squared uniform-drive overlap, normalized to sum 1
};

/// Global minimizer of
///   E = H_E m1.m2 + sum_i [H_a/2 (mi.a)^2 + H_c/2 (mi.c)^2 - B.mi]
/// over unit vectors. Projected gradient descent with analytic seeds and
/// random restarts, Newton-polished; throws SolverError on non-convergence.
Equilibrium equilibrium(const MagnetParams& mag, const FieldConfig& field);

/// Eigenmodes of the undamped Landau-Lifshitz dynamics linearized about eq.
/// Returns the two branches sorted by frequency; throws StabilityError if eq
/// is not a local minimum.
std::vector<ModeSolution> linearized_modes(const MagnetParams& mag,
                                           const FieldConfig& field,
                                           const Equilibrium& eq);

/// Mode frequencies and transmission-line coupling weights of the N-layer
/// faulted chain. Deterministic for fixed (seed, point_index).
std::vector<StackingMode> stacking_spectrum(const MagnetParams& mag,
                                            const FieldConfig& field,
                                            const StackingConfig& cfg,
                                            std::uint64_t point_index = 0);

/// Unit-normalized net dynamic field direction at the spin location.
/// Throws DegenerateModeError for a fully compensated mode.
Eigen::Vector3cd mode_rf_field(const ModeSolution& mode);

namespace detail {

/// Orbit ellipse of a complex vector p under m(t) = Re[p exp(-i w t)]:
/// semi-axes u (major) and v (minor) with u.v = 0; the motion is
/// right-handed about u x v.
struct OrbitEllipse {
  Eigen::Vector3d major, minor;
  double ellipticity = 0.0;
};
OrbitEllipse orbit_ellipse(const Eigen::Vector3cd& p);

/// Tangent-space Hessian of the N-layer chain at its equilibrium, as used by
/// the linearized dynamics u' = gamma (I (x) R) K u with R = [[0,-1],[1,0]].
/// Exposed so alternative eigensolve routes can audit the same matrix.
Eigen::MatrixXd stacking_tangent_hessian(const MagnetParams& mag,
                                         const FieldConfig& field,
                                         const StackingConfig& cfg,
                                         std::uint64_t point_index = 0);

}  // namespace detail

}  // namespace magnonqed
