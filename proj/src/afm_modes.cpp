#include "magnonqed/afm_modes.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "magnonqed/constants.hpp"

namespace magnonqed {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3cd;
using Eigen::Vector3d;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using std::complex;

void MagnetParams::validate() const {
  if (!(h_e_t > 0.0)) throw ValidationError("H_E_T: must be positive");
  if (h_a_t < 0.0) throw ValidationError("H_a_T: must be non-negative");
  if (h_c_t < 0.0) throw ValidationError("H_c_T: must be non-negative");
  if (h_c_t < h_a_t)
    throw ValidationError("H_c_T: hard-axis field must be >= H_a_T");
  if (!(g > 0.0)) throw ValidationError("g: must be positive");
}

void FieldConfig::validate() const {
  if (b0_t < 0.0) throw ValidationError("b0_T: must be non-negative");
  if (theta_deg < 0.0 || theta_deg > 90.0)
    throw ValidationError("theta_deg: must lie in [0, 90]");
}

Vector3d FieldConfig::direction() const {
  const double t = deg_to_rad(theta_deg);
  return std::sin(t) * axis_a() + std::cos(t) * axis_b();
}

void StackingConfig::validate() const {
  if (n_layers < 2) throw ValidationError("n_layers: must be >= 2");
  if (fault_probability < 0.0 || fault_probability > 1.0)
    throw ValidationError("fault_probability: must lie in [0, 1]");
  if (!std::isfinite(fault_coupling_scale))
    throw ValidationError("fault_coupling_scale: must be finite");
}

namespace {

// ---------------------------------------------------------------------------
// deterministic RNG (splitmix64), identical across platforms

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

Vector3d random_unit(std::uint64_t& state) {
  // rejection sampling inside the unit ball
  for (;;) {
    const double x = 2.0 * uniform01(state) - 1.0;
    const double y = 2.0 * uniform01(state) - 1.0;
    const double z = 2.0 * uniform01(state) - 1.0;
    const double n2 = x * x + y * y + z * z;
    if (n2 > 1e-8 && n2 <= 1.0) return Vector3d(x, y, z) / std::sqrt(n2);
  }
}

// ---------------------------------------------------------------------------
// N-macrospin chain energy model

struct ChainModel {
  std::vector<double> bonds_t;  // nearest-neighbor exchange fields, size N-1
  double h_a = 0.0, h_c = 0.0;
  Vector3d b_field = Vector3d::Zero();

  int size() const { return static_cast<int>(bonds_t.size()) + 1; }

  double energy(const std::vector<Vector3d>& m) const {
    double e = 0.0;
    for (std::size_t k = 0; k < bonds_t.size(); ++k)
      e += bonds_t[k] * m[k].dot(m[k + 1]);
    for (const auto& mk : m) {
      e += 0.5 * h_a * mk.x() * mk.x() + 0.5 * h_c * mk.z() * mk.z();
      e -= b_field.dot(mk);
    }
    return e;
  }

  Vector3d gradient(const std::vector<Vector3d>& m, int k) const {
    Vector3d g = -b_field;
    g.x() += h_a * m[k].x();
    g.z() += h_c * m[k].z();
    if (k > 0) g += bonds_t[k - 1] * m[k - 1];
    if (k + 1 < size()) g += bonds_t[k] * m[k + 1];
    return g;
  }
};

struct TangentFrame {
  Vector3d e1, e2;  // (e1, e2, m) right-handed
};

TangentFrame make_frame(const Vector3d& m) {
  const Vector3d seed =
      (std::abs(m.x()) < 0.9) ? Vector3d::UnitX() : Vector3d::UnitY();
  TangentFrame f;
  f.e1 = (seed - seed.dot(m) * m).normalized();
  f.e2 = m.cross(f.e1);  // e1 x e2 = m
  return f;
}

// Projected Hessian on the product of tangent planes, with the spherical
// curvature correction -lambda_k per site.
MatrixXd tangent_hessian(const ChainModel& model, const std::vector<Vector3d>& m,
                         const std::vector<TangentFrame>& frames) {
  const int n = model.size();
  MatrixXd k_mat = MatrixXd::Zero(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) {
    const Vector3d grad = model.gradient(m, k);
    const double lambda = m[k].dot(grad);
    Matrix3d on_site = Matrix3d::Zero();
    on_site(0, 0) = model.h_a;
    on_site(2, 2) = model.h_c;
    const auto& fk = frames[k];
    k_mat(2 * k, 2 * k) = fk.e1.dot(on_site * fk.e1) - lambda;
    k_mat(2 * k, 2 * k + 1) = fk.e1.dot(on_site * fk.e2);
    k_mat(2 * k + 1, 2 * k) = k_mat(2 * k, 2 * k + 1);
    k_mat(2 * k + 1, 2 * k + 1) = fk.e2.dot(on_site * fk.e2) - lambda;
    if (k + 1 < n) {
      const double j = model.bonds_t[k];
      const auto& fl = frames[k + 1];
      k_mat(2 * k, 2 * (k + 1)) = j * fk.e1.dot(fl.e1);
      k_mat(2 * k, 2 * (k + 1) + 1) = j * fk.e1.dot(fl.e2);
      k_mat(2 * k + 1, 2 * (k + 1)) = j * fk.e2.dot(fl.e1);
      k_mat(2 * k + 1, 2 * (k + 1) + 1) = j * fk.e2.dot(fl.e2);
      k_mat.block<2, 2>(2 * (k + 1), 2 * k) =
          k_mat.block<2, 2>(2 * k, 2 * (k + 1)).transpose();
    }
  }
  return k_mat;
}

double projected_grad_norm(const ChainModel& model,
                           const std::vector<Vector3d>& m) {
  double worst = 0.0;
  for (int k = 0; k < model.size(); ++k) {
    const Vector3d g = model.gradient(m, k);
    worst = std::max(worst, (g - g.dot(m[k]) * m[k]).norm());
  }
  return worst;
}

constexpr double kGradTol = 1e-9;
constexpr int kDescentIters = 4000;
constexpr int kNewtonIters = 40;

// Projected gradient descent with backtracking, then Newton polish on the
// tangent coordinates. Returns true when the gradient tolerance is met.
bool minimize_from(const ChainModel& model, std::vector<Vector3d>& m) {
  const int n = model.size();
  double step = 0.5;
  double e = model.energy(m);
  for (int it = 0; it < kDescentIters; ++it) {
    std::vector<Vector3d> pg(n);
    double gnorm = 0.0;
    for (int k = 0; k < n; ++k) {
      const Vector3d g = model.gradient(m, k);
      pg[k] = g - g.dot(m[k]) * m[k];
      gnorm = std::max(gnorm, pg[k].norm());
    }
    if (gnorm < 1e-6) break;  // hand over to Newton
    std::vector<Vector3d> trial(n);
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      for (int k = 0; k < n; ++k)
        trial[k] = (m[k] - step * pg[k]).normalized();
      const double et = model.energy(trial);
      if (et < e - 1e-16) {
        m = trial;
        e = et;
        step = std::min(step * 1.5, 4.0);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }

  for (int it = 0; it < kNewtonIters; ++it) {
    if (projected_grad_norm(model, m) < kGradTol) return true;
    std::vector<TangentFrame> frames(n);
    VectorXd g_t(2 * n);
    for (int k = 0; k < n; ++k) {
      frames[k] = make_frame(m[k]);
      const Vector3d g = model.gradient(m, k);
      g_t(2 * k) = g.dot(frames[k].e1);
      g_t(2 * k + 1) = g.dot(frames[k].e2);
    }
    MatrixXd k_mat = tangent_hessian(model, m, frames);
    // damp until positive definite so the step is a descent direction
    double mu = 0.0;
    Eigen::LLT<MatrixXd> llt;
    for (int tries = 0; tries < 60; ++tries) {
      llt.compute(k_mat + mu * MatrixXd::Identity(2 * n, 2 * n));
      if (llt.info() == Eigen::Success) break;
      mu = (mu == 0.0) ? 1e-8 : mu * 10.0;
    }
    if (llt.info() != Eigen::Success) return false;
    const VectorXd du = llt.solve(-g_t);
    double scale = 1.0;
    const double e0 = model.energy(m);
    for (int bt = 0; bt < 30; ++bt) {
      std::vector<Vector3d> trial(n);
      for (int k = 0; k < n; ++k)
        trial[k] = (m[k] + scale * (du(2 * k) * frames[k].e1 +
                                    du(2 * k + 1) * frames[k].e2))
                       .normalized();
      if (model.energy(trial) <= e0 + 1e-15) {
        m = trial;
        break;
      }
      scale *= 0.5;
    }
  }
  return projected_grad_norm(model, m) < kGradTol;
}

std::vector<std::vector<Vector3d>> equilibrium_seeds(const ChainModel& model,
                                                     std::uint64_t rng_seed,
                                                     int n_restarts) {
  const int n = model.size();
  std::vector<std::vector<Vector3d>> seeds;
  const Vector3d b = model.b_field;
  const Vector3d n_hat = (b.norm() > 0.0) ? b.normalized() : axis_b();
  // in-plane transverse direction (rotate about c)
  Vector3d t_hat = axis_c().cross(n_hat);
  if (t_hat.norm() < 1e-12) t_hat = axis_a();
  t_hat.normalize();

  auto alternating = [&](const Vector3d& up) {
    std::vector<Vector3d> cfg(n);
    for (int k = 0; k < n; ++k) cfg[k] = (k % 2 == 0) ? up : Vector3d(-up);
    return cfg;
  };
  seeds.push_back(alternating(axis_b()));
  seeds.push_back(alternating(-axis_b()));
  if (b.norm() > 0.0) seeds.push_back(std::vector<Vector3d>(n, n_hat));
  for (double s : {0.1, 0.3, 0.6, 0.9}) {
    const double c = std::sqrt(1.0 - s * s);
    std::vector<Vector3d> cfg(n);
    for (int k = 0; k < n; ++k)
      cfg[k] = (s * n_hat + ((k % 2 == 0) ? c : -c) * t_hat).normalized();
    seeds.push_back(cfg);
  }
  std::uint64_t state = rng_seed;
  for (int r = 0; r < n_restarts; ++r) {
    std::vector<Vector3d> cfg(n);
    for (int k = 0; k < n; ++k) cfg[k] = random_unit(state);
    seeds.push_back(cfg);
  }
  return seeds;
}

struct ChainEquilibrium {
  std::vector<Vector3d> m;
  double energy = 0.0;
};

ChainEquilibrium solve_equilibrium(const ChainModel& model,
                                   std::uint64_t rng_seed) {
  constexpr int kRestarts = 8;
  ChainEquilibrium best;
  bool found = false;
  double last_gnorm = std::numeric_limits<double>::infinity();
  for (auto& seed : equilibrium_seeds(model, rng_seed, kRestarts)) {
    std::vector<Vector3d> m = seed;
    if (!minimize_from(model, m)) {
      last_gnorm = std::min(last_gnorm, projected_grad_norm(model, m));
      continue;
    }
    const double e = model.energy(m);
    if (!found || e < best.energy - 1e-14) {
      best = {m, e};
      found = true;
    }
  }
  if (!found)
    throw SolverError("equilibrium minimizer did not converge", last_gnorm);

  // Resolve the global spin-flip degeneracy at zero field with a fixed sign
  // convention: prefer the configuration whose first site has the larger
  // (b, a, c) components, lexicographically.
  if (model.b_field.norm() == 0.0) {
    const Vector3d& m0 = best.m.front();
    const auto key = [](const Vector3d& v) {
      return std::array<double, 3>{v.y(), v.x(), v.z()};
    };
    if (key(-m0) > key(m0))
      for (auto& mk : best.m) mk = -mk;
  }
  return best;
}

// ---------------------------------------------------------------------------
// linearized dynamics

struct RawMode {
  double nu_t = 0.0;           // |omega| / (g mu_B/h), tesla units
  VectorXcd tangent;           // complex tangent eigenvector, unit norm
};

// Eigenmodes of u' = gamma (I (x) R) K u for R = [[0,-1],[1,0]]. K must be
// positive semidefinite (checked); eigenvalues then come as +-(i nu).
// Eigenvectors are returned for the exp(-i w t) convention.
std::vector<RawMode> tangent_modes(const MatrixXd& k_mat) {
  const int dim = static_cast<int>(k_mat.rows());
  const int n = dim / 2;

  Eigen::SelfAdjointEigenSolver<MatrixXd> kcheck(k_mat);
  const double kscale = std::max(1.0, std::abs(kcheck.eigenvalues().maxCoeff()));
  for (int i = 0; i < dim; ++i) {
    if (kcheck.eigenvalues()(i) < -1e-9 * kscale)
      throw StabilityError(
          "unstable equilibrium: branch " + std::to_string(i) +
              " has negative curvature",
          i);
  }

  MatrixXd a = MatrixXd::Zero(dim, dim);
  for (int k = 0; k < n; ++k) {
    a.row(2 * k) = -k_mat.row(2 * k + 1);
    a.row(2 * k + 1) = k_mat.row(2 * k);
  }
  Eigen::EigenSolver<MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw SolverError("mode eigensolver did not converge", 0.0);

  std::vector<RawMode> modes;
  std::vector<int> zero_candidates;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (int i = 0; i < dim; ++i) {
    const complex<double> s = es.eigenvalues()(i);
    if (s.imag() < -1e-12 * scale) {
      RawMode mode;
      mode.nu_t = -s.imag();
      mode.tangent = es.eigenvectors().col(i);
      mode.tangent.normalize();
      modes.push_back(std::move(mode));
    } else if (std::abs(s) <= 1e-12 * scale) {
      zero_candidates.push_back(i);
    }
  }
  // zero modes come as real eigenvalues; keep one per pair
  for (std::size_t z = 0; z + 1 < zero_candidates.size() && (int)modes.size() < n;
       z += 2) {
    RawMode mode;
    mode.nu_t = 0.0;
    mode.tangent = es.eigenvectors().col(zero_candidates[z]);
    mode.tangent.normalize();
    modes.push_back(std::move(mode));
  }
  std::sort(modes.begin(), modes.end(),
            [](const RawMode& x, const RawMode& y) { return x.nu_t < y.nu_t; });
  return modes;
}

std::vector<Vector3cd> sublattice_orbits(const RawMode& mode,
                                         const std::vector<TangentFrame>& frames) {
  const int n = static_cast<int>(frames.size());
  std::vector<Vector3cd> p(n);
  for (int k = 0; k < n; ++k)
    p[k] = mode.tangent(2 * k) * frames[k].e1.cast<complex<double>>() +
           mode.tangent(2 * k + 1) * frames[k].e2.cast<complex<double>>();

  // deterministic global phase: largest net-orbit component real positive
  Vector3cd net = Vector3cd::Zero();
  for (const auto& pk : p) net += pk;
  const Vector3cd& ref = (net.norm() > 1e-12) ? net : p[0];
  int imax = 0;
  ref.cwiseAbs().maxCoeff(&imax);
  if (std::abs(ref(imax)) > 0.0) {
    const complex<double> phase = ref(imax) / std::abs(ref(imax));
    for (auto& pk : p) pk /= phase;
  }
  return p;
}

}  // namespace

namespace detail {

OrbitEllipse orbit_ellipse(const Vector3cd& p) {
  OrbitEllipse out;
  const complex<double> w = (p.array() * p.array()).sum();
  Vector3cd q = p;
  if (std::abs(w) > 1e-30) {
    const complex<double> phase = std::exp(complex<double>(0.0, -0.5 * std::arg(w)));
    q = p * phase;
  }
  out.major = q.real();
  out.minor = q.imag();
  const double a = out.major.norm();
  const double b = out.minor.norm();
  out.ellipticity = (a > 1e-15) ? b / a : 0.0;
  return out;
}

}  // namespace detail

Equilibrium equilibrium(const MagnetParams& mag, const FieldConfig& field) {
  mag.validate();
  field.validate();
  ChainModel model{{mag.h_e_t}, mag.h_a_t, mag.h_c_t, field.vector()};
  const auto sol = solve_equilibrium(model, 0x5EEDBA5EULL);
  return {sol.m[0], sol.m[1], sol.energy};
}

std::vector<ModeSolution> linearized_modes(const MagnetParams& mag,
                                           const FieldConfig& field,
                                           const Equilibrium& eq) {
  mag.validate();
  field.validate();
  if (std::abs(eq.m1.norm() - 1.0) > 1e-10 || std::abs(eq.m2.norm() - 1.0) > 1e-10)
    throw ValidationError("equilibrium: sublattice vectors must be unit length");
  ChainModel model{{mag.h_e_t}, mag.h_a_t, mag.h_c_t, field.vector()};
  std::vector<Vector3d> m{eq.m1, eq.m2};
  if (projected_grad_norm(model, m) > 1e-7)
    throw ValidationError("equilibrium: projected gradient exceeds tolerance");

  std::vector<TangentFrame> frames{make_frame(m[0]), make_frame(m[1])};
  const MatrixXd k_mat = tangent_hessian(model, m, frames);
  const auto raw = tangent_modes(k_mat);

  const Vector3d ref_axis =
      (field.b0_t > 0.0) ? field.direction() : axis_b();

  std::vector<ModeSolution> out;
  for (const auto& mode : raw) {
    ModeSolution sol;
    sol.frequency_ghz = mag.g * kMuBOverH_GHzPerT * mode.nu_t;
    const auto orbits = sublattice_orbits(mode, frames);
    sol.sublattice_ellipses = {orbits[0], orbits[1]};
    sol.net_orbit = orbits[0] + orbits[1];

    const auto ell = detail::orbit_ellipse(sol.net_orbit);
    sol.ellipticity = ell.ellipticity;
    constexpr double kLinearThreshold = 0.1;
    if (ell.ellipticity < kLinearThreshold) {
      sol.chirality = Chirality::Linear;
    } else {
      const double handed = ell.major.cross(ell.minor).dot(ref_axis);
      const double norm = ell.major.norm() * ell.minor.norm();
      if (std::abs(handed) < 1e-9 * norm)
        sol.chirality = Chirality::Linear;
      else
        sol.chirality = (handed > 0.0) ? Chirality::RH : Chirality::LH;
    }
    out.push_back(std::move(sol));
  }

  // acoustic branch: the one whose net moment is dominated by the hard axis
  if (out.size() == 2) {
    auto c_fraction = [](const ModeSolution& mode) {
      const double n = mode.net_orbit.norm();
      return (n > 1e-12) ? std::abs(mode.net_orbit.z()) / n : 0.0;
    };
    const bool first_acoustic = c_fraction(out[0]) >= c_fraction(out[1]);
    out[0].branch = first_acoustic ? BranchLabel::Acoustic : BranchLabel::Optical;
    out[1].branch = first_acoustic ? BranchLabel::Optical : BranchLabel::Acoustic;
  }
  return out;
}

namespace {

struct StackingProblem {
  ChainModel model;
  ChainEquilibrium equilibrium;
  std::vector<TangentFrame> frames;
};

StackingProblem build_stacking_problem(const MagnetParams& mag,
                                       const FieldConfig& field,
                                       const StackingConfig& cfg,
                                       std::uint64_t point_index) {
  mag.validate();
  field.validate();
  cfg.validate();

  // The bond pattern is frozen per sample: it depends on cfg.seed only.
  std::uint64_t bond_state = cfg.seed ^ 0xA02B0C1D2E3F4051ULL;
  StackingProblem out;
  out.model.h_a = mag.h_a_t;
  out.model.h_c = mag.h_c_t;
  out.model.b_field = field.vector();
  out.model.bonds_t.resize(cfg.n_layers - 1);
  for (auto& j : out.model.bonds_t) {
    const bool faulted = uniform01(bond_state) < cfg.fault_probability;
    j = faulted ? cfg.fault_coupling_scale * mag.h_e_t : mag.h_e_t;
  }

  // Restarts are decorrelated per field point without sharing RNG state.
  std::uint64_t restart_seed = cfg.seed;
  splitmix64(restart_seed);
  restart_seed ^= point_index * 0x9E3779B97F4A7C15ULL;

  out.equilibrium = solve_equilibrium(out.model, restart_seed);
  out.frames.resize(out.model.size());
  for (int k = 0; k < out.model.size(); ++k)
    out.frames[k] = make_frame(out.equilibrium.m[k]);
  return out;
}

}  // namespace

Eigen::MatrixXd detail::stacking_tangent_hessian(const MagnetParams& mag,
                                                 const FieldConfig& field,
                                                 const StackingConfig& cfg,
                                                 std::uint64_t point_index) {
  const auto problem = build_stacking_problem(mag, field, cfg, point_index);
  return tangent_hessian(problem.model, problem.equilibrium.m, problem.frames);
}

std::vector<StackingMode> stacking_spectrum(const MagnetParams& mag,
                                            const FieldConfig& field,
                                            const StackingConfig& cfg,
                                            std::uint64_t point_index) {
  const auto problem = build_stacking_problem(mag, field, cfg, point_index);
  const auto& sol = problem.equilibrium;
  const auto& frames = problem.frames;
  const MatrixXd k_mat = tangent_hessian(problem.model, sol.m, frames);
  const auto raw = tangent_modes(k_mat);

  std::vector<StackingMode> out;
  double total = 0.0;
  for (const auto& mode : raw) {
    const auto orbits = sublattice_orbits(mode, frames);
    Vector3cd net = Vector3cd::Zero();
    for (const auto& p : orbits) net += p;
    const double w = net.squaredNorm();
    out.push_back({mag.g * kMuBOverH_GHzPerT * mode.nu_t, w});
    total += w;
  }
  if (total > 0.0)
    for (auto& m : out) m.weight /= total;
  return out;
}

Vector3cd mode_rf_field(const ModeSolution& mode) {
  const double n = mode.net_orbit.norm();
  if (n < 1e-12)
    throw DegenerateModeError("mode has vanishing net dynamic magnetization");
  return mode.net_orbit / n;
}

}  // namespace magnonqed
