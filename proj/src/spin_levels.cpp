#include "magnonqed/spin_levels.hpp"

#include <cmath>
#include <complex>

#include "magnonqed/constants.hpp"

namespace magnonqed {

using std::complex;

void SpinEnsembleParams::validate() const {
  const double two_s = 2.0 * spin;
  if (spin <= 0.0 || std::abs(two_s - std::lround(two_s)) > 1e-9)
    throw ValidationError("spin: 2S+1 must be a positive integer >= 2");
  if (spin > 50.0)
    throw ValidationError("spin: S > 50 exceeds the supported matrix dimension");
  if (std::abs(e_ghz) > std::abs(d_ghz) / 3.0 + 1e-15)
    throw ValidationError("E_GHz: rhombicity bound |E| <= |D|/3 violated");
  if (phi_deg < 0.0 || phi_deg >= 360.0)
    throw ValidationError("phi_deg: must satisfy 0 <= phi < 360");
  if (!(g > 0.0)) throw ValidationError("g: must be positive");
  if (!(n_spins > 0.0)) throw ValidationError("n_spins: must be positive");
  if (temperature_k < 0.0)
    throw ValidationError("temperature_K: must be non-negative");
  if (delta0_ghz && !(*delta0_ghz > 0.0))
    throw ValidationError("delta0_GHz: must be positive when set");
}

namespace detail {

Eigen::MatrixXcd spin_z(double s) {
  const int n = static_cast<int>(std::lround(2.0 * s)) + 1;
  Eigen::MatrixXcd sz = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 0; k < n; ++k) sz(k, k) = s - k;
  return sz;
}

Eigen::MatrixXcd spin_plus(double s) {
  const int n = static_cast<int>(std::lround(2.0 * s)) + 1;
  Eigen::MatrixXcd sp = Eigen::MatrixXcd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double m = s - k;  // S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>
    sp(k - 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
  }
  return sp;
}

Eigen::MatrixXcd spin_x(double s) {
  const Eigen::MatrixXcd sp = spin_plus(s);
  return 0.5 * (sp + sp.adjoint());
}

Eigen::MatrixXcd spin_y(double s) {
  const Eigen::MatrixXcd sp = spin_plus(s);
  return complex<double>(0.0, -0.5) * (sp - sp.adjoint());
}

}  // namespace detail

Eigen::MatrixXcd build_hamiltonian(const SpinEnsembleParams& params, double b0_mt) {
  params.validate();
  if (b0_mt < 0.0) throw ValidationError("b0_mT: must be non-negative");

  const double s = params.spin;
  const Eigen::MatrixXcd sz = detail::spin_z(s);
  const Eigen::MatrixXcd sx = detail::spin_x(s);
  const Eigen::MatrixXcd sy = detail::spin_y(s);

  const double phi = deg_to_rad(params.phi_deg);
  const double zeeman = params.g * kMuBOverH_GHzPerT * (b0_mt / 1000.0);

  Eigen::MatrixXcd h = params.d_ghz * (sz * sz) +
                       params.e_ghz * (sx * sx - sy * sy) +
                       zeeman * (std::sin(phi) * sx + std::cos(phi) * sz);
  // enforce exact Hermiticity against rounding in the operator products
  return 0.5 * (h + h.adjoint());
}

namespace {

struct Diagonalization {
  Eigen::VectorXd energies;
  Eigen::MatrixXcd states;  // columns, same order as energies (ascending)
};

Diagonalization diagonalize(const SpinEnsembleParams& params, double b0_mt) {
  const Eigen::MatrixXcd h = build_hamiltonian(params, b0_mt);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
  if (solver.info() != Eigen::Success) {
    const double res = (h * h).norm();  // unused magnitude, report scale
    throw SolverError("spin eigensolver did not converge", res);
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace

LevelSet energy_levels(const SpinEnsembleParams& params, double b0_mt) {
  const auto diag = diagonalize(params, b0_mt);
  const Eigen::MatrixXcd sp = detail::spin_plus(params.spin);
  const Eigen::MatrixXcd sp_dressed =
      diag.states.adjoint() * sp * diag.states;

  LevelSet out;
  const int n = static_cast<int>(diag.energies.size());
  out.energies_ghz.assign(diag.energies.data(), diag.energies.data() + n);
  out.transitions.reserve(n * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      out.transitions.push_back({i, j, diag.energies[j] - diag.energies[i],
                                 std::norm(sp_dressed(j, i))});
  return out;
}

double qubit_gap(const SpinEnsembleParams& params, double b0_mt) {
  const auto gap_raw = [&](double b_mt) {
    const auto diag = diagonalize(params, b_mt);
    const Eigen::MatrixXcd sp = detail::spin_plus(params.spin);
    const Eigen::MatrixXcd spd = diag.states.adjoint() * sp * diag.states;
    const int n = static_cast<int>(diag.energies.size());
    if (n == 2) return diag.energies[1] - diag.energies[0];

    // Occupation of initial states: ground manifold only at T = 0 (states
    // degenerate with the ground state share equally), Boltzmann otherwise.
    constexpr double kDegTolGhz = 1e-6;
    constexpr double kKelvinPerGhz = 0.0479924;  // h/kB
    std::vector<double> occ(n, 0.0);
    if (params.temperature_k > 0.0) {
      const double beta = kKelvinPerGhz / params.temperature_k;
      for (int i = 0; i < n; ++i)
        occ[i] = std::exp(-beta * (diag.energies[i] - diag.energies[0]));
    } else {
      for (int i = 0; i < n; ++i)
        occ[i] = (diag.energies[i] - diag.energies[0] <= kDegTolGhz) ? 1.0 : 0.0;
    }

    double best_weight = -1.0, best_freq = 0.0;
    for (int i = 0; i < n; ++i) {
      if (occ[i] < 1e-9) continue;
      for (int j = 0; j < n; ++j) {
        const double f = diag.energies[j] - diag.energies[i];
        if (f <= kDegTolGhz) continue;  // only transitions out of the manifold
        const double w = occ[i] * std::norm(spd(j, i));
        if (w > best_weight) {
          best_weight = w;
          best_freq = f;
        }
      }
    }
    return best_freq;
  };

  double delta = gap_raw(b0_mt);
  if (params.delta0_ghz) delta += *params.delta0_ghz - gap_raw(0.0);
  return delta;
}

}  // namespace magnonqed
