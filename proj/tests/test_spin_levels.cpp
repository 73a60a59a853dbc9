#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "magnonqed/constants.hpp"
#include "magnonqed/spin_levels.hpp"
#include "oracles.hpp"

using namespace magnonqed;

namespace {

SpinEnsembleParams sample_spins() {
  SpinEnsembleParams sp;
  sp.spin = 3.5;
  sp.d_ghz = -1.23;
  sp.e_ghz = 0.0031;
  sp.g = 2.0;
  sp.phi_deg = 49.0;
  return sp;
}

std::uint64_t mix(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
double urand(std::uint64_t& s) { return (mix(s) >> 11) * 0x1.0p-53; }

}  // namespace

TEST_CASE("zero-field axial Hamiltonian is diagonal with D m^2 entries") {
  SpinEnsembleParams sp;
  sp.d_ghz = -1.23;
  sp.e_ghz = 0.0;
  const auto h = build_hamiltonian(sp, 0.0);
  REQUIRE(h.rows() == 8);
  for (int i = 0; i < 8; ++i) {
    const double m = 3.5 - i;
    CHECK(std::abs(h(i, i).real() - sp.d_ghz * m * m) < 1e-12);
    for (int j = 0; j < 8; ++j)
      if (i != j) CHECK(std::abs(h(i, j)) < 1e-12);
  }
}

TEST_CASE("Kramers degeneracy at zero field with rhombic term") {
  SpinEnsembleParams sp;
  sp.d_ghz = -1.23;
  sp.e_ghz = 0.0031;
  const auto levels = energy_levels(sp, 0.0);
  REQUIRE(levels.energies_ghz.size() == 8);
  for (int pair = 0; pair < 4; ++pair)
    CHECK(std::abs(levels.energies_ghz[2 * pair + 1] -
                   levels.energies_ghz[2 * pair]) < 1e-9);
}

TEST_CASE("eigenvalues match an independently coded Jacobi diagonalizer") {
  auto sp = sample_spins();
  const auto h = build_hamiltonian(sp, 100.0);
  const auto reference = oracles::jacobi_eigenvalues(h);
  const auto levels = energy_levels(sp, 100.0);
  REQUIRE(levels.energies_ghz.size() == reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i)
    CHECK(std::abs(levels.energies_ghz[i] - reference[i]) < 1e-9);
}

TEST_CASE("level-set bookkeeping: ordering, transition count and weights") {
  auto sp = sample_spins();
  const auto levels = energy_levels(sp, 250.0);
  const int n = sp.dim();
  REQUIRE(static_cast<int>(levels.transitions.size()) == n * (n - 1) / 2);
  for (std::size_t i = 1; i < levels.energies_ghz.size(); ++i)
    CHECK(levels.energies_ghz[i] >= levels.energies_ghz[i - 1]);
  for (const auto& t : levels.transitions) {
    CHECK(t.dipole_weight >= 0.0);
    CHECK(t.frequency_ghz ==
          doctest::Approx(levels.energies_ghz[t.upper] -
                          levels.energies_ghz[t.lower])
              .epsilon(1e-12));
  }
}

TEST_CASE("ground-doublet gap is 6|D| at zero field") {
  SpinEnsembleParams sp;
  sp.d_ghz = -1.23;
  sp.e_ghz = 0.0;
  const auto levels = energy_levels(sp, 0.0);
  CHECK(levels.energies_ghz[2] - levels.energies_ghz[0] ==
        doctest::Approx(6.0 * 1.23).epsilon(1e-10));
  CHECK(qubit_gap(sp, 0.0) == doctest::Approx(7.38).epsilon(1e-10));
}

TEST_CASE("pure Zeeman ladder: equal spacing g mu_B/h per tesla") {
  SpinEnsembleParams sp;
  sp.d_ghz = 0.0;
  sp.e_ghz = 0.0;
  sp.phi_deg = 0.0;
  const auto levels = energy_levels(sp, 1000.0);
  const double expected = 2.0 * kMuBOverH_GHzPerT;  // 27.99 GHz at 1 T
  for (std::size_t i = 1; i < levels.energies_ghz.size(); ++i)
    CHECK(levels.energies_ghz[i] - levels.energies_ghz[i - 1] ==
          doctest::Approx(expected).epsilon(1e-12));
  CHECK(qubit_gap(sp, 1000.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(27.99).epsilon(1e-3));
}

TEST_CASE("Hermiticity and B-independent trace over random parameters") {
  std::uint64_t s = 7;
  for (int trial = 0; trial < 50; ++trial) {
    SpinEnsembleParams sp;
    sp.spin = 0.5 * (1 + static_cast<int>(urand(s) * 7));
    sp.d_ghz = -3.0 + 6.0 * urand(s);
    sp.e_ghz = std::abs(sp.d_ghz) / 3.0 * (2.0 * urand(s) - 1.0);
    sp.phi_deg = 360.0 * urand(s) * 0.999;
    const double b = 1000.0 * urand(s);
    const auto h = build_hamiltonian(sp, b);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

    double m2 = 0.0;
    for (int k = 0; k < sp.dim(); ++k) {
      const double m = sp.spin - k;
      m2 += m * m;
    }
    CHECK(std::abs(h.trace().real() - sp.d_ghz * m2) < 1e-9);
    CHECK(std::abs(h.trace().imag()) < 1e-12);
  }
}

TEST_CASE("phi parametrization equals an explicit field vector in the x-z plane") {
  auto sp = sample_spins();
  const double b_mt = 180.0;
  const double phi = deg_to_rad(sp.phi_deg);
  const double zeeman = sp.g * kMuBOverH_GHzPerT * (b_mt / 1000.0);
  const Eigen::MatrixXcd explicit_h =
      sp.d_ghz * (detail::spin_z(sp.spin) * detail::spin_z(sp.spin)) +
      sp.e_ghz * (detail::spin_x(sp.spin) * detail::spin_x(sp.spin) -
                  detail::spin_y(sp.spin) * detail::spin_y(sp.spin)) +
      zeeman * (std::sin(phi) * detail::spin_x(sp.spin) +
                std::cos(phi) * detail::spin_z(sp.spin));
  CHECK((build_hamiltonian(sp, b_mt) - explicit_h).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("eigenvalues depend only on the angle between field and z (E = 0)") {
  SpinEnsembleParams sp;
  sp.d_ghz = -1.23;
  sp.e_ghz = 0.0;
  sp.phi_deg = 37.0;
  const double b_mt = 220.0;
  const auto levels = energy_levels(sp, b_mt);

  // same polar angle, arbitrary azimuth: engages Sy as well
  const double phi = deg_to_rad(sp.phi_deg);
  const double az = deg_to_rad(141.0);
  const double zeeman = sp.g * kMuBOverH_GHzPerT * (b_mt / 1000.0);
  const Eigen::MatrixXcd h =
      sp.d_ghz * (detail::spin_z(sp.spin) * detail::spin_z(sp.spin)) +
      zeeman * (std::sin(phi) * std::cos(az) * detail::spin_x(sp.spin) +
                std::sin(phi) * std::sin(az) * detail::spin_y(sp.spin) +
                std::cos(phi) * detail::spin_z(sp.spin));
  const auto rotated = oracles::jacobi_eigenvalues(h);
  for (std::size_t i = 0; i < rotated.size(); ++i)
    CHECK(std::abs(levels.energies_ghz[i] - rotated[i]) < 1e-9);
}

TEST_CASE("level gaps shift quadratically in field when non-degenerate") {
  // integer spin with rhombic splitting: every zero-field level is a
  // time-reversal-even singlet, so the leading Zeeman response is quadratic
  SpinEnsembleParams sp;
  sp.spin = 1.0;
  sp.d_ghz = 5.0;
  sp.e_ghz = 0.5;
  sp.phi_deg = 30.0;
  auto gap01 = [&](double b_mt) {
    const auto levels = energy_levels(sp, b_mt);
    return levels.energies_ghz[1] - levels.energies_ghz[0];
  };
  const double d0 = gap01(0.0);
  const double d1 = gap01(2.0) - d0;
  const double d2 = gap01(4.0) - d0;
  CHECK(d2 / d1 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("delta0 override pins the zero-field gap and keeps the dispersion") {
  auto sp = sample_spins();
  sp.phi_deg = 46.0;
  const double raw0 = qubit_gap(sp, 0.0);
  const double raw_b = qubit_gap(sp, 185.0);
  sp.delta0_ghz = 22.3;
  CHECK(qubit_gap(sp, 0.0) == doctest::Approx(22.3).epsilon(1e-12));
  CHECK(qubit_gap(sp, 185.0) ==
        doctest::Approx(22.3 + (raw_b - raw0)).epsilon(1e-12));
}

TEST_CASE("validation rejects out-of-contract parameters") {
  SpinEnsembleParams sp;
  sp.e_ghz = 1.0;  // |E| > |D|/3
  CHECK_THROWS_AS(sp.validate(), ValidationError);

  sp = SpinEnsembleParams{};
  sp.spin = 60.0;
  CHECK_THROWS_AS(build_hamiltonian(sp, 0.0), ValidationError);

  sp = SpinEnsembleParams{};
  sp.spin = 0.7;  // 2S+1 not an integer
  CHECK_THROWS_AS(sp.validate(), ValidationError);

  sp = SpinEnsembleParams{};
  sp.phi_deg = 360.0;
  CHECK_THROWS_AS(sp.validate(), ValidationError);

  CHECK_THROWS_AS(build_hamiltonian(SpinEnsembleParams{}, -1.0), ValidationError);
}
