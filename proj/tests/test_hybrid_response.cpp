#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "magnonqed/constants.hpp"
#include "magnonqed/hybrid_response.hpp"
#include "magnonqed/specfit.hpp"

using namespace magnonqed;
using Cd = std::complex<double>;

namespace {

double dip_position(const CouplingParams& cp, double wm, double delta,
                    double lo, double hi) {
  double best = lo, value = 2.0;
  for (double w = lo; w <= hi; w += 2e-6) {
    const double a = std::abs(s21(w, wm, delta, cp));
    if (a < value) {
      value = a;
      best = w;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("transparent far off resonance") {
  CouplingParams cp{0.0, 50.0, 75.0, 10.0, 20.0, true};
  // detuning 100x the magnon linewidth from both resonances
  const double w = 24.5 - 100.0 * 0.125;
  CHECK(std::abs(std::abs(s21(w, 24.5, 24.6, cp)) - 1.0) < 1e-3);
}

TEST_CASE("normal-mode splitting: dips at the coupled-oscillator frequencies") {
  // small, asymmetric external rates so neither polariton goes dark
  CouplingParams cp{130.0, 1.2, 0.3, 0.2, 1.0, false};
  const double wm = 24.5;
  const double lo = dip_position(cp, wm, wm, wm - 0.3, wm - 0.01);
  const double hi = dip_position(cp, wm, wm, wm + 0.01, wm + 0.3);
  CHECK(lo == doctest::Approx(wm - 0.130).epsilon(1e-4));
  CHECK(hi == doctest::Approx(wm + 0.130).epsilon(1e-4));
}

TEST_CASE("strong-coupling split resonance fits as two Lorentzian dips") {
  CouplingParams cp{130.0, 50.0, 75.0, 10.0, 20.0, true};
  const double wm = 25.4;
  Trace trace;
  for (int j = 0; j < 600; ++j) {
    const double f = wm - 0.9 + 1.8 * j / 599.0;
    trace.f_axis_ghz.push_back(f);
    trace.values.push_back(std::abs(s21(f, wm, wm, cp)));
  }
  const auto [lo, hi] = fit_double_dip(trace);
  const double expected =
      2.0 * std::sqrt(130.0 * 130.0 - std::pow((125.0 - 30.0) / 4.0, 2)) * 1e-3;
  CHECK((hi.f_m_ghz - lo.f_m_ghz) ==
        doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("passivity over a parameter lattice") {
  double worst = 0.0;
  for (double ke : {0.0, 20.0, 80.0})
    for (double ki : {0.0, 50.0})
      for (double ge : {0.0, 10.0, 40.0})
        for (double gi : {0.0, 20.0})
          for (double g : {0.0, 60.0, 200.0})
            for (bool crosstalk : {false, true}) {
              if (ke + ki == 0.0 && ge + gi == 0.0) continue;
              CouplingParams cp{g, ke, ki, ge, gi, crosstalk};
              for (double w = 24.0; w <= 25.2; w += 0.002)
                worst = std::max(worst, std::abs(s21(w, 24.5, 24.62, cp)));
            }
  CHECK(worst <= 1.0 + 1e-9);
}

TEST_CASE("polariton branches: resonant mixing and the dispersive limit") {
  CouplingParams cp{130.0, 50.0, 75.0, 10.0, 20.0, true};
  const auto resonant = polariton_branches(24.5, 24.5, cp);
  CHECK(resonant[0].mixing_angle_xi == doctest::Approx(kPi / 2).epsilon(1e-12));
  const double c2 = std::cos(resonant[0].mixing_angle_xi / 2);
  const double s2 = std::sin(resonant[0].mixing_angle_xi / 2);
  CHECK(c2 * c2 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s2 * s2 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c2 * c2 + s2 * s2 == doctest::Approx(1.0).epsilon(1e-12));

  // far detuned: one branch purely magnonic with the kappa_e brightness share
  // (the interference correction decays linearly in G/detuning)
  CouplingParams plain = cp;
  plain.include_line_crosstalk = false;
  const auto dispersive = polariton_branches(24.5, 27.5, plain);
  CHECK(dispersive[0].mixing_angle_xi < 0.05);
  CHECK(dispersive[0].brightness ==
        doctest::Approx(50.0 / 60.0).epsilon(0.05));
  const auto far = polariton_branches(24.5, 64.5, plain);
  CHECK(far[0].brightness == doctest::Approx(50.0 / 60.0).epsilon(0.005));
  // dispersive shift G^2/delta of the magnon-like branch
  CHECK(dispersive[0].frequency_ghz ==
        doctest::Approx(24.5 - 0.13 * 0.13 / 3.0).epsilon(1e-4));
  CHECK(dispersive[0].linewidth_mhz == doctest::Approx(125.0).epsilon(1e-2));
  CHECK(dispersive[1].linewidth_mhz == doctest::Approx(30.0).epsilon(1e-2));
}

TEST_CASE("brightness of the two branches always sums to one") {
  CouplingParams cp{90.0, 35.0, 55.0, 12.0, 18.0, true};
  for (double delta = -0.8; delta <= 0.8; delta += 0.05) {
    const auto branches = polariton_branches(24.5, 24.5 + delta, cp);
    CHECK(branches[0].brightness + branches[1].brightness ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(branches[0].brightness >= 0.0);
    CHECK(branches[0].brightness <= 1.0);
  }
}

TEST_CASE("lossless polaritons match the two-level avoided-crossing formula") {
  CouplingParams cp{130.0, 0.0, 0.0, 0.0, 0.0, true};
  for (double delta : {-0.4, -0.1, 0.0, 0.2, 0.5}) {
    const double wm = 24.5, ds = wm + delta;
    const auto branches = polariton_branches(wm, ds, cp);
    const double mean = 0.5 * (wm + ds);
    const double rad = std::sqrt(0.25 * delta * delta + 0.13 * 0.13);
    CHECK(branches[0].frequency_ghz == doctest::Approx(mean - rad).epsilon(1e-14));
    CHECK(branches[1].frequency_ghz == doctest::Approx(mean + rad).epsilon(1e-14));
    CHECK(std::abs(branches[0].linewidth_mhz) < 1e-12);
  }
}

TEST_CASE("branch frequencies and widths match the |S21| dips when resolved") {
  CouplingParams cp{130.0, 20.0, 12.0, 5.0, 8.0, true};
  const double wm = 24.5;
  for (double delta : {0.0, 0.065}) {
    const auto branches = polariton_branches(wm, wm + delta, cp);
    for (const auto& branch : branches) {
      Trace trace;
      const double half = 4.0 * branch.linewidth_mhz * 1e-3;
      for (int j = 0; j < 800; ++j) {
        const double f = branch.frequency_ghz - half + 2 * half * j / 799.0;
        trace.f_axis_ghz.push_back(f);
        trace.values.push_back(std::abs(s21(f, wm, wm + delta, cp)));
      }
      const auto fit = fit_dip(trace);
      CHECK(std::abs(fit.f_m_ghz - branch.frequency_ghz) * 1e3 <
            0.05 * branch.linewidth_mhz);
      // the amplitude-Lorentzian width shrink depends on dip depth; allow the
      // known factor range plus the 5% tolerance
      const double shrink = fit.w_m_mhz / branch.linewidth_mhz;
      CHECK(shrink > 0.75);
      CHECK(shrink < 1.05);
    }
  }
}

TEST_CASE("singular lossless response at a real pole raises") {
  CouplingParams cp{0.0, 0.0, 0.0, 0.0, 0.0, false};
  CHECK_THROWS_AS(s21(24.5, 24.5, 25.0, cp), PoleError);
}

TEST_CASE("chiral projection of circular and linear drives") {
  SpinEnsembleParams spins;
  spins.phi_deg = 0.0;  // easy axis along the field
  const FieldConfig field{0.1, 0.0};  // field along b

  // right-handed orbit about b: p ~ c + i a (exp(-iwt) convention)
  const Eigen::Vector3cd rh(Cd(0.0, 1.0) / std::sqrt(2.0), 0.0,
                            Cd(1.0, 0.0) / std::sqrt(2.0));
  CHECK(corotating_fraction(rh, spins, field) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chiral_projection(rh, spins, field) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  const Eigen::Vector3cd lh(Cd(0.0, -1.0) / std::sqrt(2.0), 0.0,
                            Cd(1.0, 0.0) / std::sqrt(2.0));
  CHECK(corotating_fraction(lh, spins, field) < 1e-12);

  const Eigen::Vector3cd linear(0.0, 0.0, 1.0);  // hard-axis linear drive
  CHECK(corotating_fraction(linear, spins, field) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(chiral_projection(linear, spins, field) ==
        doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(chiral_projection(Eigen::Vector3cd::Zero(), spins, field),
                  DegenerateModeError);
}

TEST_CASE("chiral projection is bounded and continuous in theta") {
  SpinEnsembleParams spins;
  spins.phi_deg = 54.0;
  const Eigen::Vector3cd mode(Cd(0.0, -0.35), 0.0, Cd(0.82, 0.0));
  double previous = -1.0;
  for (double theta = 0.0; theta <= 90.0; theta += 1.0) {
    const double value =
        corotating_fraction(mode, spins, FieldConfig{0.12, theta});
    CHECK(value >= 0.0);
    CHECK(value <= 1.0 + 1e-12);
    if (previous >= 0.0) CHECK(std::abs(value - previous) < 0.05);
    previous = value;
  }
}

TEST_CASE("suppressed coupling in the chiral geometry") {
  // field along the easy axis, spin axis at the rotated-crystal angle: the
  // left-handed acoustic mode couples at roughly half strength
  MagnetParams mag;
  SpinEnsembleParams spins;
  spins.phi_deg = 144.0;
  const FieldConfig field{0.091, 0.0};
  const auto modes = linearized_modes(mag, field, equilibrium(mag, field));
  REQUIRE(modes[0].chirality == Chirality::LH);
  const double factor =
      chiral_projection(mode_rf_field(modes[0]), spins, field);
  CHECK(factor > 0.4);
  CHECK(factor < 0.6);
}

TEST_CASE("two identical spin domains reproduce the single-domain response") {
  MagnetParams mag;
  SpinEnsembleParams sp;
  sp.phi_deg = 46.0;
  sp.delta0_ghz = 22.3;
  CouplingParams cp{130.0, 50.0, 75.0, 10.0, 20.0, true};
  const FieldSweep sweep{170.0, 200.0, 7, 90.0};
  const FrequencyAxis fax{24.8, 26.0, 101};
  const auto single = spectrum_map(mag, {sp}, sweep, fax, cp, {});
  const auto doubled = spectrum_map(mag, {sp, sp}, sweep, fax, cp, {});
  CHECK((single.s21 - doubled.s21).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("spectrum map shape, axes and determinism across jobs") {
  MagnetParams mag;
  SpinEnsembleParams sp;
  sp.phi_deg = 46.0;
  sp.delta0_ghz = 22.3;
  CouplingParams cp{130.0, 50.0, 75.0, 10.0, 20.0, true};
  const FieldSweep sweep{150.0, 220.0, 24, 90.0};
  const FrequencyAxis fax{24.5, 26.3, 60};
  SpectrumOptions serial, parallel;
  parallel.jobs = 4;
  const auto a = spectrum_map(mag, {sp}, sweep, fax, cp, serial);
  const auto b = spectrum_map(mag, {sp}, sweep, fax, cp, parallel);
  a.validate();
  REQUIRE(a.b0_axis_mt.size() == 24);
  REQUIRE(a.f_axis_ghz.size() == 60);
  CHECK(a.b0_axis_mt.front() == doctest::Approx(150.0));
  CHECK(a.b0_axis_mt.back() == doctest::Approx(220.0));
  CHECK((a.s21 - b.s21).cwiseAbs().maxCoeff() == 0.0);  // bit identical
  CHECK(!a.metadata.empty());
}

TEST_CASE("stacking ensemble produces a multi-line spectrum map") {
  MagnetParams mag;
  SpinEnsembleParams sp;
  sp.phi_deg = 46.0;
  sp.delta0_ghz = 22.3;
  CouplingParams cp{130.0, 50.0, 75.0, 10.0, 20.0, true};
  SpectrumOptions options;
  StackingConfig stack;
  stack.n_layers = 12;
  stack.fault_probability = 0.15;
  stack.seed = 11;
  options.stacking = stack;
  const auto map = spectrum_map(mag, {sp}, FieldSweep{150.0, 160.0, 3, 90.0},
                                FrequencyAxis{20.0, 40.0, 900}, cp, options);
  // count distinct dips in the first trace
  int dips = 0;
  for (std::size_t j = 1; j + 1 < map.f_axis_ghz.size(); ++j) {
    const double y = std::abs(map.s21(0, j));
    if (y < std::abs(map.s21(0, j - 1)) && y <= std::abs(map.s21(0, j + 1)) &&
        y < 0.98)
      ++dips;
  }
  CHECK(dips >= 2);
}

TEST_CASE("a stacking ensemble yields several spin-line crossings") {
  MagnetParams mag;
  mag.g = 2.007;
  SpinEnsembleParams sp;
  sp.phi_deg = 46.0;
  sp.e_ghz = 0.0031;
  sp.delta0_ghz = 22.3;
  StackingConfig cfg;
  cfg.n_layers = 14;
  cfg.fault_probability = 0.15;
  cfg.seed = 5;

  // distance from the spin transition to the nearest visible chain line
  auto nearest_line = [&](double b_mt) {
    const FieldConfig fc{b_mt / 1000.0, 90.0};
    const auto stack = stacking_spectrum(mag, fc, cfg);
    const double delta = qubit_gap(sp, b_mt);
    double best = 1e18;
    for (const auto& mode : stack)
      if (mode.weight > 0.02)
        best = std::min(best, std::abs(delta - mode.frequency_ghz));
    return best;
  };

  std::vector<double> crossings;
  double prev2 = nearest_line(120.0), prev1 = nearest_line(122.0);
  for (double b = 124.0; b <= 330.0; b += 2.0) {
    const double current = nearest_line(b);
    if (prev1 < prev2 && prev1 <= current && prev1 < 0.06)
      crossings.push_back(b - 2.0);
    prev2 = prev1;
    prev1 = current;
  }
  REQUIRE(crossings.size() >= 2);
  CHECK(crossings.back() - crossings.front() > 10.0);
}

TEST_CASE("saturating drive closes the anticrossing in the forward model") {
  MagnetParams mag;
  mag.g = 2.007;
  SpinEnsembleParams sp;
  sp.phi_deg = 46.0;
  sp.e_ghz = 0.0031;
  sp.delta0_ghz = 22.3;
  CouplingParams cp{130.0, 50.0, 75.0, 10.0, 20.0, true};
  SaturationParams sat;
  sat.alpha_mhz2_per_mw = 2.0;
  sat.gamma_par_mhz = 5.0;
  sat.gamma_e_mhz = cp.gamma_e_mhz;
  sat.gamma_i_mhz = cp.gamma_i_mhz;

  const FieldSweep sweep{160.0, 210.0, 40, 90.0};
  const FrequencyAxis fax{25.0, 25.9, 220};
  SpectrumOptions low, high;
  low.saturation = sat;
  low.drive_power_mw = dbm_to_mw(-30.0);
  high.saturation = sat;
  high.drive_power_mw = dbm_to_mw(25.0);
  const auto map_low = spectrum_map(mag, {sp}, sweep, fax, cp, low);
  const auto map_high = spectrum_map(mag, {sp}, sweep, fax, cp, high);

  auto min_separation = [](const SpectrumMap& map) {
    double best = 1e9;
    for (Eigen::Index i = 0; i < map.s21.rows(); ++i) {
      Trace tr;
      tr.f_axis_ghz = map.f_axis_ghz;
      for (Eigen::Index j = 0; j < map.s21.cols(); ++j)
        tr.values.push_back(std::abs(map.s21(i, j)));
      try {
        const auto [lo2, hi2] = fit_double_dip(tr);
        best = std::min(best, hi2.f_m_ghz - lo2.f_m_ghz);
      } catch (const Error&) {
      }
    }
    return best;
  };
  const double split_low = min_separation(map_low);
  const double split_high = min_separation(map_high);
  CHECK(split_low > 0.2);        // open anticrossing at low power
  CHECK(split_high < 0.6 * split_low);  // strongly reduced when saturated
}
