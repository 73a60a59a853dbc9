#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "magnonqed/constants.hpp"
#include "magnonqed/saturation.hpp"
#include "oracles.hpp"

using namespace magnonqed;

namespace {

SaturationParams sample_params() {
  SaturationParams sp;
  sp.alpha_mhz2_per_mw = 2.0;
  sp.gamma_par_mhz = 5.0;
  sp.gamma_e_mhz = 10.0;
  sp.gamma_i_mhz = 20.0;
  return sp;
}

}  // namespace

TEST_CASE("zero-power visibility is the external fraction gamma_e/gamma") {
  const auto sp = sample_params();
  CHECK(visibility(0.0, sp) == doctest::Approx(10.0 / 30.0).epsilon(1e-15));
  CHECK(equilibrium_fraction(0.0, sp) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("half saturation at 4 Lambda^2 = gamma_i gamma_par") {
  const auto sp = sample_params();
  const double p_half =
      sp.gamma_i_mhz * sp.gamma_par_mhz / (4.0 * sp.alpha_mhz2_per_mw);
  CHECK(visibility(p_half, sp) ==
        doctest::Approx(0.5 * 10.0 / 30.0).epsilon(1e-15));
  CHECK(equilibrium_fraction(p_half, sp) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("visibility and equilibrium fraction decrease monotonically") {
  const auto sp = sample_params();
  double prev_v = 1e9, prev_f = 1e9;
  for (double dbm = -40.0; dbm <= 30.0; dbm += 0.5) {
    const double p = dbm_to_mw(dbm);
    const double v = visibility(p, sp);
    const double f = equilibrium_fraction(p, sp);
    CHECK(v <= prev_v + 1e-15);
    CHECK(f <= prev_f + 1e-15);
    prev_v = v;
    prev_f = f;
  }
  CHECK(equilibrium_fraction(1e12, sp) < 1e-9);  // fully saturated limit
}

TEST_CASE("scaling: doubling alpha and halving power leaves visibility fixed") {
  auto sp = sample_params();
  const double v1 = visibility(0.8, sp);
  sp.alpha_mhz2_per_mw *= 2.0;
  CHECK(visibility(0.4, sp) == doctest::Approx(v1).epsilon(1e-15));
}

TEST_CASE("alpha recovered from a synthetic visibility curve") {
  const auto truth = sample_params();
  std::vector<double> powers, values;
  for (double dbm = -30.0; dbm <= 20.0; dbm += 1.0) {
    powers.push_back(dbm_to_mw(dbm));
    values.push_back(visibility(powers.back(), truth));
  }
  // least-squares in alpha by golden-section on the scan interval
  auto cost = [&](double alpha) {
    SaturationParams sp = truth;
    sp.alpha_mhz2_per_mw = alpha;
    double acc = 0.0;
    for (std::size_t i = 0; i < powers.size(); ++i) {
      const double r = visibility(powers[i], sp) - values[i];
      acc += r * r;
    }
    return acc;
  };
  double lo = 0.2, hi = 20.0;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200; ++it) {
    const double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    (cost(a) < cost(b) ? hi : lo) = (cost(a) < cost(b)) ? b : a;
  }
  const double alpha_fit = 0.5 * (lo + hi);
  CHECK(std::abs(alpha_fit - truth.alpha_mhz2_per_mw) <
        0.02 * truth.alpha_mhz2_per_mw);
}

TEST_CASE("effective coupling endpoints and monotonicity") {
  CHECK(effective_coupling(130.0, 1.0) == doctest::Approx(130.0));
  CHECK(effective_coupling(130.0, 0.0) == doctest::Approx(0.0));
  CHECK(effective_coupling(130.0, (125.0 / 130.0) * (125.0 / 130.0)) ==
        doctest::Approx(125.0).epsilon(1e-12));
  double prev = -1.0;
  for (double n = 0.0; n <= 1.0; n += 0.05) {
    const double g = effective_coupling(90.0, n);
    CHECK(g >= prev);
    prev = g;
  }
  CHECK_THROWS_AS(effective_coupling(10.0, 1.5), ValidationError);
}

TEST_CASE("threshold power closed form against a bisection oracle") {
  const auto sp = sample_params();
  const double g = 130.0, kappa = 125.0, gamma = 30.0;
  const double closed = threshold_power(g, kappa, gamma, sp);
  const double limit = std::max(kappa, gamma);
  const auto excess = [&](double p) {
    return effective_coupling(g, equilibrium_fraction(p, sp)) - limit;
  };
  const double bisected = oracles::bisect(excess, 0.0, 1e6, 1e-12);
  CHECK(std::abs(closed - bisected) < 1e-9 * std::max(1.0, closed));
}

TEST_CASE("alpha calibrated to a 1 mW threshold round-trips") {
  auto sp = sample_params();
  sp.alpha_mhz2_per_mw =
      calibrate_alpha(130.0, 125.0, 30.0, sp.gamma_i_mhz, sp.gamma_par_mhz, 1.0);
  CHECK(std::abs(threshold_power(130.0, 125.0, 30.0, sp) - 1.0) < 1e-6);
  CHECK(dbm_to_mw(0.0) == doctest::Approx(1.0));  // 0 dBm = 1 mW
  // at the threshold power the surviving fraction sits at the boundary value
  CHECK(equilibrium_fraction(1.0, sp) ==
        doctest::Approx((125.0 / 130.0) * (125.0 / 130.0)).epsilon(1e-12));
}

TEST_CASE("limiting and error cases of the threshold") {
  auto sp = sample_params();
  CHECK(std::isinf(threshold_power(130.0, 0.0, 0.0, sp)));  // always strong
  CHECK_THROWS_AS(threshold_power(50.0, 125.0, 30.0, sp), NeverStrongError);
  sp.gamma_e_mhz = 0.0;
  sp.gamma_i_mhz = 0.0;
  CHECK_THROWS_AS(visibility(0.1, sp), ValidationError);  // gamma = 0

  // vanishing relaxation product returns the saturated limit directly
  auto sp2 = sample_params();
  sp2.gamma_par_mhz = 0.0;
  CHECK(visibility(0.5, sp2) == doctest::Approx(0.0));
  CHECK(visibility(0.0, sp2) == doctest::Approx(10.0 / 30.0));
}
