#include "magnonqed/hybrid_response.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "json.hpp"
#include "magnonqed/constants.hpp"

namespace magnonqed {

using std::complex;
using Cd = complex<double>;

void CouplingParams::validate() const {
  if (g_mhz < 0.0) throw ValidationError("G_MHz: must be non-negative");
  if (kappa_e_mhz < 0.0) throw ValidationError("kappa_e_MHz: must be non-negative");
  if (kappa_i_mhz < 0.0) throw ValidationError("kappa_i_MHz: must be non-negative");
  if (gamma_e_mhz < 0.0) throw ValidationError("gamma_e_MHz: must be non-negative");
  if (gamma_i_mhz < 0.0) throw ValidationError("gamma_i_MHz: must be non-negative");
}

void SpectrumMap::validate() const {
  auto strictly_monotone = [](const std::vector<double>& axis) {
    for (std::size_t i = 1; i < axis.size(); ++i)
      if (!(axis[i] > axis[i - 1])) return false;
    return true;
  };
  if (b0_axis_mt.size() < 1 || f_axis_ghz.size() < 1)
    throw ValidationError("map: axes must be non-empty");
  if (!strictly_monotone(b0_axis_mt))
    throw ValidationError("b0_axis: must be strictly monotone");
  if (!strictly_monotone(f_axis_ghz))
    throw ValidationError("f_axis: must be strictly monotone");
  if (s21.rows() != static_cast<Eigen::Index>(b0_axis_mt.size()) ||
      s21.cols() != static_cast<Eigen::Index>(f_axis_ghz.size()))
    throw ValidationError("map: matrix dimensions must match the axes");
}

void FieldSweep::validate() const {
  if (steps < 2) throw ValidationError("field_sweep.steps: must be >= 2");
  if (!(stop_mt > start_mt))
    throw ValidationError("field_sweep: stop_mT must exceed start_mT");
  if (start_mt < 0.0)
    throw ValidationError("field_sweep.start_mT: must be non-negative");
  FieldConfig{stop_mt / 1000.0, theta_deg}.validate();
}

void FrequencyAxis::validate() const {
  if (steps < 2) throw ValidationError("f_axis.steps: must be >= 2");
  if (!(stop_ghz > start_ghz))
    throw ValidationError("f_axis: stop_GHz must exceed start_GHz");
}

namespace {

Cd crosstalk_term(double rate_e1_ghz, double rate_e2_ghz, bool enabled) {
  if (!enabled) return Cd(0.0, 0.0);
  return Cd(0.0, 0.5 * std::sqrt(rate_e1_ghz * rate_e2_ghz));
}

}  // namespace

Cd s21(double omega_ghz, double magnon_freq_ghz, double spin_freq_ghz,
       const CouplingParams& cp) {
  cp.validate();
  const double ke = cp.kappa_e_mhz * 1e-3, ki = cp.kappa_i_mhz * 1e-3;
  const double ge = cp.gamma_e_mhz * 1e-3, gi = cp.gamma_i_mhz * 1e-3;
  const double g = cp.g_mhz * 1e-3;

  const Cd chi = crosstalk_term(ke, ge, cp.include_line_crosstalk);
  const Cd m00(omega_ghz - magnon_freq_ghz, 0.5 * (ke + ki));
  const Cd m11(omega_ghz - spin_freq_ghz, 0.5 * (ge + gi));
  const Cd m01 = g + chi;

  const Cd det = m00 * m11 - m01 * m01;
  if (std::abs(det) < 1e-300)
    throw PoleError("response matrix singular at a real pole");

  const double v0 = std::sqrt(0.5 * ke), v1 = std::sqrt(0.5 * ge);
  const Cd quad = (v0 * v0 * m11 - 2.0 * v0 * v1 * m01 + v1 * v1 * m00) / det;
  return 1.0 - Cd(0.0, 1.0) * quad;
}

std::array<PolaritonBranch, 2> polariton_branches(double magnon_freq_ghz,
                                                  double spin_freq_ghz,
                                                  const CouplingParams& cp) {
  cp.validate();
  const double ke = cp.kappa_e_mhz * 1e-3, ge = cp.gamma_e_mhz * 1e-3;
  const double g = cp.g_mhz * 1e-3;
  const Cd chi = crosstalk_term(ke, ge, cp.include_line_crosstalk);

  const Cd d1(magnon_freq_ghz, -0.5 * cp.kappa_mhz() * 1e-3);
  const Cd d2(spin_freq_ghz, -0.5 * cp.gamma_mhz() * 1e-3);
  const Cd coupling = g + chi;

  const Cd mean = 0.5 * (d1 + d2);
  const Cd half_det = 0.5 * (d1 - d2);
  const Cd rad = std::sqrt(half_det * half_det + coupling * coupling);
  const std::array<Cd, 2> lambdas{mean - rad, mean + rad};

  const double xi = std::atan2(g, std::abs(spin_freq_ghz - magnon_freq_ghz));

  std::array<PolaritonBranch, 2> out;
  std::array<double, 2> raw{};
  std::array<Eigen::Vector2cd, 2> vecs;
  for (int k = 0; k < 2; ++k) {
    const Cd lambda = lambdas[k];
    Eigen::Vector2cd v;
    if (std::abs(lambda - d2) >= std::abs(lambda - d1))
      v << coupling, lambda - d1;
    else
      v << lambda - d2, coupling;
    if (v.norm() < 1e-300) v << (k == 0 ? 1.0 : 0.0), (k == 0 ? 0.0 : 1.0);
    v.normalize();
    vecs[k] = v;
    raw[k] = std::norm(std::sqrt(ke) * v(0) + std::sqrt(ge) * v(1));
    out[k].frequency_ghz = lambda.real();
    out[k].linewidth_mhz = -2.0 * lambda.imag() * 1e3;
    out[k].mixing_angle_xi = xi;
  }
  const double total = raw[0] + raw[1];
  for (int k = 0; k < 2; ++k)
    out[k].brightness = (total > 1e-300) ? raw[k] / total : 0.5;
  if (out[0].frequency_ghz > out[1].frequency_ghz) std::swap(out[0], out[1]);
  return out;
}

double corotating_fraction(const Eigen::Vector3cd& mode_field,
                           const SpinEnsembleParams& spins,
                           const FieldConfig& field) {
  spins.validate();
  field.validate();
  const double n = mode_field.norm();
  if (n < 1e-12)
    throw DegenerateModeError("chiral projection of a vanishing mode field");
  const Eigen::Vector3cd p = mode_field / n;

  // Spin easy axis: the field direction rotated by phi about the c-axis.
  // The co-rotating axis is the orientation with non-negative projection on
  // the field (the transition raises the spin projection along it).
  const Eigen::Vector3d n_hat = field.direction();
  const double phi = deg_to_rad(spins.phi_deg);
  Eigen::Vector3d z_s(n_hat.x() * std::cos(phi) - n_hat.y() * std::sin(phi),
                      n_hat.x() * std::sin(phi) + n_hat.y() * std::cos(phi),
                      n_hat.z());
  if (z_s.dot(n_hat) < 0.0) z_s = -z_s;

  Eigen::Vector3d x_s = axis_c() - axis_c().dot(z_s) * z_s;
  if (x_s.norm() < 1e-9) x_s = axis_a() - axis_a().dot(z_s) * z_s;
  x_s.normalize();
  const Eigen::Vector3d y_s = z_s.cross(x_s);

  // co-rotating (right-handed about z_s) circular amplitude
  const Cd cx = x_s.x() * p.x() + x_s.y() * p.y() + x_s.z() * p.z();
  const Cd cy = y_s.x() * p.x() + y_s.y() * p.y() + y_s.z() * p.z();
  return std::abs(cx - Cd(0.0, 1.0) * cy) / std::sqrt(2.0);
}

double chiral_projection(const Eigen::Vector3cd& mode_field,
                         const SpinEnsembleParams& spins,
                         const FieldConfig& field) {
  return std::sqrt(2.0) * corotating_fraction(mode_field, spins, field);
}

namespace {

// One side-coupled mode of the multimode response.
struct ResponseMode {
  double freq_ghz = 0.0;
  double rate_e_ghz = 0.0;
  double rate_total_ghz = 0.0;
};

// S21 = 1 - i v^T M(w)^-1 v over the frequency axis, with block structure:
// zero direct magnon-magnon coupling, per-pair line crosstalk.
void response_row(const std::vector<ResponseMode>& magnons,
                  const std::vector<ResponseMode>& spin_modes,
                  const Eigen::MatrixXd& g_ghz,  // magnons x spins
                  bool crosstalk, const std::vector<double>& f_axis,
                  Eigen::MatrixXcd& map, Eigen::Index row) {
  const int nm = static_cast<int>(magnons.size());
  const int ns = static_cast<int>(spin_modes.size());
  const int n = nm + ns;

  std::vector<ResponseMode> all;
  all.reserve(n);
  all.insert(all.end(), magnons.begin(), magnons.end());
  all.insert(all.end(), spin_modes.begin(), spin_modes.end());

  Eigen::MatrixXcd base = Eigen::MatrixXcd::Zero(n, n);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) {
    base(i, i) = Cd(-all[i].freq_ghz, 0.5 * all[i].rate_total_ghz);
    v(i) = std::sqrt(0.5 * all[i].rate_e_ghz);
    for (int j = i + 1; j < n; ++j) {
      Cd c = crosstalk_term(all[i].rate_e_ghz, all[j].rate_e_ghz, crosstalk);
      if (i < nm && j >= nm) c += g_ghz(i, j - nm);
      base(i, j) = c;
      base(j, i) = c;
    }
  }

  for (std::size_t fi = 0; fi < f_axis.size(); ++fi) {
    Eigen::MatrixXcd m = base;
    m.diagonal().array() += f_axis[fi];
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    const Cd det = lu.determinant();
    if (std::abs(det) < 1e-300)
      throw PoleError("response matrix singular at a real pole");
    const Eigen::VectorXcd x = lu.solve(v);
    map(row, static_cast<Eigen::Index>(fi)) =
        1.0 - Cd(0.0, 1.0) * (v.transpose() * x)(0, 0);
  }
}

}  // namespace

SpectrumMap spectrum_map(const MagnetParams& mag,
                         const std::vector<SpinEnsembleParams>& spins,
                         const FieldSweep& sweep, const FrequencyAxis& f_axis,
                         const CouplingParams& cp,
                         const SpectrumOptions& options) {
  mag.validate();
  if (spins.empty()) throw ValidationError("spins: at least one domain required");
  for (const auto& sp : spins) sp.validate();
  sweep.validate();
  f_axis.validate();
  cp.validate();
  if (options.stacking) options.stacking->validate();

  SpectrumMap out;
  out.b0_axis_mt.resize(sweep.steps);
  out.f_axis_ghz.resize(f_axis.steps);
  for (int i = 0; i < sweep.steps; ++i)
    out.b0_axis_mt[i] = sweep.start_mt + (sweep.stop_mt - sweep.start_mt) * i /
                                             (sweep.steps - 1);
  for (int i = 0; i < f_axis.steps; ++i)
    out.f_axis_ghz[i] = f_axis.start_ghz +
                        (f_axis.stop_ghz - f_axis.start_ghz) * i /
                            (f_axis.steps - 1);
  out.s21.resize(sweep.steps, f_axis.steps);

  // drive-power renormalization of the collective coupling
  double sat_scale = 1.0;
  if (options.saturation && options.drive_power_mw) {
    sat_scale = std::sqrt(
        equilibrium_fraction(*options.drive_power_mw, *options.saturation));
  }

  const int n_dom = static_cast<int>(spins.size());
  const double ke = cp.kappa_e_mhz * 1e-3, ki = cp.kappa_i_mhz * 1e-3;
  const double ge = cp.gamma_e_mhz * 1e-3, gi = cp.gamma_i_mhz * 1e-3;
  const double g_base = cp.g_mhz * 1e-3 * sat_scale;

  auto compute_row = [&](int i) {
    const FieldConfig fc{out.b0_axis_mt[i] / 1000.0, sweep.theta_deg};

    // magnon ensemble at this field
    std::vector<ResponseMode> magnons;
    Eigen::Vector3cd acoustic_field = Eigen::Vector3cd::Zero();
    bool have_field = false;
    {
      const auto eq = equilibrium(mag, fc);
      const auto modes = linearized_modes(mag, fc, eq);
      for (const auto& mode : modes) {
        if (mode.branch == BranchLabel::Acoustic && mode.net_orbit.norm() > 1e-12) {
          acoustic_field = mode_rf_field(mode);
          have_field = true;
        }
      }
      if (options.stacking) {
        const auto stack = stacking_spectrum(mag, fc, *options.stacking,
                                             static_cast<std::uint64_t>(i));
        for (const auto& sm : stack) {
          if (sm.weight < 1e-6) continue;
          magnons.push_back({sm.frequency_ghz, ke * sm.weight,
                             ke * sm.weight + ki});
        }
      } else {
        for (const auto& mode : modes)
          if (mode.branch == BranchLabel::Acoustic)
            magnons.push_back({mode.frequency_ghz, ke, ke + ki});
      }
    }

    // spin domains
    std::vector<ResponseMode> spin_modes;
    spin_modes.reserve(n_dom);
    for (const auto& sp : spins) {
      const double delta = qubit_gap(sp, out.b0_axis_mt[i]);
      spin_modes.push_back({delta, ge / n_dom, ge / n_dom + gi});
    }

    // coupling matrix; chiral scaling uses the acoustic-mode polarization
    Eigen::MatrixXd g_mat(magnons.size(), spin_modes.size());
    for (std::size_t mi = 0; mi < magnons.size(); ++mi) {
      for (int d = 0; d < n_dom; ++d) {
        double g_md = g_base / std::sqrt(static_cast<double>(n_dom));
        if (options.chiral_scaling && have_field)
          g_md *= chiral_projection(acoustic_field, spins[d], fc);
        g_mat(static_cast<Eigen::Index>(mi), d) = g_md;
      }
    }

    response_row(magnons, spin_modes, g_mat, cp.include_line_crosstalk,
                 out.f_axis_ghz, out.s21, i);
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (int i = 0; i < sweep.steps; ++i) compute_row(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (int t = 0; t < jobs; ++t) {
      pool.emplace_back([&, t]() {
        try {
          for (int i = t; i < sweep.steps; i += jobs) compute_row(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  nlohmann::json meta;
  meta["magnet"] = {{"H_E_T", mag.h_e_t},
                    {"H_a_T", mag.h_a_t},
                    {"H_c_T", mag.h_c_t},
                    {"g", mag.g}};
  meta["coupling"] = {{"G_MHz", cp.g_mhz},
                      {"kappa_e_MHz", cp.kappa_e_mhz},
                      {"kappa_i_MHz", cp.kappa_i_mhz},
                      {"gamma_e_MHz", cp.gamma_e_mhz},
                      {"gamma_i_MHz", cp.gamma_i_mhz},
                      {"include_line_crosstalk", cp.include_line_crosstalk}};
  meta["theta_deg"] = sweep.theta_deg;
  meta["chiral_scaling"] = options.chiral_scaling;
  meta["n_domains"] = n_dom;
  if (options.drive_power_mw) meta["drive_power_mW"] = *options.drive_power_mw;
  out.metadata = meta.dump();
  return out;
}

}  // namespace magnonqed
