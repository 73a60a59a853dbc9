"""Smoke tests for the python bindings: one pass over every subsystem."""

import math

import pytest

import magnonqed as mq


def test_spin_levels_roundtrip():
    sp = mq.SpinEnsembleParams()
    sp.d_ghz = -1.23
    sp.e_ghz = 0.0
    levels = mq.energy_levels(sp, 0.0)
    assert len(levels.energies_ghz) == 8
    gap = levels.energies_ghz[2] - levels.energies_ghz[0]
    assert gap == pytest.approx(7.38, abs=1e-9)
    assert mq.qubit_gap(sp, 0.0) == pytest.approx(7.38, abs=1e-9)

    sp.delta0_ghz = 22.3
    assert mq.qubit_gap(sp, 0.0) == pytest.approx(22.3, abs=1e-12)

    h = mq.build_hamiltonian(sp, 150.0)
    assert h.shape == (8, 8)
    assert abs(h - h.conj().T).max() < 1e-12


def test_validation_maps_to_python_exception():
    sp = mq.SpinEnsembleParams()
    sp.e_ghz = 5.0  # violates |E| <= |D|/3
    with pytest.raises(ValueError):
        sp.validate()


def test_afm_equilibrium_and_modes():
    mag = mq.MagnetParams()
    field = mq.FieldConfig(0.0, 0.0)
    eq = mq.equilibrium(mag, field)
    assert eq.m1[1] == pytest.approx(1.0, abs=1e-9)
    modes = mq.linearized_modes(mag, field, eq)
    assert len(modes) == 2
    freqs = sorted(m.frequency_ghz for m in modes)
    assert freqs[0] == pytest.approx(25.03, abs=0.01)
    assert freqs[1] == pytest.approx(34.70, abs=0.01)

    acoustic = next(m for m in modes if m.branch == mq.BranchLabel.Acoustic)
    rf = mq.mode_rf_field(acoustic)
    assert abs(rf[2]) > abs(rf[0])


def test_stacking_determinism():
    mag = mq.MagnetParams()
    field = mq.FieldConfig(0.15, 90.0)
    cfg = mq.StackingConfig()
    cfg.n_layers = 8
    cfg.fault_probability = 0.25
    cfg.seed = 3
    a = mq.stacking_spectrum(mag, field, cfg, 1)
    b = mq.stacking_spectrum(mag, field, cfg, 1)
    assert [m.frequency_ghz for m in a] == [m.frequency_ghz for m in b]
    assert sum(m.weight for m in a) == pytest.approx(1.0)


def test_s21_and_polaritons():
    cp = mq.CouplingParams()
    value = mq.s21(20.0, 25.0, 25.1, cp)
    assert abs(value - 1.0) < 1e-2  # far off resonance

    branches = mq.polariton_branches(25.0, 25.0, cp)
    assert branches[0].brightness + branches[1].brightness == pytest.approx(1.0)
    assert branches[0].mixing_angle_xi == pytest.approx(math.pi / 2)
    splitting = branches[1].frequency_ghz - branches[0].frequency_ghz
    assert splitting == pytest.approx(0.26, rel=0.05)


def test_saturation_formulas():
    sp = mq.SaturationParams()
    sp.alpha_mhz2_per_mw = 2.0
    sp.gamma_par_mhz = 5.0
    sp.gamma_e_mhz = 10.0
    sp.gamma_i_mhz = 20.0
    assert mq.visibility(0.0, sp) == pytest.approx(1.0 / 3.0)
    assert mq.equilibrium_fraction(1e9, sp) < 1e-6
    assert mq.effective_coupling(130.0, 0.25) == pytest.approx(65.0)
    alpha = mq.calibrate_alpha(130.0, 125.0, 30.0, 20.0, 5.0, 1.0)
    sp.alpha_mhz2_per_mw = alpha
    assert mq.threshold_power(130.0, 125.0, 30.0, sp) == pytest.approx(1.0)


def test_forward_map_and_extraction():
    mag = mq.MagnetParams()
    mag.g = 2.007
    sp = mq.SpinEnsembleParams()
    sp.phi_deg = 46.0
    sp.e_ghz = 0.0031
    sp.delta0_ghz = 22.3
    cp = mq.CouplingParams()  # G = 130, kappa = 125, gamma = 30

    sweep = mq.FieldSweep(130.0, 240.0, 120, 90.0)
    f_axis = mq.FrequencyAxis(23.8, 26.9, 320)
    m = mq.spectrum_map(mag, [sp], sweep, f_axis, cp)
    assert m.s21.shape == (120, 320)
    assert max(abs(m.s21.flatten())) <= 1.0 + 1e-9

    extract = mq.extract_coupling(m, (130.0, 240.0))
    assert extract.g_mhz == pytest.approx(130.0, rel=0.05)
    assert extract.cooperativity == pytest.approx(4.5, rel=0.25)
    assert 175.0 < extract.crossing_field_mt < 195.0


def test_trace_fitting():
    trace = mq.Trace()
    fm, w, depth = 24.5, 0.1, 0.4
    q = 0.25 * w * w
    axis = [24.0 + 1.0 * j / 299.0 for j in range(300)]
    trace.f_axis_ghz = axis
    trace.values = [1.0 - depth * q / ((f - fm) ** 2 + q) for f in axis]
    fit = mq.fit_dip(trace)
    assert fit.f_m_ghz == pytest.approx(fm, abs=1e-4)
    assert fit.w_m_mhz == pytest.approx(100.0, rel=0.01)


def test_map_file_roundtrip(tmp_path):
    mag = mq.MagnetParams()
    sp = mq.SpinEnsembleParams()
    sp.phi_deg = 46.0
    sp.delta0_ghz = 22.3
    m = mq.spectrum_map(mag, [sp], mq.FieldSweep(150.0, 200.0, 5, 90.0),
                        mq.FrequencyAxis(25.0, 25.6, 30), mq.CouplingParams())
    path = tmp_path / "map.json"
    mq.write_map_json(m, str(path))
    back = mq.read_map_json(str(path))
    assert (back.s21 == m.s21).all()
