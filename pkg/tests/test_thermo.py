import math

import numpy as np
import pytest

from qatm.dynamics import Trajectory
from qatm.model import ConfigError, ScenarioConfig, build_model, thermal_qubit_state
from qatm.qcore import kron
from qatm.thermo import (
    CycleLabel,
    MeasureSeries,
    classify_cycle,
    cycle_boundary_temperature,
    effective_temperature_series,
    entropy_production_rate_series,
    entropy_production_series,
    heat_series,
    virtual_heat_series,
    virtual_populations_series,
    virtual_temperature,
    virtual_temperature_series,
)

DEFAULTS = ScenarioConfig()
FAST = dict(t_max=2.0)


def synthetic_trajectory(m1_populations, config=DEFAULTS):
    """Constant-in-time product states with a prescribed M1 population pair."""
    m1 = np.diag(m1_populations).astype(complex)
    m2 = thermal_qubit_state(config.E_M2, config.T_M2).matrix
    s = np.diag([0.25] * 4).astype(complex)
    state = kron(kron(m1, m2), s)
    states = np.stack([state] * 4)
    times = np.arange(4) * 0.1
    return Trajectory(times=times, states=states, config=config, variant="coherent_S")


class TestHeat:
    def test_zero_at_time_zero(self, get_traj):
        traj = get_traj(ScenarioConfig(**FAST))
        for label in ("M1", "M2", "S1", "S2"):
            assert heat_series(traj, label).values[0] == 0.0

    def test_zero_coupling_freezes_system_heats(self, get_traj):
        traj = get_traj(ScenarioConfig(g=0.0, **FAST))
        for label in ("S1", "S2"):
            assert np.max(np.abs(heat_series(traj, label).values)) <= 1e-10

    def test_cycle_a_signs_pointwise(self, get_traj, cycle_a_config):
        traj = get_traj(cycle_a_config)
        assert np.min(heat_series(traj, "M1").values) >= -1e-8
        assert np.max(heat_series(traj, "M2").values) <= 1e-8
        assert np.max(heat_series(traj, "S1").values) <= 1e-8
        assert np.min(heat_series(traj, "S2").values) >= -1e-8

    def test_unknown_subsystem(self, get_traj):
        with pytest.raises(ConfigError):
            heat_series(get_traj(ScenarioConfig(**FAST)), "M3")


class TestEffectiveTemperature:
    def test_initial_thermal_inversion_recovers_bath_temperature(self, get_traj):
        traj = get_traj(ScenarioConfig(**FAST))
        series = effective_temperature_series(traj, "M1")
        assert series.values[0] == pytest.approx(0.1, abs=1e-12)
        series2 = effective_temperature_series(traj, "M2")
        assert series2.values[0] == pytest.approx(1.0, abs=1e-12)

    def test_equal_populations_give_gap(self):
        traj = synthetic_trajectory([0.5, 0.5])
        series = effective_temperature_series(traj, "M1")
        assert np.all(np.isnan(series.values))

    def test_population_inversion_gives_negative_temperature(self):
        # oracle: 5 / ln((1/3)/(2/3)) = 5 / ln(1/2)
        traj = synthetic_trajectory([1.0 / 3.0, 2.0 / 3.0])
        series = effective_temperature_series(traj, "M1")
        assert series.values[0] == pytest.approx(-7.213475204444817, abs=1e-9)

    def test_only_machine_qubits(self, get_traj):
        with pytest.raises(ConfigError):
            effective_temperature_series(get_traj(ScenarioConfig(**FAST)), "S1")


class TestVirtualQuantities:
    def test_initial_virtual_populations_product_form(self, get_traj):
        traj = get_traj(ScenarioConfig(**FAST))
        p_g, p_e = virtual_populations_series(traj, "M")
        pe_m2 = 4.5397868702434395e-05
        pe_m1 = 1.9287498479639178e-22
        assert p_e.values[0] == pytest.approx((1.0 - pe_m1) * pe_m2, rel=1e-12)
        assert p_g.values[0] == pytest.approx(pe_m1 * (1.0 - pe_m2), rel=1e-12)

    def test_system_virtual_populations_quarter(self, get_traj):
        traj = get_traj(ScenarioConfig(**FAST))
        p_g, p_e = virtual_populations_series(traj, "S")
        assert p_g.values[0] == pytest.approx(0.25, abs=1e-12)
        assert p_e.values[0] == pytest.approx(0.25, abs=1e-12)

    def test_bounded_unit_interval(self, get_traj, cycle_b_config):
        traj = get_traj(cycle_b_config)
        for body in ("M", "S"):
            p_g, p_e = virtual_populations_series(traj, body)
            for vals in (p_g.values, p_e.values):
                assert np.min(vals) >= 0.0 and np.max(vals) <= 1.0

    def test_virtual_temperature_scalar(self):
        assert virtual_temperature(5.0, 10.0, 0.1, 1.0) == pytest.approx(-0.125, abs=1e-12)
        assert virtual_temperature(5.0, 10.0, 0.7, 0.7) == pytest.approx(0.7, abs=1e-12)
        assert math.isnan(virtual_temperature(5.0, 10.0, 0.5, 1.0))

    def test_virtual_temperature_validation(self):
        with pytest.raises(ConfigError):
            virtual_temperature(5.0, 10.0, -0.1, 1.0)
        with pytest.raises(ConfigError):
            virtual_temperature(10.0, 5.0, 0.1, 1.0)

    def test_virtual_temperature_series_initial_value(self, get_traj):
        traj = get_traj(ScenarioConfig(**FAST))
        series = virtual_temperature_series(traj, "M")
        assert series.values[0] == pytest.approx(-0.125, abs=1e-9)

    def test_virtual_heat_starts_at_zero(self, get_traj):
        traj = get_traj(ScenarioConfig(**FAST))
        assert virtual_heat_series(traj).values[0] == 0.0

    def test_virtual_heat_time_average_tracks_flow_direction(self, get_traj, cycle_a_config,
                                                             cycle_b_config):
        # the inverted virtual pair dumps excitation into the system block in
        # cycle A and absorbs it in cycle B
        q_a = virtual_heat_series(get_traj(cycle_a_config)).values
        q_b = virtual_heat_series(get_traj(cycle_b_config)).values
        assert q_a.mean() < 0.0
        assert q_b.mean() > 0.0


class TestEntropyProduction:
    def test_zero_at_time_zero(self, get_traj):
        traj = get_traj(ScenarioConfig(**FAST))
        for mode in ("fixed_reservoir", "instantaneous"):
            assert entropy_production_series(traj, mode).values[0] == 0.0

    def test_modes_differ_once_temperatures_move(self, get_traj, cycle_b_config):
        traj = get_traj(cycle_b_config)
        fixed = entropy_production_series(traj, "fixed_reservoir").values
        inst = entropy_production_series(traj, "instantaneous").values
        assert np.max(np.abs(fixed - inst)) > 1e-9

    def test_log_base_only_rescales(self, get_traj):
        cfg2 = ScenarioConfig(**FAST)
        cfge = ScenarioConfig(log_base="e", **FAST)
        bits = entropy_production_series(get_traj(cfg2)).values
        nats = entropy_production_series(get_traj(cfge)).values
        assert np.allclose(bits * math.log(2.0), nats, atol=1e-12)

    def test_unknown_mode(self, get_traj):
        with pytest.raises(ConfigError):
            entropy_production_series(get_traj(ScenarioConfig(**FAST)), "averaged")


class TestRate:
    def test_linear_series_has_constant_rate(self):
        t = np.linspace(0.0, 1.0, 11)
        series = MeasureSeries("sigma", t, 3.5 * t + 1.0)
        rate = entropy_production_rate_series(series)
        assert np.allclose(rate.values, 3.5, atol=1e-10)

    def test_quadratic_series_rate(self):
        t = np.linspace(0.0, 1.0, 101)
        rate = entropy_production_rate_series(MeasureSeries("sigma", t, t ** 2))
        assert np.allclose(rate.values, 2.0 * t, atol=1e-4)

    def test_gaps_propagate(self):
        t = np.linspace(0.0, 1.0, 11)
        v = t.copy()
        v[5] = math.nan
        rate = entropy_production_rate_series(MeasureSeries("sigma", t, v))
        assert np.isnan(rate.values[4]) and np.isnan(rate.values[6])
        assert not np.isnan(rate.values[2])

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            entropy_production_rate_series(MeasureSeries("sigma", [0.0, 1.0], [0.0, 1.0]))

    def test_rate_integrates_back(self, get_traj, cycle_b_config):
        traj = get_traj(cycle_b_config)
        sigma = entropy_production_series(traj)
        rate = entropy_production_rate_series(sigma)
        dt = sigma.times[1] - sigma.times[0]
        integrated = np.concatenate(
            [[0.0], np.cumsum((rate.values[1:] + rate.values[:-1]) * dt / 2.0)])
        assert np.max(np.abs(integrated - sigma.values)) <= 5.0 * dt ** 2


class TestCycleClassification:
    def test_paper_parameter_assignments(self):
        assert classify_cycle(ScenarioConfig(T_M1=0.1)) is CycleLabel.A
        assert classify_cycle(ScenarioConfig(T_M1=0.8)) is CycleLabel.B
        assert classify_cycle(ScenarioConfig(T_M1=0.5)) is CycleLabel.BOUNDARY

    def test_boundary_value(self):
        assert cycle_boundary_temperature(DEFAULTS) == 0.5

    def test_sign_equivalence_with_virtual_temperature(self):
        for t1 in np.linspace(0.1, 1.0, 20):
            cfg = ScenarioConfig(T_M1=float(t1))
            label = classify_cycle(cfg)
            if label is CycleLabel.BOUNDARY:
                continue
            t_virtual = virtual_temperature(cfg.E_M1, cfg.E_M2, cfg.T_M1, cfg.T_M2)
            assert (t_virtual < 0) == (label is CycleLabel.A)

    def test_time_averaged_heat_flips_across_boundary(self, get_traj):
        below = get_traj(ScenarioConfig(T_M1=0.3, **FAST))
        above = get_traj(ScenarioConfig(T_M1=0.7, **FAST))
        q1_below = heat_series(below, "M1").values.mean()
        q1_above = heat_series(above, "M1").values.mean()
        assert q1_below > 0.0 > q1_above
        q2_below = heat_series(below, "M2").values.mean()
        q2_above = heat_series(above, "M2").values.mean()
        assert q2_below < 0.0 < q2_above


class TestUnitaryLimit:
    def test_total_energy_conserved_without_dissipation(self, get_traj):
        cfg = ScenarioConfig(gamma_1=0.0, gamma_2=0.0, **FAST)
        traj = get_traj(cfg)
        h = build_model(cfg).h_total
        energies = np.real(np.einsum("ij,nji->n", h, traj.states))
        assert np.max(np.abs(energies - energies[0])) <= 1e-8
