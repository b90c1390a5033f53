import numpy as np
import pytest

from qatm import tolerances
from qatm.dynamics import (
    IntegrationFailure,
    evolve,
    exponential_reference_states,
    lindblad_rhs,
    liouvillian_matrix,
)
from qatm.model import ScenarioConfig, build_model, initial_state
from qatm.qcore import DensityMatrix, trace_distance

from conftest import random_density_matrix

FAST = dict(t_max=2.0)  # short horizon for unit-level checks


def vec(m):
    return np.asarray(m).reshape(-1, order="F")


class TestRhs:
    def test_thermal_machine_is_dissipative_fixed_point(self):
        cfg = ScenarioConfig(g=0.0)
        ops = build_model(cfg)
        rho = initial_state(cfg)
        out = lindblad_rhs(rho, ops)
        # populations of the machine block must not move
        machine_diag = np.abs(np.diag(out))
        assert np.max(machine_diag) <= 1e-12

    def test_commuting_state_with_zero_rates_is_stationary(self):
        cfg = ScenarioConfig(gamma_1=0.0, gamma_2=0.0, g=0.0)
        ops = build_model(cfg)
        rho = DensityMatrix(np.diag(np.full(16, 1.0 / 16)).astype(complex))
        assert np.max(np.abs(lindblad_rhs(rho, ops))) == 0.0

    def test_traceless_on_random_states(self, rng):
        ops = build_model(ScenarioConfig())
        for _ in range(5):
            out = lindblad_rhs(random_density_matrix(rng, 16), ops)
            assert abs(np.trace(out)) <= 1e-12
            assert np.max(np.abs(out - out.conj().T)) <= 1e-12

    def test_dimension_mismatch(self, rng):
        ops = build_model(ScenarioConfig())
        with pytest.raises(ValueError):
            lindblad_rhs(random_density_matrix(rng, 4), ops)


class TestLiouvillian:
    def test_matches_rhs_on_random_states(self, rng):
        ops = build_model(ScenarioConfig(T_M1=0.31, g=0.52))
        liou = liouvillian_matrix(ops)
        for _ in range(20):
            rho = random_density_matrix(rng, 16)
            assert np.max(np.abs(liou @ vec(rho) - vec(lindblad_rhs(rho, ops)))) <= 1e-10

    def test_trace_functional_is_left_null_vector(self):
        ops = build_model(ScenarioConfig())
        liou = liouvillian_matrix(ops)
        assert np.max(np.abs(vec(np.eye(16)).conj() @ liou)) <= 1e-10

    def test_zero_generator_keeps_projectors_fixed(self):
        import scipy.linalg
        cfg = ScenarioConfig(gamma_1=0.0, gamma_2=0.0, g=0.0)
        liou = liouvillian_matrix(build_model(cfg))
        propagator = scipy.linalg.expm(liou * 3.0)
        for k in (0, 6, 15):
            proj = np.zeros((16, 16), dtype=complex)
            proj[k, k] = 1.0
            assert np.max(np.abs(propagator @ vec(proj) - vec(proj))) <= 1e-12


class TestEvolve:
    def test_grid_and_initial_snapshot(self, get_traj):
        traj = get_traj(ScenarioConfig(**FAST))
        assert traj.times[0] == 0.0
        assert np.all(np.diff(traj.times) > 0)
        assert np.allclose(np.diff(traj.times), traj.config.dt * traj.config.sample_stride)
        assert np.max(np.abs(traj.states[0] - initial_state(traj.config).matrix)) == 0.0

    def test_free_evolution_keeps_populations(self, get_traj):
        traj = get_traj(ScenarioConfig(gamma_1=0.0, gamma_2=0.0, g=0.0, **FAST))
        for label in ("M1", "M2", "S1", "S2"):
            _, p_e = traj.populations(label)
            assert np.max(np.abs(p_e - p_e[0])) <= 1e-12

    def test_thermal_dissipator_fixed_point(self, get_traj):
        traj = get_traj(ScenarioConfig(g=0.0, **FAST))
        machine = traj.reduced("M")
        assert np.max(np.abs(machine - machine[0])) <= 1e-8

    def test_matches_stepwise_rk4(self):
        # the precomputed stride propagator must equal literal RK4 stepping
        cfg = ScenarioConfig(t_max=0.5, dt=0.001, sample_stride=100)
        traj = evolve(cfg)
        ops = build_model(cfg)
        rho = initial_state(cfg).matrix.copy()
        states = [rho]
        for _ in range(int(round(cfg.t_max / cfg.dt))):
            k1 = lindblad_rhs(rho, ops)
            k2 = lindblad_rhs(rho + 0.5 * cfg.dt * k1, ops)
            k3 = lindblad_rhs(rho + 0.5 * cfg.dt * k2, ops)
            k4 = lindblad_rhs(rho + cfg.dt * k3, ops)
            rho = rho + (cfg.dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            states.append(rho)
        for k, t in enumerate(traj.times):
            step = int(round(t / cfg.dt))
            assert np.max(np.abs(traj.states[k] - states[step])) <= 1e-12

    def test_oracle_agreement_short(self, get_traj):
        cfg = ScenarioConfig(**FAST)
        traj = get_traj(cfg)
        checks = [0.5, 1.0, 2.0]
        refs = exponential_reference_states(cfg, checks)
        for t, ref in zip(checks, refs):
            k = int(round(t / (cfg.dt * cfg.sample_stride)))
            assert trace_distance(traj.states[k], ref) <= 1e-8

    def test_step_halving_convergence(self):
        base = ScenarioConfig(t_max=5.0)
        half = ScenarioConfig(t_max=5.0, dt=base.dt / 2, sample_stride=base.sample_stride * 2)
        final_a = evolve(base).states[-1]
        final_b = evolve(half).states[-1]
        assert trace_distance(final_a, final_b) <= 1e-7

    def test_snapshot_invariants(self, get_traj):
        traj = get_traj(ScenarioConfig(**FAST))
        traces = np.trace(traj.states, axis1=1, axis2=2)
        assert np.max(np.abs(traces - 1.0)) <= tolerances.TRACE_ATOL
        herm = np.max(np.abs(traj.states - np.conj(np.transpose(traj.states, (0, 2, 1)))))
        assert herm <= tolerances.HERMITICITY_ATOL
        assert min(np.linalg.eigvalsh(s)[0] for s in traj.states) >= -tolerances.PSD_EIG_ATOL

    def test_unstable_step_reports_time(self):
        # a huge step makes RK4 blow up; the failure must carry the time
        cfg = ScenarioConfig(t_max=40.0, dt=0.8, sample_stride=1)
        with pytest.raises(IntegrationFailure) as err:
            evolve(cfg)
        assert err.value.time > 0.0

    def test_states_are_read_only(self, get_traj):
        traj = get_traj(ScenarioConfig(**FAST))
        with pytest.raises(ValueError):
            traj.states[0, 0, 0] = 1.0


class TestOracleHelpers:
    def test_reference_times_must_increase(self):
        with pytest.raises(ValueError):
            exponential_reference_states(ScenarioConfig(**FAST), [1.0, 0.5])
