"""Time evolution under the local Lindblad generator.

The generator is linear and time independent, so one classic fourth-order
Runge-Kutta step with fixed step ``dt`` is the matrix polynomial
I + A + A^2/2 + A^3/6 + A^4/24 with A = dt*L acting on the column-stacked
state.  ``evolve`` precomputes that one-step matrix once, raises it to the
sample stride, and applies it snapshot by snapshot; this is bit-for-bit
deterministic and equivalent to stepwise RK4 up to floating-point
reordering.  ``liouvillian_matrix`` doubles as the independent oracle:
scaling-and-squaring matrix exponentials of the same generator give
reference states the integrator is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from . import tolerances
from .model import KEEP, LAYOUT, ModelOperators, ScenarioConfig, SystemLayout, build_model, initial_state
from .qcore import DensityMatrix, dagger, kron, partial_trace_stack

__all__ = [
    "IntegrationFailure",
    "Trajectory",
    "lindblad_rhs",
    "liouvillian_matrix",
    "evolve",
    "exponential_reference_states",
]


class IntegrationFailure(RuntimeError):
    """The integrator produced an invalid state at some time."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:g}")
        self.time = time


def _vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def _unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape((dim, dim), order="F")


def lindblad_rhs(rho, ops: ModelOperators) -> np.ndarray:
    """Right-hand side of the master equation in matrix form.

    -i[H_M + H_S + H_MS, rho] plus, for each channel (L, rate),
    rate * (L rho L^dag - (L^dag L rho + rho L^dag L)/2).
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    h = ops.h_total
    if m.shape != h.shape:
        raise ValueError(f"state shape {m.shape} does not match operators of shape {h.shape}")
    out = -1j * (h @ m - m @ h)
    for op, rate in ops.channels:
        if rate == 0.0:
            continue
        op_dag = dagger(op)
        op2 = op_dag @ op
        out += rate * (op @ m @ op_dag - 0.5 * (op2 @ m + m @ op2))
    return out


def liouvillian_matrix(ops: ModelOperators) -> np.ndarray:
    """Column-stacking superoperator L with vec(rhs(rho)) = L @ vec(rho)."""
    dim = ops.h_total.shape[0]
    eye = np.eye(dim, dtype=complex)
    h = ops.h_total
    liou = -1j * (kron(eye, h) - kron(h.T, eye))
    for op, rate in ops.channels:
        if rate == 0.0:
            continue
        op_dag = dagger(op)
        op2 = op_dag @ op
        liou += rate * (kron(op.conj(), op) - 0.5 * kron(eye, op2) - 0.5 * kron(op2.T, eye))
    return liou


def _rk4_step_matrix(liou: np.ndarray, dt: float) -> np.ndarray:
    a = dt * liou
    a2 = a @ a
    a3 = a2 @ a
    a4 = a3 @ a
    return np.eye(a.shape[0], dtype=complex) + a + a2 / 2.0 + a3 / 6.0 + a4 / 24.0


def _grid(config: ScenarioConfig) -> tuple[int, int, np.ndarray]:
    """Total micro-steps, stride, and the uniform snapshot time grid."""
    n_steps = int(round(config.t_max / config.dt))
    stride = int(config.sample_stride)
    n_snapshots = n_steps // stride + 1
    times = np.arange(n_snapshots) * (config.dt * stride)
    return n_steps, stride, times


@dataclass
class Trajectory:
    """A uniform time grid with the full 16x16 state at every sample."""

    times: np.ndarray                 # (n,)
    states: np.ndarray                # (n, dim, dim), read-only
    config: ScenarioConfig
    variant: str
    layout: SystemLayout = LAYOUT
    _reduced: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> DensityMatrix:
        return DensityMatrix(self.states[k])

    def reduced(self, label: str) -> np.ndarray:
        """Stack of reduced states on one subsystem block, cached per label."""
        if label not in self._reduced:
            keep = KEEP[label]
            self._reduced[label] = partial_trace_stack(self.states, self.layout.dims, keep)
        return self._reduced[label]

    def populations(self, label: str) -> tuple[np.ndarray, np.ndarray]:
        """Ground and excited populations of a single qubit over time."""
        red = self.reduced(label)
        return np.real(red[:, 0, 0]).copy(), np.real(red[:, 1, 1]).copy()


def _validated_snapshot(state: np.ndarray, t: float) -> np.ndarray:
    """Check invariants at a snapshot; renormalize small trace drift."""
    herm_dev = float(np.max(np.abs(state - dagger(state))))
    if herm_dev > tolerances.HERMITICITY_ATOL:
        raise IntegrationFailure(f"snapshot lost Hermiticity (deviation {herm_dev:.3e})", t)
    smallest = float(np.linalg.eigvalsh(state)[0])
    if smallest < -tolerances.STEP_EIG_ABORT:
        raise IntegrationFailure(f"snapshot eigenvalue {smallest:.3e} signals step instability", t)
    if smallest < -tolerances.PSD_EIG_ATOL:
        raise IntegrationFailure(f"snapshot eigenvalue {smallest:.3e} below positivity tolerance", t)
    drift = abs(state.trace() - 1.0)
    if drift > tolerances.TRACE_ATOL:
        raise IntegrationFailure(f"snapshot trace drifted by {drift:.3e}", t)
    if drift > tolerances.TRACE_RENORM_FLOOR:
        state = state / np.real(state.trace())
    return state


def evolve(config: ScenarioConfig, variant: str = "coherent_S") -> Trajectory:
    """Integrate the master equation on the configured fixed grid."""
    config.validate()
    ops = build_model(config)
    rho0 = initial_state(config, variant)
    n_steps, stride, times = _grid(config)

    liou = liouvillian_matrix(ops)
    step = _rk4_step_matrix(liou, config.dt)
    stride_step = np.linalg.matrix_power(step, stride)

    dim = rho0.dim
    snapshots = np.empty((len(times), dim, dim), dtype=complex)
    v = _vec(rho0.matrix)
    snapshots[0] = rho0.matrix
    for k in range(1, len(times)):
        v = stride_step @ v
        state = _validated_snapshot(_unvec(v, dim), float(times[k]))
        snapshots[k] = state
        v = _vec(state)
    snapshots.setflags(write=False)
    return Trajectory(times=times, states=snapshots, config=config, variant=variant)


def exponential_reference_states(
    config: ScenarioConfig, times: Sequence[float], variant: str = "coherent_S"
) -> list[np.ndarray]:
    """Oracle states exp(L t) rho(0) at the requested times (must be increasing)."""
    config.validate()
    ts = [float(t) for t in times]
    if any(b <= a for a, b in zip(ts, ts[1:])) or (ts and ts[0] < 0):
        raise ValueError("oracle times must be nonnegative and strictly increasing")
    ops = build_model(config)
    liou = liouvillian_matrix(ops)
    dim = ops.h_total.shape[0]
    v = _vec(initial_state(config, variant).matrix)
    out = []
    previous = 0.0
    propagators: dict[float, np.ndarray] = {}  # expm is costly; equal gaps recur
    for t in ts:
        gap = t - previous
        if gap > 0:
            if gap not in propagators:
                propagators[gap] = scipy.linalg.expm(liou * gap)
            v = propagators[gap] @ v
        previous = t
        out.append(_unvec(v, dim))
    return out
