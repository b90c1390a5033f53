"""Information-theoretic diagnostics: mutual information, trace-distance
backflow, concurrence, and relative-entropy coherence.

The backflow measure evolves the coherent and dephased initial-state twins
on the same grid and totals the positive increments of their reduced-state
trace distance; that discrete positive variation is the exact counterpart
of integrating the distance derivative over its growth episodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import Trajectory, evolve
from .model import ConfigError, ScenarioConfig
from .qcore import (
    DensityMatrix,
    partial_trace_array,
    trace_distance,
    von_neumann_entropy,
)
from .thermo import MeasureSeries, entropy_production_rate_series

__all__ = [
    "BlpResult",
    "mutual_information",
    "classical_mutual_information",
    "blp_non_markovianity",
    "concurrence",
    "relative_entropy_coherence",
    "coherence_correlation",
]

_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_SPIN_FLIP = np.kron(_SIGMA_Y, _SIGMA_Y)


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


def _dephased(m: np.ndarray) -> np.ndarray:
    return np.diag(np.diag(m))


def mutual_information(rho, dims: Sequence[int], part_a: Sequence[int], part_b: Sequence[int],
                       log_base: float = 2.0) -> float:
    """S(A) + S(B) - S(AB) for two disjoint groups of subsystems."""
    a, b = sorted(set(part_a)), sorted(set(part_b))
    if not a or not b:
        raise ConfigError("both parts of a bipartition must be nonempty")
    if set(a) & set(b):
        raise ConfigError(f"parts overlap: {a} vs {b}")
    m = _matrix(rho)
    joint = sorted(set(a) | set(b))
    m_ab = m if len(joint) == len(dims) else partial_trace_array(m, dims, joint)
    s_ab = von_neumann_entropy(m_ab, log_base)
    s_a = von_neumann_entropy(partial_trace_array(m, dims, a), log_base)
    s_b = von_neumann_entropy(partial_trace_array(m, dims, b), log_base)
    return s_a + s_b - s_ab


def classical_mutual_information(rho, dims: Sequence[int], part_a: Sequence[int],
                                 part_b: Sequence[int], log_base: float = 2.0) -> float:
    """Mutual information of the fully dephased state."""
    return mutual_information(_dephased(_matrix(rho)), dims, part_a, part_b, log_base)


@dataclass
class BlpResult:
    """Backflow diagnostics for one subsystem.

    ``distance`` is the trace distance between the two evolved twins,
    ``rate`` its finite-difference derivative, ``cumulative`` the running
    total of positive increments, and ``total`` the final backflow measure.
    """

    subsystem: str
    distance: MeasureSeries
    rate: MeasureSeries
    cumulative: MeasureSeries
    total: float
    increase_intervals: list[tuple[float, float]]


def _increase_intervals(times: np.ndarray, increments: np.ndarray) -> list[tuple[float, float]]:
    """Merge consecutive grid steps with positive increments into intervals."""
    intervals: list[tuple[float, float]] = []
    start = None
    for k, up in enumerate(increments > 0.0):
        if up and start is None:
            start = times[k]
        elif not up and start is not None:
            intervals.append((float(start), float(times[k])))
            start = None
    if start is not None:
        intervals.append((float(start), float(times[-1])))
    return intervals


def blp_non_markovianity(config: ScenarioConfig, subsystem: str,
                         trajectories: tuple[Trajectory, Trajectory] | None = None) -> BlpResult:
    """Trace-distance backflow between the coherent and dephased initial twins.

    The twins share the machine marginals and differ only in the system
    block's coherences.  ``trajectories`` may supply pre-computed
    (coherent, dephased) evolutions to avoid re-integration.
    """
    if subsystem not in ("M", "S1", "S2"):
        raise ConfigError(f"backflow subsystems are M, S1, S2; got {subsystem!r}")
    if trajectories is None:
        trajectories = (evolve(config, "coherent_S"), evolve(config, "dephased_S"))
    coherent, dephased = trajectories
    if len(coherent) != len(dephased) or not np.array_equal(coherent.times, dephased.times):
        raise ValueError("twin trajectories must share one time grid")
    red_a = coherent.reduced(subsystem)
    red_b = dephased.reduced(subsystem)
    dist = np.array([trace_distance(x, y) for x, y in zip(red_a, red_b)])
    distance = MeasureSeries(f"blp_distance_{subsystem}", coherent.times, dist, units="dimensionless")
    increments = np.diff(dist)
    positive = np.where(increments > 0.0, increments, 0.0)
    cumulative = np.concatenate([[0.0], np.cumsum(positive)])
    return BlpResult(
        subsystem=subsystem,
        distance=distance,
        rate=entropy_production_rate_series(distance),
        cumulative=MeasureSeries(f"blp_cumulative_{subsystem}", coherent.times, cumulative,
                                 units="dimensionless"),
        total=float(cumulative[-1]),
        increase_intervals=_increase_intervals(coherent.times, increments),
    )


def concurrence(rho_2q) -> float:
    """Two-qubit entanglement from the spin-flipped spectrum.

    C = max(0, sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4)) over the descending
    eigenvalues of rho * (sy x sy) rho^* (sy x sy), clipped at zero.
    """
    m = _matrix(rho_2q)
    if m.shape != (4, 4):
        raise ConfigError(f"concurrence needs a two-qubit (4x4) state, got shape {m.shape}")
    flipped = _SPIN_FLIP @ m.conj() @ _SPIN_FLIP
    eigs = np.linalg.eigvals(m @ flipped)
    roots = np.sqrt(np.clip(eigs.real, 0.0, None))
    roots[::-1].sort()
    return float(max(0.0, roots[0] - roots[1] - roots[2] - roots[3]))


def relative_entropy_coherence(rho, log_base: float = 2.0) -> float:
    """S(dephased rho) - S(rho); zero for diagonal states."""
    m = _matrix(rho)
    return von_neumann_entropy(_dephased(m), log_base) - von_neumann_entropy(m, log_base)


def coherence_correlation(rho_s, log_base: float = 2.0) -> tuple[float, float]:
    """Global-minus-local coherence of the two-qubit system block.

    Returns (delta_C, residual) where residual is the deviation from the
    exact identity delta_C = I - I_dephased; it vanishes because dephasing
    in the product basis commutes with the partial traces.
    """
    m = _matrix(rho_s)
    if m.shape != (4, 4):
        raise ConfigError(f"coherence correlation needs the 4x4 system block, got shape {m.shape}")
    dims = (2, 2)
    local_1 = partial_trace_array(m, dims, (0,))
    local_2 = partial_trace_array(m, dims, (1,))
    delta = (
        relative_entropy_coherence(m, log_base)
        - relative_entropy_coherence(local_1, log_base)
        - relative_entropy_coherence(local_2, log_base)
    )
    quantum = mutual_information(m, dims, (0,), (1,), log_base)
    classical = classical_mutual_information(m, dims, (0,), (1,), log_base)
    return delta, abs(delta - (quantum - classical))
