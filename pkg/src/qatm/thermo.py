"""Thermodynamic diagnostics along a trajectory.

Heats are energy changes of the local qubit states; effective temperatures
invert the two-level Gibbs ratio; the machine's virtual qubit is the
two-level subspace {|1 0>, |0 1>} of M1 x M2 whose population ratio defines
a temperature that turns negative under inversion.  Divergent or undefined
temperatures are recorded as quiet gaps (NaN), never exceptions, so
parameter sweeps can cross the cycle boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import tolerances
from .dynamics import Trajectory
from .model import ConfigError, ScenarioConfig
from .qcore import entropy_stack

__all__ = [
    "GAP",
    "MeasureSeries",
    "CycleLabel",
    "heat_series",
    "effective_temperature_series",
    "virtual_populations_series",
    "virtual_temperature",
    "virtual_temperature_series",
    "virtual_heat_series",
    "entropy_production_series",
    "entropy_production_rate_series",
    "classify_cycle",
    "cycle_boundary_temperature",
]

GAP = math.nan  # sentinel for divergent/undefined values; serialized as an empty CSV field


@dataclass
class MeasureSeries:
    """A named time series on the trajectory grid; NaN entries are gaps."""

    name: str
    times: np.ndarray
    values: np.ndarray
    units: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError(f"series {self.name}: {len(self.times)} times vs {len(self.values)} values")

    def __len__(self) -> int:
        return len(self.times)

    def gaps(self) -> np.ndarray:
        return np.isnan(self.values)


class CycleLabel(enum.Enum):
    A = "A"
    B = "B"
    BOUNDARY = "Boundary"


MACHINE_QUBITS = ("M1", "M2")
SUBSYSTEM_QUBITS = ("M1", "M2", "S1", "S2")


def heat_series(traj: Trajectory, subsystem: str) -> MeasureSeries:
    """Energy change of one qubit: E_x * (P_excited(t) - P_excited(0))."""
    if subsystem not in SUBSYSTEM_QUBITS:
        raise ConfigError(f"unknown subsystem {subsystem!r}; expected one of {SUBSYSTEM_QUBITS}")
    energy = traj.config.energy(subsystem)
    red = traj.reduced(subsystem)
    excited = red[:, 1, 1]
    residue = float(np.max(np.abs(excited.imag)))
    if residue > tolerances.HEAT_IMAG_ATOL:
        raise ValueError(f"heat trace imaginary residue {residue:.3e} exceeds tolerance")
    values = energy * (excited.real - excited.real[0])
    return MeasureSeries(f"heat_{subsystem}", traj.times, values, units="energy")


def _log_ratio_temperature(energy: float, p_ground: np.ndarray, p_excited: np.ndarray) -> np.ndarray:
    """energy / (ln P_G - ln P_E), with gaps where the ratio is undefined."""
    out = np.full(p_ground.shape, GAP)
    ok = (p_ground > tolerances.POPULATION_FLOOR) & (p_excited > tolerances.POPULATION_FLOOR)
    denom = np.zeros_like(out)
    denom[ok] = np.log(p_ground[ok]) - np.log(p_excited[ok])
    ok &= denom != 0.0
    out[ok] = energy / denom[ok]
    return out


def effective_temperature_series(traj: Trajectory, qubit: str) -> MeasureSeries:
    """Instantaneous Gibbs-ratio temperature of a machine qubit.

    Negative values are physical (population inversion); equal populations
    produce a gap.
    """
    if qubit not in MACHINE_QUBITS:
        raise ConfigError(f"effective temperature is defined for {MACHINE_QUBITS}, got {qubit!r}")
    p_g, p_e = traj.populations(qubit)
    values = _log_ratio_temperature(traj.config.energy(qubit), p_g, p_e)
    return MeasureSeries(f"temperature_{qubit}", traj.times, values, units="temperature")


def virtual_populations_series(traj: Trajectory, body: str) -> tuple[MeasureSeries, MeasureSeries]:
    """Ground/excited populations of the virtual qubit of body M or S.

    The virtual ground state is |1 0> (first qubit excited), the virtual
    excited state |0 1>, so P_G = P_E1 * P_G2 and P_E = P_G1 * P_E2.
    """
    if body not in ("M", "S"):
        raise ConfigError(f"virtual populations are defined for bodies M and S, got {body!r}")
    first, second = (f"{body}1", f"{body}2")
    pg1, pe1 = traj.populations(first)
    pg2, pe2 = traj.populations(second)
    p_ground = pe1 * pg2
    p_excited = pg1 * pe2
    return (
        MeasureSeries(f"virtual_P_G_{body}", traj.times, p_ground, units="probability"),
        MeasureSeries(f"virtual_P_E_{body}", traj.times, p_excited, units="probability"),
    )


def cycle_boundary_temperature(config: ScenarioConfig) -> float:
    """T_M1 value separating the two cycles: (E_M1/E_M2) * T_M2."""
    return (config.E_M1 / config.E_M2) * config.T_M2


def virtual_temperature(E_M1: float, E_M2: float, T_M1: float, T_M2: float) -> float:
    """Virtual-qubit temperature (E_M2-E_M1)/(E_M2/T_M2 - E_M1/T_M1).

    Negative on the A side, positive on the B side; returns a NaN sentinel
    within tolerance of the divergent boundary.
    """
    if T_M1 <= 0 or T_M2 <= 0:
        raise ConfigError(f"temperatures must be > 0, got T_M1={T_M1}, T_M2={T_M2}")
    if not E_M2 > E_M1:
        raise ConfigError(f"E_M2 must exceed E_M1, got E_M1={E_M1}, E_M2={E_M2}")
    if abs(T_M1 - (E_M1 / E_M2) * T_M2) <= tolerances.CYCLE_BOUNDARY_ATOL:
        return GAP
    return (E_M2 - E_M1) / (E_M2 / T_M2 - E_M1 / T_M1)


def virtual_temperature_series(traj: Trajectory, body: str = "M") -> MeasureSeries:
    """Instantaneous virtual-qubit temperature from the virtual populations."""
    p_g, p_e = virtual_populations_series(traj, body)
    cfg = traj.config
    gap_energy = (cfg.E_M2 - cfg.E_M1) if body == "M" else (cfg.E_S2 - cfg.E_S1)
    values = _log_ratio_temperature(gap_energy, p_g.values, p_e.values)
    return MeasureSeries(f"temperature_virtual_{body}", traj.times, values, units="temperature")


def virtual_heat_series(traj: Trajectory) -> MeasureSeries:
    """Heat of the machine virtual qubit: E_M * (P_E(t) - P_E(0))."""
    _, p_e = virtual_populations_series(traj, "M")
    energy = traj.config.E_M2 - traj.config.E_M1
    values = energy * (p_e.values - p_e.values[0])
    return MeasureSeries("virtual_heat", traj.times, values, units="energy")


def _full_entropy(traj: Trajectory, log_base: float) -> np.ndarray:
    return entropy_stack(traj.states, log_base)


def entropy_production_series(traj: Trajectory, mode: str | None = None) -> MeasureSeries:
    """Entropy production: full-state entropy change minus heat-over-temperature flows.

    Mode ``fixed_reservoir`` divides each machine heat by the constant
    reservoir temperature; ``instantaneous`` divides by the effective
    temperature at the same instant (gaps propagate).  Both terms are
    expressed in the configured log base.
    """
    mode = mode or traj.config.sigma_temperature_mode
    if mode not in ("fixed_reservoir", "instantaneous"):
        raise ConfigError(f"unknown sigma temperature mode {mode!r}")
    cfg = traj.config
    base = cfg.log_base_value
    values = _full_entropy(traj, base)
    values -= values[0]
    nat_to_base = math.log(base)  # heats/T are in nats; convert to the entropy base
    for qubit, reservoir_T in (("M1", cfg.T_M1), ("M2", cfg.T_M2)):
        q = heat_series(traj, qubit).values
        if mode == "fixed_reservoir":
            temp = reservoir_T
        else:
            temp = effective_temperature_series(traj, qubit).values
        values -= q / temp / nat_to_base
    return MeasureSeries("entropy_production", traj.times, values,
                         units="bits" if cfg.log_base == "2" else "nats")


def entropy_production_rate_series(sigma: MeasureSeries) -> MeasureSeries:
    """Time derivative of a series: central differences, one-sided second-order ends."""
    n = len(sigma)
    if n < 3:
        raise ValueError(f"need at least 3 points to differentiate, got {n}")
    t, v = sigma.times, sigma.values
    h = t[1] - t[0]
    out = np.empty(n)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return MeasureSeries(f"{sigma.name}_rate", t, out,
                         units=f"{sigma.units}/time" if sigma.units else "1/time")


def classify_cycle(config: ScenarioConfig) -> CycleLabel:
    """Cycle A iff T_M1 below the boundary (E_M1/E_M2)*T_M2, B above, else Boundary."""
    config.validate()
    boundary = cycle_boundary_temperature(config)
    if abs(config.T_M1 - boundary) <= tolerances.CYCLE_BOUNDARY_ATOL:
        return CycleLabel.BOUNDARY
    return CycleLabel.A if config.T_M1 < boundary else CycleLabel.B
