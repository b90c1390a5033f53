"""Physical model builders: layout, scenario parameters, operators, initial states.

The machine is a pair of non-interacting qubits M1, M2, each damped by its
own thermal reservoir; the external system is a pair of qubits S1, S2.  The
only coupling is a resonant exchange between the product states
|0 1 1 0> and |1 0 0 1> (ordering M1 M2 S1 S2), so the whole problem lives
in a fixed 16-dimensional space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from functools import reduce
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import tolerances
from .qcore import DensityMatrix, dagger, kron

__all__ = [
    "ConfigError",
    "SystemLayout",
    "LAYOUT",
    "ScenarioConfig",
    "ModelOperators",
    "SIGMA_MINUS",
    "SIGMA_PLUS",
    "NUMBER_OP",
    "build_local_operator",
    "build_model",
    "bose_occupation",
    "thermal_qubit_state",
    "initial_state",
    "dephase",
    "parse_scenario_file",
    "parse_overrides",
]


class ConfigError(ValueError):
    """A scenario parameter violates a validation constraint."""


# Single-qubit operators in the |0>, |1> basis (|0> is the ground state).
SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)   # |1><0|
NUMBER_OP = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

KET_PLUS = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
KET_MINUS = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)


@dataclass(frozen=True)
class SystemLayout:
    """Fixed tensor ordering (M1, M2, S1, S2) and the index conventions.

    Flat basis index of |n_M1 n_M2 n_S1 n_S2> is
    8*n_M1 + 4*n_M2 + 2*n_S1 + n_S2.
    """

    labels: tuple[str, ...] = ("M1", "M2", "S1", "S2")
    dims: tuple[int, ...] = (2, 2, 2, 2)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigError(f"unknown subsystem {label!r}; expected one of {self.labels}") from None

    def indices(self, labels: Iterable[str]) -> tuple[int, ...]:
        return tuple(self.index(lb) for lb in labels)

    def basis_index(self, occupations: Iterable[int]) -> int:
        occ = tuple(occupations)
        if len(occ) != len(self.dims):
            raise ConfigError(f"expected {len(self.dims)} occupation numbers, got {len(occ)}")
        idx = 0
        for n, d in zip(occ, self.dims):
            idx = idx * d + n
        return idx


LAYOUT = SystemLayout()

# Subsystem-keep sets used throughout the measures.
KEEP = {
    "M1": (0,),
    "M2": (1,),
    "S1": (2,),
    "S2": (3,),
    "M": (0, 1),
    "S": (2, 3),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical and numerical parameters of one run.

    Energies and rates share one normalized scale (hbar = k_B = 1); time is
    measured in inverse energy units.  On superconducting hardware the
    default E_M2 = 10 corresponds to GHz-range level splittings, couplings
    of order 10-100 MHz and evolution windows of tens of microseconds.
    """

    E_M1: float = 5.0
    E_M2: float = 10.0
    E_S1: float = 5.0
    E_S2: float = 10.0
    T_M1: float = 0.1
    T_M2: float = 1.0
    gamma_1: float = 0.1
    gamma_2: float = 0.1
    g: float = 0.9
    t_max: float = 50.0
    dt: float = 0.00025
    sample_stride: int = 400
    log_base: str = "2"
    sigma_temperature_mode: str = "fixed_reservoir"

    HBAR = 1.0  # fixed; not a configurable field

    def validate(self) -> "ScenarioConfig":
        for name in ("E_M1", "E_M2", "E_S1", "E_S2"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.E_M2 > self.E_M1:
            raise ConfigError(f"E_M2 must exceed E_M1, got E_M1={self.E_M1}, E_M2={self.E_M2}")
        gap_m = self.E_M2 - self.E_M1
        gap_s = self.E_S2 - self.E_S1
        if abs(gap_m - gap_s) > tolerances.RESONANCE_ATOL:
            raise ConfigError(
                "resonance condition violated: E_M2 - E_M1 must equal E_S2 - E_S1 "
                f"(got {gap_m} vs {gap_s})"
            )
        for name in ("T_M1", "T_M2"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("gamma_1", "gamma_2", "g"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if self.t_max < self.dt:
            raise ConfigError(f"t_max must be >= dt, got t_max={self.t_max}, dt={self.dt}")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ConfigError(f"sample_stride must be a positive integer, got {self.sample_stride}")
        if self.log_base not in ("2", "e"):
            raise ConfigError(f"log_base must be '2' or 'e', got {self.log_base!r}")
        if self.sigma_temperature_mode not in ("fixed_reservoir", "instantaneous"):
            raise ConfigError(
                "sigma_temperature_mode must be 'fixed_reservoir' or 'instantaneous', "
                f"got {self.sigma_temperature_mode!r}"
            )
        return self

    @property
    def log_base_value(self) -> float:
        return 2.0 if self.log_base == "2" else math.e

    def energy(self, label: str) -> float:
        return {"M1": self.E_M1, "M2": self.E_M2, "S1": self.E_S1, "S2": self.E_S2}[label]

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def with_overrides(self, overrides: Mapping[str, object]) -> "ScenarioConfig":
        typed = {}
        for key, raw in overrides.items():
            typed[key] = _coerce_field(key, raw)
        return replace(self, **typed)

    @classmethod
    def from_file(cls, path: str | Path, overrides: Mapping[str, object] | None = None) -> "ScenarioConfig":
        cfg = cls().with_overrides(parse_scenario_file(path))
        if overrides:
            cfg = cfg.with_overrides(overrides)
        return cfg.validate()


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _coerce_field(key: str, raw: object):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown scenario key {key!r}")
    kind = _FIELD_TYPES[key]
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"could not parse {key} = {text!r} as a number") from None
    return text


def parse_scenario_file(path: str | Path) -> dict[str, str]:
    """Read a flat `key = value` scenario file; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown scenario key {key!r}")
        values[key] = value.strip()
    return values


def parse_overrides(pairs: Iterable[str]) -> dict[str, str]:
    """Parse repeated `key=value` override strings."""
    out: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, _, value = pair.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown scenario key {key!r}")
        out[key] = value.strip()
    return out


def build_local_operator(layout: SystemLayout, site: str, op) -> np.ndarray:
    """Embed a single-qubit operator at ``site`` by identity padding."""
    position = layout.index(site)
    factors = [np.eye(d, dtype=complex) for d in layout.dims]
    op = np.asarray(op, dtype=complex)
    if op.shape != (layout.dims[position], layout.dims[position]):
        raise ConfigError(f"operator shape {op.shape} does not fit site {site}")
    factors[position] = op
    return reduce(kron, factors)


@dataclass(frozen=True)
class ModelOperators:
    """Concrete 16x16 operators for one scenario, ready for the integrator."""

    layout: SystemLayout
    config: ScenarioConfig
    lowering: dict[str, np.ndarray]   # site -> embedded sigma^-
    raising: dict[str, np.ndarray]    # site -> embedded sigma^+
    h_machine: np.ndarray
    h_system: np.ndarray
    h_interaction: np.ndarray
    channels: tuple[tuple[np.ndarray, float], ...]  # (jump operator, rate)

    @property
    def h_total(self) -> np.ndarray:
        return self.h_machine + self.h_system + self.h_interaction


def bose_occupation(E: float, T: float) -> float:
    """Mean occupation 1/(exp(E/T) - 1) of a bosonic mode, guarding underflow."""
    if E <= 0:
        raise ConfigError(f"energy must be > 0, got {E}")
    if T <= 0:
        raise ConfigError(f"temperature must be > 0, got {T}")
    x = E / T
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


def thermal_qubit_state(E: float, T: float) -> DensityMatrix:
    """Gibbs state of a single qubit with splitting E at temperature T."""
    if E <= 0:
        raise ConfigError(f"energy must be > 0, got {E}")
    if T <= 0:
        raise ConfigError(f"temperature must be > 0, got {T}")
    x = E / T
    if x > 700.0:
        return DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
    w = math.exp(-x)
    z = 1.0 + w
    return DensityMatrix(np.diag([1.0 / z, w / z]).astype(complex))


def build_model(config: ScenarioConfig, layout: SystemLayout = LAYOUT) -> ModelOperators:
    """Assemble Hamiltonians and dissipation channels for one scenario."""
    config.validate()
    lowering = {site: build_local_operator(layout, site, SIGMA_MINUS) for site in layout.labels}
    raising = {site: dagger(op) for site, op in lowering.items()}

    def number(site: str) -> np.ndarray:
        return raising[site] @ lowering[site]

    h_machine = config.E_M1 * number("M1") + config.E_M2 * number("M2")
    h_system = config.E_S1 * number("S1") + config.E_S2 * number("S2")

    dim = layout.total_dim
    h_int = np.zeros((dim, dim), dtype=complex)
    bra = layout.basis_index((0, 1, 1, 0))
    ket = layout.basis_index((1, 0, 0, 1))
    h_int[bra, ket] = config.g
    h_int[ket, bra] = config.g

    channels = []
    for site, gamma, E, T in (
        ("M1", config.gamma_1, config.E_M1, config.T_M1),
        ("M2", config.gamma_2, config.E_M2, config.T_M2),
    ):
        n_bar = bose_occupation(E, T)
        channels.append((lowering[site], gamma * (n_bar + 1.0)))
        channels.append((raising[site], gamma * n_bar))

    return ModelOperators(
        layout=layout,
        config=config,
        lowering=lowering,
        raising=raising,
        h_machine=h_machine,
        h_system=h_system,
        h_interaction=h_int,
        channels=tuple(channels),
    )


VARIANTS = ("coherent_S", "dephased_S")


def initial_state(config: ScenarioConfig, variant: str = "coherent_S") -> DensityMatrix:
    """Product initial state: thermal machine qubits, superposed system qubits.

    ``variant='dephased_S'`` replaces the system block by its fully dephased
    (diagonal) counterpart, which is the reference twin used by the
    trace-distance backflow measure.
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown initial-state variant {variant!r}; expected one of {VARIANTS}")
    config.validate()
    rho_m1 = thermal_qubit_state(config.E_M1, config.T_M1).matrix
    rho_m2 = thermal_qubit_state(config.E_M2, config.T_M2).matrix
    rho_s1 = np.outer(KET_PLUS, KET_PLUS.conj())
    rho_s2 = np.outer(KET_MINUS, KET_MINUS.conj())
    rho_s = kron(rho_s1, rho_s2)
    if variant == "dephased_S":
        rho_s = np.diag(np.diag(rho_s))
    return DensityMatrix(kron(kron(rho_m1, rho_m2), rho_s))


def dephase(rho: DensityMatrix) -> DensityMatrix:
    """Remove every computational-basis off-diagonal element."""
    return DensityMatrix(np.diag(np.diag(rho.matrix)))
