"""Dense complex linear algebra for small Hilbert spaces.

Everything here works on plain ``numpy`` arrays of complex128; the only
domain type is :class:`DensityMatrix`, a validated, immutable wrapper.
Dimensions stay tiny (at most 256 for the vectorized generator), so all
routines are dense and eigendecomposition-based.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from . import tolerances

__all__ = [
    "DensityMatrix",
    "dagger",
    "kron",
    "matrices_close",
    "partial_trace",
    "partial_trace_array",
    "hermitian_eig",
    "trace_distance",
    "von_neumann_entropy",
    "entropy_stack",
    "entropy_of_probabilities",
]


def _as_matrix(obj) -> np.ndarray:
    """Unwrap a DensityMatrix or coerce array-likes to a complex 2-d array."""
    if isinstance(obj, DensityMatrix):
        return obj.matrix
    m = np.asarray(obj, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {m.shape}")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(np.asarray(m)).T


def kron(a, b) -> np.ndarray:
    """Kronecker product of two complex matrices."""
    return np.kron(_as_matrix(a), _as_matrix(b))


def matrices_close(a, b, atol: float) -> bool:
    """Elementwise equality up to an explicit absolute tolerance."""
    return bool(np.max(np.abs(_as_matrix(a) - _as_matrix(b)), initial=0.0) <= atol)


class DensityMatrix:
    """A validated density operator.

    Construction enforces unit trace, Hermiticity and positive
    semidefiniteness up to the package tolerances; the stored array is
    frozen so instances can be shared freely between threads.
    """

    __slots__ = ("matrix", "dim")

    def __init__(self, matrix):
        m = np.array(_as_matrix(matrix), dtype=complex)
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        tr = m.trace()
        if abs(tr - 1.0) > tolerances.TRACE_ATOL:
            raise ValueError(f"density matrix trace {tr} deviates from 1 beyond {tolerances.TRACE_ATOL}")
        herm_dev = np.max(np.abs(m - dagger(m)), initial=0.0)
        if herm_dev > tolerances.HERMITICITY_ATOL:
            raise ValueError(f"density matrix is non-Hermitian: max deviation {herm_dev:.3e}")
        smallest = float(np.linalg.eigvalsh(m)[0])
        if smallest < -tolerances.PSD_EIG_ATOL:
            raise ValueError(f"density matrix has negative eigenvalue {smallest:.3e}")
        m.setflags(write=False)
        self.matrix = m
        self.dim = m.shape[0]

    def isclose(self, other, atol: float) -> bool:
        """Equality up to an explicit absolute tolerance."""
        return matrices_close(self, other, atol)

    def eigenvalues(self) -> np.ndarray:
        """Real spectrum, ascending."""
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def __repr__(self) -> str:  # pragma: no cover
        return f"DensityMatrix(dim={self.dim})"


def partial_trace_array(rho, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace as a raw array; ``keep`` lists subsystem indices to retain.

    The result orders the kept subsystems as they appear in ``dims``.
    """
    m = _as_matrix(rho)
    dims = tuple(int(d) for d in dims)
    total = math.prod(dims)
    if m.shape != (total, total):
        raise ValueError(f"matrix of shape {m.shape} does not match subsystem dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ValueError(f"keep set {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    reshaped = m.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # Trace highest axes first so earlier axis numbers stay valid.
    offset = n
    for idx in sorted(traced, reverse=True):
        reshaped = np.trace(reshaped, axis1=idx, axis2=idx + offset)
        offset -= 1
    kept_dim = math.prod(dims[k] for k in keep)
    return np.ascontiguousarray(reshaped.reshape(kept_dim, kept_dim))


def partial_trace(rho: DensityMatrix, dims: Sequence[int], keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on the kept subsystems, in layout order."""
    reduced = partial_trace_array(rho, dims, keep)
    tr = reduced.trace()
    if abs(tr - np.asarray(_as_matrix(rho)).trace()) > tolerances.PARTIAL_TRACE_ATOL:
        raise ValueError(f"partial trace changed the trace by more than {tolerances.PARTIAL_TRACE_ATOL}")
    return DensityMatrix(reduced)


def partial_trace_stack(states: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace applied to a stack of matrices of shape (n, D, D)."""
    dims = tuple(int(d) for d in dims)
    keep = sorted(set(int(k) for k in keep))
    n_sub = len(dims)
    stacked = np.asarray(states).reshape((-1,) + dims + dims)
    # einsum subscripts: batch axis plus one letter per ket/bra subsystem axis;
    # traced subsystems share a letter between ket and bra.
    letters = "abcdefghijklmnop"
    ket = list(letters[:n_sub])
    bra = list(letters[n_sub : 2 * n_sub])
    for i in range(n_sub):
        if i not in keep:
            bra[i] = ket[i]
    out = [ket[i] for i in keep] + [bra[i] for i in keep]
    spec = "z" + "".join(ket) + "".join(bra) + "->z" + "".join(out)
    kept_dim = math.prod(dims[k] for k in keep)
    return np.einsum(spec, stacked).reshape(-1, kept_dim, kept_dim)


def hermitian_eig(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns eigenvalues ascending and the unitary of eigenvectors as
    columns; rejects inputs that are not Hermitian to within tolerance.
    """
    m = _as_matrix(h)
    dev = np.max(np.abs(m - dagger(m)), initial=0.0)
    if dev > tolerances.EIG_HERMITIAN_INPUT_ATOL:
        raise ValueError(f"matrix is not Hermitian: max |h - h^dag| = {dev:.3e}")
    return np.linalg.eigh(m)


def trace_distance(a, b) -> float:
    """Half the trace norm of the difference of two states."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.shape != mb.shape:
        raise ValueError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    diff = ma - mb
    eigs = np.linalg.eigvalsh((diff + dagger(diff)) / 2.0)
    return float(0.5 * np.sum(np.abs(eigs)))


def entropy_of_probabilities(p: np.ndarray, log_base: float = 2.0) -> float:
    """Shannon entropy of a probability vector, clipping tiny/negative weights."""
    p = np.asarray(p, dtype=float)
    p = p[p > tolerances.EIG_CLIP_FLOOR]
    if p.size == 0:
        return 0.0
    s = float(-np.sum(p * np.log(p)) / math.log(log_base))
    return max(s, 0.0)


def von_neumann_entropy(rho, log_base: float = 2.0) -> float:
    """Spectral entropy of a state; eigenvalues below the clip floor drop out."""
    eigs = np.linalg.eigvalsh(_as_matrix(rho))
    return entropy_of_probabilities(eigs, log_base)


def entropy_stack(states: np.ndarray, log_base: float = 2.0) -> np.ndarray:
    """Spectral entropies of a stack of states, shape (n, d, d) -> (n,)."""
    eigs = np.linalg.eigvalsh(np.asarray(states))
    weighted = np.where(eigs > tolerances.EIG_CLIP_FLOOR,
                        eigs * np.log(np.where(eigs > tolerances.EIG_CLIP_FLOOR, eigs, 1.0)), 0.0)
    return np.maximum(-weighted.sum(axis=1) / math.log(log_base), 0.0)
