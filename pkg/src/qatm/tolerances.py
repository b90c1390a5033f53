"""Numerical tolerances shared across the package.

Everything that compares floating-point quantities reads these module
attributes at call time, so a test can tighten or relax a single constant
with ``monkeypatch.setattr`` and every caller sees it.
"""

# Density-matrix invariants.
TRACE_ATOL = 1e-9          # |tr(rho) - 1| allowed on any density matrix
HERMITICITY_ATOL = 1e-10   # max elementwise |rho - rho^dag|
PSD_EIG_ATOL = 1e-9        # smallest eigenvalue >= -PSD_EIG_ATOL

# Spectral routines.
EIG_HERMITIAN_INPUT_ATOL = 1e-8  # hermitian_eig rejects inputs further from Hermitian
EIG_CLIP_FLOOR = 1e-15           # eigenvalues below this contribute nothing to entropies

# Integrator.
TRACE_RENORM_FLOOR = 1e-12  # trace drift at or below this is left untouched
STEP_EIG_ABORT = 1e-6       # abort threshold for a negative snapshot eigenvalue

# Model validation.
RESONANCE_ATOL = 1e-12       # |(E_M2 - E_M1) - (E_S2 - E_S1)|
CYCLE_BOUNDARY_ATOL = 1e-12  # |T_M1 - (E_M1/E_M2) T_M2| for the boundary sentinel

# Measures.
PARTIAL_TRACE_ATOL = 1e-12  # trace preservation check after a partial trace
HEAT_IMAG_ATOL = 1e-10      # largest imaginary residue tolerated in a heat trace
POPULATION_FLOOR = 1e-300   # populations at or below this cannot enter a log ratio
