"""
    tolerances.py
    -------------
    Numerical thresholds shared by every module of the package. Each
    constant is absolute unless its comment says otherwise.
"""

# Validation of inputs:
HERMITIAN_ATOL = 1e-12  # per-element |A - A^dagger| for Hermitian operators
STATE_NORM_ATOL = 1e-12  # |<psi|psi> - 1| for pure states
STATE_TRACE_ATOL = 1e-12  # |Tr rho - 1| for density matrices
STATE_EIGENVALUE_FLOOR = -1e-10  # smallest admissible eigenvalue of a density matrix
PROJECTOR_ATOL = 1e-10  # idempotence, orthogonality and completeness of a basis
SPIN_COMMUTATOR_ATOL = 1e-10  # ||[Jx, Jy] - i Jz||_max and cyclic
SPIN_CASIMIR_ATOL = 1e-9  # ||J^2 - j(j+1)||_max
HALF_INTEGER_ATOL = 1e-12  # distance of 2j from the nearest integer

# Moment engine:
RANK_CUTOFF = 1e-10  # pseudo-inverse eigenvalue cutoff, relative to lambda_max
CONDITION_LIMIT = 1e10  # covariance matrices above this are treated as ill-conditioned
IMAGINARY_RESIDUE_ATOL = 1e-10  # tolerated imaginary part of real expectation values
PSD_FLOOR = -1e-9  # smallest admissible eigenvalue of a covariance matrix
PROBABILITY_FLOOR = 1e-12  # outcomes below this probability are masked out
MASKED_DERIVATIVE_ATOL = 1e-8  # |d_x| of a masked outcome that triggers a divergence diagnostic
SCHUR_CUTOFF = 1e-10  # a^{-1} below this fraction of Var(H) is treated as zero

# Sensitivity bounds:
COMMUTATOR_ATOL = 1e-14  # |<[X, H]>| below this makes an observable parameter-insensitive
IDENTITY_VARIANCE_ATOL = 1e-14  # variance below this marks a constant observable
ENHANCEMENT_CLAMP = 1e-9  # E in [-clamp, 0) is clamped to 0, below raises
QFI_EIGENVALUE_CUTOFF = 1e-12  # skip eigenpairs with lambda_k + lambda_l below this
HIERARCHY_RTOL = 1e-8  # F <= F + E <= F_Q checked relative to F_Q
HIERARCHY_ATOL = 1e-12  # absolute slack of the hierarchy when F_Q vanishes
CROSS_CHECK_RTOL = 1e-8  # closed-form F + E against e1^T M e1
CROSS_CHECK_MAX_CONDITION = 1e6  # cross-check only runs on covariances better conditioned than this
CROSS_CHECK_MAX_DIM = 64  # cross-check only runs up to this Hilbert-space dimension

# Clock experiment:
TAU_SCALED_MAX = 3.0  # upper end of the default tau * sqrt(j) window
TAU_POINTS = 300  # number of grid points of the default window
TAU_XTOL = 1e-7  # relative golden-section tolerance on tau * sqrt(j)
