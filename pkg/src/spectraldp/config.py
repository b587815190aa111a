"""Centralized numerical tolerances.

Every tolerance used by the library lives here so that tests and callers
agree on a single set of defaults.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # numerical rank: sigma_i > rank_rtol * sigma_1 counts toward the rank
    rank_rtol: float = 1e-10
    # columnwise orthonormality of singular-vector matrices
    orth_tol: float = 1e-9
    # reconstruction |sum sigma_i u_i v_i^T - M|_F <= recon_rtol * |M|_F
    recon_rtol: float = 1e-7
    # projector idempotence / symmetry / trace
    projector_tol: float = 1e-8
    # symmetry validation when loading matrices from text
    sym_load_tol: float = 1e-12
    # PSD tolerance for moment matrices (smallest eigenvalue >= -psd_tol)
    psd_tol: float = 1e-7
    # booleanity / partition equalities on pseudo-distributions
    moment_eq_tol: float = 5e-6
    # Dykstra alternating projection
    dykstra_tol: float = 1e-8
    dykstra_max_iter: int = 500
    # first-order moment-SDP solver
    sdp_rel_tol: float = 1e-5
    sdp_max_iter: int = 50_000


DEFAULT_TOL = Tolerances()
