"""Purity, PPT spectrum, logarithmic negativity and EPR variance of a covariance matrix.

All functions accept estimated matrices that may be slightly unphysical; the
``physical`` flag of :func:`diagnose` reports that separately.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .gaussian import DEFAULT_TOL, is_physical, symplectic_eigenvalues

PARTIAL_TRANSPOSE = np.diag([1.0, 1.0, 1.0, -1.0])


@dataclass(frozen=True)
class StateDiagnostics:
    purity: float
    min_ppt_symplectic_eig: float
    log_negativity: float
    epr_variance: float
    physical: bool

    def to_dict(self) -> dict:
        return asdict(self)


def purity(cov) -> float:
    """``Tr[rho^2] = 1 / (4 sqrt(det cov))``."""
    det = float(np.linalg.det(np.asarray(cov, dtype=float)))
    if det <= 0:
        raise ValueError(f"covariance matrix has non-positive determinant {det:.6g}")
    return 1.0 / (4.0 * np.sqrt(det))


def ppt_min_symplectic_eig(cov) -> float:
    """Smallest symplectic eigenvalue after flipping the sign of ``p_b``.

    Values below 1/2 certify entanglement of a two-mode Gaussian state.
    """
    cov = np.asarray(cov, dtype=float)
    return float(symplectic_eigenvalues(PARTIAL_TRANSPOSE @ cov @ PARTIAL_TRANSPOSE)[0])


def log_negativity(cov) -> float:
    """``max(0, -ln(2 nu))`` with ``nu`` the smallest PPT symplectic eigenvalue (natural log)."""
    return max(0.0, -float(np.log(2.0 * ppt_min_symplectic_eig(cov))))


def epr_variance(cov) -> float:
    """``Var(q_a - q_b) + Var(p_a + p_b)``; equals 2 for vacuum."""
    s = np.asarray(cov, dtype=float)
    return float(s[0, 0] + s[2, 2] - 2 * s[0, 2] + s[1, 1] + s[3, 3] + 2 * s[1, 3])


def diagnose(cov, tol: float = DEFAULT_TOL) -> StateDiagnostics:
    nu = ppt_min_symplectic_eig(cov)
    try:
        mu = purity(cov)
    except ValueError:
        mu = float("nan")
    return StateDiagnostics(
        purity=mu,
        min_ppt_symplectic_eig=nu,
        log_negativity=max(0.0, -float(np.log(2.0 * nu))),
        epr_variance=epr_variance(cov),
        physical=is_physical(cov, tol),
    )
