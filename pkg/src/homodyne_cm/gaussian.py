"""Two-mode Gaussian states in the (q_a, p_a, q_b, p_b) ordering.

Units follow ``q = (a^dag + a)/sqrt(2)``, so ``[q, p] = i`` and the vacuum
covariance matrix is ``I/2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

VACUUM_VARIANCE = 0.5
DEFAULT_TOL = 1e-9

OMEGA = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)
OMEGA.setflags(write=False)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_cov(cov) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (4, 4):
        raise ValueError(f"covariance matrix must be 4x4, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise ValueError("covariance matrix has non-finite entries")
    return cov


@dataclass(frozen=True, eq=False)
class TwoModeGaussianState:
    """Mean vector and covariance matrix of a two-mode Gaussian state.

    Construction fails if ``cov`` is not symmetric or violates the
    uncertainty principle by more than ``tol``.
    """

    mean: np.ndarray
    cov: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        if mean.shape != (4,) or not np.all(np.isfinite(mean)):
            raise ValueError("mean vector must hold exactly 4 finite reals")
        cov = _check_cov(self.cov)
        if not np.array_equal(cov, cov.T):
            # tiny float asymmetry from products like S @ cov @ S.T
            if np.max(np.abs(cov - cov.T)) > self.tol:
                raise ValueError("covariance matrix is not symmetric")
            cov = 0.5 * (cov + cov.T)
        if not is_physical(cov, self.tol):
            nu = symplectic_eigenvalues(cov)[0]
            raise ValueError(
                f"covariance matrix is unphysical: min symplectic eigenvalue {nu:.6g} < 1/2"
            )
        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))

    def __eq__(self, other):
        if not isinstance(other, TwoModeGaussianState):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.cov, other.cov)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}

    @classmethod
    def from_dict(cls, data: dict, tol: float = DEFAULT_TOL) -> "TwoModeGaussianState":
        unknown = set(data) - {"mean", "cov"}
        if unknown:
            raise ValueError(f"unknown state keys: {sorted(unknown)}")
        return cls(np.asarray(data.get("mean", np.zeros(4))), np.asarray(data["cov"]), tol)


def vacuum_state() -> TwoModeGaussianState:
    return TwoModeGaussianState(np.zeros(4), VACUUM_VARIANCE * np.eye(4))


def two_mode_squeezing_symplectic(r: float) -> np.ndarray:
    """Symplectic matrix of the two-mode squeezer with q-q correlations."""
    ch, sh = np.cosh(r), np.sinh(r)
    z = np.diag([1.0, -1.0])
    return np.block([[ch * np.eye(2), sh * z], [sh * z, ch * np.eye(2)]])


def two_mode_squeezed_state(r: float) -> TwoModeGaussianState:
    """Two-mode squeezed vacuum.

    The covariance matrix is written in closed form,
    ``cov = 1/2 [[cosh2r I, sinh2r Z], [sinh2r Z, cosh2r I]]`` with
    ``Z = diag(1, -1)``.
    """
    if not np.isfinite(r):
        raise ValueError("squeezing parameter must be finite")
    c, s = np.cosh(2 * r), np.sinh(2 * r)
    z = np.diag([1.0, -1.0])
    cov = 0.5 * np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])
    return TwoModeGaussianState(np.zeros(4), cov)


def displace(state: TwoModeGaussianState, d) -> TwoModeGaussianState:
    d = np.asarray(d, dtype=float)
    if d.shape != (4,) or not np.all(np.isfinite(d)):
        raise ValueError("displacement must hold exactly 4 finite reals")
    return TwoModeGaussianState(state.mean + d, state.cov, state.tol)


def add_thermal_noise(state: TwoModeGaussianState, nbar_a: float, nbar_b: float) -> TwoModeGaussianState:
    """Add ``nbar_a`` (``nbar_b``) thermal photons of noise to mode a (b)."""
    if nbar_a < 0 or nbar_b < 0:
        raise ValueError("mean thermal photon numbers must be non-negative")
    noise = np.diag([nbar_a, nbar_a, nbar_b, nbar_b]).astype(float)
    return TwoModeGaussianState(state.mean, state.cov + noise, state.tol)


def char_function(state: TwoModeGaussianState, lam) -> complex:
    r"""Symmetrically ordered characteristic function
    :math:`\chi(\lambda) = \exp(-\tfrac12 \lambda^T \sigma \lambda - i \lambda^T X)`.

    Args:
        state: the Gaussian state
        lam: real 4-vector ``(Re l1, Im l1, Re l2, Im l2)``
    """
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (4,) or not np.all(np.isfinite(lam)):
        raise ValueError("lambda must hold exactly 4 finite reals")
    return complex(np.exp(-0.5 * lam @ state.cov @ lam - 1j * lam @ state.mean))


def check_quadrature_vector(v, atol: float = 1e-12) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (4,):
        raise ValueError("quadrature vector must have 4 entries")
    if abs(np.linalg.norm(v) - 1.0) > atol:
        raise ValueError(f"quadrature vector is not normalized (norm {np.linalg.norm(v):.15g})")
    return v


def quadrature_moments(state: TwoModeGaussianState, v) -> tuple[float, float]:
    """Mean and variance of the quadrature ``v . (q_a, p_a, q_b, p_b)``."""
    v = check_quadrature_vector(v)
    return float(v @ state.mean), float(v @ state.cov @ v)


def symplectic_eigenvalues(cov) -> np.ndarray:
    """Symplectic eigenvalues ``(nu_1, nu_2)`` in ascending order.

    Computed as the moduli of the eigenvalues of ``i Omega cov``, which come
    in pairs ``+-nu``.
    """
    cov = _check_cov(cov)
    if abs(np.linalg.det(cov)) < 1e-300:
        raise ValueError("covariance matrix is singular")
    ev = np.sort(np.abs(np.linalg.eigvals(1j * OMEGA @ cov)))
    return ev[::2].copy()


def is_physical(cov, tol: float = DEFAULT_TOL) -> bool:
    try:
        nu = symplectic_eigenvalues(cov)
    except ValueError:
        return False
    return bool(nu[0] >= VACUUM_VARIANCE - tol and np.all(np.linalg.eigvalsh(cov) > 0))


def _sqrtm_psd(cov: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(cov)
    return (u * np.sqrt(w)) @ u.T


def williamson(cov) -> tuple[np.ndarray, np.ndarray]:
    """Williamson decomposition ``cov = S.T @ diag(nu1, nu1, nu2, nu2) @ S``.

    Args:
        cov (array): positive-definite symmetric 4x4 matrix

    Returns:
        tuple[array, array]: ``(nu, S)`` with ``nu`` ascending and ``S``
        symplectic with respect to ``OMEGA``.
    """
    cov = _check_cov(cov)
    if np.max(np.abs(cov - cov.T)) > 1e-10:
        raise ValueError("covariance matrix is not symmetric")
    cov = 0.5 * (cov + cov.T)
    if np.linalg.eigvalsh(cov)[0] <= 0:
        raise ValueError("matrix is not positive definite; Williamson decomposition undefined")

    root = _sqrtm_psd(cov)
    # root @ OMEGA @ root is antisymmetric with spectrum +-i nu; its real Schur
    # form is block-diagonal with 2x2 blocks [[0, nu], [-nu, 0]].
    t, o = schur(root @ OMEGA @ root, output="real")
    o = o.copy()
    nu = np.empty(2)
    for k in range(2):
        b = t[2 * k, 2 * k + 1]
        if b < 0:
            o[:, [2 * k, 2 * k + 1]] = o[:, [2 * k + 1, 2 * k]]
        nu[k] = abs(b)
    order = np.argsort(nu)
    perm = np.concatenate([[2 * k, 2 * k + 1] for k in order])
    o, nu = o[:, perm], nu[order]
    d = np.repeat(nu, 2)
    s_t = root @ o / np.sqrt(d)
    return nu, s_t.T


def symplectic_rotation(phi_a: float, phi_b: float) -> np.ndarray:
    """Independent phase-space rotations of modes a and b."""

    def rot(p):
        return np.array([[np.cos(p), np.sin(p)], [-np.sin(p), np.cos(p)]])

    out = np.zeros((4, 4))
    out[:2, :2] = rot(phi_a)
    out[2:, 2:] = rot(phi_b)
    return out


def single_mode_squeezing(r_a: float, r_b: float) -> np.ndarray:
    return np.diag([np.exp(-r_a), np.exp(r_a), np.exp(-r_b), np.exp(r_b)])


def beam_splitter(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.block([[c * np.eye(2), s * np.eye(2)], [-s * np.eye(2), c * np.eye(2)]])


def random_symplectic(rng: np.random.Generator, max_squeezing: float = 1.0) -> np.ndarray:
    """Random 4x4 symplectic matrix from rotations, squeezers and a beam splitter."""
    s = symplectic_rotation(*rng.uniform(0, 2 * np.pi, 2))
    s = single_mode_squeezing(*rng.uniform(-max_squeezing, max_squeezing, 2)) @ s
    s = two_mode_squeezing_symplectic(rng.uniform(-max_squeezing, max_squeezing)) @ s
    s = beam_splitter(rng.uniform(0, 2 * np.pi)) @ s
    return symplectic_rotation(*rng.uniform(0, 2 * np.pi, 2)) @ s


def random_state(
    rng: np.random.Generator,
    max_mean: float = 2.0,
    max_nbar: float = 2.0,
    max_squeezing: float = 1.0,
) -> TwoModeGaussianState:
    """Random physical state: a symplectically transformed thermal state, displaced.

    Means are uniform in ``[-max_mean, max_mean]^4``.
    """
    nu = VACUUM_VARIANCE + rng.uniform(0, max_nbar, 2)
    s = random_symplectic(rng, max_squeezing)
    cov = s @ np.diag(np.repeat(nu, 2)) @ s.T
    cov = 0.5 * (cov + cov.T)
    return TwoModeGaussianState(rng.uniform(-max_mean, max_mean, 4), cov)
