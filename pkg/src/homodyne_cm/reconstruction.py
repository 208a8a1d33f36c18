"""Covariance-matrix reconstruction ``sigma = V - M`` from homodyne statistics.

``M`` is the outer product of the first moments ``(<x_a>, <y_a>, <x_b>, <y_b>)``.
``V`` holds raw second moments; every entry is a fixed linear combination of
the measured ``<x_k,phi^2>``, listed in :data:`VARIANCE_FORMULAS`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .gaussian import OMEGA, VACUUM_VARIANCE, symplectic_eigenvalues, williamson
from .measurement import FIRST_MOMENT_TOKENS, Dataset, MomentSet
from .optics import measurement_schedule, schedule_tokens

__all__ = [
    "MomentSet",
    "ReconstructionOptions",
    "ReconstructionResult",
    "VARIANCE_FORMULAS",
    "estimate_moment_set",
    "build_mean_matrix",
    "build_variance_matrix",
    "variance_coefficients",
    "reconstruct_covariance",
    "project_to_physical",
]

F_POLICIES = ("e_only", "average_ef")

# Upper-triangle entries of V as {token: coefficient}; indices over (q_a, p_a, q_b, p_b).
_COMMON = {
    (0, 0): {"a:x": 1.0},
    (1, 1): {"a:y": 1.0},
    (2, 2): {"b:x": 1.0},
    (3, 3): {"b:y": 1.0},
    (0, 1): {"a:z": 0.5, "a:t": -0.5},
    (2, 3): {"b:z": 0.5, "b:t": -0.5},
    (0, 2): {"c:x": 0.5, "d:x": -0.5},
    (1, 3): {"c:y": 0.5, "d:y": -0.5},
}
_E_BASED = {
    (0, 3): {"e:y": 1.0, "a:x": -0.5, "b:y": -0.5},
    (1, 2): {"a:y": 0.5, "b:x": 0.5, "e:x": -1.0},
}
_F_BASED = {
    (0, 3): {"e:y": 0.5, "f:y": -0.5},
    (1, 2): {"f:x": 0.5, "e:x": -0.5},
}


def _average(*tables):
    out = {}
    for table in tables:
        for tok, c in table.items():
            out[tok] = out.get(tok, 0.0) + c / len(tables)
    return out


VARIANCE_FORMULAS = {
    "e_only": {**_COMMON, **_E_BASED},
    "average_ef": {**_COMMON, **{k: _average(_E_BASED[k], _F_BASED[k]) for k in _E_BASED}},
    "f_only": {**_COMMON, **_F_BASED},
}


def variance_coefficients(f_policy: str = "e_only") -> dict[str, np.ndarray]:
    """Symmetric 4x4 matrices ``A_t`` with ``V = sum_t A_t <t^2>``."""
    if f_policy not in VARIANCE_FORMULAS:
        raise ValueError(f"unknown f_policy {f_policy!r}; choose one of {F_POLICIES}")
    coeffs: dict[str, np.ndarray] = {}
    for (i, j), terms in VARIANCE_FORMULAS[f_policy].items():
        for tok, c in terms.items():
            a = coeffs.setdefault(tok, np.zeros((4, 4)))
            a[i, j] += c
            if i != j:
                a[j, i] += c
    return coeffs


def _check_tokens(tokens, f_policy: str = "e_only") -> None:
    tokens = set(tokens)
    allowed = set(schedule_tokens(measurement_schedule(True)))
    missing = sorted(set(schedule_tokens(measurement_schedule(False))) - tokens)
    if missing:
        raise ValueError(f"dataset is missing required setting(s): {', '.join(missing)}")
    extra = sorted(tokens - allowed)
    if extra:
        raise ValueError(f"dataset has unknown setting(s): {', '.join(extra)}")
    f_present = tokens & {"f:x", "f:y"}
    if len(f_present) == 1:
        raise ValueError(f"dataset has {f_present.pop()} without its partner f-quadrature")
    if f_policy != "e_only" and not f_present:
        raise ValueError(f"f_policy {f_policy!r} needs the f:x and f:y settings, which the dataset lacks")


def estimate_moment_set(dataset: Dataset) -> MomentSet:
    """Sample moments of each record with their standard errors.

    Means carry ``s/sqrt(N)``; raw second moments carry
    ``sqrt((m4 - m2^2)/N)``. Records with all-identical samples are accepted
    and listed in ``MomentSet.degenerate``.
    """
    _check_tokens(dataset.tokens)
    first, second, counts, cross = {}, {}, {}, {}
    degenerate = []
    for rec in dataset.records:
        x = rec.samples
        n = x.size
        if n < 2:
            raise ValueError(f"setting {rec.token} has {n} sample(s); at least 2 are needed")
        x2 = x * x
        m1, m2 = float(x.mean()), float(x2.mean())
        m3, m4 = float((x2 * x).mean()), float((x2 * x2).mean())
        flat = bool(np.all(x == x[0]))
        if flat:
            degenerate.append(rec.token)
        se2 = 0.0 if flat else float(np.sqrt(max(m4 - m2 * m2, 0.0) / n))
        second[rec.token] = (m2, se2)
        counts[rec.token] = n
        if rec.token in FIRST_MOMENT_TOKENS:
            first[rec.token] = (m1, 0.0 if flat else float(x.std(ddof=1) / np.sqrt(n)))
            cross[rec.token] = 0.0 if flat else (m3 - m1 * m2) / n
    return MomentSet(first, second, counts, cross, dataset.config.efficiency, tuple(degenerate))


def _first_vector(ms: MomentSet) -> np.ndarray:
    try:
        return np.array([ms.first[t][0] for t in FIRST_MOMENT_TOKENS], dtype=float)
    except KeyError as exc:
        raise ValueError(f"missing first moment for setting {exc.args[0]}") from None


def build_mean_matrix(ms: MomentSet) -> np.ndarray:
    m = _first_vector(ms)
    return np.outer(m, m)


def build_variance_matrix(ms: MomentSet, f_policy: str = "e_only") -> np.ndarray:
    if f_policy not in VARIANCE_FORMULAS:
        raise ValueError(f"unknown f_policy {f_policy!r}; choose one of {F_POLICIES}")
    _check_tokens(ms.second, f_policy)
    v = np.zeros((4, 4))
    for (i, j), terms in VARIANCE_FORMULAS[f_policy].items():
        v[i, j] = sum(c * ms.second[tok][0] for tok, c in terms.items())
        v[j, i] = v[i, j]
    return v


@dataclass(frozen=True)
class ReconstructionOptions:
    f_policy: str = "e_only"
    correct_efficiency: bool = False
    project_to_physical: bool = False
    bootstrap: int = 0
    bootstrap_seed: int = 0
    physical_sigmas: float = 5.0
    physical_tol: float = 1e-9

    def __post_init__(self):
        if self.f_policy not in F_POLICIES:
            raise ValueError(f"unknown f_policy {self.f_policy!r}; choose one of {F_POLICIES}")
        if self.bootstrap < 0:
            raise ValueError("bootstrap resample count must be non-negative")


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Reconstructed matrices with entrywise standard errors.

    ``covariance`` is computed as ``variance_matrix - mean_matrix`` and
    stored as is. ``physical`` compares the smallest symplectic eigenvalue
    with 1/2 using a tolerance of ``physical_sigmas`` times its standard
    error (or ``physical_tol`` for noise-free input).
    """

    mean_matrix: np.ndarray
    variance_matrix: np.ndarray
    covariance: np.ndarray
    stderr: np.ndarray
    min_symplectic_eig: float
    min_symplectic_eig_stderr: float
    physical: bool
    options: ReconstructionOptions
    efficiency: float = 1.0
    covariance_of_entries: np.ndarray | None = None
    projected: np.ndarray | None = None
    bootstrap: dict | None = None
    degenerate: tuple = ()

    def to_dict(self) -> dict:
        out = {
            "M": self.mean_matrix.tolist(),
            "V": self.variance_matrix.tolist(),
            "sigma": self.covariance.tolist(),
            "stderr": self.stderr.tolist(),
            "min_symplectic_eig": self.min_symplectic_eig,
            "min_symplectic_eig_stderr": self.min_symplectic_eig_stderr,
            "physical": self.physical,
            "efficiency": self.efficiency,
            "options": asdict(self.options),
        }
        if self.degenerate:
            out["degenerate_settings"] = list(self.degenerate)
        if self.projected is not None:
            out["projected_sigma"] = self.projected.tolist()
        if self.bootstrap is not None:
            out["bootstrap"] = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.bootstrap.items()}
        return out


def _entry_covariance(ms: MomentSet, f_policy: str, m: np.ndarray) -> np.ndarray:
    """Delta-method covariance of the 16 flattened entries of ``V - M``.

    Records are independent; within a record the mean and second-moment
    estimators are correlated through the third moment.
    """
    coeffs = variance_coefficients(f_policy)
    cols, blocks = [], []
    for k, tok in enumerate(FIRST_MOMENT_TOKENS):
        e = np.zeros(4)
        e[k] = 1.0
        grad_m1 = -(np.outer(e, m) + np.outer(m, e)).ravel()
        grad_m2 = coeffs.get(tok, np.zeros((4, 4))).ravel()
        se1, se2 = ms.first[tok][1], ms.second[tok][1]
        c = ms.cross.get(tok, 0.0)
        cols.append(np.column_stack([grad_m1, grad_m2]))
        blocks.append(np.array([[se1**2, c], [c, se2**2]]))
    for tok, a in coeffs.items():
        if tok in FIRST_MOMENT_TOKENS:
            continue
        cols.append(a.ravel()[:, None])
        blocks.append(np.array([[ms.second[tok][1] ** 2]]))
    out = np.zeros((16, 16))
    for jac, cov in zip(cols, blocks):
        out += jac @ cov @ jac.T
    return out


def _min_nu(covs: np.ndarray) -> np.ndarray:
    ev = np.sort(np.abs(np.linalg.eigvals(1j * OMEGA @ covs)), axis=-1)
    return ev[..., 0]


def _min_nu_stderr(sigma: np.ndarray, entry_cov: np.ndarray, draws: int = 400) -> float:
    """Spread of the smallest symplectic eigenvalue under the estimator's normal law.

    Sampling is used instead of a gradient because the minimum is not
    differentiable where the two eigenvalues coincide (e.g. vacuum).
    """
    if not np.any(entry_cov):
        return 0.0
    rng = np.random.default_rng(0)
    flat = rng.multivariate_normal(sigma.ravel(), entry_cov, size=draws, method="eigh")
    mats = flat.reshape(draws, 4, 4)
    mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    return float(np.std(_min_nu(mats), ddof=1))


def _point_estimate(m: np.ndarray, second: dict, coeffs: dict) -> np.ndarray:
    v = sum(a * second[tok] for tok, a in coeffs.items())
    return v - np.outer(m, m)


def _bootstrap(dataset: Dataset, options: ReconstructionOptions, scale: float, shift: np.ndarray) -> dict:
    coeffs = variance_coefficients(options.f_policy)
    rng = np.random.default_rng(np.random.SeedSequence(options.bootstrap_seed))
    samples = {rec.token: rec.samples for rec in dataset.records if rec.token in coeffs}
    reps = np.empty((options.bootstrap, 4, 4))
    for b in range(options.bootstrap):
        first, second = np.empty(4), {}
        for tok, x in samples.items():
            xb = x[rng.integers(0, x.size, x.size)]
            second[tok] = float(np.mean(xb * xb))
            if tok in FIRST_MOMENT_TOKENS:
                first[FIRST_MOMENT_TOKENS.index(tok)] = xb.mean()
        reps[b] = (_point_estimate(first, second, coeffs) - shift) * scale
    return {
        "resamples": options.bootstrap,
        "stderr": reps.std(axis=0, ddof=1),
        "ci_low": np.percentile(reps, 2.5, axis=0),
        "ci_high": np.percentile(reps, 97.5, axis=0),
    }


def reconstruct_covariance(
    data: Dataset | MomentSet,
    options: ReconstructionOptions | None = None,
    efficiency: float | None = None,
) -> ReconstructionResult:
    """Reconstruct ``sigma = V - M`` from a dataset or a moment set.

    Args:
        data: homodyne records, or already estimated moments
        options: estimator options; defaults to the 14-quadrature e-only formulas
        efficiency: detection efficiency used by ``correct_efficiency``;
            defaults to the value recorded with the data

    Returns:
        ReconstructionResult
    """
    options = options or ReconstructionOptions()
    ms = estimate_moment_set(data) if isinstance(data, Dataset) else data
    eta = ms.efficiency if efficiency is None else efficiency
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"efficiency must lie in (0, 1], got {eta}")

    m = _first_vector(ms)
    mean_matrix = build_mean_matrix(ms)
    variance_matrix = build_variance_matrix(ms, options.f_policy)
    entry_cov = _entry_covariance(ms, options.f_policy, m)

    scale, shift = 1.0, np.zeros((4, 4))
    if options.correct_efficiency and eta != 1.0:
        # pure loss: V -> eta V + (1 - eta)/2 I, M -> eta M
        scale, shift = 1.0 / eta, 0.5 * (1.0 - eta) * np.eye(4)
        mean_matrix = mean_matrix * scale
        variance_matrix = (variance_matrix - shift) * scale
        entry_cov = entry_cov * scale**2

    sigma = variance_matrix - mean_matrix
    stderr = np.sqrt(np.clip(np.diag(entry_cov), 0.0, None)).reshape(4, 4)

    try:
        nu_min = float(symplectic_eigenvalues(sigma)[0])
    except ValueError:
        nu_min = 0.0
    nu_se = _min_nu_stderr(sigma, entry_cov)
    tol = max(options.physical_tol, options.physical_sigmas * nu_se)
    physical = bool(nu_min >= VACUUM_VARIANCE - tol)

    projected = project_to_physical(sigma) if options.project_to_physical else None
    boot = None
    if options.bootstrap:
        if not isinstance(data, Dataset):
            raise ValueError("bootstrap needs the raw dataset, not a moment set")
        boot = _bootstrap(data, options, scale, shift)

    return ReconstructionResult(
        mean_matrix=mean_matrix,
        variance_matrix=variance_matrix,
        covariance=sigma,
        stderr=stderr,
        min_symplectic_eig=nu_min,
        min_symplectic_eig_stderr=nu_se,
        physical=physical,
        options=options,
        efficiency=float(eta),
        covariance_of_entries=entry_cov,
        projected=projected,
        bootstrap=boot,
        degenerate=ms.degenerate,
    )


def project_to_physical(cov) -> np.ndarray:
    """Raise symplectic eigenvalues below 1/2 up to 1/2, keeping the symplectic frame.

    Raises ``ValueError`` if ``cov`` is not positive definite.
    """
    cov = np.asarray(cov, dtype=float)
    nu, s = williamson(cov)
    if nu[0] >= VACUUM_VARIANCE:
        return cov
    clamped = np.repeat(np.maximum(nu, VACUUM_VARIANCE), 2)
    out = s.T @ np.diag(clamped) @ s
    return 0.5 * (out + out.T)
