"""Simulated homodyne detection of the scheduled quadratures."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .gaussian import TwoModeGaussianState, check_quadrature_vector
from .optics import (
    ModeLabel,
    QuadraturePhase,
    measurement_schedule,
    quadrature_vector,
    token,
    validate_schedule,
)

FIRST_MOMENT_TOKENS = ("a:x", "a:y", "b:x", "b:y")


@dataclass(frozen=True)
class HomodyneConfig:
    """Sample count per quadrature, overall detection efficiency and RNG seed."""

    samples_per_quadrature: int
    efficiency: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.samples_per_quadrature) != self.samples_per_quadrature or self.samples_per_quadrature < 1:
            raise ValueError("samples_per_quadrature must be a positive integer")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True, eq=False)
class QuadratureRecord:
    mode: ModeLabel
    phase: QuadraturePhase
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float).ravel()
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"record {self.token} contains non-finite samples")
        samples.setflags(write=False)
        object.__setattr__(self, "mode", ModeLabel(self.mode))
        object.__setattr__(self, "phase", QuadraturePhase(self.phase))
        object.__setattr__(self, "samples", samples)

    @property
    def token(self) -> str:
        return token(self.mode, self.phase)


@dataclass(frozen=True, eq=False)
class Dataset:
    records: tuple[QuadratureRecord, ...]
    config: HomodyneConfig
    provenance: dict = field(default_factory=lambda: {"kind": "external"})

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        toks = self.tokens
        if len(set(toks)) != len(toks):
            raise ValueError("dataset has duplicate setting tokens")

    @property
    def tokens(self) -> list[str]:
        return [r.token for r in self.records]

    def record(self, tok: str) -> QuadratureRecord:
        for r in self.records:
            if r.token == tok:
                return r
        raise KeyError(tok)

    def is_complete(self) -> bool:
        return validate_schedule(self.tokens)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.tokens == other.tokens
            and self.config == other.config
            and all(np.array_equal(a.samples, b.samples) for a, b in zip(self.records, other.records))
        )


@dataclass(frozen=True)
class MomentSet:
    """Estimated first and second moments of the scheduled quadratures.

    ``first`` maps the four tokens ``a:x, a:y, b:x, b:y`` to ``(mean, stderr)``;
    ``second`` maps every scheduled token to ``(<x^2>, stderr)``. ``cross`` holds
    the estimated covariance between the mean and second-moment estimators of
    the same record, needed for error propagation through ``M``.
    """

    first: dict
    second: dict
    counts: dict
    cross: dict = field(default_factory=dict)
    efficiency: float = 1.0
    degenerate: tuple = ()

    @property
    def tokens(self) -> list[str]:
        return list(self.second)

    def has_f(self) -> bool:
        return "f:x" in self.second and "f:y" in self.second


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator keyed by ``(seed, index)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def detected_moments(state: TwoModeGaussianState, v, efficiency: float = 1.0) -> tuple[float, float]:
    """Mean and variance of the detected quadrature after a pure-loss channel."""
    mean = np.sqrt(efficiency) * float(v @ state.mean)
    var = efficiency * float(v @ state.cov @ v) + (1.0 - efficiency) * 0.5
    return mean, var


def sample_quadrature(state: TwoModeGaussianState, v, config: HomodyneConfig, index: int = 0) -> np.ndarray:
    """Draw ``config.samples_per_quadrature`` homodyne outcomes for quadrature ``v``.

    Outcomes are i.i.d. normal with mean ``sqrt(eta) v.X`` and variance
    ``eta v^T cov v + (1 - eta)/2``. The stream is fixed by ``(config.seed, index)``.
    """
    v = check_quadrature_vector(v)
    mean, var = detected_moments(state, v, config.efficiency)
    if not var > 0:
        raise ValueError(f"non-positive quadrature variance {var:.6g}; covariance matrix is corrupt")
    rng = substream(config.seed, index)
    return mean + np.sqrt(var) * rng.standard_normal(config.samples_per_quadrature)


def run_schedule(
    state: TwoModeGaussianState,
    schedule=None,
    config: HomodyneConfig | None = None,
    workers: int = 1,
    provenance: dict | None = None,
) -> Dataset:
    """Sample every schedule entry; record ``i`` uses substream ``(seed, i)``.

    Output does not depend on ``workers``.
    """
    if schedule is None:
        schedule = measurement_schedule(False)
    if config is None:
        config = HomodyneConfig(10_000)
    schedule = [(ModeLabel(m), QuadraturePhase(p)) for m, p in schedule]
    if not validate_schedule(token(m, p) for m, p in schedule):
        raise ValueError("schedule must be the 14-entry or 16-entry quadrature schedule")

    def one(i):
        mode, phase = schedule[i]
        return QuadratureRecord(mode, phase, sample_quadrature(state, quadrature_vector(mode, phase), config, i))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, range(len(schedule))))
    else:
        records = [one(i) for i in range(len(schedule))]
    if provenance is None:
        provenance = {"kind": "state", "state": state.to_dict()}
    return Dataset(tuple(records), config, provenance)


def exact_moment_set(state: TwoModeGaussianState, schedule=None, efficiency: float = 1.0) -> MomentSet:
    """Noise-free moments of every scheduled quadrature, with zero standard errors.

    With ``efficiency < 1`` the moments are those of the detected (lossy)
    quadrature, i.e. the large-N limit of :func:`run_schedule`.
    """
    if schedule is None:
        schedule = measurement_schedule(False)
    first, second, counts = {}, {}, {}
    for mode, phase in schedule:
        tok = token(mode, phase)
        mean, var = detected_moments(state, quadrature_vector(mode, phase), efficiency)
        second[tok] = (var + mean**2, 0.0)
        counts[tok] = 0
        if tok in FIRST_MOMENT_TOKENS:
            first[tok] = (mean, 0.0)
    return MomentSet(first, second, counts, {t: 0.0 for t in first}, efficiency)
