"""Mode selection with a removable quarter-wave plate, a polarization rotator
and a PBS, and the resulting homodyne quadratures.

The mode reflected to the detector is ``k = exp(i phi_w) cos(theta) a +
sin(theta) b`` with ``phi_w = pi/2`` when the quarter-wave plate is in the
path. The homodyne detector then measures ``x_{k,phi}`` at LO phase ``phi``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ModeLabel(str, enum.Enum):
    A = "a"
    B = "b"
    C = "c"  # (a + b)/sqrt2
    D = "d"  # (a - b)/sqrt2
    E = "e"  # (ia + b)/sqrt2
    F = "f"  # (ia - b)/sqrt2


class QuadraturePhase(str, enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"
    T = "t"

    @property
    def angle(self) -> float:
        return _PHASE_ANGLES[self]


_PHASE_ANGLES = {
    QuadraturePhase.X: 0.0,
    QuadraturePhase.Y: np.pi / 2,
    QuadraturePhase.Z: np.pi / 4,
    QuadraturePhase.T: -np.pi / 4,
}


@dataclass(frozen=True)
class OpticalSetting:
    quarter_wave: bool
    theta: float
    lo_phase: float | None = None


# (quarter-wave plate inserted, rotator angle). F is not part of the minimal
# scheme; (yes, -pi/4) selects exactly f = (ia - b)/sqrt2.
_SETTINGS = {
    ModeLabel.A: (False, 0.0),
    ModeLabel.B: (False, np.pi / 2),
    ModeLabel.C: (False, np.pi / 4),
    ModeLabel.D: (False, -np.pi / 4),
    ModeLabel.E: (True, np.pi / 4),
    ModeLabel.F: (True, -np.pi / 4),
}

_MINIMAL_SCHEDULE = (
    ("a", "x"), ("a", "y"), ("a", "z"), ("a", "t"),
    ("b", "x"), ("b", "y"), ("b", "z"), ("b", "t"),
    ("c", "x"), ("c", "y"), ("d", "x"), ("d", "y"),
    ("e", "x"), ("e", "y"),
)  # fmt: skip
_F_ENTRIES = (("f", "x"), ("f", "y"))


def setting_for_mode(label: ModeLabel | str) -> OpticalSetting:
    quarter_wave, theta = _SETTINGS[ModeLabel(label)]
    return OpticalSetting(quarter_wave, theta)


def selected_mode_coefficients(setting: OpticalSetting) -> tuple[complex, complex]:
    """Coefficients ``(alpha, beta)`` of the detected mode ``k = alpha a + beta b``."""
    phi_w = np.pi / 2 if setting.quarter_wave else 0.0
    return complex(np.exp(1j * phi_w) * np.cos(setting.theta)), complex(np.sin(setting.theta))


def _trig(f, angle: float) -> float:
    # exact zeros at multiples of pi/2 so q/p quadratures carry no 1e-17 residue
    val = f(angle)
    return 0.0 if abs(val) < 1e-15 else float(val)


def _phase_quadrature(psi: float) -> np.ndarray:
    return np.array([_trig(np.cos, psi), _trig(np.sin, psi)])


def quadrature_vector(label: ModeLabel | str, phase: QuadraturePhase | str) -> np.ndarray:
    """Coefficients ``v`` such that ``x_{k,phi} = v . (q_a, p_a, q_b, p_b)``.

    Uses ``x_{k,phi} = cos(theta) x_{a, phi - phi_w} + sin(theta) x_{b, phi}``.
    """
    label, phase = ModeLabel(label), QuadraturePhase(phase)
    quarter_wave, theta = _SETTINGS[label]
    phi = phase.angle
    phi_w = np.pi / 2 if quarter_wave else 0.0
    return np.concatenate(
        [_trig(np.cos, theta) * _phase_quadrature(phi - phi_w), _trig(np.sin, theta) * _phase_quadrature(phi)]
    )


def quadrature_vector_from_coefficients(alpha: complex, beta: complex, lo_phase: float) -> np.ndarray:
    """Quadrature vector of ``x_{k,phi}`` for ``k = alpha a + beta b``.

    ``x_{k,phi} = sqrt2 Re(k e^{-i phi})`` and ``a = (q_a + i p_a)/sqrt2`` give
    coefficients ``(Re g, -Im g)`` per mode with ``g = coefficient * e^{-i phi}``.
    """
    rot = np.exp(-1j * lo_phase)
    ga, gb = alpha * rot, beta * rot
    return np.array([ga.real, -ga.imag, gb.real, -gb.imag])


def token(label: ModeLabel | str, phase: QuadraturePhase | str) -> str:
    return f"{ModeLabel(label).value}:{QuadraturePhase(phase).value}"


def parse_token(tok: str) -> tuple[ModeLabel, QuadraturePhase]:
    try:
        mode, phase = tok.strip().split(":")
        return ModeLabel(mode), QuadraturePhase(phase)
    except ValueError:
        raise ValueError(f"invalid setting token {tok!r}; expected '<mode>:<phase>' like 'e:y'") from None


def measurement_schedule(include_f: bool = False) -> list[tuple[ModeLabel, QuadraturePhase]]:
    """The 14 quadratures of the minimal scheme, plus ``f:x`` and ``f:y`` if requested."""
    entries = _MINIMAL_SCHEDULE + (_F_ENTRIES if include_f else ())
    return [(ModeLabel(m), QuadraturePhase(p)) for m, p in entries]


def schedule_tokens(schedule) -> list[str]:
    return [token(m, p) for m, p in schedule]


def schedule_settings(schedule) -> list[OpticalSetting]:
    """Optical settings (wave plate, rotator, LO phase) for each schedule entry."""
    out = []
    for label, phase in schedule:
        base = setting_for_mode(label)
        out.append(OpticalSetting(base.quarter_wave, base.theta, QuadraturePhase(phase).angle))
    return out


def validate_schedule(tokens) -> bool:
    """Whether ``tokens`` is exactly a 14- or 16-entry schedule (in any order)."""
    tokens = list(tokens)
    got = set(tokens)
    if len(got) != len(tokens):
        return False
    return got in (
        set(schedule_tokens(measurement_schedule(False))),
        set(schedule_tokens(measurement_schedule(True))),
    )
