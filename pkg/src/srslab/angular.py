"""Angular-momentum algebra and beam geometry.

Wigner symbols are evaluated with the Racah sums in exact integer/rational
arithmetic and converted to float only at the end, so the alternating sums
do not lose precision. All angular momenta may be passed as ints, floats,
``Fraction`` or strings such as ``"5/2"``; internally they are doubled to
integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "wigner3j",
    "wigner6j",
    "clebsch_gordan",
    "BeamGeometry",
    "SecondBeamGeometry",
    "spherical_components",
    "spherical_basis",
    "normalize_polarization",
]


def _twice(x) -> int:
    """Return 2*x as an int, raising ValueError unless x is a half-integer."""
    if isinstance(x, str):
        x = Fraction(x)
    if isinstance(x, Fraction):
        d = 2 * x
        if d.denominator != 1:
            raise ValueError(f"{x} is not an integer or half-integer")
        return int(d)
    d = 2 * float(x)
    r = round(d)
    if abs(d - r) > 1e-9:
        raise ValueError(f"{x} is not an integer or half-integer")
    return int(r)


def _fact(n2: int) -> int:
    # n2 is twice an integer argument
    return math.factorial(n2 // 2)


def _triangle_ok(a: int, b: int, c: int) -> bool:
    # doubled arguments
    return (
        a >= 0 and b >= 0 and c >= 0
        and (a + b + c) % 2 == 0
        and abs(a - b) <= c <= a + b
    )


def _delta_sq(a: int, b: int, c: int) -> Fraction:
    """Squared triangle coefficient for doubled arguments."""
    return Fraction(
        _fact(a + b - c) * _fact(a - b + c) * _fact(-a + b + c),
        _fact(a + b + c + 2),
    )


def _signed_sqrt(sign_sq: Fraction) -> float:
    # sign_sq encodes sign(x) * x**2 exactly
    if sign_sq == 0:
        return 0.0
    mag = math.sqrt(abs(sign_sq.numerator)) / math.sqrt(sign_sq.denominator)
    if not math.isfinite(mag):
        mag = math.sqrt(float(abs(sign_sq)))
    return mag if sign_sq > 0 else -mag


@lru_cache(maxsize=None)
def _w3j(j1, j2, j3, m1, m2, m3) -> float:
    if m1 + m2 + m3 != 0:
        return 0.0
    if not _triangle_ok(j1, j2, j3):
        return 0.0
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if abs(m) > j or (j - m) % 2:
            return 0.0
    # Racah formula, all quantities doubled
    t_min = max(0, j2 - j3 - m1, j1 - j3 + m2) // 2
    t_max = min(j1 + j2 - j3, j1 - m1, j2 + m2) // 2
    s = Fraction(0)
    for t in range(t_min, t_max + 1):
        t2 = 2 * t
        den = (
            _fact(t2)
            * _fact(j3 - j2 + t2 + m1)
            * _fact(j3 - j1 + t2 - m2)
            * _fact(j1 + j2 - j3 - t2)
            * _fact(j1 - t2 - m1)
            * _fact(j2 - t2 + m2)
        )
        s += Fraction((-1) ** t, den)
    if s == 0:
        return 0.0
    pref = _delta_sq(j1, j2, j3) * (
        _fact(j1 + m1) * _fact(j1 - m1) * _fact(j2 + m2)
        * _fact(j2 - m2) * _fact(j3 + m3) * _fact(j3 - m3)
    )
    phase = -1 if ((j1 - j2 - m3) // 2) % 2 else 1
    val = pref * s * s
    return phase * _signed_sqrt(val if s > 0 else -val)


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3-j symbol ``(j1 j2 j3; m1 m2 m3)``.

    Returns 0 whenever the triangle condition, the projection sum rule or
    ``|m| <= j`` fails. Raises ``ValueError`` for arguments that are not
    integers or half-integers.
    """
    args = tuple(_twice(x) for x in (j1, j2, j3, m1, m2, m3))
    return _w3j(*args)


@lru_cache(maxsize=None)
def _w6j(a, b, c, d, e, f) -> float:
    triads = ((a, b, c), (a, e, f), (d, b, f), (d, e, c))
    if not all(_triangle_ok(*t) for t in triads):
        return 0.0
    s1 = a + b + c
    s2 = a + e + f
    s3 = d + b + f
    s4 = d + e + c
    p1 = a + b + d + e
    p2 = b + c + e + f
    p3 = c + a + f + d
    t_min = max(s1, s2, s3, s4) // 2
    t_max = min(p1, p2, p3) // 2
    s = Fraction(0)
    for t in range(t_min, t_max + 1):
        t2 = 2 * t
        num = (-1) ** t * _fact(t2 + 2)
        den = (
            _fact(t2 - s1) * _fact(t2 - s2) * _fact(t2 - s3) * _fact(t2 - s4)
            * _fact(p1 - t2) * _fact(p2 - t2) * _fact(p3 - t2)
        )
        s += Fraction(num, den)
    if s == 0:
        return 0.0
    pref = _delta_sq(a, b, c) * _delta_sq(a, e, f) * _delta_sq(d, b, f) * _delta_sq(d, e, c)
    val = pref * s * s
    return _signed_sqrt(val if s > 0 else -val)


def wigner6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6-j symbol ``{j1 j2 j3; j4 j5 j6}`` (zero on any triangle violation)."""
    args = tuple(_twice(x) for x in (j1, j2, j3, j4, j5, j6))
    return _w6j(*args)


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """``<j1 m1; j2 m2 | j m>`` in the Condon-Shortley convention."""
    phase2 = _twice(j1) - _twice(j2) + _twice(m)
    sign = -1.0 if (phase2 // 2) % 2 else 1.0
    return sign * math.sqrt(_twice(j) + 1) * wigner3j(j1, j2, j, m1, m2, -Fraction(_twice(m), 2))


# ---------------------------------------------------------------------------
# polarization and beam geometry

def normalize_polarization(p, tol: float = 1e-12) -> np.ndarray:
    """Return ``p`` as a complex 3-vector, checking it has unit norm."""
    v = np.asarray(p, dtype=complex).reshape(3)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > tol:
        raise ValueError(f"polarization must have unit norm, got |p| = {n:.15g}")
    return v


def spherical_components(p) -> np.ndarray:
    """Spherical components ``(eps_-1, eps_0, eps_+1)`` of a unit polarization.

    ``eps_0 = p_z`` and ``eps_{+-1} = -+(p_x +- i p_y)/sqrt(2)``.
    """
    v = normalize_polarization(p, tol=1e-10)
    return _spherical(v)


def _spherical(v: np.ndarray) -> np.ndarray:
    # no norm check; used internally for arbitrary vectors
    x, y, z = v
    s2 = math.sqrt(2.0)
    return np.array([(x - 1j * y) / s2, z, -(x + 1j * y) / s2], dtype=complex)


def spherical_basis() -> np.ndarray:
    """Rows are the Cartesian spherical unit vectors ``e_-1, e_0, e_+1``."""
    s2 = math.sqrt(2.0)
    return np.array(
        [[1 / s2, -1j / s2, 0], [0, 0, 1], [-1 / s2, -1j / s2, 0]], dtype=complex
    )


@dataclass(frozen=True)
class BeamGeometry:
    """Beam in the x-z plane at angle ``phi`` to the field axis (z).

    ``gamma`` rotates the linear polarization away from the projection of
    the quantization axis onto the plane normal to the beam.
    """

    phi: float
    gamma: float

    @property
    def k(self) -> np.ndarray:
        return np.array([math.sin(self.phi), 0.0, math.cos(self.phi)])

    @property
    def polarization(self) -> np.ndarray:
        cg, sg = math.cos(self.gamma), math.sin(self.gamma)
        return np.array(
            [cg * math.cos(self.phi), sg, -cg * math.sin(self.phi)], dtype=complex
        )


@dataclass(frozen=True)
class SecondBeamGeometry:
    """Second Raman beam, in the y-z plane at angle ``phi`` to z."""

    phi: float
    gamma: float

    @property
    def k(self) -> np.ndarray:
        return np.array([0.0, math.sin(self.phi), math.cos(self.phi)])

    @property
    def polarization(self) -> np.ndarray:
        cg, sg = math.cos(self.gamma), math.sin(self.gamma)
        return np.array(
            [sg, cg * math.cos(self.phi), -cg * math.sin(self.phi)], dtype=complex
        )
