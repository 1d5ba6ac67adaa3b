"""Hyperfine-resolved electric-dipole couplings and quadrupole geometric factors."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .angular import _spherical, wigner3j, wigner6j
from .atomdata import HyperfineState, SpeciesData, enumerate_hyperfine

__all__ = [
    "dipole_me",
    "dipole_matrix",
    "dipole_operator",
    "quadrupole_geometric_factors",
]


def _me(species: SpeciesData, bra: HyperfineState, ket: HyperfineState, q: int) -> float:
    if bra.mF != ket.mF + q:
        return 0.0
    red = species.reduced(bra.level, ket.level)
    if red == 0.0 or abs(bra.F - ket.F) > 1:
        return 0.0
    I = species.I
    Jb = species.level(bra.level).J
    Jk = species.level(ket.level).J
    Fb, Fk, mb, mk = bra.F, ket.F, bra.mF, ket.mF
    phase = -1.0 if int(Fk + Jb + 1 + I + Fb - mb) % 2 else 1.0
    return (
        red
        * phase
        * math.sqrt((2 * Fk + 1) * (2 * Fb + 1))
        * wigner6j(Jb, Jk, 1, Fk, Fb, I)
        * wigner3j(Fb, 1, Fk, -mb, q, mk)
    )


def dipole_me(species: SpeciesData, bra: HyperfineState, ket: HyperfineState, q: int) -> float:
    """Spherical dipole element ``<bra| r_q |ket>`` in units of e*a0.

    Two-step Wigner-Eckart reduction: J -> F with a 6-j symbol, then the
    F-level 3-j symbol. Zero when the levels are not dipole-connected or
    a selection rule fails.
    """
    if q not in (-1, 0, 1):
        raise ValueError(f"q must be -1, 0 or +1, got {q}")
    species.level(bra.level)
    species.level(ket.level)
    return _me(species, bra, ket, q)


@lru_cache(maxsize=256)
def dipole_matrix(species: SpeciesData, bra_level: str, ket_level: str) -> np.ndarray:
    """Array ``R[q+1, b, k] = <b| r_q |k>`` over the hyperfine states of two levels.

    States are ordered as :func:`enumerate_hyperfine` returns them. The
    result is cached and read-only.
    """
    bras = enumerate_hyperfine(species, bra_level)
    kets = enumerate_hyperfine(species, ket_level)
    out = np.zeros((3, len(bras), len(kets)))
    if species.reduced(bra_level, ket_level) != 0.0:
        for b, sb in enumerate(bras):
            for k, sk in enumerate(kets):
                q = sb.mF - sk.mF
                if abs(q) <= 1:
                    out[int(q) + 1, b, k] = _me(species, sb, sk, int(q))
    out.setflags(write=False)
    return out


def dipole_operator(species: SpeciesData, bra_level: str, ket_level: str, pol) -> np.ndarray:
    """Matrix of ``<b| r . pol |k>`` (e*a0) for a Cartesian complex vector ``pol``.

    Uses ``r . u = sum_q (-1)**q r_q u_{-q}``; ``pol`` is not conjugated.
    """
    R = dipole_matrix(species, bra_level, ket_level)
    s = _spherical(np.asarray(pol, dtype=complex))  # (u_-1, u_0, u_+1)
    return -s[2] * R[0] + s[1] * R[1] - s[0] * R[2]


def quadrupole_geometric_factors(phi: float, gamma: float) -> tuple[float, float, float]:
    """Relative E2 Rabi frequencies for ``|dm| = 0, 1, 2``.

    Geometry factors for a single beam at angle ``phi`` to the field with
    polarization angle ``gamma``; only their ratios are meaningful.
    """
    cg, sg = math.cos(gamma), math.sin(gamma)
    g0 = 0.5 * abs(cg * math.sin(2 * phi))
    g1 = abs(complex(cg * math.cos(2 * phi), -sg * math.cos(phi))) / math.sqrt(6)
    g2 = abs(complex(0.5 * cg * math.sin(2 * phi), -sg * math.sin(phi))) / math.sqrt(6)
    return g0, g1, g2
