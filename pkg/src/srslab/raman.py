"""Two-photon stimulated Raman Rabi frequencies."""

from __future__ import annotations

import math
from typing import Sequence

from .atomdata import HyperfineState, SpeciesData
from .constants import E_CHARGE, A0, HBAR
from .couplings import dipole_operator
from .scattering import (
    DEFAULT_RESONANCE_FLOOR,
    LaserDrive,
    _check_floor,
    _resolve_intermediates,
    _state_index,
)

__all__ = ["raman_rabi", "raman_amplitude", "pi_time"]


def raman_amplitude(
    species: SpeciesData,
    a: HyperfineState,
    b: HyperfineState,
    drive1: LaserDrive,
    drive2: LaserDrive,
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> complex:
    """Complex two-photon coupling ``a -> b`` in rad/s (see :func:`raman_rabi`)."""
    ia = _state_index(species, a)
    ib = _state_index(species, b)
    La, Lb = a.level, b.level
    e1, e2 = drive1.polarization, drive2.polarization
    wl = drive1.omega
    wa = species.level(La).energy
    wb = species.level(Lb).energy
    acc = 0j
    for Lk in _resolve_intermediates(species, La, intermediates):
        if not (species.coupled(Lk, La) and species.coupled(Lb, Lk)):
            continue
        wk = species.level(Lk).energy
        d_lam = wk - wa - wl
        d_v = wk - wb + wl
        _check_floor({"Delta_Lambda": d_lam, "Delta_V": d_v}, resonance_floor)
        lam = dipole_operator(species, Lb, Lk, e1.conj())[ib] @ dipole_operator(species, Lk, La, e2)[:, ia]
        vee = dipole_operator(species, Lb, Lk, e1)[ib] @ dipole_operator(species, Lk, La, e2.conj())[:, ia]
        acc += lam / d_lam + vee / d_v
    return (E_CHARGE * A0) ** 2 * drive1.field * drive2.field / (4 * HBAR**2) * acc


def raman_rabi(
    species: SpeciesData,
    a: HyperfineState,
    b: HyperfineState,
    drive1: LaserDrive,
    drive2: LaserDrive,
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> float:
    """Raman Rabi frequency ``|a> -> |b>`` in rad/s.

    ``drive1`` enters conjugated in the Lambda ordering and unconjugated in
    the V ordering; ``drive2`` the other way round. Both detunings use
    ``drive1``'s frequency, the two-photon offset being negligible against
    optical detunings. Forbidden pairs give 0.
    """
    return abs(raman_amplitude(species, a, b, drive1, drive2, intermediates, resonance_floor))


def pi_time(rabi: float) -> float:
    """Duration ``pi / rabi`` of a pi pulse (s)."""
    if not rabi > 0:
        raise ValueError("pi time undefined for a non-positive Rabi frequency")
    return math.pi / rabi
