"""AC Stark shifts and field calibration from a measured differential shift.

The shift of a state ``i`` in a field ``E cos(w t)`` is taken as

    delta_i = E**2 / (4 hbar**2) * sum_k w_ik |<i| d.eps |k>|**2 / (w_ik**2 - w**2)

with ``w_ik = (E_k - E_i)/hbar``, summed over the hyperfine states of the
intermediate levels. The matrix element enters squared; the
counter-rotating term is kept through the ``w_ik**2 - w**2`` denominator.
A positive value means the formula's sign convention, not an upward energy
shift.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .atomdata import HyperfineState, SpeciesData
from .constants import EA0, HBAR
from .couplings import dipole_operator
from .scattering import (
    DEFAULT_RESONANCE_FLOOR,
    LaserDrive,
    ResonanceError,
    _resolve_intermediates,
    _state_index,
)

__all__ = ["stark_shift", "differential_stark", "field_from_stark", "StarkResult", "CalibrationError"]


class CalibrationError(ValueError):
    pass


def stark_shift(
    species: SpeciesData,
    state: HyperfineState,
    drive: LaserDrive,
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> float:
    """AC Stark shift of ``state`` in rad/s."""
    ii = _state_index(species, state)
    Li = state.level
    wi = species.level(Li).energy
    total = 0.0
    for Lk in _resolve_intermediates(species, Li, intermediates):
        if not species.coupled(Lk, Li):
            continue
        w_ik = species.level(Lk).energy - wi
        if abs(abs(w_ik) - drive.omega) < resonance_floor:
            raise ResonanceError(
                f"drive is within the resonance floor of {Li} -> {Lk}"
            )
        col = dipole_operator(species, Lk, Li, drive.polarization)[:, ii]
        total += w_ik * float(np.sum(np.abs(col) ** 2)) / (w_ik**2 - drive.omega**2)
    return drive.field**2 / (4 * HBAR**2) * EA0**2 * total


def differential_stark(
    species: SpeciesData,
    d: HyperfineState,
    s: HyperfineState,
    drive: LaserDrive,
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> float:
    """``delta_d - delta_s`` in rad/s.

    ``intermediates`` applies to both states; ``None`` uses each state's
    own dipole-connected levels.
    """
    return stark_shift(species, d, drive, intermediates, resonance_floor) - stark_shift(
        species, s, drive, intermediates, resonance_floor
    )


class StarkResult(tuple):
    """``(delta_d, delta_s, differential)`` with named access."""

    __slots__ = ()

    def __new__(cls, delta_d: float, delta_s: float):
        return super().__new__(cls, (delta_d, delta_s, delta_d - delta_s))

    delta_d = property(lambda self: self[0])
    delta_s = property(lambda self: self[1])
    differential = property(lambda self: self[2])


def field_from_stark(
    species: SpeciesData,
    d: HyperfineState,
    s: HyperfineState,
    drive: LaserDrive,
    measured: float,
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> float:
    """Field amplitude (V/m) that reproduces a measured differential shift (rad/s).

    ``drive.field`` is ignored; only its frequency and polarization matter.
    """
    unit = differential_stark(species, d, s, drive.with_field(1.0), intermediates, resonance_floor)
    if measured == 0.0:
        return 0.0
    if unit == 0.0 or abs(unit) < 1e-300:
        raise CalibrationError("differential shift is insensitive to the field for this geometry")
    ratio = measured / unit
    if ratio < 0:
        raise CalibrationError(
            f"measured shift has the wrong sign (measured {measured:+.4g} rad/s, "
            f"predicted {unit:+.4g} rad/s per (V/m)^2)"
        )
    return math.sqrt(ratio)
