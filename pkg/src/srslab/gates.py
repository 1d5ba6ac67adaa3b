"""Gate errors limited by spontaneous Raman scattering.

Single-qubit errors are scatter probabilities during a Raman pi pulse
(rate times ``pi/Omega``); with both Raman beams on, each beam scatters
independently and the rates add. Two-qubit Molmer-Sorensen errors are
scaled from the single-qubit error by ``4/eta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .angular import BeamGeometry, SecondBeamGeometry
from .atomdata import (
    HyperfineState,
    SpeciesData,
    enumerate_hyperfine,
)
from .constants import AMU, C, HBAR, TWO_PI
from .raman import pi_time, raman_rabi
from .scattering import (
    DEFAULT_RESONANCE_FLOOR,
    LaserDrive,
    _resolve_intermediates,
    _state_index,
    final_level_rates,
    final_level_rates_ozeri,
)

__all__ = [
    "GateError",
    "GateErrorRow",
    "BestQubit",
    "PAPER_GEOMETRY",
    "lamb_dicke",
    "ms_lamb_dicke",
    "raman_drives",
    "single_qubit_error",
    "two_qubit_error",
    "best_qubit_search",
    "detuning_sweep",
    "reference_omega",
    "gate_error_table",
]

#: Raman beam polarization angle per wavelength (nm) used for the
#: three-wavelength comparison; both beams perpendicular to the field.
PAPER_GEOMETRY = {617.0: 0.105, 674.0: 0.045, 461.0: 0.105}
TRAP_OMEGA = TWO_PI * 2e6


class GateError(ValueError):
    pass


def lamb_dicke(mass_amu: float, omega: float, delta_k: float) -> float:
    """``eta = delta_k * sqrt(hbar / (2 m omega))``."""
    if not (mass_amu > 0 and omega > 0 and delta_k > 0):
        raise ValueError("mass, trap frequency and delta_k must all be positive")
    return delta_k * math.sqrt(HBAR / (2 * mass_amu * AMU * omega))


def ms_lamb_dicke(
    species: SpeciesData, wavelength: float, trap_omega: float = TRAP_OMEGA, n_ions: int = 2
) -> float:
    """Per-ion Lamb-Dicke parameter of the centre-of-mass mode of ``n_ions`` ions.

    Counter-propagating Raman beams, ``delta_k = 2 * 2 pi / wavelength``; the
    COM mode has effective mass ``n_ions * m``.
    """
    return lamb_dicke(n_ions * species.mass_amu, trap_omega, 2 * TWO_PI / wavelength)


def raman_drives(
    wavelength: float,
    gamma1: float,
    gamma2: float | None = None,
    phi1: float = math.pi / 2,
    phi2: float = math.pi / 2,
    field: float = 1.0,
) -> tuple[LaserDrive, LaserDrive]:
    """The two Raman beams: one in the x-z plane, one in the y-z plane."""
    gamma2 = gamma1 if gamma2 is None else gamma2
    return (
        LaserDrive.from_wavelength(wavelength, field, BeamGeometry(phi1, gamma1)),
        LaserDrive.from_wavelength(wavelength, field, SecondBeamGeometry(phi2, gamma2)),
    )


def _rates(species, state, drives, levels, model, intermediates, floor):
    """Total scatter rate (summed over drives) from ``state`` into each level."""
    out = {}
    for lb in levels:
        acc = None
        for d in drives:
            if model == "moore":
                lv, lad = final_level_rates(species, state, lb, d, intermediates, floor)
                r = lv + lad
            else:
                r = final_level_rates_ozeri(species, state, lb, d, intermediates, floor)
            acc = r if acc is None else acc + r
        out[lb] = acc
    return out


def _leak_levels(species, level, intermediates):
    ks = set(_resolve_intermediates(species, level, intermediates))
    return [
        lb for lb in species.labels
        if lb not in ks and lb != level and any(species.coupled(lb, k) for k in ks)
    ]


def _state_scatter(species, state, drives, model, intermediates, floor):
    """(rate out of the qubit manifold, rate to other states of the manifold)."""
    leak = _leak_levels(species, state.level, intermediates)
    rates = _rates(species, state, drives, leak + [state.level], model, intermediates, floor)
    out = math.fsum(float(np.sum(rates[lb])) for lb in leak)
    same = rates[state.level].copy()
    same[_state_index(species, state)] = 0.0
    return out, float(np.sum(same))


def single_qubit_error(
    species: SpeciesData,
    q0: HyperfineState,
    q1: HyperfineState,
    drives: Sequence[LaserDrive],
    variant: str = "fig4",
    model: str = "moore",
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> float:
    """Scatter probability during a Raman pi pulse ``q0 <-> q1``.

    ``variant="fig4"``: scatter from ``q0`` out of the qubit manifold
    (into every other level, for Ba+ D5/2 that is S1/2 and D3/2).
    ``variant="full"``: ``(G0 + G1)/2 * tau_pi`` where each rate also
    includes Raman scatter to other states of the qubit manifold (Rayleigh
    scatter back to the same state excluded).
    """
    if variant not in ("fig4", "full"):
        raise ValueError(f"variant must be 'fig4' or 'full', got {variant!r}")
    if model not in ("moore", "ozeri"):
        raise ValueError(f"model must be 'moore' or 'ozeri', got {model!r}")
    d1, d2 = drives
    rabi = raman_rabi(species, q0, q1, d1, d2, intermediates, resonance_floor)
    if not rabi > 0:
        raise GateError(f"no Raman coupling between {q0} and {q1}")
    tau = pi_time(rabi)
    out0, same0 = _state_scatter(species, q0, drives, model, intermediates, resonance_floor)
    if variant == "fig4":
        return out0 * tau
    out1, same1 = _state_scatter(species, q1, drives, model, intermediates, resonance_floor)
    return 0.5 * (out0 + same0 + out1 + same1) * tau


def two_qubit_error(single_qubit: float, eta: float) -> float:
    """Molmer-Sorensen error ``(4/eta) * single_qubit``."""
    if not 0 < eta < 1:
        raise ValueError(f"Lamb-Dicke parameter must lie in (0, 1), got {eta}")
    if single_qubit < 0:
        raise ValueError("single-qubit error must be non-negative")
    return 4.0 / eta * single_qubit


@dataclass(frozen=True)
class BestQubit:
    q0: HyperfineState
    q1: HyperfineState
    error_full: float
    error_fig4: float
    rabi: float


def best_qubit_search(
    species: SpeciesData,
    drives: Sequence[LaserDrive],
    manifold: str,
    model: str = "moore",
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
    rel_tol: float = 1e-9,
) -> BestQubit:
    """Exhaustive search for the pair with the smallest full-variant error.

    Candidate pairs have ``|dm| <= 2`` and a Raman Rabi frequency above
    ``rel_tol`` times the largest one. Within a pair, ``q0`` is the state
    with the larger out-of-manifold scatter rate, so ``error_fig4`` is the
    worst-case labelling. Near-ties (relative ``rel_tol``) are broken by
    ``(F0, m0, F1, m1)``.
    """
    d1, d2 = drives
    states = enumerate_hyperfine(species, manifold)
    scat = {s: _state_scatter(species, s, drives, model, intermediates, resonance_floor) for s in states}
    pairs = []
    for i, a in enumerate(states):
        for b in states[i + 1:]:
            if abs(a.mF - b.mF) > 2:
                continue
            rabi = raman_rabi(species, a, b, d1, d2, intermediates, resonance_floor)
            pairs.append((a, b, rabi))
    if not pairs:
        raise GateError(f"no Raman-connectable pair in {manifold}")
    top = max(p[2] for p in pairs)
    if not top > 0:
        raise GateError(f"no Raman-connectable pair in {manifold}")
    cands = []
    for a, b, rabi in pairs:
        if rabi <= rel_tol * top:
            continue
        oa, sa = scat[a]
        ob, sb = scat[b]
        tau = pi_time(rabi)
        err = 0.5 * (oa + sa + ob + sb) * tau
        if oa < ob or (oa == ob and (b.F, b.mF) < (a.F, a.mF)):
            a, b, oa = b, a, ob
        cands.append((err, (a.F, a.mF, b.F, b.mF), a, b, oa * tau, rabi))
    if not cands:
        raise GateError(f"no Raman-connectable pair in {manifold}")
    best = min(c[0] for c in cands)
    tied = [c for c in cands if c[0] <= best * (1 + rel_tol)]
    err, _, a, b, fig4, rabi = min(tied, key=lambda c: c[1])
    return BestQubit(a, b, err, fig4, rabi)


def reference_omega(species: SpeciesData, level: str, reference: str | None = None,
                    intermediates: Sequence[str] | None = None) -> float:
    """Resonance frequency used as zero of the detuning axis (rad/s).

    Defaults to the transition from ``level`` to the closest dipole-connected
    intermediate level above it.
    """
    wi = species.level(level).energy
    if reference is None:
        ks = [k for k in _resolve_intermediates(species, level, intermediates)
              if species.coupled(k, level) and species.level(k).energy > wi]
        if not ks:
            raise ValueError(f"no intermediate level above {level}")
        reference = min(ks, key=lambda k: species.level(k).energy)
    return species.level(reference).energy - wi


def detuning_sweep(
    species: SpeciesData,
    q0: HyperfineState,
    q1: HyperfineState,
    detunings_thz: Iterable[float],
    gamma1: float,
    gamma2: float | None = None,
    phi1: float = math.pi / 2,
    phi2: float = math.pi / 2,
    reference: str | None = None,
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> list[tuple[float, float, float]]:
    """Fig4-style error vs detuning for both scattering models.

    Detuning is ``(w_laser - w_ref)/2pi`` in THz, ``w_ref`` from
    :func:`reference_omega`. The grid is sorted and de-duplicated. Rows are
    ``(detuning_THz, error_moore, error_ozeri)``.
    """
    w_ref = reference_omega(species, q0.level, reference, intermediates)
    grid = sorted(set(float(x) for x in detunings_thz))
    rows = []
    for det in grid:
        w = w_ref + TWO_PI * det * 1e12
        if not w > 0:
            raise ValueError(f"detuning {det} THz gives a non-positive laser frequency")
        drives = raman_drives(TWO_PI * C / w, gamma1, gamma2, phi1, phi2)
        rows.append((
            det,
            single_qubit_error(species, q0, q1, drives, "fig4", "moore", intermediates, resonance_floor),
            single_qubit_error(species, q0, q1, drives, "fig4", "ozeri", intermediates, resonance_floor),
        ))
    return rows


@dataclass(frozen=True)
class GateErrorRow:
    wavelength_nm: float
    eta: float
    single_qubit_fig4: float
    single_qubit_full: float
    two_qubit: float
    best_q0: HyperfineState
    best_q1: HyperfineState
    best_single_qubit_fig4: float
    best_two_qubit: float
    gate_time: float
    two_qubit_gate_time: float


def gate_error_table(
    species: SpeciesData,
    q0: HyperfineState,
    q1: HyperfineState,
    geometry: dict[float, float] | None = None,
    trap_omega: float = TRAP_OMEGA,
    n_ions: int = 2,
    reference_gate_time: float = 5e-6,
    reference_two_qubit_time: float = 50e-6,
    intermediates: Sequence[str] | None = None,
) -> list[GateErrorRow]:
    """Two-qubit SRS error table at several wavelengths.

    ``geometry`` maps wavelength (nm) to the common polarization angle of
    both beams. Gate times assume the same field at every wavelength,
    normalised so the first wavelength's single-qubit pi time equals
    ``reference_gate_time`` and its MS gate ``reference_two_qubit_time``.
    """
    geometry = PAPER_GEOMETRY if geometry is None else geometry
    rows = []
    ref = None
    for lam_nm, gamma in geometry.items():
        lam = lam_nm * 1e-9
        drives = raman_drives(lam, gamma)
        eta = ms_lamb_dicke(species, lam, trap_omega, n_ions)
        fig4 = single_qubit_error(species, q0, q1, drives, "fig4", intermediates=intermediates)
        full = single_qubit_error(species, q0, q1, drives, "full", intermediates=intermediates)
        best = best_qubit_search(species, drives, q0.level, intermediates=intermediates)
        rabi = raman_rabi(species, q0, q1, *drives, intermediates)
        if ref is None:
            ref = (rabi, eta)
        rows.append(GateErrorRow(
            wavelength_nm=lam_nm,
            eta=eta,
            single_qubit_fig4=fig4,
            single_qubit_full=full,
            two_qubit=two_qubit_error(full, eta),
            best_q0=best.q0,
            best_q1=best.q1,
            best_single_qubit_fig4=best.error_fig4,
            best_two_qubit=two_qubit_error(best.error_full, eta),
            gate_time=reference_gate_time * ref[0] / rabi,
            two_qubit_gate_time=reference_two_qubit_time * (ref[0] * ref[1]) / (rabi * eta),
        ))
    return rows
