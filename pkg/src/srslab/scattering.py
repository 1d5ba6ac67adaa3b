"""Spontaneous Raman scattering rates between hyperfine states.

Two models are provided:

* :func:`srs_rate` - second-order Kramers-Heisenberg rate with Lambda, V
  and the two ladder time-orderings. Each pair of orderings is added
  coherently over the intermediate hyperfine states, the scattered photon
  frequency enters as ``omega_sc**3`` and each channel is gated by energy
  conservation.
* :func:`srs_rate_ozeri` - Lambda ordering only, intermediate states of the
  nearest manifold only, and a fixed photon frequency (the resonant
  frequency from that manifold to the final level).

Intermediate hyperfine states share their fine-structure energy; the
angular structure is kept in full.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .angular import BeamGeometry, SecondBeamGeometry, normalize_polarization, spherical_basis
from .atomdata import (
    HyperfineState,
    SpeciesData,
    enumerate_hyperfine,
    wavelength_to_omega,
)
from .constants import C, EA0, EPS0, HBAR, TWO_PI
from .couplings import dipole_operator

__all__ = [
    "LaserDrive",
    "ChannelRates",
    "ScatteringReport",
    "ResonanceError",
    "DEFAULT_RESONANCE_FLOOR",
    "default_intermediates",
    "srs_rate",
    "srs_rate_ozeri",
    "final_level_rates",
    "scattering_report",
    "total_rate",
    "final_level_rates_ozeri",
    "select_finals",
]

#: smallest allowed |detuning| in rad/s
DEFAULT_RESONANCE_FLOOR = TWO_PI * 1e9


class ResonanceError(ValueError):
    """A detuning denominator fell below the resonance floor."""


@dataclass(frozen=True)
class LaserDrive:
    """Monochromatic laser field ``E cos(w t)`` with unit polarization."""

    omega: float
    field: float
    polarization: np.ndarray = field(compare=False)

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("laser angular frequency must be positive")
        if not self.field >= 0:
            raise ValueError("field amplitude must be non-negative")
        pol = self.polarization
        if isinstance(pol, (BeamGeometry, SecondBeamGeometry)):
            pol = pol.polarization
        pol = normalize_polarization(pol, tol=1e-10)
        pol.setflags(write=False)
        object.__setattr__(self, "polarization", pol)

    @classmethod
    def from_wavelength(cls, wavelength: float, field: float, polarization) -> "LaserDrive":
        """Build a drive from a vacuum wavelength in metres."""
        return cls(wavelength_to_omega(wavelength), field, polarization)

    def with_field(self, field: float) -> "LaserDrive":
        return LaserDrive(self.omega, field, self.polarization)


@dataclass(frozen=True)
class ChannelRates:
    lambda_v: float
    ladder: float

    @property
    def total(self) -> float:
        return self.lambda_v + self.ladder


def default_intermediates(species: SpeciesData, level: str) -> tuple[str, ...]:
    """All levels dipole-connected to ``level``, in file order."""
    species.level(level)
    return tuple(lb for lb in species.labels if species.coupled(level, lb))


def _resolve_intermediates(species, level, intermediates):
    if intermediates is None:
        return default_intermediates(species, level)
    out = tuple(intermediates)
    for lb in out:
        species.level(lb)
    return out


def _prefactor(field_amp: float, omega_sc: float) -> float:
    return field_amp**2 * omega_sc**3 / (12 * math.pi * EPS0 * HBAR**3 * C**3) * EA0**4


def _check_floor(deltas: dict, floor: float):
    for name, d in deltas.items():
        if abs(d) < floor:
            raise ResonanceError(
                f"detuning {name} = 2pi x {d / TWO_PI / 1e9:.4g} GHz is inside the "
                f"resonance floor (2pi x {floor / TWO_PI / 1e9:.4g} GHz)"
            )


def _state_index(species: SpeciesData, state: HyperfineState) -> int:
    states = enumerate_hyperfine(species, state.level)
    try:
        return states.index(state)
    except ValueError:
        raise ValueError(f"{state} is not a valid hyperfine state of {species.name}") from None


def final_level_rates(
    species: SpeciesData,
    initial: HyperfineState,
    final_level: str,
    drive: LaserDrive,
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
    photon_basis: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Lambda+V and ladder rates (1/s) from ``initial`` into every state of ``final_level``.

    Returned arrays follow :func:`enumerate_hyperfine` order. ``photon_basis``
    holds the scattered-photon polarizations as rows of an orthonormal
    complex triad; the spherical basis is used by default.
    """
    ii = _state_index(species, initial)
    Li, Lf = initial.level, final_level
    ks = _resolve_intermediates(species, Li, intermediates)
    nf = len(enumerate_hyperfine(species, Lf))
    basis = spherical_basis() if photon_basis is None else np.asarray(photon_basis, dtype=complex)
    wi = species.level(Li).energy
    wf = species.level(Lf).energy
    wl = drive.omega
    eps = drive.polarization

    w_lv = wi + wl - wf  # scattered photon, Lambda and V
    w_lad = wi - wl - wf  # scattered photon, ladder
    open_lv = w_lv > 0
    open_lad = w_lad > 0

    amp_lv = np.zeros((3, nf), dtype=complex)
    amp_lad = np.zeros((3, nf), dtype=complex)
    if drive.field == 0.0 or not (open_lv or open_lad):
        return np.zeros(nf), np.zeros(nf)

    for Lk in ks:
        if not (species.coupled(Lk, Li) and species.coupled(Lf, Lk)):
            continue
        wk = species.level(Lk).energy
        d_lam = wk - wi - wl
        d_v = wk - wf + wl
        d_l1 = wk - wi + wl
        d_l2 = wk - wf - wl
        if open_lv:
            _check_floor({"Delta_Lambda": d_lam, "Delta_V": d_v}, resonance_floor)
        if open_lad:
            _check_floor({"Delta_L1": d_l1, "Delta_L2": d_l2}, resonance_floor)

        ki_eps = dipole_operator(species, Lk, Li, eps)[:, ii]
        fk_eps = dipole_operator(species, Lf, Lk, eps)
        ki_cc = dipole_operator(species, Lk, Li, eps.conj())[:, ii]
        fk_cc = dipole_operator(species, Lf, Lk, eps.conj())
        for q, u in enumerate(basis):
            fk_u = dipole_operator(species, Lf, Lk, u)
            ki_u = dipole_operator(species, Lk, Li, u)[:, ii]
            if open_lv:
                amp_lv[q] += fk_u @ ki_eps / d_lam + fk_eps @ ki_u / d_v
            if open_lad:
                amp_lad[q] += fk_u @ ki_cc / d_l1 + fk_cc @ ki_u / d_l2

    s_lv = np.sum(np.abs(amp_lv) ** 2, axis=0)
    s_lad = np.sum(np.abs(amp_lad) ** 2, axis=0)
    r_lv = _prefactor(drive.field, w_lv) * s_lv if open_lv else np.zeros(nf)
    r_lad = _prefactor(drive.field, w_lad) * s_lad if open_lad else np.zeros(nf)
    return r_lv, r_lad


def srs_rate(
    species: SpeciesData,
    initial: HyperfineState,
    final: HyperfineState,
    drive: LaserDrive,
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
    photon_basis: np.ndarray | None = None,
) -> ChannelRates:
    """Raman scattering rate ``initial -> final`` split into Lambda+V and ladder parts.

    ``initial == final`` gives the Rayleigh rate, computed identically.
    """
    jf = _state_index(species, final)
    lv, lad = final_level_rates(
        species, initial, final.level, drive, intermediates, resonance_floor, photon_basis
    )
    return ChannelRates(float(lv[jf]), float(lad[jf]))


def _nearest_intermediate(species, level, omega, ks):
    wi = species.level(level).energy
    coupled = [k for k in ks if species.coupled(k, level)]
    if not coupled:
        return None
    return min(coupled, key=lambda k: abs(species.level(k).energy - wi - omega))


def final_level_rates_ozeri(
    species: SpeciesData,
    initial: HyperfineState,
    final_level: str,
    drive: LaserDrive,
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> np.ndarray:
    """Rates (1/s) of the constant-photon-energy Lambda-only model into ``final_level``."""
    ii = _state_index(species, initial)
    Li, Lf = initial.level, final_level
    ks = _resolve_intermediates(species, Li, intermediates)
    nf = len(enumerate_hyperfine(species, Lf))
    Lk = _nearest_intermediate(species, Li, drive.omega, ks)
    if drive.field == 0.0 or Lk is None or not species.coupled(Lf, Lk):
        return np.zeros(nf)
    wk = species.level(Lk).energy
    w_ref = wk - species.level(Lf).energy
    if w_ref <= 0:
        return np.zeros(nf)
    d_lam = wk - species.level(Li).energy - drive.omega
    _check_floor({"Delta_Lambda": d_lam}, resonance_floor)
    ki_eps = dipole_operator(species, Lk, Li, drive.polarization)[:, ii]
    amp = np.array([dipole_operator(species, Lf, Lk, u) @ ki_eps / d_lam for u in spherical_basis()])
    return _prefactor(drive.field, w_ref) * np.sum(np.abs(amp) ** 2, axis=0)


def srs_rate_ozeri(
    species: SpeciesData,
    initial: HyperfineState,
    final: HyperfineState,
    drive: LaserDrive,
    intermediates: Sequence[str] | None = None,
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> float:
    """Lambda-only scattering rate with a fixed scattered-photon frequency.

    Only the intermediate level nearest to resonance with the drive is
    kept, and the photon frequency is the resonant frequency from that
    level to the final level (for D5/2 -> D5/2 in Ba+ this is the mean
    P3/2-D5/2 frequency).
    """
    jf = _state_index(species, final)
    return float(
        final_level_rates_ozeri(species, initial, final.level, drive, intermediates, resonance_floor)[jf]
    )


# ---------------------------------------------------------------------------
# reports

@dataclass(frozen=True)
class ScatteringReport:
    initial: HyperfineState
    model: str
    rows: tuple[tuple[HyperfineState, ChannelRates], ...]
    totals: dict[str, float]
    total: float

    def rate_into(self, level: str) -> float:
        return self.totals.get(level, 0.0)


def _match_manifold(species: SpeciesData, spec: str) -> list[str]:
    spec = spec.strip()
    if spec in species.labels:
        return [spec]
    hits = [lb for lb in species.labels if lb.endswith(spec)]
    if not hits:
        raise ValueError(f"selector term {spec!r} matches no level of {species.name}")
    return hits


def select_finals(
    species: SpeciesData,
    initial: HyperfineState,
    selector: str,
    intermediates: Sequence[str] | None = None,
) -> list[HyperfineState]:
    """Final states picked by a manifold selector.

    ``selector`` is ``"all"`` or a ``+``-joined list of level labels or
    label suffixes (``"S1/2+D3/2"``). A ``-non-Rayleigh`` suffix drops the
    initial state itself. ``"all"`` means every non-intermediate level,
    Rayleigh included.
    """
    sel = selector.strip()
    drop_initial = False
    if sel.endswith("-non-Rayleigh"):
        drop_initial = True
        sel = sel[: -len("-non-Rayleigh")]
    ks = set(_resolve_intermediates(species, initial.level, intermediates))
    if sel == "all":
        levels = [
            lb for lb in species.labels
            if lb not in ks and any(species.coupled(lb, k) for k in ks)
        ]
    else:
        levels = []
        for part in sel.split("+"):
            for lb in _match_manifold(species, part):
                if lb not in levels:
                    levels.append(lb)
    out = []
    for lb in levels:
        for st in enumerate_hyperfine(species, lb):
            if drop_initial and st == initial:
                continue
            out.append(st)
    return out


def scattering_report(
    species: SpeciesData,
    initial: HyperfineState,
    drive: LaserDrive,
    finals: str | Iterable[HyperfineState] = "S1/2+D3/2",
    intermediates: Sequence[str] | None = None,
    model: str = "moore",
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> ScatteringReport:
    """Per-final-state rate table with per-level and grand totals."""
    if model not in ("moore", "ozeri"):
        raise ValueError(f"model must be 'moore' or 'ozeri', got {model!r}")
    if isinstance(finals, str):
        fin = select_finals(species, initial, finals, intermediates)
    else:
        fin = list(finals)
    cache: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    rows = []
    totals: dict[str, float] = {}
    for st in fin:
        if st.level not in cache:
            if model == "moore":
                cache[st.level] = final_level_rates(
                    species, initial, st.level, drive, intermediates, resonance_floor
                )
            else:
                r = final_level_rates_ozeri(
                    species, initial, st.level, drive, intermediates, resonance_floor
                )
                cache[st.level] = (r, np.zeros_like(r))
        lv, lad = cache[st.level]
        j = _state_index(species, st)
        cr = ChannelRates(float(lv[j]), float(lad[j]))
        rows.append((st, cr))
        totals[st.level] = totals.get(st.level, 0.0) + cr.total
    total = math.fsum(cr.total for _, cr in rows)
    return ScatteringReport(initial, model, tuple(rows), totals, total)


def total_rate(
    species: SpeciesData,
    initial: HyperfineState,
    drive: LaserDrive,
    finals: str | Iterable[HyperfineState] = "S1/2+D3/2",
    intermediates: Sequence[str] | None = None,
    model: str = "moore",
    resonance_floor: float = DEFAULT_RESONANCE_FLOOR,
) -> float:
    return scattering_report(
        species, initial, drive, finals, intermediates, model, resonance_floor
    ).total
