"""Atomic structure data: fine-structure levels, reduced dipoles, hyperfine states.

Species files are plain text::

    # comment
    [meta]
    name Ba137+
    I 3/2
    mass_amu 136.905827
    [levels]
    # label  L  J    energy      unit   [lifetime_s]
    6S1/2    0  1/2  0.0         invcm
    6P3/2    1  3/2  21952.404   invcm  6.3e-9
    [dipoles]
    # lower  upper  value_ea0  [sign]
    6S1/2    6P3/2  4.7017     +1

Energies are converted once, on load, to angular frequencies (rad/s)
relative to the ground level. Reduced dipoles are stored as
``<J_upper||r||J_lower>`` in units of e*a0 (Edmonds normalization, the
Wigner-Eckart theorem written with a 3-j symbol). The reverse element is
``<J_lower||r||J_upper> = (-1)**(J_lower - J_upper) <J_upper||r||J_lower>``.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from importlib import resources
from pathlib import Path

from .constants import C, TWO_PI

__all__ = [
    "FineLevel",
    "ReducedDipole",
    "SpeciesData",
    "HyperfineState",
    "SpeciesFileError",
    "UnknownLevelError",
    "load_species",
    "resolve_species",
    "enumerate_hyperfine",
    "transition_frequency",
    "parse_half_integer",
    "parse_state",
    "format_state",
    "wavelength_to_omega",
    "omega_to_wavelength",
    "radiative_lifetime",
]


class SpeciesFileError(ValueError):
    """Malformed or inconsistent species file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class UnknownLevelError(KeyError):
    def __str__(self):
        return f"unknown level {self.args[0]!r}"


def parse_half_integer(text) -> Fraction:
    """Parse ``"5/2"``, ``"2"`` or a number into a half-integer ``Fraction``."""
    try:
        v = Fraction(str(text).strip()) if not isinstance(text, Fraction) else text
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"not a half-integer: {text!r}") from None
    if (2 * v).denominator != 1:
        raise ValueError(f"not a half-integer: {text!r}")
    return v


def _fmt_half(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class FineLevel:
    label: str
    L: int
    J: Fraction
    energy: float  # rad/s above the ground level
    lifetime: float | None = None


@dataclass(frozen=True)
class ReducedDipole:
    lower: str
    upper: str
    value: float  # <J_upper||r||J_lower>, e*a0, sign included


@dataclass(frozen=True, order=True)
class HyperfineState:
    level: str
    F: Fraction
    mF: Fraction

    def __post_init__(self):
        object.__setattr__(self, "F", parse_half_integer(self.F))
        object.__setattr__(self, "mF", parse_half_integer(self.mF))
        if abs(self.mF) > self.F or (self.F - self.mF).denominator != 1:
            raise ValueError(f"invalid projection mF={self.mF} for F={self.F}")

    def __str__(self):
        return format_state(self)


@dataclass(frozen=True, eq=False)
class SpeciesData:
    """Immutable atomic data set."""

    name: str
    I: Fraction
    mass_amu: float
    levels: tuple[FineLevel, ...]
    dipoles: tuple[ReducedDipole, ...]
    _by_label: dict = field(init=False, repr=False, compare=False)
    _dip: dict = field(init=False, repr=False, compare=False)
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_label", {lv.label: lv for lv in self.levels})
        dip = {}
        for d in self.dipoles:
            dip[(d.upper, d.lower)] = d.value
            ju, jl = self._by_label[d.upper].J, self._by_label[d.lower].J
            phase = -1.0 if int(jl - ju) % 2 else 1.0
            dip[(d.lower, d.upper)] = phase * d.value
        object.__setattr__(self, "_dip", dip)
        object.__setattr__(self, "_hash", hash(self._key()))

    def _key(self):
        return (self.name, self.I, self.mass_amu, self.levels, self.dipoles)

    def level(self, label: str) -> FineLevel:
        try:
            return self._by_label[label]
        except KeyError:
            raise UnknownLevelError(label) from None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lv.label for lv in self.levels)

    def reduced(self, bra: str, ket: str) -> float:
        """``<J_bra||r||J_ket>`` in e*a0; 0 if no dipole connects the levels."""
        self.level(bra)
        self.level(ket)
        return self._dip.get((bra, ket), 0.0)

    def coupled(self, a: str, b: str) -> bool:
        return (a, b) in self._dip

    def manifold(self, L: int, J) -> str:
        """Label of the level with given L and J (first match by energy)."""
        J = parse_half_integer(J)
        for lv in sorted(self.levels, key=lambda x: x.energy):
            if lv.L == L and lv.J == J:
                return lv.label
        raise UnknownLevelError(f"L={L}, J={J}")

    @cached_property
    def ground(self) -> str:
        return min(self.levels, key=lambda x: x.energy).label

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, SpeciesData):
            return NotImplemented
        return self._hash == other._hash and self._key() == other._key()


# ---------------------------------------------------------------------------
# loading

_UNITS = {
    "invcm": lambda v: TWO_PI * C * 100.0 * v,
    "THz": lambda v: TWO_PI * 1e12 * v,
    "rad_s": lambda v: v,
}


def _check_dipole(levels: dict, lower: str, upper: str, line: int | None):
    for lab in (lower, upper):
        if lab not in levels:
            raise SpeciesFileError(f"dipole references unknown level {lab!r}", line)
    lo, up = levels[lower], levels[upper]
    if abs(lo.J - up.J) > 1 or abs(lo.L - up.L) != 1:
        raise SpeciesFileError(
            f"dipole pair ({lower!r}, {upper!r}) violates E1 selection rules "
            f"(dJ={up.J - lo.J}, dL={up.L - lo.L})",
            line,
        )
    if not up.energy > lo.energy:
        raise SpeciesFileError(f"dipole pair ({lower!r}, {upper!r}): upper level is not above lower", line)


def _build(name, I, mass, levels, dipoles, dip_lines=None) -> SpeciesData:
    if I is None:
        raise SpeciesFileError("[meta] must define nuclear spin I")
    if mass is None:
        raise SpeciesFileError("[meta] must define mass_amu")
    if I < 0:
        raise SpeciesFileError(f"nuclear spin must be >= 0, got {I}")
    if not levels:
        raise SpeciesFileError("no levels defined")
    by = {}
    for lv in levels:
        if lv.label in by:
            raise SpeciesFileError(f"duplicate level label {lv.label!r}")
        if lv.J < 0:
            raise SpeciesFileError(f"level {lv.label!r} has negative J")
        by[lv.label] = lv
    if min(lv.energy for lv in levels) != 0.0:
        raise SpeciesFileError("ground level at energy 0 is missing")
    if any(lv.energy < 0 for lv in levels):
        raise SpeciesFileError("energies must be measured upward from the ground level")
    seen = set()
    for n, d in enumerate(dipoles):
        line = dip_lines[n] if dip_lines else None
        _check_dipole(by, d.lower, d.upper, line)
        key = frozenset((d.lower, d.upper))
        if key in seen:
            raise SpeciesFileError(f"dipole pair ({d.lower!r}, {d.upper!r}) listed twice", line)
        seen.add(key)
        if not abs(d.value) > 0:
            raise SpeciesFileError(f"dipole ({d.lower!r}, {d.upper!r}) must be nonzero", line)
    return SpeciesData(name, I, float(mass), tuple(levels), tuple(dipoles))


def load_species(path) -> SpeciesData:
    """Parse and validate a species file."""
    path = Path(path)
    text = path.read_text()
    section = None
    name, I, mass = path.stem, None, None
    levels, dipoles, dip_lines = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.fullmatch(r"\[(\w+)\]", line)
        if m:
            section = m.group(1)
            if section not in ("meta", "levels", "dipoles"):
                raise SpeciesFileError(f"unknown section [{section}]", lineno)
            continue
        tok = line.split()
        try:
            if section == "meta":
                if len(tok) != 2:
                    raise SpeciesFileError("meta records are 'key value'", lineno)
                key, val = tok
                if key == "I":
                    I = parse_half_integer(val)
                elif key == "mass_amu":
                    mass = float(val)
                elif key == "name":
                    name = val
                else:
                    raise SpeciesFileError(f"unknown meta key {key!r}", lineno)
            elif section == "levels":
                if len(tok) == 4 and tok[3] not in _UNITS:
                    raise SpeciesFileError(f"level {tok[0]!r} is missing its unit tag", lineno)
                if len(tok) not in (5, 6):
                    raise SpeciesFileError("level records are 'label L J energy unit [lifetime_s]'", lineno)
                label, L, J, energy, unit = tok[:5]
                if unit not in _UNITS:
                    raise SpeciesFileError(f"unknown energy unit {unit!r} (expected one of {sorted(_UNITS)})", lineno)
                life = float(tok[5]) if len(tok) == 6 else None
                levels.append(
                    FineLevel(label, int(L), parse_half_integer(J), _UNITS[unit](float(energy)), life)
                )
            elif section == "dipoles":
                if len(tok) not in (3, 4):
                    raise SpeciesFileError("dipole records are 'lower upper value_ea0 [sign]'", lineno)
                sign = 1.0
                if len(tok) == 4:
                    if tok[3] not in ("+1", "1", "-1"):
                        raise SpeciesFileError(f"sign must be +1 or -1, got {tok[3]!r}", lineno)
                    sign = float(tok[3])
                dipoles.append(ReducedDipole(tok[0], tok[1], sign * abs(float(tok[2]))))
                dip_lines.append(lineno)
            else:
                raise SpeciesFileError("record outside of any section", lineno)
        except SpeciesFileError:
            raise
        except ValueError as exc:
            raise SpeciesFileError(str(exc), lineno) from None
    return _build(name, I, mass, levels, dipoles, dip_lines)


_BUILTIN = {"ba137": "ba137.species", "sr88": "sr88.species"}


def resolve_species(name_or_path) -> SpeciesData:
    """Load a species by file path or by short name (``ba137``, ``sr88``).

    Short names are looked up in ``$SRSLAB_DATA`` first, then in the
    package's bundled data directory.
    """
    p = Path(name_or_path)
    if p.suffix and p.exists():
        return load_species(p)
    key = str(name_or_path).lower()
    env = os.environ.get("SRSLAB_DATA")
    if env:
        for cand in (Path(env) / f"{key}.species", Path(env) / str(name_or_path)):
            if cand.is_file():
                return load_species(cand)
    if key in _BUILTIN:
        with resources.as_file(resources.files("srslab") / "data" / _BUILTIN[key]) as f:
            return load_species(f)
    if p.exists():
        return load_species(p)
    raise FileNotFoundError(f"species {name_or_path!r} not found")


# ---------------------------------------------------------------------------

def enumerate_hyperfine(species: SpeciesData, level: str) -> list[HyperfineState]:
    """All ``|level, F, mF>`` states, sorted by (F, mF)."""
    J = species.level(level).J
    I = species.I
    out = []
    F = abs(J - I)
    while F <= J + I:
        m = -F
        while m <= F:
            out.append(HyperfineState(level, F, m))
            m += 1
        F += 1
    return out


def transition_frequency(species: SpeciesData, a: str, b: str) -> float:
    """Signed angular frequency ``(E_b - E_a)/hbar`` in rad/s."""
    return species.level(b).energy - species.level(a).energy


_STATE_RE = re.compile(r"^\s*([^:\s]+)\s*:\s*([-+]?\d+(?:/2)?)\s*,\s*([-+]?\d+(?:/2)?)\s*$")


def parse_state(text: str, species: SpeciesData | None = None) -> HyperfineState:
    """Parse ``LEVEL:F,m`` (e.g. ``5D5/2:1,0`` or ``4D5/2:5/2,-3/2``)."""
    m = _STATE_RE.match(text)
    if not m:
        raise ValueError(f"state must look like LEVEL:F,m, got {text!r}")
    st = HyperfineState(m.group(1), parse_half_integer(m.group(2)), parse_half_integer(m.group(3)))
    if species is not None:
        J = species.level(st.level).J
        if not abs(J - species.I) <= st.F <= J + species.I:
            raise ValueError(f"F={st.F} not allowed in {st.level} (J={J}, I={species.I})")
    return st


def format_state(s: HyperfineState) -> str:
    return f"{s.level}:{_fmt_half(s.F)},{_fmt_half(s.mF)}"


def wavelength_to_omega(wavelength_m: float) -> float:
    return TWO_PI * C / wavelength_m


def omega_to_wavelength(omega: float) -> float:
    return TWO_PI * C / omega


def radiative_lifetime(species: SpeciesData, level: str) -> float:
    """E1 radiative lifetime of ``level`` from the stored reduced dipoles (s)."""
    from .constants import EA0, EPS0, HBAR

    up = species.level(level)
    rate = 0.0
    for lv in species.levels:
        if lv.energy < up.energy and species.coupled(level, lv.label):
            w = up.energy - lv.energy
            d = species.reduced(level, lv.label) * EA0
            rate += w**3 * d**2 / (3 * math.pi * EPS0 * HBAR * C**3 * (2 * up.J + 1))
    return math.inf if rate == 0 else 1.0 / rate
