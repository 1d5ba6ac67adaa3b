"""Command-line interface: ``srslab <command> [options]``.

Exit codes: 0 success, 2 bad flags or input files, 3 physics errors
(resonance floor, uncoupled qubit pair, failed calibration or fit).
"""

from __future__ import annotations

import argparse
import csv
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .angular import BeamGeometry, SecondBeamGeometry
from .atomdata import (
    SpeciesFileError,
    UnknownLevelError,
    format_state,
    parse_state,
    resolve_species,
)
from .constants import TWO_PI, C
from .csvio import read_rabi, read_survival, write_survival
from .expsim import SequenceConfig, campaign_srs_rate, simulate_on_off, simulate_survival
from .fitting import (
    DegenerateDataError,
    FitError,
    UnidentifiableError,
    extract_srs_rate,
    fit_exponential,
    fit_polarization_e2,
    fit_polarization_raman,
)
from .gates import (
    PAPER_GEOMETRY,
    GateError,
    best_qubit_search,
    detuning_sweep,
    gate_error_table,
    raman_drives,
    reference_omega,
)
from .lightshift import CalibrationError, field_from_stark
from .scattering import LaserDrive, ResonanceError, scattering_report

EXIT_USAGE = 2
EXIT_PHYSICS = 3

PHYSICS_ERRORS = (
    ResonanceError,
    GateError,
    CalibrationError,
    FitError,
    UnidentifiableError,
    DegenerateDataError,
)

DEFAULT_Q0 = "5D5/2:1,0"
DEFAULT_Q1 = "5D5/2:3,0"
DEFAULT_STARK_D = "5D5/2:1,1"
DEFAULT_STARK_S = "6S1/2:1,-1"

_FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "thz": 1e12}
_LEN_UNITS = {"m": 1.0, "um": 1e-6, "nm": 1e-9, "pm": 1e-12}
_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"


class UsageError(ValueError):
    pass


def parse_frequency(text: str) -> float:
    """Angular frequency in rad/s from ``617nm``, ``486.2THz``, ``2pi*20kHz``, ``1.2e15rad/s``.

    Frequencies with Hz units are cyclic and get the factor 2 pi whether or
    not the ``2pi*`` prefix is written. A bare number is rad/s. A leading
    sign is kept (for Stark shifts).
    """
    s = text.strip().replace(" ", "").lower().replace("π", "pi")
    sign = 1.0
    if s and s[0] in "+-":
        sign = -1.0 if s[0] == "-" else 1.0
        s = s[1:]
    s = re.sub(r"^(2\*?pi\*?|2pi\*)", "", s)
    m = re.fullmatch(rf"({_NUM})(rad/s|[a-z]*)", s)
    if not m:
        raise UsageError(f"cannot parse frequency {text!r}")
    val, unit = float(m.group(1)), m.group(2)
    if unit in ("", "rad/s"):
        return sign * val
    if unit in _FREQ_UNITS:
        return sign * TWO_PI * val * _FREQ_UNITS[unit]
    if unit in _LEN_UNITS:
        if sign < 0 or val <= 0:
            raise UsageError(f"wavelength must be positive: {text!r}")
        return TWO_PI * C / (val * _LEN_UNITS[unit])
    raise UsageError(f"unknown unit {unit!r} in {text!r}")


def stated_interval(text: str) -> tuple[float, float]:
    """Range of angular frequencies consistent with the digits written in ``text``.

    ``614nm`` stands for 613.5-614.5 nm, ``614.3nm`` for 614.25-614.35 nm.
    """
    s = text.strip().replace(" ", "").lower().replace("π", "pi")
    s = re.sub(r"^[+-]?(2\*?pi\*?|2pi\*)", "", s)
    m = re.match(r"(\d*)\.?(\d*)(?:e([+-]?\d+))?", s)
    dec = len(m.group(2)) if m else 0
    exp = int(m.group(3)) if m and m.group(3) else 0
    w = parse_frequency(text)
    unit = re.sub(rf"^{_NUM}", "", s)
    half = 0.5 * 10.0 ** (exp - dec)
    num = float(re.match(_NUM, s).group(0))
    lo_hi = []
    for v in (num - half, num + half):
        if v <= 0:
            lo_hi.append(0.0 if unit in _LEN_UNITS else math.inf)
            continue
        lo_hi.append(abs(parse_frequency(f"{v!r}{unit}")))
    lo, hi = sorted(lo_hi)
    return min(lo, abs(w)), max(hi, abs(w))


def _check_stated_resonance(species, level, text):
    """Refuse a laser setting whose stated precision contains a transition of ``level``."""
    lo, hi = stated_interval(text)
    wi = species.level(level).energy
    for lv in species.levels:
        if lv.label != level and species.coupled(level, lv.label):
            w = abs(lv.energy - wi)
            if lo <= w <= hi:
                raise ResonanceError(
                    f"{text} is resonant with {level} -> {lv.label} "
                    f"({TWO_PI * C / w * 1e9:.2f} nm) within its stated precision"
                )


def parse_grid(text: str) -> list[float]:
    """``start:stop:num`` (inclusive, linear) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be start:stop:num, got {text!r}")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"bad grid {text!r}") from None
        if n < 1:
            raise UsageError("grid needs at least one point")
        return list(np.linspace(a, b, n))
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None


def _state(species, text):
    try:
        st = parse_state(text, species)
        species.level(st.level)
        return st
    except (ValueError, UnknownLevelError) as exc:
        raise UsageError(str(exc)) from None


def _intermediates(args):
    if not getattr(args, "intermediates", None):
        return None
    return [x.strip() for x in args.intermediates.split(",") if x.strip()]


def _laser_omega(args, species, level):
    if args.detuning is not None:
        return reference_omega(species, level, None, _intermediates(args)) + TWO_PI * args.detuning * 1e12
    _check_stated_resonance(species, level, args.wavelength)
    return parse_frequency(args.wavelength)


def _drive(args, species, state):
    """Drive from --lambda/--detuning, --beam geometry and --field or --stark-shift."""
    omega = _laser_omega(args, species, state.level)
    if not omega > 0:
        raise UsageError("laser frequency must be positive")
    geom = (BeamGeometry if args.beam == 1 else SecondBeamGeometry)(args.phi, args.gamma)
    drive = LaserDrive(omega, 1.0, geom)
    if args.stark_shift is not None:
        d = _state(species, args.stark_pair[0])
        s = _state(species, args.stark_pair[1])
        field = field_from_stark(species, d, s, drive, parse_frequency(args.stark_shift), _intermediates(args))
    else:
        field = args.field
    return drive.with_field(field)


def _out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _fmt(x: float) -> str:
    return f"{x:.10g}"


# ---------------------------------------------------------------------------
# commands

def cmd_rate(args, species) -> int:
    state = _state(species, args.state)
    drive = _drive(args, species, state)
    models = ["moore", "ozeri"] if args.model == "both" else [args.model]
    reports = [
        scattering_report(species, state, drive, args.finals, _intermediates(args), m)
        for m in models
    ]
    f, close = _out(args.output)
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["final_level", "F", "m", "rate_lambda_v_per_s", "rate_ladder_per_s", "model"])
        for rep in reports:
            for st, ch in rep.rows:
                F, m = format_state(st).split(":")[1].split(",")
                w.writerow([st.level, F, m, _fmt(ch.lambda_v), _fmt(ch.ladder), rep.model])
    finally:
        if close:
            f.close()
    return 0


def cmd_sweep(args, species) -> int:
    q0 = _state(species, args.q0)
    q1 = _state(species, args.q1)
    grid = parse_grid(args.detunings)
    rows = detuning_sweep(
        species, q0, q1, grid, args.gamma, args.gamma2, args.phi, args.phi2,
        intermediates=_intermediates(args),
    )
    f, close = _out(args.output)
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["detuning_THz", "error_moore", "error_ozeri"])
        for det, em, eo in rows:
            w.writerow([_fmt(det), _fmt(em), _fmt(eo)])
    finally:
        if close:
            f.close()
    if args.plot:
        _plot_sweep(rows, args.plot, q0, q1)
    return 0


def _plot_sweep(rows, path, q0, q1):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    det, em, eo = (np.array(c) for c in zip(*rows))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(det, em, "-", label="Moore (4 channels)")
    ax.semilogy(det, eo, "--", label="Ozeri (nearest level)")
    ax.set_xlabel("detuning (THz)")
    ax.set_ylabel(r"scatter probability per $\pi$ pulse")
    ax.set_title(f"{format_state(q0)} <-> {format_state(q1)}", fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format=Path(path).suffix.lstrip(".") or "svg")
    plt.close(fig)


def cmd_table2(args, species) -> int:
    q0 = _state(species, args.q0)
    q1 = _state(species, args.q1)
    rows = gate_error_table(
        species, q0, q1, PAPER_GEOMETRY, parse_frequency(args.trap_frequency), args.n_ions,
        intermediates=_intermediates(args),
    )
    f, close = _out(args.output)
    try:
        w = csv.writer(f, lineterminator="\n")
        head = ["wavelength_nm", "two_qubit_error", "two_qubit_error_best_qubit"]
        if args.extended:
            head += ["eta", "single_qubit_fig4", "single_qubit_full", "best_q0", "best_q1",
                     "best_single_qubit_fig4", "gate_time_s", "two_qubit_gate_time_s"]
        w.writerow(head)
        for r in rows:
            rec = [_fmt(r.wavelength_nm), _fmt(r.two_qubit), _fmt(r.best_two_qubit)]
            if args.extended:
                rec += [_fmt(r.eta), _fmt(r.single_qubit_fig4), _fmt(r.single_qubit_full),
                        format_state(r.best_q0), format_state(r.best_q1),
                        _fmt(r.best_single_qubit_fig4), _fmt(r.gate_time), _fmt(r.two_qubit_gate_time)]
            w.writerow(rec)
    finally:
        if close:
            f.close()
    return 0


def cmd_best_qubit(args, species) -> int:
    _check_stated_resonance(species, args.manifold, args.wavelength)
    lam = TWO_PI * C / parse_frequency(args.wavelength)
    gamma = args.gamma
    if gamma is None:
        gamma = PAPER_GEOMETRY.get(round(lam * 1e9, 1), 0.105)
    drives = raman_drives(lam, gamma, args.gamma2, args.phi, args.phi2)
    best = best_qubit_search(species, drives, args.manifold, args.model, _intermediates(args))
    err = best.error_full if args.variant == "full" else best.error_fig4
    print(f"{format_state(best.q0)} {format_state(best.q1)} {err:.4g}")
    return 0


def cmd_fit(args, species) -> int:
    if args.kind == "lifetime":
        on = fit_exponential(read_survival(args.on), args.sampling)
        rows = [("rate_on", on["rate"], on.stderr["rate"]),
                ("amplitude_on", on["amplitude"], on.stderr["amplitude"])]
        if args.off:
            off = fit_exponential(read_survival(args.off), args.sampling)
            srs = extract_srs_rate(on, off)
            rows += [("rate_off", off["rate"], off.stderr["rate"]),
                     ("amplitude_off", off["amplitude"], off.stderr["amplitude"]),
                     ("srs_rate", srs.rate, srs.stderr)]
            if srs.nonphysical:
                print("warning: scattering rate is negative beyond its error", file=sys.stderr)
    elif args.kind == "e2":
        res = fit_polarization_e2(read_rabi(args.data), None if args.free_phi else args.phi)
        keys = ["gamma", "scale"] + (["phi"] if args.free_phi else [])
        rows = [(k, res[k], res.stderr[k]) for k in keys]
    else:
        lam = TWO_PI * C / parse_frequency(args.wavelength)
        res = fit_polarization_raman(read_rabi(args.data), species, lam, args.constraint, _intermediates(args))
        keys = ["gamma", "gamma2", "scale"] + (["phi", "phi2"] if args.constraint == "free" else [])
        rows = [(k, res[k], res.stderr[k]) for k in keys]
    f, close = _out(args.output)
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["parameter", "value", "stderr"])
        for k, v, e in rows:
            w.writerow([k, _fmt(v), _fmt(e)])
    finally:
        if close:
            f.close()
    return 0


def cmd_simulate(args, species) -> int:
    cfg = SequenceConfig(0.0, args.bin, args.bins, args.trials, args.seed)
    if args.rate is not None:
        curve = simulate_survival(SequenceConfig(args.rate, args.bin, args.bins, args.trials, args.seed))
        f, close = _out(args.output)
        try:
            write_survival(curve, f)
        finally:
            if close:
                f.close()
        return 0
    if not (args.on and args.off):
        raise UsageError("campaign mode needs --on and --off output files")
    if args.srs_rate is not None:
        srs = args.srs_rate
    else:
        if args.state is None or (args.wavelength is None and args.detuning is None):
            raise UsageError("give --rate, --srs-rate, or --state with --lambda/--detuning")
        state = _state(species, args.state)
        srs = campaign_srs_rate(species, state, _drive(args, species, state), _intermediates(args))
    on, off = simulate_on_off(srs, args.natural_rate, cfg)
    write_survival(on, args.on)
    write_survival(off, args.off)
    print(f"srs_rate_per_s {srs:.10g}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_drive_flags(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--lambda", dest="wavelength", metavar="FREQ",
                   help="laser wavelength or frequency: 617nm, 486THz, 2pi*486THz, rad/s; "
                        "a transition inside the written precision (614nm = 613.5-614.5 nm) is an error")
    g.add_argument("--detuning", type=float, metavar="THZ",
                   help="laser detuning in THz from the initial level's nearest upper transition")
    p.add_argument("--beam", type=int, choices=(1, 2), default=1,
                   help="beam geometry: 1 = k in the x-z plane, 2 = k in the y-z plane (default 1)")
    p.add_argument("--phi", type=float, default=math.pi / 2,
                   help="angle of k to the quantization axis, rad (default pi/2)")
    p.add_argument("--gamma", type=float, default=0.105,
                   help="polarization angle from the projected quantization axis, rad (default 0.105)")
    f = p.add_mutually_exclusive_group()
    f.add_argument("--field", type=float, default=1.0, help="field amplitude in V/m (default 1)")
    f.add_argument("--stark-shift", metavar="FREQ",
                   help="calibrate the field from this differential Stark shift, e.g. 2pi*20kHz")
    p.add_argument("--stark-pair", nargs=2, metavar=("D", "S"), default=[DEFAULT_STARK_D, DEFAULT_STARK_S],
                   help=f"states of the differential shift d - s (default {DEFAULT_STARK_D} {DEFAULT_STARK_S})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="srslab",
        description="Spontaneous Raman scattering, light shifts and gate errors for metastable-state ion qubits.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--species", default="ba137",
                    help="species name (looked up in $SRSLAB_DATA, then bundled) or file path (default ba137)")
    ap.add_argument("--intermediates", help="comma-separated intermediate levels (default: all dipole-coupled)")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("rate", help="state-resolved scattering rates (CSV)")
    p.add_argument("--state", required=True, help="initial state LEVEL:F,m, e.g. 5D5/2:1,0")
    _add_drive_flags(p)
    p.add_argument("--model", choices=("moore", "ozeri", "both"), default="moore",
                   help="scattering model (default moore)")
    p.add_argument("--finals", default="S1/2+D3/2",
                   help="final levels: '+'-joined labels or suffixes, optional '-non-Rayleigh', or 'all'")
    p.add_argument("-o", "--output", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("sweep", help="single-qubit error vs detuning for both models (CSV, optional plot)")
    p.add_argument("--q0", default=DEFAULT_Q0, help=f"qubit state |0> (default {DEFAULT_Q0})")
    p.add_argument("--q1", default=DEFAULT_Q1, help=f"qubit state |1> (default {DEFAULT_Q1})")
    p.add_argument("--detunings", default="-60:-2.5:24",
                   help="THz grid: start:stop:num or comma list; use --detunings=-60:-2.5:24 for negatives")
    p.add_argument("--gamma", type=float, default=0.105, help="beam 1 polarization angle, rad")
    p.add_argument("--gamma2", type=float, default=None, help="beam 2 polarization angle, rad (default --gamma)")
    p.add_argument("--phi", type=float, default=math.pi / 2, help="beam 1 angle to the field, rad")
    p.add_argument("--phi2", type=float, default=math.pi / 2, help="beam 2 angle to the field, rad")
    p.add_argument("-o", "--output", help="output CSV (default stdout)")
    p.add_argument("--plot", help="write a plot to this file (format from the suffix, e.g. .svg)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table2", help="two-qubit gate errors at 617, 674 and 461 nm (CSV)")
    p.add_argument("--q0", default=DEFAULT_Q0, help=f"qubit state |0> (default {DEFAULT_Q0})")
    p.add_argument("--q1", default=DEFAULT_Q1, help=f"qubit state |1> (default {DEFAULT_Q1})")
    p.add_argument("--trap-frequency", default="2pi*2MHz", help="gate mode frequency (default 2pi*2MHz)")
    p.add_argument("--n-ions", type=int, default=2, help="ions sharing the gate mode (default 2)")
    p.add_argument("--extended", action="store_true", help="add eta, single-qubit errors and gate times")
    p.add_argument("-o", "--output", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_table2)

    p = sub.add_parser("best-qubit", help="qubit pair with the smallest scattering error")
    p.add_argument("--lambda", dest="wavelength", default="617nm", help="Raman wavelength (default 617nm)")
    p.add_argument("--manifold", default="5D5/2", help="qubit level (default 5D5/2)")
    p.add_argument("--gamma", type=float, default=None,
                   help="polarization angle of both beams, rad (default: tabulated per wavelength)")
    p.add_argument("--gamma2", type=float, default=None, help="beam 2 polarization angle (default --gamma)")
    p.add_argument("--phi", type=float, default=math.pi / 2, help="beam 1 angle to the field, rad")
    p.add_argument("--phi2", type=float, default=math.pi / 2, help="beam 2 angle to the field, rad")
    p.add_argument("--model", choices=("moore", "ozeri"), default="moore")
    p.add_argument("--variant", choices=("fig4", "full"), default="fig4",
                   help="printed error: fig4 = out-of-manifold scatter from |0>; full = both states")
    p.set_defaults(func=cmd_best_qubit)

    p = sub.add_parser("fit", help="lifetime or polarization fits of measurement CSVs")
    fs = p.add_subparsers(dest="kind", required=True, metavar="KIND")
    q = fs.add_parser("lifetime", help="exponential fit; with --off also the scattering rate")
    q.add_argument("on", help="survival CSV with the scattering light on")
    q.add_argument("--off", help="survival CSV without the light (natural decay)")
    q.add_argument("--sampling", choices=("cumulative", "independent"), default="cumulative",
                   help="cumulative: same trials checked at every delay (default)")
    q.add_argument("-o", "--output", help="output CSV (default stdout)")
    q = fs.add_parser("e2", help="polarization angle from quadrupole Rabi frequencies")
    q.add_argument("data", help="Rabi CSV with channels |dm| = 0, 1, 2")
    q.add_argument("--phi", type=float, default=math.pi / 2, help="fixed beam angle, rad (default pi/2)")
    q.add_argument("--free-phi", action="store_true", help="fit the beam angle too")
    q.add_argument("-o", "--output", help="output CSV (default stdout)")
    q = fs.add_parser("raman", help="Raman beam angles from Raman Rabi frequencies")
    q.add_argument("data", help="Rabi CSV with channels A>B")
    q.add_argument("--lambda", dest="wavelength", required=True, help="Raman wavelength")
    q.add_argument("--constraint", choices=("perpendicular", "free"), default="perpendicular",
                   help="perpendicular: both beams at pi/2 to the field (default); free: fit the beam angles")
    q.add_argument("-o", "--output", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="Monte-Carlo survival curves (CSV)")
    p.add_argument("--rate", type=float, help="single curve with this total decay rate, 1/s")
    p.add_argument("--srs-rate", type=float, help="campaign: scattering rate, 1/s")
    p.add_argument("--state", help="campaign: initial state; the scattering rate is computed")
    _add_drive_flags(p, required=False)
    p.add_argument("--natural-rate", type=float, default=1 / 30.14,
                   help="campaign: natural decay rate, 1/s (default 1/30.14)")
    p.add_argument("--bin", type=float, default=0.1, help="interrogation interval, s (default 0.1)")
    p.add_argument("--bins", type=int, default=50, help="number of interrogations (default 50)")
    p.add_argument("--trials", type=int, default=1000, help="repetitions (default 1000)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("-o", "--output", help="single-curve output CSV (default stdout)")
    p.add_argument("--on", help="campaign: output CSV with the light on")
    p.add_argument("--off", help="campaign: output CSV with the light off")
    p.set_defaults(func=cmd_simulate)
    return ap


# flags whose values may start with "-" without being plain numbers
# ("-60:-2.5:24", "-2pi*20kHz"); argparse would read them as options
_SIGNED_VALUE_FLAGS = ("--detunings", "--detuning", "--stark-shift")


def _attach_signed_values(argv):
    out = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a in _SIGNED_VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and not argv[i + 1].startswith("--"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
            continue
        out.append(a)
        i += 1
    return out


def main(argv=None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = ap.parse_args(_attach_signed_values(argv))
    try:
        species = resolve_species(args.species)
        return args.func(args, species)
    except PHYSICS_ERRORS as exc:
        print(f"srslab: error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (UsageError, SpeciesFileError, UnknownLevelError, FileNotFoundError, ValueError) as exc:
        print(f"srslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
