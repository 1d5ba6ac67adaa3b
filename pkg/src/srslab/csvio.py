"""CSV readers and writers for survival curves and Rabi-frequency measurements.

Survival curves: header ``delay_s,trials,survivors``.
Rabi measurements: header ``channel,rabi_rad_s,sigma_rad_s``; ``channel`` is
``|dm|`` for quadrupole data or ``A>B`` with two ``LEVEL:F,m`` states for
Raman data. An empty sigma means unknown.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

import numpy as np

from .atomdata import format_state, parse_state
from .fitting import SurvivalCurve

__all__ = [
    "SURVIVAL_HEADER",
    "RABI_HEADER",
    "write_survival",
    "read_survival",
    "write_rabi",
    "read_rabi",
    "format_channel",
    "parse_channel",
]

SURVIVAL_HEADER = ("delay_s", "trials", "survivors")
RABI_HEADER = ("channel", "rabi_rad_s", "sigma_rad_s")


def _open_text(target, mode):
    if isinstance(target, (str, Path)):
        return open(target, mode, newline=""), True
    return target, False


def _num(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def write_survival(curve: SurvivalCurve, target) -> None:
    f, close = _open_text(target, "w")
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SURVIVAL_HEADER)
        for d, n, s in zip(curve.delays, curve.trials, curve.survivors):
            w.writerow((repr(float(d)), _num(n), _num(s)))
    finally:
        if close:
            f.close()


def _rows(source, header):
    f, close = _open_text(source, "r")
    try:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(h.strip() for h in reader.fieldnames) != header:
            raise ValueError(f"expected header {','.join(header)}, got {reader.fieldnames}")
        return [(i + 2, {k.strip(): (v or "").strip() for k, v in r.items()}) for i, r in enumerate(reader)]
    finally:
        if close:
            f.close()


def read_survival(source) -> SurvivalCurve:
    rows = _rows(source, SURVIVAL_HEADER)
    try:
        data = np.array([[float(r[k]) for k in SURVIVAL_HEADER] for _, r in rows], dtype=float)
    except ValueError as exc:
        raise ValueError(f"non-numeric survival record: {exc}") from None
    if data.size == 0:
        raise ValueError("survival file has no records")
    return SurvivalCurve(data[:, 0], data[:, 1], data[:, 2])


def format_channel(channel) -> str:
    if isinstance(channel, tuple):
        a, b = channel
        return f"{format_state(a)}>{format_state(b)}"
    return str(int(channel))


def parse_channel(text: str):
    """``"2"`` -> 2; ``"5D5/2:4,-3>5D5/2:3,-3"`` -> pair of states."""
    if ">" in text:
        a, b = text.split(">", 1)
        return parse_state(a.strip()), parse_state(b.strip())
    return int(text)


def write_rabi(records: Iterable, target) -> None:
    """Write ``(channel, rabi[, sigma])`` records."""
    f, close = _open_text(target, "w")
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(RABI_HEADER)
        for rec in records:
            sigma = rec[2] if len(rec) > 2 and rec[2] is not None else ""
            w.writerow((format_channel(rec[0]), repr(float(rec[1])), sigma if sigma == "" else repr(float(sigma))))
    finally:
        if close:
            f.close()


def read_rabi(source) -> list[tuple]:
    """Records ``(channel, rabi)`` or ``(channel, rabi, sigma)``."""
    out = []
    for line, r in _rows(source, RABI_HEADER):
        try:
            ch = parse_channel(r["channel"])
            rabi = float(r["rabi_rad_s"])
            sigma = float(r["sigma_rad_s"]) if r["sigma_rad_s"] else None
        except ValueError as exc:
            raise ValueError(f"line {line}: {exc}") from None
        out.append((ch, rabi) if sigma is None else (ch, rabi, sigma))
    if not out:
        raise ValueError("Rabi file has no records")
    return out
