import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import unitary_group

import oracle
from srslab.angular import BeamGeometry
from srslab.atomdata import HyperfineState, enumerate_hyperfine
from srslab.constants import C, TWO_PI
from srslab.scattering import (
    LaserDrive,
    ResonanceError,
    default_intermediates,
    final_level_rates,
    scattering_report,
    select_finals,
    srs_rate,
    srs_rate_ozeri,
    total_rate,
)

FIELD = 1e6


def _t(s):
    return (s.level, Fraction(s.F), Fraction(s.mF))


def _drive(lam, gamma=0.105, phi=math.pi / 2, field=FIELD):
    return LaserDrive.from_wavelength(lam, field, BeamGeometry(phi, gamma))


@pytest.mark.parametrize("lam,gamma", [(617e-9, 0.105), (674e-9, 0.045), (461e-9, 0.105), (3e-6, 0.3)])
@pytest.mark.parametrize("final", [
    HyperfineState("6S1/2", 1, 0),
    HyperfineState("6S1/2", 2, -1),
    HyperfineState("5D3/2", 2, 1),
    HyperfineState("5D5/2", 2, -1),
    HyperfineState("5D5/2", 1, 0),
])
def test_matches_oracle(ba, q0, lam, gamma, final):
    d = _drive(lam, gamma)
    got = srs_rate(ba, q0, final, d)
    lv, lad = oracle.rate(_t(q0), _t(final), TWO_PI * C / lam, FIELD, oracle.beam1(math.pi / 2, gamma))
    assert got.lambda_v == pytest.approx(lv, rel=1e-7, abs=1e-30)
    assert got.ladder == pytest.approx(lad, rel=1e-7, abs=1e-30)


def test_ladder_open_below_splitting(ba, q0):
    # a 3 um photon cannot reach 6P from 5D5/2 in a ladder but is below the D-S gap
    r = srs_rate(ba, q0, HyperfineState("6S1/2", 2, 0), _drive(3e-6, 0.3))
    assert r.ladder > 0
    assert r.lambda_v > 0


@pytest.mark.parametrize("lam", [617e-9, 674e-9, 461e-9])
def test_ladder_closed_at_visible_wavelengths(ba, q0, lam):
    rep = scattering_report(ba, q0, _drive(lam), "all")
    assert all(cr.ladder == 0.0 for _, cr in rep.rows)


def test_zero_field(ba, q0):
    rep = scattering_report(ba, q0, _drive(617e-9, field=0.0), "all")
    assert rep.total == 0.0
    assert srs_rate_ozeri(ba, q0, HyperfineState("6S1/2", 1, 0), _drive(617e-9, field=0.0)) == 0.0


def test_quadratic_field_scaling(ba, q0):
    f = HyperfineState("5D3/2", 1, 1)
    a = srs_rate(ba, q0, f, _drive(617e-9, field=1e5)).total
    b = srs_rate(ba, q0, f, _drive(617e-9, field=3e5)).total
    assert b == pytest.approx(9 * a, rel=1e-12)


def test_selector_counts(ba, q0):
    assert len(select_finals(ba, q0, "S1/2+D3/2")) == 24
    assert len(select_finals(ba, q0, "D5/2")) == 24
    assert len(select_finals(ba, q0, "D5/2-non-Rayleigh")) == 23
    assert len(select_finals(ba, q0, "all")) == 48
    with pytest.raises(ValueError):
        select_finals(ba, q0, "F7/2")


def test_report_totals(ba, q0):
    rep = scattering_report(ba, q0, _drive(617e-9), "all")
    assert len(rep.rows) == 48
    assert rep.total == pytest.approx(sum(cr.total for _, cr in rep.rows), rel=1e-14)
    assert rep.total == pytest.approx(sum(rep.totals.values()), rel=1e-14)
    assert rep.rate_into("6S1/2") > 0
    assert rep.rate_into("6P1/2") == 0.0
    assert total_rate(ba, q0, _drive(617e-9)) == pytest.approx(
        rep.rate_into("6S1/2") + rep.rate_into("5D3/2"), rel=1e-14
    )


def test_report_rejects_unknown_model(ba, q0):
    with pytest.raises(ValueError):
        scattering_report(ba, q0, _drive(617e-9), model="kramers")


@pytest.mark.parametrize("seed", range(4))
def test_photon_basis_independence(ba, q0, seed):
    U = unitary_group.rvs(3, random_state=seed)
    d = _drive(617e-9)
    for lv in ("6S1/2", "5D3/2", "5D5/2"):
        a = final_level_rates(ba, q0, lv, d)
        b = final_level_rates(ba, q0, lv, d, photon_basis=U)
        assert b[0] == pytest.approx(a[0], rel=1e-10, abs=1e-20)


def test_frozen_detuning_weighted_sum(ba, q0):
    # sum over finals of rate / differential Stark detuning at 674 nm, regression against the oracle
    lam, gamma = 674e-9, 0.045
    d = _drive(lam, gamma)
    eps = oracle.beam1(math.pi / 2, gamma)
    wl = TWO_PI * C / lam
    finals = [HyperfineState("6S1/2", 1, m) for m in (-1, 0, 1)] + [HyperfineState("5D3/2", 2, m) for m in (-1, 0, 1)]
    dds = oracle.stark(_t(q0), wl, eps, FIELD) - oracle.stark(("6S1/2", Fraction(2), Fraction(0)), wl, eps, FIELD)
    ref = sum(sum(oracle.rate(_t(q0), _t(f), wl, FIELD, eps)) for f in finals) / dds
    got = sum(srs_rate(ba, q0, f, d).total for f in finals) / dds
    assert got == pytest.approx(ref, rel=1e-7)


def test_default_intermediates(ba, sr):
    assert default_intermediates(ba, "5D5/2") == ("6P3/2",)
    assert set(default_intermediates(ba, "5D3/2")) == {"6P1/2", "6P3/2"}
    assert set(default_intermediates(sr, "5S1/2")) == {"5P1/2", "5P3/2"}


def test_resonance_floor(ba, q0):
    w = ba.level("6P3/2").energy - ba.level("5D5/2").energy
    d = LaserDrive(w + TWO_PI * 0.5e9, FIELD, [0, 0, 1])
    with pytest.raises(ResonanceError):
        srs_rate(ba, q0, HyperfineState("6S1/2", 1, 0), d)
    with pytest.raises(ResonanceError):
        srs_rate_ozeri(ba, q0, HyperfineState("6S1/2", 1, 0), d)
    # a smaller floor lets the same drive through
    srs_rate(ba, q0, HyperfineState("6S1/2", 1, 0), d, resonance_floor=TWO_PI * 1e8)


def _detuned(ba, thz):
    w = ba.level("6P3/2").energy - ba.level("5D5/2").energy
    return LaserDrive(w + TWO_PI * thz * 1e12, FIELD, BeamGeometry(math.pi / 2, 0.105))


def test_models_agree_near_resonance(ba, q0):
    d = _detuned(ba, -2.5)
    m = scattering_report(ba, q0, d, "all").total
    o = scattering_report(ba, q0, d, "all", model="ozeri").total
    assert m == pytest.approx(o, rel=0.05)


def test_moore_below_ozeri_when_red_detuned(ba, q0):
    for thz in (-10, -30, -60):
        d = _detuned(ba, thz)
        m = scattering_report(ba, q0, d, "S1/2+D3/2").total
        o = scattering_report(ba, q0, d, "S1/2+D3/2", model="ozeri").total
        assert m < o


def test_heaviside_gate(ba):
    # from the ground state, an anti-Stokes photon into 5D5/2 would need w_sc > 0 only via Lambda;
    # the ladder ordering needs w_L below the S-D gap
    s = HyperfineState("6S1/2", 1, 0)
    d = _drive(617e-9)
    rep = scattering_report(ba, s, d, "D5/2")
    assert all(cr.ladder == 0.0 for _, cr in rep.rows)
    # a drive too far in the infrared to pay for S -> D5/2 closes the Lambda channel as well
    far = LaserDrive(0.5 * ba.level("5D5/2").energy, FIELD, [0, 0, 1])
    assert scattering_report(ba, s, far, "D5/2").total == 0.0


def test_ozeri_uses_nearest_manifold(ba):
    s = HyperfineState("5D3/2", 1, 0)
    near_p12 = ba.level("6P1/2").energy - ba.level("5D3/2").energy - TWO_PI * 5e12
    d = LaserDrive(near_p12, FIELD, [1, 0, 0])
    only = srs_rate_ozeri(ba, s, HyperfineState("6S1/2", 1, 1), d, intermediates=["6P1/2"])
    both = srs_rate_ozeri(ba, s, HyperfineState("6S1/2", 1, 1), d)
    assert both == pytest.approx(only, rel=1e-14)


def test_rayleigh_matches_explicit_state(ba, q0):
    rep = scattering_report(ba, q0, _drive(617e-9), "D5/2")
    ray = dict(rep.rows)[q0]
    assert ray == srs_rate(ba, q0, q0, _drive(617e-9))


def test_invalid_drive():
    with pytest.raises(ValueError):
        LaserDrive(-1.0, 1.0, [0, 0, 1])
    with pytest.raises(ValueError):
        LaserDrive(1.0, -1.0, [0, 0, 1])
    with pytest.raises(ValueError):
        LaserDrive(1.0, 1.0, [0, 0, 2])


def test_rates_cover_every_final(ba, q0):
    lv, lad = final_level_rates(ba, q0, "5D3/2", _drive(617e-9))
    assert lv.shape == lad.shape == (len(enumerate_hyperfine(ba, "5D3/2")),)
    assert np.all(lv >= 0)
