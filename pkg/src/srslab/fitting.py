"""Lifetime and polarization fits.

The estimators follow the scikit-learn API (``fit``/``predict``,
``get_params``) so they drop into pipelines and grid searches; the
module-level functions wrap them with the data types used elsewhere in the
package.

All fits are Levenberg-Marquardt least squares (MINPACK via
``scipy.optimize.least_squares``). The polarization fits profile out the
overall Rabi-frequency scale in closed form (variable projection) and run
from 8 deterministic starting points, keeping the lowest residual (ties go
to the lowest start index).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.optimize import least_squares
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .atomdata import SpeciesData
from .couplings import quadrupole_geometric_factors
from .gates import raman_drives
from .raman import raman_rabi

__all__ = [
    "SurvivalCurve",
    "FitResult",
    "SRSRate",
    "FitError",
    "DegenerateDataError",
    "UnidentifiableError",
    "ExponentialDecayFit",
    "E2PolarizationFit",
    "RamanPolarizationFit",
    "fit_exponential",
    "extract_srs_rate",
    "fit_polarization_e2",
    "fit_polarization_raman",
]

MAX_ITER = 200
XTOL = 1e-10
N_STARTS = 8


class FitError(RuntimeError):
    """The optimizer did not converge."""


class DegenerateDataError(ValueError):
    pass


class UnidentifiableError(ValueError):
    pass


@dataclass(frozen=True)
class SurvivalCurve:
    """Survivors out of ``trials`` still dark after each delay."""

    delays: np.ndarray
    trials: np.ndarray
    survivors: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=float).ravel()
        n = np.asarray(self.trials, dtype=float).ravel()
        s = np.asarray(self.survivors, dtype=float).ravel()
        if not (d.shape == n.shape == s.shape):
            raise ValueError("delays, trials and survivors must have equal length")
        if d.size and np.any(np.diff(d) <= 0):
            raise ValueError("delays must be strictly increasing")
        if np.any(n <= 0):
            raise ValueError("trial counts must be positive")
        if np.any(s < 0) or np.any(s > n):
            raise ValueError("survivors must lie between 0 and trials")
        for name, arr in (("delays", d), ("trials", n), ("survivors", s)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def fraction(self) -> np.ndarray:
        return self.survivors / self.trials

    def __len__(self):
        return self.delays.size

    def __eq__(self, other):
        if not isinstance(other, SurvivalCurve):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("delays", "trials", "survivors")
        )


@dataclass(frozen=True)
class FitResult:
    params: dict[str, float]
    stderr: dict[str, float]
    residual: float
    converged: bool = True
    nfev: int = 0
    start: int = 0
    extra: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.params[key]


@dataclass(frozen=True)
class SRSRate:
    rate: float
    stderr: float
    nonphysical: bool




def _covariance(J: np.ndarray, residual_var: float | None) -> np.ndarray:
    cov = np.linalg.pinv(J.T @ J)
    if residual_var is not None:
        cov = cov * residual_var
    return cov


# ---------------------------------------------------------------------------
# exponential decay

def _cumulative_cov(t, p, n):
    """Covariance of survival fractions measured on the same ``n`` trials.

    ``cov(S_i, S_j) = S_late (1 - S_early) / n``, plus the count rounding
    variance ``1/(12 n^2)`` on the diagonal, which keeps the matrix positive
    definite once the tail has decayed to zero.
    """
    p = np.clip(p, 0.0, 1.0)
    order = np.argsort(t)
    rank = np.empty_like(order)
    rank[order] = np.arange(t.size)
    later = rank[:, None] >= rank[None, :]
    S = np.where(later, p[:, None] * (1 - p[None, :]), p[None, :] * (1 - p[:, None])) / n
    S[np.diag_indices_from(S)] += 1.0 / (12 * n * n)
    return S


class ExponentialDecayFit(RegressorMixin, BaseEstimator):
    """Weighted least-squares fit of ``p(t) = A exp(-rate t)``.

    ``fit(X, y, trials=...)`` takes delays ``X`` (seconds), survival
    fractions ``y`` and optional trial counts. With trial counts the points
    are weighted by their binomial variance ``p(1-p)/n``, evaluated first at
    the smoothed observed fraction and then at the fitted curve. Without
    them the fit is unweighted and standard errors are scaled by the
    residual variance. The rate is fitted as ``log(rate)`` so it stays
    positive.

    Parameters
    ----------
    sampling : {"cumulative", "independent"}
        How the points were measured. ``"cumulative"`` (the shelve-and-check
        loop) means the same trials are checked at every delay, so the
        points are correlated: ``cov(S_i, S_j) = S_j (1 - S_i) / n`` for
        ``t_i <= t_j``. The diagonal binomial fit is then refined by
        generalized least squares with that full covariance, which also
        gives the standard errors. ``"independent"`` means fresh trials at
        each delay and keeps the diagonal weights.
    """

    def __init__(self, sampling: str = "cumulative", max_iter: int = MAX_ITER, xtol: float = XTOL):
        self.sampling = sampling
        self.max_iter = max_iter
        self.xtol = xtol

    def fit(self, X, y, trials=None):
        if self.sampling not in ("cumulative", "independent"):
            raise ValueError("sampling must be 'cumulative' or 'independent'")
        t = np.asarray(X, dtype=float).reshape(-1)
        p = np.asarray(y, dtype=float).reshape(-1)
        if t.shape != p.shape:
            raise ValueError("X and y must have the same length")
        if np.unique(t).size < 3:
            raise DegenerateDataError("need at least 3 distinct delays")
        if np.ptp(p) == 0:
            raise DegenerateDataError("survival fraction is the same at every delay")
        n = None
        if trials is not None:
            n = np.broadcast_to(np.asarray(trials, dtype=float), t.shape)
            if self.sampling == "cumulative" and np.ptp(n) != 0:
                raise ValueError("cumulative sampling needs the same trial count at every delay")

        mask = (p > 0) & (p < 1)
        if mask.sum() < 2:
            mask = p > 0
        if mask.sum() >= 2 and np.ptp(t[mask]) > 0:
            slope = np.polyfit(t[mask], np.log(p[mask]), 1)[0]
            g0 = -slope if slope < 0 else 1.0 / np.ptp(t)
        else:
            g0 = 1.0 / np.ptp(t)
        x0 = np.array([math.log(g0), 1.0])

        def clip(pp):
            lo = 0.5 / (n + 1)
            return np.clip(pp, lo, 1 - lo)

        def model(th):
            return th[1] * np.exp(-np.exp(th[0]) * t)

        def dmodel(th):
            g = np.exp(th[0])
            e = np.exp(-g * t)
            return np.column_stack([-th[1] * g * t * e, e])

        def solve(whiten):
            r = least_squares(
                lambda th: whiten(model(th) - p), x0, jac=lambda th: whiten(dmodel(th)),
                method="lm", xtol=self.xtol, ftol=self.xtol, gtol=1e-15, max_nfev=self.max_iter,
            )
            if r.status <= 0:
                raise FitError(f"exponential fit did not converge: {r.message}")
            return r

        if n is None:
            res = solve(lambda v: v)
            dof = t.size - 2
            var = float(res.fun @ res.fun) / dof if dof > 0 else math.inf
            cov = _covariance(res.jac, var)
        else:
            # diagonal binomial weights, first at the smoothed data then at the fit
            ps = clip((p * n + 0.5) / (n + 1))
            for _ in range(2):
                sig = np.sqrt(ps * (1 - ps) / n)
                res = solve(lambda v, sig=sig: v / (sig if v.ndim == 1 else sig[:, None]))
                x0 = res.x
                ps = clip(model(x0))
            if self.sampling == "cumulative":
                # generalized least squares with the full binomial covariance
                # of a survival curve re-checked on the same trials
                for _ in range(2):
                    L = cholesky(_cumulative_cov(t, model(x0), n[0]), lower=True)
                    res = solve(lambda v, L=L: solve_triangular(L, v, lower=True))
                    x0 = res.x
            cov = _covariance(res.jac, None)
        rate = float(np.exp(res.x[0]))
        self.rate_ = rate
        self.amplitude_ = float(res.x[1])
        self.rate_stderr_ = float(rate * math.sqrt(max(cov[0, 0], 0.0)))
        self.amplitude_stderr_ = float(math.sqrt(max(cov[1, 1], 0.0)))
        self.result_ = FitResult(
            params={"rate": rate, "amplitude": self.amplitude_},
            stderr={"rate": self.rate_stderr_, "amplitude": self.amplitude_stderr_},
            residual=float(res.fun @ res.fun),
            converged=True,
            nfev=int(res.nfev),
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "rate_")
        t = np.asarray(X, dtype=float).reshape(-1)
        return self.amplitude_ * np.exp(-self.rate_ * t)


def fit_exponential(curve: SurvivalCurve, sampling: str = "cumulative") -> FitResult:
    """Fit ``A exp(-rate t)`` to a survival curve with binomial weights.

    See :class:`ExponentialDecayFit` for ``sampling``.
    """
    est = ExponentialDecayFit(sampling=sampling)
    return est.fit(curve.delays, curve.fraction, trials=curve.trials).result_


def extract_srs_rate(fit_on: FitResult, fit_off: FitResult) -> SRSRate:
    """Scattering rate as the difference of the decay rates with and without light.

    Errors add in quadrature; a difference more than one combined standard
    error below zero is flagged as nonphysical.
    """
    for f in (fit_on, fit_off):
        if not f.converged:
            raise FitError("both fits must have converged")
    rate = fit_on["rate"] - fit_off["rate"]
    err = math.hypot(fit_on.stderr["rate"], fit_off.stderr["rate"])
    return SRSRate(rate, err, rate + err < 0)


# ---------------------------------------------------------------------------
# polarization fits

def _fold_half_pi(x: float) -> float:
    """Map an angle to [0, pi/2] under x -> -x and x -> x + pi."""
    x = math.remainder(x, math.pi)
    return abs(x)


def _fold_pi(x: float) -> float:
    """Map an angle to (-pi/2, pi/2] under x -> x + pi."""
    x = math.remainder(x, math.pi)
    return math.pi / 2 if math.isclose(x, -math.pi / 2) else x


class _ProfiledFit(BaseEstimator):
    """Shared machinery: fit ``y ~ scale * model(angles)`` with ``scale`` profiled out."""

    _names: tuple[str, ...] = ()

    def _model(self, theta, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def _starts(self, n_free):
        for seed in range(self.n_starts):
            rng = np.random.default_rng(seed)
            yield seed, rng.uniform(0.0, math.pi / 2, size=n_free)

    def _run(self, X, y, sigma, n_free):
        y = np.asarray(y, dtype=float)
        w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, dtype=float)
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("sigma must be positive and finite")

        def scale_for(m):
            mw = m * w
            den = mw @ mw
            return 0.0 if den == 0 else float(mw @ (y * w)) / den

        def resid(th):
            m = self._model(th, X)
            return (y - scale_for(m) * m) * w

        def solve(x0):
            return least_squares(
                resid, x0, method="lm", xtol=self.xtol, ftol=self.xtol, gtol=1e-15,
                max_nfev=self.max_iter * (n_free + 1),
            )

        starts = list(self._starts(n_free))
        with ThreadPoolExecutor() as pool:
            runs = list(pool.map(solve, [x0 for _, x0 in starts]))
        # deterministic pick: lowest residual, ties to the lowest start index
        best = None
        for (seed, _), r in zip(starts, runs):
            if r.status <= 0:
                continue
            cost = float(r.fun @ r.fun)
            if best is None or cost < best[0] - 1e-12 * max(best[0], 1e-300):
                best = (cost, seed, r)
        if best is None:
            raise FitError("no start converged")
        cost, seed, r = best
        theta = r.x.copy()
        m = self._model(theta, X)
        scale = float(scale_for(m))

        def full(par):
            return (y - par[-1] * self._model(par[:-1], X)) * w

        par = np.append(theta, scale)
        h = np.maximum(1e-7 * np.abs(par), 1e-9)
        J = np.empty((y.size, par.size))
        for j in range(par.size):
            dp = np.zeros_like(par)
            dp[j] = h[j]
            J[:, j] = (full(par + dp) - full(par - dp)) / (2 * h[j])
        dof = y.size - par.size
        var = None
        if sigma is None:
            var = cost / dof if dof > 0 else math.inf
        cov = _covariance(J, var)
        err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        if sigma is None and dof <= 0:
            err = np.full_like(err, math.inf)
        return theta, scale, err, cost, seed, int(r.nfev)


class E2PolarizationFit(_ProfiledFit):
    """Polarization angle from quadrupole Rabi frequencies of ``|dm| = 0, 1, 2``.

    ``X`` holds ``|dm|`` per measurement, ``y`` the Rabi frequencies. With
    ``phi`` set (default pi/2, beam perpendicular to the field) only the
    polarization angle is fitted; ``phi=None`` frees the beam angle too.
    Angles are reported folded into [0, pi/2], where the model is
    single-valued.
    """

    def __init__(self, phi: float | None = math.pi / 2, n_starts: int = N_STARTS,
                 max_iter: int = MAX_ITER, xtol: float = XTOL):
        self.phi = phi
        self.n_starts = n_starts
        self.max_iter = max_iter
        self.xtol = xtol

    def _model(self, theta, X):
        gamma = theta[0]
        phi = self.phi if self.phi is not None else theta[1]
        g = quadrupole_geometric_factors(phi, gamma)
        return np.array([g[int(c)] for c in X])

    def fit(self, X, y, sigma=None):
        dm = np.abs(np.asarray(X, dtype=int).reshape(-1))
        y = np.asarray(y, dtype=float).reshape(-1)
        if dm.shape != y.shape:
            raise ValueError("X and y must have the same length")
        if np.any(dm > 2):
            raise ValueError("quadrupole channels are |dm| = 0, 1, 2")
        n_free = 1 if self.phi is not None else 2
        channels = np.unique(dm)
        if channels.size < 2 or channels.size < n_free + 1:
            raise UnidentifiableError(
                f"{channels.size} distinct channel(s) cannot fix {n_free} angle(s) and a scale"
            )
        if not np.any(y != 0):
            raise UnidentifiableError("all Rabi frequencies are zero")
        theta, scale, err, cost, seed, nfev = self._run(dm, y, sigma, n_free)
        self.gamma_ = _fold_half_pi(theta[0])
        self.phi_ = self.phi if self.phi is not None else _fold_half_pi(theta[1])
        self.scale_ = scale
        params = {"gamma": self.gamma_, "phi": self.phi_, "scale": scale}
        stderr = {"gamma": float(err[0]), "phi": float(err[1]) if n_free == 2 else 0.0,
                  "scale": float(err[-1])}
        self.result_ = FitResult(params, stderr, cost, True, nfev, seed)
        return self

    def predict(self, X):
        check_is_fitted(self, "gamma_")
        g = quadrupole_geometric_factors(self.phi_, self.gamma_)
        return self.scale_ * np.array([g[abs(int(c))] for c in np.ravel(X)])


class RamanPolarizationFit(_ProfiledFit):
    """Polarization (and optionally beam) angles of two Raman beams.

    ``X`` is a sequence of ``(a, b)`` hyperfine-state pairs, ``y`` their
    measured Raman Rabi frequencies. Beam 1 lies in the x-z plane, beam 2
    in the y-z plane. ``constraint="perpendicular"`` fixes both beams
    perpendicular to the field (the only way two beams in these planes can
    be mutually perpendicular at equal angles to it) and fits ``gamma``,
    ``gamma2``; ``"free"`` also fits ``phi`` and ``phi2``.

    Under the perpendicular constraint each ``gamma`` is only defined up to
    sign and is reported in [0, pi/2]; with free beam angles the signs are
    observable and angles are reported in (-pi/2, pi/2].
    """

    def __init__(self, species: SpeciesData | None = None, wavelength: float = 617e-9,
                 constraint: str = "perpendicular", intermediates: Sequence[str] | None = None,
                 n_starts: int = N_STARTS, max_iter: int = MAX_ITER, xtol: float = XTOL):
        self.species = species
        self.wavelength = wavelength
        self.constraint = constraint
        self.intermediates = intermediates
        self.n_starts = n_starts
        self.max_iter = max_iter
        self.xtol = xtol

    def _angles(self, theta):
        if self.constraint == "perpendicular":
            return theta[0], theta[1], math.pi / 2, math.pi / 2
        return theta[0], theta[1], theta[2], theta[3]

    def _model(self, theta, X):
        g1, g2, p1, p2 = self._angles(theta)
        d1, d2 = raman_drives(self.wavelength, g1, g2, p1, p2)
        return np.array([
            raman_rabi(self.species, a, b, d1, d2, self.intermediates) for a, b in X
        ])

    def fit(self, X, y, sigma=None):
        if self.species is None:
            raise ValueError("RamanPolarizationFit needs a species")
        if self.constraint not in ("perpendicular", "free"):
            raise ValueError("constraint must be 'perpendicular' or 'free'")
        pairs = [tuple(p) for p in X]
        y = np.asarray(y, dtype=float).reshape(-1)
        if len(pairs) != y.size:
            raise ValueError("X and y must have the same length")
        n_free = 2 if self.constraint == "perpendicular" else 4
        distinct = len({frozenset(p) for p in pairs})
        if distinct < 2 or distinct < n_free + 1:
            raise UnidentifiableError(
                f"{distinct} distinct transition(s) cannot fix {n_free} angles and a scale"
            )
        if not np.any(y != 0):
            raise UnidentifiableError("all Rabi frequencies are zero")
        theta, scale, err, cost, seed, nfev = self._run(pairs, y, sigma, n_free)
        g1, g2, p1, p2 = self._angles(theta)
        # with both beams perpendicular to the field the sign of each gamma is
        # unobservable in |Omega|; report the representative in [0, pi/2]
        fold = _fold_half_pi if n_free == 2 else _fold_pi
        self.gamma_ = fold(g1)
        self.gamma2_ = fold(g2)
        self.phi_ = p1
        self.phi2_ = p2
        self.scale_ = scale
        params = {"gamma": self.gamma_, "gamma2": self.gamma2_, "phi": p1, "phi2": p2, "scale": scale}
        names = ["gamma", "gamma2"] + (["phi", "phi2"] if n_free == 4 else [])
        stderr = {k: float(err[i]) for i, k in enumerate(names)}
        stderr.setdefault("phi", 0.0)
        stderr.setdefault("phi2", 0.0)
        stderr["scale"] = float(err[-1])
        self.result_ = FitResult(params, stderr, cost, True, nfev, seed)
        return self

    def predict(self, X):
        check_is_fitted(self, "gamma_")
        theta = [self.gamma_, self.gamma2_, self.phi_, self.phi2_]
        return self.scale_ * self._model(theta if self.constraint == "free" else theta[:2], list(X))


def _split_measurements(measured):
    xs, ys, ss = [], [], []
    for rec in measured:
        xs.append(rec[0])
        ys.append(rec[1])
        ss.append(rec[2] if len(rec) > 2 else None)
    sigma = None if any(s is None for s in ss) else np.asarray(ss, dtype=float)
    return xs, np.asarray(ys, dtype=float), sigma


def fit_polarization_e2(measured, phi: float | None = math.pi / 2) -> FitResult:
    """Fit the polarization angle to ``(|dm|, rabi[, sigma])`` records."""
    xs, ys, sigma = _split_measurements(measured)
    return E2PolarizationFit(phi=phi).fit(xs, ys, sigma).result_


def fit_polarization_raman(
    measured,
    species: SpeciesData,
    wavelength: float,
    constraint: str = "perpendicular",
    intermediates: Sequence[str] | None = None,
) -> FitResult:
    """Fit Raman beam angles to ``((a, b), rabi[, sigma])`` records."""
    xs, ys, sigma = _split_measurements(measured)
    est = RamanPolarizationFit(species, wavelength, constraint, intermediates)
    return est.fit(xs, ys, sigma).result_
