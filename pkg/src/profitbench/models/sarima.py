"""Seasonal ARIMA estimated by conditional sum of squares, plus the
regression-with-SARIMA-errors variant that consumes exogenous drivers.

The multiplicative (p,d,q)(P,D,Q)_12 lag polynomials are expanded into
full coefficient arrays, innovations are computed by recursion with zero
pre-sample values, and the CSS objective is minimized with a jitted
Nelder-Mead search. Non-stationary or non-invertible parameter points are
handled with a penalty barrier instead of being rejected outright, so the
optimizer can walk back into the admissible region.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..errors import MissingExogForecastRow, NumericalFailure, SeriesTooShort
from ..preprocess import DifferencingSpec, difference, integrate_next
from .base import FittedModel, ForecasterSpec, TrainSlice

PERIOD = 12

_PENALTY = 1e8
_ROOT_MARGIN = 0.995


@njit(cache=True)
def _css_innovations(w: np.ndarray, mu: float, ar: np.ndarray, ma: np.ndarray):
    """Innovations and their conditional sum of squares.

    ``ar``/``ma`` hold the expanded lag-polynomial coefficients (index i
    is lag i+1). The first len(ar) observations are conditioned on and
    pre-sample innovations are zero.
    """
    n = len(w)
    p = len(ar)
    q = len(ma)
    eps = np.zeros(n)
    css = 0.0
    for t in range(p, n):
        e = w[t] - mu
        for i in range(p):
            e -= ar[i] * (w[t - 1 - i] - mu)
        for j in range(q):
            k = t - 1 - j
            if k >= 0:
                e -= ma[j] * eps[k]
        eps[t] = e
        css += e * e
    return css, eps


@njit(cache=True)
def _poly_max_root(tail: np.ndarray) -> float:
    """Largest root modulus of z^n + tail[0] z^(n-1) + ... + tail[n-1]."""
    deg = len(tail)
    while deg > 0 and tail[deg - 1] == 0.0:
        deg -= 1
    if deg == 0:
        return 0.0
    if deg == 1:
        return abs(tail[0])
    if deg == 2:
        b = tail[0]
        c = tail[1]
        disc = b * b - 4.0 * c
        if disc >= 0.0:
            r = np.sqrt(disc)
            return max(abs((-b + r) / 2.0), abs((-b - r) / 2.0))
        return np.sqrt(c)  # complex pair, |root|^2 = c
    comp = np.zeros((deg, deg), dtype=np.complex128)
    for j in range(deg):
        comp[0, j] = -tail[j]
    for i in range(1, deg):
        comp[i, i - 1] = 1.0
    return np.max(np.abs(np.linalg.eigvals(comp)))


@njit(cache=True)
def _violation(vec: np.ndarray, p: int, q: int, P: int, Q: int) -> float:
    """Total unit-circle margin violation of the four lag polynomials."""
    viol = 0.0
    viol += max(0.0, _poly_max_root(-vec[1 : 1 + p]) - _ROOT_MARGIN)
    viol += max(0.0, _poly_max_root(vec[1 + p : 1 + p + q]) - _ROOT_MARGIN)
    viol += max(0.0, _poly_max_root(-vec[1 + p + q : 1 + p + q + P]) - _ROOT_MARGIN)
    viol += max(0.0, _poly_max_root(vec[1 + p + q + P :]) - _ROOT_MARGIN)
    return viol


@njit(cache=True)
def _expand_into(nons: np.ndarray, seas: np.ndarray, cross_sign: float, out: np.ndarray):
    """Expanded multiplicative polynomial coefficients (index i = lag i+1)."""
    out[:] = 0.0
    for i in range(len(nons)):
        out[i] += nons[i]
    for j in range(len(seas)):
        out[PERIOD * (j + 1) - 1] += seas[j]
    for i in range(len(nons)):
        for j in range(len(seas)):
            out[i + PERIOD * (j + 1)] += cross_sign * nons[i] * seas[j]


@njit(cache=True)
def _objective(vec: np.ndarray, ws: np.ndarray, p: int, q: int, P: int, Q: int) -> float:
    viol = _violation(vec, p, q, P, Q)
    if viol > 0.0:
        return _PENALTY * (1.0 + viol)
    ar = np.empty(p + PERIOD * P)
    ma = np.empty(q + PERIOD * Q)
    _expand_into(vec[1 : 1 + p], vec[1 + p + q : 1 + p + q + P], -1.0, ar)
    _expand_into(vec[1 + p : 1 + p + q], vec[1 + p + q + P :], 1.0, ma)
    css, _ = _css_innovations(ws, vec[0], ar, ma)
    if not np.isfinite(css):
        return _PENALTY
    return css


@njit(cache=True)
def _nelder_mead(ws: np.ndarray, p: int, q: int, P: int, Q: int, maxfev: int):
    """Derivative-free CSS minimization; returns (x, f, improvements, count)."""
    n = 1 + p + q + P + Q
    pts = np.zeros((n + 1, n))
    for i in range(n):
        pts[i + 1, i] = 0.25
    vals = np.empty(n + 1)
    path = np.empty(maxfev + n + 1)
    n_path = 0
    best = np.inf
    nfev = 0
    for i in range(n + 1):
        vals[i] = _objective(pts[i], ws, p, q, P, Q)
        nfev += 1
        if vals[i] < best:
            best = vals[i]
            path[n_path] = best
            n_path += 1
    while nfev < maxfev:
        order = np.argsort(vals)
        pts = pts[order]
        vals = vals[order]
        f_best = vals[0]
        f_worst = vals[n]
        spread = 0.0
        for i in range(1, n + 1):
            diff = abs(vals[i] - f_best)
            if diff > spread:
                spread = diff
        xspread = 0.0
        for i in range(1, n + 1):
            for j in range(n):
                d = abs(pts[i, j] - pts[0, j])
                if d > xspread:
                    xspread = d
        if spread <= 1e-9 * (1.0 + abs(f_best)) and xspread <= 1e-5:
            break
        centroid = np.zeros(n)
        for i in range(n):
            for j in range(n):
                centroid[j] += pts[i, j]
        centroid /= n
        xr = 2.0 * centroid - pts[n]
        fr = _objective(xr, ws, p, q, P, Q)
        nfev += 1
        if fr < vals[0]:
            xe = centroid + 2.0 * (centroid - pts[n])
            fe = _objective(xe, ws, p, q, P, Q)
            nfev += 1
            if fe < fr:
                pts[n] = xe
                vals[n] = fe
            else:
                pts[n] = xr
                vals[n] = fr
        elif fr < vals[n - 1]:
            pts[n] = xr
            vals[n] = fr
        else:
            if fr < f_worst:
                xc = centroid + 0.5 * (xr - centroid)
            else:
                xc = centroid + 0.5 * (pts[n] - centroid)
            fc = _objective(xc, ws, p, q, P, Q)
            nfev += 1
            if fc < min(fr, f_worst):
                pts[n] = xc
                vals[n] = fc
            else:
                # shrink toward the best vertex
                for i in range(1, n + 1):
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0])
                    vals[i] = _objective(pts[i], ws, p, q, P, Q)
                    nfev += 1
        for i in range(1, n + 1):
            if vals[i] < best:
                best = vals[i]
                path[n_path] = best
                n_path += 1
        if fr < best:
            best = fr
            path[n_path] = best
            n_path += 1
    i_best = np.argmin(vals)
    return pts[i_best], vals[i_best], path[:n_path], nfev


@dataclass
class SarimaModel(FittedModel):
    model_id: str
    orders: tuple[int, int, int, int]  # p, q, P, Q
    mu: float
    phi: np.ndarray
    theta: np.ndarray
    Phi: np.ndarray
    Theta: np.ndarray
    css: float
    css_path: tuple[float, ...]
    _w: np.ndarray = field(repr=False, default=None)
    _eps: np.ndarray = field(repr=False, default=None)
    _dspec: DifferencingSpec = field(repr=False, default=None)
    _scale: tuple[float, float] = (0.0, 1.0)

    def _forecast_diff(self) -> float:
        """One-step forecast on the (standardized) differenced scale."""
        p, q, P, Q = self.orders
        ar = np.empty(p + PERIOD * P)
        ma = np.empty(q + PERIOD * Q)
        _expand_into(self.phi, self.Phi, -1.0, ar)
        _expand_into(self.theta, self.Theta, 1.0, ma)
        t = len(self._w)
        value = self.mu
        for i, c in enumerate(ar):
            value += c * (self._w[t - 1 - i] - self.mu)
        for j, c in enumerate(ma):
            k = t - 1 - j
            if k >= 0:
                value += c * self._eps[k]
        return float(value)

    def _predict(self) -> float:
        center, spread = self._scale
        w_next = self._forecast_diff() * spread + center
        w_orig = self._w * spread + center
        return integrate_next(w_orig, w_next, self._dspec)


def _order_tuple(spec: ForecasterSpec) -> tuple[int, int, int, int]:
    return (
        int(spec.get("p", 0)),
        int(spec.get("q", 0)),
        int(spec.get("P", 0)),
        int(spec.get("Q", 0)),
    )


def _check_length(n_w: int, orders: tuple[int, int, int, int]) -> None:
    p, q, P, Q = orders
    needed = 3 * (p + q + PERIOD * P + PERIOD * Q) + 20
    if n_w < needed:
        raise SeriesTooShort(needed, n_w, "post-differencing series")


def _standardize(w: np.ndarray) -> tuple[np.ndarray, float, float]:
    center = float(np.mean(w))
    spread = float(np.std(w))
    if spread < 1e-12:
        spread = 1.0
    return (w - center) / spread, center, spread


def _fit_css(ws: np.ndarray, orders: tuple[int, int, int, int]) -> SarimaModel:
    """CSS-estimate a SARMA on a standardized series; scale fields are
    filled in by the caller."""
    p, q, P, Q = orders
    n_params = 1 + p + q + P + Q
    maxfev = 250 * max(2, n_params)
    vec, css, path, _ = _nelder_mead(ws, p, q, P, Q, maxfev)
    if not np.all(np.isfinite(vec)) or not np.isfinite(css):
        raise NumericalFailure("SARIMA optimizer returned non-finite values")
    if _violation(vec, p, q, P, Q) > 0.0:
        raise NumericalFailure("SARIMA optimizer stalled outside the invertible region")
    ar = np.empty(p + PERIOD * P)
    ma = np.empty(q + PERIOD * Q)
    _expand_into(vec[1 : 1 + p], vec[1 + p + q : 1 + p + q + P], -1.0, ar)
    _expand_into(vec[1 + p : 1 + p + q], vec[1 + p + q + P :], 1.0, ma)
    _, eps = _css_innovations(ws, vec[0], ar, ma)
    return SarimaModel(
        model_id="SARIMA",
        orders=orders,
        mu=float(vec[0]),
        phi=vec[1 : 1 + p].copy(),
        theta=vec[1 + p : 1 + p + q].copy(),
        Phi=vec[1 + p + q : 1 + p + q + P].copy(),
        Theta=vec[1 + p + q + P :].copy(),
        css=float(css),
        css_path=tuple(path),
        _w=ws,
        _eps=eps,
    )


def fit_sarima(spec: ForecasterSpec, train: TrainSlice) -> SarimaModel:
    orders = _order_tuple(spec)
    d, D = train.diff.d, train.diff.D
    w, dspec = difference(train.y, d, D)
    _check_length(len(w), orders)
    ws, center, spread = _standardize(w)
    model = _fit_css(ws, orders)
    model._dspec = dspec
    model._scale = (center, spread)
    return model


@dataclass
class SarimaxModel(FittedModel):
    model_id: str
    coef: np.ndarray  # intercept + one weight per driver, differenced scale
    residual_model: SarimaModel
    _x_next: np.ndarray = field(repr=False, default=None)
    _w: np.ndarray = field(repr=False, default=None)
    _dspec: DifferencingSpec = field(repr=False, default=None)

    def _predict(self) -> float:
        reg_next = self.coef[0] + float(self._x_next @ self.coef[1:])
        rm = self.residual_model
        resid_next = rm._forecast_diff() * rm._scale[1] + rm._scale[0]
        return integrate_next(self._w, reg_next + resid_next, self._dspec)


def fit_sarimax(spec: ForecasterSpec, train: TrainSlice) -> SarimaxModel:
    """Two-step fit: OLS of differenced sales on differenced drivers, then
    a SARIMA on the regression residuals."""
    if train.exog is None or train.exog.shape[1] == 0:
        raise MissingExogForecastRow("SARIMAX needs at least one exogenous column")
    if train.exog_next is None:
        raise MissingExogForecastRow("exogenous values for the forecast month are missing")
    orders = _order_tuple(spec)
    d, D = train.diff.d, train.diff.D
    w, dspec = difference(train.y, d, D)
    _check_length(len(w), orders)
    n_feat = train.exog.shape[1]
    wx = np.empty((len(w), n_feat))
    x_next_diff = np.empty(n_feat)
    for j in range(n_feat):
        extended = np.concatenate([train.exog[:, j], [train.exog_next[j]]])
        col, _ = difference(extended, d, D)
        wx[:, j] = col[:-1]
        x_next_diff[j] = col[-1]
    X = np.column_stack([np.ones(len(w)), wx])
    coef, *_ = np.linalg.lstsq(X, w, rcond=None)
    resid = w - X @ coef

    rs, center, spread = _standardize(resid)
    residual_model = _fit_css(rs, orders)
    residual_model._dspec = DifferencingSpec(0, 0, np.empty(0), float("nan"))
    residual_model._scale = (center, spread)
    return SarimaxModel(
        model_id="SARIMAX",
        coef=coef,
        residual_model=residual_model,
        _x_next=x_next_diff,
        _w=w,
        _dspec=dspec,
    )
