"""Symmetric spectral densities on the real line.

A density is described by a frozen :class:`DensitySpec`; evaluation goes
through a family object built lazily from it. Internally every family is
written in logarithmic coordinates, ``g(t) = ln W(e**t)``, which is what the
functionals integrate. That form stays finite for cutoffs far beyond the range
of a double.

Families that are only prescribed for large ``|lambda|`` are spliced below the
radius ``lambda0``. On ``[lambda0/2, lambda0]`` the blend

    ln W = F(lambda0) + s(u) * (F(lambda) - F(lambda0)),   s(u) = 3u**2 - 2u**3,

with ``u = (lambda - lambda0/2) / (lambda0/2)`` joins a flat inner piece to
the family formula. Value and slope match at both joints, and for
``|lambda| >= lambda0`` the family formula is used literally.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

from .errors import NonPositive, NotDifferentiable, SpecError, TabulatedOutOfRange

FAMILIES = ("white", "power", "logpow", "explog", "rational", "tabulated", "circle_direct")
DEFAULT_SPLICE = {"power": 2.0, "logpow": math.e ** 2, "explog": math.e}
TAIL_KINDS = ("power", "log", "explog")


@dataclass(frozen=True)
class TailModel:
    """Declared behaviour of a tabulated density beyond its last grid point.

    ``power``: W ~ lambda**alpha; ``log``: W ~ (ln lambda)**alpha;
    ``explog``: W ~ exp(-(ln lambda)**alpha). Each is anchored at the last row.
    """

    kind: str
    alpha: float

    def __post_init__(self):
        if self.kind not in TAIL_KINDS:
            raise SpecError(f"unknown tail kind {self.kind!r}")
        if not math.isfinite(self.alpha):
            raise SpecError("tail exponent must be finite")


@dataclass(frozen=True, eq=False)
class DensitySpec:
    family: str
    alpha: float | None = None
    splice_radius: float | None = None
    numerator: tuple = ()
    denominator: tuple = ()
    table: tuple | None = None
    tail: TailModel | None = None
    phi: tuple | Callable | None = None
    dphi: Callable | None = None
    phi_breaks: tuple = ()
    scale: float = 1.0
    dilation: float = 1.0
    symmetric: bool = True
    label: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise SpecError("scale must be positive")
        if not (self.dilation > 0 and math.isfinite(self.dilation)):
            raise SpecError("dilation must be positive")

    # constructors -----------------------------------------------------------
    @classmethod
    def white(cls, **kw) -> "DensitySpec":
        return cls("white", **kw)

    @classmethod
    def power(cls, alpha: float, splice_radius: float | None = None, **kw) -> "DensitySpec":
        return cls("power", alpha=float(alpha), splice_radius=splice_radius, **kw)

    @classmethod
    def logpow(cls, alpha: float, splice_radius: float | None = None, **kw) -> "DensitySpec":
        return cls("logpow", alpha=float(alpha), splice_radius=splice_radius, **kw)

    @classmethod
    def explog(cls, alpha: float, splice_radius: float | None = None, **kw) -> "DensitySpec":
        return cls("explog", alpha=float(alpha), splice_radius=splice_radius, **kw)

    @classmethod
    def rational(cls, numerator: Sequence[float], denominator: Sequence[float] = (1.0,),
                 **kw) -> "DensitySpec":
        """``W = P(lambda) / Q(lambda)`` with coefficients in ascending powers."""
        return cls("rational", numerator=tuple(map(float, numerator)),
                   denominator=tuple(map(float, denominator)), **kw)

    @classmethod
    def tabulated(cls, lam, W, dW=None, tail: TailModel | None = None, **kw) -> "DensitySpec":
        cols = [tuple(map(float, lam)), tuple(map(float, W))]
        if dW is not None:
            cols.append(tuple(map(float, dW)))
        return cls("tabulated", table=tuple(cols), tail=tail, **kw)

    @classmethod
    def circle_direct(cls, phi, dphi: Callable | None = None, breaks: Sequence[float] = (),
                      **kw) -> "DensitySpec":
        """Density given through its circle picture ``w = exp(phi)``, so ``W = w / 2``.

        ``phi`` is either a list of cosine coefficients ``a_k`` of
        ``sum a_k cos(k theta)`` or a vectorised callable of the angle.
        ``breaks`` lists angles where a callable ``phi`` is not smooth.
        """
        if not callable(phi):
            phi = tuple(map(float, phi))
        return cls("circle_direct", phi=phi, dphi=dphi,
                   phi_breaks=tuple(map(float, breaks)), **kw)

    # derived ----------------------------------------------------------------
    def scaled(self, c: float) -> "DensitySpec":
        return replace(self, scale=self.scale * c)

    def dilated(self, c: float) -> "DensitySpec":
        """The density ``lambda -> W(c * lambda)``."""
        return replace(self, dilation=self.dilation * c)

    @cached_property
    def impl(self) -> "_Family":
        return _build(self)

    @property
    def lambda0(self) -> float | None:
        return self.impl.lambda0

    def lnw_t(self, t):
        """``ln W(e**t)``, vectorised."""
        t = np.asarray(t, dtype=float)
        return math.log(self.scale) + self.impl.g(t + math.log(self.dilation))

    def dlnw_t(self, t):
        """``d/dt ln W(e**t)``."""
        t = np.asarray(t, dtype=float)
        return self.impl.dg(t + math.log(self.dilation))

    @property
    def breaks_t(self) -> tuple:
        shift = math.log(self.dilation)
        return tuple(b - shift for b in self.impl.breaks)

    @property
    def t_flat(self) -> float | None:
        """Below this ``t`` the log density is constant (None if it never is)."""
        tf = self.impl.t_flat
        return None if tf is None else tf - math.log(self.dilation)

    @property
    def differentiable(self) -> bool:
        return self.impl.differentiable

    @property
    def has_tail(self) -> bool:
        return self.impl.has_tail

    def real_zeros(self) -> tuple:
        """Nonnegative real zeros of ``W`` (rational family only)."""
        return tuple(z / self.dilation for z in self.impl.real_zeros)

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.alpha is not None:
            return f"{self.family}(alpha={self.alpha:g})"
        return self.family


# --------------------------------------------------------------------------
# families

class _Family:
    lambda0: float | None = None
    t_flat: float | None = None
    breaks: tuple = ()
    differentiable = True
    has_tail = True
    real_zeros: tuple = ()

    def g(self, t):
        raise NotImplementedError

    def dg(self, t):
        raise NotImplementedError

    def w_abs(self, a):
        with np.errstate(divide="ignore"):
            return np.exp(self.g(np.log(a)))

    def joints(self) -> list:
        return []


class _White(_Family):
    t_flat = -math.inf

    def g(self, t):
        return np.zeros_like(t)

    def dg(self, t):
        return np.zeros_like(t)

    def w_abs(self, a):
        return np.ones_like(a)


class _Spliced(_Family):
    def __init__(self, alpha: float, lambda0: float):
        self.alpha = alpha
        self.lambda0 = lambda0
        self.a = lambda0 / 2.0
        self.tb = math.log(lambda0)
        self.ta = math.log(self.a)
        self.t_flat = self.ta
        self.breaks = (self.ta, self.tb)
        self.Fb = float(self.F(np.array(self.tb)))

    def F(self, t):
        raise NotImplementedError

    def dF(self, t):
        raise NotImplementedError

    def formula(self, a):
        raise NotImplementedError

    def _blend(self, t):
        x = np.exp(t)
        u = (x - self.a) / self.a
        s = u * u * (3.0 - 2.0 * u)
        ds = 6.0 * u * (1.0 - u)
        F = self.F(t)
        return self.Fb + s * (F - self.Fb), x * ds / self.a * (F - self.Fb) + s * self.dF(t)

    def g(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.Fb)
        mid = (t > self.ta) & (t < self.tb)
        hi = t >= self.tb
        if mid.any():
            out[mid] = self._blend(t[mid])[0]
        if hi.any():
            out[hi] = self.F(t[hi])
        return out

    def dg(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        mid = (t > self.ta) & (t < self.tb)
        hi = t >= self.tb
        if mid.any():
            out[mid] = self._blend(t[mid])[1]
        if hi.any():
            out[hi] = self.dF(t[hi])
        return out

    def w_abs(self, a):
        a = np.asarray(a, dtype=float)
        out = np.empty(a.shape)
        hi = a >= self.lambda0
        out[hi] = self.formula(a[hi])
        lo = ~hi
        with np.errstate(divide="ignore"):
            out[lo] = np.exp(self.g(np.log(a[lo])))
        return out

    def joints(self) -> list:
        """(lambda, value jump, slope jump) in d/dlambda ln W at both joints."""
        ta, tb = np.array([self.ta]), np.array([self.tb])
        va, da = self._blend(ta)
        vb, db = self._blend(tb)
        return [
            (self.a, abs(float(va[0]) - self.Fb), abs(float(da[0])) / self.a),
            (self.lambda0, abs(float(vb[0]) - float(self.F(tb)[0])),
             abs(float(db[0]) - float(self.dF(tb)[0])) / self.lambda0),
        ]


class _Power(_Spliced):
    def F(self, t):
        return self.alpha * np.asarray(t, dtype=float)

    def dF(self, t):
        return np.full(np.shape(t), self.alpha)

    def formula(self, a):
        return a ** self.alpha


class _LogPow(_Spliced):
    def F(self, t):
        return self.alpha * np.log(t)

    def dF(self, t):
        return self.alpha / np.asarray(t, dtype=float)

    def formula(self, a):
        return np.log(a) ** self.alpha


class _ExpLog(_Spliced):
    def F(self, t):
        return -np.asarray(t, dtype=float) ** self.alpha

    def dF(self, t):
        return -self.alpha * np.asarray(t, dtype=float) ** (self.alpha - 1.0)

    def formula(self, a):
        return np.exp(-np.log(a) ** self.alpha)


class _Rational(_Family):
    def __init__(self, num, den):
        self.P = np.trim_zeros(np.asarray(num, float), "b")
        self.Q = np.trim_zeros(np.asarray(den, float), "b")
        if self.P.size == 0 or self.Q.size == 0:
            raise SpecError("rational density needs nonzero numerator and denominator")
        if _positive_real_roots(self.Q, include_zero=True):
            raise SpecError("denominator vanishes on the real line")
        self.real_zeros = tuple(_positive_real_roots(self.P, include_zero=True))
        self.t_flat = None
        self.breaks = (0.0,)

    @staticmethod
    def _log_and_slope(c, t):
        # ln|c(e^t)| and its t-derivative; large t uses the reversed polynomial in e^-t
        deg = c.size - 1
        k = np.arange(deg + 1)
        t = np.asarray(t, dtype=float)
        big = t > 0
        val = np.empty(t.shape)
        slope = np.empty(t.shape)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if (~big).any():
                x = np.exp(t[~big])[..., None]
                pw = x ** k
                s0 = pw @ c
                s1 = pw @ (k * c)
                val[~big] = np.log(np.abs(s0))
                slope[~big] = s1 / s0
            if big.any():
                y = np.exp(-t[big])[..., None]
                pw = y ** (deg - k)
                s0 = pw @ c
                s1 = pw @ (k * c)
                val[big] = deg * t[big] + np.log(np.abs(s0))
                slope[big] = s1 / s0
        return val, slope

    def g(self, t):
        return self._log_and_slope(self.P, t)[0] - self._log_and_slope(self.Q, t)[0]

    def dg(self, t):
        return self._log_and_slope(self.P, t)[1] - self._log_and_slope(self.Q, t)[1]

    def w_abs(self, a):
        a = np.asarray(a, dtype=float)
        P = np.polynomial.polynomial.polyval(a, self.P)
        Q = np.polynomial.polynomial.polyval(a, self.Q)
        return P / Q


def _positive_real_roots(c, include_zero=False, tol=1e-9):
    c = np.trim_zeros(np.asarray(c, float), "b")
    if c.size <= 1:
        return []
    roots = np.polynomial.polynomial.polyroots(c)
    out = []
    for r in roots:
        if abs(r.imag) <= tol * max(1.0, abs(r)):
            x = abs(r.real)
            if x > 0 or include_zero:
                out.append(float(x))
    return sorted(set(round(x, 12) for x in out))


class _Tabulated(_Family):
    def __init__(self, table, tail: TailModel | None):
        if table is None or len(table) < 2:
            raise SpecError("tabulated density needs lambda and W columns")
        lam = np.asarray(table[0], float)
        W = np.asarray(table[1], float)
        if lam.size < 2 or lam.size != W.size:
            raise SpecError("table columns must have equal length >= 2")
        if np.any(lam < 0) or np.any(np.diff(lam) <= 0):
            raise SpecError("table lambda must be >= 0 and strictly ascending")
        self.lam, self.W = lam, W
        self.dW = np.asarray(table[2], float) if len(table) > 2 else None
        self.tail = tail
        self.has_tail = tail is not None
        self.differentiable = self.dW is not None
        self.positive = bool(np.all(W > 0))
        self.lambda0 = float(lam[-1])
        self.t_last = math.log(lam[-1])
        self.t_flat = math.log(lam[0]) if lam[0] > 0 else None
        self.breaks = tuple(float(x) for x in np.log(lam[lam > 0]))
        if tail is not None and tail.kind in ("log", "explog") and lam[-1] <= 1.0:
            raise SpecError("log-type tails need a table extending beyond lambda = 1")
        if self.positive:
            lnW = np.log(W)
            if self.dW is not None:
                self.spline = CubicHermiteSpline(lam, lnW, self.dW / W)
            else:
                self.spline = PchipInterpolator(lam, lnW)
            self.lnW_last = float(lnW[-1])

    def _check(self):
        if not self.positive:
            raise NonPositive("tabulated density has values <= 0")

    def _tail(self, t):
        k, a, tl = self.tail.kind, self.tail.alpha, self.t_last
        if k == "power":
            return self.lnW_last + a * (t - tl), np.full(t.shape, a)
        if k == "log":
            return self.lnW_last + a * (np.log(t) - math.log(tl)), a / t
        return self.lnW_last - t ** a + tl ** a, -a * t ** (a - 1.0)

    def _eval(self, t, deriv):
        self._check()
        t = np.asarray(t, dtype=float)
        out = np.empty(t.shape)
        beyond = t > self.t_last
        if beyond.any():
            if self.tail is None:
                raise TabulatedOutOfRange(
                    f"|lambda| = {math.exp(min(float(t[beyond].max()), 700.0)):.6g} beyond the table "
                    "and no tail model declared")
            out[beyond] = self._tail(t[beyond])[1 if deriv else 0]
        inside = ~beyond
        if inside.any():
            x = np.clip(np.exp(t[inside]), self.lam[0], self.lam[-1])
            if deriv:
                if self.dW is None:
                    raise NotDifferentiable("tabulated density without a derivative column")
                flat = np.exp(t[inside]) < self.lam[0]
                out[inside] = np.where(flat, 0.0, x * self.spline(x, 1))
            else:
                out[inside] = self.spline(x)
        return out

    def g(self, t):
        return self._eval(t, False)

    def dg(self, t):
        if self.dW is None:
            raise NotDifferentiable("tabulated density without a derivative column")
        return self._eval(t, True)

    def w_abs(self, a):
        self._check()
        a = np.asarray(a, dtype=float)
        out = np.empty(a.shape)
        inside = a <= self.lam[-1]
        out[inside] = np.exp(self.spline(np.clip(a[inside], self.lam[0], None)))
        if (~inside).any():
            out[~inside] = np.exp(self.g(np.log(a[~inside])))
        return out


class _CircleDirect(_Family):
    def __init__(self, phi, dphi, breaks):
        if callable(phi):
            self.phi, self.dphi = phi, dphi
            self.differentiable = dphi is not None and not breaks
            self.coeffs = None
        else:
            c = np.asarray(phi, float)
            if c.size == 0:
                raise SpecError("circle_direct needs at least one cosine coefficient")
            self.coeffs = c
            k = np.arange(c.size)
            self.phi = lambda th: np.cos(np.multiply.outer(th, k)) @ c
            self.dphi = lambda th: -np.sin(np.multiply.outer(th, k)) @ (k * c)
        self.angle_breaks = tuple(sorted(set(_wrap(b) for b in breaks)))
        bt = []
        for b in self.angle_breaks:
            if b == 0.0 or abs(b) == math.pi:
                continue
            bt.append(math.log(abs(1.0 / math.tan(b / 2.0))))
        self.breaks = tuple(sorted(set(bt)))
        self.t_flat = None

    def g(self, t):
        t = np.asarray(t, dtype=float)
        th = -2.0 * np.arctan(np.exp(-t))
        return np.asarray(self.phi(th), float) - math.log(2.0)

    def dg(self, t):
        if self.dphi is None:
            raise NotDifferentiable("circle_direct density given without a derivative")
        t = np.asarray(t, dtype=float)
        th = -2.0 * np.arctan(np.exp(-t))
        return np.asarray(self.dphi(th), float) / np.cosh(t)

    def w_abs(self, a):
        a = np.asarray(a, dtype=float)
        th = np.where(a == 0, math.pi, -2.0 * np.arctan(1.0 / np.where(a == 0, 1.0, a)))
        return np.exp(np.asarray(self.phi(th), float)) / 2.0


def _wrap(x: float) -> float:
    y = math.remainder(x, 2.0 * math.pi)
    return math.pi if y == -math.pi else y


def _build(spec: DensitySpec) -> _Family:
    f = spec.family
    if f == "white":
        return _White()
    if f in DEFAULT_SPLICE:
        if spec.alpha is None or not math.isfinite(spec.alpha):
            raise SpecError(f"{f} family needs a finite alpha")
        lam0 = DEFAULT_SPLICE[f] if spec.splice_radius is None else float(spec.splice_radius)
        floor = 0.0 if f == "power" else 2.0
        if not (lam0 > floor and math.isfinite(lam0)):
            raise SpecError(f"{f} splice radius must be finite and > {floor:g}")
        if f == "explog" and spec.alpha <= 0:
            raise SpecError("explog needs alpha > 0")
        return {"power": _Power, "logpow": _LogPow, "explog": _ExpLog}[f](spec.alpha, lam0)
    if f == "rational":
        return _Rational(spec.numerator, spec.denominator)
    if f == "tabulated":
        return _Tabulated(spec.table, spec.tail)
    return _CircleDirect(spec.phi, spec.dphi, spec.phi_breaks)


# --------------------------------------------------------------------------
# public evaluation API

def eval_density(spec: DensitySpec, lam):
    """``W(lambda)``; scalar in, float out, arrays elementwise."""
    a = np.abs(np.asarray(lam, dtype=float)) * spec.dilation
    if not np.all(np.isfinite(a)):
        raise ValueError("lambda must be finite")
    w = spec.impl.w_abs(np.atleast_1d(a)).reshape(a.shape)
    if spec.scale != 1.0:
        w = spec.scale * w
    return float(w) if w.ndim == 0 else w


def eval_log_derivative(spec: DensitySpec, lam):
    """``d/dlambda ln W(lambda)``; odd in lambda."""
    if not spec.differentiable:
        raise NotDifferentiable(f"{spec.describe()} has no derivative")
    x = np.atleast_1d(np.asarray(lam, dtype=float))
    a = np.abs(x)
    out = np.zeros(x.shape)
    nz = a > 0
    if nz.any():
        out[nz] = np.sign(x[nz]) * spec.dlnw_t(np.log(a[nz])) / a[nz]
    shaped = out.reshape(np.shape(lam))
    return float(shaped) if shaped.ndim == 0 else shaped


@dataclass(frozen=True)
class LogDensity:
    spec: DensitySpec

    @property
    def differentiable(self) -> bool:
        return self.spec.differentiable

    def value(self, lam):
        return np.log(eval_density(self.spec, lam))

    def derivative(self, lam):
        return eval_log_derivative(self.spec, lam)


def log_density(spec: DensitySpec) -> LogDensity:
    return LogDensity(spec)


@dataclass
class ValidationReport:
    family: str
    symmetric: bool
    positive: bool
    c1: bool | None
    max_value_mismatch: float | None
    max_derivative_mismatch: float | None
    tail: dict | None
    splice_radius: float | None
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _probe_grid() -> np.ndarray:
    inner = np.linspace(0.0, 4.0, 81)
    outer = np.geomspace(4.0, 1e8, 200)
    return np.concatenate([inner, outer[1:]])


def validate(spec: DensitySpec) -> ValidationReport:
    """Symmetry, positivity and splice checks; failures are listed, not raised."""
    failures = []
    try:
        impl = spec.impl
    except SpecError as exc:
        return ValidationReport(spec.family, False, False, None, None, None, None,
                                spec.splice_radius, [f"invalid spec: {exc}"])

    grid = _probe_grid()
    if spec.family == "tabulated":
        top = impl.lam[-1] if impl.tail is None else grid[-1]
        grid = np.unique(np.concatenate([impl.lam, grid[grid <= top]]))

    positive = True
    symmetric = True
    try:
        wp = eval_density(spec, grid)
        wm = eval_density(spec, -grid)
        if not np.all(wp > 0):
            positive = False
            failures.append(f"W <= 0 at lambda = {grid[~(wp > 0)][0]:.6g}")
        if not np.all(np.abs(wp - wm) <= 1e-12 * np.abs(wp)):
            symmetric = False
            failures.append("W(lambda) != W(-lambda)")
    except NonPositive as exc:
        positive = False
        failures.append(f"positivity: {exc}")
    if spec.family == "circle_direct" and positive:
        th = np.linspace(-math.pi, math.pi, 2049)[1:]
        ph = np.asarray(impl.phi(th), float)
        if not np.allclose(ph, np.asarray(impl.phi(-th), float), rtol=1e-12, atol=1e-12):
            symmetric = False
            if "W(lambda) != W(-lambda)" not in failures:
                failures.append("W(lambda) != W(-lambda)")
    if spec.family == "rational" and impl.real_zeros:
        positive = False
        failures.append(f"W vanishes at lambda = {impl.real_zeros}")

    c1 = None
    vmis = dmis = None
    if isinstance(impl, _Spliced):
        j = impl.joints()
        vmis = max(x[1] for x in j)
        dmis = max(x[2] for x in j)
        c1 = vmis < 1e-9 and dmis < 1e-9
        if not c1:
            failures.append(f"splice mismatch: value {vmis:.3g}, slope {dmis:.3g}")
    elif spec.family == "tabulated":
        c1 = impl.differentiable
    else:
        c1 = spec.differentiable

    tail = None
    if spec.family == "tabulated":
        if spec.tail is None:
            failures.append("no tail model declared beyond the table")
        else:
            tail = {"kind": spec.tail.kind, "alpha": spec.tail.alpha}
    elif spec.family in DEFAULT_SPLICE:
        tail = {"kind": {"power": "power", "logpow": "log", "explog": "explog"}[spec.family],
                "alpha": spec.alpha}
    return ValidationReport(spec.family, symmetric, positive, c1, vmis, dmis, tail,
                            impl.lambda0, failures)


# --------------------------------------------------------------------------
# serialisation

_KEYS = {"family", "alpha", "splice_radius", "table", "tail", "numerator", "denominator",
         "phi", "steps", "scale", "dilation", "symmetric", "label"}


def _step_phi(steps):
    pieces = []
    for item in steps:
        if len(item) != 3:
            raise SpecError("each step is [theta_start, theta_end, value]")
        pieces.append(tuple(map(float, item)))

    def phi(th):
        th = np.asarray(th, dtype=float)
        out = np.zeros(th.shape)
        for a, b, v in pieces:
            out = np.where((th >= a) & (th < b), v, out)
        return out

    phi.steps = tuple(pieces)
    breaks = sorted({p[0] for p in pieces} | {p[1] for p in pieces})
    return phi, breaks


def read_table(path: Path) -> tuple:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SpecError(f"{path}: empty table")
    header = [h.strip() for h in rows[0]]
    if header not in (["lambda", "W"], ["lambda", "W", "dW"]):
        raise SpecError(f"{path}: header must be lambda,W[,dW]")
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise SpecError(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[1] != len(header):
        raise SpecError(f"{path}: ragged table")
    return tuple(tuple(col) for col in data.T)


def spec_from_dict(d: dict, base: Path | None = None) -> DensitySpec:
    unknown = set(d) - _KEYS
    if unknown:
        raise SpecError(f"unknown spec keys: {sorted(unknown)}")
    if "family" not in d:
        raise SpecError("spec needs a family")
    fam = d["family"]
    common = {k: d[k] for k in ("scale", "dilation", "symmetric", "label") if k in d}
    tail = None
    if d.get("tail") is not None:
        t = d["tail"]
        if not isinstance(t, dict) or set(t) - {"kind", "alpha"} or "kind" not in t:
            raise SpecError("tail must be {\"kind\": ..., \"alpha\": ...}")
        tail = TailModel(t["kind"], float(t.get("alpha", 0.0)))
    try:
        if fam == "white":
            spec = DensitySpec.white(**common)
        elif fam in DEFAULT_SPLICE:
            if "alpha" not in d:
                raise SpecError(f"{fam} needs alpha")
            spec = DensitySpec(fam, alpha=float(d["alpha"]), splice_radius=d.get("splice_radius"),
                               **common)
        elif fam == "rational":
            spec = DensitySpec.rational(d["numerator"], d.get("denominator", [1.0]), **common)
        elif fam == "tabulated":
            if "table" not in d:
                raise SpecError("tabulated spec needs a table")
            tab = d["table"]
            if isinstance(tab, str):
                p = Path(tab)
                if base is not None and not p.is_absolute():
                    p = base / p
                cols = read_table(p)
            else:
                cols = tuple(tuple(map(float, c)) for c in zip(*tab))
            spec = DensitySpec("tabulated", table=cols, tail=tail, **common)
        elif fam == "circle_direct":
            if "steps" in d:
                phi, br = _step_phi(d["steps"])
                spec = DensitySpec.circle_direct(phi, breaks=br, **common)
            else:
                spec = DensitySpec.circle_direct(d["phi"], **common)
        else:
            raise SpecError(f"unknown family {fam!r}")
    except (KeyError, TypeError) as exc:
        raise SpecError(f"malformed spec: {exc}") from exc
    spec.impl  # fail early on bad parameters
    return spec


def load_spec(path) -> DensitySpec:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: {exc}") from exc
    if not isinstance(d, dict):
        raise SpecError(f"{path}: spec must be a JSON object")
    return spec_from_dict(d, base=path.parent)


def spec_to_dict(spec: DensitySpec) -> dict:
    d: dict = {"family": spec.family}
    if spec.alpha is not None:
        d["alpha"] = spec.alpha
    if spec.family in DEFAULT_SPLICE:
        d["splice_radius"] = spec.lambda0
    if spec.family == "rational":
        d["numerator"] = list(spec.numerator)
        d["denominator"] = list(spec.denominator)
    if spec.family == "tabulated":
        d["table"] = [list(row) for row in zip(*spec.table)]
        d["tail"] = None if spec.tail is None else {"kind": spec.tail.kind, "alpha": spec.tail.alpha}
    if spec.family == "circle_direct":
        if callable(spec.phi):
            steps = getattr(spec.phi, "steps", None)
            if steps:
                d["steps"] = [list(s) for s in steps]
            else:
                d["phi"] = "callable"
        else:
            d["phi"] = list(spec.phi)
    if spec.scale != 1.0:
        d["scale"] = spec.scale
    if spec.dilation != 1.0:
        d["dilation"] = spec.dilation
    if spec.label:
        d["label"] = spec.label
    return d
