"""The Cayley map z = (lambda - i)/(lambda + i) and circle densities.

Angles follow ``z = exp(i theta)`` with ``theta`` in ``(-pi, pi]``. The map
sends ``lambda = 0`` to ``theta = pi`` and ``lambda -> +inf`` to ``theta -> 0-``.
"""
from __future__ import annotations

import math
from functools import partial
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .density import DensitySpec
from .errors import (EvaluationFailure, NonPositive, NotConverged, PoleMismatch,
                     TabulatedOutOfRange)
from .quadrature import (FINITE, INCONCLUSIVE, LOG_ORIGIN, ConvergenceProbe, LadderParams,
                         merge_edges, panel_nodes, probe_log_integrand)

POLE_GUARD = 1e-9
LN2 = math.log(2.0)


def cayley_forward(lam):
    """Angle of ``(lambda - i)/(lambda + i)``; odd and strictly decreasing on each side of 0."""
    x = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore"):
        th = np.where(x == 0.0, math.pi, -2.0 * np.arctan(1.0 / x))
    return float(th) if th.ndim == 0 else th


def cayley_inverse(theta):
    """``lambda = -cot(theta/2)``; ``theta = 0`` maps to infinity."""
    th = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        lam = np.where(np.abs(th) == math.pi, 0.0, -1.0 / np.tan(th / 2.0))
    return float(lam) if lam.ndim == 0 else lam


def chord_sq_at_one(lam):
    """``|1 - z|**2`` as a function of lambda: ``4 / (lambda**2 + 1)``."""
    x = np.asarray(lam, dtype=float)
    return 4.0 / (x * x + 1.0)


def line_jacobian(lam):
    """``d theta / d lambda`` in absolute value: ``2 / (lambda**2 + 1)``."""
    x = np.asarray(lam, dtype=float)
    return 2.0 / (x * x + 1.0)


def _wrap(x):
    y = np.remainder(np.asarray(x, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    return np.where(y == -math.pi, math.pi, y)


def _chord_sq(theta, a):
    # |e^{i theta} - e^{i a}|^2
    return 4.0 * np.sin((np.asarray(theta, dtype=float) - a) / 2.0) ** 2


def _merge(factors, angle, mult):
    out = dict(factors)
    key = float(_wrap(angle))
    out[key] = out.get(key, 0) + mult
    return tuple(sorted((a, m) for a, m in out.items() if m != 0))


@dataclass(frozen=True, eq=False)
class CircleDensity:
    """``dmu/dtheta = w(theta) * prod |z - z_i|**(2 m_i) / prod |z - p_j|**(2 m_j)``.

    ``log_w`` returns ``ln w`` and must be vectorised. ``breaks`` lists angles
    where ``w`` is not smooth (used by quadrature). ``moment_fn(n_max)``
    optionally returns the moments ``c_0..c_n_max`` of ``w dtheta`` alone;
    zero factors are applied on top of it (see :mod:`offwhite.paf`).
    """

    log_w: Callable
    poles: tuple = ()
    zeros: tuple = ()
    breaks: tuple = ()
    label: str = ""
    moment_fn: Callable | None = None

    @classmethod
    def from_log(cls, log_w: Callable, **kw) -> "CircleDensity":
        return cls(log_w, **kw)

    @classmethod
    def from_function(cls, w: Callable, **kw) -> "CircleDensity":
        def log_w(th):
            with np.errstate(divide="ignore"):
                v = np.asarray(w(th), dtype=float)
            if np.any(v <= 0):
                raise NonPositive("circle density must be positive on its smooth part")
            return np.log(v)
        return cls(log_w, **kw)

    @classmethod
    def lebesgue(cls) -> "CircleDensity":
        return cls(lambda th: np.zeros(np.shape(th)), label="lebesgue")

    @classmethod
    def cosine(cls, coeffs, label: str = "") -> "CircleDensity":
        """``w = exp(sum a_k cos(k theta))``."""
        c = np.asarray(coeffs, dtype=float)
        k = np.arange(c.size)
        return cls(lambda th: np.cos(np.multiply.outer(th, k)) @ c, label=label)

    @property
    def pole_multiplicity(self) -> int:
        return int(sum(m for _, m in self.poles))

    @property
    def zero_multiplicity(self) -> int:
        return int(sum(m for _, m in self.zeros))

    def smooth(self, theta):
        return np.exp(self.log_w(_wrap(np.asarray(theta, dtype=float))))

    def log_density(self, theta):
        th = np.asarray(theta, dtype=float)
        out = np.asarray(self.log_w(_wrap(th)), dtype=float).copy()
        for a, m in self.poles:
            d = np.abs(_wrap(th - a))
            if np.any(d < POLE_GUARD):
                raise PoleMismatch(f"evaluation within {POLE_GUARD:g} rad of the pole at {a:g}")
            out = out - m * np.log(_chord_sq(th, a))
        with np.errstate(divide="ignore"):
            for a, m in self.zeros:
                out = out + m * np.log(_chord_sq(th, a))
        return out

    def density(self, theta):
        return np.exp(self.log_density(theta))

    def times_zero(self, angle: float, mult: int = 1) -> "CircleDensity":
        """Multiply by ``|z - e^{i angle}|**(2 mult)``; cancels a pole there first."""
        key = float(_wrap(angle))
        poles = dict(self.poles)
        zeros_add = mult
        if key in poles:
            cancel = min(poles[key], mult)
            poles[key] -= cancel
            zeros_add -= cancel
        new_poles = tuple(sorted((a, m) for a, m in poles.items() if m > 0))
        new_zeros = _merge(self.zeros, key, zeros_add) if zeros_add else self.zeros
        return replace(self, poles=new_poles, zeros=new_zeros)

    def pole_free(self) -> tuple["CircleDensity", int]:
        """Cancel every pole; return the finite density and the total multiplicity."""
        out = self
        for a, m in self.poles:
            out = out.times_zero(a, m)
        return out, self.pole_multiplicity

    def conjugate(self) -> "CircleDensity":
        lw = self.log_w
        return CircleDensity(lambda th: lw(-np.asarray(th, dtype=float)),
                             tuple(sorted((float(_wrap(-a)), m) for a, m in self.poles)),
                             tuple(sorted((float(_wrap(-a)), m) for a, m in self.zeros)),
                             tuple(sorted(float(_wrap(-b)) for b in self.breaks)),
                             self.label + "~" if self.label else "")

    def is_symmetric(self, n: int = 1024, tol: float = 1e-12) -> bool:
        th = np.linspace(-math.pi, math.pi, n, endpoint=False)[1:]
        a, b = self.log_w(th), self.log_w(-th)
        if not np.allclose(a, b, rtol=tol, atol=tol):
            return False
        for lst in (self.poles, self.zeros):
            s = {(round(float(x), 12), m) for x, m in lst}
            if s != {(round(float(_wrap(-x)), 12), m) for x, m in lst}:
                return False
        return True

    def all_breaks(self) -> tuple:
        pts = set(float(_wrap(b)) for b in self.breaks)
        pts |= {float(a) for a, _ in self.zeros}
        return tuple(sorted(pts))


# --------------------------------------------------------------------------

def _log_weight(spec: DensitySpec, m: int):
    """``ln`` of ``2 W(lambda) (4 / (lambda**2 + 1))**(m - 1)`` as a function of ``t = ln|lambda|``."""

    def f(t):
        t = np.asarray(t, dtype=float)
        out = LN2 + spec.lnw_t(t)
        if m != 1:
            out = out + (m - 1) * (2 * LN2 - np.logaddexp(0.0, 2.0 * t))
        return out

    return f


def _t_of_theta(th):
    th = np.asarray(th, dtype=float)
    with np.errstate(divide="ignore"):
        # |lambda| = |cot(theta/2)|
        return np.log(np.abs(np.cos(th / 2.0))) - np.log(np.abs(np.sin(th / 2.0)))


def pushforward_density(spec: DensitySpec, m: int, pole_factor: bool | None = None) -> CircleDensity:
    """Image of ``W(lambda) dlambda`` under the Cayley map.

    The circle density is ``w(z) / |1 - z|**(2m)`` with smooth part
    ``w = 2 W(lambda) |1 - z|**(2m - 2)``, so that ``w = 2W`` when ``m = 1``.
    With ``pole_factor=False`` the pole is dropped and the returned density is
    the finite measure ``w dtheta``.
    """
    if m < 0:
        raise PoleMismatch("moderation order must be >= 0")
    if pole_factor is None:
        pole_factor = m >= 1
    if pole_factor and m == 0:
        raise PoleMismatch("m = 0 has no pole factor at z = 1")
    poles = ((0.0, m),) if pole_factor else ()
    if spec.family == "circle_direct" and m == 1 and spec.dilation == 1.0:
        # given on the circle already; no detour through |lambda|, so asymmetric phi survives
        phi, shift = spec.impl.phi, math.log(spec.scale)

        def log_w_direct(th):
            return shift + np.asarray(phi(np.asarray(th, dtype=float)), dtype=float)

        return CircleDensity(log_w_direct, poles=poles, breaks=spec.impl.angle_breaks,
                             label=f"pushforward[{spec.describe()}]")
    lw_t = _log_weight(spec, m)

    def log_w(th):
        return lw_t(_t_of_theta(th))

    br = []
    for b in spec.breaks_t:
        a = 2.0 * math.atan(math.exp(-b))
        br += [a, -a]
    mfn = None if spec.family == "circle_direct" else partial(line_moments, spec, m)
    return CircleDensity(log_w, poles=poles, breaks=tuple(sorted(br)),
                         label=f"pushforward[{spec.describe()}]", moment_fn=mfn)


def _t_panels(n_max: int, t_lo: float, t_hi: float, refine: int, breaks) -> np.ndarray:
    # panel width follows the phase rate n / cosh(t) of cos(n theta(e^t))
    edges = [t_lo]
    t = t_lo
    n = max(n_max, 1)
    while t < t_hi:
        width = min(0.5, 2.0 * math.cosh(min(abs(t), 700.0)) / n) / 2 ** refine
        t = min(t + width, t_hi)
        edges.append(t)
    return merge_edges(edges, [b for b in breaks if t_lo < b < t_hi])


def line_moments(spec: DensitySpec, m: int, n_max: int, tol: float = 1e-10) -> np.ndarray:
    """Moments of ``w dtheta`` computed on the line, for symmetric ``W``.

    With ``theta = theta(lambda)`` and ``dtheta = 2 dlambda / (1 + lambda**2)``,
    ``c_n = 2 * integral over lambda > 0 of cos(n theta) w 2/(1 + lambda**2) dlambda``.
    This avoids sampling ``w`` near ``theta = 0``, where it is typically only
    log-regular.
    """
    lw = _log_weight(spec, m)

    def log_weight(t):
        return lw(t) + LN2 - np.logaddexp(0.0, 2.0 * t) + t

    t_lo = LOG_ORIGIN
    t_hi = 40.0
    # extend until the remaining mass is negligible
    while t_hi < 1e4 and float(log_weight(np.array([t_hi]))[0]) > math.log(1e-18):
        t_hi *= 1.5
    ns = np.arange(n_max + 1)
    prev = None
    for refine in range(4):
        edges = _t_panels(n_max, t_lo, t_hi, refine, spec.breaks_t)
        x, w = panel_nodes(edges, 16)
        t, w = x.ravel(), w.ravel()
        f = 2.0 * np.exp(log_weight(t)) * w
        th = -2.0 * np.arctan(np.exp(-t))
        c = np.empty(ns.size)
        for i in range(0, ns.size, 64):
            blk = ns[i:i + 64]
            c[i:i + 64] = np.cos(np.outer(blk, th)) @ f
        if prev is not None and np.max(np.abs(c - prev)) <= tol * c[0]:
            return c.astype(complex)
        prev = c
    raise NotConverged("line moments did not stabilise")


@dataclass
class ModerationReport:
    order: int | None
    verdict: str
    probes: dict = field(default_factory=dict)
    m_max: int = 6
    monotone: bool = True
    note: str = ""


def moderation_integrand(spec: DensitySpec, m: int):
    """Log-coordinate integrand of ``integral of W(lambda) (1+lambda**2)**-m`` over the half-line."""

    def h(t):
        t = np.asarray(t, dtype=float)
        return np.exp(spec.lnw_t(t) + t - m * np.logaddexp(0.0, 2.0 * t))

    return h


def moderation_order(spec: DensitySpec, m_max: int = 6, params: LadderParams | None = None,
                     extra: int = 1) -> ModerationReport:
    """Least ``m`` with ``integral of W (1 + lambda**2)**-m dlambda`` finite.

    Probes are scaled by 2 to cover the whole line. After the first Finite
    verdict, ``extra`` further orders are probed to confirm monotonicity.
    """
    if m_max < 0:
        raise ValueError("m_max must be >= 0")
    params = params or LadderParams()
    t_lo = LOG_ORIGIN if spec.t_flat is None else max(LOG_ORIGIN, min(spec.t_flat, 0.0) - 1.0)
    probes: dict[int, ConvergenceProbe] = {}
    order = None
    for m in range(m_max + 1):
        try:
            pr = probe_log_integrand(moderation_integrand(spec, m), t_lo, params, spec.breaks_t)
        except (TabulatedOutOfRange, EvaluationFailure, NonPositive) as exc:
            probes[m] = ConvergenceProbe.inconclusive(f"{type(exc).__name__}: {exc}")
            return ModerationReport(None, INCONCLUSIVE, probes, m_max, True,
                                    f"probe of order {m} could not run")
        _double(pr)
        probes[m] = pr
        if pr.verdict == FINITE and order is None:
            order = m
        if order is not None and m >= order + extra:
            break
        if pr.verdict == INCONCLUSIVE and order is None:
            return ModerationReport(None, INCONCLUSIVE, probes, m_max, True,
                                    f"order {m} probe inconclusive")
    if order is None:
        return ModerationReport(None, "NotModerate", probes, m_max, True,
                                f"no finite probe up to m = {m_max}")
    monotone = all(probes[k].verdict == FINITE for k in probes if k >= order)
    return ModerationReport(order, "Moderate", probes, m_max, monotone,
                            "" if monotone else "finite verdicts not monotone in m")


def _double(pr: ConvergenceProbe) -> None:
    for st in pr.stages:
        st.values = [2.0 * v for v in st.values]
    for attr in ("value", "error"):
        v = getattr(pr, attr)
        if v is not None:
            setattr(pr, attr, 2.0 * v)
    if pr.rate is not None and pr.model in ("log",):
        pr.rate *= 2.0
