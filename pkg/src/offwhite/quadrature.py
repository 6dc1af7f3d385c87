"""Ladder probes for improper integrals.

Whether an improper integral is finite cannot be decided from finitely many
samples. A probe evaluates partial integrals on a ladder of cutoffs and reads a
verdict off the increments between rungs:

* increments shrinking below ``tau_rel`` of the running value -> Finite;
* increments decaying as a clean power of the cutoff -> Finite, with the
  geometric tail added to the last partial value;
* increments constant (log growth) or growing -> Divergent;
* anything else -> Inconclusive.

Slowly varying integrands (tails like ``(ln x)^p``) look alike on a ladder
that doubles the cutoff.  For them a second ladder doubles ``ln`` of the
cutoff instead, so that ``(ln x)^p`` becomes a clean power of the ladder
variable. That ladder needs the integrand in logarithmic coordinates. All
integrands inside this package are written that way, so cutoffs like
``exp(9e4)`` cause no overflow.

The verdicts are heuristic. Every probe carries its full ladder so a reader
can audit the call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import EvaluationFailure, SpecError

FINITE = "Finite"
DIVERGENT = "Divergent"
INCONCLUSIVE = "Inconclusive"

MODELS = ("constant", "log", "power", "logpower")

# Lower end used when a half-line integral starts at the origin: the strip
# (0, e**-40) is dropped, which is below double precision for bounded integrands.
LOG_ORIGIN = -40.0


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_nodes(edges, order: int = 16):
    """Gauss-Legendre nodes and weights on every panel ``[edges[i], edges[i+1]]``.

    Returns ``(nodes, weights)`` with shape ``(n_panels, order)``.
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    return mid + half * x[None, :], half * w[None, :]


def integrate_panels(f: Callable, edges, order: int = 16) -> np.ndarray:
    """Per-panel integrals of a vectorised ``f``, summed in panel order."""
    nodes, weights = panel_nodes(edges, order)
    vals = _safe_eval(f, nodes)
    return np.sum(vals * weights, axis=1)


def _safe_eval(f, x):
    try:
        with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
            y = np.asarray(f(x), dtype=float)
    except (ValueError, ArithmeticError) as exc:
        raise EvaluationFailure(str(exc)) from exc
    if y.shape != np.shape(x):
        y = np.broadcast_to(y, np.shape(x))
    if not np.all(np.isfinite(y)):
        bad = np.asarray(x)[~np.isfinite(y)]
        raise EvaluationFailure(f"integrand is not finite at {bad.ravel()[:3]}")
    return y


def merge_edges(edges, breakpoints=()):
    pts = np.concatenate([np.asarray(edges, float), np.asarray(list(breakpoints), float)])
    lo, hi = pts[0], np.asarray(edges, float)[-1]
    pts = np.unique(pts[(pts >= lo) & (pts <= hi)])
    return pts


@dataclass(frozen=True)
class LadderParams:
    """Ladder and decision tolerances.

    ``lambda0`` and ``steps`` define the cutoff ladder ``lambda0 * 2**j``;
    the iterated ladder uses ``ln(lambda0) * 2**j``.
    """

    lambda0: float = 16.0
    steps: int = 16
    tau_rel: float = 1e-3
    trailing: int = 3
    fit_quality: float = 0.98
    order: int = 16
    window: int = 6
    iterated: bool = True
    max_log_cutoff: float = math.inf

    def __post_init__(self):
        if not (self.lambda0 > 1.0 and math.isfinite(self.lambda0)):
            raise SpecError("lambda0 must be a finite number > 1")
        if not 6 <= self.steps <= 64:
            raise SpecError("ladder steps must lie in [6, 64]")
        if not 0.0 < self.tau_rel < 1.0:
            raise SpecError("tau_rel must lie in (0, 1)")
        if not 1 <= self.trailing < self.steps:
            raise SpecError("trailing must lie in [1, steps)")
        if not 0.0 < self.fit_quality <= 1.0:
            raise SpecError("fit_quality must lie in (0, 1]")
        if not 4 <= self.order <= 128:
            raise SpecError("quadrature order must lie in [4, 128]")
        if not 4 <= self.window < self.steps:
            raise SpecError("window must lie in [4, steps)")


@dataclass
class LadderStage:
    variable: str
    cutoffs: list
    values: list


@dataclass
class GrowthFit:
    model: str
    rate: float
    coefficient: float
    offset: float
    quality: float
    rss: float


@dataclass
class ConvergenceProbe:
    verdict: str
    stages: list = field(default_factory=list)
    model: str | None = None
    rate: float | None = None
    quality: float | None = None
    value: float | None = None
    error: float | None = None
    monotone: bool = True
    note: str = ""

    @property
    def cutoffs(self) -> list:
        return self.stages[-1].cutoffs if self.stages else []

    @property
    def values(self) -> list:
        return self.stages[-1].values if self.stages else []

    @property
    def finite(self) -> bool:
        return self.verdict == FINITE

    @property
    def divergent(self) -> bool:
        return self.verdict == DIVERGENT

    @classmethod
    def inconclusive(cls, note: str) -> "ConvergenceProbe":
        return cls(verdict=INCONCLUSIVE, note=note)


# --------------------------------------------------------------------------
# growth models

def _linear_fit(basis: np.ndarray, v: np.ndarray):
    A = np.column_stack([np.ones_like(basis), basis])
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    rss = float(np.sum((A @ coef - v) ** 2))
    return coef, rss


def _fit_exponent(v, base):
    """Best ``a + c * base**p`` over p in (0, 4], with c >= 0."""

    def rss_for(p):
        coef, rss = _linear_fit(base ** p, v)
        if coef[1] < 0:
            return rss + 1e3 * (abs(rss) + 1.0)
        return rss

    res = minimize_scalar(rss_for, bounds=(1e-3, 4.0), method="bounded",
                          options={"xatol": 1e-7})
    p = float(res.x)
    coef, rss = _linear_fit(base ** p, v)
    return p, coef, rss


def fit_growth(values: Sequence[float], cutoffs: Sequence[float],
               models: Sequence[str] = MODELS) -> GrowthFit:
    """Least-squares fit of partial values against the growth-model family.

    Models are ``constant``, ``a + c ln x`` (``log``), ``a + c x**p``
    (``power``) and ``a + c (ln x)**p`` (``logpower``). The reported ``rate``
    is ``c`` for the log model and the exponent ``p`` for the power models.
    A richer model is chosen only if it cuts the residual by more than a
    factor 1.5 over the simplest adequate one.
    """
    v = np.asarray(values, dtype=float)
    x = np.asarray(cutoffs, dtype=float)
    if v.size < 6 or v.size != x.size:
        raise ValueError("fit_growth needs at least six ladder points")
    tss = float(np.sum((v - v.mean()) ** 2))
    scale = max(float(np.max(np.abs(v))), 1e-300)

    fits: dict[str, GrowthFit] = {}
    if "constant" in models:
        rss = tss
        fits["constant"] = GrowthFit("constant", 0.0, 0.0, float(v.mean()), 0.0, rss)
    if "log" in models:
        coef, rss = _linear_fit(np.log(x), v)
        fits["log"] = GrowthFit("log", float(coef[1]), float(coef[1]), float(coef[0]), 0.0, rss)
    if "power" in models:
        base = x / x[0]
        p, coef, rss = _fit_exponent(v, base)
        fits["power"] = GrowthFit("power", p, float(coef[1]) / x[0] ** p, float(coef[0]), 0.0, rss)
    if "logpower" in models and np.all(x > 1.0):
        p, coef, rss = _fit_exponent(v, np.log(x))
        fits["logpower"] = GrowthFit("logpower", p, float(coef[1]), float(coef[0]), 0.0, rss)

    for fit in fits.values():
        fit.quality = 1.0 - fit.rss / tss if tss > 0 else (1.0 if fit.rss <= 1e-24 * scale**2 else 0.0)

    # a sequence that has settled is constant whatever the other fits say
    rel = np.abs(np.diff(v)[-3:]) / scale
    if "constant" in fits and (tss <= (1e-6 * scale) ** 2 * v.size or np.all(rel <= 1e-3)):
        best = fits["constant"]
        best.offset = float(v[-1])
        best.quality = 1.0 - float(rel.max())
        return best

    floor = 1e-20 * scale**2 * v.size
    best_rss = min(f.rss for f in fits.values())
    for name in MODELS:
        if name in fits and fits[name].rss <= 1.5 * best_rss + floor:
            return fits[name]
    return min(fits.values(), key=lambda f: f.rss)


# --------------------------------------------------------------------------
# ladder assessment

@dataclass
class _Assessment:
    verdict: str
    model: str | None = None
    rate: float | None = None
    quality: float | None = None
    value: float | None = None
    error: float | None = None
    escalate: bool = False
    note: str = ""


def _geometric_tail(last_inc: float, r: float) -> float:
    return last_inc * r / (1.0 - r)


def assess_ladder(cutoffs, values, params: LadderParams, variable: str = "lambda",
                  allow_escalation: bool = False) -> _Assessment:
    """Verdict for one ladder; ``variable`` names what the cutoffs measure.

    On a ``log-lambda`` ladder a power law in the ladder variable means a
    power of ``ln`` of the original cutoff. Any other variable is treated
    like ``lambda``.
    """
    x = np.asarray(cutoffs, dtype=float)
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    tiny = 1e-300
    R, w = params.trailing, min(params.window, d.size)
    iterated = variable == "log-lambda"

    if np.all(v == 0.0):
        return _Assessment(FINITE, "constant", 0.0, 1.0, 0.0, 0.0, note="identically zero")

    rel = np.abs(d[-R:]) / np.maximum(np.abs(v[-R:]), tiny)
    if np.all(rel <= params.tau_rel):
        tail = 0.0
        if d[-1] > 0 and d[-2] > 0 and d[-1] < d[-2]:
            tail = _geometric_tail(d[-1], d[-1] / d[-2])
        err = max(abs(tail), abs(d[-1]), 1e-15 * abs(v[-1]))
        fit = fit_growth(v[-w - 1:], x[-w - 1:], models=("constant",))
        return _Assessment(FINITE, "constant", 0.0, max(fit.quality, 1.0 - float(rel.max())),
                           float(v[-1] + tail), float(err),
                           note="trailing relative increments within tau_rel")

    dd = d[-w:]
    xx = x[-w:]
    if np.any(dd <= 0):
        return _Assessment(INCONCLUSIVE, escalate=allow_escalation,
                           note="increments not strictly positive in the trailing window")

    lx, ld = np.log(xx), np.log(dd)
    q_local = np.diff(ld) / np.diff(lx)
    A = np.column_stack([np.ones_like(lx), lx])
    coef, res, *_ = np.linalg.lstsq(A, ld, rcond=None)
    slope = float(coef[1])
    resid = ld - A @ coef
    dof = max(lx.size - 2, 1)
    se = float(math.sqrt(float(resid @ resid) / dof / float(np.sum((lx - lx.mean()) ** 2))))
    qa, qb = float(np.mean(q_local[:2])), float(np.mean(q_local[-2:]))
    clean = abs(qa - qb) <= 0.1 * abs(qb) + 0.005
    flat_tol = 0.005 if iterated else 0.01
    div_min = 0.005 if iterated else 0.1
    decay_min = 0.005 if iterated else 0.25

    if np.all(q_local >= div_min) and (clean or not iterated):
        if iterated:
            if abs(qb - 1.0) <= 0.05:
                fit = fit_growth(v[-w - 1:], x[-w - 1:], models=("log",))
                # ladder variable is ln(cutoff): a + c * T is the log model
                coef, rss = _linear_fit(x[-w - 1:], v[-w - 1:])
                model, rate = "log", float(coef[1])
                quality = _r2(v[-w - 1:], rss)
            else:
                model, rate = "logpower", qb
                p, coef, rss = _fit_exponent(v[-w - 1:], x[-w - 1:] / x[-w - 1])
                quality = _r2(v[-w - 1:], rss)
        else:
            fit = fit_growth(v[-w - 1:], x[-w - 1:], models=("power",))
            model, rate, quality = "power", qb, fit.quality
        if quality >= params.fit_quality:
            return _Assessment(DIVERGENT, model, float(rate), float(quality),
                               note=f"increments grow with local exponent {qb:.4g}")
        return _Assessment(INCONCLUSIVE, model, float(rate), float(quality), escalate=allow_escalation,
                           note="growth detected but fit quality below threshold")

    if clean and abs(qb) <= flat_tol:
        if iterated:
            return _Assessment(INCONCLUSIVE, note="increments constant on the ln-ladder "
                               "(growth like ln ln of the cutoff); undecidable at this depth")
        fit = fit_growth(v[-w - 1:], x[-w - 1:], models=("log",))
        if fit.quality >= params.fit_quality and fit.rate > 0:
            return _Assessment(DIVERGENT, "log", fit.rate, fit.quality,
                               note="constant increments: logarithmic growth")
        return _Assessment(INCONCLUSIVE, "log", fit.rate, fit.quality, escalate=allow_escalation,
                           note="log growth with poor fit quality")

    if clean and qb <= -decay_min and slope + 3.0 * se < 0.0:
        ratio = x[-1] / x[-2]
        r = ratio ** qb
        tail = _geometric_tail(d[-1], r)
        spread = max(3.0 * se, abs(qa - qb))
        dr = abs(r * math.log(ratio)) * spread
        err = abs(d[-1]) * dr / (1.0 - r) ** 2 + 0.01 * abs(tail) + 1e-15 * abs(v[-1])
        quality = _r2(ld, float(resid @ resid))
        return _Assessment(FINITE, "constant", 0.0, quality, float(v[-1] + tail), float(err),
                           note=f"increments decay with exponent {qb:.4g}; geometric tail added")

    return _Assessment(INCONCLUSIVE, escalate=allow_escalation,
                       note=f"no clean asymptotics (local exponents {qa:.3g} -> {qb:.3g})")


def _r2(v, rss):
    v = np.asarray(v, float)
    tss = float(np.sum((v - v.mean()) ** 2))
    return 1.0 - rss / tss if tss > 0 else 1.0


def _to_probe(a: _Assessment, stages, monotone) -> ConvergenceProbe:
    note = a.note
    if not monotone:
        note = (note + "; " if note else "") + "partial values decreased somewhere on the ladder"
    return ConvergenceProbe(a.verdict, stages, a.model, a.rate, a.quality, a.value, a.error,
                            monotone, note)


def _monotone(values) -> bool:
    v = np.asarray(values, float)
    return bool(np.all(np.diff(v) >= -1e-12 * np.maximum(np.abs(v[1:]), 1e-300)))


def assess_sequence(cutoffs, values, params: LadderParams | None = None,
                    variable: str = "lambda") -> ConvergenceProbe:
    """Probe built from an already computed ladder (grids, section sizes, ...)."""
    params = params or LadderParams()
    stage = LadderStage(variable, [float(c) for c in cutoffs], [float(x) for x in values])
    a = assess_ladder(cutoffs, values, params, variable)
    return _to_probe(a, [stage], _monotone(values))


# --------------------------------------------------------------------------
# probes

def probe_log_integrand(h: Callable, t_lo: float, params: LadderParams | None = None,
                        breakpoints: Sequence[float] = (), variable: str = "lambda") -> ConvergenceProbe:
    """Probe ``V(T) = integral of h(t) dt`` over ``[t_lo, T]``, ``T = ln(cutoff)``.

    ``h`` is the integrand in logarithmic coordinates, i.e. for a half-line
    integral of ``f(lam)`` it is ``f(e**t) * e**t``. The first ladder uses
    ``T_j = ln(lambda0) + j ln 2``; when it is inconclusive and
    ``params.iterated`` holds, a second ladder uses ``T_j = ln(lambda0) * 2**j``.
    """
    params = params or LadderParams()
    T0 = math.log(params.lambda0)
    if t_lo >= T0:
        raise ValueError("lower end must lie below ln(lambda0)")
    bps = [b for b in breakpoints if math.isfinite(b)]

    # initial segment: panels of width <= 0.5 plus breakpoints
    n0 = max(int(math.ceil((T0 - t_lo) / 0.5)), 1)
    edges0 = merge_edges(np.linspace(t_lo, T0, n0 + 1), bps)
    v0 = float(np.sum(integrate_panels(h, edges0, params.order)))

    cut1 = T0 + math.log(2.0) * np.arange(params.steps)
    vals1 = [v0]
    for a, b in zip(cut1[:-1], cut1[1:]):
        vals1.append(vals1[-1] + float(np.sum(integrate_panels(h, merge_edges([a, b], bps), params.order))))
    stage1 = LadderStage(variable, [float(math.exp(c)) for c in cut1], vals1)
    a1 = assess_ladder(np.exp(cut1), vals1, params, variable, allow_escalation=True)
    if not (a1.escalate and params.iterated):
        return _to_probe(a1, [stage1], _monotone(vals1))

    cut2 = T0 * 2.0 ** np.arange(params.steps)
    cut2 = cut2[cut2 <= params.max_log_cutoff]
    if cut2.size < params.window + 2:
        return _to_probe(a1, [stage1], _monotone(vals1))
    vals2 = [v0]
    for a, b in zip(cut2[:-1], cut2[1:]):
        sub = a * (b / a) ** np.linspace(0.0, 1.0, 5)
        vals2.append(vals2[-1] + float(np.sum(integrate_panels(h, merge_edges(sub, bps), params.order))))
    stage2 = LadderStage("log-lambda", [float(c) for c in cut2], vals2)
    a2 = assess_ladder(cut2, vals2, params, "log-lambda")
    if a2.verdict == INCONCLUSIVE and a1.note:
        a2.note = f"{a2.note} (first ladder: {a1.note})"
    return _to_probe(a2, [stage1, stage2], _monotone(vals1) and _monotone(vals2))


def probe_integral(integrand: Callable, domain: str = "half-line", lower: float = 1.0,
                   params: LadderParams | None = None, log_integrand: Callable | None = None,
                   breakpoints: Sequence[float] = ()) -> ConvergenceProbe:
    """Probe a nonnegative improper integral.

    ``domain="half-line"`` probes ``integral of integrand(lam)`` over
    ``[lower, Lambda]``. ``lower=0`` starts at ``e**-40``.  Pass
    ``log_integrand(t) = integrand(e**t) * e**t`` to let the iterated ladder
    run past the overflow point; otherwise it is capped at ``ln Lambda <= 700``.

    ``domain="square"`` probes the double integral of ``integrand(l1, l2)``
    over ``[lower, Lambda]**2`` on the first ladder only. The integrand must be
    bounded; diagonal singularities belong to the caller.
    """
    params = params or LadderParams()
    if domain == "square":
        return _probe_square(integrand, lower, params)
    if domain != "half-line":
        raise ValueError(f"unknown domain {domain!r}")
    if lower < 0:
        raise ValueError("lower must be >= 0")
    t_lo = LOG_ORIGIN if lower == 0 else math.log(lower)
    if log_integrand is None:
        def log_integrand(t):
            lam = np.exp(t)
            return integrand(lam) * lam
        if params.max_log_cutoff > 700:
            params = _replace(params, max_log_cutoff=700.0)
    return probe_log_integrand(log_integrand, t_lo, params,
                               [math.log(b) for b in breakpoints if b > 0])


def _replace(params: LadderParams, **kw) -> LadderParams:
    from dataclasses import replace
    return replace(params, **kw)


def _probe_square(f, lower, params: LadderParams) -> ConvergenceProbe:
    cut = params.lambda0 * 2.0 ** np.arange(params.steps)
    if lower <= 0:
        lower = math.exp(LOG_ORIGIN)
    # log-spaced panels; V(Lambda_j) accumulated over L-shaped slabs
    edges = np.concatenate([np.exp(np.linspace(math.log(lower), math.log(cut[0]),
                                               max(int(math.log(cut[0] / lower) / 0.5), 1) + 1)),
                            cut[1:]])
    nodes, weights = panel_nodes(edges, params.order)
    x, wx = nodes.ravel(), weights.ravel()
    level = np.searchsorted(cut, x, side="left")
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    F = _safe_eval(lambda a: f(a, X2), X1) * wx[:, None] * wx[None, :]
    vals = []
    for j in range(cut.size):
        m = level <= j
        vals.append(float(F[np.ix_(m, m)].sum()))
    stage = LadderStage("lambda", [float(c) for c in cut], vals)
    a = assess_ladder(cut, vals, params, "lambda")
    return _to_probe(a, [stage], _monotone(vals))
