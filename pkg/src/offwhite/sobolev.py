"""Half-order Sobolev functionals on the circle and their line counterparts.

Line functionals work in ``t = ln|lambda|`` with ``g(t) = ln W(e**t)``.
Folding the plane onto the positive quadrant with the evenness of ``W`` turns

    J = double integral of |ln W(l1) - ln W(l2)|**2 / (l1 - l2)**2

into ``J = integral over x < y of K(y - x) |g(y) - g(x)|**2``, with the kernel
``K(s) = 1/sinh(s/2)**2 + 1/cosh(s/2)**2``. Truncating at
``|lambda| <= Lambda`` is the same as ``y <= ln Lambda``, so

    J(Lambda) = integral of E(y) dy over y <= ln Lambda,
    E(y)      = integral over s > 0 of K(s) |g(y) - g(y - s)|**2 ds,

and a single monotone cutoff drives the convergence probe. Near ``s = 0``
the integrand tends to ``4 g'(y)**2``. The strip ``s < delta`` is therefore
replaced by its Taylor term instead of being sampled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .density import DensitySpec, spec_to_dict
from .errors import NotConverged, NotDifferentiable, TabulatedOutOfRange
from .quadrature import (DIVERGENT, FINITE, INCONCLUSIVE, LOG_ORIGIN, ConvergenceProbe,
                         LadderParams, LadderStage, _monotone, assess_ladder, assess_sequence,
                         gauss_legendre, integrate_panels, merge_edges, panel_nodes,
                         probe_log_integrand)

FUNCTIONALS = ("circle_double", "circle_fourier", "line_sobolev", "doubling", "derivative")
LN2 = math.log(2.0)

LINE_KERNEL = "K(s) = 1/sinh(s/2)^2 + 1/cosh(s/2)^2 over s = ln(l2/l1), folded by evenness"
DOUBLING_KERNEL = "|g(t + ln 2) - g(t)|^2 dt, t = ln lambda"
DERIVATIVE_KERNEL = "g'(t)^2 dt, t = ln lambda"
FEJER_KERNEL = "A(s) / (4 sin^2(s/2)) ds, A(s) = integral |phi(x+s) - phi(x)|^2 dx"
FOURIER_KERNEL = "sum |n| |phi_n|^2, |n| <= grid/4"


@dataclass
class FunctionalResult:
    functional: str
    probe: ConvergenceProbe
    value: float | None
    kernel: str
    spec: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return self.probe.verdict


def _result(name, probe, kernel, spec=None, **extra) -> FunctionalResult:
    value = probe.value if probe.verdict == FINITE else None
    return FunctionalResult(name, probe, value, kernel,
                            None if spec is None else spec_to_dict(spec), extra)


def _lower(spec: DensitySpec, shift: float = 0.0, default: float = LOG_ORIGIN) -> float:
    tf = spec.t_flat
    if tf is None or not math.isfinite(tf):
        return default
    return max(default, tf - shift)


def _guard(name, spec, kernel, fn):
    try:
        return fn()
    except TabulatedOutOfRange as exc:
        return _result(name, ConvergenceProbe.inconclusive(f"tail model missing: {exc}"), kernel, spec)


# --------------------------------------------------------------------------
# line functional

def line_kernel(s):
    s = np.asarray(s, dtype=float)
    return 1.0 / np.sinh(s / 2.0) ** 2 + 1.0 / np.cosh(s / 2.0) ** 2


class LineEnergy:
    """``E(y)``: the inner integral of the folded line functional, vectorised in ``y``."""

    def __init__(self, spec: DensitySpec, delta: float = 1e-3, s_max: float = 60.0,
                 order: int = 16, n_panels: int = 40):
        self.spec = spec
        self.g = spec.lnw_t
        self.dg = spec.dlnw_t if spec.differentiable else None
        self.delta = delta
        self.s_max = s_max
        self.order = order
        self.edges = np.geomspace(delta, s_max, n_panels + 1)
        self.breaks = np.asarray(spec.breaks_t, dtype=float)
        nodes, weights = panel_nodes(self.edges, order)
        self.S = nodes.ravel()
        self.KW = (line_kernel(self.S) * weights.ravel())
        x, w = gauss_legendre(8)
        s0 = 0.5 * delta * (x + 1.0)
        # integral of K(s) s^2 over [0, delta]
        self.c_delta = float(np.sum(0.5 * delta * w * line_kernel(s0) * s0 ** 2))

    def _slope(self, y):
        if self.dg is not None:
            return self.dg(y)
        d = self.delta
        return (self.g(y) - self.g(y - d)) / d

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        out = np.empty(flat.size)
        gy = self.g(flat)
        if self.breaks.size:
            kinks = flat[:, None] - self.breaks[None, :]
            active = (kinks > self.delta) & (kinks < self.s_max)
            has = active.any(axis=1)
        else:
            has = np.zeros(flat.size, dtype=bool)
        plain = ~has
        if plain.any():
            yp = flat[plain]
            G = self.g(yp[:, None] - self.S[None, :])
            out[plain] = ((gy[plain][:, None] - G) ** 2) @ self.KW
        for i in np.flatnonzero(has):
            edges = merge_edges(self.edges, kinks[i][active[i]])
            nodes, weights = panel_nodes(edges, self.order)
            s = nodes.ravel()
            d = gy[i] - self.g(flat[i] - s)
            out[i] = float(np.sum(line_kernel(s) * weights.ravel() * d * d))
        out += self._slope(flat) ** 2 * self.c_delta
        return out.reshape(y.shape)


def line_sobolev_functional(spec: DensitySpec, params: LadderParams | None = None) -> FunctionalResult:
    """Probe of the line functional ``J(W)`` on the ladder ``|lambda| <= Lambda``."""
    params = params or LadderParams()

    def run():
        E = LineEnergy(spec, order=params.order)
        lo = _lower(spec, default=-30.0)
        pr = probe_log_integrand(E, lo, params, spec.breaks_t)
        return _result("line_sobolev", pr, LINE_KERNEL, spec, delta=E.delta, s_max=E.s_max)

    return _guard("line_sobolev", spec, LINE_KERNEL, run)


def dilation_energy(spec: DensitySpec, u: float, params: LadderParams | None = None) -> float:
    """``D(u) = integral of |ln W(u lambda) - ln W(lambda)|**2 dlambda/lambda``.

    Returns ``inf`` when the probe diverges; raises NotConverged when it cannot decide.
    """
    if u <= 0:
        raise ValueError("u must be positive")
    s = math.log(u)
    if s == 0.0:
        return 0.0
    params = params or LadderParams()
    g = spec.lnw_t

    def h(t):
        return (g(t + s) - g(t)) ** 2

    bps = list(spec.breaks_t) + [b - s for b in spec.breaks_t]
    pr = probe_log_integrand(h, _lower(spec, shift=abs(s)), params, bps)
    if pr.verdict == FINITE:
        return float(pr.value)
    if pr.verdict == DIVERGENT:
        return math.inf
    raise NotConverged(f"D({u:g}) undecided: {pr.note}")


def line_sobolev_u_form(spec: DensitySpec, params: LadderParams | None = None,
                        s_max: float = 40.0, n_panels: int = 24, order: int = 12) -> float:
    """Cross-check of ``J`` through the outer dilation integral.

    ``J = 4 * integral over u > 1 of [(u-1)**-2 + (u+1)**-2] D(u) du``, written
    in ``s = ln u`` as ``integral of K(s) D(e**s) ds``; the near-diagonal
    strip uses ``D(e**s) ~ s**2 Q``.
    """
    params = params or LadderParams()
    delta = 1e-3
    edges = np.geomspace(delta, s_max, n_panels + 1)
    nodes, weights = panel_nodes(edges, order)
    total = 0.0
    for s, w in zip(nodes.ravel(), weights.ravel()):
        D = dilation_energy(spec, math.exp(s), params)
        if not math.isfinite(D):
            return math.inf
        total += w * line_kernel(s) * D
    D0 = dilation_energy(spec, math.exp(delta), params)
    x, wq = gauss_legendre(8)
    s0 = 0.5 * delta * (x + 1.0)
    c = float(np.sum(0.5 * delta * wq * line_kernel(s0) * s0 ** 2))
    return total + c * D0 / delta ** 2


# --------------------------------------------------------------------------
# doubling and derivative functionals

def doubling_functional(spec: DensitySpec, params: LadderParams | None = None) -> FunctionalResult:
    """Probe of ``B(W) = integral of |ln W(2 lambda) - ln W(lambda)|**2 dlambda/lambda``."""
    params = params or LadderParams()
    g = spec.lnw_t

    def h(t):
        return (g(t + LN2) - g(t)) ** 2

    def run():
        bps = list(spec.breaks_t) + [b - LN2 for b in spec.breaks_t]
        pr = probe_log_integrand(h, _lower(spec, shift=LN2), params, bps)
        return _result("doubling", pr, DOUBLING_KERNEL, spec)

    return _guard("doubling", spec, DOUBLING_KERNEL, run)


def derivative_functional(spec: DensitySpec, params: LadderParams | None = None) -> FunctionalResult:
    """Probe of ``Q(W) = integral of ((ln W)')**2 lambda dlambda``.

    For spliced families the splice share ``integral over [lambda0/2, lambda0]``
    is reported separately in ``extra``.
    """
    if not spec.differentiable:
        raise NotDifferentiable(f"{spec.describe()} has no derivative")
    params = params or LadderParams()
    dg = spec.dlnw_t

    def h(t):
        return dg(t) ** 2

    def run():
        pr = probe_log_integrand(h, _lower(spec), params, spec.breaks_t)
        extra = {}
        if spec.family in ("power", "logpow", "explog"):
            ta, tb = spec.breaks_t
            splice = float(np.sum(integrate_panels(h, np.linspace(ta, tb, 9), 24)))
            extra["splice_contribution"] = splice
            if pr.verdict == FINITE:
                extra["beyond_splice"] = pr.value - splice
        return _result("derivative", pr, DERIVATIVE_KERNEL, spec, **extra)

    return _guard("derivative", spec, DERIVATIVE_KERNEL, run)


@dataclass
class ImplicationReport:
    line_sobolev: str
    doubling: str
    derivative: str
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def check_implications(spec: DensitySpec, params: LadderParams | None = None,
                       results: dict | None = None) -> ImplicationReport:
    """Check ``line Finite => doubling Finite`` and ``derivative Finite => line Finite``."""
    results = dict(results or {})
    if "line_sobolev" not in results:
        results["line_sobolev"] = line_sobolev_functional(spec, params)
    if "doubling" not in results:
        results["doubling"] = doubling_functional(spec, params)
    if "derivative" not in results:
        try:
            results["derivative"] = derivative_functional(spec, params)
        except NotDifferentiable as exc:
            results["derivative"] = _result("derivative", ConvergenceProbe.inconclusive(str(exc)),
                                            DERIVATIVE_KERNEL, spec)
    ls, db, dv = (results[k].verdict for k in ("line_sobolev", "doubling", "derivative"))
    violations = []
    if ls == FINITE and db == DIVERGENT:
        violations.append("line functional finite but doubling functional divergent")
    if dv == FINITE and ls == DIVERGENT:
        violations.append("derivative functional finite but line functional divergent")
    return ImplicationReport(ls, db, dv, violations)


# --------------------------------------------------------------------------
# circle functionals

def _as_phi(phi) -> Callable:
    if callable(phi):
        return phi
    c = np.asarray(phi, dtype=float)
    k = np.arange(c.size)
    return lambda th: np.cos(np.multiply.outer(th, k)) @ c


def _grid_values(phi, M):
    th = -math.pi + 2.0 * math.pi * np.arange(M) / M
    v = np.asarray(phi(th), dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("phi is not finite on the grid")
    return v


def fourier_sum(phi, M: int) -> float:
    """``sum |n| |phi_n|**2`` over ``|n| <= M/4`` from an ``M``-point grid."""
    v = _grid_values(_as_phi(phi), M)
    c = np.fft.rfft(v) / M
    n = np.arange(c.size)
    keep = n <= M // 4
    return float(2.0 * np.sum(n[keep] * np.abs(c[keep]) ** 2))


def fejer_sum(phi, M: int) -> float:
    """Double-integral seminorm from an ``M``-point grid in the rotation-reduced form."""
    v = _grid_values(_as_phi(phi), M)
    h = 2.0 * math.pi / M
    f = np.fft.rfft(v, n=M)
    R = np.fft.irfft(np.abs(f) ** 2, n=M)  # circular autocorrelation sum_i v_{i+k} v_i
    A = h * np.maximum(2.0 * (R[0] - R), 0.0)
    k = np.arange(1, M)
    F = A[1:] / (4.0 * np.sin(k * h / 2.0) ** 2)
    f0 = (4.0 * F[0] - F[1]) / 3.0
    return float(h * (np.sum(F) + max(f0, 0.0)))


def _grid_converge(fn, phi, k_min, k_max, tol):
    prev = fn(phi, 2 ** k_min)
    for k in range(k_min + 1, k_max + 1):
        cur = fn(phi, 2 ** k)
        if abs(cur - prev) <= tol * max(abs(cur), 1e-300) or abs(cur - prev) <= 1e-14:
            return cur
        prev = cur
    raise NotConverged(f"grid doubling still changes the sum at 2^{k_max} points")


def circle_fourier_seminorm(phi, k_min: int = 8, k_max: int = 20, tol: float = 1e-9) -> float:
    """``sum_n |n| |phi_n|**2`` with grid doubling until stable."""
    return _grid_converge(fourier_sum, phi, k_min, k_max, tol)


def circle_double_seminorm(phi, k_min: int = 8, k_max: int = 20, tol: float = 1e-9) -> float:
    """Double integral of ``|phi(a) - phi(b)|**2 / |e^{ia} - e^{ib}|**2`` over the torus."""
    return _grid_converge(fejer_sum, phi, k_min, k_max, tol)


def _grid_probe(name, kernel, fn, phi, params, k_min):
    params = params or LadderParams()
    ks = np.arange(k_min, k_min + params.steps)
    Ms = 2 ** ks
    vals = [fn(phi, int(M)) for M in Ms]
    pr = assess_sequence(Ms, vals, params, variable="grid")
    return _result(name, pr, kernel, grid_points=[int(M) for M in Ms])


def circle_fourier_probe(phi, params: LadderParams | None = None, k_min: int = 6) -> FunctionalResult:
    """Grid-ladder probe of the Fourier seminorm; a non-member grows like ``ln(grid)``."""
    return _grid_probe("circle_fourier", FOURIER_KERNEL, fourier_sum, _as_phi(phi), params, k_min)


def circle_double_probe(phi, params: LadderParams | None = None, k_min: int = 6) -> FunctionalResult:
    return _grid_probe("circle_double", FEJER_KERNEL, fejer_sum, _as_phi(phi), params, k_min)


def circle_double_arc(phi, cutoffs, breaks=(), order: int = 20, inner_panels: int = 12,
                      max_ratio: float = 8.0) -> np.ndarray:
    """Double-integral seminorm restricted to the arcs ``|theta| >= 2 arctan(1/Lambda)``.

    Under the Cayley map these arcs are exactly ``|lambda| <= Lambda``, so the
    values match truncations of the line functional of ``W`` when
    ``phi = ln(2W)``. Panels are Gauss-Legendre in both angles, with
    different orders so that no node pair lands on the diagonal, where the
    integrand is smooth but numerically 0/0.
    """
    phi = _as_phi(phi)
    lam = np.sort(np.asarray(cutoffs, dtype=float))
    thc = 2.0 * np.arctan(1.0 / lam)  # descending
    inner = np.geomspace(thc[0], math.pi, inner_panels + 1)
    br = np.abs(np.asarray([float(b) for b in breaks], dtype=float))
    br = br[(br > thc[-1]) & (br < math.pi)]
    half = np.unique(np.concatenate([thc, inner, br]))
    # geometric sub-panels so that no panel spans more than a factor max_ratio
    pieces = [half[:1]]
    for lo, hi in zip(half[:-1], half[1:]):
        n = max(1, int(math.ceil(math.log(hi / lo) / math.log(max_ratio))))
        pieces.append(np.geomspace(lo, hi, n + 1)[1:])
    half = np.concatenate(pieces)

    def side(n):
        # nodes on both arcs directly, never through 2 pi - theta
        nodes, weights = panel_nodes(half, n)
        pos, w = nodes.ravel(), weights.ravel()
        th = np.concatenate([pos, -pos])
        level = np.sum(thc[None, :] > pos[:, None] * (1 + 1e-15), axis=1)
        return th, np.concatenate([w, w]), np.asarray(phi(th), dtype=float), np.concatenate([level, level])

    t1, w1, p1, l1 = side(order)
    t2, w2, p2, l2 = side(order + 1)
    F = (p1[:, None] - p2[None, :]) ** 2 / (4.0 * np.sin((t1[:, None] - t2[None, :]) / 2.0) ** 2)
    F *= w1[:, None] * w2[None, :]
    L = lam.size
    S = np.zeros((L, L))
    np.add.at(S, (l1[:, None].repeat(l2.size, 1), l2[None, :].repeat(l1.size, 0)), F)
    return np.array([S[: j + 1, : j + 1].sum() for j in range(L)])


ARC_MAX_LOG = 64.0  # dense node-pair matrix; beyond this the line form is the tool


def circle_double_arc_probe(phi, params: LadderParams | None = None, breaks=()) -> FunctionalResult:
    """Double-integral seminorm on the arc ladder ``|lambda| <= Lambda``.

    For ``phi`` that is singular at ``theta = 0`` (densities unbounded or
    vanishing at infinity) grid forms cannot sample the circle; the arc
    truncations can. A second ladder in ``ln Lambda`` runs when the first
    is inconclusive.
    """
    params = params or LadderParams()
    cut = params.lambda0 * 2.0 ** np.arange(params.steps)
    vals = circle_double_arc(phi, cut, breaks, order=params.order)
    stage1 = LadderStage("lambda", [float(c) for c in cut], [float(v) for v in vals])
    a = assess_ladder(cut, vals, params, "lambda")
    stages = [stage1]
    if a.verdict == INCONCLUSIVE:
        T0 = math.log(params.lambda0)
        T = T0 * 2.0 ** np.arange(int(math.floor(math.log2(ARC_MAX_LOG / T0))) + 1)
        vals = circle_double_arc(phi, np.exp(T), breaks, order=params.order)
        stages.append(LadderStage("log-lambda", [float(x) for x in T], [float(v) for v in vals]))
        a = assess_ladder(T, vals, params, "log-lambda")
    mono = all(_monotone(s.values) for s in stages)
    pr = ConvergenceProbe(a.verdict, stages, a.model, a.rate, a.quality, a.value, a.error, mono, a.note)
    return _result("circle_double", pr, FEJER_KERNEL, route="arcs")
