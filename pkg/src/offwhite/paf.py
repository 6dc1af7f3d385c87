"""Finite sections of the past/future geometry of a circle measure.

The past section is spanned by ``e^{ik theta}`` for ``-K <= k <= 0`` and the
future section by ``N+1 <= k <= N+1+K``. Inner products in ``L2(mu)`` come from
the moments ``c_n = integral of e^{-in theta} dmu``; with
``<f, g> = integral of f conj(g) dmu`` the Gram entry of ``e^{ia theta}`` and
``e^{ib theta}`` is ``c_{b-a}``. Canonical correlations are the singular
values of the whitened cross block.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigh, svd, toeplitz

from .cayley import CircleDensity
from .errors import NotConverged, NumericalBreakdown, PoleMismatch, Undecided
from .quadrature import panel_nodes

DEFAULT_KS = (32, 64, 128, 256)
DELTA_ANGLE = 0.05
DELTA_CLOSE = 1e-3


def max_threads() -> int:
    try:
        return max(1, int(os.environ.get("OFFWHITE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class MomentTable:
    c: np.ndarray  # c_0 .. c_n_max
    label: str = ""
    method: str = ""

    @property
    def n_max(self) -> int:
        return self.c.size - 1

    @property
    def c0(self) -> float:
        return float(self.c[0].real)

    def get(self, n):
        """``c_n`` for integer arrays ``n`` of either sign."""
        n = np.asarray(n)
        if np.any(np.abs(n) > self.n_max):
            raise ValueError(f"moment index beyond n_max = {self.n_max}")
        v = self.c[np.abs(n)]
        return np.where(n < 0, np.conj(v), v)

    def mirrored(self) -> "MomentTable":
        """Moments of the reflected measure ``theta -> -theta``."""
        return MomentTable(np.conj(self.c), self.label + "~", self.method)

    def toeplitz_floor(self, size: int) -> float:
        """Smallest eigenvalue of ``[c_{j-k}]`` of the given size, in units of ``c_0``."""
        T = toeplitz(self.get(np.arange(size)).conj(), self.get(np.arange(size)))
        return float(np.linalg.eigvalsh(T)[0]) / self.c0


def _apply_zero(c_full: np.ndarray, a: float) -> np.ndarray:
    # c_full indexed -L..L; multiply the measure by |z - e^{ia}|^2 = 2 - e^{i(theta-a)} - e^{-i(theta-a)}
    out = 2.0 * c_full[1:-1] - np.exp(-1j * a) * c_full[:-2] - np.exp(1j * a) * c_full[2:]
    return out


def _full(c: np.ndarray) -> np.ndarray:
    return np.concatenate([np.conj(c[:0:-1]), c])


def _fft_moments(density: CircleDensity, n_max: int, tol: float) -> np.ndarray:
    M = 1 << max(8, int(math.ceil(math.log2(4 * n_max + 8))))
    prev = None
    for _ in range(10):
        th = 2.0 * math.pi * np.arange(M) / M
        f = density.density(th)
        c = (2.0 * math.pi / M) * np.fft.fft(f)[: n_max + 1]
        if prev is not None and np.max(np.abs(c - prev)) <= tol * abs(c[0]):
            return c
        prev = c
        M *= 2
    raise NotConverged("moments did not stabilise under grid doubling")


def _arc_moments(density: CircleDensity, n_max: int, tol: float) -> np.ndarray:
    br = sorted(set(float(b) % (2.0 * math.pi) for b in density.all_breaks()))
    if not br:
        br = [0.0]
    ends = br + [br[0] + 2.0 * math.pi]
    ns = np.arange(n_max + 1)
    prev = None
    per = max(2, int(math.ceil(n_max / 8)))
    for _ in range(8):
        edges = np.concatenate([np.linspace(a, b, per + 1)[:-1] for a, b in zip(ends[:-1], ends[1:])]
                               + [[ends[-1]]])
        # panels never straddle a breakpoint: breakpoints are edges by construction
        x, w = panel_nodes(edges, 16)
        th, w = x.ravel(), w.ravel()
        fw = density.density(th) * w
        c = np.empty(ns.size, dtype=complex)
        for i in range(0, ns.size, 64):
            blk = ns[i:i + 64]
            c[i:i + 64] = np.exp(-1j * np.outer(blk, th)) @ fw
        if prev is not None and np.max(np.abs(c - prev)) <= tol * abs(c[0]):
            return c
        prev = c
        per *= 2
    raise NotConverged("moments did not stabilise under panel doubling")


def moments(density: CircleDensity, n_max: int, tol: float = 1e-10) -> MomentTable:
    """Trigonometric moments ``c_0..c_n_max`` of a pole-free circle density."""
    if density.poles:
        raise PoleMismatch("remove poles before computing moments")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if density.moment_fn is not None:
        Z = density.zero_multiplicity
        c = _full(np.asarray(density.moment_fn(n_max + Z), dtype=complex))
        for a, m in density.zeros:
            for _ in range(m):
                c = _apply_zero(c, a)
        L = (c.size - 1) // 2
        return MomentTable(c[L:L + n_max + 1], density.label, "line")
    if density.breaks:
        return MomentTable(_arc_moments(density, n_max, tol), density.label, "arcs")
    return MomentTable(_fft_moments(density, n_max, tol), density.label, "fft")


@dataclass
class GramBlocks:
    past: np.ndarray
    future: np.ndarray
    cross: np.ndarray
    K: int
    N: int
    past_index: np.ndarray
    future_index: np.ndarray
    ill_conditioned: bool = False


def gram_blocks(mt: MomentTable, past_index: Sequence[int], future_index: Sequence[int],
                K: int = 0, N: int = 0) -> GramBlocks:
    p = np.asarray(past_index)
    f = np.asarray(future_index)
    GP = mt.get(p[None, :] - p[:, None])
    GF = mt.get(f[None, :] - f[:, None])
    C = mt.get(f[None, :] - p[:, None])
    cond = max(_cond(GP), _cond(GF))
    return GramBlocks(GP, GF, C, K, N, p, f, cond > 1e12)


def _cond(G):
    e = np.linalg.eigvalsh(G)
    return math.inf if e[0] <= 0 else float(e[-1] / e[0])


def section_gram(mt: MomentTable, K: int, N: int) -> GramBlocks:
    """Gram blocks of the past section ``{-K..0}`` and the future section ``{N+1..N+1+K}``."""
    if K < 0:
        raise ValueError("K must be >= 0")
    if 2 * K + abs(N) + 1 > mt.n_max:
        raise ValueError(f"moment table too short for K={K}, N={N}")
    return gram_blocks(mt, np.arange(-K, 1), np.arange(N + 1, N + 2 + K), K, N)


def _inv_sqrt(G):
    tr = float(np.real(np.trace(G)))
    try:
        e, V = eigh(G)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown(str(exc)) from exc
    if e[0] < 1e-12 * tr:
        try:
            e, V = eigh(G + 1e-12 * tr * np.eye(G.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown(str(exc)) from exc
        if e[0] <= 0:
            raise NumericalBreakdown("Gram block not positive even with ridge")
    return (V / np.sqrt(e)) @ V.conj().T


def whitened_correlations(GP, GF, C) -> np.ndarray:
    """Singular values of ``GP^{-1/2} C GF^{-1/2}``, descending."""
    M = _inv_sqrt(GP) @ C @ _inv_sqrt(GF)
    try:
        return svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown(str(exc)) from exc


@dataclass
class SectionReport:
    K: int
    N: int
    label: str
    sigma: np.ndarray
    ill_conditioned: bool = False

    @property
    def sigma1(self) -> float:
        return float(self.sigma[0]) if self.sigma.size else 0.0

    @property
    def hs(self) -> float:
        return float(np.sum(self.sigma ** 2))


def canonical_correlations(blocks: GramBlocks, label: str = "") -> SectionReport:
    sig = whitened_correlations(blocks.past, blocks.future, blocks.cross)
    return SectionReport(blocks.K, blocks.N, label or f"P0 vs F{blocks.N + 1}", sig,
                         blocks.ill_conditioned)


@dataclass
class SweepReport:
    N: int
    sections: list
    hs_cauchy: float
    log_rate: float
    log_quality: float
    monotone: bool

    @property
    def Ks(self) -> list:
        return [s.K for s in self.sections]

    @property
    def hs(self) -> list:
        return [s.hs for s in self.sections]

    @property
    def sigma1(self) -> list:
        return [s.sigma1 for s in self.sections]

    @property
    def increment_ratios(self) -> list:
        inc = np.diff(self.hs)
        return [float(b / a) if a > 0 else math.nan for a, b in zip(inc[:-1], inc[1:])]

    @property
    def trend(self) -> str:
        """Classify the HS sequence over the sweep.

        ``converging``: the last doubling moves HS by < 1%. ``decaying``: every
        doubling shrinks the HS increment by a factor <= 0.9, as for members
        whose tail decays like a power of ``1/ln K``. ``log-growing``: clean
        ``c ln K`` fit with ``c > 0``.
        """
        if self.hs_cauchy < 0.01:
            return "converging"
        r = self.increment_ratios
        if r and all(0.0 <= x <= 0.9 for x in r):
            return "decaying"
        if self.log_rate > 0 and self.log_quality >= 0.98:
            return "log-growing"
        return "undetermined"


def _table_for(density, Ks, Ns) -> MomentTable:
    n_max = 2 * max(Ks) + max(abs(n) for n in Ns) + 4
    return density if isinstance(density, MomentTable) else moments(density, n_max)


def _log_fit(K, hs):
    x = np.log(np.asarray(K, float))
    y = np.asarray(hs, float)
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    rss = float(np.sum((A @ coef - y) ** 2))
    tss = float(np.sum((y - y.mean()) ** 2))
    return float(coef[1]), (1.0 - rss / tss) if tss > 0 else 1.0


def hs_sweep(density, Ks: Sequence[int] = DEFAULT_KS, N: int = 0, threads: int | None = None) -> SweepReport:
    """Canonical correlations for ``(P0, F_{N+1})`` over a sweep of section sizes."""
    Ks = sorted(int(k) for k in Ks)
    mt = _table_for(density, Ks, [N])

    def one(K):
        return canonical_correlations(section_gram(mt, K, N))

    with ThreadPoolExecutor(max_workers=threads or max_threads()) as ex:
        sections = list(ex.map(one, Ks))
    hs = [s.hs for s in sections]
    cauchy = abs(hs[-1] - hs[-2]) / hs[-1] if len(hs) > 1 and hs[-1] > 0 else 0.0
    rate, q = _log_fit(Ks, hs) if len(Ks) > 2 else (0.0, 0.0)
    mono = True
    for a, b in zip(sections[:-1], sections[1:]):
        n = a.sigma.size
        if np.any(b.sigma[:n] < a.sigma - 1e-8):
            mono = False
    return SweepReport(N, sections, cauchy, rate, q, mono)


@dataclass
class AngleDecision:
    k: int
    sigma1: list
    decision: str  # "positive", "zero", "undecided"
    gap_slope: float | None = None
    gap_quality: float | None = None


@dataclass
class IndexEstimate:
    index: int | None
    decisions: list
    Ks: list
    pole_shift: int = 0
    notes: list = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        seen = False
        for d in self.decisions:
            if d.decision == "positive":
                seen = True
            elif seen and d.decision == "zero":
                return False
        return True

    def decision(self, k: int) -> AngleDecision:
        for d in self.decisions:
            if d.k == k:
                return d
        raise KeyError(k)


def _decide(k, Ks, s1, delta_angle, delta_close) -> AngleDecision:
    s1 = [float(x) for x in s1]
    gap = 1.0 - np.asarray(s1)
    slope = quality = None
    if len(Ks) >= 3 and np.all(gap > 0):
        x, y = np.log(np.asarray(Ks, float)), np.log(gap)
        A = np.column_stack([np.ones_like(x), x])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        rss = float(np.sum((A @ coef - y) ** 2))
        tss = float(np.sum((y - y.mean()) ** 2))
        slope = float(coef[1])
        quality = 1.0 - rss / tss if tss > 0 else 0.0
    trending = slope is not None and slope <= -0.5 and quality >= 0.98
    if s1[-1] >= 1.0 - delta_close or trending:
        return AngleDecision(k, s1, "zero", slope, quality)
    if max(s1) <= 1.0 - delta_angle:
        return AngleDecision(k, s1, "positive", slope, quality)
    return AngleDecision(k, s1, "undecided", slope, quality)


def index_estimate(density, Ks: Sequence[int] = DEFAULT_KS, k_window: Sequence[int] = range(-1, 4),
                   delta_angle: float = DELTA_ANGLE, delta_close: float = DELTA_CLOSE,
                   threads: int | None = None) -> IndexEstimate:
    """Least ``k`` for which ``P_0`` and ``F_{k+1}`` are at a positive angle.

    A ``k`` counts as positive when ``sigma_1`` stays below ``1 - delta_angle``
    on the whole sweep. It counts as zero when ``sigma_1`` at the largest
    section reaches ``1 - delta_close``, or when the gap ``1 - sigma_1`` decays
    as a clean power of ``K``. Densities with poles are reduced to their
    pole-free version, with the index shifted by the pole multiplicity.
    """
    shift = 0
    if isinstance(density, CircleDensity) and density.poles:
        density, shift = density.pole_free()
    Ks = sorted(int(k) for k in Ks)
    ks = sorted(int(k) for k in k_window)
    mt = _table_for(density, Ks, [k + shift for k in ks])

    def one(args):
        k, K = args
        return canonical_correlations(section_gram(mt, K, k + shift)).sigma1

    jobs = [(k, K) for k in ks for K in Ks]
    with ThreadPoolExecutor(max_workers=threads or max_threads()) as ex:
        vals = list(ex.map(one, jobs))
    decisions = []
    for i, k in enumerate(ks):
        decisions.append(_decide(k, Ks, vals[i * len(Ks):(i + 1) * len(Ks)], delta_angle, delta_close))
    notes = []
    index = None
    for d in decisions:
        if d.decision == "undecided":
            raise Undecided(d.k, f"sigma_1 sweep {d.sigma1} between thresholds at k={d.k}")
        if d.decision == "positive":
            index = d.k
            break
    if index is None:
        notes.append("no positive angle inside the k window")
    est = IndexEstimate(index, decisions, Ks, shift, notes)
    if not est.monotone:
        est.notes.append("angle decisions not monotone in k")
    return est


@dataclass
class ShiftReport:
    angles: list
    before: IndexEstimate
    after: IndexEstimate

    @property
    def ok(self) -> bool:
        b, a = self.before.index, self.after.index
        return b is not None and a is not None and a == b + len(self.angles)


def shift_law_check(density: CircleDensity, z0_angles, **kw) -> ShiftReport:
    """Multiply by ``|z - z0|**2`` for each angle and compare indices."""
    angles = [float(z0_angles)] if np.isscalar(z0_angles) else [float(a) for a in z0_angles]
    before = index_estimate(density, **kw)
    shifted = density
    for a in angles:
        shifted = shifted.times_zero(a)
    after = index_estimate(shifted, **kw)
    return ShiftReport(angles, before, after)


@dataclass
class ReversalReport:
    forward: np.ndarray
    reversed: np.ndarray

    @property
    def max_difference(self) -> float:
        n = min(self.forward.size, self.reversed.size)
        return float(np.max(np.abs(self.forward[:n] - self.reversed[:n]))) if n else 0.0

    @property
    def ok(self) -> bool:
        return self.max_difference <= 1e-8


def time_reversal_check(density, K: int = 64, N: int = 0) -> ReversalReport:
    """Spectrum of ``(P0, F_{N+1})`` against the reversed pair in the reflected measure.

    Reversal sends ``e^{ik theta}`` to ``e^{-ik theta}``: the future section
    with negated indices becomes the past and vice versa, and inner products
    are taken in the measure reflected by ``theta -> -theta``.
    """
    mt = _table_for(density, [K], [N])
    fwd = canonical_correlations(section_gram(mt, K, N)).sigma
    past = np.arange(-K, 1)
    fut = np.arange(N + 1, N + 2 + K)
    rb = gram_blocks(mt.mirrored(), -fut[::-1], -past[::-1], K, N)
    rev = whitened_correlations(rb.past, rb.future, rb.cross)
    return ReversalReport(fwd, rev)
