"""Off-white classification of a symmetric spectral density.

Pipeline: moderation order ``m`` first. Then, for ``m = 1``, the half-order
Sobolev test of ``ln w`` with ``w = 2W`` seen on the circle. For ``m >= 2`` the
same test runs on the remainder left after the declared zeros are divided out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cayley import ModerationReport, cayley_inverse, moderation_order, pushforward_density
from .density import DensitySpec, eval_density, spec_to_dict, validate
from .errors import ZeroDeclarationInvalid
from .paf import DEFAULT_KS, SweepReport, hs_sweep
from .quadrature import DIVERGENT, FINITE, INCONCLUSIVE, LadderParams
from .sobolev import FunctionalResult, circle_double_probe, line_sobolev_functional

OFFWHITE = "OffWhite"
NOT_OFFWHITE = "NotOffWhite"
UNSUPPORTED = "Unsupported"
OUTCOMES = (OFFWHITE, NOT_OFFWHITE, INCONCLUSIVE, UNSUPPORTED)

ZERO_TOL = 1e-9


@dataclass
class Verdict:
    outcome: str
    m: int | None
    reason: str
    spec: dict
    poles: list = field(default_factory=list)
    zeros: list = field(default_factory=list)
    decisive: FunctionalResult | None = None
    moderation: ModerationReport | None = None
    evidence: dict = field(default_factory=dict)


def _validate_zeros(zeros: Sequence[float], m: int) -> list:
    angles = [float(math.remainder(z, 2.0 * math.pi)) for z in zeros]
    angles = [math.pi if a == -math.pi else a for a in angles]
    if len(angles) != m - 1:
        raise ZeroDeclarationInvalid(f"moderation order {m} needs {m - 1} declared zeros, got {len(angles)}")
    if any(abs(a) < ZERO_TOL for a in angles):
        raise ZeroDeclarationInvalid("a declared zero sits at z = 1")
    mirrored = sorted(round(math.pi if abs(a) == math.pi else -a, 9) for a in angles)
    if mirrored != sorted(round(a, 9) for a in angles):
        raise ZeroDeclarationInvalid("declared zeros are not closed under conjugation")
    return angles


def _remainder_spec(spec: DensitySpec, lam_zeros: list) -> DensitySpec | None:
    """``W / prod (lambda - lambda_i)**2`` for rational ``W``, or None if it does not divide."""
    P = np.polynomial.Polynomial(spec.numerator)
    D = np.polynomial.Polynomial([1.0])
    for lz in lam_zeros:
        D = D * np.polynomial.Polynomial([-lz, 1.0]) ** 2
    q, r = divmod(P, D)
    scale = max(np.max(np.abs(P.coef)), 1e-300)
    if r.coef.size and np.max(np.abs(r.coef)) > 1e-9 * scale:
        return None
    coef = q.coef.copy()
    coef[np.abs(coef) < 1e-12 * np.max(np.abs(coef))] = 0.0
    return DensitySpec.rational(coef, spec.denominator, scale=spec.scale, dilation=spec.dilation,
                                label=f"remainder[{spec.describe()}]")


def _decide(result: FunctionalResult) -> str:
    if result.verdict == FINITE:
        return OFFWHITE
    if result.verdict == DIVERGENT:
        return NOT_OFFWHITE
    return INCONCLUSIVE


def _sobolev_test(spec: DensitySpec, params) -> FunctionalResult:
    if spec.family == "circle_direct":
        # phi is given on the circle; grid ladder on the full torus
        return circle_double_probe(spec.impl.phi, params)
    return line_sobolev_functional(spec, params)


def classify(spec: DensitySpec, declared_zeros: Sequence[float] | None = None,
             params: LadderParams | None = None, m_max: int = 6) -> Verdict:
    params = params or LadderParams()
    sd = spec_to_dict(spec)
    report = validate(spec)
    evidence: dict = {"validation": report}

    mod = moderation_order(spec, m_max, params)
    m = mod.order

    def verdict(outcome, reason, **kw):
        return Verdict(outcome, m, reason, sd, moderation=mod, evidence=evidence, **kw)

    if mod.verdict == INCONCLUSIVE:
        return verdict(INCONCLUSIVE, f"moderation probe inconclusive: {mod.note}")
    if m is None:
        return verdict(UNSUPPORTED, f"not moderate up to m = {m_max}")
    if m == 0:
        return verdict(NOT_OFFWHITE, "finite spectral measure (m = 0): no pole at z = 1")

    poles = [(0.0, m)]
    zeros_lam = spec.real_zeros()
    if m == 1:
        if declared_zeros:
            raise ZeroDeclarationInvalid("moderation order 1 admits no zeros")
        if zeros_lam:
            return verdict(NOT_OFFWHITE, f"W vanishes at lambda = {list(zeros_lam)}: ln w is log-singular",
                           poles=poles)
        res = _sobolev_test(spec, params)
        return verdict(_decide(res), f"half-order Sobolev test of ln w: {res.verdict}",
                       poles=poles, decisive=res)

    if not declared_zeros:
        if zeros_lam:
            return verdict(UNSUPPORTED, f"m = {m} with real zeros of W; declare the {m - 1} zero angles",
                           poles=poles)
        return verdict(NOT_OFFWHITE,
                       f"m = {m} but W is strictly positive: no zeros off z = 1 can absorb the "
                       f"extra pole order, so the smooth part is log-singular", poles=poles)

    angles = _validate_zeros(declared_zeros, m)
    lam_z = [float(cayley_inverse(a)) for a in angles]
    w_at = eval_density(spec, np.array(lam_z))
    if np.any(w_at > ZERO_TOL * max(1.0, float(eval_density(spec, 1.0)))):
        return verdict(NOT_OFFWHITE, "W does not vanish at a declared zero: remainder has a pole",
                       poles=poles, zeros=angles)
    if spec.family != "rational":
        return verdict(UNSUPPORTED, "zero division is implemented for rational densities only",
                       poles=poles, zeros=angles)
    rem = _remainder_spec(spec, lam_z)
    if rem is None:
        return verdict(NOT_OFFWHITE, "W does not vanish to second order at the declared zeros",
                       poles=poles, zeros=angles)
    if rem.real_zeros():
        return verdict(NOT_OFFWHITE, "remainder still vanishes on the line: ln of it is log-singular",
                       poles=poles, zeros=angles)
    evidence["remainder"] = spec_to_dict(rem)
    res = line_sobolev_functional(rem, params)
    return verdict(_decide(res), f"half-order Sobolev test of the remainder: {res.verdict}",
                   poles=poles, zeros=angles, decisive=res)


@dataclass
class CrossCheck:
    outcome: str
    sweep: SweepReport | None
    consistent: bool | None
    note: str = ""


def verdict_cross_check(spec: DensitySpec, verdict: Verdict, Ks: Sequence[int] = DEFAULT_KS) -> CrossCheck:
    """Compare the verdict with the HS trend of finite sections at the shifted pair.

    The pair ``(P0, F0)`` of the line measure becomes ``(P0, F1)`` of the
    pole-free density ``w dtheta`` once the simple pole at ``z = 1`` is
    cancelled.
    """
    if verdict.outcome not in (OFFWHITE, NOT_OFFWHITE) or verdict.m != 1:
        return CrossCheck(verdict.outcome, None, None, "cross-check applies to decided m = 1 verdicts")
    density, shift = pushforward_density(spec, 1).pole_free()
    sweep = hs_sweep(density, Ks, N=-1 + shift)
    hs = sweep.hs
    if max(hs) <= 1e-20:
        ok = verdict.outcome == OFFWHITE
        return CrossCheck(verdict.outcome, sweep, ok, "HS sums vanish")
    if verdict.outcome == OFFWHITE:
        ok = sweep.trend in ("converging", "decaying")
        note = f"HS trend {sweep.trend}, Cauchy ratio {sweep.hs_cauchy:.3g}"
    else:
        growing = all(b > a for a, b in zip(hs[:-1], hs[1:]))
        ok = growing and sweep.trend not in ("converging", "decaying")
        note = f"HS log rate {sweep.log_rate:.4g}, fit quality {sweep.log_quality:.4f}"
    if not ok:
        note += "; mismatch between verdict and finite-section trend"
    return CrossCheck(verdict.outcome, sweep, ok, note)
