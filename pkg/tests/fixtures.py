"""Shared densities and a small result log for the acceptance suite."""
import math

import numpy as np

from offwhite import CircleDensity, DensitySpec

OFFWHITE_FAMILIES = [
    ("white", DensitySpec.white()),
    ("logpow -1", DensitySpec.logpow(-1.0)),
    ("logpow 1", DensitySpec.logpow(1.0)),
    ("logpow 2", DensitySpec.logpow(2.0)),
    ("explog 0.1", DensitySpec.explog(0.1)),
    ("explog 0.3", DensitySpec.explog(0.3)),
    ("explog 0.49", DensitySpec.explog(0.49)),
]

NOT_OFFWHITE_FAMILIES = [
    ("power -0.5", DensitySpec.power(-0.5)),
    ("power 0.5", DensitySpec.power(0.5)),
    ("power 1", DensitySpec.power(1.0)),
    ("explog 0.51", DensitySpec.explog(0.51)),
    ("explog 0.7", DensitySpec.explog(0.7)),
    ("explog 1", DensitySpec.explog(1.0)),
]

LINE_FIXTURES = OFFWHITE_FAMILIES + NOT_OFFWHITE_FAMILIES + [
    ("rational 1/(1+l^2)", DensitySpec.rational([1.0], [1.0, 0.0, 1.0])),
    ("rational 1+l^2", DensitySpec.rational([1.0, 0.0, 1.0])),
    ("rational l^2", DensitySpec.rational([0.0, 0.0, 1.0])),
]

HALF_PI = math.pi / 2


def step_log(th):
    th = np.asarray(th, dtype=float)
    return np.where(np.abs(th) < HALF_PI, math.log(2.0), 0.0)


def expcos() -> CircleDensity:
    return CircleDensity.cosine([0.0, 0.5], label="exp(0.5 cos)")


def step() -> CircleDensity:
    return CircleDensity.from_log(step_log, breaks=(-HALF_PI, HALF_PI), label="step")


def circle_fixtures() -> list:
    leb = CircleDensity.lebesgue()
    return [
        ("lebesgue", leb),
        ("|1-z|^2", leb.times_zero(0.0)),
        ("|1-z|^4", leb.times_zero(0.0, 2)),
        ("exp(0.5 cos)", expcos()),
        ("step", step()),
    ]


RESULTS: dict = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
