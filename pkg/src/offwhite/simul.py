"""Sample stationary Gaussian sequences and estimate past/future correlations.

Paths come from circulant embedding of the autocovariance ``r_k = c_k / (2 pi)``.
Each complex FFT draw gives two independent real paths (its real and
imaginary parts).
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cayley import CircleDensity
from .errors import EmbeddingNotPSD, RankDeficient, SpecError
from .paf import (MomentTable, canonical_correlations, max_threads, moments, section_gram,
                  whitened_correlations)

CLIP_LIMIT = 1e-6


@dataclass(frozen=True, eq=False)
class SimConfig:
    density: CircleDensity | MomentTable
    p: int
    paths: int
    seed: int = 0
    embedding_size: int | None = None

    def __post_init__(self):
        if self.p < 1:
            raise SpecError("block length must be >= 1")
        if self.paths < 2:
            raise SpecError("need at least two paths")
        if self.embedding_size is not None:
            n = self.embedding_size
            if n < 4 * self.p or n & (n - 1):
                raise SpecError("embedding size must be a power of two >= 4p")

    @property
    def length(self) -> int:
        return 2 * self.p

    @property
    def size(self) -> int:
        if self.embedding_size is not None:
            return self.embedding_size
        return 1 << max(3, int(math.ceil(math.log2(4 * self.p))))


@dataclass
class Embedding:
    sqrt_eig: np.ndarray
    clipped_mass: float
    covariance: np.ndarray  # r_0 .. r_{n/2}


def _table(config: SimConfig) -> MomentTable:
    n_max = config.size // 2
    if isinstance(config.density, MomentTable):
        if config.density.n_max < n_max:
            raise SpecError("moment table too short for the embedding")
        return config.density
    return moments(config.density, n_max)


def embed(config: SimConfig) -> Embedding:
    mt = _table(config)
    n = config.size
    c = mt.get(np.arange(n // 2 + 1))
    if np.max(np.abs(c.imag)) > 1e-12 * mt.c0:
        raise SpecError("simulation needs a conjugation-symmetric density (real covariances)")
    r = c.real / (2.0 * math.pi)
    row = np.concatenate([r, r[-2:0:-1]])
    eig = np.fft.fft(row).real
    neg = eig < 0
    total = float(np.sum(np.abs(eig)))
    clipped = float(-np.sum(eig[neg])) / total if total > 0 else 0.0
    if clipped > CLIP_LIMIT:
        raise EmbeddingNotPSD(f"clipped eigenvalue mass {clipped:.3g} exceeds {CLIP_LIMIT:g}")
    if np.any(eig < -1e-8 * eig.max()):
        warnings.warn(f"circulant embedding clipped negative eigenvalues (mass {clipped:.3g})")
    return Embedding(np.sqrt(np.maximum(eig, 0.0) / n), clipped, r)


def sample_paths(config: SimConfig, threads: int | None = None) -> np.ndarray:
    """``(paths, 2p)`` array of stationary Gaussian sequences, reproducible from the seed."""
    emb = embed(config)
    n, L = config.size, config.length
    draws = (config.paths + 1) // 2
    seeds = np.random.SeedSequence(config.seed).spawn(draws)

    def one(ss):
        rng = np.random.default_rng(ss)
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x = np.fft.fft(emb.sqrt_eig * z)
        return np.stack([x.real[:L], x.imag[:L]])

    with ThreadPoolExecutor(max_workers=threads or max_threads()) as ex:
        blocks = list(ex.map(one, seeds))
    return np.concatenate(blocks, axis=0)[: config.paths]


def empirical_cca(X: np.ndarray, p: int) -> np.ndarray:
    """Canonical correlations between columns ``[0, p)`` (past) and ``[p, 2p)`` (future).

    The process mean is known to be zero, so second moments are not centred.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2 * p:
        raise ValueError("ensemble must have at least 2p columns")
    if X.shape[0] < 20 * p:
        raise RankDeficient(f"{X.shape[0]} paths is fewer than 20p = {20 * p}")
    S = X[:, : 2 * p].T @ X[:, : 2 * p] / X.shape[0]
    if np.linalg.eigvalsh(S)[0] <= 1e-12 * np.trace(S):
        raise RankDeficient("sample covariance is singular")
    return whitened_correlations(S[:p, :p], S[p:, p:], S[:p, p:])


def null_quantile(p: int, paths: int, q: float = 0.95, reps: int = 200, seed: int = 0) -> np.ndarray:
    """Per-index ``q``-quantiles of the sample correlations of independent white blocks."""
    rng = np.random.default_rng(seed)
    out = np.empty((reps, p))
    for i in range(reps):
        out[i] = empirical_cca(rng.standard_normal((paths, 2 * p)), p)
    return np.quantile(out, q, axis=0)


@dataclass
class SimulationReport:
    p: int
    paths: int
    seed: int
    sigma_hat: np.ndarray
    sigma_gram: np.ndarray
    null_q95: np.ndarray
    clipped_mass: float
    notes: list = field(default_factory=list)

    @property
    def deviations(self) -> np.ndarray:
        return self.sigma_hat - self.sigma_gram

    @property
    def below_null(self) -> bool:
        return bool(np.all(self.sigma_hat <= self.null_q95))


def gram_sigma(density, p: int) -> np.ndarray:
    """Population canonical correlations of adjacent length-``p`` blocks.

    Blocks ``{-p..-1}`` and ``{0..p-1}`` are, after a time shift, the sections
    ``{-(p-1)..0}`` and ``{1..p}``: section size ``K = p - 1`` with ``N = 0``.
    """
    mt = density if isinstance(density, MomentTable) else moments(density, 2 * p + 4)
    return canonical_correlations(section_gram(mt, p - 1, 0)).sigma


def run_simulation(config: SimConfig, null_reps: int = 200) -> SimulationReport:
    X = sample_paths(config)
    emb = embed(config)
    sig = empirical_cca(X, config.p)
    gram = gram_sigma(config.density, config.p)
    nq = null_quantile(config.p, config.paths, reps=null_reps, seed=config.seed + 1)
    return SimulationReport(config.p, config.paths, config.seed, sig, gram, nq, emb.clipped_mass)
