"""Output distributions over no-collision events.

A no-collision event places at most one photon in each output mode, so it is
an n-subset of the m modes. Supports are always listed in lexicographic order
of those subsets. Probabilities are post-selected: the raw weights over the
no-collision subsets are renormalised to sum to one, since the detectors only
record that class of event.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateDistributionError,
    DimensionError,
    ModeConfigError,
    SupportError,
)
from .interferometer import Interferometer, submatrix
from .permanent import permanent, permanent_batch

NORMALIZATION_TOL = 1e-10
# Guards for the full-space normalisation oracle.
ORACLE_MAX_PHOTONS = 4
ORACLE_MAX_MODES = 8


class Source(str, Enum):
    INDISTINGUISHABLE = "indistinguishable"
    DISTINGUISHABLE = "distinguishable"
    UNIFORM = "uniform"
    EMPIRICAL = "empirical"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class ModeConfig:
    """Sorted set of n distinct occupied modes out of m."""

    modes: tuple[int, ...]
    m: int

    def __post_init__(self):
        modes = tuple(int(x) for x in self.modes)
        object.__setattr__(self, "modes", modes)
        if self.m < 1:
            raise ModeConfigError(f"mode count must be positive, got {self.m}")
        if not modes:
            raise ModeConfigError("a mode configuration needs at least one mode")
        if any(b <= a for a, b in zip(modes, modes[1:])):
            raise ModeConfigError(f"modes must be strictly increasing, got {list(modes)}")
        if modes[0] < 0 or modes[-1] >= self.m:
            raise ModeConfigError(f"modes {list(modes)} out of range for m={self.m}")

    @classmethod
    def of(cls, modes: Iterable[int], m: int) -> "ModeConfig":
        """Build from any iterable of modes, sorting it first."""
        modes = sorted(int(x) for x in modes)
        if len(set(modes)) != len(modes):
            raise ModeConfigError(f"repeated mode in {modes}; no-collision configurations need distinct modes")
        return cls(tuple(modes), m)

    @classmethod
    def from_occupation(cls, occupation: Sequence[int]) -> "ModeConfig":
        """From a 0/1 occupation list such as ``[0, 1, 1, 1, 0]``."""
        occ = [int(x) for x in occupation]
        if any(x not in (0, 1) for x in occ):
            raise ModeConfigError(f"occupation {occ} has multiplicities other than 0 or 1")
        return cls(tuple(i for i, x in enumerate(occ) if x), len(occ))

    @property
    def n(self) -> int:
        return len(self.modes)

    def occupation(self) -> list[int]:
        occ = [0] * self.m
        for j in self.modes:
            occ[j] = 1
        return occ

    def __str__(self) -> str:
        return " ".join(str(x) for x in self.modes)


def centered_input(m: int, n: int) -> ModeConfig:
    """Contiguous block of n modes in the middle, e.g. (0,1,1,1,0) for m=5, n=3."""
    if not 1 <= n <= m:
        raise ModeConfigError(f"need 1 <= n <= m, got n={n}, m={m}")
    start = (m - n) // 2
    return ModeConfig(tuple(range(start, start + n)), m)


def enumerate_no_collision(m: int, n: int) -> list[ModeConfig]:
    return [ModeConfig(c, m) for c in itertools.combinations(range(m), _check_mn(m, n))]


def _check_mn(m: int, n: int) -> int:
    if n < 1 or n > m:
        raise ModeConfigError(f"need 1 <= n <= m, got n={n}, m={m}")
    return n


def support_array(m: int, n: int) -> np.ndarray:
    """All n-subsets of range(m) as a (C(m, n), n) int array, lexicographic."""
    _check_mn(m, n)
    k = math.comb(m, n)
    return np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(m), n)), dtype=np.int64, count=k * n).reshape(k, n)


def lex_rank(modes: Sequence[int], m: int) -> int:
    """Position of a sorted n-subset in the lexicographic order of all n-subsets."""
    n = len(modes)
    rank = 0
    prev = -1
    for i, c in enumerate(modes):
        for v in range(prev + 1, c):
            rank += math.comb(m - 1 - v, n - 1 - i)
        prev = c
    return rank


# -- probabilities ------------------------------------------------------------


def bs_probability_raw(u: Interferometer, s: ModeConfig, t: ModeConfig) -> float:
    """``|perm(A)|**2`` for indistinguishable photons (not post-selected)."""
    return abs(permanent(submatrix(u, s, t))) ** 2


def dist_probability_raw(u: Interferometer, s: ModeConfig, t: ModeConfig) -> float:
    """Permanent of ``|A|**2``: each photon routes independently."""
    weights = np.abs(submatrix(u, s, t)) ** 2
    return float(permanent(weights).real)


def _submatrix_stack(matrix: np.ndarray, s: ModeConfig, outputs: np.ndarray) -> np.ndarray:
    rows = matrix[list(s.modes), :]
    # (n, K, n) -> (K, n, n) with stack[k, i, j] = U[s_i, outputs[k, j]]
    return np.ascontiguousarray(rows[:, outputs].transpose(1, 0, 2))


def raw_weights(u: Interferometer, s: ModeConfig, source: Source | str, chunk: int = 1 << 15) -> np.ndarray:
    """Un-normalised weights of every no-collision output, lexicographic order."""
    source = Source(source)
    m = u.modes
    if s.m != m:
        raise ModeConfigError(f"input configuration has m={s.m} but the interferometer has {m} modes")
    outputs = support_array(m, s.n)
    if source is Source.UNIFORM:
        return np.ones(len(outputs))
    out = np.empty(len(outputs))
    for lo in range(0, len(outputs), chunk):
        stack = _submatrix_stack(u.matrix, s, outputs[lo : lo + chunk])
        if source is Source.INDISTINGUISHABLE:
            out[lo : lo + chunk] = np.abs(permanent_batch(stack)) ** 2
        elif source is Source.DISTINGUISHABLE:
            out[lo : lo + chunk] = permanent_batch(np.abs(stack) ** 2)
        else:
            raise ValueError(f"cannot build a model distribution for source {source}")
    return out


@dataclass(frozen=True, eq=False)
class NoCollisionDistribution:
    """Normalised probabilities over the lexicographic no-collision support."""

    input: ModeConfig
    source: Source
    probs: np.ndarray
    m: int
    n: int
    _support: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        if probs.shape != (math.comb(self.m, self.n),):
            raise DimensionError(f"expected {math.comb(self.m, self.n)} probabilities for m={self.m}, n={self.n}, got {probs.shape}")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and non-negative")
        if abs(probs.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "source", Source(self.source))

    @property
    def support_array(self) -> np.ndarray:
        if self._support is None:
            object.__setattr__(self, "_support", support_array(self.m, self.n))
        return self._support

    @property
    def support(self) -> list[ModeConfig]:
        return [ModeConfig(tuple(row), self.m) for row in self.support_array.tolist()]

    def __len__(self) -> int:
        return len(self.probs)

    def index_of(self, t: ModeConfig) -> int:
        if t.m != self.m or t.n != self.n:
            raise SupportError(f"event {t} (m={t.m}, n={t.n}) is outside the support (m={self.m}, n={self.n})")
        return lex_rank(t.modes, self.m)

    def prob(self, t: ModeConfig) -> float:
        return float(self.probs[self.index_of(t)])


def build_distribution(u: Interferometer, s: ModeConfig, source: Source | str) -> NoCollisionDistribution:
    source = Source(source)
    weights = raw_weights(u, s, source)
    total = weights.sum()
    if not total > 0:
        raise DegenerateDistributionError(
            f"all no-collision weights vanish for input {s} ({source}); the interferometer block is degenerate"
        )
    return NoCollisionDistribution(s, source, weights / total, u.modes, s.n)


def uniform_distribution(m: int, n: int, s: ModeConfig | None = None) -> NoCollisionDistribution:
    k = math.comb(m, _check_mn(m, n))
    if s is None:
        s = centered_input(m, n)
    return NoCollisionDistribution(s, Source.UNIFORM, np.full(k, 1.0 / k), m, n)


def occupation_patterns(m: int, n: int) -> list[tuple[int, ...]]:
    """Every way to place n photons into m modes, as multiplicity tuples."""
    patterns = []
    for combo in itertools.combinations_with_replacement(range(m), n):
        mu = [0] * m
        for j in combo:
            mu[j] += 1
        patterns.append(tuple(mu))
    return patterns


def full_space_probability(u: Interferometer, s: ModeConfig, mu: Sequence[int], source: Source | str) -> float:
    """Exact probability of an occupation pattern over the full output space.

    Output column j is repeated ``mu[j]`` times and the permanent-based weight
    divided by ``prod(mu_j!)``. Only small instances are accepted; this is a
    check on normalisation, not a simulator.
    """
    source = Source(source)
    mu = [int(x) for x in mu]
    m, n = u.modes, s.n
    if n > ORACLE_MAX_PHOTONS or m > ORACLE_MAX_MODES:
        raise DimensionError(f"full-space oracle is limited to n <= {ORACLE_MAX_PHOTONS}, m <= {ORACLE_MAX_MODES}")
    if len(mu) != m or any(x < 0 for x in mu) or sum(mu) != n:
        raise ModeConfigError(f"occupation pattern {mu} must have {m} non-negative entries summing to {n}")
    cols = [j for j, k in enumerate(mu) for _ in range(k)]
    a = u.matrix[np.ix_(list(s.modes), cols)]
    norm = math.prod(math.factorial(k) for k in mu)
    if source is Source.INDISTINGUISHABLE:
        return abs(permanent(a)) ** 2 / norm
    if source is Source.DISTINGUISHABLE:
        return float(permanent(np.abs(a) ** 2).real) / norm
    raise ValueError(f"full-space probabilities are defined for photon sources only, not {source}")


# -- sampling -----------------------------------------------------------------


@dataclass(frozen=True)
class EventLog:
    """Observed no-collision outputs, in arrival order."""

    input: ModeConfig
    events: tuple[ModeConfig, ...]
    unitary_ref: str = "unknown"
    source: str = "unknown"
    seed: object = None

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        m, n = self.input.m, self.input.n
        for k, t in enumerate(self.events):
            if t.m != m or t.n != n:
                raise SupportError(f"event {k} ({t}) is not a {n}-photon no-collision output of {m} modes")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def m(self) -> int:
        return self.input.m

    @property
    def n(self) -> int:
        return self.input.n

    def indices(self) -> np.ndarray:
        return np.array([lex_rank(t.modes, self.m) for t in self.events], dtype=np.int64)


def sample_indices(probs: np.ndarray, size, rng: np.random.Generator) -> np.ndarray:
    """Cumulative-sum inversion: support positions for ``size`` uniform draws.

    Draw ``u`` maps to the first position whose cumulative probability
    exceeds it. A bucket table over [0, total) narrows the search, which
    gives the same indices as ``np.searchsorted(cdf, u, side="right")``.
    """
    cdf = np.cumsum(probs)
    draws = rng.random(size) * cdf[-1]
    return inverse_cdf(cdf, draws)


def inverse_cdf(cdf: np.ndarray, draws: np.ndarray) -> np.ndarray:
    k = len(cdf)
    buckets = max(256, 8 * k)
    edges = np.arange(buckets) * (cdf[-1] / buckets)
    guide = np.searchsorted(cdf, edges, side="right")
    flat = draws.ravel()
    g = np.minimum((flat * (buckets / cdf[-1])).astype(np.int64), buckets - 1)
    g -= edges[g] > flat  # rounding may land one bucket high
    idx = np.minimum(guide[g], k - 1)
    todo = np.flatnonzero(cdf[idx] <= flat)
    while todo.size:
        idx[todo] += 1
        todo = todo[(idx[todo] < k - 1) & (cdf[idx[todo]] <= flat[todo])]
    return idx.reshape(np.shape(draws))


def sample_events(d: NoCollisionDistribution, count: int, seed, unitary_ref: str = "unknown") -> EventLog:
    rng = np.random.default_rng(seed)
    idx = sample_indices(d.probs, int(count), rng)
    support = d.support_array
    events = tuple(ModeConfig(tuple(support[i]), d.m) for i in idx.tolist())
    return EventLog(d.input, events, unitary_ref=unitary_ref, source=str(d.source), seed=seed)


def empirical_distribution(log: EventLog) -> NoCollisionDistribution:
    if len(log) == 0:
        raise ValueError("empirical distribution of an empty log")
    counts = np.bincount(log.indices(), minlength=math.comb(log.m, log.n)).astype(float)
    return NoCollisionDistribution(log.input, Source.EMPIRICAL, counts / counts.sum(), log.m, log.n)


def variation_distance(p: NoCollisionDistribution, q: NoCollisionDistribution) -> float:
    """Total variation distance ``sum |p_k - q_k| / 2``."""
    if (p.m, p.n) != (q.m, q.n):
        raise SupportError(f"supports differ: (m={p.m}, n={p.n}) vs (m={q.m}, n={q.n})")
    return 0.5 * float(np.abs(p.probs - q.probs).sum())
