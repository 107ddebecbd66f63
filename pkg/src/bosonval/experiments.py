"""Monte-Carlo harness for success-rate curves.

Every per-event decision is a fixed function of the output subset, so the
harness labels the whole support once per interferometer and then samples
event logs as arrays of support positions. Logs are still drawn event by
event from the source distribution; only the bookkeeping is vectorised.

Randomness is organised in independent streams. The stream for one block of
trials is seeded from ``(master_seed, stream kind, unitary index, set-size
index)``; trial ``t`` of the block is row ``t`` of that stream. Blocks never
share state, so running them in parallel or in any order gives the same
numbers.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .distributions import (
    ModeConfig,
    Source,
    build_distribution,
    centered_input,
    sample_indices,
    support_array,
    uniform_distribution,
)
from .errors import ConfigError, SupportError
from .interferometer import Interferometer, haar_unitary
from .validators import DEFAULT_K1, DEFAULT_K2, aa_statistics, aa_threshold, lr_scores

log = logging.getLogger(__name__)

DEFAULT_SET_SIZES = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000)
BAND_WIDTH = 1.5  # standard deviations in reported bands
THREADS_ENV = "BOSONVAL_THREADS"
# Upper bound on events held in memory per sampled chunk.
_CHUNK_EVENTS = 1 << 21

# Stream kinds
_HAAR, _BS, _UNIFORM, _LR_IND, _LR_DIS = range(5)


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    m: int
    set_sizes: tuple[int, ...] = DEFAULT_SET_SIZES
    trials_per_point: int = 1000
    unitary_count: int = 1000
    master_seed: int = 0
    exclusion_cap: int = 5000
    success_threshold: float = 0.95
    input_modes: tuple[int, ...] | None = None  # None: centred contiguous block
    k1: float = DEFAULT_K1
    k2: float = DEFAULT_K2

    def __post_init__(self):
        object.__setattr__(self, "set_sizes", tuple(int(x) for x in self.set_sizes))
        if self.input_modes is not None:
            object.__setattr__(self, "input_modes", tuple(int(x) for x in self.input_modes))
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError("n", f"must be a positive integer, got {self.n!r}")
        if not isinstance(self.m, int) or self.m < self.n:
            raise ConfigError("m", f"must be an integer >= n={self.n}, got {self.m!r}")
        if not self.set_sizes:
            raise ConfigError("set_sizes", "must not be empty")
        if any(x < 1 for x in self.set_sizes):
            raise ConfigError("set_sizes", "entries must be positive")
        if any(b <= a for a, b in zip(self.set_sizes, self.set_sizes[1:])):
            raise ConfigError("set_sizes", "must be strictly ascending")
        if self.trials_per_point < 1:
            raise ConfigError("trials_per_point", "must be >= 1")
        if self.unitary_count < 1:
            raise ConfigError("unitary_count", "must be >= 1")
        if self.exclusion_cap < 1:
            raise ConfigError("exclusion_cap", "must be >= 1")
        if not (0 < self.success_threshold < 1):
            raise ConfigError("success_threshold", "must lie strictly between 0 and 1")
        if not (0 < self.k1 < 1 < self.k2):
            raise ConfigError("k1", f"thresholds must satisfy 0 < k1 < 1 < k2, got k1={self.k1}, k2={self.k2}")
        if self.input_modes is not None:
            if len(self.input_modes) != self.n:
                raise ConfigError("input_modes", f"expected {self.n} modes, got {len(self.input_modes)}")
            try:
                ModeConfig.of(self.input_modes, self.m)
            except ValueError as exc:
                raise ConfigError("input_modes", str(exc)) from None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration field")
        missing = [f for f in ("n", "m") if f not in data]
        if missing:
            raise ConfigError(missing[0], "required field is missing")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["set_sizes"] = list(self.set_sizes)
        if self.input_modes is not None:
            d["input_modes"] = list(self.input_modes)
        return d

    @property
    def input(self) -> ModeConfig:
        if self.input_modes is None:
            return centered_input(self.m, self.n)
        return ModeConfig.of(self.input_modes, self.m)

    def stream(self, kind: int, unitary_index: int, size_index: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.master_seed, kind, unitary_index, size_index]))

    def unitary(self, index: int) -> Interferometer:
        """The index-th Haar unitary of this configuration's ensemble."""
        return haar_unitary(self.m, np.random.SeedSequence([self.master_seed, _HAAR, index]))

    def cap_index(self) -> int:
        """Set-size index used for the convergence check at the exclusion cap."""
        if self.exclusion_cap in self.set_sizes:
            return self.set_sizes.index(self.exclusion_cap)
        return len(self.set_sizes)


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    if raw.strip():
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(THREADS_ENV, f"expected an integer, got {raw!r}") from None
    return 1


def _map(fn: Callable, items: Sequence, workers: int | None):
    workers = default_workers() if workers is None else max(1, workers)
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- results ------------------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    set_size: int
    successes: int
    trials: int

    @property
    def estimate(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1 - p) / self.trials)


@dataclass(frozen=True)
class SuccessCurve:
    """Fraction of trials whose verdict was the tracked label, per set size.

    For boson-sampler data that label is the correct one, so the fraction is
    the success rate. For uniform (or distinguishable) data the curve reports
    how often the data was wrongly labelled, which should fall towards zero.
    """

    m: int
    n: int
    unitary_index: int
    source: str
    points: tuple[CurvePoint, ...]
    converging: bool | None = None
    cap_point: CurvePoint | None = None

    def at(self, set_size: int) -> CurvePoint:
        for p in self.points:
            if p.set_size == set_size:
                return p
        raise KeyError(set_size)


@dataclass(frozen=True)
class EnsemblePoint:
    set_size: int
    mean: float
    std: float
    count: int

    @property
    def lower(self) -> float:
        return self.mean - BAND_WIDTH * self.std

    @property
    def upper(self) -> float:
        return self.mean + BAND_WIDTH * self.std


@dataclass(frozen=True)
class EnsembleResult:
    config: ExperimentConfig
    bs_curves: tuple[SuccessCurve, ...]
    uniform_curves: tuple[SuccessCurve, ...]
    bs_band: tuple[EnsemblePoint, ...]
    uniform_band: tuple[EnsemblePoint, ...]

    @property
    def converging_count(self) -> int:
        return sum(1 for c in self.bs_curves if c.converging)

    @property
    def converging_fraction(self) -> float:
        return self.converging_count / len(self.bs_curves)


@dataclass(frozen=True)
class NminResult:
    m: int
    n: int
    unitary_index: int
    n_min: int | None
    bs_point: CurvePoint | None = None
    uniform_point: CurvePoint | None = None
    converging: bool | None = None

    @property
    def reached(self) -> bool:
        return self.n_min is not None


@dataclass(frozen=True)
class HaarNmin:
    config: ExperimentConfig
    results: tuple[NminResult, ...]

    def averaged(self) -> list[NminResult]:
        return [r for r in self.results if r.converging and r.reached]

    @property
    def mean_n_min(self) -> float | None:
        used = self.averaged()
        if not used:
            return None
        return float(np.mean([r.n_min for r in used]))


# -- sampling kernels ---------------------------------------------------------


def _tally_trials(
    probs: np.ndarray,
    values: np.ndarray,
    set_size: int,
    trials: int,
    rng: np.random.Generator,
    impossible: np.ndarray | None = None,
) -> np.ndarray:
    """Sum of per-event values over each of ``trials`` sampled logs."""
    cdf_probs = probs
    out = np.empty(trials, dtype=np.int64)
    rows = max(1, _CHUNK_EVENTS // set_size)
    for lo in range(0, trials, rows):
        hi = min(trials, lo + rows)
        idx = sample_indices(cdf_probs, (hi - lo, set_size), rng)
        if impossible is not None and impossible[idx].any():
            raise SupportError("a sampled event has zero probability under one of the models")
        out[lo:hi] = values[idx].sum(axis=1)
    return out


def _aa_votes(u: Interferometer, s: ModeConfig) -> np.ndarray:
    """+1 for outputs the row-norm test labels boson-sampler, -1 otherwise."""
    stats = aa_statistics(u, s, support_array(u.modes, s.n))
    return np.where(stats > aa_threshold(s.n, u.modes), 1, -1).astype(np.int64)


def _source_probs(u: Interferometer, s: ModeConfig, source: Source) -> np.ndarray:
    if source is Source.UNIFORM:
        return uniform_distribution(u.modes, s.n, s).probs
    return build_distribution(u, s, source).probs


def _aa_point(probs, votes, cfg: ExperimentConfig, kind: int, unitary_index: int, size_index: int, set_size: int) -> CurvePoint:
    rng = cfg.stream(kind, unitary_index, size_index)
    walk = _tally_trials(probs, votes, set_size, cfg.trials_per_point, rng)
    return CurvePoint(set_size, int(np.count_nonzero(walk > 0)), cfg.trials_per_point)


def _check_instance(u: Interferometer, s: ModeConfig, cfg: ExperimentConfig) -> None:
    if u.modes != cfg.m or s.m != cfg.m or s.n != cfg.n:
        raise ConfigError("m", f"interferometer/input (m={u.modes}, n={s.n}) do not match the config (m={cfg.m}, n={cfg.n})")


def _aa_curve(u, s, source, cfg, unitary_index, votes, probs) -> SuccessCurve:
    kind = _UNIFORM if source is Source.UNIFORM else _BS
    points = tuple(
        _aa_point(probs, votes, cfg, kind, unitary_index, i, size) for i, size in enumerate(cfg.set_sizes)
    )
    converging = cap_point = None
    if source is Source.INDISTINGUISHABLE:
        cap_point = _cap_point(points, probs, votes, cfg, unitary_index)
        converging = cap_point.estimate >= cfg.success_threshold
    return SuccessCurve(cfg.m, cfg.n, unitary_index, str(source), points, converging, cap_point)


def _cap_point(points, probs, votes, cfg, unitary_index) -> CurvePoint:
    ci = cfg.cap_index()
    if ci < len(points):
        return points[ci]
    return _aa_point(probs, votes, cfg, _BS, unitary_index, ci, cfg.exclusion_cap)


def success_curve(
    u: Interferometer,
    s: ModeConfig,
    source: Source | str,
    cfg: ExperimentConfig,
    unitary_index: int = 0,
) -> SuccessCurve:
    """Majority-vote row-norm test on logs sampled from ``source``.

    Each point reports how many of ``cfg.trials_per_point`` logs were labelled
    boson-sampler. For indistinguishable-photon data the curve is also
    classified as converging when the rate at ``cfg.exclusion_cap`` events
    reaches ``cfg.success_threshold``.
    """
    source = Source(source)
    _check_instance(u, s, cfg)
    return _aa_curve(u, s, source, cfg, unitary_index, _aa_votes(u, s), _source_probs(u, s, source))


def _band(curves: Sequence[SuccessCurve], set_sizes) -> tuple[EnsemblePoint, ...]:
    band = []
    for i, size in enumerate(set_sizes):
        est = np.array([c.points[i].estimate for c in curves])
        band.append(EnsemblePoint(size, float(est.mean()), float(est.std()), len(est)))
    return tuple(band)


def haar_ensemble_curve(cfg: ExperimentConfig, workers: int | None = None) -> EnsembleResult:
    """Average success curves over ``cfg.unitary_count`` Haar unitaries.

    Boson-sampler curves are averaged over converging unitaries only; the
    uniform-data curves are averaged over every unitary.
    """
    s = cfg.input

    def one(index: int):
        u = cfg.unitary(index)
        votes = _aa_votes(u, s)
        bs = _aa_curve(u, s, Source.INDISTINGUISHABLE, cfg, index, votes, _source_probs(u, s, Source.INDISTINGUISHABLE))
        un = _aa_curve(u, s, Source.UNIFORM, cfg, index, votes, _source_probs(u, s, Source.UNIFORM))
        return bs, un

    pairs = _map(one, range(cfg.unitary_count), workers)
    bs_curves = tuple(p[0] for p in pairs)
    uniform_curves = tuple(p[1] for p in pairs)
    kept = [c for c in bs_curves if c.converging]
    if not kept:
        raise ArithmeticError(
            f"no unitary reached {cfg.success_threshold:.0%} success at {cfg.exclusion_cap} events; nothing to average"
        )
    log.info("m=%d n=%d: %d/%d unitaries converge", cfg.m, cfg.n, len(kept), len(bs_curves))
    return EnsembleResult(cfg, bs_curves, uniform_curves, _band(kept, cfg.set_sizes), _band(uniform_curves, cfg.set_sizes))


def nmin_for_unitary(u: Interferometer, s: ModeConfig, cfg: ExperimentConfig, unitary_index: int = 0) -> NminResult:
    """First set size where boson-sampler data passes and uniform data fails.

    Passing means a success rate of at least ``cfg.success_threshold``;
    uniform data must be labelled boson-sampler in at most
    ``1 - cfg.success_threshold`` of the trials.
    """
    _check_instance(u, s, cfg)
    votes = _aa_votes(u, s)
    bs_probs = _source_probs(u, s, Source.INDISTINGUISHABLE)
    un_probs = _source_probs(u, s, Source.UNIFORM)
    cap = _aa_point(bs_probs, votes, cfg, _BS, unitary_index, cfg.cap_index(), cfg.exclusion_cap)
    converging = cap.estimate >= cfg.success_threshold
    for i, size in enumerate(cfg.set_sizes):
        bs = cap if i == cfg.cap_index() else _aa_point(bs_probs, votes, cfg, _BS, unitary_index, i, size)
        if bs.estimate < cfg.success_threshold:
            continue
        un = _aa_point(un_probs, votes, cfg, _UNIFORM, unitary_index, i, size)
        if un.estimate <= 1 - cfg.success_threshold:
            return NminResult(cfg.m, cfg.n, unitary_index, size, bs, un, converging)
    return NminResult(cfg.m, cfg.n, unitary_index, None, converging=converging)


def nmin_search(cfg: ExperimentConfig, workers: int | None = None) -> HaarNmin:
    """:func:`nmin_for_unitary` over the configuration's Haar ensemble."""
    s = cfg.input
    results = _map(lambda i: nmin_for_unitary(cfg.unitary(i), s, cfg, i), range(cfg.unitary_count), workers)
    return HaarNmin(cfg, tuple(results))


def lr_success_curve(
    u: Interferometer, s: ModeConfig, cfg: ExperimentConfig, unitary_index: int = 0
) -> tuple[SuccessCurve, SuccessCurve]:
    """Likelihood-ratio test on indistinguishable and distinguishable data.

    Both curves count the trials that ended with D > 0: for indistinguishable
    data that is the success rate, for distinguishable data it is the false
    positive rate.
    """
    _check_instance(u, s, cfg)
    p = build_distribution(u, s, Source.INDISTINGUISHABLE)
    q = build_distribution(u, s, Source.DISTINGUISHABLE)
    scores, impossible = lr_scores(p, q, cfg.k1, cfg.k2)
    curves = []
    for kind, model in ((_LR_IND, p), (_LR_DIS, q)):
        points = []
        for i, size in enumerate(cfg.set_sizes):
            d = _tally_trials(model.probs, scores, size, cfg.trials_per_point, cfg.stream(kind, unitary_index, i), impossible)
            points.append(CurvePoint(size, int(np.count_nonzero(d > 0)), cfg.trials_per_point))
        curves.append(SuccessCurve(cfg.m, cfg.n, unitary_index, str(model.source), tuple(points)))
    return curves[0], curves[1]


def lr_ensemble(cfg: ExperimentConfig, workers: int | None = None) -> list[tuple[SuccessCurve, SuccessCurve]]:
    s = cfg.input
    return _map(lambda i: lr_success_curve(cfg.unitary(i), s, cfg, i), range(cfg.unitary_count), workers)


def pooled(curves: Sequence[SuccessCurve]) -> tuple[CurvePoint, ...]:
    """Sum successes and trials across curves, point by point."""
    out = []
    for i, first in enumerate(curves[0].points):
        out.append(
            CurvePoint(first.set_size, sum(c.points[i].successes for c in curves), sum(c.points[i].trials for c in curves))
        )
    return tuple(out)
