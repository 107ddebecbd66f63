"""Decision procedures for boson-sampling data.

Two tests live here:

* the row-norm test of Aaronson and Arkhipov, which labels each event as
  coming from a boson sampler or a uniform sampler using only the squared
  row norms of the scattering submatrix, then takes a majority vote;
* a thresholded likelihood-ratio test which compares the probabilities of
  each event under the indistinguishable and distinguishable photon models.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .distributions import EventLog, ModeConfig, NoCollisionDistribution
from .errors import SupportError
from .interferometer import Interferometer, submatrix

DEFAULT_K1 = 0.9
DEFAULT_K2 = 1.5


class Verdict(str, Enum):
    BOSON_SAMPLER = "boson-sampler"
    UNIFORM = "uniform"
    INDISTINGUISHABLE = "indistinguishable"
    DISTINGUISHABLE = "distinguishable"
    INCONCLUSIVE = "inconclusive"

    def __str__(self) -> str:
        return self.value


# -- row-norm test ------------------------------------------------------------


def aa_threshold(n: int, m: int) -> float:
    return (n / m) ** n


def aa_statistic(u: Interferometer, s: ModeConfig, t: ModeConfig) -> float:
    """Product over rows of the squared row norms of ``A = U[s, t]``."""
    a = submatrix(u, s, t)
    return float(np.prod(np.sum(np.abs(a) ** 2, axis=1)))


def aa_statistics(u: Interferometer, s: ModeConfig, outputs: np.ndarray) -> np.ndarray:
    """Vectorised :func:`aa_statistic` over a (K, n) array of output subsets."""
    weights = np.abs(u.matrix[list(s.modes), :]) ** 2  # (n, m)
    # weights[:, outputs] is (n, K, n); sum over output columns, multiply over rows
    return np.prod(weights[:, outputs].sum(axis=2), axis=0)


@dataclass(frozen=True)
class AAEventDecision:
    statistic: float
    threshold: float
    verdict: Verdict


def aa_decide_event(u: Interferometer, s: ModeConfig, t: ModeConfig) -> AAEventDecision:
    # Equality goes to uniform: the boson-sampler label needs a strict excess.
    p = aa_statistic(u, s, t)
    thr = aa_threshold(s.n, u.modes)
    return AAEventDecision(p, thr, Verdict.BOSON_SAMPLER if p > thr else Verdict.UNIFORM)


def _require_events(log: EventLog) -> None:
    if len(log) == 0:
        raise ValueError("event log is empty")


def aa_majority(u: Interferometer, s: ModeConfig, log: EventLog) -> Verdict:
    _require_events(log)
    votes = sum(1 if aa_decide_event(u, s, t).verdict is Verdict.BOSON_SAMPLER else -1 for t in log.events)
    return Verdict.BOSON_SAMPLER if votes > 0 else Verdict.UNIFORM


@dataclass(frozen=True)
class CountingWalk:
    trace: tuple[int, ...]
    decisions: tuple[AAEventDecision, ...]

    @property
    def final(self) -> int:
        return self.trace[-1]

    @property
    def verdict(self) -> Verdict:
        return Verdict.BOSON_SAMPLER if self.final > 0 else Verdict.UNIFORM


def aa_counting_walk(u: Interferometer, s: ModeConfig, log: EventLog) -> CountingWalk:
    """Running tally: +1 for every boson-sampler label, -1 for every uniform one."""
    _require_events(log)
    decisions = tuple(aa_decide_event(u, s, t) for t in log.events)
    steps = [1 if d.verdict is Verdict.BOSON_SAMPLER else -1 for d in decisions]
    return CountingWalk(tuple(int(x) for x in np.cumsum(steps)), decisions)


# -- likelihood-ratio test ----------------------------------------------------


def lr_score(p_ind: float, q_dis: float, k1: float = DEFAULT_K1, k2: float = DEFAULT_K2) -> int:
    """Increment of D for one event with ratio ``R = p_ind / q_dis``.

    ==================  =====
    R >= k2              +2
    1/k1 <= R < k2       +1
    k1 < R < 1/k1         0
    1/k2 < R <= k1       -1
    R <= 1/k2            -2
    ==================  =====

    The comparisons are made on cross-multiplied probabilities rather than on
    R itself. That keeps the scheme exactly antisymmetric: swapping the two
    arguments always negates the score, including at the interval edges.
    """
    if not (p_ind > 0 and q_dis > 0):
        raise SupportError(f"event has non-positive model probability (p_ind={p_ind!r}, q_dis={q_dis!r})")
    if p_ind >= k2 * q_dis:
        return 2
    if q_dis >= k2 * p_ind:
        return -2
    if k1 * p_ind >= q_dis:
        return 1
    if k1 * q_dis >= p_ind:
        return -1
    return 0


def _check_thresholds(k1: float, k2: float) -> None:
    if not (0 < k1 < 1 < k2):
        raise ValueError(f"thresholds must satisfy 0 < k1 < 1 < k2, got k1={k1}, k2={k2}")


@dataclass(frozen=True)
class LRState:
    plus2: int = 0
    plus1: int = 0
    inconclusive: int = 0
    minus1: int = 0
    minus2: int = 0
    k1: float = DEFAULT_K1
    k2: float = DEFAULT_K2

    def __post_init__(self):
        _check_thresholds(self.k1, self.k2)

    @property
    def D(self) -> int:
        return 2 * self.plus2 + self.plus1 - self.minus1 - 2 * self.minus2

    @property
    def events(self) -> int:
        return self.plus2 + self.plus1 + self.inconclusive + self.minus1 + self.minus2

    def tallies(self) -> dict[int, int]:
        return {2: self.plus2, 1: self.plus1, 0: self.inconclusive, -1: self.minus1, -2: self.minus2}


_TALLY_FIELD = {2: "plus2", 1: "plus1", 0: "inconclusive", -1: "minus1", -2: "minus2"}


def lr_update(state: LRState, p_ind: float, q_dis: float) -> LRState:
    return _tally(state, lr_score(p_ind, q_dis, state.k1, state.k2))


def _tally(state: LRState, score: int) -> LRState:
    name = _TALLY_FIELD[score]
    return replace(state, **{name: getattr(state, name) + 1})


def lr_decide(d: int) -> Verdict:
    if d > 0:
        return Verdict.INDISTINGUISHABLE
    if d < 0:
        return Verdict.DISTINGUISHABLE
    return Verdict.INCONCLUSIVE


# -- reports ------------------------------------------------------------------


@dataclass(frozen=True)
class ReportRow:
    index: int
    modes: ModeConfig
    statistic: float
    decision: str
    cumulative: int


@dataclass(frozen=True)
class VerdictReport:
    """Per-event decisions plus the running tally and final verdict.

    ``test`` is ``"aa"`` (statistic = row-norm product, cumulative = C) or
    ``"lr"`` (statistic = probability ratio, cumulative = D).
    """

    test: str
    rows: tuple[ReportRow, ...]
    verdict: Verdict
    tallies: dict | None = None

    @property
    def final(self) -> int:
        return self.rows[-1].cumulative if self.rows else 0


def aa_report(u: Interferometer, s: ModeConfig, log: EventLog) -> VerdictReport:
    walk = aa_counting_walk(u, s, log)
    rows = tuple(
        ReportRow(k, t, d.statistic, str(d.verdict), c)
        for k, (t, d, c) in enumerate(zip(log.events, walk.decisions, walk.trace))
    )
    bs = sum(1 for d in walk.decisions if d.verdict is Verdict.BOSON_SAMPLER)
    return VerdictReport("aa", rows, walk.verdict, {"boson-sampler": bs, "uniform": len(log) - bs})


def lr_verdict(
    u: Interferometer | None,
    s: ModeConfig,
    log: EventLog,
    model_p: NoCollisionDistribution,
    model_q: NoCollisionDistribution,
    k1: float = DEFAULT_K1,
    k2: float = DEFAULT_K2,
) -> VerdictReport:
    """Fold :func:`lr_update` over a log.

    ``model_p`` plays the indistinguishable role and ``model_q`` the
    distinguishable one. ``u`` is only used to check the mode count; the
    probabilities come from the prebuilt models.
    """
    _require_events(log)
    for model in (model_p, model_q):
        if (model.m, model.n) != (log.m, log.n):
            raise SupportError(f"model support (m={model.m}, n={model.n}) does not match the log (m={log.m}, n={log.n})")
    if u is not None and u.modes != log.m:
        raise SupportError(f"interferometer has {u.modes} modes but the log has m={log.m}")
    state = LRState(k1=k1, k2=k2)
    rows = []
    for k, t in enumerate(log.events):
        i = model_p.index_of(t)
        p, q = float(model_p.probs[i]), float(model_q.probs[i])
        if p <= 0 and q <= 0:
            raise SupportError(f"event {k} ({t}) has zero probability under both models")
        score = lr_score(p, q, k1, k2)
        state = _tally(state, score)
        rows.append(ReportRow(k, t, p / q, f"{score:+d}" if score else "0", state.D))
    tallies = {f"{key:+d}" if key else "0": v for key, v in state.tallies().items()}
    return VerdictReport("lr", tuple(rows), lr_decide(state.D), tallies)


def lr_scores(
    model_p: NoCollisionDistribution,
    model_q: NoCollisionDistribution,
    k1: float = DEFAULT_K1,
    k2: float = DEFAULT_K2,
) -> tuple[np.ndarray, np.ndarray]:
    """Score of every support element, plus a mask of outputs that cannot be scored.

    Masked outputs have zero probability under at least one model. Outputs
    impossible under both never show up in sampled data; the rest make
    :func:`lr_score` raise, so callers must check sampled events against the
    mask.
    """
    _check_thresholds(k1, k2)
    p, q = model_p.probs, model_q.probs
    scores = np.zeros(len(p), dtype=np.int64)
    for i in np.flatnonzero((p > 0) & (q > 0)).tolist():
        scores[i] = lr_score(float(p[i]), float(q[i]), k1, k2)
    return scores, ~((p > 0) & (q > 0))
