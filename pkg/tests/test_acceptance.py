"""Exit criteria for the package, one test per criterion.

Each test prints a PASS/FAIL line to the terminal (even when pytest captures
output). The Monte-Carlo criteria run with a fixed master seed chosen before
any of them was executed.
"""

import filecmp
import itertools
import json
import math
import time

import numpy as np
import pytest

from bosonval.cli import main
from bosonval.distributions import (
    ModeConfig,
    centered_input,
    dist_probability_raw,
    bs_probability_raw,
    enumerate_no_collision,
    full_space_probability,
    occupation_patterns,
)
from bosonval.experiments import ExperimentConfig, haar_ensemble_curve, lr_ensemble, nmin_search, pooled, success_curve
from bosonval.interferometer import compose, haar_unitary, reck_decompose
from bosonval.permanent import permanent, permanent_naive
from bosonval.validators import LRState, lr_update

SEED = 12345


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}")
        return ok

    return emit


def test_01_permanent_oracle(report):
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for k in range(1000):
        n = 1 + k % 6
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        ref = permanent_naive(a)
        worst = max(worst, abs(permanent(a) - ref) / abs(ref))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 60
    assert report(1, ok, f"max relative error {worst:.2e} over 1000 matrices (<= 1e-10), {elapsed:.1f}s")


def test_02_full_space_normalisation(report):
    start = time.perf_counter()
    worst = 0.0
    for n, m in [(2, 4), (3, 5), (3, 6)]:
        u = haar_unitary(m, (SEED, n, m))
        s = centered_input(m, n)
        for source in ("indistinguishable", "distinguishable"):
            total = sum(full_space_probability(u, s, mu, source) for mu in occupation_patterns(m, n))
            worst = max(worst, abs(total - 1))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 60
    assert report(2, ok, f"max |sum - 1| = {worst:.2e} (<= 1e-10), {elapsed:.1f}s")


def test_03_support_sizes(report):
    sizes = {m: len(enumerate_no_collision(m, 3)) for m in (5, 7, 9)}
    ok = sizes == {5: 10, 7: 35, 9: 84}
    assert report(3, ok, f"no-collision outputs {sizes} (expected 10, 35, 84)")


def test_04_hong_ou_mandel(report):
    from bosonval.interferometer import Circuit, Coupler

    u = compose(Circuit(2, (Coupler(0, 0.5),)))
    s = t = ModeConfig((0, 1), 2)
    p = bs_probability_raw(u, s, t)
    q = dist_probability_raw(u, s, t)
    ok = p <= 1e-12 and abs(q - 0.5) <= 1e-12
    assert report(4, ok, f"indistinguishable p = {p:.1e} (<= 1e-12), distinguishable q = {q!r} (0.5 +- 1e-12)")


@pytest.mark.slow
def test_05_converging_fractions(report):
    targets = {5: 0.434, 7: 0.573, 9: 0.822}
    fractions = {}
    for m in targets:
        cfg = ExperimentConfig(n=3, m=m, set_sizes=(5000,), trials_per_point=1000, unitary_count=200,
                               master_seed=SEED, exclusion_cap=5000)
        fractions[m] = haar_ensemble_curve(cfg).converging_fraction
    ok = all(abs(fractions[m] - targets[m]) <= 0.10 for m in targets)
    detail = ", ".join(f"m={m}: {fractions[m]:.3f} (target {targets[m]} +- 0.10)" for m in targets)
    assert report(5, ok, detail)


@pytest.mark.slow
def test_06_success_at_500(report):
    cfg = ExperimentConfig(n=3, m=9, set_sizes=(500,), trials_per_point=1000, unitary_count=100,
                           master_seed=SEED, exclusion_cap=5000)
    result = haar_ensemble_curve(cfg)
    bs, un = result.bs_band[0], result.uniform_band[0]
    ok = bs.mean >= 0.95 and un.mean <= 0.05
    assert report(6, ok, f"(3,9) N=500: BS success {bs.mean:.4f} over {bs.count} converging unitaries (>= 0.95), "
                         f"uniform labelled BS {un.mean:.4f} (<= 0.05)")


@pytest.mark.slow
def test_07_nmin_monotone(report):
    means = {}
    for m in (7, 9, 12):
        cfg = ExperimentConfig(n=3, m=m, trials_per_point=1000, unitary_count=50, master_seed=SEED, exclusion_cap=5000)
        means[m] = nmin_search(cfg).mean_n_min
    values = [means[m] for m in (7, 9, 12)]
    ok = None not in values and values[0] >= values[1] >= values[2]
    assert report(7, ok, "Haar-averaged N_min " + ", ".join(f"m={m}: {means[m]:.1f}" for m in means) + " (nonincreasing)")


@pytest.mark.slow
def test_08_large_instance(report):
    cfg = ExperimentConfig(n=5, m=25, set_sizes=(1000,), trials_per_point=1000, unitary_count=20,
                           master_seed=SEED, exclusion_cap=1000)
    start = time.perf_counter()
    hits = 0
    for i in range(cfg.unitary_count):
        curve = success_curve(cfg.unitary(i), cfg.input, "indistinguishable", cfg, unitary_index=i)
        hits += curve.at(1000).estimate >= 0.95
    elapsed = time.perf_counter() - start
    frac = hits / cfg.unitary_count
    assert report(8, frac >= 0.80, f"(5,25): {hits}/20 unitaries reach 95% by N=1000 ({frac:.2f} >= 0.80), {elapsed:.0f}s")


@pytest.mark.slow
def test_09_lr_discrimination(report):
    cfg = ExperimentConfig(n=3, m=7, set_sizes=(200,), trials_per_point=500, unitary_count=20, master_seed=SEED)
    pairs = lr_ensemble(cfg)
    ind = pooled([p[0] for p in pairs])[0]
    dis = pooled([p[1] for p in pairs])[0]
    worst_unitary = max(p[1].points[0].estimate for p in pairs)
    ok = ind.estimate >= 0.95 and dis.estimate <= 0.05
    assert report(9, ok, f"(3,7) N=200 over 20 unitaries: indistinguishable D>0 in {ind.estimate:.4f} (>= 0.95), "
                         f"distinguishable D>0 in {dis.estimate:.4f} (<= 0.05; worst single unitary {worst_unitary:.3f})")


def test_10_lr_antisymmetry(report):
    rng = np.random.default_rng(SEED)
    k1, k2 = 0.9, 1.5
    # include exact interval edges among the random ratios
    edges = np.array([k1, 1 / k1, k2, 1 / k2, 1.0])
    mismatches = 0
    streams = 100_000
    length = 8
    p = rng.random((streams, length)) + 1e-3
    ratio = np.exp(rng.normal(0, 0.6, (streams, length)))
    use_edge = rng.random((streams, length)) < 0.2
    ratio[use_edge] = edges[rng.integers(0, len(edges), use_edge.sum())]
    q = p / ratio
    for i in range(streams):
        fwd = back = LRState(k1=k1, k2=k2)
        for a, b in zip(p[i].tolist(), q[i].tolist()):
            fwd = lr_update(fwd, a, b)
            back = lr_update(back, b, a)
        mismatches += back.D != -fwd.D
    assert report(10, mismatches == 0, f"{streams} ratio streams: {mismatches} with D(swapped) != -D")


def test_11_reck_roundtrip(report):
    worst = 0.0
    count = 0
    for m, k in itertools.product(range(3, 9), range(17)):
        if count == 100:
            break
        u = haar_unitary(m, (SEED, m, k))
        worst = max(worst, float(np.max(np.abs(compose(reck_decompose(u)).matrix - u.matrix))))
        count += 1
    assert report(11, worst <= 1e-10, f"{count} Haar unitaries, m in 3..8: max recomposition error {worst:.2e} (<= 1e-10)")


@pytest.mark.slow
def test_12_reproducibility(report, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "m": [5, 7], "set_sizes": [5, 50, 500], "trials_per_point": 200,
                               "unitary_count": 8, "exclusion_cap": 500, "master_seed": SEED}))
    mismatched = []
    for kind in ("success-curve", "haar-average", "nmin", "lr-curve"):
        dirs = []
        for tag, threads in (("serial", "1"), ("parallel", "8")):
            monkeypatch.setenv("BOSONVAL_THREADS", threads)
            out = tmp_path / f"{kind}-{tag}"
            assert main(["experiment", kind, "--config", str(cfg), "--out", str(out)]) == 0
            dirs.append(out)
        files = sorted(p.name for p in dirs[0].glob("*.csv"))
        _, bad, errors = filecmp.cmpfiles(dirs[0], dirs[1], files, shallow=False)
        mismatched += [f"{kind}/{f}" for f in bad + errors]
    assert report(12, not mismatched, "byte-identical result CSVs serial vs 8 threads" + (f"; differ: {mismatched}" if mismatched else ""))
