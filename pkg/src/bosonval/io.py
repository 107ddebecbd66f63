"""Reading and writing the on-disk formats.

* unitary file: JSON ``{"modes": m, "rows": [[[re, im], ...], ...]}``
* circuit file: JSON array of ``{"kind": "coupler", "modes": [j, j+1], "tau": t}``
  and ``{"kind": "phase", "mode": j, "phi": p}`` records, in traversal order
* event log: CSV ``index,modes`` with space-separated 0-based modes
* distribution: CSV ``modes,probability`` (17 significant digits)
* verdict report: CSV ``test,index,modes,statistic,decision,cumulative``
  followed by one ``verdict`` summary row
* experiment results: curve and N_min CSVs plus a JSON run manifest

Loaders validate everything they read and raise :class:`FormatError` naming
the failed check (and the line, for CSV files).
"""

from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .distributions import EventLog, ModeConfig, NoCollisionDistribution, lex_rank
from .errors import FormatError
from .experiments import EnsembleResult, NminResult, SuccessCurve
from .interferometer import LOAD_TOL, Circuit, Coupler, Interferometer, Phase, unitarity_residual
from .validators import VerdictReport


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(str(x) for x in row) for row in rows)
    return "\n".join(lines) + "\n"


# -- unitaries and circuits ---------------------------------------------------


def unitary_to_json(u: Interferometer) -> dict:
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in u.matrix]
    return {"modes": u.modes, "rows": rows}


def save_unitary(u: Interferometer, path) -> None:
    _write_text(path, json.dumps(unitary_to_json(u)) + "\n")


def load_unitary(path, tol: float = LOAD_TOL) -> Interferometer:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON ({exc.msg})", path, exc.lineno) from None
    if not isinstance(data, dict) or "modes" not in data or "rows" not in data:
        raise FormatError("expected an object with fields 'modes' and 'rows'", path)
    m = data["modes"]
    rows = data["rows"]
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise FormatError(f"'modes' must be a positive integer, got {m!r}", path)
    if not isinstance(rows, list) or len(rows) != m:
        raise FormatError(f"'rows' must hold {m} rows", path)
    matrix = np.empty((m, m), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != m:
            raise FormatError(f"row {i} must hold {m} entries", path)
        for j, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                raise FormatError(f"entry [{i}][{j}] must be a [re, im] pair of numbers", path)
            if not all(math.isfinite(x) for x in entry):
                raise FormatError(f"entry [{i}][{j}] is not finite", path)
            matrix[i, j] = complex(entry[0], entry[1])
    residual = unitarity_residual(matrix)
    if residual > tol:
        raise FormatError(f"unitarity check failed: max|U^dagger U - I| = {residual:.3e} > {tol:g}", path)
    return Interferometer(matrix, provenance=f"file({path})", tol=tol)


def circuit_to_json(c: Circuit) -> list[dict]:
    out = []
    for el in c.elements:
        if isinstance(el, Coupler):
            out.append({"kind": "coupler", "modes": [el.mode, el.mode + 1], "tau": el.tau})
        else:
            out.append({"kind": "phase", "mode": el.mode, "phi": el.phi})
    return out


def save_circuit(c: Circuit, path) -> None:
    _write_text(path, json.dumps(circuit_to_json(c), indent=1) + "\n")


def load_circuit(path, modes: int | None = None) -> Circuit:
    """Read a circuit file; the mode count defaults to the highest mode used + 1."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON ({exc.msg})", path, exc.lineno) from None
    if not isinstance(data, list):
        raise FormatError("expected an array of element records", path)
    elements = []
    highest = 0
    for k, rec in enumerate(data):
        if not isinstance(rec, dict) or rec.get("kind") not in ("coupler", "phase"):
            raise FormatError(f"element {k}: 'kind' must be 'coupler' or 'phase'", path)
        try:
            if rec["kind"] == "coupler":
                a, b = (int(x) for x in rec["modes"])
                if b != a + 1:
                    raise FormatError(f"element {k}: coupler must act on adjacent modes, got {[a, b]}", path)
                elements.append(Coupler(a, float(rec["tau"])))
                highest = max(highest, b)
            else:
                elements.append(Phase(int(rec["mode"]), float(rec["phi"])))
                highest = max(highest, int(rec["mode"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"element {k}: malformed record {rec!r}", path) from None
    try:
        return Circuit(modes if modes is not None else highest + 1, tuple(elements))
    except (ValueError, TypeError) as exc:
        raise FormatError(f"circuit check failed: {exc}", path) from None


# -- event logs and distributions ---------------------------------------------


def write_event_log(log: EventLog, path) -> None:
    _write_text(path, _csv_text(("index", "modes"), ((k, str(t)) for k, t in enumerate(log.events))))


def parse_modes(text: str, m: int) -> ModeConfig:
    return ModeConfig(tuple(int(x) for x in text.split()), m)


def read_event_log(path, input: ModeConfig, unitary_ref: str = "unknown", source: str = "unknown") -> EventLog:
    """Read an event log for the given input; each row must be an n-subset of range(m)."""
    m, n = input.m, input.n
    events = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["index", "modes"]:
            raise FormatError(f"header must be 'index,modes', got {','.join(header or [])!r}", path, 1)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"expected 2 fields, got {len(row)}", path, line)
            try:
                if int(row[0]) != len(events):
                    raise FormatError(f"index {row[0]} out of sequence (expected {len(events)})", path, line)
                t = parse_modes(row[1], m)
            except ValueError as exc:
                if isinstance(exc, FormatError):
                    raise
                raise FormatError(f"bad event {row[1]!r}: {exc}", path, line) from None
            if t.n != n:
                raise FormatError(f"event {row[1]!r} has {t.n} photons, expected {n}", path, line)
            events.append(t)
    return EventLog(input, tuple(events), unitary_ref=unitary_ref, source=source)


def write_distribution(d: NoCollisionDistribution, path) -> None:
    rows = ((" ".join(str(x) for x in t), _fmt(p)) for t, p in zip(d.support_array.tolist(), d.probs))
    _write_text(path, _csv_text(("modes", "probability"), rows))


def read_distribution(path, input: ModeConfig, source="empirical") -> NoCollisionDistribution:
    probs = []
    m = input.m
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["modes", "probability"]:
            raise FormatError("header must be 'modes,probability'", path, 1)
        expected = None
        for row in reader:
            if not row:
                continue
            try:
                t = parse_modes(row[0], m)
                p = float(row[1])
            except (ValueError, IndexError) as exc:
                raise FormatError(f"bad row {row!r}: {exc}", path, reader.line_num) from None
            if lex_rank(t.modes, m) != len(probs) or (expected is not None and t.n != expected):
                raise FormatError(f"row {row[0]!r} is out of lexicographic order", path, reader.line_num)
            expected = t.n
            probs.append(p)
    try:
        return NoCollisionDistribution(input, source, np.array(probs), m, input.n)
    except ValueError as exc:
        raise FormatError(str(exc), path) from None


# -- reports and experiment results -------------------------------------------

REPORT_HEADER = ("test", "index", "modes", "statistic", "decision", "cumulative")


def write_report(report: VerdictReport, path) -> None:
    rows = [(report.test, r.index, str(r.modes), _fmt(r.statistic), r.decision, r.cumulative) for r in report.rows]
    rows.append((report.test, "verdict", "", "", str(report.verdict), report.final))
    _write_text(path, _csv_text(REPORT_HEADER, rows))


CURVE_HEADER = ("m", "n", "unitary_index", "set_size", "successes", "trials", "estimate", "stderr", "converging")
BAND_HEADER = ("m", "n", "source", "set_size", "mean", "std", "lower", "upper", "unitaries")
NMIN_HEADER = ("m", "n", "unitary_index", "n_min", "reached")


def _flag(value) -> str:
    return "" if value is None else str(bool(value)).lower()


def curve_rows(curves: Iterable[SuccessCurve]) -> list[tuple]:
    rows = []
    for c in curves:
        for p in c.points:
            rows.append((c.m, c.n, c.unitary_index, p.set_size, p.successes, p.trials, _fmt(p.estimate), _fmt(p.stderr), _flag(c.converging)))
    return rows


def write_curves(curves: Iterable[SuccessCurve], path) -> None:
    _write_text(path, _csv_text(CURVE_HEADER, curve_rows(curves)))


def write_bands(results: Iterable[EnsembleResult], path) -> None:
    rows = []
    for result in results:
        cfg = result.config
        for label, band in (("indistinguishable", result.bs_band), ("uniform", result.uniform_band)):
            for p in band:
                rows.append((cfg.m, cfg.n, label, p.set_size, _fmt(p.mean), _fmt(p.std), _fmt(p.lower), _fmt(p.upper), p.count))
    _write_text(path, _csv_text(BAND_HEADER, rows))


def write_converging(results: Iterable[EnsembleResult], path) -> None:
    rows = [(r.config.m, r.config.n, len(r.bs_curves), r.converging_count, _fmt(r.converging_fraction)) for r in results]
    _write_text(path, _csv_text(("m", "n", "unitaries", "converging", "fraction"), rows))


def write_nmin_summary(results, path) -> None:
    rows = []
    for r in results:
        mean = r.mean_n_min
        rows.append((r.config.m, r.config.n, len(r.results), len(r.averaged()), "" if mean is None else _fmt(mean)))
    _write_text(path, _csv_text(("m", "n", "unitaries", "averaged", "mean_n_min"), rows))


def write_nmin(results: Iterable[NminResult], path) -> None:
    rows = [(r.m, r.n, r.unitary_index, "" if r.n_min is None else r.n_min, _flag(r.reached)) for r in results]
    _write_text(path, _csv_text(NMIN_HEADER, rows))


def read_csv_rows(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_manifest(path, command: str, params: dict, seed, artifacts: Sequence, started: datetime) -> None:
    manifest = {
        "command": command,
        "parameters": params,
        "master_seed": seed,
        "artifacts": [str(a) for a in artifacts],
        "version": __version__,
        "started": started.isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
    }
    _write_text(path, json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
