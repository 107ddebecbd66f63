"""Command-line entry point.

Exit status
-----------
====  ==========================================================
0     success; for ``validate``, the first hypothesis won
      (boson-sampler for ``aa``, indistinguishable for ``lr``)
10    ``validate``: the alternative won (uniform / distinguishable)
11    ``validate``: inconclusive (``lr`` with D = 0)
1     invalid data, failed validation on load, runtime error
2     bad command-line usage or configuration
====  ==========================================================
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import io
from .distributions import ModeConfig, Source, build_distribution, sample_events, uniform_distribution
from .errors import BosonValError, ConfigError
from .experiments import (
    ExperimentConfig,
    haar_ensemble_curve,
    lr_ensemble,
    lr_success_curve,
    nmin_search,
    success_curve,
)
from .interferometer import compose, haar_unitary, random_phase_network, reck_decompose
from .validators import Verdict, aa_report, lr_verdict

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_ALTERNATIVE = 10
EXIT_INCONCLUSIVE = 11

_VERDICT_EXIT = {
    Verdict.BOSON_SAMPLER: EXIT_OK,
    Verdict.INDISTINGUISHABLE: EXIT_OK,
    Verdict.UNIFORM: EXIT_ALTERNATIVE,
    Verdict.DISTINGUISHABLE: EXIT_ALTERNATIVE,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}

log = logging.getLogger("bosonval")


def parse_input(text: str, m: int) -> ModeConfig:
    """Parse ``--input``.

    ``|0,1,1,1,0>`` (a ket of 0/1 occupations, the closing ``>`` optional) is
    an occupation string of length m; anything else is a list of 0-based mode
    indices separated by commas or spaces, e.g. ``1,2,3``.
    """
    text = text.strip()
    if text.startswith("|"):
        body = text[1:].rstrip(">")
        config = ModeConfig.from_occupation([int(x) for x in body.replace(" ", "").split(",") if x])
        if config.m != m:
            raise ConfigError("input", f"occupation string has {config.m} modes, interferometer has {m}")
        return config
    try:
        modes = [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError("input", f"cannot parse {text!r} as a mode list") from None
    try:
        return ModeConfig.of(modes, m)
    except ValueError as exc:
        raise ConfigError("input", str(exc)) from None


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _params(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


# -- commands -----------------------------------------------------------------


def cmd_gen_unitary(args) -> int:
    started = datetime.now(timezone.utc)
    out = Path(args.out)
    artifacts = [out]
    circuit_out = Path(args.circuit_out) if args.circuit_out else out.with_name(out.stem + ".circuit.json")
    if args.kind == "haar":
        if args.modes is None:
            raise ConfigError("modes", "required for --kind haar")
        u = haar_unitary(args.modes, args.seed)
        circuit = None
    elif args.kind == "random-phases":
        if args.modes is None:
            raise ConfigError("modes", "required for --kind random-phases")
        if args.layers is None or args.layers < 1:
            raise ConfigError("layers", "--layers >= 1 is required for --kind random-phases")
        circuit = random_phase_network(args.modes, args.layers, args.seed)
        u = compose(circuit, provenance=f"circuit(random-phases, layers={args.layers}, seed={args.seed})")
    else:
        if not args.source_file:
            raise ConfigError("from", "--from <unitary file> is required for --kind reck-of")
        original = io.load_unitary(args.source_file)
        circuit = reck_decompose(original)
        u = compose(circuit, provenance=f"circuit(reck-of {args.source_file})")
        err = float(np.max(np.abs(u.matrix - original.matrix)))
        print(f"reconstruction error: {err:.3e}")
    io.save_unitary(u, out)
    if circuit is not None:
        io.save_circuit(circuit, circuit_out)
        artifacts.append(circuit_out)
    print(f"unitarity residual: {u.residual():.3e}")
    io.write_manifest(_manifest_path(out), "gen-unitary", _params(args), args.seed, artifacts, started)
    return EXIT_OK


def cmd_sample(args) -> int:
    started = datetime.now(timezone.utc)
    u = io.load_unitary(args.unitary)
    s = parse_input(args.input, u.modes)
    source = Source(args.source)
    if args.events < 1:
        raise ConfigError("events", "must be >= 1")
    if source is Source.UNIFORM:
        d = uniform_distribution(u.modes, s.n, s)
    else:
        d = build_distribution(u, s, source)
    log_ = sample_events(d, args.events, args.seed, unitary_ref=str(args.unitary))
    out = Path(args.out)
    io.write_event_log(log_, out)
    artifacts = [out]
    if args.distribution_out:
        io.write_distribution(d, args.distribution_out)
        artifacts.append(Path(args.distribution_out))
    io.write_manifest(_manifest_path(out), "sample", _params(args), args.seed, artifacts, started)
    return EXIT_OK


def cmd_validate(args) -> int:
    started = datetime.now(timezone.utc)
    u = io.load_unitary(args.unitary)
    s = parse_input(args.input, u.modes)
    events = io.read_event_log(args.events_file, s, unitary_ref=str(args.unitary))
    if len(events) == 0:
        raise ConfigError("events-file", "event log is empty")
    if args.test == "aa":
        report = aa_report(u, s, events)
    else:
        p = build_distribution(u, s, Source.INDISTINGUISHABLE)
        q = build_distribution(u, s, Source.DISTINGUISHABLE)
        if args.alternative == "indistinguishable":
            q = p
        report = lr_verdict(u, s, events, p, q, args.k1, args.k2)
    out = Path(args.out)
    io.write_report(report, out)
    io.write_manifest(_manifest_path(out), "validate", _params(args), None, [out], started)
    print(f"{report.test}: {report.verdict} (final {'C' if report.test == 'aa' else 'D'} = {report.final}, {len(events)} events)")
    return _VERDICT_EXIT[report.verdict]


_EXTRA_KEYS = ("source", "unitary_file")


def _load_experiment_configs(args) -> tuple[list[ExperimentConfig], dict]:
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"not valid JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", "must be a JSON object")
    overrides = {
        "trials_per_point": args.trials,
        "set_sizes": args.set_sizes,
        "unitary_count": args.unitaries,
        "exclusion_cap": args.exclusion_cap,
        "master_seed": args.seed,
        "n": args.photons,
        "m": args.modes,
    }
    raw.update({k: v for k, v in overrides.items() if v is not None})
    extras = {k: raw.pop(k) for k in _EXTRA_KEYS if k in raw}
    ms = raw.get("m")
    ms = ms if isinstance(ms, list) else [ms]
    configs = [ExperimentConfig.from_dict({**raw, "m": m}) for m in ms]
    return configs, extras


def cmd_experiment(args) -> int:
    started = datetime.now(timezone.utc)
    configs, extras = _load_experiment_configs(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts: list[Path] = []

    def unitary_for(cfg):
        if "unitary_file" in extras:
            u = io.load_unitary(extras["unitary_file"])
            if u.modes != cfg.m:
                raise ConfigError("unitary_file", f"has {u.modes} modes, config has m={cfg.m}")
            return u
        return cfg.unitary(0)

    if args.kind == "success-curve":
        source = Source(extras.get("source", "indistinguishable"))
        curves = [success_curve(unitary_for(cfg), cfg.input, source, cfg) for cfg in configs]
        path = out_dir / f"curve_{source}.csv"
        io.write_curves(curves, path)
        artifacts.append(path)
    elif args.kind == "haar-average":
        results = [haar_ensemble_curve(cfg, workers=args.workers) for cfg in configs]
        for name, curves in (
            ("curves_indistinguishable.csv", [c for r in results for c in r.bs_curves]),
            ("curves_uniform.csv", [c for r in results for c in r.uniform_curves]),
        ):
            io.write_curves(curves, out_dir / name)
            artifacts.append(out_dir / name)
        io.write_bands(results, out_dir / "band.csv")
        io.write_converging(results, out_dir / "converging.csv")
        artifacts += [out_dir / "band.csv", out_dir / "converging.csv"]
        for r in results:
            print(f"m={r.config.m} n={r.config.n}: {r.converging_count}/{len(r.bs_curves)} unitaries converge")
    elif args.kind == "nmin":
        results = [nmin_search(cfg, workers=args.workers) for cfg in configs]
        io.write_nmin([x for r in results for x in r.results], out_dir / "nmin.csv")
        io.write_nmin_summary(results, out_dir / "nmin_summary.csv")
        for r in results:
            print(f"m={r.config.m} n={r.config.n}: mean N_min = {r.mean_n_min}")
        artifacts += [out_dir / "nmin.csv", out_dir / "nmin_summary.csv"]
    else:
        pairs = []
        for cfg in configs:
            if "unitary_file" in extras:
                pairs.append(lr_success_curve(unitary_for(cfg), cfg.input, cfg))
            else:
                pairs.extend(lr_ensemble(cfg, workers=args.workers))
        io.write_curves([p[0] for p in pairs], out_dir / "lr_indistinguishable.csv")
        io.write_curves([p[1] for p in pairs], out_dir / "lr_distinguishable.csv")
        artifacts += [out_dir / "lr_indistinguishable.csv", out_dir / "lr_distinguishable.csv"]
    params = {"subcommand": args.kind, "configs": [c.to_dict() for c in configs], **extras}
    io.write_manifest(out_dir / "manifest.json", "experiment", params, [c.master_seed for c in configs], artifacts, started)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _set_sizes(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bosonval", description="Boson-sampling simulation and validation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-unitary", help="write a Haar, random-phase or Reck-rebuilt unitary")
    g.add_argument("--modes", type=int)
    g.add_argument("--kind", choices=("haar", "random-phases", "reck-of"), required=True)
    g.add_argument("--layers", type=int)
    g.add_argument("--from", dest="source_file", help="unitary file to decompose (reck-of)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--circuit-out", help="circuit file path (default: <out stem>.circuit.json)")
    g.set_defaults(func=cmd_gen_unitary)

    s = sub.add_parser("sample", help="sample an event log")
    s.add_argument("--unitary", required=True)
    s.add_argument("--input", required=True, help="mode list '1,2,3' or occupation '|0,1,1,1,0>'")
    s.add_argument("--source", choices=("indistinguishable", "distinguishable", "uniform"), required=True)
    s.add_argument("--events", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--distribution-out", help="also write the exact distribution CSV")
    s.set_defaults(func=cmd_sample)

    v = sub.add_parser("validate", help="run the row-norm (aa) or likelihood-ratio (lr) test on a log")
    v.add_argument("--test", choices=("aa", "lr"), required=True)
    v.add_argument("--unitary", required=True)
    v.add_argument("--input", required=True)
    v.add_argument("--events-file", required=True)
    v.add_argument("--k1", type=float, default=0.9)
    v.add_argument("--k2", type=float, default=1.5)
    v.add_argument(
        "--alternative",
        choices=("distinguishable", "indistinguishable"),
        default="distinguishable",
        help="model compared against the indistinguishable one in the lr test",
    )
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("experiment", help="Monte-Carlo success-rate experiments")
    e.add_argument("kind", choices=("success-curve", "haar-average", "nmin", "lr-curve"))
    e.add_argument("--config", required=True, help="JSON experiment configuration")
    e.add_argument("--photons", type=int)
    e.add_argument("--modes", type=int)
    e.add_argument("--trials", type=int)
    e.add_argument("--set-sizes", type=_set_sizes)
    e.add_argument("--unitaries", type=int)
    e.add_argument("--exclusion-cap", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--workers", type=int, help="worker threads (default: $BOSONVAL_THREADS or 1)")
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BosonValError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
