"""Experiment runner CLI.

Subcommands compute variance-factor tables, Monte Carlo variance sweeps,
recursive-learning runs and sweeps, and walk-constant estimates, writing
CSV results plus a meta.json describing the resolved configuration.  Flags
mirror config-file keys one to one; a config file supplies defaults and
explicit flags win.  Grid cells seed their streams by content, so results
are independent of execution order and of --jobs.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import ConfigurationError, SchemaError, read_csv, write_csv, write_json
from .learners import LEARNER_REGISTRY, make_learner
from .lockstep import run_lockstep
from .mean_estimation import (
    AnchorWeights,
    ContaminationConfig,
    SimpleWeights,
    UniformWeights,
    monte_carlo_variance,
)
from .pac_env import hard_instance, run_recursive
from .variance import (
    anchored_factor_closed,
    uniform_factor_closed,
    variance_sandwich,
)
from .walks import estimate_stall_constant

SCHEMAS: dict[str, list[tuple[str, str]]] = {
    "mean_oracle": [
        ("alpha", "float"),
        ("t", "int"),
        ("factor_uniform", "float"),
        ("factor_hat", "float"),
        ("bound_lo", "float"),
        ("bound_hi", "float"),
    ],
    "mean_mc": [
        ("alpha", "float"),
        ("scheme", "str"),
        ("t", "int"),
        ("trace_var", "float"),
        ("stderr", "float"),
        ("replicates", "int"),
        ("seed", "int"),
    ],
    "walk": [
        ("alpha", "float"),
        ("truncation", "int"),
        ("replicates", "int"),
        ("estimate", "float"),
        ("ci_halfwidth", "float"),
    ],
    "pac": [
        ("learner", "str"),
        ("alpha", "float"),
        ("n", "int"),
        ("t", "int"),
        ("loss", "float"),
        ("replicate", "int"),
        ("seed", "int"),
    ],
}

_SCHEME_BUILDERS = {
    "uniform": lambda alpha: UniformWeights(),
    "simple": lambda alpha: SimpleWeights(),
    "anchored": lambda alpha: AnchorWeights(alpha),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """Resolved run description; round-trips through meta.json."""

    command: str
    seed: int
    grid: dict

    def to_meta(self, elapsed_seconds: float, started_at: str) -> dict:
        return {
            "command": self.command,
            "grid": dict(sorted(self.grid.items())),
            "seed": self.seed,
            "version": __version__,
            "started_at": started_at,
            "elapsed_seconds": elapsed_seconds,
        }

    @classmethod
    def from_meta(cls, meta: dict) -> "ExperimentSpec":
        return cls(command=meta["command"], seed=int(meta["seed"]), grid=dict(meta["grid"]))


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _parse_strs(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip() != ""]


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse a line-oriented ``key = value`` config file; # starts a comment."""
    out: dict[str, str] = {}
    for i, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{i}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config_defaults(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Fill unset flags from --config; flags given on the command line win."""
    if not getattr(args, "config", None):
        return
    file_values = read_config_file(args.config)
    known = set(vars(args))
    for key, value in file_values.items():
        if key in ("config",):
            continue
        if key not in known:
            raise ConfigurationError(f"config key {key!r} does not match any flag")
        if key in args._explicit:  # type: ignore[attr-defined]
            continue
        setattr(args, key, value)


class _TrackingParser(argparse.ArgumentParser):
    """Records which destinations were set explicitly on the command line."""

    def parse_args(self, argv=None, namespace=None):  # type: ignore[override]
        ns = super().parse_args(argv, namespace)
        argv = list(sys.argv[1:] if argv is None else argv)
        ns._explicit = {
            tok[2:].split("=", 1)[0].replace("-", "_")
            for tok in argv
            if tok.startswith("--")
        }
        return ns


def build_parser() -> argparse.ArgumentParser:
    parser = _TrackingParser(prog="contamlab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key = value file supplying defaults")
        p.add_argument("--outdir", default="results", help="output directory")
        p.add_argument("--seed", default="20240801", help="master seed")
        p.add_argument("--jobs", default="1", help="parallel workers over grid cells")
        p.add_argument(
            "--validate",
            action="store_true",
            help="re-read outputs and check them against their schemas",
        )

    p = sub.add_parser("mean-oracle", help="closed-form variance factor table")
    common(p)
    p.add_argument("--alphas", default="0,0.25,0.5,0.75,1")
    p.add_argument("--t-max", default="200")

    p = sub.add_parser("mean-mc", help="Monte Carlo variance of pooled estimates")
    common(p)
    p.add_argument("--alphas", default="0,0.5,1")
    p.add_argument("--schemes", default="uniform,anchored")
    p.add_argument("--horizon", default="50")
    p.add_argument("--replicates", default="20000")
    p.add_argument("--dimension", default="1")

    p = sub.add_parser("walk", help="survival-constant estimates for biased walks")
    common(p)
    p.add_argument("--alphas", default="0.55,0.75,0.95")
    p.add_argument("--truncation", default="100000")
    p.add_argument("--replicates", default="100000")

    p = sub.add_parser("pac-run", help="one recursive-learning configuration")
    common(p)
    p.add_argument("--learner", default="erm_maxmargin")
    p.add_argument("--alpha", default="0.8")
    p.add_argument("--n", default="10")
    p.add_argument("--horizon", default="200")
    p.add_argument("--replicates", default="100")
    p.add_argument("--record-every", default="1")
    p.add_argument("--engine", default="lockstep", choices=("lockstep", "reference"))

    p = sub.add_parser("pac-sweep", help="grid of recursive-learning runs")
    common(p)
    p.add_argument("--learners", default="erm_maxmargin,uniform_mixing,epoch_pu")
    p.add_argument("--alphas", default="0.6,0.8")
    p.add_argument("--n", default="10")
    p.add_argument("--horizon", default="200")
    p.add_argument("--replicates", default="100")
    p.add_argument("--record-every", default="1")
    p.add_argument("--engine", default="lockstep", choices=("lockstep", "reference"))

    p = sub.add_parser("validate", help="check an existing CSV against a schema")
    p.add_argument("path")
    p.add_argument("--schema", required=True, choices=sorted(SCHEMAS))
    return parser


# ---------------------------------------------------------------------------
# Cells
# ---------------------------------------------------------------------------


def _mean_mc_cell(payload: tuple) -> list[tuple]:
    alpha, scheme_name, horizon, replicates, dimension, seed = payload
    config = ContaminationConfig(
        alpha=alpha, mu=np.zeros(dimension), sigma=np.eye(dimension), horizon=horizon
    )
    scheme = _SCHEME_BUILDERS[scheme_name](alpha)
    result = monte_carlo_variance(config, scheme, replicates, seed)
    return [
        (alpha, scheme_name, int(t), float(v), float(se), replicates, seed)
        for t, v, se in zip(result.ts, result.trace_var, result.stderr)
    ]


def _walk_cell(payload: tuple) -> list[tuple]:
    alpha, truncation, replicates, seed = payload
    est = estimate_stall_constant(alpha, truncation, replicates, seed)
    return [(alpha, truncation, replicates, est.estimate, est.ci_halfwidth)]


def _pac_cell(payload: tuple) -> list[tuple]:
    learner, alpha, n, horizon, replicates, record_every, engine, seed = payload
    record_ts = np.arange(0, horizon + 1, record_every)
    if record_ts[-1] != horizon:
        record_ts = np.append(record_ts, horizon)
    rows: list[tuple] = []
    if engine == "lockstep":
        result = run_lockstep(
            *hard_instance(n),
            alpha=alpha,
            n=n,
            horizon=horizon,
            learner_name=learner,
            replicates=replicates,
            seed=seed,
            record_ts=record_ts,
        )
        for r in range(replicates):
            for j, t in enumerate(result.ts):
                rows.append((learner, alpha, n, int(t), float(result.losses[r, j]), r, seed))
    else:
        from .core import substream

        dist, target = hard_instance(n)
        wanted = set(int(t) for t in record_ts)
        for r in range(replicates):
            rng = substream(seed, "pac-reference", learner, alpha, n, horizon, r)
            records = run_recursive(
                dist, target, alpha, n, horizon, make_learner(learner, alpha, n), rng, replicate=r
            )
            rows.extend(
                (learner, alpha, n, rec.t, rec.loss, r, seed)
                for rec in records
                if rec.t in wanted
            )
    return rows


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------


def _run_cells(cells: list[tuple], worker, jobs: int) -> list[list[tuple]]:
    if jobs <= 1 or len(cells) <= 1:
        return [worker(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, cells))


def _write_outputs(
    outdir: Path,
    spec: ExperimentSpec,
    csv_name: str,
    schema_name: str,
    rows: list[tuple],
    started_at: str,
    t0: float,
    validate: bool,
) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        csv_path = outdir / csv_name
        write_csv(csv_path, [name for name, _ in SCHEMAS[schema_name]], rows)
        written.append(csv_path)
        meta_path = outdir / "meta.json"
        write_json(meta_path, spec.to_meta(time.monotonic() - t0, started_at))
        written.append(meta_path)
        if validate:
            read_csv(csv_path, SCHEMAS[schema_name])
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return written


def _cmd_mean_oracle(args) -> int:
    alphas = _parse_floats(args.alphas)
    t_max = int(args.t_max)
    seed = int(args.seed)
    rows = []
    for alpha in alphas:
        for t in range(1, t_max + 1):
            if 0.0 < alpha < 1.0 and t >= 3:
                lo, hi = variance_sandwich(alpha, t)
            else:
                lo, hi = float("nan"), float("nan")
            rows.append(
                (
                    alpha,
                    t,
                    uniform_factor_closed(alpha, t),
                    anchored_factor_closed(alpha, t),
                    lo,
                    hi,
                )
            )
    spec = ExperimentSpec(
        command="mean-oracle",
        seed=seed,
        grid={"alphas": alphas, "t_max": t_max, "outdir": str(args.outdir)},
    )
    _write_outputs(
        Path(args.outdir),
        spec,
        "mean_oracle.csv",
        "mean_oracle",
        rows,
        args._started_at,
        args._t0,
        args.validate,
    )
    return 0


def _cmd_mean_mc(args) -> int:
    alphas = _parse_floats(args.alphas)
    schemes = _parse_strs(args.schemes)
    for s in schemes:
        if s not in _SCHEME_BUILDERS:
            raise ConfigurationError(f"unknown scheme {s!r}; known: {sorted(_SCHEME_BUILDERS)}")
    horizon = int(args.horizon)
    replicates = int(args.replicates)
    dimension = int(args.dimension)
    seed = int(args.seed)
    cells = [
        (alpha, scheme, horizon, replicates, dimension, seed)
        for alpha in alphas
        for scheme in schemes
    ]
    results = _run_cells(cells, _mean_mc_cell, int(args.jobs))
    rows = [row for cell_rows in results for row in cell_rows]
    spec = ExperimentSpec(
        command="mean-mc",
        seed=seed,
        grid={
            "alphas": alphas,
            "schemes": schemes,
            "horizon": horizon,
            "replicates": replicates,
            "dimension": dimension,
            "outdir": str(args.outdir),
        },
    )
    _write_outputs(
        Path(args.outdir),
        spec,
        "mean_mc.csv",
        "mean_mc",
        rows,
        args._started_at,
        args._t0,
        args.validate,
    )
    return 0


def _cmd_walk(args) -> int:
    alphas = _parse_floats(args.alphas)
    truncation = int(args.truncation)
    replicates = int(args.replicates)
    seed = int(args.seed)
    cells = [(alpha, truncation, replicates, seed) for alpha in alphas]
    results = _run_cells(cells, _walk_cell, int(args.jobs))
    rows = [row for cell_rows in results for row in cell_rows]
    spec = ExperimentSpec(
        command="walk",
        seed=seed,
        grid={
            "alphas": alphas,
            "truncation": truncation,
            "replicates": replicates,
            "outdir": str(args.outdir),
        },
    )
    _write_outputs(
        Path(args.outdir),
        spec,
        "walk.csv",
        "walk",
        rows,
        args._started_at,
        args._t0,
        args.validate,
    )
    return 0


def _pac_common(args, learners: list[str], alphas: list[float], command: str) -> int:
    for name in learners:
        if name not in LEARNER_REGISTRY:
            raise ConfigurationError(
                f"unknown learner {name!r}; known: {sorted(LEARNER_REGISTRY)}"
            )
    n = int(args.n)
    horizon = int(args.horizon)
    replicates = int(args.replicates)
    record_every = int(args.record_every)
    if record_every < 1:
        raise ConfigurationError(f"record-every must be >= 1, got {record_every}")
    seed = int(args.seed)
    cells = [
        (learner, alpha, n, horizon, replicates, record_every, args.engine, seed)
        for learner in learners
        for alpha in alphas
    ]
    results = _run_cells(cells, _pac_cell, int(args.jobs))
    rows = [row for cell_rows in results for row in cell_rows]
    spec = ExperimentSpec(
        command=command,
        seed=seed,
        grid={
            "learners": learners,
            "alphas": alphas,
            "n": n,
            "horizon": horizon,
            "replicates": replicates,
            "record_every": record_every,
            "engine": args.engine,
            "outdir": str(args.outdir),
        },
    )
    _write_outputs(
        Path(args.outdir),
        spec,
        "pac.csv",
        "pac",
        rows,
        args._started_at,
        args._t0,
        args.validate,
    )
    return 0


def _cmd_validate(args) -> int:
    read_csv(args.path, SCHEMAS[args.schema])
    print(f"{args.path}: valid {args.schema} file")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._started_at = datetime.now(timezone.utc).isoformat()
    args._t0 = time.monotonic()
    try:
        if args.command != "validate":
            _apply_config_defaults(args, parser)
        if args.command == "mean-oracle":
            return _cmd_mean_oracle(args)
        if args.command == "mean-mc":
            return _cmd_mean_mc(args)
        if args.command == "walk":
            return _cmd_walk(args)
        if args.command == "pac-run":
            return _pac_common(args, [args.learner], [float(args.alpha)], "pac-run")
        if args.command == "pac-sweep":
            return _pac_common(args, _parse_strs(args.learners), _parse_floats(args.alphas), "pac-sweep")
        if args.command == "validate":
            return _cmd_validate(args)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except (ConfigurationError, SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
