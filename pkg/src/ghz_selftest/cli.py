"""Command-line front end.

Every command writes its result to stdout (or ``--out``) and exits 0.  On
failure a one-line JSON diagnostic goes to stderr and the exit status is
2 (bad config), 3 (schema violation), 4 (dimension ceiling) or 5 (numeric
failure or invalid strategy).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from . import game, rigidity, strategy, tensor

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SCHEMA = 3
EXIT_DIMENSION = 4
EXIT_NUMERIC = 5

COMMANDS = ("ideal", "verify", "classical", "sweep", "extract", "simulate")


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, path: str | None = None):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.message = message
        self.path = path

    def diagnostic(self) -> str:
        out = {"code": self.code, "error": self.kind, "message": self.message}
        if self.path is not None:
            out["path"] = self.path
        return json.dumps(out, sort_keys=True)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_CONFIG, "config", message)


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    step: float

    @classmethod
    def parse(cls, text: str) -> "Grid":
        parts = text.split(":")
        if len(parts) == 1:
            parts = [parts[0], parts[0], "1"]
        if len(parts) != 3:
            raise CliError(EXIT_CONFIG, "config", f"grid must be start:stop:step, got {text!r}")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise CliError(EXIT_CONFIG, "config", f"grid values must be numbers, got {text!r}") from None
        if not all(math.isfinite(v) for v in (start, stop, step)):
            raise CliError(EXIT_CONFIG, "config", "grid values must be finite")
        if step <= 0:
            raise CliError(EXIT_CONFIG, "config", f"grid step must be > 0, got {step}")
        if stop < start:
            raise CliError(EXIT_CONFIG, "config", f"grid stop {stop} is below start {start}")
        return cls(start, stop, step)

    def values(self) -> list:
        """Inclusive grid; ``0:0.3:0.05`` gives seven points."""
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + k * self.step, 12) for k in range(count)]


@dataclass
class SweepRow:
    theta: float
    epsilon: float
    max_keyineq_residual: float
    max_anticommute_residual: float
    extraction_residual: float
    fidelity: float
    bound_ratio: float


def sweep_point(n: int, kind: str, theta: float, seed: int) -> SweepRow:
    s = strategy.perturb(strategy.ideal_strategy(n), strategy.NoiseSpec(kind, theta, seed))
    result = rigidity.extract(s)
    anti = max(rigidity.check_anticommute(s, i, w) for w in game.PLAYERS for i in range(1, n + 1))
    return SweepRow(
        theta=theta,
        epsilon=result.epsilon,
        max_keyineq_residual=rigidity.check_keyineqs(s)["max_residual"],
        max_anticommute_residual=anti,
        extraction_residual=result.residual,
        fidelity=result.fidelity,
        bound_ratio=result.bound_ratio,
    )


def _sweep_job(args):
    return sweep_point(*args)


def run_sweep(n: int, kind: str, thetas: list, seed: int = 0, jobs: int = 1) -> list:
    """Rows in grid order; points run in worker processes when ``jobs > 1``."""
    tasks = [(n, kind, t, seed) for t in thetas]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_job, tasks))
    return [sweep_point(*t) for t in tasks]


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    fields = list(SweepRow.__dataclass_fields__)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_fmt(getattr(row, f)) for f in fields])
    return buf.getvalue()


def _clean(obj):
    """Replace NaN/inf by None so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _load(path) -> strategy.Strategy:
    if path is None:
        raise CliError(EXIT_CONFIG, "config", "--strategy is required")
    p = Path(path)
    if not p.is_file():
        raise CliError(EXIT_CONFIG, "config", f"strategy file not found: {path}")
    return strategy.load(p)


def _strategy_arg(args) -> strategy.Strategy:
    if args.strategy is not None:
        s = _load(args.strategy)
    else:
        s = strategy.ideal_strategy(args.n)
    theta = getattr(args, "theta", 0.0) or 0.0
    if theta:
        s = strategy.perturb(s, strategy.NoiseSpec(args.kind, theta, args.seed))
    return s


def _wilson(wins: int, total: int, z: float = 1.959963984540054) -> tuple:
    p = wins / total
    denom = 1 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def cmd_ideal(args) -> str:
    return json.dumps(strategy.to_json(strategy.ideal_strategy(args.n)), sort_keys=True) + "\n"


def cmd_verify(args) -> str:
    s = _load(args.strategy)
    report = strategy.validate(s, args.tol)
    if not report.ok:
        raise CliError(
            EXIT_NUMERIC, "invalid-strategy",
            f"strategy fails validation ({len(report.violations)} violations), first: {report.violations[0]}",
        )
    eps = strategy.losing_total(s)
    out = {
        "n": s.n,
        "dims": list(s.dims),
        "valid": True,
        "winning_probability": 1.0 - eps,
        "winning_probability_text": f"{1.0 - eps:.9f}",
        "epsilon": eps,
        "relations": rigidity.relation_report(s),
    }
    return dump_json(out)


def cmd_classical(args) -> str:
    value = game.classical_value(args.n)
    return dump_json({"n": args.n, "classical_value": float(value), "exact": str(value)})


def cmd_sweep(args) -> str:
    grid = Grid.parse(args.noise)
    rows = run_sweep(args.n, args.kind, grid.values(), args.seed, args.jobs)
    if args.format == "csv":
        return rows_to_csv(rows)
    return dump_json([asdict(r) for r in rows])


def cmd_extract(args) -> str:
    s = _strategy_arg(args)
    return dump_json(rigidity.extract(s, args.method).to_json())


def cmd_simulate(args) -> str:
    s = _strategy_arg(args)
    if args.rounds < 1:
        raise CliError(EXIT_CONFIG, "config", "--rounds must be positive")
    freq = strategy.simulate(s, args.rounds, args.seed, args.shards)
    wins = round(freq * args.rounds)
    low, high = _wilson(wins, args.rounds)
    out = {
        "n": s.n,
        "rounds": args.rounds,
        "seed": args.seed,
        "wins": wins,
        "frequency": freq,
        "ci95": [low, high],
        "winning_probability": strategy.winning_probability(s),
    }
    return dump_json(out)


HANDLERS = {
    "ideal": cmd_ideal,
    "verify": cmd_verify,
    "classical": cmd_classical,
    "sweep": cmd_sweep,
    "extract": cmd_extract,
    "simulate": cmd_simulate,
}


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ghz-selftest", description="GHZ-game self-testing toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, n=True, out=True):
        if n:
            p.add_argument("--n", type=_positive_int, default=1, help="number of rounds")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=tensor.DEFAULT_TOL)
        if out:
            p.add_argument("--out", default=None, help="write to this file instead of stdout")

    def noisy(p):
        p.add_argument("--strategy", default=None, help="strategy file (default: the ideal strategy)")
        p.add_argument("--kind", choices=strategy.NOISE_KINDS, default="rotation")
        p.add_argument("--theta", type=float, default=0.0, help="noise strength applied before running")

    common(sub.add_parser("ideal", help="write the ideal strategy file"))
    p = sub.add_parser("verify", help="validate and score a strategy file")
    common(p, n=False)
    p.add_argument("--strategy", required=True)
    common(sub.add_parser("classical", help="exact classical value by exhaustive search"))
    p = sub.add_parser("sweep", help="noise sweep over the ideal strategy")
    common(p)
    p.add_argument("--noise", default="0:0.3:0.05", help="start:stop:step, inclusive")
    p.add_argument("--kind", choices=strategy.NOISE_KINDS, default="rotation")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p = sub.add_parser("extract", help="extract the GHZ-basis weights")
    common(p)
    noisy(p)
    p.add_argument("--method", choices=("auto", "dense", "reduced"), default="auto")
    p = sub.add_parser("simulate", help="Monte Carlo play of the game")
    common(p)
    noisy(p)
    p.add_argument("--rounds", type=_positive_int, default=100000)
    p.add_argument("--shards", type=_positive_int, default=1)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "tol", 1.0) <= 0:
            raise CliError(EXIT_CONFIG, "config", "--tol must be positive")
        text = HANDLERS[args.command](args)
        if args.out:
            Path(args.out).write_text(text)
        else:
            stdout.write(text)
        return EXIT_OK
    except CliError as exc:
        err = exc
    except strategy.StrategyFormatError as exc:
        err = CliError(EXIT_SCHEMA, "schema", exc.message, exc.path)
    except tensor.DimensionError as exc:
        err = CliError(EXIT_DIMENSION, "dimension", str(exc))
    except (tensor.NumericalError, rigidity.InvalidStrategyError, FloatingPointError) as exc:
        err = CliError(EXIT_NUMERIC, "numeric", str(exc))
    except (ValueError, OSError) as exc:
        err = CliError(EXIT_CONFIG, "config", str(exc))
    stderr.write(err.diagnostic() + "\n")
    return err.code


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
