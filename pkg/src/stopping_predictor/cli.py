"""Command-line harness: simulate, estimate, compare-oracle, sweep.

Settings come from flags, optionally layered over a ``key=value`` file
given with ``--config`` (flags win).  Exit codes: 0 success, 1 invalid
input, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import math
import statistics
import sys
from pathlib import Path

from . import __version__
from .core import EstimatorParams, ParameterError, Schedule
from .experiments import (ExperimentConfig, replication_seed, run_replication,
                          run_replications, summarize, trace_header, trace_rows)
from .processes import Oracle, ProcessSpec, SpecError, generate

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

PROCESS_KEYS = ("process", "probs", "order", "kernel", "hidden", "emission", "p")
SUMMARY_COLUMNS = ["replication", "seed", "events", "zetas", "kappa_terminal",
                   "kappa_decile_min", "kappa_decile_max", "memory", "ratio_terminal",
                   "ratio_expected", "settle_event", "settle_time", "error_decile_mean",
                   "error_decile_max"]


class InvalidInput(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# -- config assembly ------------------------------------------------------------

def read_config_file(path: str) -> dict:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise InvalidInput(f"{path}:{lineno}: expected key=value")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def read_matrix_file(path: str) -> str:
    """Rows of numbers (comma or space separated) as ``a,b;c,d``."""
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].replace(",", " ").split()
        if line:
            rows.append(",".join(line))
    if not rows:
        raise InvalidInput(f"{path}: no matrix rows")
    return ";".join(rows)


def _settings(args) -> dict:
    s = read_config_file(args.config) if getattr(args, "config", None) else {}
    for key, val in vars(args).items():
        if key in ("config", "command", "func") or val is None:
            continue
        s[key] = val
    if "kernel_file" in s:
        s["kernel"] = read_matrix_file(s.pop("kernel_file"))
    if "hidden_file" in s:
        s["hidden"] = read_matrix_file(s.pop("hidden_file"))
    if "emission_file" in s:
        s["emission"] = read_matrix_file(s.pop("emission_file"))
    return s


def process_from_settings(s: dict) -> ProcessSpec | None:
    if "process" not in s:
        return None
    kv = {"kind": s["process"]}
    for key in PROCESS_KEYS[1:]:
        if key in s:
            kv[key] = str(s[key])
    return ProcessSpec.from_mapping(kv)


def params_from_settings(s: dict, beta=None, gamma=None, schedule=None) -> EstimatorParams:
    return EstimatorParams(
        beta=float(beta if beta is not None else s.get("beta", 0.3)),
        gamma=float(gamma if gamma is not None else s.get("gamma", 0.3)),
        schedule=Schedule.parse(str(schedule if schedule is not None
                                    else s.get("schedule", "identity"))),
    ).validate()


def config_from_settings(s: dict, need_process: bool = True, spec=None,
                         **over) -> ExperimentConfig:
    spec = spec if spec is not None else process_from_settings(s)
    if need_process and spec is None:
        raise InvalidInput("--process is required")
    return ExperimentConfig(process=spec, params=params_from_settings(s, **over),
                            horizon=int(s.get("horizon", 1000)),
                            replications=int(s.get("replications", 1)),
                            seed=int(s.get("seed", 0)))


def header_lines(cfg: ExperimentConfig, estimator: bool = True, **extra) -> list[str]:
    lines = [f"# tool=stopping-predictor {__version__}"]
    if cfg.process is not None:
        lines.append(f"# process={cfg.process.to_line()}")
    if estimator:
        lines += [f"# beta={cfg.params.beta!r}", f"# gamma={cfg.params.gamma!r}",
                  f"# schedule={cfg.params.schedule.describe()}",
                  f"# replications={cfg.replications}"]
    lines += [f"# horizon={cfg.horizon}", f"# seed={cfg.seed}",
              "# replication_seed=first word of numpy SeedSequence([seed, replication])"]
    lines += [f"# {k}={v}" for k, v in extra.items()]
    return lines


# -- path files -----------------------------------------------------------------

def write_path_file(out, header: list[str], symbols) -> None:
    text = "\n".join(header) + "\n" + "".join(f"{int(v)}\n" for v in symbols)
    _emit(out, text)


def read_path_file(path: str) -> tuple[dict, list[int]]:
    meta, symbols = {}, []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, val = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = val.strip()
            continue
        try:
            v = int(line)
        except ValueError:
            raise InvalidInput(f"{path}:{lineno}: not an integer symbol: {line!r}")
        if v < 0:
            raise InvalidInput(f"{path}:{lineno}: symbols must be nonnegative")
        symbols.append(v)
    if not symbols:
        raise InvalidInput(f"{path}: no symbols")
    return meta, symbols


def _emit(out, text: str) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv(header: list[str], columns: list[str], rows) -> str:
    buf = io.StringIO()
    buf.write("\n".join(header) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


# -- commands -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    s = _settings(args)
    cfg = config_from_settings(s)
    r = int(s.get("replication", 0))
    seed = replication_seed(cfg.seed, r)
    path = generate(cfg.process.with_seed(seed), cfg.horizon)
    write_path_file(s.get("out"), header_lines(cfg, estimator=False, replication=r, path_seed=seed), path)
    return EXIT_OK


def cmd_estimate(args) -> int:
    s = _settings(args)
    reps = []
    if s.get("path_file"):
        meta, symbols = read_path_file(s["path_file"])
        # settings recorded in the file apply unless overridden
        for key in ("beta", "gamma", "schedule", "seed"):
            if key in meta and key not in s:
                s[key] = meta[key]
        spec = None
        if "process" in meta and "process" not in s:
            spec = ProcessSpec.from_text(meta["process"])
        s["horizon"] = len(symbols)
        s["replications"] = 1
        cfg = config_from_settings(s, need_process=False, spec=spec)
        r = int(meta.get("replication", 0))
        reps.append(run_replication(cfg, r, path=symbols))
        extra = {"path_file": Path(s["path_file"]).name, "replication": r}
        if "path_seed" in meta:
            extra["path_seed"] = meta["path_seed"]
    else:
        cfg = config_from_settings(s)
        reps = run_replications(cfg, workers=int(s.get("workers", 1)))
        extra = {}
    stride = int(s.get("stride", 1))
    if stride > 1:
        extra["stride"] = stride
    columns = trace_header(reps[0])
    rows = itertools.chain.from_iterable(trace_rows(rep, stride) for rep in reps)
    _emit(s.get("out"), _csv(header_lines(cfg, **extra), columns, rows))
    return EXIT_OK


def _summary_row(summary: dict) -> list:
    row = []
    for c in SUMMARY_COLUMNS:
        v = summary.get(c)
        if isinstance(v, float) and math.isinf(v):
            v = "inf"
        row.append(v)
    return row


def cmd_compare_oracle(args) -> int:
    s = _settings(args)
    cfg = config_from_settings(s)
    oracle = Oracle(cfg.process)
    reps = run_replications(cfg, workers=int(s.get("workers", 1)))
    summaries = [summarize(rep, oracle) for rep in reps]
    text = _csv(header_lines(cfg), SUMMARY_COLUMNS, (_summary_row(x) for x in summaries))
    _emit(s.get("out"), text)
    if s.get("out") not in (None, "-"):
        for x in summaries:
            print(_describe(cfg.process.kind, x))
    return EXIT_OK


def _describe(kind: str, x: dict) -> str:
    parts = [f"replication {x['replication']}: {x['events']} events"]
    if "error_decile_mean" in x:
        parts.append(f"final-decile error mean {x['error_decile_mean']:.4f}")
    if kind == "hidden_markov":
        return ", ".join(parts)
    parts.append(f"kappa {x.get('kappa_terminal')}")
    if x.get("ratio_expected"):
        parts.append(f"lambda/n {x['ratio_terminal']:.4f} vs {x['ratio_expected']:.4f}")
    if kind in ("iid", "countable_iid"):
        parts.append(f"increments all 1 after event {x['settle_event']}")
    return ", ".join(parts)


def _floats(text) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def cmd_sweep(args) -> int:
    s = _settings(args)
    betas = _floats(s.get("betas", s.get("beta", 0.3)))
    gammas = _floats(s.get("gammas", s.get("gamma", 0.3)))
    schedules = [v for v in str(s.get("schedules", s.get("schedule", "identity"))).split(";")
                 if v.strip()]
    grid = list(itertools.product(betas, gammas, schedules))
    configs = []
    for b, g, sch in grid:  # reject the whole grid before running anything
        try:
            configs.append(((b, g, sch), config_from_settings(s, beta=b, gamma=g, schedule=sch)))
        except (ParameterError, ValueError) as e:
            raise InvalidInput(f"grid point beta={b}, gamma={g}, schedule={sch}: {e}")
    oracle = Oracle(configs[0][1].process)
    rows, medians = [], []
    for (b, g, sch), cfg in configs:
        sums = [summarize(rep, oracle) for rep in
                run_replications(cfg, workers=int(s.get("workers", 1)))]
        for x in sums:
            rows.append([b, g, cfg.params.schedule.describe()] + _summary_row(x))
        errs = [x["error_decile_mean"] for x in sums if "error_decile_mean" in x]
        ratios = [x["ratio_terminal"] for x in sums if "ratio_terminal" in x]
        medians.append([b, g, cfg.params.schedule.describe(),
                        statistics.median(errs) if errs else None,
                        statistics.median(ratios) if ratios else None])
    cfg0 = configs[0][1]
    head = header_lines(cfg0, betas=",".join(map(repr, betas)),
                        gammas=",".join(map(repr, gammas)), schedules=";".join(schedules))
    _emit(s.get("out"), _csv(head, ["beta", "gamma", "schedule"] + SUMMARY_COLUMNS, rows))
    if s.get("aggregate_out"):
        _emit(s["aggregate_out"], _csv(head, ["beta", "gamma", "schedule",
                                              "median_error_decile_mean",
                                              "median_ratio_terminal"], medians))
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, estimator: bool = True) -> None:
    p.add_argument("--config", help="key=value file; flags override its entries")
    p.add_argument("--process", choices=["iid", "markov", "hidden_markov", "countable_iid"])
    p.add_argument("--probs", help="iid probabilities, comma separated")
    p.add_argument("--order", type=int, help="Markov order")
    p.add_argument("--kernel-file", help="Markov kernel, one row per context")
    p.add_argument("--hidden-file", help="hidden-state kernel of a hidden Markov model")
    p.add_argument("--emission-file", help="emission kernel of a hidden Markov model")
    p.add_argument("--p", type=float, help="geometric parameter for countable_iid")
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output file (default: stdout)")
    if estimator:
        p.add_argument("--beta", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--schedule", help="identity | log[:delta=..,eps1=..,eps2=..] | table:1,2,..")
        p.add_argument("--replications", type=int)
        p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stopping-predictor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write a seeded sample path")
    _common(p, estimator=False)
    p.add_argument("--replication", type=int, help="replication index whose seed is used")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="run the predictor and write a trace table")
    _common(p)
    p.add_argument("--path-file", help="read the path instead of simulating")
    p.add_argument("--stride", type=int, help="keep every stride-th event row")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("compare-oracle", help="final-decile summary against the exact oracle")
    _common(p)
    p.set_defaults(func=cmd_compare_oracle)

    p = sub.add_parser("sweep", help="summaries over a (beta, gamma, schedule) grid")
    _common(p)
    p.add_argument("--betas", help="comma separated")
    p.add_argument("--gammas", help="comma separated")
    p.add_argument("--schedules", help="semicolon separated")
    p.add_argument("--aggregate-out", help="file for per-grid-point medians")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInput, ParameterError, SpecError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
