"""Command-line entry point.

Subcommands::

    qotplan gen-data --scenarios 200 --seed 1 --out data.csv [--workers 4]
    qotplan train --data data.csv --out model.json [--config run.ini]
    qotplan eval --model model.json --data data.csv --out eval.csv
    qotplan plan --topology germany17 --demands germany17 --rcsa yearly --pce gn \\
                 --periods 10 --out plan.csv [--model model.json --cache sci.csv]
    qotplan compare a.csv b.csv --out diff.csv

Every subcommand accepts ``--config`` (INI file, see ``qotplan.config``);
settings can also be overridden with ``QOTPLAN_<SECTION>_<KEY>`` environment
variables. The effective settings are echoed as ``# key = value`` lines at the
top of every CSV written, and into the ``metadata`` of saved models.

Topology and demand arguments take a file path or the name of a shipped
fixture (germany17, spain16, sweden25, stress6).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from qotplan import __version__, datagen, gbt, netmodel, qot
from qotplan.config import Settings, load_settings
from qotplan.errors import QotPlanError
from qotplan.phys import FiberLink
from qotplan.planner import RCSA_MODES, read_report, run_study, study_periods, write_report

logger = logging.getLogger("qotplan")

PARTS = ("train", "val", "test")
FIXTURES = ("germany17", "spain16", "sweden25", "stress6")

EVAL_METRICS = ["n", "mean_db", "std_db", "mae_db", "p1_db", "p99_db", "p99_abs_db", "max_abs_db"]
CDF_STEP_DB = 0.01
HIST_BIN_DB = 0.02
COMPARE_FIELDS = ["year", "metric", "a", "b", "b_minus_a"]
COMPARE_METRICS = ["art_gbps", "throughput_gbps", "n_lightpaths", "up"]


class UsageError(QotPlanError):
    """Bad command-line input detected after argument parsing."""


@dataclass(frozen=True)
class StudyConfig:
    """Everything a ``plan`` run depends on besides the settings."""

    topology: Path
    demands: Path
    rcsa: str
    pce: str
    years: int
    model: Optional[Path] = None
    cache: Optional[Path] = None

    def validate(self) -> None:
        if self.rcsa not in RCSA_MODES:
            raise UsageError(f"unknown RCSA {self.rcsa!r}")
        if self.pce not in ("gn", "ml"):
            raise UsageError(f"unknown PCE {self.pce!r}")
        if self.years < 1:
            raise UsageError("--periods must be at least 1")
        if self.pce == "ml" and self.model is None:
            raise UsageError("--pce ml needs --model")
        for path in (self.topology, self.demands, self.model):
            if path is not None and not path.is_file():
                raise UsageError(f"file not found: {path}")

    def header(self) -> dict[str, object]:
        return {
            "topology": self.topology.name,
            "demands": self.demands.name,
            "rcsa": self.rcsa,
            "pce": self.pce,
            "years": self.years,
            "periods": study_periods(self.rcsa, self.years),
            "model": self.model.name if self.model else "",
        }


def fixture_path(name: str, suffix: str) -> Path:
    return Path(str(resources.files("qotplan") / "data" / f"{name}{suffix}"))


def resolve_input(arg: str, suffix: str) -> Path:
    """A file path, or a shipped fixture when ``arg`` names one."""
    path = Path(arg)
    if path.is_file() or arg not in FIXTURES:
        return path
    return fixture_path(arg, suffix)


def settings_header(settings: Settings, command: str,
                    extra: Optional[Mapping[str, object]] = None) -> dict[str, object]:
    head: dict[str, object] = {"qotplan": __version__, "command": command}
    head.update(extra or {})
    head.update(settings.as_flat_dict())
    return head


def split_seed_of(path: Path, override: Optional[int]) -> int:
    if override is not None:
        return override
    head = datagen.read_header(path)
    try:
        return int(head["split_seed"])
    except (KeyError, ValueError):
        raise UsageError(f"{path}: no split_seed in header; pass --split-seed") from None


def load_part(path: Path, part: str, split_seed: Optional[int]) -> list[datagen.LabeledRow]:
    if not path.is_file():
        raise UsageError(f"file not found: {path}")
    rows = datagen.load_rows(path)
    if part == "all":
        return rows
    parts = dict(zip(PARTS, datagen.split_dataset(rows, split_seed_of(path, split_seed))))
    return parts[part]


def part_path(out: Path, part: str) -> Path:
    return out.with_name(f"{out.stem}.{part}{out.suffix or '.csv'}")


def write_dataset(rows: Sequence[datagen.LabeledRow], out: Path, header: Mapping[str, object],
                  split_seed: int) -> tuple[list, list, list]:
    """Full dataset at ``out`` plus one file per split next to it."""
    head = dict(header)
    head["split_seed"] = split_seed
    datagen.save_rows(rows, out, head)
    parts = datagen.split_dataset(rows, split_seed)
    for name, part in zip(PARTS, parts):
        datagen.save_rows(part, part_path(out, name), {**head, "part": name})
    return parts


def row_links(rows: Sequence[datagen.LabeledRow], settings: Settings) -> list[FiberLink]:
    f = settings.fiber
    cache: dict[tuple[float, int], FiberLink] = {}
    out = []
    for r in rows:
        key = (r.span_length, r.n_spans)
        if key not in cache:
            cache[key] = FiberLink(r.span_length, r.n_spans, alpha_db_km=f.alpha_db_km,
                                   beta2_ps2_km=f.beta2_ps2_km, gamma_w_km=f.gamma_w_km,
                                   noise_figure_db=f.noise_figure_db)
        out.append(cache[key])
    return out


def snr_of(rows: Sequence[datagen.LabeledRow], eta_db: Sequence[float], settings: Settings) -> np.ndarray:
    links = row_links(rows, settings)
    return np.array([qot.snr_from_eta_db(e, r.launch_power, r.symbol_rate, link)
                     for r, e, link in zip(rows, eta_db, links)])


def error_stats(err: np.ndarray) -> dict[str, float]:
    """Summary of signed SNR errors (estimate minus reference, dB)."""
    err = np.asarray(err, dtype=float)
    if err.size == 0:
        raise UsageError("no rows to evaluate")
    a = np.abs(err)
    return {
        "n": float(err.size),
        "mean_db": float(np.mean(err)),
        "std_db": float(np.std(err)),
        "mae_db": float(np.mean(a)),
        "p1_db": float(np.percentile(err, 1)),
        "p99_db": float(np.percentile(err, 99)),
        "p99_abs_db": float(np.percentile(a, 99)),
        "max_abs_db": float(np.max(a)),
    }


def cdf_table(errors: Mapping[str, np.ndarray], step: float = CDF_STEP_DB) -> list[list[float]]:
    """Empirical CDF of |error| for each estimator on a common grid."""
    top = max(float(np.max(np.abs(e))) for e in errors.values())
    grid = np.arange(0.0, top + step, step)
    sorted_abs = {k: np.sort(np.abs(e)) for k, e in errors.items()}
    table = []
    for x in grid:
        table.append([round(float(x), 6)] + [
            float(np.searchsorted(s, x, side="right")) / len(s) for s in sorted_abs.values()])
    return table


def histogram_table(errors: Mapping[str, np.ndarray], width: float = HIST_BIN_DB) -> list[list[float]]:
    lo = min(float(np.min(e)) for e in errors.values())
    hi = max(float(np.max(e)) for e in errors.values())
    edges = np.arange(np.floor(lo / width) * width, hi + width, width)
    if len(edges) < 2:
        edges = np.array([lo - width / 2, lo + width / 2])
    counts = [np.histogram(e, bins=edges)[0] for e in errors.values()]
    return [[round(float(edges[i]), 6), round(float(edges[i + 1]), 6)] + [int(c[i]) for c in counts]
            for i in range(len(edges) - 1)]


def _write_csv(path: Path, header: Mapping[str, object], columns: Sequence[str],
               rows: Sequence[Sequence[object]]) -> None:
    with open(path, "w", newline="") as fh:
        for key, value in header.items():
            fh.write(f"# {key} = {value}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])


def cmd_gen_data(args, settings: Settings) -> int:
    if args.scenarios < 10:
        raise UsageError("--scenarios must be at least 10 to allow a train/val/test split")
    stats = datagen.BuildStats()
    rows = datagen.build_dataset(args.scenarios, args.seed, settings, workers=args.workers, stats=stats)
    split_seed = args.seed if args.split_seed is None else args.split_seed
    header = settings_header(settings, "gen-data", {"scenarios": args.scenarios, "seed": args.seed})
    parts = write_dataset(rows, Path(args.out), header, split_seed)
    print(f"{stats.rows} rows from {stats.scenarios} scenarios ({stats.skipped} skipped, "
          f"max spot-check change {stats.max_spot_check_db:.3f} dB) in {stats.seconds:.0f} s")
    print("split rows: " + ", ".join(f"{n} {len(p)}" for n, p in zip(PARTS, parts)))
    return 0


def cmd_train(args, settings: Settings) -> int:
    data = Path(args.data)
    train = load_part(data, "train", args.split_seed)
    val = load_part(data, "val", args.split_seed)
    x, y = datagen.as_arrays(train)
    xv, yv = datagen.as_arrays(val)
    hp = gbt.Hyperparams.from_settings(settings.gbt)
    model, report = gbt.fit(x, qot.training_target(x, y), xv, qot.training_target(xv, yv), hp,
                            seed=args.seed)
    header = settings_header(settings, "train", {"data": data.name, "seed": args.seed,
                                                  "split_seed": split_seed_of(data, args.split_seed),
                                                  "target": "eta_db - sci_eta_db"})
    out = Path(args.out)
    gbt.save(model, out, metadata=header)
    gbt.write_report(report, out.with_name(out.stem + ".report.csv"), qot.FEATURE_NAMES, header)
    best_val = report.val_loss[report.best_round] if report.val_loss else float("nan")
    print(f"{len(model.trees)} trees (best round {report.best_round}), "
          f"train MSE {report.train_loss[report.best_round]:.5f}, val MSE {best_val:.5f}")
    return 0


def evaluate_rows(model: gbt.GbtModel, rows: Sequence[datagen.LabeledRow],
                  settings: Settings) -> dict[str, np.ndarray]:
    """Signed SNR errors (dB) of the learned model and of the closed-form GN."""
    x, y = datagen.as_arrays(rows)
    truth = snr_of(rows, y, settings)
    ml = snr_of(rows, qot.predict_eta(model, x), settings)
    gn = snr_of(rows, [r.eta_gn_db for r in rows], settings)
    return {"ml": ml - truth, "gn": gn - truth}


def write_evaluation(errors: Mapping[str, np.ndarray], out: Path, header: Mapping[str, object]) -> dict:
    stats = {k: error_stats(e) for k, e in errors.items()}
    names = list(errors)
    _write_csv(out, header, ["metric"] + names,
               [[m] + [stats[k][m] for k in names] for m in EVAL_METRICS])
    _write_csv(out.with_name(out.stem + ".cdf.csv"), header,
               ["abs_error_db"] + [f"cdf_{k}" for k in names], cdf_table(errors))
    _write_csv(out.with_name(out.stem + ".hist.csv"), header,
               ["bin_low_db", "bin_high_db"] + [f"count_{k}" for k in names], histogram_table(errors))
    return stats


def cmd_eval(args, settings: Settings) -> int:
    model_path, data = Path(args.model), Path(args.data)
    if not model_path.is_file():
        raise UsageError(f"file not found: {model_path}")
    model = gbt.load(model_path)
    rows = load_part(data, args.part, args.split_seed)
    errors = evaluate_rows(model, rows, settings)
    header = settings_header(settings, "eval", {"model": model_path.name, "data": data.name,
                                                 "part": args.part})
    stats = write_evaluation(errors, Path(args.out), header)
    for name, s in stats.items():
        print(f"{name.upper():>3}: n={int(s['n'])} mean {s['mean_db']:+.4f} std {s['std_db']:.4f} "
              f"MAE {s['mae_db']:.4f} p99|e| {s['p99_abs_db']:.4f} dB")
    return 0


def make_pce(study: StudyConfig):
    if study.pce == "gn":
        return qot.GnPce()
    cache = qot.SciCache.load(study.cache) if study.cache and study.cache.is_file() else qot.SciCache()
    return qot.MlPce(gbt.load(study.model), cache)


def cmd_plan(args, settings: Settings) -> int:
    study = StudyConfig(
        topology=resolve_input(args.topology, ".json"),
        demands=resolve_input(args.demands, "_demands.csv"),
        rcsa=args.rcsa, pce=args.pce, years=args.periods,
        model=Path(args.model) if args.model else None,
        cache=Path(args.cache) if args.cache else None,
    )
    study.validate()
    topo = netmodel.load_topology(study.topology)
    demands = netmodel.load_demands(study.demands, topo)
    pce = make_pce(study)
    reports = run_study(topo, demands, study.rcsa, pce, study_periods(study.rcsa, study.years), settings)
    write_report(reports, args.out, settings_header(settings, "plan", study.header()))
    if study.pce == "ml" and study.cache is not None:
        pce.sci.save(study.cache)
    last = reports[-1]
    print(f"{study.rcsa}/{study.pce}: {len(reports)} periods, final UP {last.up:.4f}, "
          f"{last.n_lightpaths} lightpaths, {sum(r.pce_calls for r in reports)} PCE calls, "
          f"{sum(r.wall_time_s for r in reports):.1f} s")
    return 0


def yearly_points(path: Path) -> dict[int, dict[str, float]]:
    """Report rows at yearly snapshots, keyed by year."""
    if not path.is_file():
        raise UsageError(f"file not found: {path}")
    monthly = datagen.read_header(path).get("rcsa") == "monthly"
    out = {}
    for r in read_report(path):
        if monthly and r.period % 12:
            continue
        year = r.period // 12 if monthly else r.period
        out[year] = {"art_gbps": r.art_gbps, "throughput_gbps": r.throughput_gbps,
                     "n_lightpaths": float(r.n_lightpaths), "up": r.up}
    return out


def compare_reports(a: Path, b: Path) -> list[list[object]]:
    pa, pb = yearly_points(a), yearly_points(b)
    years = sorted(set(pa) & set(pb))
    if not years:
        raise UsageError(f"{a} and {b} share no yearly periods")
    return [[y, m, pa[y][m], pb[y][m], pb[y][m] - pa[y][m]] for y in years for m in COMPARE_METRICS]


def cmd_compare(args, settings: Settings) -> int:
    a, b = Path(args.a), Path(args.b)
    rows = compare_reports(a, b)
    header = {"qotplan": __version__, "command": "compare", "a": a.name, "b": b.name}
    for side, path in (("a", a), ("b", b)):
        for key in ("rcsa", "pce", "topology"):
            header[f"{side}.{key}"] = datagen.read_header(path).get(key, "")
    _write_csv(Path(args.out), header, COMPARE_FIELDS, rows)
    final = max(r[0] for r in rows)
    for r in rows:
        if r[0] == final:
            print(f"year {final} {r[1]}: {r[2]:.4f} vs {r[3]:.4f} (b-a {r[4]:+.4f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qotplan", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"qotplan {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI settings file")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="label random scenarios with the GN integral")
    p.add_argument("--scenarios", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--split-seed", type=int, help="defaults to --seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", parents=[common], help="fit the boosted-tree NLI model")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, help="defaults to the dataset header")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="SNR error statistics on a dataset split")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--part", choices=PARTS + ("all",), default="test")
    p.add_argument("--split-seed", type=int, help="defaults to the dataset header")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plan", parents=[common], help="run a multi-period planning study")
    p.add_argument("--topology", required=True, help="JSON file or fixture name")
    p.add_argument("--demands", required=True, help="CSV file or fixture name")
    p.add_argument("--rcsa", choices=RCSA_MODES, required=True)
    p.add_argument("--pce", choices=("gn", "ml"), required=True)
    p.add_argument("--periods", type=int, required=True, help="years to plan")
    p.add_argument("--model")
    p.add_argument("--cache", help="SCI cache CSV, read if present and rewritten after the run")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("compare", parents=[common], help="difference table of two plan reports")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        settings = load_settings(args.config)
        return args.func(args, settings)
    except (QotPlanError, ValueError, OSError) as exc:
        print(f"qotplan {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
