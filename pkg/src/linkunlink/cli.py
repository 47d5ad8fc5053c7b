"""``linkunlink`` command line: ``prepare``, ``predict`` and ``evaluate``.

Settings come from built-in defaults, then an optional flat ``key = value``
config file, then command-line flags.  Every run writes the fully resolved
settings back as ``run.cfg``, which is itself a valid ``--config`` file.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import baselines, evalkit, factor, netio, predict, randwalk
from .errors import InputError, LinkUnlinkError, NumericalError
from .pipeline import VARIANTS, apply_variant, make_predictor

log = logging.getLogger("linkunlink")

METHODS = ("luls1", "luls2", "luls3", "aa", "dcn")
KEY_ALIASES = {"lambda": "lam", "n-snapshots": "n_snapshots"}


@dataclass
class RunConfig:
    dataset: str = ""
    dataset_name: str = ""
    format: str = "whitespace-triples"
    n_snapshots: int = 6
    policy: str = "equal-time-span"
    snapshots: str = ""
    out: str = ""
    alpha: float = 1.0
    beta: float = 0.01
    k: int = 4
    m: int = 5
    theta: float = 0.4
    lam: float = 1e-4
    gamma: float = 1.0
    max_iters: int = 100
    rel_tol: float = 1e-4
    seed: int = 0
    weighting_mode: str = "paper-simplified"
    smoothness_mode: str = "paper-one-sided"
    variant: str = "luls1"
    task: str = "both"
    methods: str = ",".join(METHODS)
    trials: int = 5
    sample_seed: int = 0
    retrain_per_trial: bool = False
    top: int = 0
    threads: int = 1
    dump_similarities: bool = False
    update_rule: str = "corrected"

    def walk(self) -> randwalk.WalkConfig:
        return randwalk.WalkConfig(self.alpha, self.beta, self.k)

    def hyperparams(self, variant: Optional[str] = None) -> factor.HyperParams:
        hp = factor.HyperParams(
            m=self.m, theta=self.theta, lam=self.lam, gamma=self.gamma,
            max_iters=self.max_iters, rel_tol=self.rel_tol, seed=self.seed,
            weighting_mode=self.weighting_mode, smoothness_mode=self.smoothness_mode,
        )
        return apply_variant(hp, variant or self.variant)

    def tasks(self) -> list[str]:
        if self.task == "both":
            return list(evalkit.TASKS)
        if self.task not in evalkit.TASKS:
            raise InputError(f"unknown task {self.task!r}; expected link, unlink or both")
        return [self.task]

    def method_list(self) -> list[str]:
        names = [m.strip().lower() for m in self.methods.split(",") if m.strip()]
        bad = [m for m in names if m not in METHODS]
        if bad or not names:
            raise InputError(f"unknown method(s) {bad}; available methods: {', '.join(METHODS)}")
        return names

    def to_text(self) -> str:
        lines = [f"{f.name} = {_fmt(getattr(self, f.name))}" for f in fields(self)]
        return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(name: str, raw: str, typ):
    raw = raw.strip()
    try:
        if typ in (bool, "bool"):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return float(raw)
    except ValueError:
        raise InputError(f"config key {name!r}: cannot parse {raw!r}") from None
    return raw


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file (``#`` starts a comment)."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"config file {path} does not exist")
    values = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split(sep, 1))
        key = KEY_ALIASES.get(key, key).replace("-", "_")
        if key not in _FIELD_TYPES:
            raise InputError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw, _FIELD_TYPES[key])
    return values


def resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = dataclasses.replace(cfg, **read_config(args.config))
    overrides = {}
    for name in _FIELD_TYPES:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    cfg = dataclasses.replace(cfg, **overrides)
    if cfg.variant.lower() not in VARIANTS:
        raise InputError(f"unknown variant {cfg.variant!r}; expected one of {VARIANTS}")
    if cfg.update_rule != "corrected":
        raise InputError("only update_rule = corrected is implemented")
    return cfg


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if not getattr(cfg, n)]
    if missing:
        raise InputError(f"missing required setting(s): {', '.join(missing)}")


def _write_run_cfg(cfg: RunConfig, out: Path) -> None:
    (out / "run.cfg").write_text(cfg.to_text())


def cmd_prepare(cfg: RunConfig) -> Path:
    _require(cfg, "dataset")
    out = Path(cfg.snapshots or cfg.out)
    if not str(out):
        raise InputError("missing required setting: snapshots (or out)")
    edges = netio.load_temporal_edges(cfg.dataset, cfg.format)
    seq = netio.segment_snapshots(edges, cfg.n_snapshots, cfg.policy)
    seq.meta.update({"source": str(cfg.dataset), "format": cfg.format})
    netio.save_sequence(seq, out)
    log.info("prepared %d snapshots over %d nodes in %s", seq.N, seq.node_count, out)
    return out


def _dump_similarities(pairs, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for t, pair in enumerate(pairs, start=1):
        for name, M in (("H", pair.H), ("W", pair.W)):
            C = sp.coo_matrix(M)
            order = np.lexsort((C.col, C.row))
            with open(out / f"{name}_{t}.txt", "w") as fh:
                for r, c, v in zip(C.row[order], C.col[order], C.data[order]):
                    fh.write(f"{r} {c} {float(v)!r}\n")


def cmd_predict(cfg: RunConfig) -> Path:
    """Fit on every snapshot and rank candidate links and unlinks for ``G_{N+1}``."""
    _require(cfg, "snapshots", "out")
    seq = netio.load_sequence(cfg.snapshots)
    hp = cfg.hyperparams()
    cfg = dataclasses.replace(cfg, lam=hp.lam, gamma=hp.gamma)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    try:
        pairs = randwalk.snapshot_similarities(seq, cfg.walk(), threads=cfg.threads)
    except LinkUnlinkError as exc:
        raise type(exc)(f"randwalk: {exc}") from exc
    if cfg.dump_similarities:
        _dump_similarities(pairs, out / "similarities")
    try:
        state = factor.fit(pairs, hp)
    except LinkUnlinkError as exc:
        raise type(exc)(f"factor: {exc}") from exc

    R = predict.score_matrix(state)
    last = seq.snapshots[-1]
    top = cfg.top or None
    predict.rank_links(R, last, top).to_csv(out / "links.csv", seq.labels)
    predict.rank_unlinks(R, last, top).to_csv(out / "unlinks.csv", seq.labels)
    factor.save_state(state, out / "factors", hp, {"update_rule": cfg.update_rule})
    _write_run_cfg(cfg, out)
    log.info("fit finished after %d iterations (converged=%s)", state.iters_run, state.converged)
    return out


def _predictor_for(method: str, cfg: RunConfig):
    if method in VARIANTS:
        return make_predictor(cfg.walk(), cfg.hyperparams(method), cfg.threads)
    if method == "aa":
        return baselines.aa_predictor
    return baselines.make_dcn_predictor(cfg.theta)


def cmd_evaluate(cfg: RunConfig) -> tuple[Path, list[str]]:
    """Run every requested method on every requested task.

    Returns the output directory and a list of per-(task, method) error
    messages; results that did succeed are always written.
    """
    _require(cfg, "snapshots", "out")
    methods = cfg.method_list()
    tasks = cfg.tasks()
    seq = netio.load_sequence(cfg.snapshots)
    dataset = cfg.dataset_name or Path(cfg.snapshots).name
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    reports: dict[tuple[str, str], evalkit.MetricReport] = {}
    errors: list[str] = []
    for task in tasks:
        for method in methods:
            try:
                reports[task, method] = evalkit.evaluate(
                    seq, _predictor_for(method, cfg), task, cfg.trials,
                    cfg.sample_seed, cfg.retrain_per_trial,
                )
            except LinkUnlinkError as exc:
                msg = f"{task}/{method}: {exc}"
                errors.append(msg)
                log.error(msg)

    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(evalkit.CSV_HEADER)
        for (task, method), rep in reports.items():
            w.writerow(rep.csv_row(dataset, task, method, cfg.sample_seed))
    with open(out / "per_trial.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "task", "method", "trial", "seed", "auc", "ap"])
        for (task, method), rep in reports.items():
            for r, (a, p) in enumerate(rep.per_trial):
                w.writerow([dataset, task, method, r + 1, cfg.sample_seed + r, repr(a), repr(p)])
            w.writerow([dataset, task, method, "mean", "", repr(rep.auc), repr(rep.ap)])
    for task in tasks:
        for metric in ("auc", "ap"):
            with open(out / f"table_{task}_{metric}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["method", dataset])
                for method in methods:
                    rep = reports.get((task, method))
                    w.writerow([method, f"{getattr(rep, metric):.4f}" if rep else "error"])
    summary = {f"{t}/{m}": rep.to_dict() for (t, m), rep in reports.items()}
    summary["errors"] = errors
    (out / "report.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _write_run_cfg(cfg, out)
    return out, errors


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--seed", type=int, help="factor initialization seed")
    common.add_argument("--threads", type=int, help="worker threads for similarity computation")
    common.add_argument("--out", help="output directory")
    common.add_argument("--snapshots", help="snapshot directory")
    common.add_argument("-v", "--verbose", action="store_true")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--variant", choices=VARIANTS, type=str.lower)
    model.add_argument("--dump-similarities", dest="dump_similarities",
                       action="store_const", const=True)
    for name, typ in (("alpha", float), ("beta", float), ("k", int), ("m", int),
                      ("theta", float), ("lam", float), ("gamma", float),
                      ("max-iters", int), ("rel-tol", float)):
        model.add_argument(f"--{name}", dest=name.replace("-", "_"), type=typ)
    model.add_argument("--weighting-mode", dest="weighting_mode", choices=factor.WEIGHTING_MODES)
    model.add_argument("--smoothness-mode", dest="smoothness_mode", choices=factor.SMOOTHNESS_MODES)

    p = argparse.ArgumentParser(prog="linkunlink", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    prep = sub.add_parser("prepare", parents=[common], help="segment raw interactions into snapshots")
    prep.add_argument("--input", dest="dataset", help="raw u v ts file")
    prep.add_argument("--format", choices=netio.FORMATS)
    prep.add_argument("--n-snapshots", dest="n_snapshots", type=int)
    prep.add_argument("--policy", choices=netio.POLICIES)

    pred = sub.add_parser("predict", parents=[common, model], help="rank future links and unlinks")
    pred.add_argument("--top", type=int, help="keep only the best N candidates per list")

    ev = sub.add_parser("evaluate", parents=[common, model], help="AUC / AP against held-out G_N")
    ev.add_argument("--task", choices=("link", "unlink", "both"))
    ev.add_argument("--method", dest="method_flags", action="append",
                    help=f"method to evaluate (repeatable): {', '.join(METHODS)}")
    ev.add_argument("--trials", type=int)
    ev.add_argument("--sample-seed", dest="sample_seed", type=int)
    ev.add_argument("--retrain-per-trial", dest="retrain_per_trial",
                    action="store_const", const=True)
    ev.add_argument("--dataset-name", dest="dataset_name")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if getattr(args, "method_flags", None):
        args.methods = ",".join(args.method_flags)
    try:
        cfg = resolve_config(args)
        if args.command == "prepare":
            cmd_prepare(cfg)
        elif args.command == "predict":
            cmd_predict(cfg)
        else:
            cfg.method_list()
            _, errors = cmd_evaluate(cfg)
            if errors:
                for msg in errors:
                    print(f"error: {msg}", file=sys.stderr)
                return 1
    except NumericalError as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError) as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
