"""Command-line harness: ``solarbench attack | sweep | landscape | report``.

Exit codes: 0 success, 2 usage/configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import solarbench
from solarbench._parallel import ordered_map
from solarbench.attack import AttackConfig, evaluate_clean, evaluate_robust, top5_k
from solarbench.classifier import PreprocessConfig, load_classifier
from solarbench.dataset import lazy_samples, load_class_names, load_manifest
from solarbench.errors import ConfigError, SolarBenchError
from solarbench.plots import landscape_csv, landscape_svg, sweep_csv, sweep_svg
from solarbench.report import RunReport, render_table, table_csv, utc_timestamp
from solarbench.sweep import alpha_grid, loss_landscape, universal_sweep

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("solarbench")

PIPELINE_NOTE = (
    "preprocessing is taken from the supplied config; models trained with a different "
    "resize/crop pipeline may not reproduce published accuracies exactly"
)


class RunFailure(Exception):
    """A failure during evaluation, as opposed to during setup."""

    def __init__(self, cause):
        self.cause = cause
        super().__init__(str(cause))


def _running(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ConfigError:
        raise
    except SolarBenchError as exc:
        raise RunFailure(exc) from exc


class _Setup:
    """Everything resolved from flags before any evaluation runs."""

    def __init__(self, args):
        self.classnames = load_class_names(args.classnames) if getattr(args, "classnames", None) else None
        class_count = len(self.classnames) if self.classnames else None
        self.manifest = load_manifest(args.manifest, class_count)
        config = PreprocessConfig.from_json(args.preprocess) if args.preprocess else None
        self.classifier = load_classifier(args.model, config)
        if self.manifest.class_count > self.classifier.num_classes:
            bad = max(e.label for e in self.manifest.entries)
            if bad >= self.classifier.num_classes:
                raise ConfigError(
                    f"manifest label {bad} is out of range for a {self.classifier.num_classes}-class model"
                )
        self.external_scores = _load_external(args.external_scores) if getattr(args, "external_scores", None) else None
        self.timestamp = getattr(args, "timestamp", None) or utc_timestamp()

    def model_info(self, model_arg: str) -> dict:
        info = self.classifier.describe()
        info["identity"] = model_arg
        return info

    def manifest_info(self) -> dict:
        return {
            "hash": self.manifest.content_hash,
            "entries": len(self.manifest),
            "class_count": self.manifest.class_count,
        }

    def notes(self) -> list[str]:
        return [PIPELINE_NOTE] if self.classifier.preprocess_config is not None else []

    def preprocess_dict(self):
        cfg = self.classifier.preprocess_config
        return None if cfg is None else cfg.to_dict()


def _load_external(path) -> dict:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot read external scores: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: external scores must be a JSON object")
    return d


def _check_new(*paths):
    for p in paths:
        if p is not None and Path(p).exists():
            raise ConfigError(f"{p}: output exists; refusing to overwrite")


def _write_new(path, text: str):
    with open(path, "x", encoding="utf-8") as fh:
        fh.write(text)


def _workers(args) -> int:
    if args.workers is not None and args.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {args.workers}")
    return args.workers or os.cpu_count() or 1


def cmd_attack(args) -> int:
    config = AttackConfig(k=args.k, n=args.n, seed=args.seed)
    workers = _workers(args)
    _check_new(args.out)
    setup = _Setup(args)
    clf = setup.classifier
    config.check_against(clf)

    samples = lazy_samples(setup.manifest)
    k5 = top5_k(clf.num_classes)
    log.info("clean evaluation of %d samples", len(samples))
    clean_errors = []
    clean = _running(
        evaluate_clean, clf, samples, (1, k5), workers=workers, on_error=args.on_error, errors=clean_errors
    )
    clean1, clean5 = clean[1], clean[k5]
    log.info("running %s", config.name)
    robust = _running(evaluate_robust, clf, samples, config, workers=workers, on_error=args.on_error)
    outcomes = robust.outcomes
    report = RunReport(
        kind="attack",
        tool_version=solarbench.__version__,
        timestamp=setup.timestamp,
        model=setup.model_info(args.model),
        preprocess=setup.preprocess_dict(),
        manifest=setup.manifest_info(),
        config={"attack": {"name": config.name, "k": config.k, "n": config.n, "seed": config.seed, "on_error": args.on_error}},
        clean={"top1": clean1, "top5": clean5},
        robust={"top1": robust.top1, "top5": robust.top5},
        outcomes=outcomes,
        errors=[{"phase": "clean", "sample_id": sid, "message": msg} for sid, msg in clean_errors]
        + [{"phase": "attack", "sample_id": sid, "message": msg} for sid, msg in robust.errors],
        external_scores=setup.external_scores,
        notes=setup.notes(),
    )
    report.save(args.out)
    print(
        f"{config.name}: clean top1={clean1:.4f} top5={clean5:.4f} | "
        f"robust top1={robust.top1:.4f} top5={robust.top5:.4f} -> {args.out}"
    )
    if setup.classnames:
        for o in outcomes:
            if o.success:
                name = setup.classnames.get(o.predicted_label, str(o.predicted_label))
                log.info("%s: alpha=%.4f -> %s", o.sample_id, o.chosen_alpha, name)
    return EXIT_OK


def _derived(out, explicit, suffix):
    return explicit if explicit else str(Path(out).with_suffix(suffix))


def cmd_sweep(args) -> int:
    alpha_grid(args.step)
    workers = _workers(args)
    csv_path = _derived(args.out, args.csv, ".csv")
    svg_path = _derived(args.out, args.svg, ".svg")
    _check_new(args.out, csv_path, svg_path)
    setup = _Setup(args)
    clf = setup.classifier

    samples = lazy_samples(setup.manifest)
    k5 = top5_k(clf.num_classes)
    clean = _running(evaluate_clean, clf, samples, (1, k5), workers=workers)
    clean1, clean5 = clean[1], clean[k5]
    log.info("sweeping %d samples at step %r", len(samples), args.step)
    result = _running(universal_sweep, clf, samples, args.step, workers=workers)
    report = RunReport(
        kind="sweep",
        tool_version=solarbench.__version__,
        timestamp=setup.timestamp,
        model=setup.model_info(args.model),
        preprocess=setup.preprocess_dict(),
        manifest=setup.manifest_info(),
        config={"sweep": {"step": args.step}},
        clean={"top1": clean1, "top5": clean5},
        sweep=result,
        external_scores=setup.external_scores,
        notes=setup.notes(),
    )
    report.save(args.out)
    _write_new(csv_path, sweep_csv(result))
    _write_new(svg_path, sweep_svg(result, title=f"Universal solarization: {Path(args.model).name}"))
    print(
        f"sweep: {len(result.alphas)} points, min top1={result.global_min_accuracy:.4f} "
        f"at alpha={result.global_min_alpha:.2f} -> {args.out}"
    )
    return EXIT_OK


def cmd_landscape(args) -> int:
    if args.samples < 1:
        raise ConfigError(f"--samples must be >= 1, got {args.samples}")
    if args.grid < 2:
        raise ConfigError(f"--grid must be >= 2, got {args.grid}")
    workers = _workers(args)
    _check_new(args.csv, args.svg)
    setup = _Setup(args)
    clf = setup.classifier

    samples = lazy_samples(setup.manifest)[: args.samples]
    landscapes = _running(
        lambda: list(ordered_map(lambda s: loss_landscape(clf, s, args.grid, target=args.target), samples, workers))
    )
    _write_new(args.csv, landscape_csv(landscapes))
    _write_new(args.svg, landscape_svg(landscapes, title=f"Loss landscape: {Path(args.model).name}"))
    print(f"landscape: {len(landscapes)} samples x {args.grid} points -> {args.csv}, {args.svg}")
    return EXIT_OK


def cmd_report(args) -> int:
    reports = [RunReport.load(p) for p in args.reports]
    if args.csv:
        _check_new(args.csv)
    sys.stdout.write(render_table(reports))
    if args.csv:
        _write_new(args.csv, table_csv(reports))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="solarbench", description="Adversarial solarization benchmark.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--manifest", required=True, help="CSV of id,path,label")
        sp.add_argument("--model", required=True, help="ONNX file or synthetic:<name>")
        sp.add_argument("--preprocess", help="preprocessing JSON (default: bundled ImageNet config)")
        sp.add_argument("--classnames", help="JSON map of class index to name")
        sp.add_argument("--workers", type=int, default=None, help="worker threads (default: CPU count)")

    a = sub.add_parser("attack", help="RandSol-Top{k}-{n} adaptive attack")
    common(a)
    a.add_argument("--k", type=int, default=1)
    a.add_argument("--n", type=int, default=10)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--on-error", choices=("abort", "skip"), default="abort")
    a.add_argument("--out", required=True)
    a.add_argument("--external-scores", help="JSON object of extra columns (e.g. ImageNet-C average)")
    a.add_argument("--timestamp", help="override the report timestamp (reproducible builds)")
    a.set_defaults(func=cmd_attack)

    s = sub.add_parser("sweep", help="universal fixed-threshold sweep")
    common(s)
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--out", required=True)
    s.add_argument("--csv", help="curve CSV (default: <out>.csv)")
    s.add_argument("--svg", help="curve SVG (default: <out>.svg)")
    s.add_argument("--external-scores")
    s.add_argument("--timestamp")
    s.set_defaults(func=cmd_sweep)

    ls = sub.add_parser("landscape", help="per-sample loss vs threshold")
    common(ls)
    ls.add_argument("--samples", type=int, default=5)
    ls.add_argument("--grid", type=int, default=256)
    ls.add_argument("--target", choices=("label", "prediction"), default="label")
    ls.add_argument("--csv", required=True)
    ls.add_argument("--svg", required=True)
    ls.set_defaults(func=cmd_landscape)

    r = sub.add_parser("report", help="tabulate run reports")
    r.add_argument("reports", nargs="+")
    r.add_argument("--csv")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )

    # setup problems (flags, files, model loading) are usage errors
    try:
        return args.func(args)
    except RunFailure as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SolarBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
