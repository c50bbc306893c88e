"""Command-line entry point wiring the pipeline stages together.

Subcommands: validate, split, pseudolabel, poselabels, train, select,
evaluate, synth, serve, tally, report. Exit codes: 0 success, 1 usage
error, 2 data error. A JSON config file (--config or the BESTVIEW_CONFIG
environment variable) supplies defaults; explicit flags override it. The
effective option values are echoed into a header of every output file, so
identical invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from . import corpus as corpusmod
from . import evalharness, posegeom, pseudolabel, selector, synthgen
from .judgesvc import JudgmentStore, StudyError
from .textmetrics import MetricError, LexiconError, ScoreConfig

CONFIG_ENV = "BESTVIEW_CONFIG"

_DATA_ERRORS = (
    corpusmod.CorpusError,
    pseudolabel.LabelError,
    posegeom.PoseError,
    selector.SelectorError,
    evalharness.EvalError,
    synthgen.SynthError,
    StudyError,
    MetricError,
    LexiconError,
    FileNotFoundError,
    json.JSONDecodeError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; this artifact uses 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise MetricError(f"{path}: config must be a JSON object")
    return obj


def _resolve(args: argparse.Namespace, config: dict, keys: Sequence[str]) -> dict:
    """Flag value if given, else config file value, else parser default.

    Returns the effective values and writes them back onto args."""
    effective = {}
    for key in keys:
        value = getattr(args, key)
        if value is None and key in config:
            value = config[key]
        effective[key] = value
        setattr(args, key, value)
    return effective


def _require(args: argparse.Namespace, parser: argparse.ArgumentParser, *keys):
    for key in keys:
        if getattr(args, key) is None:
            parser.error(f"missing required option --{key.replace('_', '-')}")


def _score_config(metric: str | None) -> ScoreConfig:
    return ScoreConfig(metric=metric or "cider")


def _cmd_validate(args, config) -> int:
    effective = _resolve(args, config, ["manifest"])
    corpus = corpusmod.load_manifest(args.manifest)
    print(
        f"ok: {len(corpus)} clips, {corpus.n_views} views, "
        f"{len(corpus.captioner_ids)} captioners, f_dim {corpus.f_dim}"
    )
    return 0


def _cmd_split(args, config) -> int:
    effective = _resolve(
        args, config, ["manifest", "fractions", "seed", "out_prefix"]
    )
    if args.seed is None:
        args.seed = effective["seed"] = 0
    corpus = corpusmod.load_manifest(args.manifest)
    fracs = tuple(float(f) for f in args.fractions.split(","))
    if len(fracs) != 3:
        raise corpusmod.CorpusError("fractions must be three comma-separated values")
    train, val, test = corpusmod.split_corpus(corpus, fracs, args.seed)
    for part, tag in ((train, "train"), (val, "val"), (test, "test")):
        path = f"{args.out_prefix}.{tag}.jsonl"
        corpusmod.save_manifest(part, path)
        print(f"{tag}: {len(part)} clips -> {path}")
    return 0


def _cmd_pseudolabel(args, config) -> int:
    effective = _resolve(
        args, config, ["manifest", "policy", "metric", "captioner", "out", "jobs"]
    )
    _require(args, args._parser, "out")
    args.policy = args.policy or "union"
    effective["policy"] = args.policy
    corpus = corpusmod.load_manifest(args.manifest)
    captioner_ids = [args.captioner] if args.captioner else None
    labels = _label_corpus_parallel(
        corpus,
        _score_config(args.metric),
        args.policy,
        captioner_ids,
        jobs=args.jobs or 1,
    )
    pseudolabel.save_labels(labels, args.out, header=effective)
    freq = pseudolabel.label_distribution(labels, corpus.n_views)
    print(f"labeled {len(labels)} clips -> {args.out}")
    print("label distribution: " + " ".join(f"{f:.3f}" for f in freq))
    return 0


def _label_corpus_parallel(corpus, score_config, policy, captioner_ids, jobs):
    if jobs <= 1:
        return pseudolabel.label_corpus(corpus, score_config, policy, captioner_ids)
    from concurrent.futures import ThreadPoolExecutor

    from .textmetrics import build_idf_for_config

    ids = tuple(captioner_ids or corpus.captioner_ids)
    idf = (
        build_idf_for_config(corpus.narrations(), score_config)
        if score_config.metric == "cider"
        else None
    )
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        results = pool.map(
            lambda clip: pseudolabel.label_clip(clip, ids, idf, policy, score_config),
            corpus.clips,
        )
    return {pls.clip_id: pls for pls in results}


def _cmd_poselabels(args, config) -> int:
    effective = _resolve(args, config, ["manifest", "beta", "out", "jobs"])
    _require(args, args._parser, "out")
    args.beta = args.beta or 30
    effective["beta"] = args.beta
    corpus = corpusmod.load_manifest(args.manifest)
    clips = list(corpus)
    if (args.jobs or 1) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            tables = list(
                pool.map(lambda c: posegeom.pose_label_table(c, args.beta), clips)
            )
    else:
        tables = [posegeom.pose_label_table(c, args.beta) for c in clips]
    posegeom.save_pose_tables(
        {t.clip_id: t for t in tables}, args.out, header=effective
    )
    print(f"pose labels for {len(tables)} clips -> {args.out}")
    return 0


def _cmd_train(args, config) -> int:
    keys = [
        "train_manifest",
        "val_manifest",
        "labels",
        "pose",
        "out",
        "log",
        "w",
        "learning_rate",
        "h_dim",
        "max_epochs",
        "seed",
        "patience",
        "batch_size",
        "beta",
        "label_mode",
    ]
    effective = _resolve(args, config, keys)
    _require(args, args._parser, "train_manifest", "val_manifest", "labels", "pose", "out")
    cfg = selector.TrainConfig(
        w=0.5 if args.w is None else float(args.w),
        learning_rate=float(args.learning_rate or 0.1),
        h_dim=int(args.h_dim or 16),
        max_epochs=200 if args.max_epochs is None else int(args.max_epochs),
        seed=int(args.seed or 0),
        patience=int(args.patience or 5),
        batch_size=int(args.batch_size or 32),
        beta_deg=int(args.beta or 30),
        label_mode=args.label_mode or "min",
    )
    train_corpus = corpusmod.load_manifest(args.train_manifest)
    val_corpus = corpusmod.load_manifest(args.val_manifest)
    labels = pseudolabel.load_labels(args.labels)
    tables = posegeom.load_pose_tables(args.pose)
    params, history = selector.train(train_corpus, labels, tables, val_corpus, cfg)
    selector.save_checkpoint(params, args.out, cfg=cfg, history=history)
    if args.log:
        selector.write_train_log(history, args.log)
    final = history.val_ls[-1] if history.val_ls else float("nan")
    print(
        f"trained {history.n_epochs()} epochs (best {history.best_epoch}) "
        f"val loss {final:.4f} -> {args.out}"
    )
    return 0


def _cmd_select(args, config) -> int:
    effective = _resolve(args, config, ["manifest", "checkpoint", "out"])
    _require(args, args._parser, "checkpoint", "out")
    corpus = corpusmod.load_manifest(args.manifest)
    params, _ = selector.load_checkpoint(args.checkpoint)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"_config": effective}) + "\n")
        fh.write(json.dumps({"policy_name": "selector"}) + "\n")
        for clip in corpus:
            best, order = selector.select(params, clip)
            fh.write(
                json.dumps(
                    {"clip_id": clip.clip_id, "view": best, "order": order}
                )
                + "\n"
            )
    print(f"selections for {len(corpus)} clips -> {args.out}")
    return 0


def _cmd_evaluate(args, config) -> int:
    keys = [
        "manifest",
        "selection",
        "baseline",
        "captioner",
        "seed",
        "out",
        "fmt",
        "scores_out",
    ]
    effective = _resolve(args, config, keys)
    corpus = corpusmod.load_manifest(args.manifest)
    if args.selection:
        sel = evalharness.load_selection(args.selection)
    elif args.baseline:
        sel = evalharness.baseline_select(
            corpus,
            args.baseline,
            seed=int(args.seed or 0),
            eval_captioner_id=args.captioner,
        )
    else:
        args._parser.error("need --selection or --baseline")
    report = evalharness.evaluate(sel, corpus, eval_captioner_id=args.captioner)
    if args.scores_out:
        evalharness.save_report_scores(report, args.scores_out, header=effective)
    rendered = evalharness.render_report([report], args.fmt or "text")
    if args.out:
        _write_report(args.out, rendered, args.fmt or "text", effective)
        print(f"report -> {args.out}")
    else:
        print(rendered, end="")
    return 0


def _write_report(path: str, rendered: str, fmt: str, effective: dict) -> None:
    if fmt == "json":
        obj = json.loads(rendered)
        obj["_config"] = effective
        rendered = json.dumps(obj, indent=2) + "\n"
    else:
        rendered = f"# config: {json.dumps(effective, sort_keys=True)}\n" + rendered
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(rendered)


def _cmd_report(args, config) -> int:
    effective = _resolve(args, config, ["fmt", "out", "pvalue_metric"])
    if not args.scores:
        args._parser.error("need at least one scores file")
    reports = [evalharness.load_report_scores(p) for p in args.scores]
    rendered = evalharness.render_report(reports, args.fmt or "text")
    if args.out:
        _write_report(args.out, rendered, args.fmt or "text", effective)
        print(f"report -> {args.out}")
    else:
        print(rendered, end="")
    if args.pvalue_metric and len(reports) >= 2:
        p = evalharness.permutation_test(
            reports[0], reports[1], metric=args.pvalue_metric, seed=0
        )
        print(
            f"p({reports[0].policy_name} vs {reports[1].policy_name}, "
            f"{args.pvalue_metric}) = {p:.4f}"
        )
    return 0


def _cmd_synth(args, config) -> int:
    keys = [
        "clips",
        "views",
        "f_dim",
        "captioners",
        "vocab_size",
        "narration_len",
        "rho",
        "feature_snr",
        "seed",
        "camera_radius",
        "verbose_captions",
        "out",
        "planted_out",
    ]
    effective = _resolve(args, config, keys)
    _require(args, args._parser, "out")
    cfg = synthgen.SynthConfig(
        n_clips=int(args.clips or 100),
        n_views=int(args.views or 3),
        f_dim=int(args.f_dim or 16),
        n_captioners=int(args.captioners or 3),
        vocab_size=int(args.vocab_size or 50),
        narration_len=int(args.narration_len or 8),
        corruption_rate=0.1 if args.rho is None else float(args.rho),
        feature_snr=float(args.feature_snr or 20.0),
        seed=int(args.seed or 0),
        camera_radius=float(args.camera_radius or 2.0),
        verbose_captions=bool(args.verbose_captions),
    )
    generated, planted = synthgen.generate(cfg)
    corpusmod.save_manifest(generated, args.out)
    planted_path = args.planted_out or args.out + ".planted.json"
    with open(planted_path, "w", encoding="utf-8") as fh:
        json.dump({"_config": effective, "planted": planted}, fh, sort_keys=True)
        fh.write("\n")
    print(f"{cfg.n_clips} clips -> {args.out} (planted views -> {planted_path})")
    return 0


def _cmd_serve(args, config) -> int:
    effective = _resolve(
        args, config, ["store", "media", "host", "port", "create_session", "seed"]
    )
    _require(args, args._parser, "store")
    store = JudgmentStore(args.store)
    if args.create_session:
        session = store.create_session(args.create_session, int(args.seed or 0))
        print(f"session {session.session_id}: {len(session.pairs)} pairs")
        if args.no_serve:
            return 0
    from .judgesvc import create_app

    app = create_app(store, media_root=args.media)
    import uvicorn

    uvicorn.run(app, host=args.host or "127.0.0.1", port=int(args.port or 8000))
    return 0


def _cmd_tally(args, config) -> int:
    effective = _resolve(args, config, ["store", "session", "policy"])
    _require(args, args._parser, "store", "session")
    store = JudgmentStore(args.store)
    result = store.tally(args.session, args.policy or "a")
    print(
        f"win {result['win']}% loss {result['loss']}% tie {result['tie']}% "
        f"p={result['p']:.4g} over {result['judgments']} judgments"
    )
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="bestview", description=__doc__)
    parser.add_argument("--config", help="JSON config file with option defaults")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name: str, func, help_text: str) -> _Parser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func, _parser=p)
        return p

    p = add("validate", _cmd_validate, "check a manifest against all invariants")
    p.add_argument("manifest")

    p = add("split", _cmd_split, "deterministic train/val/test split")
    p.add_argument("manifest")
    p.add_argument("--fractions", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--out-prefix", required=True)

    p = add("pseudolabel", _cmd_pseudolabel, "caption-score best-view labels")
    p.add_argument("manifest")
    p.add_argument("--policy", choices=pseudolabel.POLICIES)
    p.add_argument("--metric", choices=("cider", "meteor"))
    p.add_argument("--captioner", help="restrict labeling to one captioner")
    p.add_argument("--jobs", type=int)
    p.add_argument("-o", "--out")

    p = add("poselabels", _cmd_poselabels, "discretized relative pose labels")
    p.add_argument("manifest")
    p.add_argument("--beta", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("-o", "--out")

    p = add("train", _cmd_train, "train the view selector")
    p.add_argument("--train-manifest")
    p.add_argument("--val-manifest")
    p.add_argument("--labels")
    p.add_argument("--pose")
    p.add_argument("-o", "--out")
    p.add_argument("--log", help="CSV training log path")
    p.add_argument("--w", type=float)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--h-dim", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--beta", type=int)
    p.add_argument("--label-mode", choices=("min", "random_single"))

    p = add("select", _cmd_select, "apply a trained selector to a manifest")
    p.add_argument("manifest")
    p.add_argument("--checkpoint")
    p.add_argument("-o", "--out")

    p = add("evaluate", _cmd_evaluate, "score a selection or baseline")
    p.add_argument("manifest")
    p.add_argument("--selection")
    p.add_argument("--baseline", choices=evalharness.BASELINES)
    p.add_argument("--captioner")
    p.add_argument("--seed", type=int)
    p.add_argument("--fmt", choices=("text", "csv", "json"))
    p.add_argument("-o", "--out")
    p.add_argument("--scores-out", help="write per-clip scores JSON")

    p = add("report", _cmd_report, "merge saved score files into one table")
    p.add_argument("scores", nargs="*")
    p.add_argument("--fmt", choices=("text", "csv", "json"))
    p.add_argument("-o", "--out")
    p.add_argument(
        "--pvalue-metric",
        choices=evalharness.METRICS,
        help="also test the first two score files for a difference",
    )

    p = add("synth", _cmd_synth, "generate a synthetic corpus")
    p.add_argument("--clips", type=int)
    p.add_argument("--views", type=int)
    p.add_argument("--f-dim", type=int)
    p.add_argument("--captioners", type=int)
    p.add_argument("--vocab-size", type=int)
    p.add_argument("--narration-len", type=int)
    p.add_argument("--rho", type=float, help="caption corruption rate")
    p.add_argument("--feature-snr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--camera-radius", type=float)
    p.add_argument("--verbose-captions", action="store_true")
    p.add_argument("-o", "--out")
    p.add_argument("--planted-out")

    p = add("serve", _cmd_serve, "run the preference-study service")
    p.add_argument("--store")
    p.add_argument("--media")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--create-session", help="pairs spec file to register")
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--no-serve",
        action="store_true",
        help="only create the session, do not start the server",
    )

    p = add("tally", _cmd_tally, "win/loss/tie percentages for a session")
    p.add_argument("--store")
    p.add_argument("--session")
    p.add_argument("--policy", choices=("a", "b"))

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return 1
        config = _load_config(args.config)
        return args.func(args, config)
    except SystemExit as exc:
        return int(exc.code or 0)
    except _DATA_ERRORS as exc:
        print(f"bestview {getattr(args, 'command', '')}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
