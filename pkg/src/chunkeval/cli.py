"""Command-line entry point.

Subcommands:

* ``evaluate``    — score one system output against references.
* ``dump-chunks`` — write the chunk-table debug dump consumed by the
                    similarity-weighting sidecar.
* ``meta``        — correlate per-system reports with human pairwise
                    judgments (Expected Wins or TrueSkill ranking), and
                    optionally grid-search the trade-off factors.
* ``version``     — print the tool version.

Exit codes: 0 success; 1 I/O or parse failures (with file:line where known);
2 invalid flag combinations or values.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .corpus_io import (
    LineCountMismatch,
    ParseError,
    filter_unchanged_references,
    load_judgments,
    load_weights,
    parse_m2,
    read_parallel,
)
from .chunking import partition, render_dump
from .meta_eval import (
    ConstantInputError,
    GridSearchError,
    RankingScore,
    correlation_against,
    expected_wins,
    grid_search_factors,
    trueskill_rank,
)
from .scoring import (
    CORPUS,
    DisentangledScores,
    EvalConfig,
    EvaluationError,
    SENTENCE,
    TradeOffFactors,
    choose_reference,
    comprehensive,
    evaluate_system,
)
from .weighting import (
    API_KEY_ENV,
    ENDPOINT_ENV,
    FILE,
    LLM,
    LlmClientConfig,
    WeightStrategy,
)


class CliUsageError(ValueError):
    """Bad flag combination or value; maps to exit code 2."""


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, inputs: list[str]) -> None:
    manifest = {
        "tool": "chunkeval",
        "version": __version__,
        "command": command,
        "created": datetime.now(timezone.utc).isoformat(),
        "config": config,
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _load_corpus(args):
    source_text = _read_text(args.src)
    hypothesis_text = _read_text(args.hyp)
    pairs = read_parallel(source_text, hypothesis_text)
    reference_sets = parse_m2(_read_text(args.ref), path=args.ref)
    if len(reference_sets) != len(pairs):
        raise ParseError(
            f"{args.ref} has {len(reference_sets)} sentence blocks but "
            f"{args.src} has {len(pairs)} lines",
            path=None,
        )
    corpus = []
    for idx, ((src, hyp), rs) in enumerate(zip(pairs, reference_sets)):
        if src != rs.source:
            raise ParseError(
                f"sentence {idx}: source tokens in {args.src} differ from the "
                f"M2 S line in {args.ref}"
            )
        corpus.append((rs, hyp))
    return corpus


def _build_strategy(args) -> WeightStrategy:
    if args.weighting == FILE:
        if not args.weights:
            raise CliUsageError("--weighting file requires --weights PATH")
        weight_file = load_weights(_read_text(args.weights), path=args.weights)
        return WeightStrategy(tag=FILE, weight_file=weight_file)
    if args.weighting == LLM:
        try:
            cfg = LlmClientConfig.from_env(
                model=args.llm_model,
                temperature=args.llm_temperature,
                max_retries=args.llm_retries,
                timeout=args.llm_timeout,
                concurrency=args.llm_concurrency,
                request_shape=args.llm_shape,
            )
        except ValueError as exc:
            raise CliUsageError(str(exc)) from exc
        return WeightStrategy(tag=LLM, llm_config=cfg)
    if args.weights:
        raise CliUsageError("--weights is only valid with --weighting file")
    return WeightStrategy(tag=args.weighting)


def _eval_config(args) -> EvalConfig:
    factors = None
    if args.factors:
        try:
            factors = TradeOffFactors.parse(args.factors)
        except ValueError as exc:
            raise CliUsageError(f"bad --factors: {exc}") from exc
    return EvalConfig(
        assumption=args.assumption,
        level=args.level,
        factors=factors,
        weighting=args.weighting,
        exclude_unchanged_refs=args.exclude_unchanged_refs,
        jobs=args.jobs,
    )


def _config_echo(cfg: EvalConfig) -> dict:
    factors = cfg.resolved_factors()
    return {
        "assumption": cfg.assumption,
        "level": cfg.level,
        "weighting": cfg.weighting,
        "factors": list(factors.as_tuple()),
        "exclude_unchanged_refs": cfg.exclude_unchanged_refs,
        "jobs": cfg.jobs,
    }


def cmd_evaluate(args) -> int:
    corpus = _load_corpus(args)
    cfg = _eval_config(args)
    strategy = _build_strategy(args)
    report = evaluate_system(corpus, cfg, strategy.provider())

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (out_dir / "records.jsonl").write_text(
        json.dumps(report.to_record(), sort_keys=True) + "\n", encoding="utf-8"
    )
    inputs = [args.src, args.hyp, args.ref] + ([args.weights] if args.weights else [])
    _write_manifest(out_dir, "evaluate", _config_echo(cfg), inputs)
    sys.stdout.write(report.to_text())
    if strategy.miss_count:
        print(
            f"warning: {strategy.miss_count} weight-file lookups missed (defaulted to 1.0)",
            file=sys.stderr,
        )
    if strategy.llm_warning_count:
        print(
            f"warning: {strategy.llm_warning_count} LLM replies unparseable (defaulted to 3)",
            file=sys.stderr,
        )
    return 0


def cmd_dump_chunks(args) -> int:
    corpus = _load_corpus(args)
    alignments = []
    for rs, hyp in corpus:
        if args.exclude_unchanged_refs:
            rs = filter_unchanged_references(rs)
        ca = partition(rs.source, hyp, rs.references)
        alignments.append((ca, choose_reference(ca)))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_path = out_dir / "chunks.dump"
    dump_path.write_text(render_dump(alignments), encoding="utf-8")
    _write_manifest(
        out_dir,
        "dump-chunks",
        {"exclude_unchanged_refs": args.exclude_unchanged_refs},
        [args.src, args.hyp, args.ref],
    )
    print(str(dump_path))
    return 0


def _parse_record_arg(spec: str) -> tuple[str, Path]:
    if "=" in spec:
        name, _, path = spec.partition("=")
        return name, Path(path)
    path = Path(spec)
    name = path.stem
    if name == "records":  # default evaluate output name; use the run directory
        name = path.resolve().parent.name
    return name, path


def _load_record(path: Path) -> dict:
    last = None
    for line in _read_text(str(path)).splitlines():
        if line.strip():
            last = json.loads(line)
    if last is None:
        raise ParseError("no records found", path=str(path))
    return last


def cmd_meta(args) -> int:
    records: dict[str, dict] = {}
    for spec in args.records:
        name, path = _parse_record_arg(spec)
        records[name] = _load_record(path)

    judgments = load_judgments(_read_text(args.judgments), path=args.judgments)
    for system in records:
        if system not in judgments.systems:
            print(f"error: system {system!r} not present in judgments", file=sys.stderr)
            return 1
    for system in judgments.systems:
        if system not in records:
            print(f"error: no report record given for system {system!r}", file=sys.stderr)
            return 1

    human: RankingScore = (
        expected_wins(judgments) if args.ranking == "ew" else trueskill_rank(judgments)
    )
    if human.undefined:
        print(
            "error: no decisive comparisons for: " + ", ".join(human.undefined),
            file=sys.stderr,
        )
        return 1

    first = next(iter(records.values()))
    level = first.get("level", SENTENCE)
    base_factors = (
        TradeOffFactors.parse(args.factors)
        if args.factors
        else EvalConfig(level=level).resolved_factors()
    )

    def row_for(factors: TradeOffFactors, scores: dict[str, float], label: str) -> dict:
        try:
            gamma = correlation_against(scores, human, "pearson")
            rho = correlation_against(scores, human, "spearman")
        except ConstantInputError:
            gamma = rho = float("nan")
        a1, a2, a3, a4 = factors.as_tuple()
        return {
            "assumption": first.get("assumption"),
            "level": level,
            "weighting": first.get("weighting"),
            "a1": a1,
            "a2": a2,
            "a3": a3,
            "a4": a4,
            "pearson": gamma,
            "spearman": rho,
            "config": label,
        }

    def rescore(factors: TradeOffFactors) -> dict[str, float]:
        out = {}
        for name, rec in records.items():
            scores = DisentangledScores(
                hit=rec["hit"],
                wrong=rec["wrong"],
                under=rec["under"],
                over=rec["over"],
                necessity_weight=0.0,
            )
            out[name] = comprehensive(scores, factors)
        return out

    rows = [row_for(base_factors, {n: r["score"] for n, r in records.items()}, "recorded")]
    if args.search_factors:
        best = grid_search_factors(rescore, human, grid_step=args.grid)
        rows.append(row_for(best, rescore(best), "searched"))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "meta.jsonl").open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")

    header = f"{'config':<10} {'assum':<6} {'level':<9} {'weight':<7} " + \
        f"{'a1':>5} {'a2':>5} {'a3':>5} {'a4':>5} {'pearson':>9} {'spearman':>9}"
    lines = [header]
    for row in rows:
        lines.append(
            f"{row['config']:<10} {row['assumption']:<6} {row['level']:<9} "
            f"{row['weighting']:<7} {row['a1']:>5.2f} {row['a2']:>5.2f} "
            f"{row['a3']:>5.2f} {row['a4']:>5.2f} "
            f"{row['pearson']:>9.4f} {row['spearman']:>9.4f}"
        )
    table = "\n".join(lines) + "\n"
    (out_dir / "meta.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return 0


def cmd_version(_args) -> int:
    print(f"chunkeval {__version__}")
    return 0


def _add_corpus_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--src", required=True, help="source sentences, one per line")
    sub.add_argument("--hyp", required=True, help="system hypotheses, parallel to --src")
    sub.add_argument("--ref", required=True, help="references in M2 format")
    sub.add_argument(
        "--exclude-unchanged-refs",
        action="store_true",
        help="drop references identical to the source (kept if all would drop)",
    )
    sub.add_argument("--out", default=".", help="output directory (default: .)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chunkeval",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser(
        "evaluate",
        help="score a system against references",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    _add_corpus_options(p_eval)
    p_eval.add_argument(
        "--assumption",
        choices=["dep", "ind"],
        default="ind",
        help="single best reference (dep) or any reference per column (ind); default ind",
    )
    p_eval.add_argument(
        "--level",
        choices=[CORPUS, SENTENCE],
        default=SENTENCE,
        help="pool counts over the corpus, or average per-sentence scores; default sentence",
    )
    p_eval.add_argument(
        "--weighting",
        choices=["unit", "length", "file", "llm"],
        default="unit",
        help="per-column edit weights; default unit",
    )
    p_eval.add_argument("--weights", help="weight file for --weighting file")
    p_eval.add_argument(
        "--factors",
        help="a1,a2,a3,a4 on the open simplex; defaults: corpus 0.45,0.35,0.15,0.05; "
        "sentence 0.35,0.25,0.20,0.20",
    )
    p_eval.add_argument("--jobs", type=int, default=1, help="parallel sentence workers")
    p_eval.add_argument("--llm-model", default="llama-2-7b", help="model name sent to the endpoint")
    p_eval.add_argument(
        "--llm-temperature", type=float, default=0.1, help="sampling temperature (default 0.1)"
    )
    p_eval.add_argument("--llm-shape", choices=["chat", "completion"], default="chat")
    p_eval.add_argument("--llm-retries", type=int, default=2)
    p_eval.add_argument("--llm-timeout", type=float, default=30.0)
    p_eval.add_argument("--llm-concurrency", type=int, default=4)
    p_eval.epilog = (
        f"LLM weighting reads the endpoint from ${ENDPOINT_ENV} and the API key "
        f"from ${API_KEY_ENV}."
    )
    p_eval.set_defaults(func=cmd_evaluate)

    p_dump = sub.add_parser(
        "dump-chunks",
        help="write the chunk table consumed by the similarity sidecar",
    )
    _add_corpus_options(p_dump)
    p_dump.set_defaults(func=cmd_dump_chunks)

    p_meta = sub.add_parser(
        "meta",
        help="correlate system reports against human pairwise judgments",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    p_meta.add_argument(
        "--records",
        nargs="+",
        required=True,
        metavar="NAME=PATH",
        help="per-system records.jsonl files; bare PATH uses the file stem\n"
        "(or its directory name for the default 'records.jsonl')",
    )
    p_meta.add_argument("--judgments", required=True, help="pairwise judgment file")
    p_meta.add_argument(
        "--ranking",
        choices=["ew", "ts"],
        default="ew",
        help="human ranking method: expected wins or TrueSkill; default ew",
    )
    p_meta.add_argument("--search-factors", action="store_true", help="grid-search a1..a4")
    p_meta.add_argument("--grid", type=float, default=0.05, help="grid step (default 0.05)")
    p_meta.add_argument(
        "--factors", help="label the recorded scores with these factors (a1,a2,a3,a4)"
    )
    p_meta.add_argument("--out", default=".", help="output directory (default: .)")
    p_meta.set_defaults(func=cmd_meta)

    p_version = sub.add_parser("version", help="print version and exit")
    p_version.set_defaults(func=cmd_version)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliUsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, LineCountMismatch, EvaluationError, GridSearchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
