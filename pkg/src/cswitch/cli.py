"""Command line pipeline: corpus building, three analyses, and reporting.

Every command is a pure function of (config file, input files, seed):
rerunning with the same inputs produces byte-identical outputs, which
is why nothing here writes timestamps, machine names, or dict-ordered
JSON.  Commands validate their full configuration before the first
output file is opened, so a failed run never leaves a half-written
directory behind.

Exit codes: 0 success, 1 configuration problems, 2 missing or
malformed data.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import ConfigError, DataError, PipelineError
from .config import PipelineConfig, load_config, validate
from .fetch import fetch_dump
from .filters import (CodeSwitched, FilterLexicons, Monolingual,
                      classify_cs, default_gazetteer,
                      default_translation_terms, load_gazetteer,
                      load_ner_sidecar, load_term_file)
from .informality import (compare_cohort_paired, extract_markers,
                          load_parallel_corpus, save_markers, score_text)
from .ingest import (RawPost, corpus_report, index_authors, load_posts,
                     precision_report, read_annotations,
                     select_common_authors)
from .langid import load_default_profiles
from .proficiency import (METRIC_FIELDS, Resources, cohort_report,
                          load_function_words, load_rating_lexicon,
                          profile_author, split_cohorts)
from .stats import TestResult, kde_gaussian, wilcoxon_rank_sum
from .topics import (export_top_terms, load_pos_sidecar, load_rank_list,
                     partition_experiment, preprocess, save_model,
                     select_topic_count)
from .trees import read_parse_sidecar

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------- plumbing

def _require_path(config: PipelineConfig, name: str) -> Path:
    value = getattr(config, name)
    if value is None:
        raise ConfigError(f"config key {name!r} must be set for this command")
    path = Path(value)
    if not path.is_file():
        raise DataError(f"{name} file not found: {path}")
    return path


def _optional_path(config: PipelineConfig, name: str) -> Path | None:
    if getattr(config, name) is None:
        return None
    return _require_path(config, name)


def _stage_file(out_dir: Path, filename: str, producer: str) -> Path:
    path = out_dir / filename
    if not path.is_file():
        raise DataError(f"{path} not found; run {producer} first")
    return path


def _read_jsonl(path: Path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                raise DataError(f"{path}:{lineno}: not valid JSON") from None
            if not isinstance(record, dict):
                raise DataError(f"{path}:{lineno}: not a JSON object")
            records.append(record)
    return records


def _row_post(row: dict, path: Path) -> RawPost:
    try:
        return RawPost(id=row["id"], author=row["author"],
                       subreddit=row["subreddit"],
                       created_utc=int(row["created_utc"]), body=row["body"])
    except (KeyError, TypeError, ValueError):
        raise DataError(f"{path}: corpus row is missing required "
                        "post fields") from None


def _jsonl(records: Sequence[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n"
                   for r in records)


def _fmt(value) -> str:
    """Stable cell text: shortest float repr, empty string for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    for row in rows:
        writer.writerow([_fmt(cell) for cell in row])
    return buf.getvalue()


def _test_csv(result: TestResult) -> str:
    return _csv([
        ["statistic", "z", "p_value", "method", "mode", "n1", "n2", "n",
         "zeros_dropped", "effect_size_r", "degenerate"],
        [result.statistic, result.z, result.p_value, result.method,
         result.mode, result.n1, result.n2, result.n, result.zeros_dropped,
         result.effect_size_r, result.degenerate],
    ])


def _flush(out_dir: Path, outputs: dict[str, str]) -> None:
    """Write every output at once, after all computation succeeded.

    newline='' keeps csv-module CRLF line endings byte-exact instead of
    letting the platform rewrite them.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, payload in outputs.items():
        with open(out_dir / name, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)


# ---------------------------------------------------------------- commands

def _load_lexicons(config: PipelineConfig) -> FilterLexicons:
    translation_path = _optional_path(config, "translation_terms")
    translation = (load_term_file(translation_path) if translation_path
                   else default_translation_terms())
    gazetteer_path = _optional_path(config, "gazetteer")
    gazetteer = (load_gazetteer(gazetteer_path) if gazetteer_path
                 else default_gazetteer())
    ner_path = _optional_path(config, "ner_sidecar")
    ner = load_ner_sidecar(ner_path) if ner_path else None
    return FilterLexicons(translation, gazetteer, ner)


def cmd_build_corpus(config: PipelineConfig, args) -> int:
    dump_path = _require_path(config, "dump")
    languages = tuple(dict.fromkeys(("en",) + config.partners))
    profiles = load_default_profiles(languages)
    lexicons = _load_lexicons(config)

    reader = load_posts(dump_path)
    allow = set(config.subreddits)
    outside_allowlist = 0
    tally: Counter = Counter()
    cs_rows: list[dict] = []
    mono_rows: list[dict] = []
    decision_rows: list[dict] = []
    report_entries = []
    for post in reader:
        if allow and post.subreddit not in allow:
            outside_allowlist += 1
            continue
        decision, trace, final_text = classify_cs(
            post, profiles, lexicons, min_share=config.min_share,
            min_tokens=config.min_post_tokens,
            max_quote_tokens=config.max_quote_tokens)
        record = {"id": post.id, "author": post.author,
                  "subreddit": post.subreddit}
        removals: Counter = Counter(r.kind for r in trace.removals)
        if removals:
            record["removals"] = dict(removals)
        if trace.warnings:
            record["warnings"] = list(trace.warnings)
        if isinstance(decision, CodeSwitched):
            record["decision"] = "code_switched"
            proportions = {lang: float(share)
                           for lang, share in decision.proportions.items()}
            record["primary_lang"] = decision.primary_lang
            record["other_lang"] = decision.other_lang
            record["proportions"] = proportions
            cs_rows.append({"id": post.id, "author": post.author,
                            "subreddit": post.subreddit,
                            "created_utc": post.created_utc,
                            "body": final_text,
                            "primary_lang": decision.primary_lang,
                            "other_lang": decision.other_lang,
                            "proportions": proportions})
            report_entries.append((post, decision, final_text))
        elif isinstance(decision, Monolingual):
            record["decision"] = "monolingual"
            record["lang"] = decision.lang
            if decision.lang == "en":
                mono_rows.append({"id": post.id, "author": post.author,
                                  "subreddit": post.subreddit,
                                  "created_utc": post.created_utc,
                                  "body": final_text, "lang": "en"})
        else:
            record["decision"] = "rejected"
            record["reason"] = decision.reason
        tally[record["decision"]] += 1
        decision_rows.append(record)

    _flush(config.out_dir, {
        "cs_corpus.jsonl": _jsonl(cs_rows),
        "mono_corpus.jsonl": _jsonl(mono_rows),
        "decisions.jsonl": _jsonl(decision_rows),
        "report.csv": corpus_report(report_entries),
    })
    print(f"posts: {reader.loaded} loaded, {reader.skipped} malformed, "
          f"{outside_allowlist} outside the subreddit allowlist")
    print(f"decisions: {tally['code_switched']} code-switched, "
          f"{tally['monolingual']} monolingual, {tally['rejected']} rejected")
    print(f"wrote cs_corpus.jsonl, mono_corpus.jsonl, decisions.jsonl, "
          f"report.csv to {config.out_dir}")
    return 0


def _corpus_triples(out_dir: Path) -> list[tuple[str, str, str]]:
    cs_path = _stage_file(out_dir, "cs_corpus.jsonl", "build-corpus")
    mono_path = _stage_file(out_dir, "mono_corpus.jsonl", "build-corpus")
    triples = []
    for path, source in ((cs_path, "cs"), (mono_path, "mono")):
        for row in _read_jsonl(path):
            post = _row_post(row, path)
            triples.append((post.id, post.body, source))
    return triples


def cmd_topics(config: PipelineConfig, args) -> int:
    rank_path = _require_path(config, "rank_list")
    pos_path = _optional_path(config, "pos_sidecar")
    triples = _corpus_triples(config.out_dir)

    ranks = load_rank_list(rank_path)
    sidecar = load_pos_sidecar(pos_path) if pos_path else None
    docs, vocab, dropped = preprocess(triples, ranks, pos_sidecar=sidecar,
                                      rank_cutoff=config.rank_cutoff)
    if dropped:
        logger.info("%d posts left empty by preprocessing", dropped)
    cs_docs = [d for d in docs if d.source == "cs"]
    mono_docs = [d for d in docs if d.source == "mono"]
    for label, subset in (("code-switched", cs_docs),
                          ("monolingual", mono_docs)):
        if not subset:
            raise PipelineError(f"the {label} corpus has no usable documents "
                                "after preprocessing")
    if config.t_max > len(vocab.terms):
        raise PipelineError(
            f"vocabulary of {len(vocab.terms)} terms cannot support "
            f"{config.t_max} topics; shrink the topic range or relax "
            "preprocessing")

    t_range = range(config.t_min, config.t_max + 1)
    lda_kwargs = dict(alpha=config.lda_alpha, beta=config.lda_beta,
                      iterations=config.lda_iterations)
    t_cs, model_cs = select_topic_count(
        cs_docs, vocab, t_range, seeds=config.lda_seeds,
        coherence_top_n=config.coherence_top_n, **lda_kwargs)
    t_mono, model_mono = select_topic_count(
        mono_docs, vocab, t_range, seeds=config.lda_seeds,
        coherence_top_n=config.coherence_top_n, **lda_kwargs)
    inter, intra, p_value = partition_experiment(
        cs_docs, mono_docs, vocab, n_partitions=config.n_partitions,
        seed=config.seed, n_topics=t_cs, mode=config.similarity_mode,
        top_terms_n=config.top_terms_n, **lda_kwargs)

    similarity_rows = [["partition", "inter", "intra"]]
    similarity_rows += [[i + 1, inter[i], intra[i]]
                        for i in range(len(inter))]
    outputs = {
        "selection.csv": _csv([["corpus", "n_topics", "coherence"],
                               ["cs", t_cs, model_cs.coherence],
                               ["mono", t_mono, model_mono.coherence]]),
        "topics_cs.csv": export_top_terms(model_cs, config.coherence_top_n),
        "topics_mono.csv": export_top_terms(model_mono, config.coherence_top_n),
        "similarity.csv": _csv(similarity_rows),
    }
    if p_value is not None:
        outputs["similarity_test.csv"] = _test_csv(
            wilcoxon_rank_sum(inter, intra))
    else:
        logger.warning("one partition cannot support a rank test; "
                       "similarity_test.csv not written")
    _flush(config.out_dir, outputs)
    save_model(model_cs, config.out_dir / "model_cs.npz")
    save_model(model_mono, config.out_dir / "model_mono.npz")

    print(f"selected {t_cs} topics (code-switched), {t_mono} (monolingual) "
          f"over {len(cs_docs)}+{len(mono_docs)} documents, "
          f"{len(vocab.terms)} terms")
    print(f"partition experiment: inter mean {np.mean(inter):.4f}, "
          f"intra mean {np.mean(intra):.4f}, "
          f"p {'n/a' if p_value is None else format(p_value, '.4g')}")
    return 0


def cmd_style(config: PipelineConfig, args) -> int:
    informal_path = _require_path(config, "parallel_informal")
    formal_path = _require_path(config, "parallel_formal")
    cs_path = _stage_file(config.out_dir, "cs_corpus.jsonl", "build-corpus")
    mono_path = _stage_file(config.out_dir, "mono_corpus.jsonl", "build-corpus")

    informal, formal = load_parallel_corpus(informal_path, formal_path)
    lexicon = extract_markers(informal, formal,
                              threshold=config.marker_threshold,
                              alpha0=config.alpha0)
    if not len(lexicon):
        logger.warning("no informality markers scored at or under z = %s",
                       config.marker_threshold)

    cs_posts = [_row_post(r, cs_path) for r in _read_jsonl(cs_path)]
    mono_posts = [_row_post(r, mono_path) for r in _read_jsonl(mono_path)]
    common = select_common_authors(cs_posts, mono_posts,
                                   min_tokens=config.min_author_tokens)
    if not common:
        raise DataError(
            "no author has a post of at least "
            f"{config.min_author_tokens} tokens in both corpora")

    by_author: dict[str, dict[str, list[RawPost]]] = {}
    for side, posts in (("cs", cs_posts), ("mono", mono_posts)):
        for post in posts:
            by_author.setdefault(post.author, {"cs": [], "mono": []})
            by_author[post.author][side].append(post)

    def author_text(posts: list[RawPost]) -> str:
        ordered = sorted(posts, key=lambda p: (p.created_utc, p.id))
        return "\n".join(p.body for p in ordered)

    pairs: list[tuple[float, float]] = []
    frequency_rows = [["author", "cs_frequency", "mono_frequency"]]
    for author in sorted(common):
        freq_cs = score_text(author_text(by_author[author]["cs"]), lexicon)
        freq_mono = score_text(author_text(by_author[author]["mono"]), lexicon)
        pairs.append((freq_cs, freq_mono))
        frequency_rows.append([author, freq_cs, freq_mono])

    result = compare_cohort_paired(pairs)

    outputs = {
        "informality.csv": _csv(frequency_rows),
        "style_test.csv": _test_csv(result),
    }
    kde_text = _kde_csv([p[0] for p in pairs], [p[1] for p in pairs])
    if kde_text is not None:
        outputs["kde.csv"] = kde_text
    _flush(config.out_dir, outputs)
    save_markers(lexicon, config.out_dir / "markers.tsv")

    print(f"{len(lexicon)} informality markers at z <= "
          f"{config.marker_threshold}")
    print(f"paired authors: {len(pairs)}; signed-rank p = "
          f"{result.p_value:.4g}"
          + (" (degenerate: no nonzero differences)"
             if result.degenerate else ""))
    return 0


def _kde_csv(cs_values: list[float], mono_values: list[float]) -> str | None:
    """Both cohorts' densities on one shared grid; None when degenerate.

    A cohort whose frequencies have no spread cannot carry a density
    estimate; its column is left empty rather than sinking the file.
    """
    lo = min(cs_values + mono_values)
    hi = max(cs_values + mono_values)
    if hi == lo:
        logger.warning("all informality frequencies identical; "
                       "kde.csv not written")
        return None
    pad = 0.1 * (hi - lo)
    grid = np.linspace(lo - pad, hi + pad, 256)
    columns = []
    for label, values in (("cs", cs_values), ("mono", mono_values)):
        try:
            columns.append(kde_gaussian(values, grid=grid)[1])
        except ValueError as exc:
            logger.warning("%s density unavailable (%s); column left empty",
                           label, exc)
            columns.append(None)
    if all(column is None for column in columns):
        return None
    rows = [["x", "cs_density", "mono_density"]]
    for i in range(len(grid)):
        rows.append([float(grid[i])]
                    + [None if col is None else float(col[i])
                       for col in columns])
    return _csv(rows)


def cmd_proficiency(config: PipelineConfig, args) -> int:
    dump_path = _require_path(config, "dump")
    decisions_path = _stage_file(config.out_dir, "decisions.jsonl",
                                 "build-corpus")
    function_words = load_function_words(_optional_path(config,
                                                        "function_words"))
    aoa_path = _optional_path(config, "aoa_lexicon")
    conc_path = _optional_path(config, "concreteness_lexicon")
    resources = Resources(
        function_words=function_words,
        aoa=load_rating_lexicon(aoa_path) if aoa_path else {},
        concreteness=load_rating_lexicon(conc_path) if conc_path else {})
    parse_path = _optional_path(config, "parse_sidecar")
    parses = read_parse_sidecar(parse_path) if parse_path else None

    decided: dict[str, str] = {}
    cs_ids: set[str] = set()
    mono_en_ids: set[str] = set()
    for record in _read_jsonl(decisions_path):
        try:
            post_id, decision = record["id"], record["decision"]
        except KeyError:
            raise DataError(f"{decisions_path}: decision record without "
                            "id and decision fields") from None
        decided[post_id] = decision
        if decision == "code_switched":
            cs_ids.add(post_id)
        elif decision == "monolingual" and record.get("lang") == "en":
            mono_en_ids.add(post_id)

    posts_by_id = {post.id: post for post in load_posts(dump_path)
                   if post.id in decided}
    missing = len(decided) - len(posts_by_id)
    if missing:
        raise DataError(f"decision log references {missing} posts absent "
                        f"from {dump_path}; rerun build-corpus against the "
                        "current dump")

    index = index_authors(posts_by_id.values())
    for author, ids in index.posts.items():
        index.cs_counts[author] = sum(1 for i in ids if i in cs_ids)
    assignments = split_cohorts(index, min_posts=config.min_cohort_posts,
                                high_fraction=config.high_cs_fraction,
                                low_fraction=config.low_cs_fraction)

    cohort_rows = [["author", "posts", "cs_fraction", "cohort"]]
    cohort_rows += [[a.author, a.posts, a.cs_fraction, a.cohort]
                    for a in assignments]

    vectors: dict[str, list] = {"high": [], "low": []}
    metric_rows = [["author", "cohort", *METRIC_FIELDS,
                    "aoa_matched", "aoa_total", "conc_matched", "conc_total",
                    "flags"]]
    for assignment in assignments:
        if assignment.cohort == "neither":
            continue
        author = assignment.author
        posts = [posts_by_id[i] for i in index.posts[author]
                 if i in mono_en_ids]
        if not posts:
            logger.warning("author %s has no monolingual English posts; "
                           "not profiled", author)
            continue
        try:
            profile = profile_author(posts, resources, parses)
        except ValueError as exc:
            logger.warning("author %s not profiled: %s", author, exc)
            continue
        vectors[assignment.cohort].append(profile)
        metric_rows.append(
            [author, assignment.cohort]
            + [getattr(profile, field) for field in METRIC_FIELDS]
            + [profile.aoa_matched, profile.aoa_total,
               profile.conc_matched, profile.conc_total,
               ";".join(profile.flags)])

    for cohort in ("high", "low"):
        if not vectors[cohort]:
            bound = (f"at least {config.high_cs_fraction}" if cohort == "high"
                     else f"under {config.low_cs_fraction}")
            raise DataError(
                f"no profilable authors in the {cohort} cohort: needs more "
                f"than {config.min_cohort_posts} posts with a code-switched "
                f"share {bound}, and at least one monolingual English post")

    _flush(config.out_dir, {
        "cohorts.csv": _csv(cohort_rows),
        "metrics.csv": _csv(metric_rows),
        "comparison.csv": cohort_report(vectors["high"], vectors["low"]),
    })
    print(f"cohorts: {len(vectors['high'])} high, {len(vectors['low'])} low "
          f"out of {len(assignments)} authors")
    print(f"wrote cohorts.csv, metrics.csv, comparison.csv to "
          f"{config.out_dir}")
    return 0


def cmd_report(config: PipelineConfig, args) -> int:
    decisions_path = _stage_file(config.out_dir, "decisions.jsonl",
                                 "build-corpus")
    records = _read_jsonl(decisions_path)
    tally = Counter(r.get("decision") for r in records)
    reasons = Counter(r.get("reason") for r in records
                      if r.get("decision") == "rejected")
    print(f"posts decided: {len(records)}")
    for kind in ("code_switched", "monolingual", "rejected"):
        print(f"  {kind}: {tally.get(kind, 0)}")
    for reason in sorted(reasons, key=str):
        print(f"    {reason}: {reasons[reason]}")

    report_path = config.out_dir / "report.csv"
    if report_path.is_file():
        print()
        text = report_path.read_text(encoding="utf-8")
        print(text.replace("\r\n", "\n"), end="")

    if config.annotations is not None:
        annotations = read_annotations(_require_path(config, "annotations"))
        pairs_by_post = {r["id"]: r["primary_lang"] for r in records
                         if r.get("decision") == "code_switched"}
        print()
        print(precision_report(pairs_by_post, annotations)
              .replace("\r\n", "\n"), end="")
    return 0


def cmd_fetch(config: PipelineConfig, args) -> int:
    if config.fetch_url is None:
        raise ConfigError("config key 'fetch_url' must be set for fetch")
    if config.dump is None:
        raise ConfigError("config key 'dump' must be set for fetch "
                          "(it names the destination file)")
    max_posts = (args.max_posts if args.max_posts is not None
                 else config.fetch_max_posts)
    dump_path = Path(config.dump)
    if dump_path.parent != Path():
        dump_path.parent.mkdir(parents=True, exist_ok=True)
    written = fetch_dump(config.fetch_url, args.subreddit, dump_path,
                         after=args.after, before=args.before,
                         page_size=config.fetch_page_size,
                         max_posts=max_posts)
    print(f"fetched {written} posts from r/{args.subreddit} "
          f"into {dump_path}")
    return 0


# ---------------------------------------------------------------- wiring

_COMMANDS = {
    "build-corpus": cmd_build_corpus,
    "topics": cmd_topics,
    "style": cmd_style,
    "proficiency": cmd_proficiency,
    "report": cmd_report,
    "fetch": cmd_fetch,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cswitch",
        description="Curate code-switched forum corpora and run the "
                    "topic, register, and proficiency analyses.")
    parser.add_argument("--verbose", action="store_true",
                        help="log at INFO instead of WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path,
                       help="pipeline INI file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed")
        p.add_argument("--out", type=Path, default=None,
                       help="override the configured output directory")
        return p

    command("build-corpus",
            "filter a dump into code-switched and monolingual corpora")
    command("topics", "fit topic models and run the partition experiment")
    command("style",
            "extract informality markers and compare per-author registers")
    command("proficiency",
            "profile high and low code-switching author cohorts")
    command("report", "print a summary of a finished corpus build")
    fetch = command("fetch", "download a subreddit dump from a search API")
    fetch.add_argument("--subreddit", required=True,
                       help="subreddit to download")
    fetch.add_argument("--after", type=int, default=None,
                       help="only posts strictly after this timestamp")
    fetch.add_argument("--before", type=int, default=None,
                       help="only posts strictly before this timestamp")
    fetch.add_argument("--max-posts", type=int, default=None,
                       dest="max_posts", help="stop after this many posts")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = validate(replace(config, seed=args.seed))
        if args.out is not None:
            config = replace(config, out_dir=args.out)
        return _COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
