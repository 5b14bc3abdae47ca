"""Author proficiency profiling over monolingual English text.

Eight metrics per author: normalized type-token ratio, lexical density,
mean age of acquisition, mean word concreteness, word length, sentence
length, parse-tree depth, and clauses per sentence.  Authors split into
high and low code-switching cohorts by how often they mix languages, and
the cohorts are compared metric by metric with rank-sum tests.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

from . import DataError
from .ingest import AuthorIndex, RawPost
from .stats import wilcoxon_rank_sum
from .tokens import Token, lemma, sentences, tokenize
from .trees import ParseTree

logger = logging.getLogger(__name__)

NTTR_WINDOW = 1000
EXPECTED_FUNCTION_WORDS = 426
LOW_COVERAGE = 0.50

# cohort thresholds: post count is strict (over 100, not 100 exactly)
MIN_COHORT_POSTS = 100
HIGH_CS_FRACTION = 0.20
LOW_CS_FRACTION = 0.02

_FUNCTION_WORD_CACHE: dict[Path, frozenset] = {}


@dataclass(frozen=True)
class MetricVector:
    """One author's metric profile.

    Rating metrics carry their lexicon coverage; a metric that could not
    be computed (no parses, nothing matched a lexicon) is None and the
    reason appears in ``flags``.
    """

    nttr: float
    lex_density: float
    mean_aoa: float | None
    word_conc: float | None
    word_length: float
    sent_length: float
    tree_depth: float | None
    num_clauses: float | None
    aoa_matched: int = 0
    aoa_total: int = 0
    conc_matched: int = 0
    conc_total: int = 0
    flags: tuple[str, ...] = ()


METRIC_FIELDS = ("nttr", "lex_density", "mean_aoa", "word_conc",
                 "word_length", "sent_length", "tree_depth", "num_clauses")


@dataclass(frozen=True)
class CohortAssignment:
    author: str
    posts: int
    cs_fraction: float
    cohort: str  # high | low | neither


@dataclass(frozen=True)
class Resources:
    """Immutable lookup resources shared by every author profile."""

    function_words: frozenset
    aoa: Mapping[str, float] = field(default_factory=dict)
    concreteness: Mapping[str, float] = field(default_factory=dict)


class RatingResult(NamedTuple):
    mean: float | None
    matched: int
    total: int

    @property
    def coverage(self) -> float:
        return self.matched / self.total if self.total else 0.0


def load_function_words(path: str | Path | None = None) -> frozenset:
    """Load the function-word list (bundled Koppel-Ordan-style default).

    The bundled list has 426 entries; a replacement list of a different
    size is accepted with a warning, since density values shift with it.
    """
    path = Path(path) if path else Path(__file__).parent / "data" / "function_words.txt"
    cached = _FUNCTION_WORD_CACHE.get(path)
    if cached is not None:
        return cached
    if not path.is_file():
        raise DataError(f"function word list not found: {path}")
    words = frozenset(
        line.strip().lower()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.startswith("#"))
    if len(words) != EXPECTED_FUNCTION_WORDS:
        logger.warning("function word list at %s has %d entries, expected %d",
                       path, len(words), EXPECTED_FUNCTION_WORDS)
    _FUNCTION_WORD_CACHE[path] = words
    return words


def load_rating_lexicon(path: str | Path) -> dict[str, float]:
    """Read a word-rating lexicon: TSV ``word<TAB>rating``, one header line."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"rating lexicon not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    ratings: dict[str, float] = {}
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected word<TAB>rating")
        word, raw = parts
        try:
            rating = float(raw)
        except ValueError:
            raise DataError(
                f"{path}:{lineno}: rating {raw!r} is not a number") from None
        ratings.setdefault(word.strip().lower(), rating)
    if not ratings:
        raise DataError(f"rating lexicon at {path} has no entries")
    return ratings


def _texts(tokens: Iterable[Token | str]) -> list[str]:
    return [t.text if isinstance(t, Token) else t for t in tokens]


def nttr(tokens: Sequence[Token | str], window: int = NTTR_WINDOW) -> float:
    """Type-token ratio averaged over non-overlapping windows.

    Complete windows contribute types/window each; the trailing partial
    window is discarded.  Fewer tokens than one window fall back to a
    single truncated window (types over actual length), logged since the
    value is not comparable to full-window scores.
    """
    texts = _texts(tokens)
    if not texts:
        raise ValueError("cannot compute NTTR of an empty token sequence")
    if len(texts) < window:
        logger.warning("NTTR fallback: %d tokens is less than one %d-token "
                       "window", len(texts), window)
        return len(set(texts)) / len(texts)
    n_windows = len(texts) // window
    ratios = []
    for i in range(n_windows):
        chunk = texts[i * window:(i + 1) * window]
        ratios.append(len(set(chunk)) / window)
    return sum(ratios) / n_windows


def lexical_density(tokens: Sequence[Token | str],
                    function_words: frozenset) -> float:
    """Share of alphabetic tokens that are content words.

    Lowercased comparison; the function-word fraction and this value sum
    to one exactly.
    """
    alpha = [t.lower() for t in _texts(tokens) if t.isalpha()]
    if not alpha:
        raise ValueError("no alphabetic tokens to compute density over")
    content = sum(1 for t in alpha if t not in function_words)
    return content / len(alpha)


def mean_lexicon_rating(tokens: Sequence[Token | str],
                        lexicon: Mapping[str, float],
                        by_type: bool = False) -> RatingResult:
    """Mean lexicon rating over lemmatized tokens, with coverage.

    Out-of-lexicon tokens are skipped and show up only in the coverage
    denominator.  ``by_type`` averages each matched lemma once instead
    of once per occurrence.  Zero matches leave the mean undefined.
    """
    if not lexicon:
        raise ValueError("rating lexicon is empty")
    lemmas = [lemma(t) for t in _texts(tokens)]
    if by_type:
        lemmas = sorted(set(lemmas))
    total = len(lemmas)
    matched = [lexicon[lem] for lem in lemmas if lem in lexicon]
    if not matched:
        logger.warning("no tokens matched the rating lexicon")
        return RatingResult(mean=None, matched=0, total=total)
    return RatingResult(mean=sum(matched) / len(matched),
                        matched=len(matched), total=total)


def surface_lengths(text: str) -> tuple[float, float]:
    """Mean word length (characters) and sentence length (tokens).

    Both means run over alphabetic tokens only, so "Go now." has word
    length 2.5 and sentence length 2.
    """
    alpha = [t.text for t in tokenize(text) if t.text.isalpha()]
    if not alpha:
        raise ValueError("no alphabetic tokens to measure")
    word_length = sum(len(t) for t in alpha) / len(alpha)
    sents = sentences(text)
    per_sentence = [
        sum(1 for t in tokenize(s) if t.text.isalpha()) for s in sents]
    sent_length = sum(per_sentence) / len(per_sentence)
    return word_length, sent_length


def tree_metrics(trees: Sequence[ParseTree]) -> tuple[float, float]:
    """Mean parse depth and mean clause count over a sentence forest."""
    if not trees:
        raise ValueError("no trees to measure")
    depths = [t.depth() for t in trees]
    clauses = [t.clause_count() for t in trees]
    return sum(depths) / len(depths), sum(clauses) / len(clauses)


def split_cohorts(index: AuthorIndex,
                  min_posts: int = MIN_COHORT_POSTS,
                  high_fraction: float = HIGH_CS_FRACTION,
                  low_fraction: float = LOW_CS_FRACTION) -> list[CohortAssignment]:
    """Assign each indexed author to the high or low code-switching cohort.

    High: over ``min_posts`` posts with at least ``high_fraction``
    code-switched.  Low: over ``min_posts`` posts with under
    ``low_fraction`` code-switched.  Everyone else is neither.
    """
    out = []
    for author in index.authors():
        posts = index.post_count(author)
        cs = index.cs_counts.get(author, 0)
        fraction = cs / posts if posts else 0.0
        if posts > min_posts and fraction >= high_fraction:
            cohort = "high"
        elif posts > min_posts and fraction < low_fraction:
            cohort = "low"
        else:
            cohort = "neither"
        out.append(CohortAssignment(author=author, posts=posts,
                                    cs_fraction=fraction, cohort=cohort))
    return out


def profile_author(posts: Sequence[RawPost], resources: Resources,
                   parses: Mapping[str, Sequence[ParseTree]] | None = None,
                   nttr_window: int = NTTR_WINDOW,
                   aoa_by_type: bool = False) -> MetricVector:
    """Compute the full metric vector over an author's posts.

    Posts are concatenated in (timestamp, id) order so every run sees
    the same token stream; only NTTR is sensitive to that order, via its
    window boundaries.  Non-alphabetic tokens are excluded throughout.
    Tree metrics need a parse sidecar and are None without one.
    """
    if not posts:
        raise ValueError("author has no posts to profile")
    ordered = sorted(posts, key=lambda p: (p.created_utc, p.id))
    text = "\n".join(p.body for p in ordered)
    alpha = [t.text for t in tokenize(text) if t.text.isalpha()]
    if not alpha:
        raise ValueError("author text has no alphabetic tokens")
    lowered = [t.lower() for t in alpha]

    flags = []
    if len(lowered) < nttr_window:
        flags.append("nttr_truncated_window")
    nttr_value = nttr(lowered, window=nttr_window)
    density = lexical_density(alpha, resources.function_words)
    word_length, sent_length = surface_lengths(text)

    aoa = mean_lexicon_rating(lowered, resources.aoa, by_type=aoa_by_type) \
        if resources.aoa else RatingResult(None, 0, 0)
    conc = mean_lexicon_rating(lowered, resources.concreteness) \
        if resources.concreteness else RatingResult(None, 0, 0)
    for name, rating in (("aoa", aoa), ("concreteness", conc)):
        if rating.mean is None:
            flags.append(f"{name}_undefined")
        elif rating.coverage < LOW_COVERAGE:
            flags.append(f"{name}_low_coverage")

    depth = clauses = None
    forest = []
    if parses is not None:
        for post in ordered:
            forest.extend(parses.get(post.id, ()))
    if forest:
        depth, clauses = tree_metrics(forest)
    else:
        flags.append("parses_unavailable")

    return MetricVector(
        nttr=nttr_value, lex_density=density,
        mean_aoa=aoa.mean, word_conc=conc.mean,
        word_length=word_length, sent_length=sent_length,
        tree_depth=depth, num_clauses=clauses,
        aoa_matched=aoa.matched, aoa_total=aoa.total,
        conc_matched=conc.matched, conc_total=conc.total,
        flags=tuple(flags))


@dataclass(frozen=True)
class MetricComparison:
    metric: str
    high_mean: float | None
    high_se: float | None
    low_mean: float | None
    low_se: float | None
    p_value: float | None
    n_high: int
    n_low: int
    note: str = ""


def _mean_se(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    mean = sum(values) / len(values)
    if len(values) < 2:
        return mean, None
    return mean, statistics.stdev(values) / math.sqrt(len(values))


def cohort_compare(high: Sequence[MetricVector],
                   low: Sequence[MetricVector]) -> list[MetricComparison]:
    """Per-metric cohort means, standard errors, and rank-sum p-values.

    Authors whose vector lacks a metric drop out of that metric's
    comparison; a p-value needs at least two authors per side and is
    None (with a note) otherwise.
    """
    if not high or not low:
        raise ValueError("both cohorts must be non-empty")
    rows = []
    for metric in METRIC_FIELDS:
        hv = [getattr(v, metric) for v in high if getattr(v, metric) is not None]
        lv = [getattr(v, metric) for v in low if getattr(v, metric) is not None]
        h_mean, h_se = _mean_se(hv)
        l_mean, l_se = _mean_se(lv)
        p = None
        note = ""
        if len(hv) >= 2 and len(lv) >= 2:
            p = wilcoxon_rank_sum(hv, lv).p_value
        elif not hv or not lv:
            note = "metric unavailable in a cohort"
        else:
            note = "p undefined: cohort too small"
        rows.append(MetricComparison(
            metric=metric, high_mean=h_mean, high_se=h_se,
            low_mean=l_mean, low_se=l_se, p_value=p,
            n_high=len(hv), n_low=len(lv), note=note))
    return rows


def _cell(value: float | None) -> str:
    return "" if value is None else format(value, ".6g")


def cohort_report(high: Sequence[MetricVector],
                  low: Sequence[MetricVector]) -> str:
    """CSV rendering of cohort_compare, one row per metric."""
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["metric", "high_mean", "high_se", "low_mean", "low_se",
                     "p_value", "n_high", "n_low", "note"])
    for row in cohort_compare(high, low):
        writer.writerow([row.metric, _cell(row.high_mean), _cell(row.high_se),
                         _cell(row.low_mean), _cell(row.low_se),
                         _cell(row.p_value), row.n_high, row.n_low, row.note])
    return out.getvalue()
