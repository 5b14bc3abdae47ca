"""Informal-style markers via log-odds with an informative Dirichlet prior.

Marker discovery contrasts an informal corpus against a formal one
(Monroe et al.'s weighted log-odds), keeps the terms that lean hardest
informal, and the resulting lexicon then scores any author's text by the
fraction of its tokens that are markers.  Scores from code-switched and
monolingual text of the same authors are compared pairwise downstream.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import DataError, PipelineError
from .stats import TestResult, wilcoxon_signed_rank
from .tokens import Token, token_texts

logger = logging.getLogger(__name__)

DEFAULT_ALPHA0 = 1000.0
DEFAULT_THRESHOLD = -5.0
MIN_COHORT_PAIRS = 6


@dataclass(frozen=True)
class TermCounts:
    """Bag of term frequencies plus the token count they came from."""

    counts: Mapping[str, int]
    total: int

    def count(self, term: str) -> int:
        return self.counts.get(term, 0)


@dataclass(frozen=True)
class MarkerLexicon:
    """Informality markers with their z-scores, ascending (most informal first)."""

    entries: tuple[tuple[str, float], ...]
    threshold: float
    terms: frozenset = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "terms",
                           frozenset(term for term, _ in self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, term: str) -> bool:
        return term in self.terms


def _texts(tokens: Iterable[Token | str]) -> list[str]:
    return [t.text if isinstance(t, Token) else t for t in tokens]


def count_terms(tokens: Iterable[Token | str]) -> TermCounts:
    """Tally lowercased token texts.

    Case is folded so that capitalized and lowercase spellings pool into
    one term; punctuation tokens count like any other, since several
    markers ("!", "...") are punctuation.
    """
    tally = Counter(t.lower() for t in _texts(tokens))
    return TermCounts(counts=dict(tally), total=sum(tally.values()))


def pool_counts(a: TermCounts, b: TermCounts) -> TermCounts:
    merged = Counter(a.counts)
    merged.update(b.counts)
    return TermCounts(counts=dict(merged), total=a.total + b.total)


def log_odds_dirichlet(counts_a: TermCounts, counts_b: TermCounts,
                       prior: TermCounts, alpha0: float = DEFAULT_ALPHA0,
                       standardize: bool = True) -> dict[str, float]:
    """Score every term of the union vocabulary for corpus-a leaning.

    For each term w, with pseudo-counts alpha_w = alpha0 * prior(w) /
    prior_total, the log-odds difference is

        delta_w = log[(y_w^a + alpha_w) / (n^a + alpha0 - y_w^a - alpha_w)]
                - log[(y_w^b + alpha_w) / (n^b + alpha0 - y_w^b - alpha_w)]

    and the returned score is delta_w / sigma_w with sigma_w^2 =
    1/(y_w^a + alpha_w) + 1/(y_w^b + alpha_w), or raw delta_w when
    ``standardize`` is off.  Positive scores lean toward corpus a,
    negative toward corpus b.  Terms missing from the prior get a
    pseudo-count floor of one so alpha_w never vanishes.

    Swapping the corpora negates every score exactly: both directions
    evaluate the same two logarithms and the same symmetric variance.
    """
    if alpha0 <= 0:
        raise ValueError(f"alpha0 must be positive, got {alpha0}")
    vocab = set(counts_a.counts) | set(counts_b.counts) | set(prior.counts)
    effective = {w: prior.count(w) or 1 for w in vocab}
    prior_total = sum(effective.values())
    n_a = float(counts_a.total)
    n_b = float(counts_b.total)
    scores = {}
    for w in vocab:
        aw = alpha0 * effective[w] / prior_total
        ya = counts_a.count(w)
        yb = counts_b.count(w)
        term_a = math.log((ya + aw) / (n_a + alpha0 - ya - aw))
        term_b = math.log((yb + aw) / (n_b + alpha0 - yb - aw))
        delta = term_a - term_b
        if not standardize:
            scores[w] = delta
            continue
        sigma2 = 1.0 / (ya + aw) + 1.0 / (yb + aw)
        scores[w] = delta / math.sqrt(sigma2)
    return scores


def extract_markers(informal: TermCounts, formal: TermCounts,
                    threshold: float = DEFAULT_THRESHOLD,
                    alpha0: float = DEFAULT_ALPHA0) -> MarkerLexicon:
    """Keep terms whose formal-vs-informal z-score is at most ``threshold``.

    The comparison runs with the formal corpus as side a and the pooled
    counts of both corpora as the prior, so z <= threshold picks out the
    strongly informal-leaning terms.  Entries come back sorted ascending
    by z (term as tie-break), most informal first.
    """
    if informal.total == 0 or formal.total == 0:
        raise ValueError("marker extraction needs two non-empty corpora")
    prior = pool_counts(informal, formal)
    scores = log_odds_dirichlet(formal, informal, prior, alpha0=alpha0)
    kept = sorted(((term, z) for term, z in scores.items() if z <= threshold),
                  key=lambda item: (item[1], item[0]))
    return MarkerLexicon(entries=tuple(kept), threshold=threshold)


def save_markers(lexicon: MarkerLexicon, path: str | Path) -> None:
    lines = [f"# threshold: {lexicon.threshold!r}"]
    lines += [f"{term}\t{z!r}" for term, z in lexicon.entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_markers(path: str | Path) -> MarkerLexicon:
    """Read a marker lexicon from TSV (term<TAB>zscore, ascending)."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"marker lexicon not found: {path}")
    threshold = None
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            _, _, rest = line.partition("threshold:")
            if rest:
                threshold = float(rest)
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected term<TAB>zscore")
        try:
            entries.append((parts[0], float(parts[1])))
        except ValueError:
            raise DataError(f"{path}:{lineno}: zscore {parts[1]!r} "
                            "is not a number") from None
    if threshold is None:
        # legacy files carry no header; the weakest stored score bounds them
        threshold = max((z for _, z in entries), default=DEFAULT_THRESHOLD)
    return MarkerLexicon(entries=tuple(entries), threshold=threshold)


def informality_frequency(tokens: Sequence[Token | str],
                          markers: MarkerLexicon) -> float:
    """Fraction of the author's tokens that are informality markers.

    Counting is a bag operation, so the result does not depend on the
    order posts were concatenated in.
    """
    texts = _texts(tokens)
    if not texts:
        raise ValueError("cannot score an empty token sequence")
    hits = sum(1 for t in texts if t.lower() in markers.terms)
    return hits / len(texts)


def score_text(text: str, markers: MarkerLexicon) -> float:
    return informality_frequency(token_texts(text), markers)


def compare_cohort_paired(
        per_author: Sequence[tuple[float, float]]) -> TestResult:
    """Paired signed-rank test on per-author (freq_cs, freq_mono) scores.

    Delegates to the in-repo Wilcoxon signed-rank implementation; the
    returned result carries |z|/sqrt(N) as the within-subjects effect
    size and flags the all-differences-zero case as degenerate.
    """
    if len(per_author) < MIN_COHORT_PAIRS:
        raise PipelineError(
            f"paired comparison needs at least {MIN_COHORT_PAIRS} authors, "
            f"got {len(per_author)}")
    cs = [pair[0] for pair in per_author]
    mono = [pair[1] for pair in per_author]
    return wilcoxon_signed_rank(cs, mono)


def load_parallel_corpus(informal_path: str | Path,
                         formal_path: str | Path) -> tuple[TermCounts, TermCounts]:
    """Count terms of an aligned informal/formal sentence-pair corpus.

    Each file holds one sentence per line, UTF-8, line i of one file
    aligned with line i of the other; a length mismatch means the files
    do not belong together.
    """
    sides = []
    lengths = []
    for path in (Path(informal_path), Path(formal_path)):
        if not path.is_file():
            raise DataError(f"parallel corpus file not found: {path}")
        lines = path.read_text(encoding="utf-8").splitlines()
        lengths.append(len(lines))
        tokens: list[str] = []
        for line in lines:
            tokens.extend(token_texts(line))
        sides.append(count_terms(tokens))
    if lengths[0] != lengths[1]:
        raise DataError(
            f"parallel corpus out of alignment: {lengths[0]} informal lines "
            f"vs {lengths[1]} formal lines")
    return sides[0], sides[1]
