"""Forum dump reading, admissibility filters, and corpus reports.

Dumps are JSON Lines: one object per line with ``id``, ``author``,
``subreddit``, ``created_utc``, ``body`` and optionally ``parent_id``.
Unknown keys are ignored; malformed lines are skipped with a warning and
counted, never silently dropped.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from . import DataError
from .tokens import count_tokens

logger = logging.getLogger(__name__)

MIN_POST_TOKENS = 5
DEFAULT_MIN_AUTHOR_TOKENS = 50

LANGUAGE_NAMES = {
    "en": "English", "el": "Greek", "ro": "Romanian",
    "tl": "Tagalog", "id": "Indonesian", "ru": "Russian",
}


@dataclass(frozen=True)
class RawPost:
    id: str
    author: str
    subreddit: str
    created_utc: int
    body: str
    parent_id: str | None = None


def language_pair_label(partner: str) -> str:
    """Display label for an English-X pair, e.g. "English-Greek"."""
    return f"English-{LANGUAGE_NAMES.get(partner, partner)}"


class DumpReader:
    """Single-pass iterator over a dump file.

    ``skipped`` and ``loaded`` are live counters; read them after
    iteration finishes.  Duplicate ids violate the dump contract and are
    skipped like malformed lines.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.is_file():
            raise DataError(f"dump file not found: {self.path}")
        self.skipped = 0
        self.loaded = 0
        self._seen_ids: set[str] = set()

    def __iter__(self) -> Iterator[RawPost]:
        with open(self.path, encoding="utf-8", errors="replace") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                post = self._parse(line, lineno)
                if post is None:
                    self.skipped += 1
                    continue
                self.loaded += 1
                yield post

    def _parse(self, line: str, lineno: int) -> RawPost | None:
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            logger.warning("%s:%d: bad JSON (%s), line skipped",
                           self.path.name, lineno, exc.msg)
            return None
        if not isinstance(record, dict):
            logger.warning("%s:%d: not an object, line skipped",
                           self.path.name, lineno)
            return None
        try:
            post_id = record["id"]
            author = record["author"]
            subreddit = record["subreddit"]
            created = record["created_utc"]
            body = record["body"]
        except KeyError as exc:
            logger.warning("%s:%d: missing key %s, line skipped",
                           self.path.name, lineno, exc)
            return None
        if not isinstance(post_id, str) or not post_id:
            logger.warning("%s:%d: bad id, line skipped", self.path.name, lineno)
            return None
        if post_id in self._seen_ids:
            logger.warning("%s:%d: duplicate id %r, line skipped",
                           self.path.name, lineno, post_id)
            return None
        if not (isinstance(author, str) and isinstance(subreddit, str)
                and isinstance(body, str)):
            logger.warning("%s:%d: bad field types, line skipped",
                           self.path.name, lineno)
            return None
        if isinstance(created, bool) or not isinstance(created, (int, float)) \
                or created != int(created):
            logger.warning("%s:%d: bad created_utc, line skipped",
                           self.path.name, lineno)
            return None
        parent = record.get("parent_id")
        if parent is not None and not isinstance(parent, str):
            logger.warning("%s:%d: bad parent_id, line skipped",
                           self.path.name, lineno)
            return None
        self._seen_ids.add(post_id)
        return RawPost(id=post_id, author=author, subreddit=subreddit,
                       created_utc=int(created), body=body, parent_id=parent)


def load_posts(path: str | Path) -> DumpReader:
    """Open a dump for streaming; raises DataError if the file is missing."""
    return DumpReader(path)


def has_weblink(body: str) -> bool:
    """True for http(s) URLs anywhere or a token starting with "www."."""
    lowered = body.lower()
    if "http://" in lowered or "https://" in lowered:
        return True
    return any(word.startswith("www.") for word in lowered.split())


def admissible(post: RawPost, min_tokens: int = MIN_POST_TOKENS) -> bool:
    """False iff the body has fewer than ``min_tokens`` tokens or a weblink."""
    if has_weblink(post.body):
        return False
    return count_tokens(post.body) >= min_tokens


@dataclass
class AuthorIndex:
    """Post ids per author, ordered by (created_utc, id).

    ``cs_counts`` starts empty and is filled once CS decisions exist.
    """

    posts: dict[str, list[str]] = field(default_factory=dict)
    cs_counts: dict[str, int] = field(default_factory=dict)

    def post_count(self, author: str) -> int:
        return len(self.posts.get(author, []))

    def total_posts(self) -> int:
        return sum(len(ids) for ids in self.posts.values())

    def authors(self) -> list[str]:
        return sorted(self.posts)


def index_authors(posts: Iterable[RawPost]) -> AuthorIndex:
    keyed: dict[str, list[tuple[int, str]]] = {}
    for post in posts:
        keyed.setdefault(post.author, []).append((post.created_utc, post.id))
    index = AuthorIndex()
    for author, pairs in keyed.items():
        pairs.sort()
        index.posts[author] = [post_id for _, post_id in pairs]
    return index


def select_common_authors(cs_corpus: Iterable[RawPost],
                          mono_corpus: Iterable[RawPost],
                          min_tokens: int = DEFAULT_MIN_AUTHOR_TOKENS) -> set[str]:
    """Authors with at least one qualifying post (≥ min_tokens) in BOTH corpora."""
    def qualifying(posts: Iterable[RawPost]) -> set[str]:
        out = set()
        for post in posts:
            if post.author not in out and count_tokens(post.body) >= min_tokens:
                out.add(post.author)
        return out

    return qualifying(cs_corpus) & qualifying(mono_corpus)


def corpus_report(entries: Iterable[tuple[RawPost, object, str]]) -> str:
    """CSV summary of the code-switched corpus, one row per language pair.

    ``entries`` are (post, decision, final_text) triples; rows cover only
    code-switched decisions (those carrying a ``primary_lang``).  Columns:
    pair label, distinct authors, posts, mean token count of final_text.
    Rows sort by post count descending, then label.
    """
    stats: dict[str, dict] = {}
    for post, decision, final_text in entries:
        partner = getattr(decision, "primary_lang", None)
        if partner is None:
            continue
        row = stats.setdefault(partner, {"authors": set(), "posts": 0, "tokens": 0})
        row["authors"].add(post.author)
        row["posts"] += 1
        row["tokens"] += count_tokens(final_text)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["language_pair", "authors", "posts", "avg_tokens"])
    ordered = sorted(stats.items(),
                     key=lambda kv: (-kv[1]["posts"], language_pair_label(kv[0])))
    for partner, row in ordered:
        avg = row["tokens"] / row["posts"]
        writer.writerow([language_pair_label(partner), len(row["authors"]),
                         row["posts"], f"{avg:.1f}"])
    return buf.getvalue()


def read_annotations(path: str | Path) -> dict[str, list[str]]:
    """Annotation CSV (post_id, annotator_id, label, reason) → labels per post."""
    labels: dict[str, list[str]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty annotation file")
        for row in reader:
            if not row:
                continue
            if len(row) < 3:
                raise DataError(f"{path}: short annotation row {row!r}")
            post_id, _, label = row[0], row[1], row[2]
            if label not in ("yes", "no"):
                raise DataError(f"{path}: bad label {label!r} for post {post_id}")
            labels.setdefault(post_id, []).append(label)
    return labels


def precision_report(pairs_by_post: dict[str, str],
                     annotations: dict[str, list[str]]) -> str:
    """Per-pair precision and agreement from a three-annotator file.

    ``pairs_by_post`` maps post id → partner language code.  Precision is
    the majority-yes share of annotated posts; unanimity is the share where
    all annotators agree (either way).  Posts with fewer than three labels
    are skipped with a warning; an Overall row closes the table.
    """
    per_pair: dict[str, dict] = {}
    overall = {"posts": 0, "majority_yes": 0, "unanimous": 0}
    for post_id, labels in sorted(annotations.items()):
        if len(labels) < 3:
            logger.warning("post %s has %d annotation labels, need 3; skipped",
                           post_id, len(labels))
            continue
        partner = pairs_by_post.get(post_id)
        if partner is None:
            logger.warning("post %s not in decision set; skipped", post_id)
            continue
        yes = sum(lab == "yes" for lab in labels)
        row = per_pair.setdefault(partner,
                                  {"posts": 0, "majority_yes": 0, "unanimous": 0})
        for bucket in (row, overall):
            bucket["posts"] += 1
            bucket["majority_yes"] += yes * 2 > len(labels)
            bucket["unanimous"] += yes in (0, len(labels))
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["language_pair", "annotated_posts", "precision", "unanimity"])

    def emit(label: str, row: dict) -> None:
        writer.writerow([label, row["posts"],
                         f"{row['majority_yes'] / row['posts']:.4f}",
                         f"{row['unanimous'] / row['posts']:.4f}"])

    for partner in sorted(per_pair, key=language_pair_label):
        emit(language_pair_label(partner), per_pair[partner])
    if overall["posts"]:
        emit("Overall", overall)
    return buf.getvalue()
