"""Code-switch detection: the per-post filter cascade and its decision.

Candidate posts pass through four filters before language identification
sees them.  Quoted reply lines go first, since that text is someone
else's words.  Posts about translation are rejected outright.  Named
entities and long quotations are then cut, because brand names and
copied sayings carry language the author did not produce.  If the
residue still shows English alongside exactly one other language the
post is code-switched, and the cut entities and quotations are restored
for downstream analysis; reply lines stay gone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from . import DataError
from .ingest import MIN_POST_TOKENS, RawPost, has_weblink, precision_report, read_annotations
from .langid import DEFAULT_MIN_SHARE, LanguageProfile, detect_bilingual, identify
from .tokens import Token, count_tokens, tokenize

__all__ = [
    "CodeSwitched", "Monolingual", "Rejected", "CsDecision",
    "Removal", "FilterTrace", "FilterLexicons",
    "strip_replies", "strip_named_entities", "strip_long_quotes",
    "has_translation_marker", "classify_cs",
    "load_term_file", "load_gazetteer", "load_ner_sidecar",
    "default_translation_terms", "default_gazetteer", "load_default_lexicons",
    "precision_report", "read_annotations",
]

logger = logging.getLogger(__name__)

MAX_QUOTE_TOKENS = 5

_DATA = Path(__file__).parent / "data"
_QUOTE_PAIRS = {'"': '"', "“": "”", "«": "»"}
_STRAY_CLOSERS = ("”", "»")


@dataclass(frozen=True)
class Removal:
    """One cut made by a filter.

    ``start``/``end`` are byte offsets into the original body; ``text``
    is exactly what the filter cut, which can be shorter than the span
    when an earlier filter already owned part of it.
    """

    kind: str  # reply | named_entity | quote | translation_marker
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class FilterTrace:
    removals: tuple[Removal, ...] = ()
    warnings: tuple[str, ...] = ()

    def by_kind(self, kind: str) -> tuple[Removal, ...]:
        return tuple(r for r in self.removals if r.kind == kind)


@dataclass(frozen=True)
class CodeSwitched:
    primary_lang: str
    other_lang: str
    proportions: dict[str, float]


@dataclass(frozen=True)
class Monolingual:
    lang: str


@dataclass(frozen=True)
class Rejected:
    reason: str  # too_short | weblink | translation | reply_only_second_lang | single_language


CsDecision = CodeSwitched | Monolingual | Rejected


def load_term_file(path: str | Path) -> frozenset[str]:
    """One lowercased term per line; blank lines and # comments skipped."""
    terms = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            terms.add(line.lower())
    return frozenset(terms)


def load_gazetteer(path: str | Path) -> tuple[str, ...]:
    """Entity names, one per line, case preserved; multiword entries allowed."""
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.append(line)
    return tuple(entries)


def load_ner_sidecar(path: str | Path) -> dict[str, list[tuple[int, str]]]:
    """Entity tags per post: TSV rows of post id, token index, BIO tag.

    Token indices refer to the tokenization of the original post body.
    """
    sidecar: dict[str, list[tuple[int, str]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(
                    f"{path}:{lineno}: expected post_id<TAB>token_index<TAB>tag")
            post_id, index_text, tag = parts
            try:
                index = int(index_text)
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: token index {index_text!r} is not an "
                    f"integer") from None
            sidecar.setdefault(post_id, []).append((index, tag))
    return sidecar


_LEXICON_CACHE: dict[str, object] = {}


def default_translation_terms() -> frozenset[str]:
    if "terms" not in _LEXICON_CACHE:
        _LEXICON_CACHE["terms"] = load_term_file(_DATA / "translation_terms.txt")
    return _LEXICON_CACHE["terms"]  # type: ignore[return-value]


def default_gazetteer() -> tuple[str, ...]:
    if "gazetteer" not in _LEXICON_CACHE:
        _LEXICON_CACHE["gazetteer"] = load_gazetteer(_DATA / "gazetteer.txt")
    return _LEXICON_CACHE["gazetteer"]  # type: ignore[return-value]


@dataclass(frozen=True)
class FilterLexicons:
    """Shared immutable inputs to the cascade.

    ``ner`` maps post id to that post's entity tags; None means no
    annotations exist and the gazetteer heuristic applies everywhere.
    """

    translation_terms: frozenset[str]
    gazetteer: tuple[str, ...]
    ner: dict[str, list[tuple[int, str]]] | None = None


def load_default_lexicons() -> FilterLexicons:
    return FilterLexicons(default_translation_terms(), default_gazetteer())


def _byte_starts(text: str) -> list[int]:
    starts = [0]
    for ch in text:
        starts.append(starts[-1] + len(ch.encode("utf-8")))
    return starts


class _Mask:
    """Removal bookkeeping over one immutable body.

    Each character is claimed by at most one filter, first claim wins;
    later filters see only the unclaimed residue.  Trace spans are byte
    offsets into the original body.
    """

    def __init__(self, original: str):
        self.original = original
        self._claim: list[str | None] = [None] * len(original)
        self.removals: list[Removal] = []
        self.warnings: list[str] = []
        self._bytes = _byte_starts(original)

    def current(self) -> tuple[str, list[int]]:
        """Unclaimed text plus a map from its positions to original ones."""
        idx = [i for i, kind in enumerate(self._claim) if kind is None]
        return "".join(self.original[i] for i in idx), idx

    def claim(self, start: int, end: int, idx: list[int], kind: str) -> None:
        """Claim the original chars behind current span [start, end)."""
        positions = [i for i in idx[start:end] if self._claim[i] is None]
        if not positions:
            return
        for i in positions:
            self._claim[i] = kind
        self._record(positions, kind)

    def claim_original(self, start: int, end: int, kind: str) -> None:
        positions = [i for i in range(start, end) if self._claim[i] is None]
        if not positions:
            return
        for i in positions:
            self._claim[i] = kind
        self._record(positions, kind)

    def note(self, start: int, end: int, idx: list[int], kind: str) -> None:
        """Record a trace entry without removing anything."""
        positions = idx[start:end]
        if positions:
            self._record(positions, kind)

    def _record(self, positions: list[int], kind: str) -> None:
        text = "".join(self.original[i] for i in positions)
        self.removals.append(Removal(kind, self._bytes[positions[0]],
                                     self._bytes[positions[-1] + 1], text))

    def warn(self, message: str) -> None:
        self.warnings.append(message)
        logger.warning("%s", message)

    def restored_text(self) -> str:
        """Body with entity and quote cuts put back; reply lines stay out."""
        return "".join(ch for ch, kind in zip(self.original, self._claim)
                       if kind != "reply")

    def trace(self) -> FilterTrace:
        return FilterTrace(tuple(self.removals), tuple(self.warnings))


def _absorbed(text: str, start: int, end: int) -> tuple[int, int]:
    # soak up one adjacent space so the cut does not double whitespace;
    # never a newline, which would merge lines
    if end < len(text) and text[end] in " \t":
        return start, end + 1
    if start > 0 and text[start - 1] in " \t":
        return start - 1, end
    return start, end


def _strip_replies(mask: _Mask) -> None:
    text, idx = mask.current()
    pos = 0
    block: tuple[int, int] | None = None
    for line in text.splitlines(keepends=True):
        lead = line.lstrip()
        if lead.startswith(">") or lead.startswith("&gt;"):
            block = (pos if block is None else block[0], pos + len(line))
        elif block is not None:
            # any non-marker line ends the block, blank lines included
            mask.claim(block[0], block[1], idx, "reply")
            block = None
        pos += len(line)
    if block is not None:
        mask.claim(block[0], block[1], idx, "reply")


def strip_replies(body: str) -> tuple[str, FilterTrace]:
    """Drop every line whose first non-blank character marks quoted text.

    Both the raw ``>`` marker and its HTML-escaped form count.  A run of
    consecutive marker lines is one removal; the first plain line after
    a run is kept, it is the author talking again.
    """
    mask = _Mask(body)
    _strip_replies(mask)
    text, _ = mask.current()
    return text, mask.trace()


def _translation_hit(text: str, lexicon: frozenset[str]) -> Token | None:
    if not lexicon:
        return None
    for tok in tokenize(text):
        if tok.text.lower() in lexicon:
            return tok
    return None


def has_translation_marker(body: str, lexicon: frozenset[str]) -> bool:
    """True iff any token of ``body``, lowercased, is in the lexicon."""
    return _translation_hit(body, lexicon) is not None


def _gazetteer_index(gazetteer: tuple[str, ...]) -> dict[str, list[tuple[str, ...]]]:
    index: dict[str, list[tuple[str, ...]]] = {}
    for entry in gazetteer:
        words = tuple(entry.split())
        if words:
            index.setdefault(words[0], []).append(words)
    for options in index.values():
        options.sort(key=len, reverse=True)  # longest-first keeps matching greedy
    return index


def _sentence_initial_tokens(text: str, toks: list[Token]) -> set[int]:
    initial = set()
    pending = True
    for k, tok in enumerate(toks):
        if k and "\n" in text[toks[k - 1].end:tok.start]:
            pending = True
        if tok.text[0].isalnum():
            if pending:
                initial.add(k)
            pending = False
        if tok.text[-1] in ".!?…":
            pending = True
    return initial


def _heuristic_spans(text: str, toks: list[Token],
                     gazetteer: tuple[str, ...]) -> list[tuple[int, int]]:
    """Char spans of gazetteer entities among capitalized token runs.

    Sentence-initial runs are skipped wholesale: capitalization there
    says nothing about names.  Within a run, entries match longest-first.
    """
    index = _gazetteer_index(gazetteer)
    initial = _sentence_initial_tokens(text, toks)
    spans = []
    k = 0
    while k < len(toks):
        if not toks[k].text[0].isupper():
            k += 1
            continue
        run_end = k
        while run_end + 1 < len(toks) and toks[run_end + 1].text[0].isupper():
            run_end += 1
        if k not in initial:
            i = k
            while i <= run_end:
                width = 1
                for words in index.get(toks[i].text, ()):
                    stop = i + len(words)
                    if stop <= run_end + 1 and all(
                            toks[i + d].text == words[d]
                            for d in range(len(words))):
                        spans.append((toks[i].start, toks[stop - 1].end))
                        width = len(words)
                        break
                i += width
        k = run_end + 1
    return spans


def _strip_entities(mask: _Mask, annotations: list[tuple[int, str]] | None,
                    gazetteer: tuple[str, ...], post_id: str) -> None:
    if annotations is not None:
        toks = tokenize(mask.original)
        for start, end in _sidecar_spans(toks, annotations, post_id):
            start, end = _absorbed(mask.original, start, end)
            mask.claim_original(start, end, "named_entity")
    else:
        text, idx = mask.current()
        for start, end in _heuristic_spans(text, tokenize(text), gazetteer):
            start, end = _absorbed(text, start, end)
            mask.claim(start, end, idx, "named_entity")


def _sidecar_spans(toks: list[Token], annotations: list[tuple[int, str]],
                   post_id: str) -> list[tuple[int, int]]:
    spans: list[list[int]] = []  # [char_start, char_end, last_token_index]
    open_span: list[int] | None = None
    for index, tag in sorted(annotations):
        if not 0 <= index < len(toks):
            raise DataError(
                f"post {post_id}: entity annotation references token {index}, "
                f"but the body has {len(toks)} tokens")
        if tag == "O" or not tag:
            open_span = None
            continue
        tok = toks[index]
        continues = (tag.startswith("I-") and open_span is not None
                     and index == open_span[2] + 1)
        if continues:
            open_span[1] = tok.end
            open_span[2] = index
        else:
            open_span = [tok.start, tok.end, index]
            spans.append(open_span)
    return [(s, e) for s, e, _ in spans]


def strip_named_entities(body: str, annotations: list[tuple[int, str]] | None = None,
                         gazetteer: tuple[str, ...] | None = None,
                         post_id: str = "?") -> tuple[str, FilterTrace]:
    """Cut named entities from ``body``.

    With ``annotations`` (token index, BIO tag pairs over the body's own
    tokenization) the tags are authoritative.  Without them, capitalized
    token runs are matched against the gazetteer; this is a degraded
    mode, an external tagger does better.
    """
    mask = _Mask(body)
    if gazetteer is None:
        gazetteer = default_gazetteer()
    _strip_entities(mask, annotations, gazetteer, post_id)
    text, _ = mask.current()
    return text, mask.trace()


def _strip_quotes(mask: _Mask, max_tokens: int = MAX_QUOTE_TOKENS) -> None:
    text, idx = mask.current()
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in _QUOTE_PAIRS:
            close = _QUOTE_PAIRS[ch]
            j = text.find(close, i + 1)
            if j == -1:
                mask.warn(f"unmatched {ch!r} quotation mark ignored")
                i += 1
                continue
            if count_tokens(text[i + 1:j]) > max_tokens:
                start, end = _absorbed(text, i, j + 1)
                mask.claim(start, end, idx, "quote")
            i = j + 1
        elif ch in _STRAY_CLOSERS:
            mask.warn(f"unmatched {ch!r} quotation mark ignored")
            i += 1
        else:
            i += 1


def strip_long_quotes(body: str,
                      max_tokens: int = MAX_QUOTE_TOKENS) -> tuple[str, FilterTrace]:
    """Remove quotations longer than ``max_tokens`` tokens, marks included.

    Straight, curly, and guillemet pairs are recognized; shorter quotes
    stay.  An unmatched mark removes nothing and leaves a warning in the
    trace.  Token counts include punctuation inside the quote.
    """
    mask = _Mask(body)
    _strip_quotes(mask, max_tokens)
    text, _ = mask.current()
    return text, mask.trace()


def classify_cs(post: RawPost, profiles: dict[str, LanguageProfile],
                lexicons: FilterLexicons | None = None,
                min_share: float = DEFAULT_MIN_SHARE,
                min_tokens: int = MIN_POST_TOKENS,
                max_quote_tokens: int = MAX_QUOTE_TOKENS,
                ) -> tuple[CsDecision, FilterTrace, str]:
    """Run the full cascade on one post and decide.

    Returns the decision, the trace of everything the filters touched,
    and the post's final text: for surviving posts that is the body with
    entities and quotes restored but reply lines removed.  Total on any
    post; inadmissible ones come back Rejected with an empty trace.
    """
    if lexicons is None:
        lexicons = load_default_lexicons()
    if has_weblink(post.body):
        return Rejected("weblink"), FilterTrace(), post.body
    if count_tokens(post.body) < min_tokens:
        return Rejected("too_short"), FilterTrace(), post.body

    mask = _Mask(post.body)
    _strip_replies(mask)
    residue0, idx0 = mask.current()

    hit = _translation_hit(residue0, lexicons.translation_terms)
    if hit is not None:
        mask.note(hit.start, hit.end, idx0, "translation_marker")
        return Rejected("translation"), mask.trace(), residue0

    annotations = lexicons.ner.get(post.id) if lexicons.ner is not None else None
    _strip_entities(mask, annotations, lexicons.gazetteer, post.id)
    _strip_quotes(mask, max_quote_tokens)
    residue, _ = mask.current()

    trace = mask.trace()
    final_text = mask.restored_text()
    pair = detect_bilingual(residue, profiles, min_share=min_share)
    if pair is not None:
        proportions = identify(residue, profiles).proportions
        return (CodeSwitched(primary_lang=pair[1], other_lang=pair[0],
                             proportions=proportions), trace, final_text)

    proportions = identify(residue, profiles).proportions
    had_reply = any(r.kind == "reply" for r in trace.removals)
    if (had_reply
            and detect_bilingual(post.body, profiles, min_share=min_share)
            and detect_bilingual(residue0, profiles, min_share=min_share) is None):
        return Rejected("reply_only_second_lang"), trace, final_text
    if proportions:
        top = max(proportions, key=proportions.get)
        runner_up = max((share for lang, share in proportions.items()
                         if lang != top), default=0.0)
        if runner_up < min_share:
            return Monolingual(top), trace, final_text
    return Rejected("single_language"), trace, final_text
