"""Character n-gram language identification.

Profiles hold per-order n-gram statistics (orders 1..5) trained on seed
text.  Scoring interpolates the orders with uniform weights and additive
smoothing, evaluated over word-internal character windows: each token is
scored as " token " so word-boundary patterns count, and a token's language
is decided from the tokens around it (two on each side by default), which
keeps short function words from flipping on their own.

Tokens written in a script that only one loaded profile uses (Greek,
Cyrillic) skip the scorer entirely; there is nothing to decide.
"""

from __future__ import annotations

import logging
import math
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from . import DataError
from .tokens import tokenize

logger = logging.getLogger(__name__)

MAX_ORDER = 5
MIN_TRAIN_CHARS = 10_000
DEFAULT_MIN_SHARE = 0.05
_SMOOTH = 0.5
_MAGIC = "#cswitch-langprofile v1"
_HEADER_KEYS = ("language", "training_size", "order")

# script family per bundled language; languages not listed are always
# decided by the scorer
LANGUAGE_SCRIPTS = {
    "en": "latin", "ro": "latin", "tl": "latin", "id": "latin",
    "el": "greek", "ru": "cyrillic",
}

_BUNDLED = ("en", "el", "ro", "tl", "id", "ru")


@dataclass
class LanguageProfile:
    """N-gram counts for one language, queryable as smoothed log-probs."""

    language: str
    training_size: int                        # characters of training text
    counts: dict[str, int] = field(repr=False, default_factory=dict)
    order_totals: dict[int, int] = field(default_factory=dict)
    order_vocab: dict[int, int] = field(default_factory=dict)

    def prob(self, gram: str) -> float:
        """Additively smoothed probability of ``gram`` within its order."""
        n = len(gram)
        total = self.order_totals.get(n, 0)
        vocab = self.order_vocab.get(n, 0)
        c = self.counts.get(gram, 0)
        return (c + _SMOOTH) / (total + _SMOOTH * (vocab + 1))

    def logprob(self, gram: str) -> float:
        return math.log(self.prob(gram))

    def raw_logprob(self, gram: str) -> float:
        """Unsmoothed log(count/total); raises KeyError for unseen grams."""
        return math.log(self.counts[gram] / self.order_totals[len(gram)])


@dataclass(frozen=True)
class TaggedToken:
    text: str
    start: int            # byte offset into the original text
    end: int
    language: str
    confidence: float


@dataclass(frozen=True)
class LanguageSpan:
    start: int            # byte offset into the original text
    end: int
    language: str
    confidence: float


@dataclass(frozen=True)
class IdentifyResult:
    spans: tuple[LanguageSpan, ...]
    # language -> share of non-whitespace characters, descending
    proportions: dict[str, float]
    # language -> character-weighted mean token confidence
    confidences: dict[str, float]

    def top_language(self) -> str | None:
        return next(iter(self.proportions), None)

    def rows(self) -> list[tuple[str, float, float]]:
        """(language, proportion, confidence) triples, proportion descending."""
        return [(lang, share, self.confidences[lang])
                for lang, share in self.proportions.items()]


def _normalize(text: str) -> str:
    text = unicodedata.normalize("NFC", text).lower()
    return " ".join(text.split())


def train_profile(corpus: str, language: str, max_order: int = MAX_ORDER) -> LanguageProfile:
    """Build a profile from raw seed text (at least 10,000 characters)."""
    if len(corpus) < MIN_TRAIN_CHARS:
        raise DataError(
            f"training corpus for {language!r} has {len(corpus)} characters, "
            f"need at least {MIN_TRAIN_CHARS}")
    normalized = " " + _normalize(corpus) + " "
    counts: dict[str, int] = {}
    totals: dict[int, int] = {}
    for n in range(1, max_order + 1):
        for i in range(len(normalized) - n + 1):
            gram = normalized[i:i + n]
            counts[gram] = counts.get(gram, 0) + 1
        totals[n] = max(len(normalized) - n + 1, 0)
    vocab: dict[int, int] = {}
    for gram in counts:
        vocab[len(gram)] = vocab.get(len(gram), 0) + 1
    return LanguageProfile(language=language, training_size=len(corpus),
                           counts=counts, order_totals=totals, order_vocab=vocab)


def save_profile(profile: LanguageProfile, path: str | Path) -> None:
    """Write a profile as TSV: magic header, metadata lines, gram<TAB>logprob."""
    lines = [_MAGIC,
             f"#language\t{profile.language}",
             f"#training_size\t{profile.training_size}"]
    for n in sorted(profile.order_totals):
        lines.append(f"#order\t{n}\ttotal\t{profile.order_totals[n]}")
    for gram in sorted(profile.counts, key=lambda g: (len(g), g)):
        lines.append(f"{gram}\t{profile.raw_logprob(gram):.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_profile(path: str | Path) -> LanguageProfile:
    """Read a profile written by :func:`save_profile`.

    Stored log-probabilities are converted back to integer counts against
    the per-order totals in the header, so a save/load round trip scores
    identically.  Grams themselves may start with ``#`` (hashtags); a line
    only counts as metadata when its key matches a known header field.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != _MAGIC:
        raise DataError(f"{path} is not a language profile (missing magic header)")
    language = None
    training_size = 0
    totals: dict[int, int] = {}
    counts: dict[str, int] = {}
    for line in lines[1:]:
        if not line:
            continue
        if line.startswith("#"):
            fields = line[1:].split("\t")
            if fields[0] in _HEADER_KEYS:
                if fields[0] == "language":
                    language = fields[1]
                elif fields[0] == "training_size":
                    training_size = int(fields[1])
                else:
                    totals[int(fields[1])] = int(fields[3])
                continue
        try:
            gram, lp = line.split("\t")
        except ValueError as exc:
            raise DataError(f"{path}: malformed profile row {line!r}") from exc
        if len(gram) not in totals:
            raise DataError(f"{path}: gram {gram!r} precedes its order header")
        counts[gram] = round(math.exp(float(lp)) * totals[len(gram)])
    if language is None:
        raise DataError(f"{path}: profile has no language header")
    vocab: dict[int, int] = {}
    for gram in counts:
        vocab[len(gram)] = vocab.get(len(gram), 0) + 1
    return LanguageProfile(language=language, training_size=training_size,
                           counts=counts, order_totals=totals, order_vocab=vocab)


_SEED_CACHE: dict[str, LanguageProfile] = {}


def load_default_profiles(languages: tuple[str, ...] = _BUNDLED) -> dict[str, LanguageProfile]:
    """Train profiles from the bundled seed texts (cached per process)."""
    out = {}
    for code in languages:
        if code not in _SEED_CACHE:
            seed = Path(__file__).parent / "data" / "seed" / f"{code}.txt"
            if not seed.is_file():
                raise DataError(f"no bundled seed text for language {code!r}")
            _SEED_CACHE[code] = train_profile(seed.read_text(encoding="utf-8"), code)
        out[code] = _SEED_CACHE[code]
    return out


_MARKER_CACHE: set[str] | None = None


def english_markers() -> set[str]:
    """Casefolded English marker words bundled with the package."""
    global _MARKER_CACHE
    if _MARKER_CACHE is None:
        path = Path(__file__).parent / "data" / "english_markers.txt"
        _MARKER_CACHE = {
            line.strip().casefold()
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.startswith("#")}
    return _MARKER_CACHE


def _char_script(ch: str) -> str | None:
    cp = ord(ch)
    if cp < 0x250 or 0x1E00 <= cp <= 0x1EFF or 0x2C60 <= cp <= 0x2C7F:
        return "latin" if ch.isalpha() else None
    if 0x370 <= cp <= 0x3FF or 0x1F00 <= cp <= 0x1FFF:
        return "greek"
    if 0x400 <= cp <= 0x52F or 0x2DE0 <= cp <= 0x2DFF or 0xA640 <= cp <= 0xA69F:
        return "cyrillic"
    return None


def _token_script(text: str) -> str | None:
    scripts = {_char_script(ch) for ch in text if ch.isalpha()}
    scripts.discard(None)
    if len(scripts) == 1:
        return scripts.pop()
    return None


class _Scorer:
    """Per-token log-likelihood cache over a fixed profile set."""

    def __init__(self, profiles: dict[str, LanguageProfile]):
        if not profiles:
            raise ValueError("no language profiles supplied")
        self.profiles = profiles
        self.codes = sorted(profiles)
        # script -> language, only where exactly one profile claims the script
        claims: dict[str, list[str]] = {}
        for code in self.codes:
            script = LANGUAGE_SCRIPTS.get(code)
            if script:
                claims.setdefault(script, []).append(code)
        self.unique_script = {s: langs[0] for s, langs in claims.items()
                              if len(langs) == 1}
        self._inv_denom = {
            code: [0.0] + [1.0 / (p.order_totals.get(n, 0)
                                  + _SMOOTH * (p.order_vocab.get(n, 0) + 1))
                           for n in range(1, MAX_ORDER + 1)]
            for code, p in profiles.items()}
        self._cache: dict[str, tuple[dict[str, float], int]] = {}

    def token_scores(self, token_text: str) -> tuple[dict[str, float], int]:
        """Summed log-likelihood per language and position count for one token."""
        cached = self._cache.get(token_text)
        if cached is not None:
            return cached
        s = " " + _normalize(token_text) + " "
        npos = len(s) - 1
        sums = {}
        for code in self.codes:
            counts = self.profiles[code].counts
            inv = self._inv_denom[code]
            total = 0.0
            for end in range(1, len(s)):
                acc = 0.0
                hi = min(MAX_ORDER, end + 1)
                for n in range(1, hi + 1):
                    acc += (counts.get(s[end + 1 - n:end + 1], 0) + _SMOOTH) * inv[n]
                total += math.log(acc / hi)
            sums[code] = total
        result = (sums, npos)
        self._cache[token_text] = result
        return result


# scorers are cached per profile-set identity so repeated calls over a
# corpus share per-token work; retraining yields new objects, new entry
_SCORER_CACHE: dict[tuple[tuple[str, int], ...], _Scorer] = {}


def _scorer_for(profiles: dict[str, LanguageProfile]) -> _Scorer:
    key = tuple(sorted((code, id(p)) for code, p in profiles.items()))
    scorer = _SCORER_CACHE.get(key)
    if scorer is None:
        if len(_SCORER_CACHE) > 8:
            _SCORER_CACHE.clear()
        scorer = _Scorer(profiles)
        _SCORER_CACHE[key] = scorer
    return scorer


def _byte_offsets(text: str) -> list[int]:
    """offsets[i] = byte offset of character i; one extra entry for the end."""
    offsets = [0] * (len(text) + 1)
    pos = 0
    for i, ch in enumerate(text):
        offsets[i] = pos
        pos += len(ch.encode("utf-8"))
    offsets[len(text)] = pos
    return offsets


class _ReverseStr(str):
    """Reverses comparison so max() prefers the smaller language code."""

    __slots__ = ()

    def __lt__(self, other):
        return str.__gt__(self, other)

    def __gt__(self, other):
        return str.__lt__(self, other)


# the token being decided counts this many times relative to each
# neighbor, so its own characters win when the window disagrees
_CENTER_WEIGHT = 2.0


def tag_tokens(text: str, profiles: dict[str, LanguageProfile],
               window: int = 2) -> list[TaggedToken]:
    """Assign a language to every token of ``text``.

    A token in a script claimed by exactly one profile takes that language
    directly with confidence 1.0.  Other word tokens are scored over a
    window of ``window`` scoreable tokens on each side; script-forced
    tokens never contribute evidence (Cyrillic neighbors say nothing about
    whether a Latin token is English).  Punctuation and digit tokens carry
    no language signal of their own and inherit the nearest decided
    neighbor, preferring the one before.  Score ties go to the larger
    training set, then the lexicographically smaller code.  Confidence is
    the softmax weight of the winner over per-position mean
    log-likelihoods.

    When an English profile is loaded, tokens on the bundled marker list
    (closed-class English words with no counterpart in the other bundled
    languages) are pinned to English the same way script pins Greek ones;
    their characters still feed neighboring windows.  A lone borrowed noun
    between two Romanian words is genuinely ambiguous, "don't" is not.
    """
    scorer = _scorer_for(profiles)
    toks = tokenize(text)
    if not toks:
        return []
    offsets = _byte_offsets(text)
    n = len(toks)
    forced: list[str | None] = []
    for tok in toks:
        script = _token_script(tok.text)
        forced.append(scorer.unique_script.get(script) if script else None)
    scoreable = [i for i in range(n)
                 if forced[i] is None and any(ch.isalpha() for ch in toks[i].text)]
    if not scoreable and not any(lang for lang in forced):
        # nothing but symbols and digits; score every token on its own grams
        scoreable = list(range(n))
    rank = {tok_i: k for k, tok_i in enumerate(scoreable)}
    per_token = {i: scorer.token_scores(toks[i].text) for i in scoreable}

    decided: list[tuple[str, float] | None] = [None] * n
    for i, lang in enumerate(forced):
        if lang is not None:
            decided[i] = (lang, 1.0)
    markers = english_markers() if "en" in profiles else ()
    # capital I is matched as-is: lowercase i would collide with Romanian
    # clitic fragments, the capitalized pronoun collides with nothing
    pinned = {i for i in scoreable
              if toks[i].text.casefold().replace("’", "'") in markers
              or (markers and toks[i].text == "I")}

    def pick(means: dict[str, float], codes: list[str]) -> tuple[str, float]:
        best = max(codes,
                   key=lambda c: (means[c], profiles[c].training_size, _ReverseStr(c)))
        denom = sum(math.exp(means[c] - means[best]) for c in codes)
        return best, 1.0 / denom

    all_means: dict[int, dict[str, float]] = {}
    for i in scoreable:
        if i in pinned:
            decided[i] = ("en", 1.0)
            continue
        k = rank[i]
        neighbors = scoreable[max(0, k - window):k + window + 1]
        means = {}
        for code in scorer.codes:
            total = npos = 0.0
            for j in neighbors:
                w = _CENTER_WEIGHT if j == i else 1.0
                total += w * per_token[j][0][code]
                npos += w * per_token[j][1]
            means[code] = total / npos if npos else 0.0
        all_means[i] = means
        decided[i] = pick(means, scorer.codes)

    # bilingual-document pass: a language backed by nothing but char-gram
    # guesses gets absorbed.  Kept languages are those with script or marker
    # evidence, the dominant language by character share, and English when
    # its profile is loaded (the platform's lingua franca; a lone borrowed
    # noun between Greek words is a switch into English, not Romanian).
    # With two or fewer profiles there is nothing to absorb into.
    shares: dict[str, int] = {}
    for i, tok in enumerate(toks):
        if decided[i] is not None:
            lang = decided[i][0]
            shares[lang] = shares.get(lang, 0) + len(tok.text)
    if shares and len(profiles) > 2:
        keep = {decided[i][0] for i in range(n)
                if decided[i] is not None and (forced[i] is not None or i in pinned)}
        if "en" in profiles:
            keep.add("en")
        keep.add(min(shares, key=lambda c: (-shares[c], c)))
        restricted = [c for c in scorer.codes if c in keep]
        for i in scoreable:
            if i not in pinned and decided[i][0] not in keep:
                decided[i] = pick(all_means[i], restricted)

    # two sweeps fill the undecided: carry forward, then backfill the prefix
    last: tuple[str, float] | None = None
    for i in range(n):
        if decided[i] is None:
            decided[i] = last
        else:
            last = decided[i]
    last = None
    for i in range(n - 1, -1, -1):
        if decided[i] is None:
            decided[i] = last
        else:
            last = decided[i]

    return [TaggedToken(tok.text, offsets[tok.start], offsets[tok.end], lang, conf)
            for tok, (lang, conf) in zip(toks, decided)]


def identify(text: str, profiles: dict[str, LanguageProfile],
             window: int = 2) -> IdentifyResult:
    """Character-share language breakdown of ``text``.

    Spans tile the tokens in order: consecutive same-language tokens merge
    into one span whose confidence is the character-weighted mean of its
    token confidences.  Proportions are shares of non-whitespace characters,
    sorted descending (ties by language code); they sum to 1 for non-empty
    text.  Empty or whitespace-only text gives an empty result.
    """
    tagged = tag_tokens(text, profiles, window=window)
    if not tagged:
        return IdentifyResult(spans=(), proportions={}, confidences={})
    spans: list[LanguageSpan] = []
    weights: dict[str, int] = {}
    conf_sums: dict[str, float] = {}
    run_start = tagged[0].start
    run_end = tagged[0].end
    run_lang = tagged[0].language
    run_conf = 0.0
    run_chars = 0

    def flush() -> None:
        conf = run_conf / run_chars if run_chars else 0.0
        spans.append(LanguageSpan(run_start, run_end, run_lang, conf))

    for tag in tagged:
        chars = len(tag.text)          # characters, not bytes
        weights[tag.language] = weights.get(tag.language, 0) + chars
        conf_sums[tag.language] = (conf_sums.get(tag.language, 0.0)
                                   + tag.confidence * chars)
        if tag.language != run_lang:
            flush()
            run_start, run_lang = tag.start, tag.language
            run_conf, run_chars = 0.0, 0
        run_end = tag.end
        run_conf += tag.confidence * chars
        run_chars += chars
    flush()
    total = sum(weights.values())
    ordered = sorted(weights, key=lambda c: (-weights[c], c))
    proportions = {c: weights[c] / total for c in ordered}
    confidences = {c: conf_sums[c] / weights[c] for c in ordered}
    return IdentifyResult(spans=tuple(spans), proportions=proportions,
                          confidences=confidences)


def detect_bilingual(text: str, profiles: dict[str, LanguageProfile],
                     min_share: float = DEFAULT_MIN_SHARE) -> tuple[str, str] | None:
    """("en", other) iff English plus exactly one other language each hold
    at least ``min_share`` of the characters; None otherwise."""
    props = identify(text, profiles).proportions
    if props.get("en", 0.0) < min_share:
        return None
    others = [lang for lang, share in props.items()
              if lang != "en" and share >= min_share]
    if len(others) != 1:
        return None
    return ("en", others[0])
