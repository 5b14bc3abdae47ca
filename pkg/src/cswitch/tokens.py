"""Shared text segmentation: tokens, sentences, and a fallback lemmatizer.

Every component of the pipeline tokenizes text the same way, so the rules
live here and nowhere else.  Segmentation approximates Unicode default word
boundaries: a token is either a run of letter/mark/digit characters (with
word-internal apostrophes kept, as in "don't"), or a run of one repeated
punctuation character ("...", "!!").  Whitespace never appears in a token.

Two deliberate deviations from plain word boundaries, both load-bearing for
the downstream analyses:

* English clitics are split off PTB-style, so "don't" -> "do" + "n't" and
  "I've" -> "I" + "'ve".  Marker counting depends on "n't" being its own
  token.
* Repeated-punctuation runs are single tokens, so "..." survives as one
  token rather than three periods.
"""

from __future__ import annotations

import unicodedata
from typing import Iterable, NamedTuple

_APOSTROPHES = ("'", "’")

# longest suffix first; checked against the lowercased token
_CLITICS = ("n't", "'ve", "'ll", "'re", "'d", "'m", "'s")

# words that commonly precede a period without ending the sentence
_ABBREVIATIONS = {
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc",
    "e.g", "i.e", "cf", "fig", "no", "dept", "approx", "inc", "est",
}

_VOWELS = "aeiou"

# surface forms the suffix rules would mangle; returned lowercased as-is
_LEMMA_NOOP = {
    "this", "his", "hers", "its", "ours", "yours", "theirs", "whose",
    "has", "was", "does", "goes", "is", "during", "nothing", "something",
    "anything", "everything", "news", "series", "species", "always",
    "perhaps", "thus", "whereas", "besides", "united",
}


class Token(NamedTuple):
    """A token plus its character span in the source text."""

    text: str
    start: int
    end: int


def _is_word_char(ch: str) -> bool:
    if ch == "_":
        return True
    return unicodedata.category(ch)[0] in ("L", "M", "N")


def _split_clitic(text: str, start: int, end: int) -> list[Token]:
    token = text[start:end]
    low = token.lower().replace("’", "'")
    for clitic in _CLITICS:
        if low.endswith(clitic) and len(low) > len(clitic):
            cut = end - len(clitic)
            return [Token(text[start:cut], start, cut), Token(text[cut:end], cut, end)]
    return [Token(token, start, end)]


def tokenize(text: str) -> list[Token]:
    """Segment ``text`` into tokens with character offsets.

    Offsets satisfy ``text[t.start:t.end] == t.text``; tokens are in order
    and non-overlapping, and every non-whitespace character is covered by
    exactly one token.
    """
    tokens: list[Token] = []
    n = len(text)
    i = 0
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if _is_word_char(ch):
            j = i + 1
            while j < n:
                if _is_word_char(text[j]):
                    j += 1
                elif text[j] in _APOSTROPHES and j + 1 < n and _is_word_char(text[j + 1]):
                    j += 2
                else:
                    break
            tokens.extend(_split_clitic(text, i, j))
            i = j
        else:
            # punctuation: a run of the same character is one token
            j = i + 1
            while j < n and text[j] == ch:
                j += 1
            tokens.append(Token(text[i:j], i, j))
            i = j
    return tokens


def token_texts(text: str) -> list[str]:
    return [t.text for t in tokenize(text)]


def count_tokens(text: str) -> int:
    return len(tokenize(text))


def alphabetic(tokens: Iterable[Token | str]) -> list[str]:
    """Keep only purely alphabetic token texts (clitics and digits drop out)."""
    out = []
    for t in tokens:
        s = t.text if isinstance(t, Token) else t
        if s.isalpha():
            out.append(s)
    return out


def sentences(text: str) -> list[str]:
    """Split ``text`` into sentences on ./!/? followed by space or end.

    A period does not end a sentence when the word in front of it is a known
    abbreviation ("Dr.", "e.g.").  Newlines also terminate sentences, since
    forum posts routinely omit final punctuation.
    """
    spans: list[str] = []
    start = 0
    n = len(text)
    i = 0
    while i < n:
        ch = text[i]
        if ch in ".!?":
            j = i + 1
            while j < n and text[j] in ".!?":
                j += 1
            if j >= n or text[j].isspace():
                if ch == "." and j - i == 1 and _preceded_by_abbreviation(text, i):
                    i = j
                    continue
                piece = text[start:j].strip()
                if piece:
                    spans.append(piece)
                start = j
                i = j
                continue
            i = j
        elif ch == "\n":
            piece = text[start:i].strip()
            if piece:
                spans.append(piece)
            start = i + 1
            i += 1
        else:
            i += 1
    tail = text[start:].strip()
    if tail:
        spans.append(tail)
    return spans


def _preceded_by_abbreviation(text: str, dot: int) -> bool:
    j = dot
    while j > 0 and (_is_word_char(text[j - 1]) or text[j - 1] == "."):
        j -= 1
    word = text[j:dot].lower().rstrip(".")
    return word in _ABBREVIATIONS


def lemma(word: str) -> str:
    """Rule-based English lemmatizer used when no annotation sidecar exists.

    Strips plural -s/-es, -ing, and -ed, undoing consonant doubling and
    restoring a dropped final e where the stem shape calls for it.  The rules
    are deterministic and make no dictionary lookups, so they are wrong for
    irregular forms; that is the accepted cost of the fallback path.
    """
    w = word.lower()
    if w in _LEMMA_NOOP:
        return w
    if len(w) > 5 and w.endswith("ing"):
        return _fix_stem(w[:-3])
    if len(w) > 4 and w.endswith("ed") and not w.endswith("eed"):
        return _fix_stem(w[:-2])
    if len(w) > 4 and w.endswith("ies"):
        return w[:-3] + "y"
    if len(w) > 3 and w.endswith("es") and w[-3] in "sxzh":
        return w[:-2]
    if len(w) > 3 and w.endswith("s") and not w.endswith("ss") and not w.endswith("us"):
        return w[:-1]
    return w


def _fix_stem(stem: str) -> str:
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in "lsz":
        return stem[:-1]
    if len(stem) >= 2 and stem[-1] == "i" and stem[-2] not in _VOWELS:
        return stem[:-1] + "y"
    if (
        len(stem) >= 3
        and stem[-1] not in _VOWELS + "wxy"
        and stem[-2] in _VOWELS
        and stem[-3] not in _VOWELS
    ):
        return stem + "e"
    return stem
