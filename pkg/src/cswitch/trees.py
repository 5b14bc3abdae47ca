"""Penn-style bracketed parse trees and the sidecar files that carry them.

Parsing itself happens out of process; any constituency parser that emits
bracketed trees can produce the sidecar.  This module only reads the
notation and measures the trees.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from . import DataError

# clause-labeled nonterminals, the S family
CLAUSE_LABELS = frozenset({"S", "SBAR", "SINV", "SQ", "SBARQ"})


@dataclass(frozen=True)
class ParseTree:
    """A constituent: label plus children, or a bare terminal token.

    Terminals have ``token`` set and no children; nonterminals have at
    least one child and ``token`` None.
    """

    label: str
    children: tuple["ParseTree", ...] = ()
    token: str | None = None

    @property
    def is_terminal(self) -> bool:
        return self.token is not None

    def depth(self) -> int:
        """Nonterminal levels on the longest root-to-leaf path.

        Terminals contribute nothing, so a flat tree like (S a b) has
        depth 1 and (S (NP (N cat)) (VP (V ran))) has depth 3.
        """
        if self.is_terminal:
            return 0
        return 1 + max((child.depth() for child in self.children), default=0)

    def clause_count(self) -> int:
        if self.is_terminal:
            return 0
        own = 1 if self.label in CLAUSE_LABELS else 0
        return own + sum(child.clause_count() for child in self.children)

    def leaves(self) -> list[str]:
        if self.is_terminal:
            return [self.token]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out


def _lex(text: str) -> Iterator[str]:
    buf = []
    for ch in text:
        if ch in "()":
            if buf:
                yield "".join(buf)
                buf.clear()
            yield ch
        elif ch.isspace():
            if buf:
                yield "".join(buf)
                buf.clear()
        else:
            buf.append(ch)
    if buf:
        yield "".join(buf)


def parse_tree(text: str, where: str = "tree") -> ParseTree:
    """Parse one bracketed tree, e.g. ``(S (NP (N cat)) (VP (V ran)))``.

    ``where`` names the source (typically file:line) in error messages.
    """
    items = list(_lex(text))
    pos = 0

    def fail(reason: str):
        raise DataError(f"{where}: malformed tree: {reason}")

    def node() -> ParseTree:
        nonlocal pos
        # caller consumed the opening parenthesis
        if pos >= len(items) or items[pos] in "()":
            fail("expected a constituent label after '('")
        label = items[pos]
        pos += 1
        children = []
        while pos < len(items) and items[pos] != ")":
            if items[pos] == "(":
                pos += 1
                children.append(node())
            else:
                children.append(ParseTree(label="", token=items[pos]))
                pos += 1
        if pos >= len(items):
            fail("unbalanced brackets: missing ')'")
        pos += 1  # the ')'
        if not children:
            fail(f"constituent {label!r} has no children")
        return ParseTree(label=label, children=tuple(children))

    if not items:
        fail("empty input")
    if items[0] != "(":
        fail("tree must start with '('")
    pos = 1
    root = node()
    if pos != len(items):
        fail("trailing content after the root constituent")
    return root


def read_parse_sidecar(path: str | Path) -> dict[str, list[ParseTree]]:
    """Read per-post parse forests from a sidecar file.

    Format: a ``#post:<id>`` line opens a post, followed by one bracketed
    tree per line (one per sentence); blank lines separate posts.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"parse sidecar not found: {path}")
    forests: dict[str, list[ParseTree]] = {}
    current: str | None = None
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#post:"):
            current = line[len("#post:"):].strip()
            if not current:
                raise DataError(f"{path}:{lineno}: empty post id")
            forests.setdefault(current, [])
            continue
        if line.startswith("#"):
            continue
        if current is None:
            raise DataError(
                f"{path}:{lineno}: tree appears before any #post: header")
        forests[current].append(parse_tree(line, where=f"{path}:{lineno}"))
    return forests
