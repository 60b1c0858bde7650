"""Crossing words: cyclic sequences of vertex, crossed-edge and followed-edge letters."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import WordSyntaxError

KIND_ORDER = {"V": 0, "C": 1, "F": 2}


@dataclass(frozen=True, order=True)
class Letter:
    kind: str  # "V" vertex, "C" crossed edge, "F" followed edge
    id: int

    def sort_key(self) -> tuple[int, int]:
        return KIND_ORDER[self.kind], self.id

    def __str__(self) -> str:
        return f"{self.kind}{self.id}"


def V(i: int) -> Letter:
    return Letter("V", int(i))


def C(e: int) -> Letter:
    return Letter("C", int(e))


def F(e: int) -> Letter:
    return Letter("F", int(e))


_TOKEN = re.compile(r"^([VvCcFfXx])(\d+)(?:-(\d+))?$")


def parse_word(text: str, mesh=None) -> list[Letter]:
    """Parse ``"V0 F0-1 V1 F0-1"``.

    ``V<i>`` is a vertex. ``C``/``X`` is a crossed edge and ``F`` a followed
    edge, written either by edge id (``C5``) or by endpoints (``C1-2``, which
    needs the mesh).
    """
    letters = []
    for tok in re.split(r"[\s,]+", text.strip()):
        if not tok:
            continue
        mt = _TOKEN.match(tok)
        if not mt:
            raise WordSyntaxError(f"cannot parse letter {tok!r}")
        kind = mt.group(1).upper()
        kind = "C" if kind == "X" else kind
        a = int(mt.group(2))
        if mt.group(3) is not None:
            if kind == "V":
                raise WordSyntaxError(f"vertex letter {tok!r} takes a single id")
            if mesh is None:
                raise WordSyntaxError("edges given by endpoints need a mesh")
            e = mesh.edge_between(a, int(mt.group(3)))
            if e is None:
                raise WordSyntaxError(f"no edge between {a} and {mt.group(3)}")
            a = e
        letters.append(Letter(kind, a))
    if not letters:
        raise WordSyntaxError("empty word")
    return letters


def format_word(word: Iterable[Letter], mesh=None) -> str:
    out = []
    for letter in word:
        if letter.kind != "V" and mesh is not None:
            a, b = mesh.edge_vertices[letter.id]
            out.append(f"{letter.kind}{a}-{b}")
        else:
            out.append(str(letter))
    return " ".join(out)


def canonical_rotation(word: Sequence[Letter]) -> tuple[Letter, ...]:
    """Lexicographically least rotation of the word or of its reversal."""
    if not word:
        return ()
    best = None
    for seq in (list(word), list(reversed(word))):
        for i in range(len(seq)):
            rot = tuple(seq[i:] + seq[:i])
            key = tuple(l.sort_key() for l in rot)
            if best is None or key < best[0]:
                best = (key, rot)
    return best[1]


def word_key(word: Sequence[Letter]) -> tuple[tuple[int, int], ...]:
    return tuple(l.sort_key() for l in canonical_rotation(word))


def letters_to_json(word: Sequence[Letter], mesh=None) -> list[dict]:
    out = []
    for l in word:
        item = {"kind": l.kind, "id": l.id}
        if l.kind != "V" and mesh is not None:
            item["ends"] = list(mesh.edge_vertices[l.id])
        out.append(item)
    return out


def letters_from_json(items: Sequence[dict]) -> list[Letter]:
    return [Letter(str(it["kind"]), int(it["id"])) for it in items]
