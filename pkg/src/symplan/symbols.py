"""Action-symbol alphabets, symbol sequences, and compact encoding.

An action symbol names one sub-task of a long-horizon task ("open door",
"move cup", ...). The compact encoding collapses consecutive repeats of a
symbol into a single occurrence, which captures the structure of a task
independent of how long each action took.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

NO_ACTION_GLYPH = "_"
TERMINAL_GLYPH = "#"


@dataclass(frozen=True)
class ActionSymbol:
    """One discrete sub-task token: integer id, single-char glyph, label."""

    id: int
    glyph: str
    meaning: str

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"symbol id must be non-negative, got {self.id}")
        if len(self.glyph) != 1 or not self.glyph.isprintable():
            raise ValueError(f"glyph must be a single printable character, got {self.glyph!r}")


class Alphabet:
    """Immutable set of action symbols for one task family.

    Ids and glyphs are each unique within the alphabet. Every alphabet
    contains the no-action symbol ``_``; the manipulation alphabet also
    carries the terminal symbol ``#``.
    """

    def __init__(self, name: str, symbols: Iterable[ActionSymbol]):
        self.name = name
        self.symbols = tuple(symbols)
        ids = [s.id for s in self.symbols]
        glyphs = [s.glyph for s in self.symbols]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate symbol ids in alphabet {name!r}")
        if len(set(glyphs)) != len(glyphs):
            raise ValueError(f"duplicate glyphs in alphabet {name!r}")
        if NO_ACTION_GLYPH not in glyphs:
            raise ValueError(f"alphabet {name!r} lacks the no-action symbol {NO_ACTION_GLYPH!r}")
        self._by_id = {s.id: s for s in self.symbols}
        self._by_glyph = {s.glyph: s for s in self.symbols}

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol_id: int) -> bool:
        return symbol_id in self._by_id

    def __iter__(self):
        return iter(self.symbols)

    def symbol(self, symbol_id: int) -> ActionSymbol:
        try:
            return self._by_id[symbol_id]
        except KeyError:
            raise KeyError(f"symbol id {symbol_id} not in alphabet {self.name!r}") from None

    def id_of(self, glyph: str) -> int:
        try:
            return self._by_glyph[glyph].id
        except KeyError:
            raise KeyError(f"glyph {glyph!r} not in alphabet {self.name!r}") from None

    def glyph_of(self, symbol_id: int) -> str:
        return self.symbol(symbol_id).glyph

    @property
    def no_action_id(self) -> int:
        return self._by_glyph[NO_ACTION_GLYPH].id

    @property
    def terminal_id(self) -> int | None:
        sym = self._by_glyph.get(TERMINAL_GLYPH)
        return None if sym is None else sym.id

    def to_glyphs(self, ids: Sequence[int]) -> str:
        return "".join(self.glyph_of(i) for i in ids)

    def ids_of(self, glyphs: str) -> list[int]:
        return [self.id_of(g) for g in glyphs]

    def validate_ids(self, ids: Sequence[int]) -> None:
        for i in ids:
            if i not in self._by_id:
                raise ValueError(f"symbol id {i} not in alphabet {self.name!r}")

    def to_json(self) -> str:
        return json.dumps([{"id": s.id, "glyph": s.glyph, "meaning": s.meaning} for s in self.symbols])

    @classmethod
    def from_json(cls, name: str, payload: str) -> "Alphabet":
        entries = json.loads(payload)
        return cls(name, [ActionSymbol(e["id"], e["glyph"], e["meaning"]) for e in entries])


MANIPULATION = Alphabet(
    "manipulation",
    [
        ActionSymbol(0, "A", "Move cup"),
        ActionSymbol(1, "B", "Move ball"),
        ActionSymbol(2, "C", "Move ball into cup"),
        ActionSymbol(3, "D", "Move ball and cup"),
        ActionSymbol(4, "E", "Open door"),
        ActionSymbol(5, "F", "Close door"),
        ActionSymbol(6, "G", "Approach cup"),
        ActionSymbol(7, "H", "Approach ball"),
        ActionSymbol(8, "I", "Approach to open"),
        ActionSymbol(9, "J", "Approach to close"),
        ActionSymbol(10, "_", "No action"),
        ActionSymbol(11, "#", "Terminal/Done"),
    ],
)

# Yellow and Green carry distinct ids here (2 and 3); the source table for
# this vocabulary repeats one integer, which would break id uniqueness.
BLOCKS = Alphabet(
    "blocks",
    [
        ActionSymbol(0, "B", "Move Blue"),
        ActionSymbol(1, "R", "Move Red"),
        ActionSymbol(2, "Y", "Move Yellow"),
        ActionSymbol(3, "G", "Move Green"),
        ActionSymbol(4, "P", "Move Pink"),
        ActionSymbol(5, "_", "No action"),
    ],
)

_ALPHABETS = {"manipulation": MANIPULATION, "blocks": BLOCKS}


def alphabet_for_task(task_id: str) -> Alphabet:
    """Return the symbol alphabet for a task family (``manipulation`` or ``blocks``)."""
    try:
        return _ALPHABETS[task_id]
    except KeyError:
        raise ValueError(f"unknown task id {task_id!r}; expected one of {sorted(_ALPHABETS)}") from None


def compact_encode(ids: Sequence[int]) -> list[int]:
    """Collapse runs of consecutive equal symbols to a single occurrence.

    Idempotent, order preserving, and keeps single occurrences of every
    run including no-action runs.
    """
    out: list[int] = []
    for i in ids:
        if not out or out[-1] != i:
            out.append(int(i))
    return out


def compact_encode_glyphs(glyphs: str) -> str:
    """Glyph-string variant of :func:`compact_encode`."""
    out: list[str] = []
    for g in glyphs:
        if not out or out[-1] != g:
            out.append(g)
    return "".join(out)
