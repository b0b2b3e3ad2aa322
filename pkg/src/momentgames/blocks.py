"""Block-structured variable indexing.

Strategy variables are grouped into blocks, one block per information set,
with players owning consecutive groups of blocks.  A monomial is stored as a
dense exponent tuple over all variables, which keeps hashing, ordering and
componentwise sums cheap at the dimensions this library targets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

Mono = tuple[int, ...]


@dataclass(frozen=True)
class BlockStructure:
    """Variable layout for a set of players with per-infoset action blocks.

    ``sizes[i][j]`` is the number of actions in infoset j of player i.  The
    flat variable order is player-major, infoset-minor, action-innermost.
    """

    sizes: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.sizes or any(not p for p in self.sizes):
            raise ValueError("every player needs at least one infoset")
        if any(m < 1 for p in self.sizes for m in p):
            raise ValueError("every infoset needs at least one action")

    @staticmethod
    def of(*player_sizes) -> "BlockStructure":
        """Build from per-player lists of infoset action counts."""
        return BlockStructure(tuple(tuple(int(m) for m in p) for p in player_sizes))

    @staticmethod
    def single(sizes) -> "BlockStructure":
        """Single-player structure from a list of infoset action counts."""
        return BlockStructure.of(list(sizes))

    @property
    def num_players(self) -> int:
        return len(self.sizes)

    @property
    def num_vars(self) -> int:
        return sum(m for p in self.sizes for m in p)

    @property
    def num_blocks(self) -> int:
        return sum(len(p) for p in self.sizes)

    def infoset_count(self, player: int) -> int:
        return len(self.sizes[player])

    def block_sizes(self) -> list[int]:
        """All block sizes in flat block order."""
        return [m for p in self.sizes for m in p]

    def block_offset(self, player: int, infoset: int) -> int:
        off = 0
        for i, p in enumerate(self.sizes):
            for j, m in enumerate(p):
                if (i, j) == (player, infoset):
                    return off
                off += m
        raise IndexError(f"no block ({player}, {infoset})")

    def block_slice(self, player: int, infoset: int) -> slice:
        off = self.block_offset(player, infoset)
        return slice(off, off + self.sizes[player][infoset])

    def var_index(self, player: int, infoset: int, action: int) -> int:
        if not 0 <= action < self.sizes[player][infoset]:
            raise IndexError(f"no action {action} in block ({player}, {infoset})")
        return self.block_offset(player, infoset) + action

    def var_triple(self, v: int) -> tuple[int, int, int]:
        """Inverse of var_index."""
        off = 0
        for i, p in enumerate(self.sizes):
            for j, m in enumerate(p):
                if v < off + m:
                    return i, j, v - off
                off += m
        raise IndexError(f"variable {v} out of range")

    def player_slice(self, player: int) -> slice:
        start = self.block_offset(player, 0)
        n = sum(self.sizes[player])
        return slice(start, start + n)

    def blocks(self) -> list[tuple[int, int, slice]]:
        """(player, infoset, variable slice) for every block."""
        out = []
        for i, p in enumerate(self.sizes):
            for j in range(len(p)):
                out.append((i, j, self.block_slice(i, j)))
        return out

    def var_key(self, v: int) -> str:
        """1-based "player.infoset.action" key used by the JSON format."""
        i, j, a = self.var_triple(v)
        return f"{i + 1}.{j + 1}.{a + 1}"

    def var_from_key(self, key: str) -> int:
        try:
            i, j, a = (int(t) for t in key.split("."))
        except ValueError as exc:
            raise ValueError(f"bad variable key {key!r}") from exc
        return self.var_index(i - 1, j - 1, a - 1)


def mono_mul(a: Mono, b: Mono) -> Mono:
    return tuple(x + y for x, y in zip(a, b))

def mono_degree(a: Mono) -> int:
    return sum(a)

def unit_mono(n: int, v: int, power: int = 1) -> Mono:
    return tuple(power if i == v else 0 for i in range(n))

def zero_mono(n: int) -> Mono:
    return (0,) * n


def monomials_upto(n: int, d: int) -> list[Mono]:
    """All exponent tuples with total degree <= d, in graded lex order."""
    out: list[Mono] = []
    for deg in range(d + 1):
        out.extend(_monomials_of_degree(n, deg))
    return out


def _monomials_of_degree(n: int, deg: int) -> list[Mono]:
    if n == 1:
        return [(deg,)]
    out = []
    for first in range(deg, -1, -1):
        for rest in _monomials_of_degree(n - 1, deg - first):
            out.append((first,) + rest)
    return out


def multilinear_monomials_upto(n: int, d: int) -> list[Mono]:
    """0/1-exponent tuples with total degree <= d, graded lex order."""
    out: list[Mono] = []
    for deg in range(min(n, d) + 1):
        combos = sorted(itertools.combinations(range(n), deg))
        monos = [tuple(1 if i in c else 0 for i in range(n)) for c in combos]
        monos.sort(reverse=True)
        out.extend(monos)
    return out
