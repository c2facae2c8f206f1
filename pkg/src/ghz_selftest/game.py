"""The augmented N-round GHZ game.

The referee picks ``r`` in {0,1,2,3} and an ordered pair of distinct rounds
``(i, j)``.  Every player is queried on round ``i``; when ``r > 0`` player
``r`` is additionally queried on round ``j``.  The round-``i`` inputs are
uniform over even-parity bit triples, and the game is scored on round ``i``
alone: the product of the three +/-1 outputs must equal
``(-1)**(not (x or y or z))``.

With a single round no distinct pair exists, so ``n == 1`` is the plain GHZ
game (only ``r == 0``).  Rounds are 1-based everywhere.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

PLAYERS = ("A", "B", "C")
EVEN_TRIPLES = ((0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0))
CLASSICAL_MAX_ROUNDS = 2


def bit_to_sign(bit: int) -> int:
    """The 0 -> +1, 1 -> -1 correspondence between bits and outputs."""
    return 1 - 2 * int(bit)


def sign_to_bit(sign: int) -> int:
    return 0 if sign == 1 else 1


@dataclass(frozen=True)
class PartialAssignment:
    """Inputs for one player: ``((round, bit), ...)`` with the scored round first."""

    entries: tuple

    def __post_init__(self):
        entries = tuple((int(r), int(b)) for r, b in self.entries)
        object.__setattr__(self, "entries", entries)
        rounds = [r for r, _ in entries]
        if not 1 <= len(entries) <= 2:
            raise ValueError("a partial assignment covers one or two rounds")
        if len(set(rounds)) != len(rounds):
            raise ValueError(f"repeated round in {entries}")
        if any(b not in (0, 1) for _, b in entries):
            raise ValueError(f"input bits must be 0/1, got {entries}")

    @property
    def rounds(self) -> tuple:
        return tuple(r for r, _ in self.entries)

    def __call__(self, round_: int) -> int:
        for r, b in self.entries:
            if r == round_:
                return b
        raise KeyError(round_)


@dataclass(frozen=True)
class InputCombo:
    n: int
    r: int
    i: int
    j: int | None
    f: tuple  # three PartialAssignment

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(self.f))
        if self.r not in (0, 1, 2, 3):
            raise ValueError(f"r must be in 0..3, got {self.r}")
        if not 1 <= self.i <= self.n:
            raise ValueError(f"round i={self.i} out of range 1..{self.n}")
        if self.r == 0:
            if self.j is not None:
                raise ValueError("r = 0 queries a single round; j must be None")
        elif self.j is None or self.j == self.i or not 1 <= self.j <= self.n:
            raise ValueError(f"r > 0 needs a round j != i in 1..{self.n}")
        for p, fa in enumerate(self.f):
            want = (self.i, self.j) if self.r == p + 1 else (self.i,)
            if fa.rounds != want:
                raise ValueError(f"player {p + 1} domain {fa.rounds}, expected {want}")
        if sum(fa(self.i) for fa in self.f) % 2:
            raise ValueError("round-i inputs must have even parity")

    @property
    def xyz(self) -> tuple:
        return tuple(fa(self.i) for fa in self.f)

    @property
    def pair_player(self) -> int | None:
        """0-based index of the doubly-queried player, if any."""
        return self.r - 1 if self.r else None

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "r": self.r,
            "i": self.i,
            "j": self.j,
            "f": [[list(e) for e in fa.entries] for fa in self.f],
        }

    @classmethod
    def from_json(cls, data) -> "InputCombo":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            n=int(data["n"]),
            r=int(data["r"]),
            i=int(data["i"]),
            j=None if data.get("j") is None else int(data["j"]),
            f=tuple(PartialAssignment(tuple(map(tuple, fa))) for fa in data["f"]),
        )


@dataclass(frozen=True)
class OutputCombo:
    g: tuple  # per player: ((round, +/-1), ...)

    def __post_init__(self):
        g = tuple(tuple((int(r), int(v)) for r, v in gp) for gp in self.g)
        if len(g) != 3:
            raise ValueError("need outputs for three players")
        for gp in g:
            if any(v not in (-1, 1) for _, v in gp):
                raise ValueError(f"outputs must be +/-1, got {gp}")
        object.__setattr__(self, "g", g)

    def value(self, player: int, round_: int) -> int:
        for r, v in self.g[player]:
            if r == round_:
                return v
        raise KeyError(round_)

    def to_json(self) -> dict:
        return {"g": [[list(e) for e in gp] for gp in self.g]}

    @classmethod
    def from_json(cls, data) -> "OutputCombo":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(tuple(tuple(map(tuple, gp)) for gp in data["g"]))


def _combo(n: int, r: int, i: int, j: int | None, xyz: Sequence[int], extra: int | None) -> InputCombo:
    f = []
    for p in range(3):
        entries = [(i, xyz[p])]
        if r == p + 1:
            entries.append((j, extra))
        f.append(PartialAssignment(tuple(entries)))
    return InputCombo(n, r, i, j, tuple(f))


def enumerate_inputs(n: int, exact: bool = False) -> list:
    """Every input combination with its probability.

    Returns ``[(InputCombo, probability), ...]`` ordered by ``r``, then ``i``,
    ``j``, the round-``i`` triple and the extra bit.  ``exact=True`` yields
    :class:`fractions.Fraction` probabilities.
    """
    n = int(n)
    if n < 1:
        raise ValueError("the game needs at least one round")
    if n == 1:
        p0 = Fraction(1, 4)
        out = [(_combo(1, 0, 1, None, xyz, None), p0) for xyz in EVEN_TRIPLES]
    else:
        p0 = Fraction(1, 16 * n)
        p1 = Fraction(1, 32 * n * (n - 1))
        out = [
            (_combo(n, 0, i, None, xyz, None), p0)
            for i in range(1, n + 1)
            for xyz in EVEN_TRIPLES
        ]
        for r in (1, 2, 3):
            for i, j in itertools.permutations(range(1, n + 1), 2):
                for xyz in EVEN_TRIPLES:
                    for extra in (0, 1):
                        out.append((_combo(n, r, i, j, xyz, extra), p1))
    if exact:
        return out
    return [(c, float(p)) for c, p in out]


@functools.lru_cache(maxsize=16)
def _combo_table(n: int) -> tuple:
    return tuple(enumerate_inputs(n))


def combo_index(n: int, r, i, j, t, extra):
    """Position in :func:`enumerate_inputs` order; works elementwise on arrays.

    ``t`` indexes :data:`EVEN_TRIPLES`; ``j`` and ``extra`` are ignored when
    ``r == 0``.  Rounds are 1-based.
    """
    r, i, j, t, extra = (np.asarray(v) for v in (r, i, j, t, extra))
    a, b = i - 1, j - 1
    single = a * 4 + t
    if n == 1:
        return single
    pair = a * (n - 1) + np.where(b < a, b, b - 1)
    double = 4 * n + (r - 1) * 8 * n * (n - 1) + pair * 8 + t * 2 + extra
    return np.where(r == 0, single, double)


def sample_indices(n: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` referee queries as indices into :func:`enumerate_inputs`.

    Follows the referee's steps: uniform ``r``, an ordered pair of distinct
    rounds, a uniform even-parity triple and, for ``r > 0``, a uniform extra bit.
    """
    n = int(n)
    if n < 1:
        raise ValueError("the game needs at least one round")
    if n == 1:
        return rng.integers(4, size=size)
    r = rng.integers(4, size=size)
    a = rng.integers(n, size=size)
    b = rng.integers(n - 1, size=size)
    b = b + (b >= a)
    t = rng.integers(4, size=size)
    extra = rng.integers(2, size=size)
    return combo_index(n, r, a + 1, b + 1, t, extra)


def sample_input(n: int, rng: np.random.Generator) -> InputCombo:
    """Draw one referee query; the caller owns ``rng`` (no shared state)."""
    k = int(sample_indices(n, rng, 1)[0])
    return _combo_table(int(n))[k][0]


def win_predicate(inp: InputCombo, out: OutputCombo) -> bool:
    """Round-``i`` GHZ condition; raises if output domains do not match inputs."""
    for p in range(3):
        got = tuple(r for r, _ in out.g[p])
        if sorted(got) != sorted(inp.f[p].rounds):
            raise ValueError(f"player {p + 1} answered rounds {got}, asked {inp.f[p].rounds}")
    product = 1
    for p in range(3):
        product *= out.value(p, inp.i)
    x, y, z = inp.xyz
    target = 1 if (x or y or z) else -1
    return product == target


# -- classical strategies ----------------------------------------------------

@dataclass(frozen=True)
class DeterministicStrategy:
    """Per player: ``single[p][(i, b)]`` and ``pair[p][((i, b), (j, c))]`` give +/-1.

    Pair answers are keyed by the sorted partial function, so a player cannot
    tell which of the two rounds is scored.
    """

    single: tuple
    pair: tuple

    def answer(self, p: int, fa: PartialAssignment) -> tuple:
        if len(fa.entries) == 1:
            (r, b), = fa.entries
            return ((r, self.single[p][(r, b)]),)
        key = tuple(sorted(fa.entries))
        values = self.pair[p][key]
        return tuple(zip((e[0] for e in key), values))

    def play(self, inp: InputCombo) -> OutputCombo:
        return OutputCombo(tuple(self.answer(p, inp.f[p]) for p in range(3)))


def deterministic_value(strategy: DeterministicStrategy, n: int) -> Fraction:
    """Exact winning probability of a deterministic classical strategy."""
    total = Fraction(0)
    for combo, prob in enumerate_inputs(n, exact=True):
        if win_predicate(combo, strategy.play(combo)):
            total += prob
    return total


def product_strategy(per_round: Sequence[Sequence[int]], n: int) -> DeterministicStrategy:
    """Play a fixed single-round answer table independently on every round.

    ``per_round[p][x]`` is player ``p``'s +/-1 answer to input bit ``x``.
    """
    single, pair = [], []
    for p in range(3):
        single.append({(i, b): per_round[p][b] for i in range(1, n + 1) for b in (0, 1)})
        pair.append({
            ((i, b), (j, c)): (per_round[p][b], per_round[p][c])
            for i, j in itertools.combinations(range(1, n + 1), 2)
            for b in (0, 1)
            for c in (0, 1)
        })
    return DeterministicStrategy(tuple(single), tuple(pair))


def classical_value(n: int) -> Fraction:
    """Best winning probability over deterministic classical strategies.

    The search enumerates every single-round answer table for all three
    players.  Given those, each doubly-queried input ``(U, f)`` of player
    ``r`` is scored only through combos where the other two players answer
    single rounds, and its two round answers enter disjoint combos, so they
    are maximized independently and exactly.  For ``n == 1`` this is the plain
    search over 4**3 = 64 strategies.
    """
    n = int(n)
    if n < 1:
        raise ValueError("the game needs at least one round")
    if n > CLASSICAL_MAX_ROUNDS:
        raise ValueError(f"exhaustive classical search is limited to n <= {CLASSICAL_MAX_ROUNDS}")
    combos = enumerate_inputs(n, exact=True)
    denom = 4 if n == 1 else 32 * n * (n - 1)
    singles_keys = [(i, b) for i in range(1, n + 1) for b in (0, 1)]
    tables = [dict(zip(singles_keys, vals)) for vals in itertools.product((1, -1), repeat=len(singles_keys))]

    # integer weights: probability * denom
    single_combos = []
    grouped = {}  # (player, sorted partial fn, scored round) -> [(xyz, weight)]
    for combo, prob in combos:
        w = int(prob * denom)
        target = 1 if any(combo.xyz) else -1
        if combo.r == 0:
            single_combos.append((combo.i, combo.xyz, target, w))
        else:
            p = combo.r - 1
            key = (p, tuple(sorted(combo.f[p].entries)), combo.i)
            grouped.setdefault(key, []).append((combo.xyz, target, w))

    best = 0
    for t in itertools.product(tables, repeat=3):
        value = 0
        for i, xyz, target, w in single_combos:
            if t[0][(i, xyz[0])] * t[1][(i, xyz[1])] * t[2][(i, xyz[2])] == target:
                value += w
        for (p, _, i), members in grouped.items():
            plus = minus = 0
            for xyz, target, w in members:
                others = 1
                for q in range(3):
                    if q != p:
                        others *= t[q][(i, xyz[q])]
                if others == target:
                    plus += w
                else:
                    minus += w
            value += max(plus, minus)
        best = max(best, value)
    return Fraction(best, denom)


def ideal_strategy(n: int):
    """|G>^(x)n with X on input 0 and Z on input 1; player W holds qubit W of each copy."""
    from .strategy import ideal_strategy as _ideal

    return _ideal(n)
