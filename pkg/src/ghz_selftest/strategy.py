"""Quantum strategies for the augmented GHZ game.

A strategy is a shared unit vector ``L`` on ``A (x) B (x) C`` together with,
for every player ``W``, round ``i`` and bit ``b``:

* a single-round reflection ``R^W_{i->b}`` (``singles[(W, i, b)]``), and
* for every ordered pair of distinct rounds, a reflection
  ``R^W_{i->b|j->c}`` (``pairs[(W, i, b, j, c)]``) that commutes with its
  partner ``R^W_{j->c|i->b}``.

``X'_{W,i}`` is ``singles[(W, i, 0)]`` and ``Z'_{W,i}`` is
``singles[(W, i, 1)]``.  A measurement outcome of +1 (eigenvalue +1) is
reported as the output +1.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import jsonschema
import numpy as np

from . import game, tensor
from .game import PLAYERS, InputCombo, OutputCombo, enumerate_inputs, win_predicate
from .tensor import DEFAULT_TOL, X, Z

NOISE_KINDS = ("rotation", "state-mix", "crosstalk")
# rotation axis bisecting X and Z
BISECTOR = (X + Z) / np.sqrt(2)


class StrategyFormatError(ValueError):
    """A strategy file violates the schema; ``path`` points at the bad field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True, eq=False)
class Strategy:
    n: int
    dims: tuple
    state: np.ndarray
    singles: dict
    pairs: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.n < 1:
            raise ValueError("a strategy needs n >= 1")
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise ValueError(f"dims must be three positive integers, got {self.dims}")
        state = np.asarray(self.state, dtype=complex).ravel()
        if state.size != self.dim:
            raise ValueError(f"state has {state.size} amplitudes, dims need {self.dim}")
        if not np.all(np.isfinite(state)):
            raise ValueError("state has non-finite amplitudes")
        object.__setattr__(self, "state", tensor.freeze(state))
        object.__setattr__(self, "singles", {k: tensor.freeze(v) for k, v in self.singles.items()})
        object.__setattr__(self, "pairs", {k: tensor.freeze(v) for k, v in self.pairs.items()})

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    def player_dim(self, player: str) -> int:
        return self.dims[PLAYERS.index(player)]

    def xp(self, player: str, i: int) -> np.ndarray:
        """``X'_{W,i}``."""
        return self.singles[(player, i, 0)]

    def zp(self, player: str, i: int) -> np.ndarray:
        """``Z'_{W,i}``."""
        return self.singles[(player, i, 1)]

    def operator_for(self, player: int, combo: InputCombo) -> np.ndarray:
        """Reflection whose sign is player ``player``'s answer on the scored round."""
        w = PLAYERS[player]
        fa = combo.f[player]
        if len(fa.entries) == 1:
            (i, b), = fa.entries
            return self.singles[(w, i, b)]
        (i, b), (j, c) = fa.entries
        return self.pairs[(w, i, b, j, c)]


def single_keys(n: int) -> list:
    return [(w, i, b) for w in PLAYERS for i in range(1, n + 1) for b in (0, 1)]


def pair_keys(n: int) -> list:
    return [
        (w, i, b, j, c)
        for w in PLAYERS
        for i, j in itertools.permutations(range(1, n + 1), 2)
        for b in (0, 1)
        for c in (0, 1)
    ]


# -- constructors ------------------------------------------------------------

def g_state() -> np.ndarray:
    """|G> = (sum_{r+s+t<=1} |rst> - sum_{r+s+t>=2} |rst>) / (2 sqrt 2)."""
    amps = [1.0 if sum(bits) <= 1 else -1.0 for bits in itertools.product((0, 1), repeat=3)]
    return np.array(amps, dtype=complex) / (2 * np.sqrt(2))


def ideal_strategy(n: int) -> Strategy:
    """|G>^(x)n with player W holding qubit W of every copy; X on input 0, Z on input 1."""
    n = int(n)
    if n < 1:
        raise ValueError("ideal_strategy needs n >= 1")
    tensor.check_size(8**n, "ideal state")
    psi = np.ones((), dtype=complex)
    for _ in range(n):
        psi = np.multiply.outer(psi, g_state().reshape(2, 2, 2))
    # axes (a1, b1, c1, a2, ...) -> (a1..an, b1..bn, c1..cn)
    order = [3 * k + p for p in range(3) for k in range(n)]
    state = psi.transpose(order).reshape(-1) if n else psi.reshape(-1)
    qdims = [2] * n
    singles, pairs = {}, {}
    for w in PLAYERS:
        for i in range(1, n + 1):
            for b, pauli in ((0, X), (1, Z)):
                singles[(w, i, b)] = tensor.apply_on(pauli, [i - 1], qdims)
    for w, i, b, j, c in pair_keys(n):
        pairs[(w, i, b, j, c)] = singles[(w, i, b)]
    d = 2**n
    return Strategy(n, (d, d, d), state, singles, pairs)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_reflection(d: int, rng: np.random.Generator, basis: np.ndarray | None = None) -> np.ndarray:
    u = haar_unitary(d, rng) if basis is None else basis
    signs = rng.choice((-1.0, 1.0), size=d)
    return (u * signs) @ u.conj().T


def random_strategy(n: int, dims: Sequence[int] = (2, 2, 2), rng: np.random.Generator | None = None) -> Strategy:
    """Haar-random state and reflections; each commuting pair shares a random eigenbasis."""
    rng = np.random.default_rng() if rng is None else rng
    dims = tuple(int(d) for d in dims)
    dim = int(np.prod(dims))
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    psi /= np.linalg.norm(psi)
    singles = {}
    for w, i, b in single_keys(n):
        singles[(w, i, b)] = random_reflection(dims[PLAYERS.index(w)], rng)
    pairs = {}
    for w in PLAYERS:
        d = dims[PLAYERS.index(w)]
        for i, j in itertools.combinations(range(1, n + 1), 2):
            for b in (0, 1):
                for c in (0, 1):
                    u = haar_unitary(d, rng)
                    pairs[(w, i, b, j, c)] = random_reflection(d, rng, u)
                    pairs[(w, j, c, i, b)] = random_reflection(d, rng, u)
    return Strategy(n, dims, psi, singles, pairs)


# -- validation --------------------------------------------------------------

@dataclass
class ValidationReport:
    ok: bool
    violations: list

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": self.violations}


def validate(s: Strategy, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check normalization, reflection property, completeness and pair commutation."""
    violations = []
    norm_err = abs(float(np.vdot(s.state, s.state).real) - 1.0)
    if norm_err > tol:
        violations.append({"check": "normalized", "key": "state", "residual": norm_err})

    def check_reflection(kind, key, m):
        d = s.player_dim(key[0])
        if m.shape != (d, d):
            violations.append({"check": "shape", "key": [kind, *key], "residual": None,
                               "detail": f"expected {(d, d)}, got {m.shape}"})
            return
        herm = float(np.linalg.norm(m - m.conj().T))
        square = float(np.linalg.norm(m @ m - np.eye(d)))
        if herm > tol:
            violations.append({"check": "hermitian", "key": [kind, *key], "residual": herm})
        if square > tol:
            violations.append({"check": "involution", "key": [kind, *key], "residual": square})

    for key in single_keys(s.n):
        if key not in s.singles:
            violations.append({"check": "missing", "key": ["single", *key], "residual": None})
        else:
            check_reflection("single", key, s.singles[key])
    for key in pair_keys(s.n):
        if key not in s.pairs:
            violations.append({"check": "missing", "key": ["pair", *key], "residual": None})
        else:
            check_reflection("pair", key, s.pairs[key])
    for w, i, b, j, c in pair_keys(s.n):
        if i > j:
            continue
        a, p = s.pairs.get((w, i, b, j, c)), s.pairs.get((w, j, c, i, b))
        if a is None or p is None or a.shape != p.shape:
            continue
        res = tensor.commutator_norm(a, p)
        if res > tol:
            violations.append({"check": "commute", "key": ["pair", w, i, b, j, c], "residual": res})
    return ValidationReport(not violations, violations)


# -- exact scoring -----------------------------------------------------------

def _check_combo(s: Strategy, combo: InputCombo):
    if combo.n != s.n:
        raise ValueError(f"input is for n={combo.n}, strategy has n={s.n}")


def losing_probability(s: Strategy, combo: InputCombo) -> float:
    """``||R^A R^B R^C L + (-1)^(x or y or z) L||^2 / 4`` with the pair operator for the doubly-queried player."""
    _check_combo(s, combo)
    ops = [s.operator_for(p, combo) for p in range(3)]
    sign = -1.0 if any(combo.xyz) else 1.0
    v = tensor.apply_local(ops, s.state, s.dims) + sign * s.state
    return float(min(max(np.vdot(v, v).real / 4.0, 0.0), 1.0))


def losing_total(s: Strategy) -> float:
    """The overall losing probability epsilon (summed directly, not as 1 - win)."""
    total = sum(prob * losing_probability(s, combo) for combo, prob in enumerate_inputs(s.n))
    return float(min(max(total, 0.0), 1.0))


def winning_probability(s: Strategy) -> float:
    return 1.0 - losing_total(s)


# -- symmetries and noise ----------------------------------------------------

def permute_players(s: Strategy, sigma: Sequence[int]) -> Strategy:
    """Hand player p's subsystem and reflections to player ``sigma[p-1]`` (1-based images)."""
    sigma = tuple(int(x) for x in sigma)
    if sorted(sigma) != [1, 2, 3]:
        raise ValueError(f"sigma must be a permutation of (1, 2, 3), got {sigma}")
    inv = [sigma.index(q + 1) for q in range(3)]  # new axis q <- old axis inv[q]
    state = s.state.reshape(s.dims).transpose(inv).reshape(-1)
    dims = tuple(s.dims[inv[q]] for q in range(3))
    rename = {PLAYERS[p]: PLAYERS[sigma[p] - 1] for p in range(3)}
    singles = {(rename[w], i, b): m for (w, i, b), m in s.singles.items()}
    pairs = {(rename[w], i, b, j, c): m for (w, i, b, j, c), m in s.pairs.items()}
    return Strategy(s.n, dims, state, singles, pairs)


@dataclass(frozen=True)
class NoiseSpec:
    """Deterministic perturbation families.

    ``rotation``: conjugate every reflection of player A by a rotation of angle
    ``theta`` about the (X+Z)/sqrt2 axis applied to each of A's qubits.
    ``state-mix``: replace L by the normalized ``(1-theta) L + theta u`` with
    ``u`` the uniform superposition.
    ``crosstalk``: conjugate each single ``Z'_{A,i}`` by ``exp(-i theta/2 Y_i X_{i+1})``
    (cyclic; ``Y_1`` alone when n = 1), leaving pair operators untouched.  Unlike
    the other two, this breaks the X'/Z' algebra itself.

    ``seed`` is carried for provenance; none of the kinds draw randomness.
    """

    kind: str = "rotation"
    theta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not np.isfinite(self.theta) or self.theta < 0:
            raise ValueError(f"theta must be finite and >= 0, got {self.theta}")
        if self.kind == "state-mix" and self.theta > 1:
            raise ValueError("state-mix weight must lie in [0, 1]")


def _qubit_count(d: int, what: str) -> int:
    m = int(round(np.log2(d)))
    if 2**m != d:
        raise ValueError(f"{what} needs a qubit register (dimension a power of 2), got {d}")
    return m


def perturb(s: Strategy, spec: NoiseSpec) -> Strategy:
    if spec.theta == 0:
        return s
    singles, pairs, state = dict(s.singles), dict(s.pairs), s.state
    if spec.kind == "rotation":
        m = _qubit_count(s.dims[0], "rotation noise")
        u = tensor.kron(*([tensor.axis_rotation(spec.theta, BISECTOR)] * m))
        ud = u.conj().T
        singles = {k: (u @ v @ ud if k[0] == "A" else v) for k, v in singles.items()}
        pairs = {k: (u @ v @ ud if k[0] == "A" else v) for k, v in pairs.items()}
    elif spec.kind == "state-mix":
        uniform = np.full(s.dim, 1 / np.sqrt(s.dim), dtype=complex)
        state = tensor.normalize((1 - spec.theta) * s.state + spec.theta * uniform)
    else:
        m = _qubit_count(s.dims[0], "crosstalk noise")
        if m != s.n:
            raise ValueError("crosstalk noise needs one qubit of A per round")
        qdims = [2] * m
        for i in range(1, s.n + 1):
            if s.n == 1:
                gen = tensor.Y
            else:
                nxt = i % s.n
                gen = tensor.apply_on(tensor.kron(tensor.Y, X), [i - 1, nxt], qdims)
            v = tensor.axis_rotation(spec.theta, gen)
            singles[("A", i, 1)] = v @ singles[("A", i, 1)] @ v.conj().T
    out = Strategy(s.n, s.dims, state, singles, pairs)
    report = validate(out)
    if not report.ok:
        raise ValueError(f"perturbation produced an invalid strategy: {report.violations[:3]}")
    return out


# -- Monte Carlo -------------------------------------------------------------

def outcome_distribution(s: Strategy, combo: InputCombo) -> list:
    """Born-rule distribution ``[(OutputCombo, probability), ...]`` for one query.

    Single queries use the spectral projectors ``(I +/- R)/2``; a double query
    uses the joint projectors ``(I +/- R_i)(I +/- R_j)/4`` of the commuting pair.
    """
    _check_combo(s, combo)
    per_player = []
    for p, w in enumerate(PLAYERS):
        fa = combo.f[p]
        d = s.dims[p]
        eye = np.eye(d)
        if len(fa.entries) == 1:
            (i, b), = fa.entries
            r = s.singles[(w, i, b)]
            per_player.append([(((i, sg),), (eye + sg * r) / 2) for sg in (1, -1)])
        else:
            (i, b), (j, c) = fa.entries
            ri, rj = s.pairs[(w, i, b, j, c)], s.pairs[(w, j, c, i, b)]
            per_player.append([
                (((i, si), (j, sj)), (eye + si * ri) @ (eye + sj * rj) / 4)
                for si in (1, -1)
                for sj in (1, -1)
            ])
    dist = []
    for choice in itertools.product(*per_player):
        v = tensor.apply_local([proj for _, proj in choice], s.state, s.dims)
        dist.append((OutputCombo(tuple(g for g, _ in choice)), float(np.vdot(v, v).real)))
    probs = np.array([p for _, p in dist])
    if np.any(probs < -1e-9) or abs(probs.sum() - 1) > 1e-8:
        raise tensor.NumericalError(
            f"outcome probabilities do not form a distribution (sum {probs.sum():.3g}); "
            "are the reflections valid?"
        )
    return dist


def _simulate_shard(s: Strategy, rounds: int, seq: np.random.SeedSequence, table: list, cache: dict) -> int:
    rng = np.random.default_rng(seq)
    idx = game.sample_indices(s.n, rng, rounds)
    wins = 0
    for k in np.unique(idx):
        k = int(k)
        count = int(np.count_nonzero(idx == k))
        if k not in cache:
            combo = table[k][0]
            dist = outcome_distribution(s, combo)
            probs = np.clip(np.array([p for _, p in dist]), 0, None)
            won = np.array([win_predicate(combo, o) for o, _ in dist])
            cache[k] = (probs / probs.sum(), won)
        probs, won = cache[k]
        wins += int(won[rng.choice(len(probs), size=count, p=probs)].sum())
    return wins


def simulate(s: Strategy, rounds: int, seed: int = 0, shards: int = 1) -> float:
    """Empirical win frequency over ``rounds`` sampled games.

    Each game draws a referee query, samples the three players' outcomes from
    the Born rule (see :func:`outcome_distribution`) and scores them with the
    win predicate.  The seed is split with ``SeedSequence(seed).spawn(shards)``;
    shard ``k`` plays ``rounds // shards`` games (the first ``rounds % shards``
    shards one more).  Shards are independent, so they may run concurrently
    and the result depends only on ``(seed, shards, rounds)``.
    """
    rounds, shards = int(rounds), int(shards)
    if rounds < 1 or shards < 1:
        raise ValueError("rounds and shards must be positive")
    table = enumerate_inputs(s.n)
    seqs = np.random.SeedSequence(seed).spawn(shards)
    cache = {}
    wins = 0
    for k, seq in enumerate(seqs):
        count = rounds // shards + (1 if k < rounds % shards else 0)
        if count:
            wins += _simulate_shard(s, count, seq, table, cache)
    return wins / rounds


# -- file format -------------------------------------------------------------

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_MATRIX = {
    "type": "object",
    "required": ["rows", "cols", "entries"],
    "properties": {
        "rows": {"type": "integer", "minimum": 1},
        "cols": {"type": "integer", "minimum": 1},
        "entries": {"type": "array", "items": _COMPLEX},
    },
}
_ROUND = {"type": "integer", "minimum": 1}
_BIT = {"enum": [0, 1]}
_PLAYER = {"enum": list(PLAYERS)}

STRATEGY_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["n", "dims", "state", "singles", "pairs"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "dims": {
            "type": "object",
            "required": list(PLAYERS),
            "properties": {w: {"type": "integer", "minimum": 1} for w in PLAYERS},
        },
        "state": {"type": "array", "items": _COMPLEX},
        "singles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["player", "round", "bit", "matrix"],
                "properties": {"player": _PLAYER, "round": _ROUND, "bit": _BIT, "matrix": _MATRIX},
            },
        },
        "pairs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["player", "i", "b", "j", "c", "matrix"],
                "properties": {
                    "player": _PLAYER, "i": _ROUND, "b": _BIT, "j": _ROUND, "c": _BIT, "matrix": _MATRIX,
                },
            },
        },
    },
}


def to_json(s: Strategy) -> dict:
    return {
        "n": s.n,
        "dims": dict(zip(PLAYERS, s.dims)),
        "state": tensor.vector_to_json(s.state),
        "singles": [
            {"player": w, "round": i, "bit": b, "matrix": tensor.matrix_to_json(m)}
            for (w, i, b), m in sorted(s.singles.items())
        ],
        "pairs": [
            {"player": w, "i": i, "b": b, "j": j, "c": c, "matrix": tensor.matrix_to_json(m)}
            for (w, i, b, j, c), m in sorted(s.pairs.items())
        ],
    }


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _matrix(data, path: str, d: int) -> np.ndarray:
    rows, cols = data["rows"], data["cols"]
    if (rows, cols) != (d, d):
        raise StrategyFormatError(path, f"expected a {d}x{d} matrix, got {rows}x{cols}")
    if len(data["entries"]) != rows * cols:
        raise StrategyFormatError(path + ".entries", f"expected {rows * cols} entries, got {len(data['entries'])}")
    return tensor.matrix_from_json(data)


def from_json(data) -> Strategy:
    """Parse and schema-check a strategy document; raises :class:`StrategyFormatError`."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise StrategyFormatError("$", f"invalid JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(STRATEGY_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise StrategyFormatError(_path(err.absolute_path), err.message)
    n = data["n"]
    dims = tuple(data["dims"][w] for w in PLAYERS)
    dim = int(np.prod(dims))
    if len(data["state"]) != dim:
        raise StrategyFormatError("$.state", f"expected {dim} amplitudes, got {len(data['state'])}")
    singles, pairs = {}, {}
    for k, item in enumerate(data["singles"]):
        base = f"$.singles[{k}]"
        key = (item["player"], item["round"], item["bit"])
        if key[1] > n:
            raise StrategyFormatError(base + ".round", f"round {key[1]} exceeds n={n}")
        if key in singles:
            raise StrategyFormatError(base, f"duplicate single {key}")
        singles[key] = _matrix(item["matrix"], base + ".matrix", dims[PLAYERS.index(key[0])])
    for k, item in enumerate(data["pairs"]):
        base = f"$.pairs[{k}]"
        key = (item["player"], item["i"], item["b"], item["j"], item["c"])
        for field_, r in (("i", key[1]), ("j", key[3])):
            if r > n:
                raise StrategyFormatError(f"{base}.{field_}", f"round {r} exceeds n={n}")
        if key[1] == key[3]:
            raise StrategyFormatError(base, "pair rounds i and j must differ")
        if key in pairs:
            raise StrategyFormatError(base, f"duplicate pair {key}")
        pairs[key] = _matrix(item["matrix"], base + ".matrix", dims[PLAYERS.index(key[0])])
    for key in single_keys(n):
        if key not in singles:
            raise StrategyFormatError("$.singles", f"missing single for player {key[0]}, round {key[1]}, bit {key[2]}")
    for key in pair_keys(n):
        if key not in pairs:
            raise StrategyFormatError("$.pairs", f"missing pair {key}")
    state = tensor.vector_from_json(data["state"])
    return Strategy(n, dims, state, singles, pairs)


def save(s: Strategy, path) -> None:
    Path(path).write_text(json.dumps(to_json(s)))


def load(path) -> Strategy:
    return from_json(Path(path).read_text())
