"""Swap isometries, extraction of |G>^(x)N and numeric checks of the rigidity chain.

For player ``W`` and round ``k`` the swap isometry maps ``W`` to
``Qbar_k (x) Q_k (x) W``: prepare a Bell pair on ``(Qbar_k, Q_k)``, then apply
``C(X'_k)``, ``H`` on ``Q_k``, ``C(Z'_k)``, ``H`` on ``Q_k``, ``C(X'_k)``, with
``Q_k`` controlling and ``W`` the target.  Chaining rounds 1..N gives an
isometry ``W -> Qbold_1 (x) ... (x) Qbold_N (x) W`` with ``Qbold_k = Qbar_k (x) Q_k``.

Every checker returns plain residual norms; none of them asserts a bound.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import diagram as dg
from . import tensor
from .game import PLAYERS, enumerate_inputs
from .strategy import Strategy, losing_total, permute_players, validate
from .tensor import H, I2, X, Z

STABILIZERS = (
    ("XZZ", tensor.kron(X, Z, Z)),
    ("ZXZ", tensor.kron(Z, X, Z)),
    ("ZZX", tensor.kron(Z, Z, X)),
)

# error scale of each relation family, for context in reports
ERROR_SCALE = {
    "keyineq": "N*sqrt(eps)",
    "anticommute": "N*sqrt(eps)",
    "commute": "N*sqrt(eps)",
    "push": "N*sqrt(eps)",
    "correct_pauli": "N*sqrt(eps)",
    "multi_pauli": "N^3*sqrt(eps)",
    "extraction": "N^4*sqrt(eps)",
}

# push-through partners: player -> op -> (sign, {other player: op})
PUSH_PARTNERS = {
    "A": {"X": (-1, {"B": "X", "C": "X"}), "Z": (1, {"B": "Z", "C": "X"})},
    "B": {"X": (-1, {"A": "X", "C": "X"}), "Z": (1, {"A": "X", "C": "Z"})},
    "C": {"X": (-1, {"A": "X", "B": "X"}), "Z": (1, {"A": "Z", "B": "X"})},
}


class InvalidStrategyError(ValueError):
    pass


def _require_valid(s: Strategy):
    report = validate(s)
    if not report.ok:
        raise InvalidStrategyError(f"strategy fails validation: {report.violations[:3]}")


def _pauli(s: Strategy, player: str, k: int, which: str) -> np.ndarray:
    return s.xp(player, k) if which == "X" else s.zp(player, k)


def _on_player(s: Strategy, player: str, op) -> list:
    ops = [None, None, None]
    ops[PLAYERS.index(player)] = op
    return ops


# -- swap isometries ---------------------------------------------------------

def swap_isometry(s: Strategy, player: str, k: int) -> np.ndarray:
    """Matrix-product form of the round-``k`` swap for ``player``; shape (4d, d), order (Qbar, Q, W)."""
    d = s.player_dim(player)
    dims = [2, 2, d]
    tensor.check_size(16 * d * d, "swap isometry")
    cx = tensor.apply_on(tensor.controlled(s.xp(player, k)), [1, 2], dims)
    cz = tensor.apply_on(tensor.controlled(s.zp(player, k)), [1, 2], dims)
    hq = tensor.apply_on(H, [1], dims)
    prep = np.kron(tensor.bell_state(2).reshape(-1, 1), np.eye(d))
    return cx @ hq @ cz @ hq @ cx @ prep


def swap_isometry_diagram(s: Strategy, player: str, k: int) -> dg.Diagram:
    """The same swap built as a string diagram (independent of :func:`swap_isometry`)."""
    w = dg.WireType(player, s.player_dim(player))
    q = dg.QUBIT
    cx = dg.parallel(dg.wire(q), dg.controlled_box("X'", s.xp(player, k), [w]))
    cz = dg.parallel(dg.wire(q), dg.controlled_box("Z'", s.zp(player, k), [w]))
    hq = dg.parallel(dg.wire(q), dg.box("H", H, [q]), dg.wire(w))
    prep = dg.parallel(dg.bell(q), dg.wire(w))
    return dg.serial(cx, hq, cz, hq, cx, prep)


def chained_isometry(s: Strategy, player: str, upto: int | None = None) -> np.ndarray:
    """Apply the swaps for rounds 1..upto (default N) in order; output (Qbold_1..Qbold_upto, W)."""
    upto = s.n if upto is None else int(upto)
    d = s.player_dim(player)
    tensor.check_size((4**upto * d) * d, "chained isometry")
    theta = np.eye(d, dtype=complex)
    for k in range(1, upto + 1):
        theta = np.kron(np.eye(4 ** (k - 1)), swap_isometry(s, player, k)) @ theta
    return theta


def q_operator(n_rounds: int, d: int, k: int, op) -> np.ndarray:
    """``op`` on ``Q_k`` inside ``Qbold_1..Qbold_n (x) W``."""
    before = 2 ** (2 * (k - 1) + 1)
    after = 2 ** (2 * (n_rounds - k)) * d
    return np.kron(np.kron(np.eye(before), op), np.eye(after))


# -- eigenbasis and extraction -----------------------------------------------

def ghz_eigenbasis() -> np.ndarray:
    """Rows ``G_0..G_7``: the common eigenvectors of XZZ, ZXZ and ZZX.

    ``G_v`` has eigenvalue ``(-1)**b`` for the three operators, where
    ``(b1, b2, b3)`` are the binary digits of ``v`` (most significant first),
    so ``G_0`` is the all-(+1) vector.  Each is phased so that its first
    largest-magnitude amplitude is real and positive.
    """
    basis = np.zeros((8, 8), dtype=complex)
    for v in range(8):
        proj = np.eye(8, dtype=complex)
        for b, (_, op) in zip(((v >> 2) & 1, (v >> 1) & 1, v & 1), STABILIZERS):
            proj = proj @ (np.eye(8) + (-1) ** b * op) / 2
        col = proj[:, int(np.argmax(np.linalg.norm(proj, axis=0)))]
        col = col / np.linalg.norm(col)
        mags = np.round(np.abs(col), 12)
        lead = col[int(np.argmax(mags))]
        basis[v] = col * (abs(lead) / lead)
    return basis


def label_name(label) -> str:
    return ",".join(f"G{v}" for v in label)


@dataclass
class ExtractionResult:
    n: int
    epsilon: float
    weights: np.ndarray  # shape (8,)*n
    method: str
    components: np.ndarray | None = field(default=None, repr=False)  # (8,)*n + (junk,)
    extracted: np.ndarray | None = field(default=None, repr=False)  # (8**n, junk), rounds regrouped

    @property
    def g0_weight(self) -> float:
        return float(self.weights[(0,) * self.n])

    @property
    def fidelity(self) -> float:
        return self.g0_weight

    @property
    def residual(self) -> float:
        """Norm of every component other than ``G_0`` on all rounds."""
        w2 = np.square(self.weights).ravel()
        return float(math.sqrt(max(w2[1:].sum(), 0.0)))

    @property
    def bound_ratio(self) -> float:
        """``residual / (N^4 sqrt(eps))``; NaN when eps is zero."""
        if self.epsilon <= 0:
            return float("nan")
        return self.residual / (self.n**4 * math.sqrt(self.epsilon))

    def weight_map(self) -> dict:
        return {
            label_name(v): float(self.weights[v])
            for v in itertools.product(range(8), repeat=self.n)
        }

    def to_json(self) -> dict:
        ratio = self.bound_ratio
        return {
            "n": self.n,
            "method": self.method,
            "epsilon": self.epsilon,
            "g0_weight": self.g0_weight,
            "fidelity": self.fidelity,
            "residual": self.residual,
            "bound_ratio": None if math.isnan(ratio) else ratio,
            "error_scale": ERROR_SCALE["extraction"],
            "weights": self.weight_map(),
        }


@dataclass
class RegisterLayout:
    """Tensor positions of the output of the three chained isometries applied to L.

    ``registers`` lists ``(name, dim)`` in big-endian order: the ``Qbold``
    registers of A followed by A, then those of B and B, then C.  Player B's
    registers are numbered ``N+1..2N`` and C's ``2N+1..3N``.
    """

    n: int
    registers: list

    def position(self, name: str) -> int:
        return [r for r, _ in self.registers].index(name)

    @classmethod
    def for_strategy(cls, s: Strategy) -> "RegisterLayout":
        regs = []
        for p, w in enumerate(PLAYERS):
            for k in range(1, s.n + 1):
                idx = p * s.n + k
                regs += [(f"Qbar{idx}", 2), (f"Q{idx}", 2)]
            regs.append((w, s.dims[p]))
        return cls(s.n, regs)

    def grouped_order(self) -> list:
        """Axis permutation putting ``(Q_k, Q_{N+k}, Q_{2N+k})`` first for each k, junk after."""
        n = self.n
        front = [self.position(f"Q{p * n + k}") for k in range(1, n + 1) for p in range(3)]
        rest = [i for i in range(len(self.registers)) if i not in front]
        return front + rest


def _basis_power(n: int) -> np.ndarray:
    g = ghz_eigenbasis()  # rows are G_v
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, g)
    return out


def _dense_extract(s: Strategy, thetas: list) -> tuple:
    layout = RegisterLayout.for_strategy(s)
    psi = tensor.apply_local(thetas, s.state, s.dims)
    shape = [d for _, d in layout.registers]
    order = layout.grouped_order()
    full = psi.reshape(shape).transpose(order).reshape(8**s.n, -1)
    coeffs = (_basis_power(s.n).conj() @ full)
    weights = np.linalg.norm(coeffs, axis=1)
    junk = full.shape[1]
    return weights.reshape((8,) * s.n), coeffs.reshape((8,) * s.n + (junk,)), full


def _reduced_extract(s: Strategy, thetas: list) -> np.ndarray:
    n = s.n
    ks = []
    for p, theta in enumerate(thetas):
        d = s.dims[p]
        t = theta.reshape([2] * (2 * n) + [d, d])
        q_axes = [2 * k + 1 for k in range(n)]
        junk_axes = [2 * k for k in range(n)] + [2 * n]
        t = t.transpose(q_axes + junk_axes + [2 * n + 1]).reshape(2**n, -1, d)
        ks.append(np.einsum("qjx,pjy->qpxy", t, t.conj()))
    lt = s.state.reshape(s.dims)
    rho = np.einsum("abc,ABC,qQaA,rRbB,sScC->qrsQRS", lt, lt.conj(), *ks, optimize=True)
    # (qA1..qAn, qB.., qC.., same primed) -> per-round triples
    rho = rho.reshape([2] * (6 * n))
    perm = [p * n + k for k in range(n) for p in range(3)]
    rho = rho.transpose(perm + [3 * n + x for x in perm]).reshape(8**n, 8**n)
    g = _basis_power(n)
    diag = np.einsum("vi,ij,vj->v", g.conj(), rho, g).real
    return np.sqrt(np.clip(diag, 0, None)).reshape((8,) * n)


def extract(s: Strategy, method: str = "auto") -> ExtractionResult:
    """Apply the chained isometries of A, B and C to L and expand in the G basis.

    ``method="dense"`` builds the full extracted vector (needed for components);
    ``"reduced"`` only forms the reduced state of the 3N extracted qubits, which
    is what makes N = 3 feasible.  ``"auto"`` picks dense when it fits under
    the dimension ceiling.
    """
    _require_valid(s)
    thetas = [chained_isometry(s, w) for w in PLAYERS]
    full_size = int(np.prod([t.shape[0] for t in thetas]))
    if method == "auto":
        method = "dense" if full_size <= tensor.max_entries() else "reduced"
    eps = losing_total(s)
    if method == "dense":
        tensor.check_size(full_size, "extracted state")
        weights, coeffs, full = _dense_extract(s, thetas)
        return ExtractionResult(s.n, eps, weights, "dense", coeffs, full)
    if method == "reduced":
        tensor.check_size(64**s.n, "extracted reduced state")
        return ExtractionResult(s.n, eps, _reduced_extract(s, thetas), "reduced")
    raise ValueError(f"unknown extraction method {method!r}")


def designated_negator(label) -> tuple:
    """For a label other than all-G_0: ``(round, stabilizer name)`` whose action negates it."""
    for k, v in enumerate(label, start=1):
        if v:
            bits = ((v >> 2) & 1, (v >> 1) & 1, v & 1)
            return k, STABILIZERS[bits.index(1)][0]
    raise ValueError("the all-G_0 component is fixed by every stabilizer")


def negation_residual(result: ExtractionResult, label) -> float:
    """``||C'_v + C_v||`` where ``C'`` are the components after the designated negator."""
    if result.extracted is None:
        raise ValueError("negation check needs a dense extraction")
    n = result.n
    k, name = designated_negator(label)
    op = dict(STABILIZERS)[name]
    full = result.extracted.reshape((8,) * n + (-1,))
    moved = np.moveaxis(np.tensordot(op, full, axes=([1], [k - 1])), 0, k - 1)
    coeffs = (_basis_power(n).conj() @ moved.reshape(8**n, -1)).reshape((8,) * n + (-1,))
    return float(np.linalg.norm(coeffs[tuple(label)] + result.components[tuple(label)]))


def check_negation(result: ExtractionResult) -> float:
    """Largest negation residual over every non-G_0 label."""
    worst = 0.0
    for label in itertools.product(range(8), repeat=result.n):
        if any(label):
            worst = max(worst, negation_residual(result, label))
    return worst


# -- relation checkers -------------------------------------------------------

OP_NAMES = {0: "X", 1: "Z"}


def check_keyineqs(s: Strategy) -> dict:
    """One residual ``||R^A R^B R^C L + (-1)^(x or y or z) L||`` per input combination.

    The four r = 0 lines per round are the XXX / ZZX / XZZ / ZXZ relations;
    r > 0 entries are the variants with one pair operator swapped in.
    """
    entries = []
    for combo, _ in enumerate_inputs(s.n):
        ops = [s.operator_for(p, combo) for p in range(3)]
        big = tensor.kron(*ops)
        sign = -1.0 if any(combo.xyz) else 1.0
        residual = float(np.linalg.norm(big @ s.state + sign * s.state))
        entry = {
            "r": combo.r,
            "i": combo.i,
            "j": combo.j,
            "xyz": list(combo.xyz),
            "line": "".join(OP_NAMES[x] for x in combo.xyz),
            "residual": residual,
        }
        if combo.r:
            entry["extra"] = combo.f[combo.r - 1](combo.j)
        entries.append(entry)
    per_round = {}
    for e in entries:
        per_round[e["i"]] = max(per_round.get(e["i"], 0.0), e["residual"])
    return {
        "entries": entries,
        "max_residual": max(e["residual"] for e in entries),
        "max_per_round": per_round,
        "error_scale": ERROR_SCALE["keyineq"],
    }


def _as_player_a(s: Strategy, player: str) -> Strategy:
    if player == "A":
        return s
    p = PLAYERS.index(player)
    sigma = [0, 0, 0]
    # move `player` to A and A to `player`'s slot
    sigma[p], sigma[0] = 1, p + 1
    for q in range(3):
        if sigma[q] == 0:
            sigma[q] = q + 1
    return permute_players(s, sigma)


def check_anticommute(s: Strategy, i: int, player: str = "A") -> float:
    """``||Z'_i X'_i L + X'_i Z'_i L||`` with the operators on ``player``."""
    ops_zx = _on_player(s, player, s.zp(player, i) @ s.xp(player, i))
    ops_xz = _on_player(s, player, s.xp(player, i) @ s.zp(player, i))
    v = tensor.apply_local(ops_zx, s.state, s.dims) + tensor.apply_local(ops_xz, s.state, s.dims)
    return float(np.linalg.norm(v))


def anticommute_chain(s: Strategy, i: int, player: str = "A") -> dict:
    """The six-step chain ``Z_A X_A L ~ -X_C Z_C L ~ Z_B X_B L ~ -X_A Z_A L``.

    Each step rewrites one operator using one of the r = 0 relations on round
    ``i``, so every step distance equals exactly one key-inequality residual.
    ``player`` plays the role of A (the other two keep their cyclic order).
    """
    t = _as_player_a(s, player)
    L = t.state

    def op(**kw):
        out = [None, None, None]
        for w, m in kw.items():
            out[PLAYERS.index(w)] = m
        return tensor.apply_local(out, L, t.dims)

    xa, xb, xc = (t.xp(w, i) for w in PLAYERS)
    za, zb, zc = (t.zp(w, i) for w in PLAYERS)
    # step distances: XXX, ZXZ, XZZ, XXX, XXX, ZZX
    chain = [
        op(A=za @ xa),
        -op(A=za, B=xb, C=xc),
        -op(C=xc @ zc),
        -op(A=xa, B=zb, C=xc),
        op(B=zb @ xb),
        -op(A=xa, B=zb, C=xc),
        -op(A=xa @ za),
    ]
    line = {}
    for name, ops, sign in (
        ("XXX", dict(A=xa, B=xb, C=xc), 1.0),
        ("ZXZ", dict(A=za, B=xb, C=zc), -1.0),
        ("XZZ", dict(A=xa, B=zb, C=zc), -1.0),
        ("ZZX", dict(A=za, B=zb, C=xc), -1.0),
    ):
        line[name] = float(np.linalg.norm(op(**ops) + sign * L))
    steps = [float(np.linalg.norm(a - b)) for a, b in zip(chain, chain[1:])]
    budget = 3 * line["XXX"] + line["ZXZ"] + line["XZZ"] + line["ZZX"]
    return {
        "residual": float(np.linalg.norm(chain[0] - chain[-1])),
        "step_distances": steps,
        "line_residuals": line,
        "budget": budget,
    }


def check_commute(s: Strategy, i: int, j: int, b: int, c: int, player: str = "A") -> float:
    """``||R_{j->c} R_{i->b} L - R_{i->b} R_{j->c} L||`` on ``player``'s single-round reflections."""
    if i == j:
        raise ValueError("check_commute needs distinct rounds")
    ri, rj = s.singles[(player, i, b)], s.singles[(player, j, c)]
    v = tensor.apply_local(_on_player(s, player, rj @ ri - ri @ rj), s.state, s.dims)
    return float(np.linalg.norm(v))


@dataclass
class PushResult:
    residual: float
    partner: str


def check_push(s: Strategy, player: str, op: str, k: int = 1) -> PushResult:
    """Push ``op`` (X, Z, H, CX or CZ) through the state and report the residual.

    ``X``/``Z`` push ``X'_{W,k}``/``Z'_{W,k}`` through L onto the designated
    partner on the other two players.  ``H``, ``CX`` and ``CZ`` act on ``Q_k``
    (and ``W`` for the controlled gates) and are pushed through
    ``Phi+ (x) L`` onto ``Qbar_k`` and the partner players.
    """
    if op in ("X", "Z"):
        sign, partner = PUSH_PARTNERS[player][op]
        lhs = tensor.apply_local(_on_player(s, player, _pauli(s, player, k, op)), s.state, s.dims)
        ops = [None, None, None]
        for w, name in partner.items():
            ops[PLAYERS.index(w)] = _pauli(s, w, k, name)
        rhs = sign * tensor.apply_local(ops, s.state, s.dims)
        desc = ("-" if sign < 0 else "") + " (x) ".join(f"{n}'_{w},{k}" for w, n in partner.items())
        return PushResult(float(np.linalg.norm(lhs - rhs)), desc)

    # state Phi+ on (Qbar, Q) followed by L on (A, B, C)
    big = np.kron(tensor.bell_state(2), s.state)
    dims = [2, 2, *s.dims]
    slot = 2 + PLAYERS.index(player)
    if op == "H":
        lhs = tensor.apply_local([None, H, None, None, None], big, dims)
        rhs = tensor.apply_local([H, None, None, None, None], big, dims)
        return PushResult(float(np.linalg.norm(lhs - rhs)), f"H on Qbar_{k}")
    if op not in ("CX", "CZ"):
        raise ValueError(f"unknown push operator {op!r}")
    name = op[1]
    sign, partner = PUSH_PARTNERS[player][name]
    target = _pauli(s, player, k, name)
    # C(U) on (Q, W): |0><0| (x) I + |1><1| (x) U
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    ops0 = [None, p0, None, None, None]
    ops1 = [None, p1, None, None, None]
    ops1[slot] = target
    lhs = tensor.apply_local(ops0, big, dims) + tensor.apply_local(ops1, big, dims)
    ops0 = [p0, None, None, None, None]
    ops1 = [p1, None, None, None, None]
    for w, nm in partner.items():
        ops1[2 + PLAYERS.index(w)] = _pauli(s, w, k, nm)
    rhs = tensor.apply_local(ops0, big, dims) + sign * tensor.apply_local(ops1, big, dims)
    desc = f"C[Qbar_{k}](" + ("-" if sign < 0 else "") + " (x) ".join(f"{n}'_{w},{k}" for w, n in partner.items()) + ")"
    return PushResult(float(np.linalg.norm(lhs - rhs)), desc)


@dataclass
class PushChain:
    residual: float
    push_errors: list
    delta: float
    stage_distances: list

    @property
    def budget(self) -> float:
        """Sum of the three stage distances; always bounds ``residual``."""
        return float(sum(self.stage_distances))


def push_through_chain(state, dims, us, partners, v, w) -> PushChain:
    """Compare ``V U_1..U_k Z`` with ``W U_1..U_k Z`` through the pushed form.

    ``state`` lives on ``R (x) S`` with ``dims = (dR, dS)``; ``us`` and ``v``,
    ``w`` act on R and ``partners[i]`` is the S-operator ``U_i`` is pushed to.
    Stages: the original product, every ``U_i`` pushed onto S, ``V`` replaced
    by ``W``, and the ``U_i`` pulled back.
    """
    dims = [int(d) for d in dims]
    z = np.asarray(state, dtype=complex)
    eye_r = np.eye(dims[0])

    def on_r(m, vec):
        return tensor.apply_local([m, None], vec, dims)

    def on_s(m, vec):
        return tensor.apply_local([None, m], vec, dims)

    prod_u = eye_r
    for u in us:
        prod_u = prod_u @ u
    pushed = np.eye(dims[1])
    for p in partners:
        pushed = p @ pushed  # U_1 .. U_k Z  ~  (V_k .. V_1) on S
    errors = [float(np.linalg.norm(on_r(u, z) - on_s(p, z))) for u, p in zip(us, partners)]
    delta = float(np.linalg.norm(on_r(v, z) - on_r(w, z)))
    s0 = on_r(v @ prod_u, z)
    s1 = on_s(pushed, on_r(v, z))
    s2 = on_s(pushed, on_r(w, z))
    s3 = on_r(w @ prod_u, z)
    dist = [float(np.linalg.norm(a - b)) for a, b in ((s0, s1), (s1, s2), (s2, s3))]
    return PushChain(float(np.linalg.norm(s0 - s3)), errors, delta, dist)


def check_correct_pauli(s: Strategy, player: str, k: int) -> dict:
    """``||(P_{Q_k}) Psi_k L - Psi_k P'_k L||`` for P in {X, Z}."""
    psi = swap_isometry(s, player, k)
    d = s.player_dim(player)
    dims = s.dims
    out = {}
    for name, pauli in (("X", X), ("Z", Z)):
        on_q = np.kron(np.kron(I2, pauli), np.eye(d))
        lhs = tensor.apply_local(_on_player(s, player, on_q @ psi), s.state, dims)
        rhs = tensor.apply_local(_on_player(s, player, psi @ _pauli(s, player, k, name)), s.state, dims)
        out[name] = float(np.linalg.norm(lhs - rhs))
    return out


def check_multi_pauli(s: Strategy, player: str, k: int) -> dict:
    """``||(P_{Q_k}) Theta_N L - Theta_N P'_k L||`` for P in {X, Z}."""
    theta = chained_isometry(s, player)
    d = s.player_dim(player)
    out = {}
    for name, pauli in (("X", X), ("Z", Z)):
        on_q = q_operator(s.n, d, k, pauli)
        lhs = tensor.apply_local(_on_player(s, player, on_q @ theta), s.state, s.dims)
        rhs = tensor.apply_local(_on_player(s, player, theta @ _pauli(s, player, k, name)), s.state, s.dims)
        out[name] = float(np.linalg.norm(lhs - rhs))
    return out


def multi_pauli_budget(s: Strategy, player: str, k: int, which: str = "X") -> dict:
    """Split the multi-round residual for round ``k`` into two computable terms.

    With ``M = Theta_{k-1} L``: ``swap`` is the single-swap residual of round
    ``k`` evaluated on ``M``, and ``carry`` is the cost of moving ``P'_k``
    through the first ``k-1`` swaps.  The multi-round residual never exceeds
    ``swap + carry``.
    """
    d = s.player_dim(player)
    pauli = X if which == "X" else Z
    prime = _pauli(s, player, k, which)
    before = chained_isometry(s, player, k - 1)
    psi = np.kron(np.eye(4 ** (k - 1)), swap_isometry(s, player, k))
    prime_big = np.kron(np.eye(4 ** (k - 1)), prime)
    on_q = q_operator(k, d, k, pauli)

    def run(m):
        return tensor.apply_local(_on_player(s, player, m), s.state, s.dims)

    residual = check_multi_pauli(s, player, k)[which]
    swap = float(np.linalg.norm(run(on_q @ psi @ before) - run(psi @ prime_big @ before)))
    carry = float(np.linalg.norm(run(prime_big @ before) - run(before @ prime)))
    return {"residual": residual, "swap": swap, "carry": carry, "budget": swap + carry}


# -- full report -------------------------------------------------------------

def relation_report(s: Strategy) -> dict:
    """Every relation family for every player and round, with maxima and error scales."""
    _require_valid(s)
    eps = losing_total(s)
    n = s.n
    key = check_keyineqs(s)
    anti = {f"{w}{i}": check_anticommute(s, i, w) for w in PLAYERS for i in range(1, n + 1)}
    comm = {}
    for w in PLAYERS:
        for i, j in itertools.permutations(range(1, n + 1), 2):
            for b in (0, 1):
                for c in (0, 1):
                    comm[f"{w}:{i}->{b},{j}->{c}"] = check_commute(s, i, j, b, c, w)
    push = {}
    for w in PLAYERS:
        for k in range(1, n + 1):
            for op in ("X", "Z", "H", "CX", "CZ"):
                r = check_push(s, w, op, k)
                push[f"{w}{k}:{op}"] = {"residual": r.residual, "partner": r.partner}
    correct = {}
    multi = {}
    for w in PLAYERS:
        for k in range(1, n + 1):
            for name, val in check_correct_pauli(s, w, k).items():
                correct[f"{w}{k}:{name}"] = val
            for name, val in check_multi_pauli(s, w, k).items():
                multi[f"{w}{k}:{name}"] = val

    def section(name, values):
        vals = list(values.values()) if isinstance(values, dict) else values
        flat = [v["residual"] if isinstance(v, dict) else v for v in vals]
        return {
            "max_residual": max(flat) if flat else 0.0,
            "error_scale": ERROR_SCALE[name],
            "values": values,
        }

    scale = math.sqrt(eps)
    return {
        "n": n,
        "epsilon": eps,
        "sqrt_epsilon": scale,
        "keyineq": {
            "max_residual": key["max_residual"],
            "error_scale": key["error_scale"],
            "max_per_round": {str(k): v for k, v in key["max_per_round"].items()},
        },
        "anticommute": section("anticommute", anti),
        "commute": section("commute", comm),
        "push": section("push", push),
        "correct_pauli": section("correct_pauli", correct),
        "multi_pauli": section("multi_pauli", multi),
    }
