"""String diagrams over finite-dimensional Hilbert spaces.

A :class:`Diagram` is a DAG of typed :class:`Box` nodes joined by wires.
Ports are ``(node, index)`` pairs where ``node`` is a box id or one of the
boundary names ``"input"`` / ``"output"``.  Every wire runs from a producer
port (a box output or a diagram input) to a consumer port (a box input or a
diagram output).

Tensor ordering follows the rest of the package: the left-most wire of a
bundle is the most significant tensor factor.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from . import tensor
from .tensor import frobenius_distance

INPUT = "input"
OUTPUT = "output"

Port = tuple  # (node, index)


class DiagramError(ValueError):
    """Malformed diagram: type mismatch, bad wiring or a cycle."""


@dataclass(frozen=True)
class WireType:
    label: str
    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise DiagramError(f"wire type {self.label!r} needs dim >= 1")


QUBIT = WireType("Q", 2)


@dataclass(frozen=True)
class Primitive:
    """Structural payload: ``identity``, ``twist``, ``bell`` or ``controlled``.

    For ``controlled`` the wrapped ``box`` supplies the target unitary.
    """

    kind: str
    box: "Box | None" = None


@dataclass(frozen=True, eq=False)
class Box:
    id: str
    name: str
    inputs: tuple
    outputs: tuple
    payload: Union[np.ndarray, Primitive]

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if isinstance(self.payload, Primitive):
            self._check_primitive()
        else:
            mat = tensor.freeze(tensor.as_matrix(self.payload))
            expected = (_prod(self.outputs), _prod(self.inputs))
            if mat.shape != expected:
                raise DiagramError(
                    f"box {self.id!r}: payload shape {mat.shape} != {expected} "
                    "(outputs x inputs)"
                )
            object.__setattr__(self, "payload", mat)

    def _check_primitive(self):
        p = self.payload
        if p.kind == "identity":
            ok = len(self.inputs) == 1 and self.outputs == self.inputs
        elif p.kind == "twist":
            ok = len(self.inputs) == 2 and self.outputs == self.inputs[::-1]
        elif p.kind == "bell":
            ok = (
                not self.inputs
                and len(self.outputs) == 2
                and self.outputs[0] == self.outputs[1]
            )
        elif p.kind == "controlled":
            inner = p.box
            ok = (
                inner is not None
                and inner.inputs == inner.outputs
                and len(self.inputs) >= 1
                and self.inputs[0].dim == 2
                and self.inputs[1:] == inner.inputs
                and self.outputs == self.inputs
            )
        else:
            raise DiagramError(f"unknown primitive {p.kind!r}")
        if not ok:
            raise DiagramError(f"box {self.id!r}: ill-typed {p.kind} primitive")

    def matrix(self) -> np.ndarray:
        """Matrix of shape (product of output dims) x (product of input dims)."""
        p = self.payload
        if not isinstance(p, Primitive):
            return p
        if p.kind == "identity":
            return np.eye(self.inputs[0].dim, dtype=complex)
        if p.kind == "twist":
            a, b = self.inputs[0].dim, self.inputs[1].dim
            return np.eye(a * b, dtype=complex).reshape(a, b, a * b).transpose(1, 0, 2).reshape(a * b, a * b)
        if p.kind == "bell":
            return tensor.bell_state(self.outputs[0].dim).reshape(-1, 1)
        return tensor.controlled(p.box.matrix())

    def tensor(self) -> np.ndarray:
        dims = [w.dim for w in self.outputs] + [w.dim for w in self.inputs]
        return self.matrix().reshape(dims) if dims else self.matrix().reshape(())


def _prod(wires: Iterable[WireType]) -> int:
    return int(np.prod([w.dim for w in wires])) if wires else 1


_ids = itertools.count()


def _fresh(prefix: str) -> str:
    return f"{prefix}{next(_ids)}"


@dataclass(frozen=True)
class Diagram:
    boxes: tuple = ()
    wires: tuple = ()
    dangling_in: tuple = ()
    dangling_out: tuple = ()
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        object.__setattr__(self, "wires", tuple((tuple(p), tuple(c)) for p, c in self.wires))
        object.__setattr__(self, "dangling_in", tuple(self.dangling_in))
        object.__setattr__(self, "dangling_out", tuple(self.dangling_out))
        object.__setattr__(self, "_index", {b.id: b for b in self.boxes})
        self._validate()

    # -- structure -----------------------------------------------------------

    def _producer_type(self, port) -> WireType:
        node, k = port
        if node == INPUT:
            return self.dangling_in[k]
        if node == OUTPUT:
            raise DiagramError("the diagram output boundary cannot produce a wire")
        return self._index[node].outputs[k]

    def _consumer_type(self, port) -> WireType:
        node, k = port
        if node == OUTPUT:
            return self.dangling_out[k]
        if node == INPUT:
            raise DiagramError("the diagram input boundary cannot consume a wire")
        return self._index[node].inputs[k]

    def _validate(self):
        if len(self._index) != len(self.boxes):
            raise DiagramError("duplicate box id")
        if INPUT in self._index or OUTPUT in self._index:
            raise DiagramError("box ids 'input' and 'output' are reserved")
        produced, consumed = set(), set()
        for prod, cons in self.wires:
            for port in (prod, cons):
                if port[0] not in (INPUT, OUTPUT) and port[0] not in self._index:
                    raise DiagramError(f"wire references unknown box {port[0]!r}")
            try:
                tp, tc = self._producer_type(prod), self._consumer_type(cons)
            except IndexError as exc:
                raise DiagramError(f"port index out of range in wire {prod} -> {cons}") from exc
            if tp != tc:
                raise DiagramError(f"type mismatch on wire {prod} -> {cons}: {tp} vs {tc}")
            if prod in produced or cons in consumed:
                raise DiagramError(f"port connected twice in wire {prod} -> {cons}")
            produced.add(prod)
            consumed.add(cons)
        expected_prod = {(INPUT, k) for k in range(len(self.dangling_in))}
        expected_cons = {(OUTPUT, k) for k in range(len(self.dangling_out))}
        for b in self.boxes:
            expected_prod |= {(b.id, k) for k in range(len(b.outputs))}
            expected_cons |= {(b.id, k) for k in range(len(b.inputs))}
        if produced != expected_prod or consumed != expected_cons:
            missing = sorted(map(str, (expected_prod - produced) | (expected_cons - consumed)))
            raise DiagramError(f"unconnected ports: {', '.join(missing)}")
        self.topological_order()

    def topological_order(self) -> list:
        """Box ids in a deterministic (Kahn, first-listed first) topological order."""
        deps = {b.id: set() for b in self.boxes}
        for (pn, _), (cn, _) in self.wires:
            if pn in deps and cn in deps:
                deps[cn].add(pn)
        order, done = [], set()
        while len(order) < len(self.boxes):
            ready = [b.id for b in self.boxes if b.id not in done and deps[b.id] <= done]
            if not ready:
                raise DiagramError("cycle detected in diagram wiring")
            order.append(ready[0])
            done.add(ready[0])
        return order

    def all_topological_orders(self, limit: int = 100) -> list:
        """Up to ``limit`` distinct topological orders (for order-independence checks)."""
        deps = {b.id: set() for b in self.boxes}
        for (pn, _), (cn, _) in self.wires:
            if pn in deps and cn in deps:
                deps[cn].add(pn)
        ids = [b.id for b in self.boxes]
        found = []

        def walk(prefix, done):
            if len(found) >= limit:
                return
            if len(prefix) == len(ids):
                found.append(list(prefix))
                return
            for i in ids:
                if i not in done and deps[i] <= done:
                    walk(prefix + [i], done | {i})

        walk([], frozenset())
        return found

    @property
    def in_dim(self) -> int:
        return _prod(self.dangling_in)

    @property
    def out_dim(self) -> int:
        return _prod(self.dangling_out)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "boxes": [_box_to_json(b) for b in self.boxes],
            "wires": [[list(p), list(c)] for p, c in self.wires],
            "dangling_in": [_wire_to_json(w) for w in self.dangling_in],
            "dangling_out": [_wire_to_json(w) for w in self.dangling_out],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data) -> "Diagram":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(
            boxes=[_box_from_json(b) for b in data["boxes"]],
            wires=[(tuple(p), tuple(c)) for p, c in data["wires"]],
            dangling_in=[_wire_from_json(w) for w in data["dangling_in"]],
            dangling_out=[_wire_from_json(w) for w in data["dangling_out"]],
        )


def _wire_to_json(w: WireType) -> dict:
    return {"label": w.label, "dim": w.dim}


def _wire_from_json(d) -> WireType:
    return WireType(str(d["label"]), int(d["dim"]))


def _box_to_json(b: Box) -> dict:
    if isinstance(b.payload, Primitive):
        payload = {"primitive": b.payload.kind}
        if b.payload.box is not None:
            payload["box"] = _box_to_json(b.payload.box)
    else:
        payload = tensor.matrix_to_json(b.payload)
    return {
        "id": b.id,
        "name": b.name,
        "inputs": [_wire_to_json(w) for w in b.inputs],
        "outputs": [_wire_to_json(w) for w in b.outputs],
        "payload": payload,
    }


def _box_from_json(d) -> Box:
    p = d["payload"]
    if "primitive" in p:
        inner = _box_from_json(p["box"]) if "box" in p else None
        payload = Primitive(p["primitive"], inner)
    else:
        payload = tensor.matrix_from_json(p)
    return Box(
        id=str(d["id"]),
        name=str(d["name"]),
        inputs=[_wire_from_json(w) for w in d["inputs"]],
        outputs=[_wire_from_json(w) for w in d["outputs"]],
        payload=payload,
    )


# -- constructors ------------------------------------------------------------

def from_box(box: Box) -> Diagram:
    """The diagram consisting of a single box with all its ports dangling."""
    wires = [((INPUT, k), (box.id, k)) for k in range(len(box.inputs))]
    wires += [((box.id, k), (OUTPUT, k)) for k in range(len(box.outputs))]
    return Diagram((box,), wires, box.inputs, box.outputs)


def empty() -> Diagram:
    return Diagram()


def wire(w: WireType) -> Diagram:
    """A bare identity wire."""
    return Diagram((), [((INPUT, 0), (OUTPUT, 0))], (w,), (w,))


def identity(wires: Sequence[WireType]) -> Diagram:
    wires = tuple(wires)
    return Diagram((), [((INPUT, k), (OUTPUT, k)) for k in range(len(wires))], wires, wires)


def box(name: str, matrix, inputs: Sequence[WireType], outputs: Sequence[WireType] | None = None) -> Diagram:
    """Single-box diagram from a matrix payload; ``outputs`` default to ``inputs``."""
    outputs = inputs if outputs is None else outputs
    return from_box(Box(_fresh(name + "_"), name, inputs, outputs, np.asarray(matrix, dtype=complex)))


def state(name: str, vector, outputs: Sequence[WireType]) -> Diagram:
    return box(name, np.asarray(vector, dtype=complex).reshape(-1, 1), (), outputs)


def effect(name: str, vector, inputs: Sequence[WireType]) -> Diagram:
    """The effect ``<vector|`` (conjugate transpose of the state)."""
    return box(name, np.asarray(vector, dtype=complex).conj().reshape(1, -1), inputs, ())


def twist(a: WireType, b: WireType) -> Diagram:
    """Crossing of wires ``a`` and ``b``: inputs ``(a, b)``, outputs ``(b, a)``."""
    return from_box(Box(_fresh("twist_"), "twist", (a, b), (b, a), Primitive("twist")))


def bell(w: WireType) -> Diagram:
    return from_box(Box(_fresh("bell_"), "bell", (), (w, w), Primitive("bell")))


def controlled_box(name: str, matrix, target: Sequence[WireType], control: WireType = QUBIT) -> Diagram:
    """``C(U)`` with the control wire first (left-most, high-order)."""
    inner = Box(_fresh(name + "_u"), name, target, target, np.asarray(matrix, dtype=complex))
    ports = (control,) + tuple(target)
    return from_box(Box(_fresh("C" + name + "_"), "C(" + name + ")", ports, ports, Primitive("controlled", inner)))


# -- composition -------------------------------------------------------------

def _relabel(d: Diagram, prefix: str):
    mapping = {b.id: prefix + b.id for b in d.boxes}
    boxes = [Box(mapping[b.id], b.name, b.inputs, b.outputs, b.payload) for b in d.boxes]

    def port(p):
        return (mapping.get(p[0], p[0]), p[1])

    wires = [(port(p), port(c)) for p, c in d.wires]
    return boxes, wires


def compose_serial(top: Diagram, bottom: Diagram) -> Diagram:
    """Plug ``bottom``'s outputs into ``top``'s inputs; evaluates to ``top @ bottom``."""
    if tuple(bottom.dangling_out) != tuple(top.dangling_in):
        raise DiagramError(
            f"cannot compose: bottom outputs {bottom.dangling_out} != top inputs {top.dangling_in}"
        )
    bboxes, bwires = _relabel(bottom, "b.")
    tboxes, twires = _relabel(top, "t.")
    feeds = {p[1]: c for p, c in twires if p[0] == INPUT}  # top input k -> consumer
    wires = [w for w in twires if w[0][0] != INPUT]
    for p, c in bwires:
        if c[0] == OUTPUT:
            wires.append((p, feeds[c[1]]))
        else:
            wires.append((p, c))
    return Diagram(bboxes + tboxes, wires, bottom.dangling_in, top.dangling_out)


def compose_parallel(left: Diagram, right: Diagram) -> Diagram:
    """Side-by-side juxtaposition; evaluates to ``kron(left, right)``."""
    lboxes, lwires = _relabel(left, "l.")
    rboxes, rwires = _relabel(right, "r.")
    ni, no = len(left.dangling_in), len(left.dangling_out)

    def shift(p):
        if p[0] == INPUT:
            return (INPUT, p[1] + ni)
        if p[0] == OUTPUT:
            return (OUTPUT, p[1] + no)
        return p

    wires = lwires + [(shift(p), shift(c)) for p, c in rwires]
    return Diagram(
        lboxes + rboxes,
        wires,
        left.dangling_in + right.dangling_in,
        left.dangling_out + right.dangling_out,
    )


def serial(*diagrams: Diagram) -> Diagram:
    """``serial(d1, d2, d3)`` applies d3 first: same reading order as a matrix product."""
    out = diagrams[-1]
    for d in reversed(diagrams[:-1]):
        out = compose_serial(d, out)
    return out


def parallel(*diagrams: Diagram) -> Diagram:
    out = diagrams[0]
    for d in diagrams[1:]:
        out = compose_parallel(out, d)
    return out


# -- evaluation --------------------------------------------------------------

def evaluate(d: Diagram, order: Sequence[str] | None = None) -> np.ndarray:
    """Contract the diagram into a (out_dim x in_dim) matrix.

    Boxes are contracted one at a time in topological ``order`` (default: the
    diagram's deterministic order).  The running tensor keeps one leg per live
    wire plus one leg per diagram input.
    """
    if order is None:
        order = d.topological_order()
    else:
        order = list(order)
        if sorted(order) != sorted(b.id for b in d.boxes):
            raise DiagramError("order must list every box exactly once")
        pos = {bid: k for k, bid in enumerate(order)}
        for (pn, _), (cn, _) in d.wires:
            if pn in pos and cn in pos and pos[pn] >= pos[cn]:
                raise DiagramError(f"order is not topological: {pn} must precede {cn}")
    tensor.check_size(d.out_dim * d.in_dim, "diagram value")

    consumer_of = {p: c for p, c in d.wires}
    n_in = len(d.dangling_in)
    in_dims = [w.dim for w in d.dangling_in]
    # identity on the inputs: live legs first, then the fixed input legs
    current = np.eye(d.in_dim, dtype=complex).reshape(in_dims * 2) if n_in else np.ones((), dtype=complex)
    live = [consumer_of[(INPUT, k)] for k in range(n_in)]  # consumer port of each live leg

    for bid in order:
        b = d._index[bid]
        k_in = len(b.inputs)
        axes = [live.index((bid, k)) for k in range(k_in)]
        t = b.tensor()
        n_out = len(b.outputs)
        current = np.tensordot(t, current, axes=(list(range(n_out, n_out + k_in)), axes))
        tensor.check_size(current.size, "intermediate contraction")
        remaining = [leg for i, leg in enumerate(live) if i not in axes]
        live = [consumer_of[(bid, k)] for k in range(n_out)] + remaining

    n_live = len(live)
    out_pos = [live.index((OUTPUT, k)) for k in range(len(d.dangling_out))]
    perm = out_pos + list(range(n_live, n_live + n_in))
    return current.transpose(perm).reshape(d.out_dim, d.in_dim)


@dataclass(frozen=True)
class ApproxResult:
    holds: bool
    residual: float


def approx_equal(f, g, delta: float) -> ApproxResult:
    """``||eval f - eval g||_2 <= delta`` for diagrams or matrices."""
    fm = evaluate(f) if isinstance(f, Diagram) else np.asarray(f, dtype=complex)
    gm = evaluate(g) if isinstance(g, Diagram) else np.asarray(g, dtype=complex)
    if fm.ndim == 1:
        fm = fm.reshape(-1, 1)
    if gm.ndim == 1:
        gm = gm.reshape(-1, 1)
    residual = frobenius_distance(fm, gm)
    return ApproxResult(residual <= delta, residual)
