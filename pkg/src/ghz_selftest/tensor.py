"""Dense complex linear algebra used throughout the package.

Operators are plain ``numpy`` complex arrays and states are 1-D complex
arrays.  Tensor products are big-endian: in ``kron(a, b)`` the factor ``a``
carries the most significant index, and a control qubit is always the
high-order slot.
"""

from __future__ import annotations

import os
from functools import reduce
from typing import Sequence

import numpy as np

DEFAULT_TOL = 1e-9
EXACT_TOL = 1e-12

MAX_ENTRIES_ENV = "GHZ_SELFTEST_MAX_ENTRIES"
DEFAULT_MAX_ENTRIES = 2**22

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)


class DimensionError(ValueError):
    """An array would exceed the configured dimension ceiling."""


class NumericalError(ArithmeticError):
    """A numeric routine produced an invalid result (NaN, negative probability...)."""


def max_entries() -> int:
    """Dimension ceiling in array entries; override with ``GHZ_SELFTEST_MAX_ENTRIES``."""
    raw = os.environ.get(MAX_ENTRIES_ENV)
    if raw is None or raw == "":
        return DEFAULT_MAX_ENTRIES
    try:
        value = int(float(raw))
    except ValueError as exc:
        raise ValueError(f"{MAX_ENTRIES_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{MAX_ENTRIES_ENV} must be positive, got {value}")
    return value


def check_size(n_entries: int, what: str = "array") -> None:
    limit = max_entries()
    if n_entries > limit:
        raise DimensionError(
            f"{what} needs {n_entries} entries, above the ceiling of {limit} "
            f"(set {MAX_ENTRIES_ENV} to raise it)"
        )


def as_matrix(m) -> np.ndarray:
    """Coerce to a 2-D complex array, rejecting NaN/Inf entries."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def kron(*factors) -> np.ndarray:
    """Tensor product of one or more matrices, first factor most significant."""
    if not factors:
        return np.ones((1, 1), dtype=complex)
    mats = [np.asarray(f, dtype=complex) for f in factors]
    rows = int(np.prod([m.shape[0] for m in mats]))
    cols = int(np.prod([m.shape[1] if m.ndim > 1 else 1 for m in mats]))
    check_size(rows * cols, "tensor product")
    return reduce(np.kron, mats)


def apply_on(op, slots: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Embed ``op`` on the tensor ``slots`` of a register with per-slot ``dims``.

    Slots are 0-based.  ``op`` acts on the listed slots in the listed order
    (so ``slots=(2, 0)`` makes slot 2 the high-order factor of ``op``) and as
    the identity on every other slot.
    """
    op = as_matrix(op)
    dims = [int(d) for d in dims]
    slots = [int(s) for s in slots]
    if len(set(slots)) != len(slots):
        raise ValueError(f"repeated slot index in {slots}")
    for s in slots:
        if not 0 <= s < len(dims):
            raise ValueError(f"slot {s} out of range for {len(dims)} slots")
    sub = int(np.prod([dims[s] for s in slots])) if slots else 1
    if op.shape != (sub, sub):
        raise ValueError(f"operator shape {op.shape} does not match slot dimension {sub}")
    total = int(np.prod(dims)) if dims else 1
    check_size(total * total, "embedded operator")

    rest = [k for k in range(len(dims)) if k not in slots]
    rest_dim = int(np.prod([dims[k] for k in rest])) if rest else 1
    # kron(op, I_rest) lives in slot order slots + rest; permute back to natural order
    big = np.kron(op, np.eye(rest_dim, dtype=complex))
    order = slots + rest
    n = len(dims)
    shaped = big.reshape([dims[k] for k in order] * 2)
    inv = np.argsort(order)
    perm = list(inv) + [n + p for p in inv]
    return shaped.transpose(perm).reshape(total, total)


def apply_local(ops: Sequence, state, dims: Sequence[int]) -> np.ndarray:
    """Apply one operator per tensor factor (``None`` means identity) to ``state``.

    Cheaper than building ``kron(*ops) @ state``; each factor is contracted
    separately against the reshaped state tensor.
    """
    dims = [int(d) for d in dims]
    psi = np.asarray(state, dtype=complex).reshape(dims)
    for axis, op in enumerate(ops):
        if op is None:
            continue
        op = np.asarray(op, dtype=complex)
        psi = np.moveaxis(np.tensordot(op, psi, axes=([1], [axis])), 0, axis)
    return psi.reshape(-1)


def frobenius_distance(f, g) -> float:
    """Frobenius (Euclidean for vectors) norm of ``f - g``."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {g.shape}")
    return float(np.linalg.norm((f - g).ravel()))


def operator_norm(m) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(np.asarray(m, dtype=complex), 2))


def controlled(u) -> np.ndarray:
    """``|0><0| (x) I + |1><1| (x) u`` with the control as the high-order qubit."""
    u = as_matrix(u)
    if u.shape[0] != u.shape[1]:
        raise ValueError(f"controlled() needs a square matrix, got {u.shape}")
    d = u.shape[0]
    check_size(4 * d * d, "controlled operator")
    out = np.zeros((2 * d, 2 * d), dtype=complex)
    out[:d, :d] = np.eye(d)
    out[d:, d:] = u
    return out


def bell_state(d: int) -> np.ndarray:
    """Maximally entangled unit vector ``sum_e e (x) e / sqrt(d)`` on ``C^d (x) C^d``."""
    d = int(d)
    if d < 1:
        raise ValueError("bell_state needs d >= 1")
    check_size(d * d, "Bell state")
    vec = np.zeros(d * d, dtype=complex)
    vec[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return vec


def is_reflection(m, tol: float = DEFAULT_TOL) -> bool:
    """Hermitian with square equal to the identity, both within ``tol`` (Frobenius)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    herm = np.linalg.norm(m - m.conj().T)
    square = np.linalg.norm(m @ m - np.eye(m.shape[0]))
    return bool(herm <= tol and square <= tol)


def commutator_norm(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"need matching square matrices, got {a.shape} and {b.shape}")
    return float(np.linalg.norm(a @ b - b @ a))


def commutes(a, b, tol: float = DEFAULT_TOL) -> bool:
    return commutator_norm(a, b) <= tol


def is_normalized(vec, tol: float = 1e-10) -> bool:
    return abs(float(np.vdot(vec, vec).real) - 1.0) <= tol


def normalize(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    nrm = np.linalg.norm(vec)
    if nrm == 0:
        raise NumericalError("cannot normalize the zero vector")
    return vec / nrm


def axis_rotation(theta: float, axis) -> np.ndarray:
    """``exp(-i theta/2 K)`` for an involution ``K`` (``K @ K = I``)."""
    axis = np.asarray(axis, dtype=complex)
    return np.cos(theta / 2) * np.eye(axis.shape[0]) - 1j * np.sin(theta / 2) * axis


def freeze(arr: np.ndarray) -> np.ndarray:
    """Return a read-only copy."""
    out = np.array(arr, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


# --- JSON helpers: complex scalars are [re, im] ---------------------------------

def complex_to_json(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def vector_to_json(vec) -> list:
    return [complex_to_json(z) for z in np.asarray(vec).ravel()]


def vector_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("vector must be a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def matrix_to_json(m) -> dict:
    m = as_matrix(m)
    return {"rows": m.shape[0], "cols": m.shape[1], "entries": vector_to_json(m)}


def matrix_from_json(data) -> np.ndarray:
    rows, cols = int(data["rows"]), int(data["cols"])
    entries = vector_from_json(data["entries"])
    if entries.size != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, got {entries.size}")
    return as_matrix(entries.reshape(rows, cols))
