"""
Orthogonal matrices with a prescribed first row.

Two constructions:

``householder``
    The reflection ``I - 2 w w^T`` with ``w`` along ``row - e_0``. Symmetric,
    so its first row and first column both equal ``row``.

``ry_tree``
    Transpose of a binary-tree state preparation. The preparation ``S``
    maps ``|0>`` to the row with one multiplexed RY layer per qubit; ``S^T``
    is the same gates in reverse order with negated angles, and the first
    row of ``S^T`` is ``S|0>``. Signed entries are handled by passing signed
    magnitudes up the tree, which fixes the output up to one global sign.
    ``fix_sign=True`` removes that sign by adding ``2*pi`` to the root gate
    (``RY(theta + 2*pi) = -RY(theta)``), which is a relative sign, not a
    global phase, once the block is controlled by the type register.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gates import Gate, GateList

BACKENDS = ("householder", "ry_tree")
DENSE_QUBIT_CAP = 10


class UnitaryError(ValueError):
    pass


def _signed_tree(row: np.ndarray) -> tuple[list[list[float]], float]:
    """Preparation angles per level (level l has 2**l entries) and the root value."""
    n = int(round(math.log2(row.size)))
    values = row.astype(float)
    levels: list[list[float]] = [[] for _ in range(n)]
    for level in range(n - 1, -1, -1):
        a, b = values[0::2], values[1::2]
        sign = np.where(a != 0.0, np.sign(a), np.sign(b))
        levels[level] = [float(2.0 * math.atan2(s * bi, s * ai)) for s, ai, bi in zip(sign, a, b)]
        values = sign * np.hypot(a, b)
    return levels, float(values[0])


def ry_tree_gates(row, fix_sign: bool = False) -> tuple[list[Gate], int]:
    """Gates (application order) of a matrix whose first row is ``sign * row``.

    Returns ``(gates, sign)``; ``sign`` is +1 when ``fix_sign`` is set.
    """
    row = np.asarray(row, dtype=float)
    n = int(round(math.log2(row.size)))
    levels, root = _signed_tree(row)
    sign = 1 if root >= 0 else -1
    if fix_sign and sign < 0 and n > 0:
        levels[0][0] += 2.0 * math.pi
        sign = 1
    gates: list[Gate] = []
    for level in range(n - 1, -1, -1):
        for prefix, theta in enumerate(levels[level]):
            if theta == 0.0:
                continue
            controls = tuple((q, (prefix >> (level - 1 - q)) & 1) for q in range(level))
            gates.append(Gate("RY", level, controls, angle=-theta))
    return gates, sign


@dataclass(frozen=True)
class FirstRowUnitary:
    dim: int
    target_row: np.ndarray
    backend: str
    global_sign: int = 1
    reflector: np.ndarray | None = None
    gates: tuple[Gate, ...] = ()

    @property
    def n_qubits(self) -> int:
        return int(round(math.log2(self.dim)))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Act on the last axis of ``x``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise UnitaryError(f"expected last axis {self.dim}, got {x.shape[-1]}")
        if self.backend == "householder":
            if self.reflector is None:
                return x.copy()
            w = self.reflector
            return x - 2.0 * np.outer(x.reshape(-1, self.dim) @ w, w).reshape(x.shape)
        return GateList(self.n_qubits, list(self.gates)).apply(x)

    def matrix(self) -> np.ndarray:
        if self.n_qubits > DENSE_QUBIT_CAP:
            raise UnitaryError(f"dense realization capped at {DENSE_QUBIT_CAP} qubits")
        if self.backend == "householder":
            w = self.reflector
            return np.eye(self.dim) if w is None else np.eye(self.dim) - 2.0 * np.outer(w, w)
        # rows of apply(I) are U e_i, i.e. the columns of U
        return self.apply(np.eye(self.dim)).T

    def gatelist(self) -> GateList:
        if self.backend != "ry_tree":
            raise UnitaryError("only the ry_tree backend has a gate list")
        return GateList(self.n_qubits, list(self.gates), {"global_sign": self.global_sign})


def _householder_vector(row: np.ndarray) -> np.ndarray | None:
    tail = row[1:]
    sigma = float(tail @ tail)
    if sigma == 0.0 and row[0] > 0:
        return None
    v = row.copy()
    # row[0] - 1 without cancellation, using |row| = 1
    v[0] = -sigma / (1.0 + row[0]) if row[0] > 0 else row[0] - 1.0
    return v / np.linalg.norm(v)


def make_first_row_unitary(row, backend: str = "householder", fix_sign: bool = False) -> FirstRowUnitary:
    row = np.asarray(row, dtype=float)
    if row.ndim != 1 or row.size < 1 or row.size & (row.size - 1):
        raise UnitaryError(f"row length must be a power of two, got {row.size}")
    if abs(float(np.linalg.norm(row)) - 1.0) > 1e-10:
        raise UnitaryError(f"row is not a unit vector (norm {np.linalg.norm(row)!r})")
    if backend == "householder":
        return FirstRowUnitary(row.size, row, backend, 1, _householder_vector(row))
    if backend == "ry_tree":
        gates, sign = ry_tree_gates(row, fix_sign)
        return FirstRowUnitary(row.size, row, backend, sign, None, tuple(gates))
    raise UnitaryError(f"unknown backend {backend!r}; choose from {BACKENDS}")
