"""
Structured operators on named qubit registers.

A state of a :class:`RegisterLayout` is a flat real vector; internally it is
viewed as an array with one axis per register (first register = most
significant). Operators act by index arithmetic on those axes instead of
materializing ``2**n x 2**n`` matrices; :meth:`Operator.matrix` builds the
dense form for verification up to ``DENSE_QUBIT_CAP`` qubits.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.linalg import hadamard

from .first_row import DENSE_QUBIT_CAP, FirstRowUnitary


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class RegisterLayout:
    names: tuple[str, ...]
    sizes: tuple[int, ...]

    def __post_init__(self):
        if len(self.names) != len(self.sizes) or len(set(self.names)) != len(self.names):
            raise LayoutError("register names must be unique and match sizes")
        if any(s < 0 for s in self.sizes):
            raise LayoutError("register sizes must be >= 0")

    @classmethod
    def of(cls, **registers: int) -> "RegisterLayout":
        return cls(tuple(registers), tuple(registers.values()))

    @property
    def n_qubits(self) -> int:
        return sum(self.sizes)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(2**s for s in self.sizes)

    def size(self, name: str) -> int:
        return self.sizes[self.axis(name)]

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LayoutError(f"no register {name!r} in {self.names}") from None

    def qubits(self, name: str) -> list[int]:
        """Global qubit indices (0 = most significant) of register ``name``."""
        start = sum(self.sizes[: self.axis(name)])
        return list(range(start, start + self.size(name)))

    def index(self, **values: int) -> int:
        """Flat basis index; unspecified registers are 0."""
        unknown = set(values) - set(self.names)
        if unknown:
            raise LayoutError(f"unknown registers {sorted(unknown)}")
        return int(np.ravel_multi_index(tuple(values.get(n, 0) for n in self.names), self.shape))

    def describe(self) -> list[dict]:
        return [{"name": n, "qubits": s} for n, s in zip(self.names, self.sizes)]


class Operator:
    """Real orthogonal action on states of ``layout``."""

    layout: RegisterLayout

    @property
    def n_qubits(self) -> int:
        return self.layout.n_qubits

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        if self.n_qubits > DENSE_QUBIT_CAP:
            raise LayoutError(f"dense realization capped at {DENSE_QUBIT_CAP} qubits")
        dim = self.layout.dim
        cols = [self.apply(col) for col in np.eye(dim)]
        return np.array(cols).T

    def _view(self, amplitudes):
        amplitudes = np.asarray(amplitudes, dtype=float)
        if amplitudes.shape != (self.layout.dim,):
            raise LayoutError(f"state has shape {amplitudes.shape}, operator needs ({self.layout.dim},)")
        return amplitudes.reshape(self.layout.shape)


def _controlled_slices(layout: RegisterLayout, controls: tuple[str, ...]):
    """Yield (control values, index tuple) over all control register values."""
    axes = [layout.axis(c) for c in controls]
    ranges = [range(layout.shape[a]) for a in axes]
    for values in product(*ranges):
        idx = [slice(None)] * len(layout.names)
        for a, v in zip(axes, values):
            idx[a] = v
        yield values, tuple(idx)


def _sub_axis(layout: RegisterLayout, controls, target: str) -> int:
    t = layout.axis(target)
    return t - sum(layout.axis(c) < t for c in controls)


class PermutationOp(Operator):
    """Basis permutation of ``target``, chosen by the values of ``controls``.

    ``perms[values]`` is an array ``dest`` with ``|i> -> |dest[i]>``; missing
    control values act as the identity.
    """

    def __init__(self, layout, target: str, perms: dict, controls: tuple[str, ...] = ()):
        self.layout, self.target, self.controls = layout, target, tuple(controls)
        n = layout.shape[layout.axis(target)]
        self.perms = {}
        for key, dest in perms.items():
            key = tuple(key) if isinstance(key, tuple) else (key,) if self.controls else ()
            dest = np.asarray(dest, dtype=int)
            if sorted(dest.tolist()) != list(range(n)):
                raise LayoutError(f"not a permutation of {n} states")
            self.perms[key] = dest

    def apply(self, amplitudes):
        t = self._view(amplitudes)
        out = t.copy()
        ax = _sub_axis(self.layout, self.controls, self.target)
        for values, idx in _controlled_slices(self.layout, self.controls):
            dest = self.perms.get(tuple(values))
            if dest is None:
                continue
            src = np.empty_like(dest)
            src[dest] = np.arange(dest.size)
            out[idx] = np.take(t[idx], src, axis=ax)
        return out.reshape(-1)

    def inverse(self) -> "PermutationOp":
        inv = {}
        for key, dest in self.perms.items():
            src = np.empty_like(dest)
            src[dest] = np.arange(dest.size)
            inv[key] = src
        return PermutationOp(self.layout, self.target, inv, self.controls)


class BlockDiagonalOp(Operator):
    """First-row unitaries on ``target`` selected by ``selectors`` register values."""

    def __init__(self, layout, target: str, blocks: dict, selectors: tuple[str, ...]):
        self.layout, self.target, self.selectors = layout, target, tuple(selectors)
        width = layout.shape[layout.axis(target)]
        self.blocks: dict[tuple, FirstRowUnitary] = {}
        for key, u in blocks.items():
            if u is None:
                continue
            if u.dim != width:
                raise LayoutError(f"block dim {u.dim} != target register dim {width}")
            self.blocks[tuple(key)] = u

    def apply(self, amplitudes):
        t = self._view(amplitudes)
        out = t.copy()
        ax = _sub_axis(self.layout, self.selectors, self.target)
        for values, idx in _controlled_slices(self.layout, self.selectors):
            u = self.blocks.get(tuple(values))
            if u is None:
                continue
            sub = np.moveaxis(t[idx], ax, -1)
            out[idx] = np.moveaxis(u.apply(sub), -1, ax)
        return out.reshape(-1)


class HadamardOp(Operator):
    """Hadamard on every qubit of the listed registers."""

    def __init__(self, layout, registers: tuple[str, ...]):
        self.layout, self.registers = layout, tuple(registers)

    def apply(self, amplitudes):
        t = self._view(amplitudes)
        for name in self.registers:
            m = self.layout.size(name)
            if m == 0:
                continue
            h = hadamard(2**m).astype(float) / 2 ** (m / 2)
            ax = self.layout.axis(name)
            t = np.moveaxis(np.tensordot(h, t, axes=([1], [ax])), 0, ax)
        return np.ascontiguousarray(t).reshape(-1)


class Sequence(Operator):
    """Operators applied left to right."""

    def __init__(self, layout, ops):
        self.layout, self.ops = layout, list(ops)
        for op in self.ops:
            if op.layout != layout:
                raise LayoutError("all operators in a sequence must share the layout")

    def apply(self, amplitudes):
        for op in self.ops:
            amplitudes = op.apply(amplitudes)
        return amplitudes
