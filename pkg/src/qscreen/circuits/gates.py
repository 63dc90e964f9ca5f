"""
Serializable gate lists and a reference simulator for them.

Qubit 0 is the most significant bit of the basis index. Every gate may be
conditioned on a control pattern ``((qubit, bit), ...)``. ``PERM`` acts on
the subregister listed in ``target``; each cycle ``[a, b, c]`` sends basis
state ``|a>`` to ``|b>``, ``|b>`` to ``|c>`` and ``|c>`` to ``|a>``
(subregister indices, big-endian over ``target``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

KINDS = ("RY", "X", "H", "PERM")
_SQRT1_2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int | tuple[int, ...]
    controls: tuple[tuple[int, int], ...] = ()
    angle: float | None = None
    cycles: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind == "PERM":
            object.__setattr__(self, "target", tuple(int(q) for q in self.target))
            cycles = tuple(tuple(int(i) for i in c) for c in (self.cycles or ()))
            flat = [i for c in cycles for i in c]
            if len(flat) != len(set(flat)):
                raise ValueError("PERM cycles must be disjoint")
            object.__setattr__(self, "cycles", cycles)
        if self.kind == "RY" and self.angle is None:
            raise ValueError("RY needs an angle")
        object.__setattr__(self, "controls", tuple((int(q), int(b)) for q, b in self.controls))

    @property
    def qubits(self) -> tuple[int, ...]:
        targets = self.target if isinstance(self.target, tuple) else (self.target,)
        return targets + tuple(q for q, _ in self.controls)

    def with_controls(self, extra, shift: int = 0) -> "Gate":
        """Copy with qubit indices shifted by ``shift`` and ``extra`` controls prepended."""
        target = (
            tuple(q + shift for q in self.target) if isinstance(self.target, tuple) else self.target + shift
        )
        controls = tuple(extra) + tuple((q + shift, b) for q, b in self.controls)
        return Gate(self.kind, target, controls, self.angle, self.cycles)

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "target": list(self.target) if isinstance(self.target, tuple) else self.target,
            "controls": [[q, b] for q, b in self.controls],
        }
        if self.angle is not None:
            d["angle"] = self.angle
        if self.cycles is not None:
            d["cycles"] = [list(c) for c in self.cycles]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Gate":
        target = d["target"]
        return cls(
            d["kind"],
            tuple(target) if isinstance(target, list) else target,
            tuple(tuple(c) for c in d.get("controls", ())),
            d.get("angle"),
            tuple(tuple(c) for c in d["cycles"]) if "cycles" in d else None,
        )


@dataclass
class GateList:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, gate: Gate):
        bad = [q for q in gate.qubits if not 0 <= q < self.n_qubits]
        if bad:
            raise ValueError(f"gate {gate.kind} references qubit(s) {bad} >= n_qubits={self.n_qubits}")

    def append(self, gate: Gate) -> None:
        self._check(gate)
        self.gates.append(gate)

    def extend(self, gates) -> None:
        for g in gates:
            self.append(g)

    def __len__(self) -> int:
        return len(self.gates)

    def count(self, kind: str) -> int:
        return sum(g.kind == kind for g in self.gates)

    def to_dict(self) -> dict:
        d = {"n_qubits": self.n_qubits, "gates": [g.to_dict() for g in self.gates]}
        if self.metadata:
            d["metadata"] = self.metadata
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "GateList":
        return cls(int(d["n_qubits"]), [Gate.from_dict(g) for g in d["gates"]], d.get("metadata", {}))

    @classmethod
    def from_json(cls, text: str) -> "GateList":
        return cls.from_dict(json.loads(text))

    def write(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        """Apply to ``amplitudes`` of shape ``(..., 2**n_qubits)``; returns a new array."""
        return apply_gates(self.gates, amplitudes, self.n_qubits)

    def matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        return self.apply(np.eye(dim)).T


def _index(n: int, batch: int, fixed: dict[int, int]):
    idx = [slice(None)] * (batch + n)
    for q, b in fixed.items():
        idx[batch + q] = b
    return tuple(idx)


def _apply_one(t: np.ndarray, gate: Gate, n: int, batch: int) -> None:
    ctrl = dict(gate.controls)
    if gate.kind == "PERM":
        qs = gate.target
        if any(q in ctrl for q in qs):
            raise ValueError("PERM target overlaps its controls")
        sub = t[_index(n, batch, ctrl)]
        # axes of ``sub``: batch axes, then remaining qubits in order
        remaining = [q for q in range(n) if q not in ctrl]
        axes = [batch + remaining.index(q) for q in qs]
        moved = np.moveaxis(sub, axes, list(range(sub.ndim - len(qs), sub.ndim)))
        shape = moved.shape
        flat = moved.reshape(shape[: -len(qs)] + (2 ** len(qs),))
        out = flat.copy()
        for cyc in gate.cycles:
            src = np.array(cyc)
            out[..., np.roll(src, -1)] = flat[..., src]
        sub[...] = np.moveaxis(out.reshape(shape), list(range(sub.ndim - len(qs), sub.ndim)), axes)
        return
    q = gate.target
    if q in ctrl:
        raise ValueError("gate target is also a control")
    i0 = _index(n, batch, {**ctrl, q: 0})
    i1 = _index(n, batch, {**ctrl, q: 1})
    a, b = t[i0].copy(), t[i1].copy()
    if gate.kind == "X":
        t[i0], t[i1] = b, a
    elif gate.kind == "H":
        t[i0], t[i1] = (a + b) * _SQRT1_2, (a - b) * _SQRT1_2
    else:
        c, s = math.cos(gate.angle / 2), math.sin(gate.angle / 2)
        t[i0], t[i1] = c * a - s * b, s * a + c * b


def apply_gates(gates, amplitudes: np.ndarray, n_qubits: int) -> np.ndarray:
    amplitudes = np.array(amplitudes, dtype=float)
    batch_shape = amplitudes.shape[:-1]
    if amplitudes.shape[-1] != 2**n_qubits:
        raise ValueError(f"state length {amplitudes.shape[-1]} != 2**{n_qubits}")
    t = amplitudes.reshape(batch_shape + (2,) * n_qubits)
    for g in gates:
        _apply_one(t, g, n_qubits, len(batch_shape))
    return t.reshape(batch_shape + (2**n_qubits,))


def permutation_cycles(dest: np.ndarray) -> list[list[int]]:
    """Disjoint cycles (length >= 2) of the map ``i -> dest[i]``."""
    dest = np.asarray(dest)
    seen = np.zeros(dest.size, dtype=bool)
    cycles = []
    for start in range(dest.size):
        if seen[start] or dest[start] == start:
            seen[start] = True
            continue
        cyc, i = [], start
        while not seen[i]:
            seen[i] = True
            cyc.append(int(i))
            i = int(dest[i])
        cycles.append(cyc)
    return cycles
