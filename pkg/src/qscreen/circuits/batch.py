"""
Batched scoring of many poses in one state.

Register order, most significant first::

    rc  lc  rz ry rx  tz ty tx  nt  ng

``rc``/``lc`` index protein/ligand conformations, ``r*`` quarter-turn
choices and ``t*`` shift choices per axis. The circuit is

1. input: Hadamards on ``rc`` and every pose register, ligand conformations
   stacked on ``lc``, all divided by ``L_con``;
2. rotations (x, then y, then z), each controlled by its ``r`` register;
3. translations (x, then y, then z), each controlled by its ``t`` register;
4. block-diagonal potentials selected by ``(rc, nt)``;
5. Hadamards on ``nt``.

The amplitude at ``|rc, lc, r, t>|0>|0>`` times ``scale`` is the energy of
that pose plus the offset, with
``scale = 2**((nt + nrc + n_rot + n_shift) / 2) * L_con``.
Rotations are applied before translations, so a pose is "turn the ligand
about the grid centre, then shift it".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..encoding import ConformationEncoding, EncodedProblem, assemble_conformations, single_conformation
from ..gridmap import AXES, GridError, GridSpec, PotentialMaps, grid_guard_margin
from .gates import Gate, GateList, permutation_cycles
from .operators import BlockDiagonalOp, HadamardOp, PermutationOp, RegisterLayout, Sequence
from .permutations import check_rotatable, rotation_permutation, shift_permutation
from .stages import block_unitaries

REGISTERS = ("rc", "lc", "rz", "ry", "rx", "tz", "ty", "tx", "nt", "ng")
POSE_REGISTERS = REGISTERS[:-2]


class MarginError(GridError):
    def __init__(self, axis: str, shift: int, limit: int):
        self.axis, self.shift, self.limit = axis, shift, limit
        super().__init__(
            f"wrap-around would corrupt pose: shift {shift} along {axis} exceeds "
            f"guard margin; max legal shift along {axis} is {limit}"
        )


def pad_to_power_of_two(values) -> tuple[list[int], int, int]:
    """Pad with identity (0) entries; returns ``(padded, n_qubits, n_real)``."""
    values = [int(v) for v in values] or [0]
    n_qubits = math.ceil(math.log2(len(values))) if len(values) > 1 else 0
    return values + [0] * (2**n_qubits - len(values)), n_qubits, len(values)


@dataclass(frozen=True)
class Pose:
    conf_p: int = 0
    conf_l: int = 0
    tx: int = 0
    ty: int = 0
    tz: int = 0
    rx: int = 0
    ry: int = 0
    rz: int = 0
    padded: bool = False

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("conf_p", "conf_l", "tx", "ty", "tz", "rx", "ry", "rz")}


@dataclass
class PoseBatch:
    encoding: ConformationEncoding
    grid: GridSpec
    layout: RegisterLayout
    shifts: dict[str, list[int]]
    turns: dict[str, list[int]]
    n_real: dict[str, int]
    backend: str
    unitaries: dict = field(repr=False)
    stages: list = field(repr=False)

    @property
    def offset_c(self) -> float:
        return self.encoding.offset_c

    @property
    def pose_qubits(self) -> int:
        return sum(self.layout.size(n) for n in self.layout.names if n not in ("lc", "nt", "ng"))

    @property
    def scale(self) -> float:
        return 2.0 ** ((self.encoding.nt + self.pose_qubits) / 2) * self.encoding.L_con

    @property
    def poses(self) -> list[Pose]:
        names = [n for n in POSE_REGISTERS if n in self.layout.names]
        ranges = [range(2 ** self.layout.size(n)) for n in names]
        out = []
        for values in np.ndindex(*[len(r) for r in ranges]):
            v = dict(zip(names, values))
            ip, jl = v.get("rc", 0), v.get("lc", 0)
            padded = ip >= self.encoding.n_protein or jl >= self.encoding.n_ligand
            pose = {"conf_p": ip, "conf_l": jl}
            for a in AXES:
                ti, ri = v.get("t" + a, 0), v.get("r" + a, 0)
                padded |= ti >= self.n_real["t" + a] or ri >= self.n_real["r" + a]
                pose["t" + a] = self.shifts[a][ti]
                pose["r" + a] = self.turns[a][ri]
            out.append(Pose(**pose, padded=bool(padded)))
        return out

    def input_state(self, only_block: int | None = None) -> tuple[np.ndarray, float]:
        """Normalized input vector and its length (``L_con``, or the masked length)."""
        enc = self.encoding
        o = enc.o_grids
        if only_block is not None:
            width = 2**enc.ng
            mask = np.zeros(o.shape[1])
            mask[only_block * width : (only_block + 1) * width] = 1.0
            o = o * mask
        L = float(np.linalg.norm(o))
        if L == 0.0:
            return np.zeros(self.layout.dim), 0.0
        n_pose_states = 2**self.pose_qubits
        rc = 2 ** self.layout.size("rc") if "rc" in self.layout.names else 1
        t = np.broadcast_to(o[None, :, None, :] / L, (rc, o.shape[0], n_pose_states // rc, o.shape[1]))
        t = t / math.sqrt(n_pose_states)
        return np.ascontiguousarray(t).reshape(-1), L

    def circuit(self) -> Sequence:
        return Sequence(self.layout, self.stages)

    def final_state(self, only_block: int | None = None) -> tuple[np.ndarray, float]:
        state, L = self.input_state(only_block)
        if L == 0.0:
            return state, 0.0
        return self.circuit().apply(state), 2.0 ** ((self.encoding.nt + self.pose_qubits) / 2) * L

    def readout_indices(self) -> np.ndarray:
        width = 2 ** (self.encoding.nt + self.encoding.ng)
        return np.arange(self.layout.dim // width) * width

    def pose_amplitudes(self, state: np.ndarray) -> np.ndarray:
        return np.asarray(state)[self.readout_indices()]

    def offsets(self) -> np.ndarray:
        """Offset to remove per pose; 0 for padded conformation slots, whose rows skip the offset entry."""
        enc = self.encoding
        return np.array([
            0.0 if p.conf_p >= enc.n_protein or p.conf_l >= enc.n_ligand else enc.offset_c
            for p in self.poses
        ])

    def energies(self, only_block: int | None = None) -> np.ndarray:
        """Amplitude-path energies per pose (offset removed when block 0 is included)."""
        state, scale = self.final_state(only_block)
        e = self.pose_amplitudes(state) * scale
        if only_block in (None, 0):
            e = e - self.offsets()
        return e

    def split_energies(self) -> tuple[np.ndarray, list[np.ndarray]]:
        ele = self.energies(only_block=0)
        vdw = [self.energies(only_block=b + 1) for b in range(len(self.encoding.type_names))]
        return ele, vdw

    def to_gatelist(self) -> GateList:
        """Gates for stages 2-5; the input vector is amplitude-encoded separately."""
        if self.backend != "ry_tree":
            raise ValueError("gate-list export needs the ry_tree backend")
        lay = self.layout
        gl = GateList(lay.n_qubits, metadata={"registers": lay.describe(), "input": "amplitude-encoded"})
        ng_qubits = tuple(lay.qubits("ng"))

        def bits(name, value):
            qs = lay.qubits(name)
            return [(q, (value >> (len(qs) - 1 - i)) & 1) for i, q in enumerate(qs)]

        for op in self.stages:
            if isinstance(op, PermutationOp):
                for key, dest in sorted(op.perms.items()):
                    cycles = permutation_cycles(dest)
                    if not cycles:
                        continue
                    controls = [c for name, v in zip(op.controls, key) for c in bits(name, v)]
                    gl.append(Gate("PERM", ng_qubits, tuple(controls), cycles=tuple(map(tuple, cycles))))
            elif isinstance(op, BlockDiagonalOp):
                signs = {}
                for key, u in sorted(op.blocks.items()):
                    controls = [c for name, v in zip(op.selectors, key) for c in bits(name, v)]
                    gl.extend(g.with_controls(controls, shift=ng_qubits[0]) for g in u.gates)
                    signs["/".join(map(str, key))] = u.global_sign
                gl.metadata["block_global_signs"] = signs
            elif isinstance(op, HadamardOp):
                for name in op.registers:
                    gl.extend(Gate("H", q) for q in lay.qubits(name))
        return gl


def build_pose_batch(
    encoding: ConformationEncoding,
    grid: GridSpec,
    shifts: dict | None = None,
    turns: dict | None = None,
    backend: str = "householder",
    registers: tuple[str, ...] = REGISTERS,
    check_margins: bool = True,
    fix_sign: bool = True,
) -> PoseBatch:
    if grid.n_grid != encoding.n_grid:
        raise GridError("grid does not match the encoding")
    shifts, turns = dict(shifts or {}), dict(turns or {})
    sizes = {"rc": encoding.nrc, "lc": encoding.nlc, "nt": encoding.nt, "ng": encoding.ng}
    n_real = {}
    for a in AXES:
        shifts[a], sizes["t" + a], n_real["t" + a] = pad_to_power_of_two(shifts.get(a, [0]))
        turns[a], sizes["r" + a], n_real["r" + a] = pad_to_power_of_two(turns.get(a, [0]))
        for g in shifts[a]:
            if grid.dim(a) > 1 and abs(g) >= grid.dim(a):
                raise GridError(f"|shift| must be < {grid.dim(a)} along {a}, got {g}")
        if any(t % 4 for t in turns[a]):
            check_rotatable(grid, a)
    missing = [n for n, s in sizes.items() if s > 0 and n not in registers]
    if missing or "nt" not in registers or "ng" not in registers:
        raise ValueError(f"batch needs registers {missing or ['nt', 'ng']} in the layout")
    names = tuple(n for n in REGISTERS if n in registers)
    layout = RegisterLayout(names, tuple(sizes[n] for n in names))
    ng = encoding.ng

    if check_margins:
        _check_margins(encoding, grid, shifts, turns, n_real)

    stages = []
    for a in AXES:
        if any(t % 4 for t in turns[a]):
            perms = {(v,): rotation_permutation(grid, a, t, ng) for v, t in enumerate(turns[a]) if t % 4}
            stages.append(_controlled_perm(layout, perms, "r" + a))
    for a in AXES:
        if any(shifts[a]):
            perms = {(v,): shift_permutation(grid, a, g, ng) for v, g in enumerate(shifts[a]) if g}
            stages.append(_controlled_perm(layout, perms, "t" + a))
    unitaries = {}
    for i, rows in enumerate(encoding.rows):
        for b, u in enumerate(block_unitaries(rows, backend, fix_sign)):
            if u is not None:
                unitaries[(i, b)] = u
    if "rc" in names:
        stages.append(BlockDiagonalOp(layout, "ng", unitaries, ("rc", "nt")))
    else:
        stages.append(BlockDiagonalOp(layout, "ng", {(b,): u for (_, b), u in unitaries.items()}, ("nt",)))
    stages.append(HadamardOp(layout, ("nt",)))
    return PoseBatch(encoding, grid, layout, shifts, turns, n_real, backend, unitaries, stages)


def _controlled_perm(layout, perms, control):
    if control in layout.names:
        return PermutationOp(layout, "ng", perms, (control,))
    # an absent register has a single value, 0
    return PermutationOp(layout, "ng", {(): perms[(0,)]})


def _check_margins(encoding, grid, shifts, turns, n_real):
    width = 2**encoding.ng
    n_blocks = 1 + len(encoding.type_names)
    for j in range(encoding.n_ligand):
        blocks = encoding.o_grids[j].reshape(-1, width)[:n_blocks, : grid.n_grid]
        for rx in turns["x"][: n_real["rx"]]:
            for ry in turns["y"][: n_real["ry"]]:
                for rz in turns["z"][: n_real["rz"]]:
                    moved = blocks
                    for a, t in (("x", rx), ("y", ry), ("z", rz)):
                        if t % 4:
                            dest = rotation_permutation(grid, a, t)
                            out = np.empty_like(moved)
                            out[:, dest] = moved
                            moved = out
                    for a in AXES:
                        limit = grid_guard_margin(moved, a, grid)
                        for g in shifts[a][: n_real["t" + a]]:
                            if abs(g) > limit:
                                raise MarginError(a, g, limit)


# -- single-purpose wrappers ----------------------------------------------

def _input_only_encoding(problem: EncodedProblem) -> ConformationEncoding:
    rows = (tuple([None] * 2**problem.nt),)
    return ConformationEncoding(
        problem.nt, problem.ng, 0, 0, problem.n_grid, problem.type_names, 1, 1, problem.norms,
        rows, problem.o_grid[None, :], problem.L_type, problem.offset_c, problem.offset_slot, None,
    )


def _pose_input(batch: PoseBatch) -> np.ndarray:
    """Input state pushed through the rotation/translation stages only."""
    state, L = batch.input_state()
    for op in batch.stages:
        if isinstance(op, PermutationOp):
            state = op.apply(state)
    return state * L * 2.0 ** (batch.pose_qubits / 2)


def make_translation_batch(problem: EncodedProblem, grid: GridSpec, shifts_x=(0,), shifts_y=(0,), shifts_z=(0,)):
    """``O_trans``: one shifted copy of ``o_grid`` per ``(tz, ty, tx)`` register value.

    Returns ``(vector, layout)`` with layout ``tz, ty, tx, nt, ng``.
    """
    batch = build_pose_batch(
        _input_only_encoding(problem), grid,
        shifts={"x": shifts_x, "y": shifts_y, "z": shifts_z},
        registers=("tz", "ty", "tx", "nt", "ng"),
    )
    return _pose_input(batch), batch.layout


def make_rotation_batch(problem: EncodedProblem, grid: GridSpec, turns_x=(0,), turns_y=(0,), turns_z=(0,)):
    """``O_rot``: one rotated copy of ``o_grid`` per ``(rz, ry, rx)`` register value."""
    batch = build_pose_batch(
        _input_only_encoding(problem), grid,
        turns={"x": turns_x, "y": turns_y, "z": turns_z},
        registers=("rz", "ry", "rx", "nt", "ng"),
    )
    return _pose_input(batch), batch.layout


def make_conformation_batch(
    maps_by_protein_conf,
    ligs_by_ligand_conf,
    offset_c=0.0,
    backend: str = "householder",
    nt: int | None = None,
    ng: int | None = None,
):
    """Returns ``(operator, input_vector, L_con, layout)`` on ``rc, lc, nt, ng``.

    ``operator`` is the block-diagonal potential stage selected by
    ``(rc, nt)``; the summation stage is not included.
    """
    enc = assemble_conformations(maps_by_protein_conf, ligs_by_ligand_conf, offset_c, nt=nt, ng=ng)
    batch = build_pose_batch(
        enc, maps_by_protein_conf[0].grid, backend=backend, registers=("rc", "lc", "nt", "ng")
    )
    state, L = batch.input_state()
    return batch.stages[0], state, L, batch.layout


def pose_batch_for_problem(
    problem: EncodedProblem,
    maps: PotentialMaps,
    shifts=None,
    turns=None,
    backend: str = "householder",
) -> PoseBatch:
    return build_pose_batch(single_conformation(problem, maps), maps.grid, shifts, turns, backend)


__all__ = [
    "MarginError",
    "Pose",
    "PoseBatch",
    "build_pose_batch",
    "make_conformation_batch",
    "make_rotation_batch",
    "make_translation_batch",
    "pad_to_power_of_two",
    "pose_batch_for_problem",
]
