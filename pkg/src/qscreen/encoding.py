"""
Problem vectors for the quantum scoring circuit.

The grid register holds ``2**ng`` slots: the ``n_grid`` geometric nodes
followed by padding. Padding slots may carry

* the *offset slot* (index ``n_grid``): potential ``c`` and ligand weight 1,
  so the decoded energy is shifted by ``+c`` and stays nonnegative;
* the *slack slot* (next free index): used only by conformation batches,
  where one common scale per block is shared by every protein conformation
  and rows with a smaller norm are completed to unit length there. The
  ligand vector is always zero in the slack slot, so it never contributes.

Block ``0`` of the type register is electrostatics, block ``t + 1`` the vdW
term of ligand type ``t``; remaining blocks are zero.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gridmap import LigandGridVector, PotentialMaps


class EncodingError(ValueError):
    pass


class SignAmbiguityWarning(UserWarning):
    """Probability readout can not recover the sign of the energy."""


def normalize_row(values) -> tuple[np.ndarray, float]:
    values = np.asarray(values, dtype=float)
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise EncodingError("degenerate map: all entries are zero")
    return values / norm, norm


def type_qubits_for(n_types: int) -> int:
    """Smallest nt with 2**nt >= 1 + n_types (electrostatics plus vdW types)."""
    return max(1, math.ceil(math.log2(1 + n_types)))


def grid_qubits_for(n_slots: int) -> int:
    return max(1, math.ceil(math.log2(n_slots)))


def check_registers(nt, ng, n_types, n_slots):
    if 2**nt < 1 + n_types:
        raise EncodingError(f"nt={nt} too small: need 2**nt >= {1 + n_types}")
    if 2**ng < n_slots:
        raise EncodingError(f"ng={ng} too small: need 2**ng >= {n_slots}")


def _check_compatible(maps: PotentialMaps, lig: LigandGridVector):
    if maps.grid != lig.grid:
        raise EncodingError("maps and ligand deposit use different grids")
    if lig.type_names and tuple(lig.type_names) != tuple(maps.type_names):
        raise EncodingError(
            f"type mismatch: maps {maps.type_names} vs ligand {tuple(lig.type_names)}"
        )
    if lig.n_types != maps.n_types:
        raise EncodingError("maps and ligand deposit have different type counts")


def padded_map_blocks(maps: PotentialMaps, ng: int, offset_c: float = 0.0, offset_slot=None):
    """Map blocks padded to ``2**ng``; the electrostatic block gets ``c`` at the offset slot."""
    blocks = []
    for m in maps.blocks():
        b = np.zeros(2**ng)
        b[: m.size] = m
        blocks.append(b)
    if offset_slot is not None:
        blocks[0][offset_slot] = offset_c
    return blocks


def padded_ligand_blocks(lig: LigandGridVector, ng: int, offset_slot=None):
    blocks = []
    for v in lig.blocks():
        b = np.zeros(2**ng)
        b[: v.size] = v
        blocks.append(b)
    if offset_slot is not None:
        blocks[0][offset_slot] = 1.0
    return blocks


def auto_offset(maps: PotentialMaps, lig: LigandGridVector) -> float:
    """1.1 times the absolute-value bound on the grid energy of this pose."""
    bound = sum(float(np.sum(np.abs(m * v))) for m, v in zip(maps.blocks(), lig.blocks()))
    return 1.1 * bound


def pose_invariant_offset(maps_list, ligs_list) -> float:
    """Offset bounding every permuted pose: 1.1 * sum_b max|map_b| * sum|ligand_b|."""
    bound = 0.0
    for b in range(1 + maps_list[0].n_types):
        peak = max(float(np.max(np.abs(m.blocks()[b]))) for m in maps_list)
        mass = max(float(np.sum(np.abs(v.blocks()[b]))) for v in ligs_list)
        bound += peak * mass
    return 1.1 * bound


@dataclass(frozen=True)
class EncodedProblem:
    nt: int
    ng: int
    n_grid: int
    type_names: tuple[str, ...]
    o_grid: np.ndarray
    L_type: float
    phi_norm: float
    evdw_norms: tuple[float, ...]
    offset_c: float = 0.0
    offset_slot: int | None = None

    @property
    def n_qubits(self) -> int:
        return self.nt + self.ng

    @property
    def norms(self) -> tuple[float, ...]:
        return (self.phi_norm, *self.evdw_norms)

    @property
    def scale(self) -> float:
        """Factor turning the readout amplitude into an energy (before offset)."""
        return 2.0 ** (self.nt / 2) * self.L_type

    @property
    def state(self) -> np.ndarray:
        return self.o_grid / self.L_type

    def block(self, b: int) -> np.ndarray:
        width = 2**self.ng
        return self.o_grid[b * width : (b + 1) * width]

    def block_rows(self, maps: PotentialMaps) -> list[np.ndarray | None]:
        """Unit first rows for every type-register block; ``None`` means identity."""
        blocks = padded_map_blocks(maps, self.ng, self.offset_c, self.offset_slot)
        rows: list[np.ndarray | None] = [None] * 2**self.nt
        for b, (m, norm) in enumerate(zip(blocks, self.norms)):
            if norm > 0.0:
                rows[b] = m / norm
        return rows


def assemble_o_grid(
    maps: PotentialMaps,
    lig: LigandGridVector,
    offset_c: float | str = 0.0,
    nt: int | None = None,
    ng: int | None = None,
) -> EncodedProblem:
    _check_compatible(maps, lig)
    if offset_c == "auto":
        offset_c = auto_offset(maps, lig)
    offset_c = float(offset_c)
    if offset_c < 0:
        raise EncodingError(f"offset_c must be >= 0, got {offset_c}")
    n_grid = maps.grid.n_grid
    n_slots = n_grid + (1 if offset_c > 0 else 0)
    nt = type_qubits_for(maps.n_types) if nt is None else nt
    ng = grid_qubits_for(n_slots) if ng is None else ng
    check_registers(nt, ng, maps.n_types, n_slots)
    slot = n_grid if offset_c > 0 else None

    map_blocks = padded_map_blocks(maps, ng, offset_c, slot)
    lig_blocks = padded_ligand_blocks(lig, ng, slot)
    norms = [float(np.linalg.norm(m)) for m in map_blocks]
    if not any(norms):
        raise EncodingError("degenerate map: every potential block is zero")

    o_grid = np.zeros(2 ** (nt + ng))
    width = 2**ng
    for b, (norm, v) in enumerate(zip(norms, lig_blocks)):
        o_grid[b * width : (b + 1) * width] = norm * v
    L = float(np.linalg.norm(o_grid))
    if L == 0.0:
        raise EncodingError("degenerate: L_type = 0 (empty ligand and no offset)")
    return EncodedProblem(
        nt, ng, n_grid, tuple(maps.type_names), o_grid, L, norms[0], tuple(norms[1:]), offset_c, slot
    )


def decode_energy(value: float, problem, path: str = "amplitude") -> float:
    """Energy from the readout at the all-zero index.

    ``path="amplitude"`` takes the signed amplitude; ``path="probability"``
    takes p0 and is only sign-correct when the offset keeps ``E + c >= 0``.
    ``problem`` may be any object exposing ``scale`` and ``offset_c``.
    """
    if path == "amplitude":
        if abs(value) > 1 + 1e-12:
            raise EncodingError(f"amplitude {value} outside [-1, 1]")
        return value * problem.scale - problem.offset_c
    if path == "probability":
        if not -1e-12 <= value <= 1 + 1e-12:
            raise EncodingError(f"probability {value} outside [0, 1]")
        if problem.offset_c == 0:
            warnings.warn(
                "sign-ambiguous decode: probability readout with offset_c = 0",
                SignAmbiguityWarning,
                stacklevel=2,
            )
        return math.sqrt(max(value, 0.0)) * problem.scale - problem.offset_c
    raise ValueError(f"unknown decode path {path!r}")


# -- conformation batches --------------------------------------------------

@dataclass(frozen=True)
class ConformationEncoding:
    """Shared registers for ``n_protein`` x ``n_ligand`` conformations.

    ``rows[i][b]`` is the unit first row of block ``b`` for protein
    conformation ``i`` (``None`` = identity); ``o_grids[j]`` is the
    unnormalized vector of ligand conformation ``j``. Both lists are padded
    to powers of two; padded protein conformations point every row at the
    slack slot, padded ligand conformations are zero, so padded pairs read 0.
    """

    nt: int
    ng: int
    nrc: int
    nlc: int
    n_grid: int
    type_names: tuple[str, ...]
    n_protein: int
    n_ligand: int
    scales: tuple[float, ...]
    rows: tuple[tuple[np.ndarray | None, ...], ...]
    o_grids: np.ndarray  # (2**nlc, 2**(nt+ng))
    L_con: float
    offset_c: float = 0.0
    offset_slot: int | None = None
    slack_slot: int | None = None

    @property
    def L(self) -> float:
        return self.L_con


def assemble_conformations(
    maps_list,
    ligs_list,
    offset_c: float | str = 0.0,
    nt: int | None = None,
    ng: int | None = None,
    nrc: int | None = None,
    nlc: int | None = None,
) -> ConformationEncoding:
    maps_list, ligs_list = list(maps_list), list(ligs_list)
    if not maps_list or not ligs_list:
        raise EncodingError("need at least one protein and one ligand conformation")
    ref = maps_list[0]
    for m in maps_list:
        if m.grid != ref.grid or tuple(m.type_names) != tuple(ref.type_names):
            raise EncodingError("inconsistent register sizes across protein conformations")
    for lig in ligs_list:
        _check_compatible(ref, lig)
    if offset_c == "auto":
        offset_c = pose_invariant_offset(maps_list, ligs_list)
    offset_c = float(offset_c)

    n_grid, n_types = ref.grid.n_grid, ref.n_types
    n_blocks = 1 + n_types
    nrc = max(0, math.ceil(math.log2(len(maps_list)))) if nrc is None else nrc
    nlc = max(0, math.ceil(math.log2(len(ligs_list)))) if nlc is None else nlc
    if len(maps_list) > 2**nrc or len(ligs_list) > 2**nlc:
        raise EncodingError("conformation count exceeds its register")

    # Norms are independent of ng beyond the geometric nodes and the offset slot.
    probe = grid_qubits_for(n_grid + 1)
    slot = n_grid if offset_c > 0 else None
    norms = np.array(
        [[np.linalg.norm(b) for b in padded_map_blocks(m, probe, offset_c, slot)] for m in maps_list]
    )
    scales = norms.max(axis=0)
    if not scales.any():
        raise EncodingError("degenerate map: every potential block is zero")
    padded_protein = len(maps_list) < 2**nrc
    needs_slack = padded_protein or bool(np.any((norms != scales[None, :]) & (scales[None, :] > 0)))

    n_slots = n_grid + (slot is not None) + needs_slack
    nt = type_qubits_for(n_types) if nt is None else nt
    ng = grid_qubits_for(n_slots) if ng is None else ng
    check_registers(nt, ng, n_types, n_slots)
    slack = n_grid + (slot is not None) if needs_slack else None

    rows = []
    for i in range(2**nrc):
        conf_rows: list[np.ndarray | None] = [None] * 2**nt
        blocks = padded_map_blocks(maps_list[i], ng, offset_c, slot) if i < len(maps_list) else None
        for b in range(n_blocks):
            if scales[b] == 0.0:
                continue
            if blocks is None:
                row = np.zeros(2**ng)
                row[slack] = 1.0
            else:
                row = blocks[b] / scales[b]
                if norms[i, b] != scales[b]:
                    ratio = norms[i, b] / scales[b]
                    row[slack] = math.sqrt(max(0.0, 1.0 - ratio * ratio))
            conf_rows[b] = row
        rows.append(tuple(conf_rows))

    width = 2**ng
    o_grids = np.zeros((2**nlc, 2 ** (nt + ng)))
    for j, lig in enumerate(ligs_list):
        for b, v in enumerate(padded_ligand_blocks(lig, ng, slot)):
            o_grids[j, b * width : (b + 1) * width] = scales[b] * v
    L = float(np.linalg.norm(o_grids))
    if L == 0.0:
        raise EncodingError("degenerate: L_con = 0 (empty ligands and no offset)")
    return ConformationEncoding(
        nt, ng, nrc, nlc, n_grid, tuple(ref.type_names), len(maps_list), len(ligs_list),
        tuple(float(s) for s in scales), tuple(rows), o_grids, L, offset_c, slot, slack,
    )


def single_conformation(problem: EncodedProblem, maps: PotentialMaps) -> ConformationEncoding:
    """View a single-pose problem as a 1 x 1 conformation encoding."""
    return ConformationEncoding(
        problem.nt, problem.ng, 0, 0, problem.n_grid, problem.type_names, 1, 1,
        problem.norms, (tuple(problem.block_rows(maps)),), problem.o_grid[None, :],
        problem.L_type, problem.offset_c, problem.offset_slot, None,
    )


# -- serialization ---------------------------------------------------------

def problem_to_dict(problem: EncodedProblem) -> dict:
    return {
        "nt": problem.nt,
        "ng": problem.ng,
        "n_grid": problem.n_grid,
        "type_names": list(problem.type_names),
        "L_type": problem.L_type,
        "phi_norm": problem.phi_norm,
        "evdw_norms": list(problem.evdw_norms),
        "offset_c": problem.offset_c,
        "offset_slot": problem.offset_slot,
        "o_grid": [float(f"{v:.16e}") for v in problem.o_grid],
    }


def problem_from_dict(data: dict) -> EncodedProblem:
    return EncodedProblem(
        int(data["nt"]),
        int(data["ng"]),
        int(data["n_grid"]),
        tuple(data["type_names"]),
        np.array(data["o_grid"], dtype=float),
        float(data["L_type"]),
        float(data["phi_norm"]),
        tuple(float(v) for v in data["evdw_norms"]),
        float(data["offset_c"]),
        data["offset_slot"],
    )


def write_problem(problem: EncodedProblem, path) -> None:
    Path(path).write_text(json.dumps(problem_to_dict(problem), indent=1) + "\n", encoding="utf-8")


def read_problem(path) -> EncodedProblem:
    return problem_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
