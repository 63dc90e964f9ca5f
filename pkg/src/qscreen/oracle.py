"""
Classical reference values for everything the circuit computes.

Nothing here touches the circuit code: maps are rebuilt with plain scalar
loops, grid energies are dot products accumulated in ascending node order,
and pose moves are done by brute-force relabeling of node coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .forcefield import COULOMB_CONSTANT, AtomTypeRegistry, Molecule, build_type_registry
from .gridmap import (
    DEFAULT_CLAMP,
    GridError,
    GridSpec,
    LigandGridVector,
    PotentialMaps,
    SingularityError,
    build_maps,
    deposit_ligand,
)


def _dist(a, b) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def _coulomb_term(q1, q2, d, dielectric, slope):
    if dielectric == "vacuum":
        return q1 * q2 / d
    return q1 * q2 / (slope * d * d)


def _lj_term(eps1, eps2, r1, r2, d):
    s6 = ((r1 + r2) / d) ** 6
    return math.sqrt(eps1 * eps2) * (s6 * s6 - 2.0 * s6)


def _clamp(v, clamp_value):
    if clamp_value is None:
        return v
    return min(max(v, -clamp_value), clamp_value)


def reference_maps(
    protein: Molecule,
    registry: AtomTypeRegistry,
    grid: GridSpec,
    dielectric: str = "vacuum",
    slope: float = 1.0,
    coulomb: float = COULOMB_CONSTANT,
    clamp_value: float | None = DEFAULT_CLAMP,
) -> PotentialMaps:
    """Potential maps by an explicit node-by-atom double loop."""
    nodes = grid.node_positions()
    phi = np.zeros(grid.n_grid)
    evdw = np.zeros((len(registry), grid.n_grid))
    for k in range(grid.n_grid):
        rk = tuple(nodes[k])
        acc = 0.0
        per_type = [0.0] * len(registry)
        for i, atom in enumerate(protein.atoms):
            d = _dist(atom.position, rk)
            if d == 0.0:
                if clamp_value is None:
                    raise SingularityError(f"protein atom {i} coincides with grid node {k}")
                acc += math.copysign(math.inf, atom.charge) if atom.charge else 0.0
                for t, typ in enumerate(registry.types):
                    per_type[t] += math.inf if atom.epsilon * typ.epsilon > 0 else 0.0
                continue
            acc += _coulomb_term(atom.charge, 1.0, d, dielectric, slope)
            for t, typ in enumerate(registry.types):
                per_type[t] += _lj_term(atom.epsilon, typ.epsilon, atom.rmin_half, typ.rmin_half, d)
        phi[k] = _clamp(coulomb * acc if acc else 0.0, clamp_value)
        for t in range(len(registry)):
            evdw[t, k] = _clamp(per_type[t], clamp_value)
    return PotentialMaps(grid, phi, tuple(evdw), tuple(registry.names), clamp_value, coulomb, dielectric, slope)


def direct_pairwise(
    protein: Molecule,
    ligand: Molecule,
    dielectric: str = "vacuum",
    slope: float = 1.0,
    coulomb: float = COULOMB_CONSTANT,
) -> tuple[float, float]:
    """Complete atom-pair sums, no grid and no cutoff: ``(E_ele, E_vdw)``."""
    e_ele = 0.0
    e_vdw = 0.0
    for i, a in enumerate(protein.atoms):
        for j, b in enumerate(ligand.atoms):
            d = _dist(a.position, b.position)
            if d == 0.0:
                raise SingularityError(f"protein atom {i} coincides with ligand atom {j}")
            e_ele += _coulomb_term(a.charge, b.charge, d, dielectric, slope)
            e_vdw += _lj_term(a.epsilon, b.epsilon, a.rmin_half, b.rmin_half, d)
    return coulomb * e_ele, e_vdw


def _dot(a, b) -> float:
    acc = 0.0
    for x, y in zip(a.tolist(), b.tolist()):
        acc += x * y
    return acc


def grid_inner_product(maps: PotentialMaps, lig: LigandGridVector) -> tuple[float, tuple[float, ...]]:
    if maps.grid != lig.grid:
        raise GridError("maps and ligand deposit use different grids")
    return _dot(maps.phi, lig.q_grid), tuple(_dot(e, n) for e, n in zip(maps.evdw, lig.occupancy))


def grid_total(maps: PotentialMaps, lig: LigandGridVector) -> float:
    ele, vdw = grid_inner_product(maps, lig)
    return ele + sum(vdw)


@dataclass
class OracleReport:
    E_ele_direct: float
    E_vdw_direct: float
    E_ele_grid: float
    E_vdw_grid_by_type: dict[str, float]
    delta_abs: float
    delta_rel: float | None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def relative_error(value: float, reference: float) -> float | None:
    if abs(reference) <= 1e-12:
        return None
    return abs(value - reference) / abs(reference)


def oracle_report(protein: Molecule, ligand: Molecule, maps: PotentialMaps, lig: LigandGridVector) -> OracleReport:
    ele_d, vdw_d = direct_pairwise(protein, ligand, maps.dielectric, maps.slope, maps.coulomb)
    ele_g, vdw_g = grid_inner_product(maps, lig)
    total_d, total_g = ele_d + vdw_d, ele_g + sum(vdw_g)
    return OracleReport(
        ele_d, vdw_d, ele_g, dict(zip(maps.type_names, vdw_g)),
        abs(total_g - total_d), relative_error(total_g, total_d),
    )


# -- classical pose moves ----------------------------------------------------

def _relabel(values: np.ndarray, grid: GridSpec, move) -> np.ndarray:
    """``out[move(x, y, z)] = values[(x, y, z)]`` by a loop over nodes."""
    nx, ny, nz = grid.dims
    out = np.zeros_like(values)
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                k = (z * ny + y) * nx + x
                x2, y2, z2 = move(x, y, z)
                out[..., (z2 * ny + y2) * nx + x2] = values[..., k]
    return out


def shifted_vector(values: np.ndarray, grid: GridSpec, shift: dict) -> np.ndarray:
    nx, ny, nz = grid.dims
    gx, gy, gz = (shift.get(a, 0) for a in "xyz")
    return _relabel(values, grid, lambda x, y, z: ((x + gx) % nx, (y + gy) % ny, (z + gz) % nz))


def rotated_vector(values: np.ndarray, grid: GridSpec, axis: str, quarter_turns: int) -> np.ndarray:
    nx, ny, nz = grid.dims
    moves = {
        "z": lambda x, y, z: (nx - 1 - y, x, z),
        "x": lambda x, y, z: (x, ny - 1 - z, y),
        "y": lambda x, y, z: (z, y, nz - 1 - x),
    }
    out = values
    for _ in range(quarter_turns % 4):
        out = _relabel(out, grid, moves[axis])
    return out


def moved_deposit(lig: LigandGridVector, pose: dict) -> LigandGridVector:
    """Deposit after the pose's rotations (x, y, z) and then its shifts."""
    stack = lig.stack()
    for a in "xyz":
        stack = rotated_vector(stack, lig.grid, a, pose.get("r" + a, 0))
    stack = shifted_vector(stack, lig.grid, {a: pose.get("t" + a, 0) for a in "xyz"})
    return LigandGridVector(lig.grid, stack[0], stack[1:], lig.type_names)


def rotate_about_grid_centre(molecule: Molecule, grid: GridSpec, axis: str, quarter_turns: int) -> Molecule:
    """Rigid quarter turns of atom coordinates about the grid centre."""
    centre = np.asarray(grid.origin) + grid.spacing * (np.asarray(grid.dims) - 1) / 2.0
    p = molecule.positions - centre
    for _ in range(quarter_turns % 4):
        x, y, z = p[:, 0].copy(), p[:, 1].copy(), p[:, 2].copy()
        if axis == "z":
            p = np.stack([-y, x, z], axis=1)
        elif axis == "x":
            p = np.stack([x, -z, y], axis=1)
        else:
            p = np.stack([z, y, -x], axis=1)
    return molecule.with_positions(p + centre)


# -- convergence -------------------------------------------------------------

@dataclass
class ConvergenceRow:
    spacing: float
    dims: tuple[int, int, int]
    E_grid: float
    E_direct: float
    rel_error: float | None


def _next_pow2(n: int) -> int:
    return 1 << max(0, math.ceil(math.log2(max(n, 1))))


def convergence_study(
    protein: Molecule,
    ligand: Molecule,
    spacings,
    origin=None,
    extent=None,
    pad: float = 1.0,
    dielectric: str = "vacuum",
    slope: float = 1.0,
    coulomb: float = COULOMB_CONSTANT,
    min_protein_distance: float = 2.0,
) -> list[ConvergenceRow]:
    """Grid versus direct total energy for each spacing over one fixed box.

    The box defaults to the ligand bounding box grown by ``pad``. Each grid
    starts at the box origin with power-of-two dims covering the box.
    """
    lp = ligand.positions
    origin = lp.min(axis=0) - pad if origin is None else np.asarray(origin, dtype=float)
    extent = (lp.max(axis=0) + pad - origin) if extent is None else np.asarray(extent, dtype=float)
    lo, hi = origin, origin + extent
    gap = np.maximum(np.maximum(lo - protein.positions, protein.positions - hi), 0.0)
    closest = float(np.min(np.linalg.norm(gap, axis=1)))
    if closest < min_protein_distance:
        raise GridError(
            f"protein atom {closest:.3g} A from the grid region; need >= {min_protein_distance} A"
        )
    registry = build_type_registry(ligand)
    ele_d, vdw_d = direct_pairwise(protein, ligand, dielectric, slope, coulomb)
    rows = []
    for h in spacings:
        dims = tuple(_next_pow2(int(math.ceil(e / h - 1e-9)) + 1) for e in extent)
        grid = GridSpec(tuple(origin), float(h), dims)
        maps = build_maps(protein, registry, grid, dielectric, slope, coulomb, None)
        e_grid = grid_total(maps, deposit_ligand(ligand, registry, grid))
        rows.append(ConvergenceRow(float(h), dims, e_grid, ele_d + vdw_d, relative_error(e_grid, ele_d + vdw_d)))
    return rows


def format_convergence_table(rows, sep: str | None = None) -> str:
    """Aligned text table, or delimited with ``sep`` (e.g. ``"\\t"``)."""
    header = ["spacing", "dims", "E_grid", "E_direct", "rel_error"]
    body = [
        [
            f"{r.spacing:g}",
            "x".join(map(str, r.dims)),
            f"{r.E_grid:.10g}",
            f"{r.E_direct:.10g}",
            "nan" if r.rel_error is None else f"{r.rel_error:.6e}",
        ]
        for r in rows
    ]
    if sep is not None:
        return "\n".join(sep.join(line) for line in [header, *body]) + "\n"
    widths = [max(len(line[i]) for line in [header, *body]) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(line, widths)) for line in [header, *body]) + "\n"
