"""
Binding-pocket grids: protein potential maps and ligand deposition.

Node ``(x, y, z)`` has linear index ``k = (z * n_y + y) * n_x + x``, so in the
grid register the z bits are most significant, then y, then x.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .forcefield import COULOMB_CONSTANT, AtomTypeRegistry, Molecule

AXES = ("x", "y", "z")
DEFAULT_CLAMP = 1.0e4


class GridError(ValueError):
    pass


class SingularityError(GridError):
    pass


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Regular grid. ``dims`` is ``(n_x, n_y, n_z)``; each a power of two.

    A dimension of 1 is accepted so planar (2D) layouts can be expressed.
    """

    origin: tuple[float, float, float]
    spacing: float
    dims: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if len(self.origin) != 3 or len(self.dims) != 3:
            raise GridError("origin and dims must have three components")
        if not self.spacing > 0:
            raise GridError(f"spacing must be > 0, got {self.spacing}")
        for axis, n in zip(AXES, self.dims):
            if not _is_power_of_two(n):
                raise GridError(f"dims along {axis} must be a power of two, got {n}")

    @property
    def n_grid(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    @property
    def axis_bits(self) -> dict[str, int]:
        return {a: int(n).bit_length() - 1 for a, n in zip(AXES, self.dims)}

    @property
    def n_qubits(self) -> int:
        return sum(self.axis_bits.values())

    def dim(self, axis: str) -> int:
        return self.dims[AXES.index(axis)]

    def index(self, x, y, z):
        nx, ny, _ = self.dims
        return (np.asarray(z) * ny + np.asarray(y)) * nx + np.asarray(x)

    def coords(self, k):
        """Inverse of :meth:`index`; returns ``(x, y, z)`` integer arrays."""
        nx, ny, _ = self.dims
        k = np.asarray(k)
        return k % nx, (k // nx) % ny, k // (nx * ny)

    def node_positions(self) -> np.ndarray:
        x, y, z = self.coords(np.arange(self.n_grid))
        ijk = np.stack([x, y, z], axis=1).astype(float)
        return np.asarray(self.origin) + self.spacing * ijk

    def as_cube(self, values: np.ndarray) -> np.ndarray:
        """View a node vector as a ``(n_z, n_y, n_x)`` array."""
        nx, ny, nz = self.dims
        return np.asarray(values).reshape(values.shape[:-1] + (nz, ny, nx))


@dataclass(frozen=True)
class PotentialMaps:
    grid: GridSpec
    phi: np.ndarray
    evdw: tuple[np.ndarray, ...]
    type_names: tuple[str, ...]
    clamp_value: float | None = DEFAULT_CLAMP
    coulomb: float = COULOMB_CONSTANT
    dielectric: str = "vacuum"
    slope: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "evdw", tuple(np.asarray(e, dtype=float) for e in self.evdw))
        object.__setattr__(self, "type_names", tuple(self.type_names))
        if len(self.evdw) != len(self.type_names):
            raise GridError("one evdw map is required per type")
        for m in (self.phi, *self.evdw):
            if m.shape != (self.grid.n_grid,):
                raise GridError(f"map has shape {m.shape}, expected ({self.grid.n_grid},)")

    @property
    def n_types(self) -> int:
        return len(self.type_names)

    def blocks(self) -> list[np.ndarray]:
        """Electrostatic map followed by one vdW map per type."""
        return [self.phi, *self.evdw]


@dataclass(frozen=True)
class LigandGridVector:
    grid: GridSpec
    q_grid: np.ndarray
    occupancy: np.ndarray  # (n_types, n_grid)
    type_names: tuple[str, ...] = field(default=())

    @property
    def n_types(self) -> int:
        return self.occupancy.shape[0]

    def blocks(self) -> list[np.ndarray]:
        return [self.q_grid, *self.occupancy]

    def stack(self) -> np.ndarray:
        return np.vstack([self.q_grid[None, :], self.occupancy])


def _distances(protein: Molecule, grid: GridSpec) -> np.ndarray:
    nodes = grid.node_positions()
    diff = nodes[:, None, :] - protein.positions[None, :, :]
    return np.sqrt(np.einsum("kij,kij->ki", diff, diff))


def _check_singular(d: np.ndarray, weights: np.ndarray, clamp_value, grid: GridSpec):
    hit = (d == 0.0) & (weights[None, :] != 0.0)
    if hit.any() and clamp_value is None:
        k, i = np.argwhere(hit)[0]
        raise SingularityError(
            f"protein atom {i} coincides with grid node {k} "
            f"{tuple(grid.node_positions()[k])}; enable clamping"
        )


def _finish(total: np.ndarray, clamp_value) -> np.ndarray:
    if clamp_value is None:
        return total
    if np.isnan(total).any():
        raise SingularityError("opposite infinite contributions at one grid node")
    return np.clip(total, -clamp_value, clamp_value)


def build_phi_map(
    protein: Molecule,
    grid: GridSpec,
    dielectric: str = "vacuum",
    slope: float = 1.0,
    coulomb: float = COULOMB_CONSTANT,
    clamp_value: float | None = DEFAULT_CLAMP,
) -> np.ndarray:
    """Electrostatic potential of the protein at every node.

    ``dielectric="distance"`` screens with eps(r) = slope * r, so each term
    becomes Q / (slope * r**2).  Entries are clamped to ``+-clamp_value``;
    pass ``clamp_value=None`` to disable clamping (node/atom coincidence
    then raises :class:`SingularityError`).
    """
    if len(protein) == 0:
        raise GridError("no protein atoms")
    if dielectric not in ("vacuum", "distance"):
        raise GridError(f"unknown dielectric mode {dielectric!r}")
    q = protein.charges
    d = _distances(protein, grid)
    _check_singular(d, q, clamp_value, grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = d if dielectric == "vacuum" else slope * d * d
        terms = np.where(q[None, :] == 0.0, 0.0, q[None, :] / denom)
    return _finish(coulomb * terms.sum(axis=1), clamp_value)


def build_evdw_map(
    protein: Molecule,
    registry: AtomTypeRegistry,
    grid: GridSpec,
    clamp_value: float | None = DEFAULT_CLAMP,
) -> tuple[np.ndarray, ...]:
    """Per-type 12-6 Lennard-Jones potential with R_min/2 combining."""
    if len(protein) == 0:
        raise GridError("no protein atoms")
    d = _distances(protein, grid)
    eps_p, rmin_p = protein.epsilons, protein.rmin_halves
    maps = []
    for t in registry.types:
        well = np.sqrt(eps_p * t.epsilon)
        _check_singular(d, well, clamp_value, grid)
        with np.errstate(divide="ignore", invalid="ignore"):
            s6 = ((rmin_p + t.rmin_half)[None, :] / d) ** 6
            terms = np.where(well[None, :] == 0.0, 0.0, well[None, :] * s6 * (s6 - 2.0))
        maps.append(_finish(terms.sum(axis=1), clamp_value))
    return tuple(maps)


def build_maps(
    protein: Molecule,
    registry: AtomTypeRegistry,
    grid: GridSpec,
    dielectric: str = "vacuum",
    slope: float = 1.0,
    coulomb: float = COULOMB_CONSTANT,
    clamp_value: float | None = DEFAULT_CLAMP,
) -> PotentialMaps:
    phi = build_phi_map(protein, grid, dielectric, slope, coulomb, clamp_value)
    evdw = build_evdw_map(protein, registry, grid, clamp_value)
    return PotentialMaps(
        grid, phi, evdw, tuple(registry.names), clamp_value, coulomb, dielectric, slope
    )


def trilinear_stencil(position, grid: GridSpec, tol: float = 1e-9):
    """Node indices and weights of the (up to) 8 nodes enclosing ``position``.

    Raises :class:`GridError` if the point lies outside the grid.
    """
    u = (np.asarray(position, dtype=float) - np.asarray(grid.origin)) / grid.spacing
    per_axis = []
    for axis, n, ui in zip(AXES, grid.dims, u):
        if ui < -tol or ui > n - 1 + tol:
            raise GridError(f"outside grid along {axis}")
        if n == 1:
            per_axis.append(((0, 1.0),))
            continue
        i0 = int(min(max(np.floor(ui), 0), n - 2))
        f = min(max(ui - i0, 0.0), 1.0)
        per_axis.append(((i0, 1.0 - f), (i0 + 1, f)))
    nodes, weights = [], []
    for ix, wx in per_axis[0]:
        for iy, wy in per_axis[1]:
            for iz, wz in per_axis[2]:
                nodes.append(int(grid.index(ix, iy, iz)))
                weights.append(wx * wy * wz)
    return np.array(nodes), np.array(weights)


def deposit_ligand(ligand: Molecule, registry: AtomTypeRegistry, grid: GridSpec) -> LigandGridVector:
    """Spread charges and unit type occupancies onto nodes with trilinear weights."""
    types = registry.indices_for(ligand)
    q = np.zeros(grid.n_grid)
    occ = np.zeros((len(registry), grid.n_grid))
    for j, atom in enumerate(ligand.atoms):
        try:
            nodes, w = trilinear_stencil(atom.position, grid)
        except GridError as exc:
            raise GridError(f"ligand atom {j} at {atom.position} is {exc}") from None
        np.add.at(q, nodes, atom.charge * w)
        np.add.at(occ[types[j]], nodes, w)
    return LigandGridVector(grid, q, occ, tuple(registry.names))


def _plane_margin(nonzero_cube: np.ndarray, cube_axis: int) -> tuple[int, int]:
    other = tuple(a for a in range(3) if a != cube_axis)
    occupied = np.flatnonzero(nonzero_cube.any(axis=other))
    n = nonzero_cube.shape[cube_axis]
    if occupied.size == 0:
        return n // 2, n // 2
    return int(occupied[0]), int(n - 1 - occupied[-1])


def grid_guard_margin(vectors, axis: str, grid: GridSpec | None = None) -> int:
    """Number of empty node planes at the nearer end of ``axis``.

    ``vectors`` is a :class:`LigandGridVector` or an array whose last axis
    runs over nodes. An all-zero input returns ``n_axis // 2``; use
    :func:`is_empty_deposit` to detect that case.
    """
    if isinstance(vectors, LigandGridVector):
        grid = vectors.grid
        stack = vectors.stack()
    else:
        stack = np.atleast_2d(np.asarray(vectors))
        if grid is None:
            raise GridError("grid is required for raw arrays")
    nx, ny, nz = grid.dims
    stack = stack.reshape(-1, stack.shape[-1])[:, : grid.n_grid]
    nonzero = (stack != 0.0).reshape(-1, nz, ny, nx).any(axis=0)
    cube_axis = {"x": 2, "y": 1, "z": 0}[axis]
    return min(_plane_margin(nonzero, cube_axis))


def is_empty_deposit(vectors: LigandGridVector) -> bool:
    return not np.any(vectors.stack())


# -- map files -------------------------------------------------------------

def _num(v: float) -> str:
    return f"{v:.16e}"


def format_maps(maps: PotentialMaps) -> str:
    g = maps.grid
    lines = [
        "origin " + " ".join(_num(v) for v in g.origin),
        f"spacing {_num(g.spacing)}",
        "dims " + " ".join(str(n) for n in g.dims),
        "clamp " + ("none" if maps.clamp_value is None else _num(maps.clamp_value)),
        f"coulomb {_num(maps.coulomb)}",
        f"dielectric {maps.dielectric} {_num(maps.slope)}",
        "map phi",
    ]
    lines += [_num(v) for v in maps.phi]
    for name, m in zip(maps.type_names, maps.evdw):
        lines.append(f"map evdw {name}")
        lines += [_num(v) for v in m]
    return "\n".join(lines) + "\n"


def parse_maps(text: str) -> PotentialMaps:
    header: dict[str, list[str]] = {}
    sections: list[tuple[list[str], list[float]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        try:
            if fields[0] == "map":
                sections.append((fields[1:], []))
            elif sections:
                if len(fields) != 1:
                    raise ValueError("expected one value per line")
                sections[-1][1].append(float(fields[0]))
            else:
                header[fields[0]] = fields[1:]
        except ValueError as exc:
            raise GridError(f"map file line {lineno}: {exc}") from None
    try:
        grid = GridSpec(
            tuple(float(v) for v in header["origin"]),
            float(header["spacing"][0]),
            tuple(int(v) for v in header["dims"]),
        )
    except KeyError as exc:
        raise GridError(f"map file missing header {exc.args[0]!r}") from None
    clamp = header.get("clamp", ["none"])[0]
    dielectric = header.get("dielectric", ["vacuum", "1"])
    if not sections or sections[0][0] != ["phi"]:
        raise GridError("map file must start with a phi section")
    evdw, names = [], []
    for label, values in sections[1:]:
        if len(label) != 2 or label[0] != "evdw":
            raise GridError(f"unknown map section {' '.join(label)!r}")
        names.append(label[1])
        evdw.append(np.array(values))
    return PotentialMaps(
        grid,
        np.array(sections[0][1]),
        tuple(evdw),
        tuple(names),
        None if clamp == "none" else float(clamp),
        float(header.get("coulomb", [COULOMB_CONSTANT])[0]),
        dielectric[0],
        float(dielectric[1]),
    )


def write_maps(maps: PotentialMaps, path) -> None:
    Path(path).write_text(format_maps(maps), encoding="utf-8")


def read_maps(path) -> PotentialMaps:
    return parse_maps(Path(path).read_text(encoding="utf-8"))
