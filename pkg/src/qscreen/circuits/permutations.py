"""
Grid-register permutations for rigid ligand moves.

Both act only on the ``n_grid`` geometric slots; padding slots (offset,
slack) are fixed points.

Shift by ``g`` along an axis moves the amplitude of node ``c`` to node
``(c + g) mod n``. A quarter turn about an axis is the right-handed
90 degree rotation about the grid centre:

=====  ===============================
axis   node (x, y, z) goes to
=====  ===============================
z      (n - 1 - y, x, z)
x      (x, n - 1 - z, y)
y      (z, y, n - 1 - x)
=====  ===============================

On a planar ``y``-rows / ``x``-columns picture with ``y`` growing downward
the z quarter turn is clockwise.
"""

from __future__ import annotations

import numpy as np

from ..gridmap import AXES, GridSpec
from .operators import LayoutError, PermutationOp, RegisterLayout

_PLANE = {"z": ("x", "y"), "x": ("y", "z"), "y": ("z", "x")}


def _check_ng(grid: GridSpec, ng: int | None) -> int:
    ng = grid.n_qubits if ng is None else ng
    if 2**ng < grid.n_grid:
        raise LayoutError(f"grid register of {ng} qubits can not hold {grid.n_grid} nodes")
    return ng


def _extend(dest_geom: np.ndarray, ng: int) -> np.ndarray:
    dest = np.arange(2**ng)
    dest[: dest_geom.size] = dest_geom
    return dest


def shift_permutation(grid: GridSpec, axis: str, g: int, ng: int | None = None) -> np.ndarray:
    ng = _check_ng(grid, ng)
    k = np.arange(grid.n_grid)
    coords = dict(zip(AXES, grid.coords(k)))
    n = grid.dim(axis)
    coords[axis] = (coords[axis] + g) % n
    return _extend(grid.index(coords["x"], coords["y"], coords["z"]), ng)


def check_rotatable(grid: GridSpec, axis: str) -> None:
    a, b = _PLANE[axis]
    if grid.dim(a) != grid.dim(b):
        raise LayoutError(
            f"rotation about {axis} needs equal {a}/{b} dims, got {grid.dim(a)} and {grid.dim(b)}"
        )


def quarter_turn_coords(coords: dict, axis: str, n: int) -> dict:
    """Image of integer node coordinates under one quarter turn about ``axis``."""
    a, b = _PLANE[axis]
    out = dict(coords)
    out[a] = n - 1 - coords[b]
    out[b] = coords[a]
    return out


def rotation_permutation(grid: GridSpec, axis: str, quarter_turns: int, ng: int | None = None) -> np.ndarray:
    check_rotatable(grid, axis)
    ng = _check_ng(grid, ng)
    n = grid.dim(_PLANE[axis][0])
    coords = dict(zip(AXES, grid.coords(np.arange(grid.n_grid))))
    for _ in range(quarter_turns % 4):
        coords = quarter_turn_coords(coords, axis, n)
    return _extend(grid.index(coords["x"], coords["y"], coords["z"]), ng)


def _grid_layout(grid: GridSpec, nt: int, ng: int | None) -> RegisterLayout:
    return RegisterLayout.of(nt=nt, ng=_check_ng(grid, ng))


def make_shift_operator(axis: str, g: int, grid: GridSpec, nt: int, ng: int | None = None) -> PermutationOp:
    """``I`` on the type register tensored with the grid shift ``T_axis^g``."""
    n = grid.dim(axis)
    if abs(g) >= n and n > 1:
        raise LayoutError(f"|shift| must be < {n} along {axis}, got {g}")
    layout = _grid_layout(grid, nt, ng)
    return PermutationOp(layout, "ng", {(): shift_permutation(grid, axis, g, layout.size("ng"))})


def make_rotation_operator(
    axis: str, quarter_turns: int, grid: GridSpec, nt: int, ng: int | None = None
) -> PermutationOp:
    layout = _grid_layout(grid, nt, ng)
    dest = rotation_permutation(grid, axis, quarter_turns, layout.size("ng"))
    return PermutationOp(layout, "ng", {(): dest})


def permutation_matrix(dest: np.ndarray) -> np.ndarray:
    """Dense matrix ``M`` with ``M[dest[i], i] = 1``."""
    m = np.zeros((dest.size, dest.size), dtype=int)
    m[dest, np.arange(dest.size)] = 1
    return m
