"""Block-diagonal potential stage and the Hadamard summation stage."""

from __future__ import annotations

from ..encoding import EncodedProblem
from ..gridmap import PotentialMaps
from .first_row import make_first_row_unitary
from .operators import BlockDiagonalOp, HadamardOp, RegisterLayout


def block_unitaries(rows, backend: str = "householder", fix_sign: bool = True):
    """First-row unitaries for a list of rows; ``None`` rows stay ``None`` (identity)."""
    return [None if r is None else make_first_row_unitary(r, backend, fix_sign) for r in rows]


def make_u_grid(
    problem: EncodedProblem,
    maps: PotentialMaps,
    backend: str = "householder",
    fix_sign: bool = True,
) -> BlockDiagonalOp:
    """``diag(Phi_hat, E_hat^1, ...)`` over the type register, identity on unused blocks."""
    if tuple(maps.type_names) != tuple(problem.type_names) or maps.grid.n_grid != problem.n_grid:
        raise ValueError("maps do not match the encoded problem")
    layout = RegisterLayout.of(nt=problem.nt, ng=problem.ng)
    units = block_unitaries(problem.block_rows(maps), backend, fix_sign)
    return BlockDiagonalOp(layout, "ng", {(b,): u for b, u in enumerate(units)}, ("nt",))


def make_summation_stage(nt: int, ng: int, layout: RegisterLayout | None = None) -> HadamardOp:
    """``H^(x)nt (x) I^(x)ng``; with ``layout`` the Hadamards hit its ``nt`` register."""
    if nt < 1 or ng < 1:
        raise ValueError("nt and ng must be >= 1")
    layout = RegisterLayout.of(nt=nt, ng=ng) if layout is None else layout
    return HadamardOp(layout, ("nt",))
