"""
Hand-worked 4x4 planar permutation examples used as exact regression data.

The layout is 2 y-qubits followed by 2 x-qubits, node index ``4*y + x``.
Each relabeling table lists, for every destination node (row-major), the
source node whose amplitude lands there, so the matrix has
``M[dest, table[dest]] = 1``.

``LEGIBLE_ROWS`` is a second, partial reference: the one-hot column of a
subset of rows, transcribed directly from the tabulated matrices. The full
matrices are rebuilt from the relabeling tables, which are complete.
"""

from __future__ import annotations

import numpy as np

from ..gridmap import GridSpec
from .permutations import permutation_matrix, rotation_permutation, shift_permutation

PLANAR_GRID = GridSpec((0.0, 0.0, 0.0), 1.0, (4, 4, 1))

# one node to the right: x -> x + 1
X_SHIFT_TABLE = (
    (3, 0, 1, 2),
    (7, 4, 5, 6),
    (11, 8, 9, 10),
    (15, 12, 13, 14),
)

# one node down: y -> y + 1
Y_SHIFT_TABLE = (
    (12, 13, 14, 15),
    (0, 1, 2, 3),
    (4, 5, 6, 7),
    (8, 9, 10, 11),
)

# quarter turn about z, drawn clockwise with y pointing down
QUARTER_TURN_TABLE = (
    (12, 8, 4, 0),
    (13, 9, 5, 1),
    (14, 10, 6, 2),
    (15, 11, 7, 3),
)

# row -> one-hot column for the transcribed rows. The tabulated quarter-turn
# matrix is the transpose of the relabeling, hence the ``transposed`` entry.
LEGIBLE_ROWS = {
    "x_shift": {0: 3, 1: 0, 2: 1, 3: 2, 4: 7, 5: 4, 6: 5, 7: 6},
    "y_shift": {
        0: 12, 1: 13, 2: 14, 3: 15, 4: 0, 5: 1, 6: 2, 7: 3,
        8: 4, 9: 5, 10: 6, 11: 7, 12: 8, 13: 9, 14: 10,
    },
    "quarter_turn_transposed": {0: 3, 1: 7, 4: 2, 5: 6, 8: 1, 9: 5, 12: 0, 13: 4},
}


def relabel_matrix(table) -> np.ndarray:
    src = np.asarray(table, dtype=int).ravel()
    m = np.zeros((src.size, src.size), dtype=int)
    m[np.arange(src.size), src] = 1
    return m


def reference_matrices() -> dict[str, np.ndarray]:
    """Full integer matrices of the worked examples."""
    turn = relabel_matrix(QUARTER_TURN_TABLE)
    return {
        "x_shift": relabel_matrix(X_SHIFT_TABLE),
        "y_shift": relabel_matrix(Y_SHIFT_TABLE),
        "quarter_turn": turn,
        "quarter_turn_transposed": turn.T.copy(),
    }


def constructed_matrices() -> dict[str, np.ndarray]:
    """The same operators built by the general permutation code."""
    g = PLANAR_GRID
    turn = permutation_matrix(rotation_permutation(g, "z", 1, 4))
    return {
        "x_shift": permutation_matrix(shift_permutation(g, "x", 1, 4)),
        "y_shift": permutation_matrix(shift_permutation(g, "y", 1, 4)),
        "quarter_turn": turn,
        # the tabulated quarter-turn example equals the transpose of this
        "quarter_turn_transposed": turn.T.copy(),
    }


def legible_row_mismatches(name: str, matrix: np.ndarray) -> list[int]:
    """Rows where ``matrix`` disagrees with a transcribed row."""
    return [r for r, c in LEGIBLE_ROWS[name].items() if int(np.flatnonzero(matrix[r])[0]) != c or matrix[r].sum() != 1]


def reference_checks() -> list[tuple[str, bool, int]]:
    """``(name, identical, n_mismatched_entries)`` for every worked example."""
    ref, built = reference_matrices(), constructed_matrices()
    out = []
    for name in ref:
        diff = int(np.count_nonzero(ref[name] != built[name]))
        legible = name not in LEGIBLE_ROWS or not legible_row_mismatches(name, built[name])
        out.append((name, diff == 0 and legible, diff))
    return out
