from .batch import (
    MarginError,
    Pose,
    PoseBatch,
    build_pose_batch,
    make_conformation_batch,
    make_rotation_batch,
    make_translation_batch,
    pad_to_power_of_two,
    pose_batch_for_problem,
)
from .first_row import FirstRowUnitary, UnitaryError, make_first_row_unitary, ry_tree_gates
from .gates import Gate, GateList, apply_gates, permutation_cycles
from .operators import (
    BlockDiagonalOp,
    HadamardOp,
    LayoutError,
    Operator,
    PermutationOp,
    RegisterLayout,
    Sequence,
)
from .permutations import (
    make_rotation_operator,
    make_shift_operator,
    permutation_matrix,
    rotation_permutation,
    shift_permutation,
)
from .stages import make_summation_stage, make_u_grid

__all__ = [
    "BlockDiagonalOp",
    "FirstRowUnitary",
    "Gate",
    "GateList",
    "HadamardOp",
    "LayoutError",
    "MarginError",
    "Operator",
    "PermutationOp",
    "Pose",
    "PoseBatch",
    "RegisterLayout",
    "Sequence",
    "UnitaryError",
    "apply_gates",
    "build_pose_batch",
    "make_conformation_batch",
    "make_first_row_unitary",
    "make_rotation_batch",
    "make_rotation_operator",
    "make_shift_operator",
    "make_summation_stage",
    "make_translation_batch",
    "make_u_grid",
    "pad_to_power_of_two",
    "permutation_cycles",
    "permutation_matrix",
    "pose_batch_for_problem",
    "rotation_permutation",
    "ry_tree_gates",
    "shift_permutation",
]
