import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qscreen.forcefield import (
    COULOMB_CONSTANT,
    Atom,
    Molecule,
    MoleculeFormatError,
    RegistryError,
    build_type_registry,
    coulomb_prefactor,
    format_molecule,
    parse_molecule,
    read_molecule,
)

TEXT = """\
# a two-atom fixture
C  0.0 0.0 0.0  -0.1 0.086 1.908
H  1.0 0.0 0.0   0.1 0.030 1.320   # trailing comment
CONFORMATION
0.0 0.0 0.1
1.0 0.1 0.0
"""


def test_parse_atoms_and_conformations():
    mol = parse_molecule(TEXT)
    assert mol.type_names == ("C", "H")
    assert mol.n_conformations == 2
    np.testing.assert_array_equal(mol.charges, [-0.1, 0.1])
    np.testing.assert_array_equal(mol.conformation(1).positions, [[0.0, 0.0, 0.1], [1.0, 0.1, 0.0]])
    assert mol.conformation(1).charges.tolist() == [-0.1, 0.1]


@pytest.mark.parametrize(
    "text, lineno, fragment",
    [
        ("C 0 0 0 0 0.1\n", 1, "expected 'type x y z charge epsilon rmin_half'"),
        ("C 0 0 0 0 0.1 1.0\nH 0 0 x 0 0.1 1.0\n", 2, "non-numeric field"),
        ("CONFORMATION\n", 1, "before any atoms"),
        ("C 0 0 0 0 0.1 1\nCONFORMATION\n1 2\n", 3, "expected 'x y z'"),
    ],
)
def test_parse_errors_carry_line_numbers(text, lineno, fragment):
    with pytest.raises(MoleculeFormatError) as info:
        parse_molecule(text)
    assert info.value.lineno == lineno
    assert f"line {lineno}" in str(info.value)
    assert fragment in str(info.value)


def test_empty_input_is_rejected():
    with pytest.raises(MoleculeFormatError, match="no atoms"):
        parse_molecule("# nothing here\n\n")


def test_conformation_atom_count_mismatch():
    with pytest.raises(MoleculeFormatError, match="conformation atom-count mismatch"):
        parse_molecule("C 0 0 0 0 0.1 1\nH 1 0 0 0 0.1 1\nCONFORMATION\n0 0 0\n")


@pytest.mark.parametrize("field, value", [("epsilon", -0.1), ("rmin_half", -1.0)])
def test_atom_rejects_negative_parameters(field, value):
    kwargs = dict(type_name="C", position=(0.0, 0.0, 0.0), charge=0.0, epsilon=0.1, rmin_half=1.0)
    kwargs[field] = value
    with pytest.raises(ValueError):
        Atom(**kwargs)


def test_registry_order_of_first_appearance():
    mol = parse_molecule("O 0 0 0 0 0.15 1.7\nC 1 0 0 0 0.1 2.0\nO 2 0 0 0 0.15 1.7\n")
    reg = build_type_registry(mol)
    assert reg.names == ("O", "C")
    assert reg.indices_for(mol).tolist() == [0, 1, 0]


def test_registry_rejects_inconsistent_parameters():
    mol = parse_molecule("C 0 0 0 0 0.1 2.0\nC 1 0 0 0 0.2 2.0\n")
    with pytest.raises(RegistryError, match="inconsistent parameters for type"):
        build_type_registry(mol)


@pytest.mark.parametrize("reduced, expected", [(True, 1.0), (False, COULOMB_CONSTANT)])
def test_coulomb_prefactor(reduced, expected):
    assert coulomb_prefactor(reduced) == expected


def test_read_molecule_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_molecule(tmp_path / "absent.mol")


_coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(st.sampled_from(["C", "N", "O"]), _coord, _coord, _coord, st.floats(-2, 2, allow_nan=False)),
        min_size=1,
        max_size=6,
    ),
    st.integers(0, 2),
)
def test_format_parse_round_trip(atoms, n_conf):
    params = {"C": (0.1, 2.0), "N": (0.2, 1.85), "O": (0.15, 1.7)}
    mol = Molecule(
        tuple(Atom(t, (x, y, z), q, *params[t]) for t, x, y, z, q in atoms),
        tuple(tuple((x + k, y, z) for _, x, y, z, _ in atoms) for k in range(1, n_conf + 1)),
    )
    again = parse_molecule(format_molecule(mol, precision=None))
    assert again.type_names == mol.type_names
    np.testing.assert_array_equal(again.positions, mol.positions)
    np.testing.assert_array_equal(again.charges, mol.charges)
    assert again.n_conformations == mol.n_conformations
