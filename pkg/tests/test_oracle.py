import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _systems import CONVERGENCE_BOX, CONVERGENCE_LIGAND, CONVERGENCE_PROTEIN, centred_system, random_system
from qscreen.forcefield import Atom, Molecule, build_type_registry
from qscreen.gridmap import GridError, GridSpec, SingularityError, build_maps, deposit_ligand
from qscreen.oracle import (
    convergence_study,
    direct_pairwise,
    format_convergence_table,
    grid_inner_product,
    grid_total,
    oracle_report,
    relative_error,
    rotate_about_grid_centre,
    rotated_vector,
    shifted_vector,
)


def mol(*atoms):
    return Molecule(tuple(Atom(*a) for a in atoms))


def test_unit_charges_two_apart():
    p = mol(("A", (0.0, 0.0, 0.0), 1.0, 0.1, 1.0))
    lig = mol(("A", (2.0, 0.0, 0.0), 1.0, 0.1, 1.0))
    ele, vdw = direct_pairwise(p, lig, coulomb=1.0)
    # eps = sqrt(0.1 * 0.1) and the contact distance 1 + 1 equals d, so LJ is -eps
    assert ele == pytest.approx(0.5, abs=1e-15)
    assert vdw == pytest.approx(-0.1, abs=1e-15)


@pytest.mark.parametrize("dielectric, slope, expected", [("vacuum", 1.0, 0.5), ("distance", 1.0, 0.25), ("distance", 4.0, 0.0625)])
def test_dielectric_models(dielectric, slope, expected):
    p = mol(("A", (0.0, 0.0, 0.0), 1.0, 0.0, 1.0))
    lig = mol(("A", (0.0, 2.0, 0.0), 1.0, 0.0, 1.0))
    assert direct_pairwise(p, lig, dielectric, slope, 1.0)[0] == pytest.approx(expected)


def test_zero_charges_give_no_electrostatics():
    rng = np.random.default_rng(0)
    protein, ligand, *_ = random_system(rng)
    neutral = Molecule(tuple(Atom(a.type_name, a.position, 0.0, a.epsilon, a.rmin_half) for a in ligand.atoms))
    assert direct_pairwise(protein, neutral)[0] == 0.0


def test_charge_flip_is_antisymmetric():
    rng = np.random.default_rng(1)
    protein, ligand, *_ = random_system(rng)
    flipped = Molecule(tuple(Atom(a.type_name, a.position, -a.charge, a.epsilon, a.rmin_half) for a in ligand.atoms))
    ele, vdw = direct_pairwise(protein, ligand)
    ele2, vdw2 = direct_pairwise(protein, flipped)
    assert ele2 == pytest.approx(-ele, rel=1e-14) and vdw2 == vdw


def test_coincident_atoms_raise():
    a = mol(("A", (1.0, 1.0, 1.0), 1.0, 0.1, 1.0))
    with pytest.raises(SingularityError, match="coincides"):
        direct_pairwise(a, a)


@pytest.mark.parametrize("value, reference, expected", [(1.1, 1.0, 0.1), (0.0, 1e-13, None), (-2.0, -1.0, 1.0)])
def test_relative_error(value, reference, expected):
    got = relative_error(value, reference)
    assert got == (None if expected is None else pytest.approx(expected))


def test_grid_inner_product_is_blockwise_dot():
    rng = np.random.default_rng(2)
    *_, maps, lig = random_system(rng, n_types=2, n_ligand=3)
    ele, vdw = grid_inner_product(maps, lig)
    assert ele == pytest.approx(float(maps.phi @ lig.q_grid), rel=1e-13)
    for e, n, v in zip(maps.evdw, lig.occupancy, vdw):
        assert v == pytest.approx(float(e @ n), rel=1e-13, abs=1e-15)


def test_grid_inner_product_needs_matching_grids():
    rng = np.random.default_rng(3)
    *_, maps, lig = random_system(rng)
    *_, other_maps, _ = random_system(rng, dims=(2, 2, 2))
    with pytest.raises(GridError):
        grid_inner_product(other_maps, lig)


def test_oracle_report_fields():
    rng = np.random.default_rng(4)
    protein, ligand, _, _, maps, lig = random_system(rng)
    rep = oracle_report(protein, ligand, maps, lig)
    assert rep.delta_abs == pytest.approx(abs(grid_total(maps, lig) - rep.E_ele_direct - rep.E_vdw_direct))
    assert set(rep.E_vdw_grid_by_type) == set(maps.type_names)
    assert '"delta_abs"' in rep.to_json()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from("xyz"), st.integers(0, 3))
def test_rotating_atoms_matches_relabeling_the_deposit(seed, axis, turns):
    rng = np.random.default_rng(seed)
    _, ligand, registry, grid = centred_system(rng, dims=(4, 4, 4))
    before = deposit_ligand(ligand, registry, grid)
    after = deposit_ligand(rotate_about_grid_centre(ligand, grid, axis, turns), registry, grid)
    np.testing.assert_allclose(rotated_vector(before.stack(), grid, axis, turns), after.stack(), atol=1e-12)


@pytest.mark.parametrize("shift", [{"x": 1}, {"y": -1}, {"x": 1, "z": 1}])
def test_shifting_atoms_matches_relabeling_the_deposit(shift):
    rng = np.random.default_rng(5)
    _, ligand, registry, grid = centred_system(rng)
    before = deposit_ligand(ligand, registry, grid)
    delta = np.array([shift.get(a, 0) for a in "xyz"], dtype=float) * grid.spacing
    after = deposit_ligand(ligand.translated(delta), registry, grid)
    np.testing.assert_allclose(shifted_vector(before.stack(), grid, shift), after.stack(), atol=1e-12)


def test_convergence_fixture_shrinks_with_spacing():
    rows = convergence_study(CONVERGENCE_PROTEIN, CONVERGENCE_LIGAND, [1.0, 0.5, 0.25], **CONVERGENCE_BOX)
    errors = [r.rel_error for r in rows]
    assert errors[0] > errors[1] > errors[2]
    assert [r.dims for r in rows] == [(8, 8, 8), (16, 16, 16), (32, 32, 32)]
    assert len({r.E_direct for r in rows}) == 1


def test_convergence_rejects_nearby_protein():
    with pytest.raises(GridError, match="from the grid region"):
        convergence_study(CONVERGENCE_PROTEIN, CONVERGENCE_LIGAND, [1.0], origin=(-1, -1, -1), extent=(9, 4, 4))


def test_convergence_table_formats():
    rows = convergence_study(CONVERGENCE_PROTEIN, CONVERGENCE_LIGAND, [1.0, 0.5], **CONVERGENCE_BOX)
    tsv = format_convergence_table(rows, sep="\t").splitlines()
    assert tsv[0].split("\t") == ["spacing", "dims", "E_grid", "E_direct", "rel_error"]
    assert tsv[2].split("\t")[:2] == ["0.5", "16x16x16"]
    aligned = format_convergence_table(rows).splitlines()
    assert len({len(line) for line in aligned}) == 1


def test_deposit_then_dot_equals_direct_at_nodes():
    # atoms on nodes have exact deposits, so grid and direct energies agree up to map clamping
    grid = GridSpec((0.0, 0.0, 0.0), 1.0, (4, 4, 4))
    ligand = mol(("C", (1.0, 2.0, 1.0), 0.3, 0.11, 2.0), ("O", (2.0, 1.0, 2.0), -0.4, 0.15, 1.7))
    protein = mol(("N", (8.0, 8.0, 8.0), -0.5, 0.2, 1.85), ("C", (-5.0, 1.0, 0.0), 0.2, 0.11, 2.0))
    registry = build_type_registry(ligand)
    maps = build_maps(protein, registry, grid, clamp_value=None)
    lig = deposit_ligand(ligand, registry, grid)
    ele, vdw = direct_pairwise(protein, ligand)
    assert grid_total(maps, lig) == pytest.approx(ele + vdw, rel=1e-12)
