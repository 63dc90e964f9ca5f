import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _systems import random_system
from qscreen.encoding import (
    EncodingError,
    SignAmbiguityWarning,
    assemble_conformations,
    assemble_o_grid,
    auto_offset,
    decode_energy,
    grid_qubits_for,
    normalize_row,
    pose_invariant_offset,
    read_problem,
    type_qubits_for,
    write_problem,
)
from qscreen.gridmap import LigandGridVector, PotentialMaps, build_maps, deposit_ligand
from qscreen.oracle import grid_total


@pytest.mark.parametrize("n_types, nt", [(0, 1), (1, 1), (2, 2), (3, 2), (4, 3), (7, 3), (8, 4)])
def test_type_register_size(n_types, nt):
    assert type_qubits_for(n_types) == nt


@pytest.mark.parametrize("n_slots, ng", [(2, 1), (8, 3), (9, 4), (64, 6), (65, 7)])
def test_grid_register_size(n_slots, ng):
    assert grid_qubits_for(n_slots) == ng


def test_normalize_row_rejects_zero():
    with pytest.raises(EncodingError, match="degenerate map"):
        normalize_row(np.zeros(4))


def _classical_readout(problem, maps):
    """Amplitude at index 0 after the potential stage and the Hadamards, by direct sums."""
    rows = problem.block_rows(maps)
    dots = [0.0 if r is None else float(r @ problem.block(b)) / problem.L_type for b, r in enumerate(rows)]
    return sum(dots) / 2.0 ** (problem.nt / 2)


@pytest.mark.parametrize("offset", [0.0, "auto", 12.5])
@pytest.mark.parametrize("seed", range(5))
def test_decode_recovers_grid_energy(offset, seed):
    rng = np.random.default_rng(100 + seed)
    *_, maps, lig = random_system(rng)
    problem = assemble_o_grid(maps, lig, offset)
    energy = decode_energy(_classical_readout(problem, maps), problem)
    truth = grid_total(maps, lig)
    assert energy == pytest.approx(truth, rel=1e-12, abs=1e-12)


def test_block_layout_and_norms():
    rng = np.random.default_rng(1)
    *_, maps, lig = random_system(rng, n_types=2, n_ligand=3)
    p = assemble_o_grid(maps, lig, 0.0)
    assert (p.nt, p.ng) == (2, 6)
    assert p.offset_slot is None
    np.testing.assert_allclose(p.block(0)[:64], p.phi_norm * lig.q_grid)
    for t in range(2):
        np.testing.assert_allclose(p.block(t + 1)[:64], p.evdw_norms[t] * lig.occupancy[t])
    np.testing.assert_array_equal(p.block(3), 0.0)
    assert p.L_type == pytest.approx(np.linalg.norm(p.o_grid))
    assert np.linalg.norm(p.state) == pytest.approx(1.0)


def test_offset_slot_and_auto_value():
    rng = np.random.default_rng(2)
    *_, maps, lig = random_system(rng)
    c = auto_offset(maps, lig)
    bound = sum(np.abs(m * v).sum() for m, v in zip(maps.blocks(), lig.blocks()))
    assert c == pytest.approx(1.1 * bound)
    p = assemble_o_grid(maps, lig, "auto")
    assert p.ng == 7 and p.offset_slot == 64
    assert p.block(0)[64] == pytest.approx(p.phi_norm)
    # norms include the offset entry
    assert p.phi_norm == pytest.approx(np.sqrt(np.sum(maps.phi**2) + c * c))
    assert grid_total(maps, lig) + c >= 0


def test_pose_invariant_offset_bounds_every_permutation():
    rng = np.random.default_rng(4)
    *_, maps, lig = random_system(rng, n_ligand=4)
    c = pose_invariant_offset([maps], [lig])
    for _ in range(50):
        perm = rng.permutation(maps.grid.n_grid)
        moved = LigandGridVector(lig.grid, lig.q_grid[perm], lig.occupancy[:, perm], lig.type_names)
        assert grid_total(maps, moved) + c > 0


def test_explicit_registers_are_checked():
    rng = np.random.default_rng(5)
    *_, maps, lig = random_system(rng, n_types=3, n_ligand=3)
    with pytest.raises(EncodingError, match="nt=1 too small"):
        assemble_o_grid(maps, lig, 0.0, nt=1)
    with pytest.raises(EncodingError, match="ng=6 too small"):
        assemble_o_grid(maps, lig, 1.0, ng=6)
    wide = assemble_o_grid(maps, lig, 0.0, nt=3, ng=7)
    assert wide.o_grid.size == 2**10


def test_negative_offset_rejected():
    rng = np.random.default_rng(6)
    *_, maps, lig = random_system(rng)
    with pytest.raises(EncodingError, match="offset_c must be >= 0"):
        assemble_o_grid(maps, lig, -1.0)


def test_degenerate_inputs():
    rng = np.random.default_rng(7)
    *_, maps, lig = random_system(rng)
    empty = LigandGridVector(lig.grid, np.zeros_like(lig.q_grid), np.zeros_like(lig.occupancy), lig.type_names)
    with pytest.raises(EncodingError, match="L_type = 0"):
        assemble_o_grid(maps, empty, 0.0)
    # with an offset the empty ligand still encodes and decodes to 0
    p = assemble_o_grid(maps, empty, 3.0)
    assert decode_energy(_classical_readout(p, maps), p) == pytest.approx(0.0, abs=1e-12)
    flat = PotentialMaps(maps.grid, np.zeros_like(maps.phi), tuple(np.zeros_like(e) for e in maps.evdw), maps.type_names)
    with pytest.raises(EncodingError, match="every potential block is zero"):
        assemble_o_grid(flat, lig, 0.0)


def test_type_mismatch():
    rng = np.random.default_rng(8)
    *_, maps, lig = random_system(rng, n_types=2, n_ligand=2)
    other = LigandGridVector(lig.grid, lig.q_grid, lig.occupancy, ("X", "Y"))
    with pytest.raises(EncodingError, match="type mismatch"):
        assemble_o_grid(maps, other)


def test_probability_decode_warns_without_offset():
    rng = np.random.default_rng(9)
    *_, maps, lig = random_system(rng)
    p = assemble_o_grid(maps, lig, 0.0)
    with pytest.warns(SignAmbiguityWarning):
        decode_energy(0.25, p, "probability")
    q = assemble_o_grid(maps, lig, "auto")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        amp = _classical_readout(q, maps)
        assert decode_energy(amp * amp, q, "probability") == pytest.approx(grid_total(maps, lig), rel=1e-10)


def test_problem_json_round_trip(tmp_path):
    rng = np.random.default_rng(10)
    *_, maps, lig = random_system(rng)
    p = assemble_o_grid(maps, lig, "auto")
    write_problem(p, tmp_path / "p.json")
    q = read_problem(tmp_path / "p.json")
    np.testing.assert_array_equal(q.o_grid, p.o_grid)
    assert (q.nt, q.ng, q.L_type, q.offset_c, q.offset_slot, q.norms) == (p.nt, p.ng, p.L_type, p.offset_c, p.offset_slot, p.norms)


# -- conformations -----------------------------------------------------------

def _conformation_inputs(seed, n_protein, n_ligand):
    rng = np.random.default_rng(seed)
    protein, ligand, registry, grid, maps, lig = random_system(rng, n_types=2, n_ligand=3, n_protein=5)
    maps_list = [maps] + [
        build_maps(protein.translated(rng.normal(0, 0.4, 3)), registry, grid) for _ in range(n_protein - 1)
    ]
    ligs = [lig] + [
        deposit_ligand(ligand.with_positions(np.clip(ligand.positions + rng.normal(0, 0.3, (len(ligand), 3)), 0, 3)), registry, grid)
        for _ in range(n_ligand - 1)
    ]
    return maps_list, ligs


@pytest.mark.parametrize("n_protein, n_ligand", [(2, 2), (3, 2), (2, 3), (1, 1)])
def test_conformation_rows_are_unit_and_decode(n_protein, n_ligand):
    maps_list, ligs = _conformation_inputs(11, n_protein, n_ligand)
    enc = assemble_conformations(maps_list, ligs, "auto")
    assert len(enc.rows) == 2**enc.nrc and enc.o_grids.shape[0] == 2**enc.nlc
    width = 2**enc.ng
    for i, rows in enumerate(enc.rows):
        for b, row in enumerate(rows):
            if row is None:
                continue
            assert np.linalg.norm(row) == pytest.approx(1.0, abs=1e-14)
            for j in range(2**enc.nlc):
                v = enc.o_grids[j, b * width : (b + 1) * width]
                if enc.slack_slot is not None:
                    assert v[enc.slack_slot] == 0.0
    for i in range(n_protein):
        for j in range(n_ligand):
            total = sum(
                float(row @ enc.o_grids[j, b * width : (b + 1) * width])
                for b, row in enumerate(enc.rows[i]) if row is not None
            )
            assert total - enc.offset_c == pytest.approx(grid_total(maps_list[i], ligs[j]), rel=1e-12, abs=1e-12)


def test_padded_protein_rows_point_at_slack():
    maps_list, ligs = _conformation_inputs(12, 3, 1)
    enc = assemble_conformations(maps_list, ligs, 0.0)
    pad = enc.rows[3]
    for row in pad:
        if row is not None:
            expect = np.zeros(2**enc.ng)
            expect[enc.slack_slot] = 1.0
            np.testing.assert_array_equal(row, expect)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_conformation_scale_is_max_norm(seed):
    maps_list, ligs = _conformation_inputs(seed, 2, 2)
    enc = assemble_conformations(maps_list, ligs, 0.0)
    for b in range(1 + len(enc.type_names)):
        assert enc.scales[b] == max(float(np.linalg.norm(m.blocks()[b])) for m in maps_list)
