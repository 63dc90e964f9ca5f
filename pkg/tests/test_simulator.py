import math
import warnings

import numpy as np
import pytest

from _systems import centred_system, random_system
from qscreen.circuits import make_summation_stage, make_u_grid
from qscreen.encoding import SignAmbiguityWarning, assemble_o_grid, decode_energy
from qscreen.gridmap import build_maps, deposit_ligand
from qscreen.oracle import grid_inner_product, grid_total
from qscreen.simulator import (
    MAX_QUBITS,
    SimulatorError,
    Statevector,
    amplitude_at,
    apply,
    run_pipeline,
    sample,
    state_from_vector,
)


@pytest.mark.parametrize(
    "vector, fragment",
    [([1.0, 0.0, 0.0], "power of two"), ([1.0, 1.0], "not normalized"), ([[1.0, 0.0]], "power of two")],
)
def test_state_from_vector_errors(vector, fragment):
    with pytest.raises(SimulatorError, match=fragment):
        state_from_vector(vector)


def test_qubit_cap():
    with pytest.raises(SimulatorError, match=f"{MAX_QUBITS}-qubit cap"):
        Statevector(MAX_QUBITS + 1, np.zeros(1))


def test_amplitude_at_bounds():
    s = state_from_vector([0.6, 0.8])
    assert amplitude_at(s, 1) == 0.8
    with pytest.raises(IndexError):
        amplitude_at(s, 2)


def test_apply_checks_width():
    s = state_from_vector([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(SimulatorError, match="operator on"):
        apply(make_summation_stage(1, 2), s)


def test_sampling_is_deterministic_per_seed():
    s = state_from_vector(np.full(8, 1 / math.sqrt(8)))
    a, b = sample(s, 1000, seed=5), sample(s, 1000, seed=5)
    assert a.counts == b.counts and sum(a.counts.values()) == 1000
    assert sample(s, 1000, seed=6).counts != a.counts
    with pytest.raises(SimulatorError):
        sample(s, 0)


def test_sampling_matches_multinomial_draw():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    s = state_from_vector(np.sqrt(p))
    counts = np.random.default_rng(11).multinomial(500, p / p.sum())
    assert sample(s, 500, seed=11).counts == {i: int(c) for i, c in enumerate(counts) if c}


def test_stages_then_readout_match_grid_energy():
    rng = np.random.default_rng(0)
    *_, maps, lig = random_system(rng, n_types=2, n_ligand=3)
    p = assemble_o_grid(maps, lig, "auto")
    s = state_from_vector(p.state)
    s = apply(make_u_grid(p, maps), s)
    s = apply(make_summation_stage(p.nt, p.ng), s)
    assert decode_energy(amplitude_at(s, 0), p) == pytest.approx(grid_total(maps, lig), rel=1e-10)


@pytest.mark.parametrize("backend", ["householder", "ry_tree"])
@pytest.mark.parametrize("offset", [0.0, "auto"])
def test_pipeline_amplitude_report(backend, offset):
    rng = np.random.default_rng(1)
    *_, maps, lig = random_system(rng, n_types=2, n_ligand=4)
    p = assemble_o_grid(maps, lig, offset)
    (report,) = run_pipeline(p, maps, backend=backend)
    ele, vdw = grid_inner_product(maps, lig)
    assert report.E_total == pytest.approx(ele + sum(vdw), rel=1e-9, abs=1e-12)
    assert report.E_ele == pytest.approx(ele, rel=1e-9, abs=1e-12)
    for name, v in zip(maps.type_names, vdw):
        assert report.E_vdw_by_type[name] == pytest.approx(v, rel=1e-9, abs=1e-12)
    d = report.to_dict()
    assert d["L_type"] == p.L_type and "shots" not in d


def test_sampled_report_within_noise():
    rng = np.random.default_rng(2)
    *_, maps, lig = random_system(rng)
    p = assemble_o_grid(maps, lig, "auto")
    (r,) = run_pipeline(p, maps, "sampled", shots=200_000, seed=3)
    assert abs(r.E_total - grid_total(maps, lig)) < 4 * r.stderr
    assert r.to_dict()["shots"] == 200_000 and r.to_dict()["seed"] == 3
    (again,) = run_pipeline(p, maps, "sampled", shots=200_000, seed=3)
    assert again.E_total == r.E_total


def test_sampled_warns_without_offset():
    rng = np.random.default_rng(3)
    *_, maps, lig = random_system(rng)
    p = assemble_o_grid(maps, lig, 0.0)
    with pytest.warns(SignAmbiguityWarning):
        run_pipeline(p, maps, "sampled", shots=100, seed=0)
    q = assemble_o_grid(maps, lig, "auto")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        run_pipeline(q, maps, "sampled", shots=100, seed=0)


def test_sampled_stderr_is_none_for_unseen_outcome():
    rng = np.random.default_rng(4)
    *_, maps, lig = random_system(rng)
    p = assemble_o_grid(maps, lig, "auto")
    # a single shot leaves at least three of the four readout outcomes unseen
    reports = run_pipeline(p, maps, "sampled", shots=1, seed=0, batch={"shifts": {"x": [0, 0, 0]}})
    assert any(r.stderr is None for r in reports)


def test_sampled_needs_shots_and_known_mode():
    rng = np.random.default_rng(5)
    *_, maps, lig = random_system(rng)
    p = assemble_o_grid(maps, lig, "auto")
    with pytest.raises(SimulatorError, match="needs shots"):
        run_pipeline(p, maps, "sampled")
    with pytest.raises(SimulatorError, match="unknown mode"):
        run_pipeline(p, maps, "exact")


def test_pipeline_batch_reports_are_marked_padded():
    rng = np.random.default_rng(6)
    protein, ligand, registry, grid = centred_system(rng)
    maps = build_maps(protein, registry, grid)
    lig = deposit_ligand(ligand, registry, grid)
    p = assemble_o_grid(maps, lig, "auto")
    reports = run_pipeline(p, maps, batch={"shifts": {"x": [0, 1, -1]}})
    assert [r.padded for r in reports] == [False, False, False, True]
    assert reports[0].E_total == pytest.approx(grid_total(maps, lig), rel=1e-9)
