"""Random small docking systems shared by the test modules."""

import numpy as np

from qscreen.forcefield import Atom, Molecule, build_type_registry
from qscreen.gridmap import GridSpec, build_maps, deposit_ligand

TYPE_TABLE = (("C", 0.110, 2.00), ("O", 0.152, 1.77), ("N", 0.200, 1.85), ("S", 0.450, 2.00))


def random_molecule(rng, n_atoms, n_types, lo, hi, charge_scale=0.5):
    atoms = []
    for i in range(n_atoms):
        name, eps, rmin = TYPE_TABLE[i % n_types]
        pos = tuple(float(v) for v in rng.uniform(lo, hi, 3))
        atoms.append(Atom(name, pos, float(rng.normal(0.0, charge_scale)), eps, rmin))
    return Molecule(tuple(atoms))


def random_system(rng, dims=(4, 4, 4), n_protein=None, n_ligand=None, n_types=None, coulomb=332.0636):
    """Protein scattered around a grid at the origin, ligand inside the grid."""
    n_protein = int(rng.integers(1, 9)) if n_protein is None else n_protein
    n_ligand = int(rng.integers(1, 5)) if n_ligand is None else n_ligand
    n_types = int(rng.integers(1, 4)) if n_types is None else n_types
    n_types = min(n_types, n_ligand)
    grid = GridSpec((0.0, 0.0, 0.0), 1.0, dims)
    hi = np.array(dims, dtype=float) - 1.0
    ligand = random_molecule(rng, n_ligand, n_types, 0.0, hi)
    protein = random_molecule(rng, n_protein, 4, -3.0, hi + 3.0)
    registry = build_type_registry(ligand)
    maps = build_maps(protein, registry, grid, coulomb=coulomb)
    lig = deposit_ligand(ligand, registry, grid)
    return protein, ligand, registry, grid, maps, lig


def centred_system(rng, dims=(8, 8, 8), n_protein=6, n_ligand=3, n_types=2, conf_jitter=0.0):
    """Ligand near the grid centre so there is room to shift and rotate."""
    grid = GridSpec((0.0, 0.0, 0.0), 1.0, dims)
    centre = (np.array(dims, dtype=float) - 1.0) / 2.0
    ligand = random_molecule(rng, n_ligand, n_types, centre - 0.9, centre + 0.9)
    protein = random_molecule(rng, n_protein, 4, -3.0, np.array(dims) + 2.0)
    registry = build_type_registry(ligand)
    return protein, ligand, registry, grid


def _fixture_molecule(rows):
    return Molecule(tuple(Atom(t, p, q, eps, rmin) for t, p, q, eps, rmin in rows))


# Ligand atoms sit at offsets of k/3 A from the box origin so that each atom's
# fractional cell position keeps u(1 - u) = 2/9 when the spacing is halved.
CONVERGENCE_LIGAND = _fixture_molecule([
    ("C", (1 / 3, 1.0, 0.0), 0.4, 0.110, 2.00),
    ("O", (1 + 2 / 3, 1 + 1 / 3, 1.0), -0.5, 0.152, 1.77),
    ("C", (1 / 3, 2.0, 2 / 3), 0.1, 0.110, 2.00),
])
CONVERGENCE_PROTEIN = _fixture_molecule([
    ("N", (9.0, 1.0, 0.5), -0.6, 0.200, 1.85),
    ("O", (0.5, 10.0, 1.0), 0.5, 0.152, 1.77),
    ("C", (1.0, 0.5, -8.5), 0.3, 0.110, 2.00),
    ("S", (-7.5, -6.0, 1.0), -0.2, 0.450, 2.00),
])
CONVERGENCE_BOX = {"origin": (-1.0, -1.0, -1.0), "extent": (4.0, 4.0, 4.0), "min_protein_distance": 6.0}
