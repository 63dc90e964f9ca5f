"""
Molecules, nonbonded force-field parameters and the plain-text molecule format.

Units throughout the package: Angstrom, elementary charge, kcal/mol.

File format (UTF-8, ``#`` starts a comment)::

    # type  x     y     z     charge  epsilon  rmin_half
    C       0.0   0.0   0.0   -0.1    0.086    1.908
    H       1.0   0.0   0.0    0.1    0.030    1.320
    CONFORMATION
    0.0 0.0 0.1
    1.0 0.1 0.0

Each ``CONFORMATION`` line opens an alternative coordinate block with one
``x y z`` line per atom, in the same order as the atom block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

#: 1/(4 pi eps0) in kcal mol^-1 Angstrom e^-2 (CHARMM value).
COULOMB_CONSTANT = 332.0636


class MoleculeFormatError(ValueError):
    """Raised for malformed molecule text; carries the offending line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class RegistryError(ValueError):
    pass


def coulomb_prefactor(reduced_units: bool = False) -> float:
    return 1.0 if reduced_units else COULOMB_CONSTANT


@dataclass(frozen=True)
class Atom:
    type_name: str
    position: tuple[float, float, float]
    charge: float
    epsilon: float
    rmin_half: float

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(np.isfinite(pos)):
            raise ValueError(f"atom {self.type_name}: position must be 3 finite numbers")
        object.__setattr__(self, "position", pos)
        if self.epsilon < 0:
            raise ValueError(f"atom {self.type_name}: epsilon must be >= 0, got {self.epsilon}")
        if self.rmin_half <= 0:
            raise ValueError(f"atom {self.type_name}: rmin_half must be > 0, got {self.rmin_half}")


@dataclass(frozen=True)
class Molecule:
    """Ordered atoms plus optional alternative coordinate sets.

    Conformation 0 is the atom block itself; ``conformations`` holds the
    additional ones, each an ``(n_atoms, 3)`` array.
    """

    atoms: tuple[Atom, ...]
    conformations: tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        confs = []
        for i, c in enumerate(self.conformations):
            c = np.array(c, dtype=float)
            if c.shape != (len(self.atoms), 3):
                raise ValueError(
                    f"conformation atom-count mismatch: conformation {i + 1} has "
                    f"{c.shape[0] if c.ndim else 0} atoms, expected {len(self.atoms)}"
                )
            c.setflags(write=False)
            confs.append(c)
        object.__setattr__(self, "conformations", tuple(confs))

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def positions(self) -> np.ndarray:
        return np.array([a.position for a in self.atoms], dtype=float).reshape(-1, 3)

    @property
    def charges(self) -> np.ndarray:
        return np.array([a.charge for a in self.atoms], dtype=float)

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([a.epsilon for a in self.atoms], dtype=float)

    @property
    def rmin_halves(self) -> np.ndarray:
        return np.array([a.rmin_half for a in self.atoms], dtype=float)

    @property
    def type_names(self) -> tuple[str, ...]:
        return tuple(a.type_name for a in self.atoms)

    @property
    def n_conformations(self) -> int:
        return 1 + len(self.conformations)

    def conformation(self, index: int) -> "Molecule":
        """Return conformation ``index`` as a single-conformation molecule."""
        if index == 0:
            return Molecule(self.atoms)
        if not 0 < index < self.n_conformations:
            raise IndexError(f"conformation {index} out of range (have {self.n_conformations})")
        return self.with_positions(self.conformations[index - 1])

    def with_positions(self, positions) -> "Molecule":
        positions = np.asarray(positions, dtype=float)
        if positions.shape != (len(self.atoms), 3):
            raise ValueError("positions must have shape (n_atoms, 3)")
        atoms = tuple(
            Atom(a.type_name, tuple(p), a.charge, a.epsilon, a.rmin_half)
            for a, p in zip(self.atoms, positions)
        )
        return Molecule(atoms)

    def translated(self, delta) -> "Molecule":
        return self.with_positions(self.positions + np.asarray(delta, dtype=float))

    def merged(self, other: "Molecule") -> "Molecule":
        return Molecule(self.atoms + other.atoms)


@dataclass(frozen=True)
class AtomType:
    name: str
    epsilon: float
    rmin_half: float


@dataclass(frozen=True)
class AtomTypeRegistry:
    """Distinct ligand atom types, indexed by order of first appearance."""

    types: tuple[AtomType, ...]

    def __len__(self) -> int:
        return len(self.types)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.types)

    def index(self, type_name: str) -> int:
        for i, t in enumerate(self.types):
            if t.name == type_name:
                return i
        raise KeyError(type_name)

    def indices_for(self, molecule: Molecule) -> np.ndarray:
        lookup = {t.name: i for i, t in enumerate(self.types)}
        try:
            return np.array([lookup[a.type_name] for a in molecule.atoms], dtype=int)
        except KeyError as exc:
            raise RegistryError(f"atom type {exc.args[0]!r} not in registry") from None


def build_type_registry(ligand: Molecule) -> AtomTypeRegistry:
    if len(ligand) == 0:
        raise RegistryError("no atoms")
    seen: dict[str, AtomType] = {}
    for atom in ligand.atoms:
        known = seen.get(atom.type_name)
        if known is None:
            seen[atom.type_name] = AtomType(atom.type_name, atom.epsilon, atom.rmin_half)
        elif (known.epsilon, known.rmin_half) != (atom.epsilon, atom.rmin_half):
            raise RegistryError(
                f"inconsistent parameters for type {atom.type_name!r}: "
                f"({known.epsilon}, {known.rmin_half}) vs ({atom.epsilon}, {atom.rmin_half})"
            )
    return AtomTypeRegistry(tuple(seen.values()))


def _floats(fields, lineno):
    try:
        return [float(f) for f in fields]
    except ValueError:
        raise MoleculeFormatError(f"non-numeric field in {' '.join(fields)!r}", lineno) from None


def parse_molecule(text: str) -> Molecule:
    atoms: list[Atom] = []
    conformations: list[list[list[float]]] = []
    conf_lines: list[int] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0].upper() == "CONFORMATION" and len(fields) == 1:
            if not atoms:
                raise MoleculeFormatError("CONFORMATION before any atoms", lineno)
            conformations.append([])
            conf_lines.append(lineno)
            continue
        if conformations:
            if len(fields) != 3:
                raise MoleculeFormatError(f"expected 'x y z', got {len(fields)} fields", lineno)
            conformations[-1].append(_floats(fields, lineno))
            continue
        if len(fields) != 7:
            raise MoleculeFormatError(
                f"expected 'type x y z charge epsilon rmin_half', got {len(fields)} fields", lineno
            )
        x, y, z, charge, eps, rmin = _floats(fields[1:], lineno)
        if eps < 0:
            raise MoleculeFormatError(f"epsilon must be >= 0, got {eps}", lineno)
        if rmin <= 0:
            raise MoleculeFormatError(f"rmin_half must be > 0, got {rmin}", lineno)
        try:
            atoms.append(Atom(fields[0], (x, y, z), charge, eps, rmin))
        except ValueError as exc:
            raise MoleculeFormatError(str(exc), lineno) from None

    if not atoms:
        raise MoleculeFormatError("no atoms")
    for block, lineno in zip(conformations, conf_lines):
        if len(block) != len(atoms):
            raise MoleculeFormatError(
                f"conformation atom-count mismatch: block has {len(block)} atoms, "
                f"expected {len(atoms)}",
                lineno,
            )
    return Molecule(tuple(atoms), tuple(np.array(b) for b in conformations))


def format_molecule(molecule: Molecule, precision: int | None = 6) -> str:
    """Inverse of :func:`parse_molecule` at ``precision`` decimals; ``None`` is exact."""
    fmt = f"{{:.{precision}f}}" if precision is not None else "{!r}"

    def num(v) -> str:
        return fmt.format(float(v))

    lines = []
    for a in molecule.atoms:
        nums = (*a.position, a.charge, a.epsilon, a.rmin_half)
        lines.append(" ".join([a.type_name, *(num(v) for v in nums)]))
    for conf in molecule.conformations:
        lines.append("CONFORMATION")
        for p in conf:
            lines.append(" ".join(num(v) for v in p))
    return "\n".join(lines) + "\n"


def read_molecule(path) -> Molecule:
    return parse_molecule(Path(path).read_text(encoding="utf-8"))
