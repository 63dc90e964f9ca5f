"""
Command-line interface.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
Every JSON report embeds the effective configuration; nothing time- or
host-dependent is written, so identical config and seed give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circuits import (
    LayoutError,
    UnitaryError,
    build_pose_batch,
    make_first_row_unitary,
    permutation_matrix,
    pose_batch_for_problem,
    rotation_permutation,
    shift_permutation,
)
from .circuits.permutations import check_rotatable
from .circuits.reference import reference_checks
from .config import ConfigError, RunConfig
from .encoding import (
    EncodingError,
    assemble_conformations,
    assemble_o_grid,
    auto_offset,
    pose_invariant_offset,
)
from .forcefield import Atom, Molecule, MoleculeFormatError, RegistryError, build_type_registry, read_molecule
from .gridmap import GridError, GridSpec, build_maps, deposit_ligand, format_maps, read_maps, write_maps
from .oracle import convergence_study, format_convergence_table, grid_inner_product, oracle_report, reference_maps
from .simulator import SimulatorError, run_batch, run_pipeline

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


# -- argument parsing --------------------------------------------------------

def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common")
    g.add_argument("--config", metavar="PATH", help="JSON run configuration")
    g.add_argument("--seed", type=int, help="sampling seed")
    g.add_argument("--mode", choices=("amplitude", "sampled"))
    g.add_argument("--shots", type=int)
    g.add_argument("--offset", metavar="auto|NUM", help="offset constant added before readout")
    g.add_argument("--reduced-units", action="store_true", help="Coulomb prefactor 1")
    g.add_argument("--out", metavar="PATH")
    i = p.add_argument_group("inputs")
    i.add_argument("--protein", metavar="PATH")
    i.add_argument("--ligand", metavar="PATH")
    i.add_argument("--maps", metavar="PATH", help="precomputed map file")
    i.add_argument("--origin", type=float, nargs=3, metavar=("X", "Y", "Z"))
    i.add_argument("--spacing", type=float)
    i.add_argument("--dims", type=int, nargs=3, metavar=("NX", "NY", "NZ"))
    i.add_argument("--nt", type=int, help="type-register qubits (default: auto)")
    i.add_argument("--ng", type=int, help="grid-register qubits (default: auto)")
    i.add_argument("--backend", choices=("householder", "ry_tree"))
    i.add_argument("--dielectric", choices=("vacuum", "distance"))
    i.add_argument("--slope", type=float, help="distance-dependent dielectric slope")
    i.add_argument("--clamp", metavar="NUM|none")
    return p


def _add_batch_args(p: argparse.ArgumentParser) -> None:
    for a in "xyz":
        p.add_argument(f"--shift-{a}", type=int, nargs="+", metavar="G", help=f"node shifts along {a}")
    for a in "xyz":
        p.add_argument(f"--turn-{a}", type=int, nargs="+", metavar="K", help=f"quarter turns about {a}")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="qscreen", description="Grid-based docking scores on a simulated quantum circuit.")
    parser.add_argument("--version", action="version", version=f"qscreen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("gridmap", parents=[common], help="build and write potential maps")

    p = sub.add_parser("score", parents=[common], help="score one pose")
    p.add_argument("--verify", action="store_true", help="embed classical reference values")

    p = sub.add_parser("batch", parents=[common], help="score conformations and pose sweeps in one run")
    _add_batch_args(p)
    p.add_argument("--plot", metavar="PNG", help="bar chart of ranked energies")

    sub.add_parser("verify", parents=[common], help="run the invariant checks")

    p = sub.add_parser("circuit-export", parents=[common], help="write the gate list (ry_tree backend)")
    _add_batch_args(p)

    p = sub.add_parser("convergence", parents=[common], help="grid error against spacing")
    p.add_argument("--spacings", type=float, nargs="+", default=[1.0, 0.5, 0.25])
    p.add_argument("--pad", type=float, default=1.0, help="box margin around the ligand (A)")
    p.add_argument("--plot", metavar="PNG", help="log-log error plot")
    return parser


def load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    grid = {}
    if args.origin is not None:
        grid["origin"] = list(args.origin)
    if args.spacing is not None:
        grid["spacing"] = args.spacing
    if args.dims is not None:
        grid["dims"] = list(args.dims)
    registers = {k: getattr(args, k) for k in ("nt", "ng") if getattr(args, k) is not None}
    batch = {}
    shifts = {a: getattr(args, f"shift_{a}") for a in "xyz" if getattr(args, f"shift_{a}", None)}
    turns = {a: getattr(args, f"turn_{a}") for a in "xyz" if getattr(args, f"turn_{a}", None)}
    if shifts:
        batch["shifts"] = shifts
    if turns:
        batch["turns"] = turns
    offset = args.offset
    if offset is not None and offset != "auto":
        try:
            offset = float(offset)
        except ValueError:
            raise ConfigError(f"--offset must be auto or a number, got {offset!r}") from None
    return cfg.with_overrides(
        protein=args.protein,
        ligand=args.ligand,
        maps=args.maps,
        out=args.out,
        grid=grid or None,
        registers=registers or None,
        mode=args.mode,
        shots=args.shots,
        seed=args.seed,
        offset=offset,
        batch=batch or None,
        dielectric=args.dielectric,
        slope=args.slope,
        units="reduced" if args.reduced_units else None,
        clamp=args.clamp,
        backend=args.backend,
    )


# -- shared plumbing ---------------------------------------------------------

def _require(cfg: RunConfig, *keys: str) -> None:
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise UsageError("missing " + ", ".join(f"--{k}" for k in missing))


class Inputs:
    """Molecules, registry, grid and maps for one configuration.

    Register sizes are checked before any map is built.
    """

    def __init__(self, cfg: RunConfig, use_map_file: bool = True):
        _require(cfg, "protein", "ligand")
        self.cfg = cfg
        self.protein = read_molecule(cfg.protein)
        self.ligand = read_molecule(cfg.ligand)
        self.registry = build_type_registry(self.ligand)
        cached = None
        if use_map_file and cfg.maps is not None:
            if self.protein.n_conformations > 1:
                raise UsageError("--maps holds one protein conformation; omit it to build maps per conformation")
            cached = read_maps(cfg.maps)
            if tuple(cached.type_names) != tuple(self.registry.names):
                raise UsageError(f"map file types {cached.type_names} do not match ligand types {self.registry.names}")
        self.grid = cached.grid if cached is not None else cfg.grid_spec()
        cfg.check_registers(len(self.registry), self.grid.n_grid, cfg.offset != 0)
        if cached is not None:
            self.maps_list = [cached]
        else:
            self.maps_list = [self._build(self.protein.conformation(i)) for i in range(self.protein.n_conformations)]
        self.deposits = [
            deposit_ligand(self.ligand.conformation(j), self.registry, self.grid)
            for j in range(self.ligand.n_conformations)
        ]

    def _build(self, protein: Molecule):
        c = self.cfg
        return build_maps(protein, self.registry, self.grid, c.dielectric, c.slope, c.coulomb, c.clamp)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _write_or_print(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _norm_lines(maps) -> str:
    lines = [f"phi\t{float(np.linalg.norm(maps.phi))!r}"]
    lines += [f"evdw {t}\t{float(np.linalg.norm(e))!r}" for t, e in zip(maps.type_names, maps.evdw)]
    return "\n".join(lines) + "\n"


# -- commands ----------------------------------------------------------------

def cmd_gridmap(cfg: RunConfig, args) -> int:
    inputs = Inputs(cfg, use_map_file=False)
    maps = inputs.maps_list[0]
    if cfg.out is None:
        sys.stdout.write(format_maps(maps))
        sys.stderr.write(_norm_lines(maps))
    else:
        write_maps(maps, cfg.out)
        sys.stdout.write(_norm_lines(maps))
    return EXIT_OK


def _score(cfg: RunConfig, inputs: Inputs):
    maps, lig = inputs.maps_list[0], inputs.deposits[0]
    problem = assemble_o_grid(maps, lig, cfg.offset, cfg.nt, cfg.ng)
    report = run_pipeline(problem, maps, cfg.mode, cfg.shots, cfg.seed, backend=cfg.backend)[0]
    return problem, maps, lig, report


def cmd_score(cfg: RunConfig, args) -> int:
    inputs = Inputs(cfg)
    problem, maps, lig, report = _score(cfg, inputs)
    out = {"config": cfg.to_dict(), "report": report.to_dict()}
    out["report"]["phi_norm"] = problem.phi_norm
    out["report"]["evdw_norms"] = dict(zip(problem.type_names, problem.evdw_norms))
    if args.verify:
        orc = oracle_report(inputs.protein.conformation(0), inputs.ligand.conformation(0), maps, lig)
        ele, vdw = grid_inner_product(maps, lig)
        devs = [abs(report.E_total - (ele + sum(vdw))), abs(report.E_ele - ele)]
        devs += [abs(report.E_vdw_by_type[t] - v) for t, v in zip(maps.type_names, vdw)]
        out["oracle"] = orc.to_dict()
        out["max_deviation"] = max(devs)
    _write_or_print(_dump(out), cfg.out)
    return EXIT_OK


def _is_degenerate(shifts: dict, turns: dict) -> bool:
    return not any(v for vals in shifts.values() for v in vals) and not any(v % 4 for vals in turns.values() for v in vals)


def _pose_batch(cfg: RunConfig, inputs: Inputs):
    shifts, turns = cfg.shifts(), cfg.turns()
    maps_list, deposits = inputs.maps_list, inputs.deposits
    offset = cfg.offset
    if len(maps_list) == 1 and len(deposits) == 1:
        if offset == "auto":
            # a moved pose may exceed the single-pose bound
            if _is_degenerate(shifts, turns):
                offset = auto_offset(maps_list[0], deposits[0])
            else:
                offset = pose_invariant_offset(maps_list, deposits)
        problem = assemble_o_grid(maps_list[0], deposits[0], offset, cfg.nt, cfg.ng)
        return pose_batch_for_problem(problem, maps_list[0], shifts, turns, cfg.backend)
    enc = assemble_conformations(maps_list, deposits, offset, cfg.nt, cfg.ng)
    return build_pose_batch(enc, inputs.grid, shifts, turns, cfg.backend)


def ranked(reports) -> list[dict]:
    """Real poses ascending by ``E_total`` (ties keep pose order), padded poses after, unranked."""
    real = sorted((r for r in reports if not r.padded), key=lambda r: r.E_total)
    rows = []
    for n, r in enumerate(real, 1):
        rows.append({"rank": n, **r.to_dict()})
    rows += [{"rank": None, **r.to_dict()} for r in reports if r.padded]
    return rows


def batch_table(rows, type_names) -> str:
    pose_keys = ("conf_p", "conf_l", "tx", "ty", "tz", "rx", "ry", "rz")
    header = ["rank", *pose_keys, "E_total", "E_ele", *(f"E_vdw_{t}" for t in type_names), "stderr", "padded"]
    lines = ["\t".join(header)]
    for r in rows:
        cells = ["" if r["rank"] is None else str(r["rank"])]
        cells += [str(r["pose"][k]) for k in pose_keys]
        cells += [repr(r["E_total"]), repr(r["E_ele"])]
        cells += [repr(r["E_vdw_by_type"][t]) for t in type_names]
        cells += ["" if r.get("stderr") is None else repr(r["stderr"]), "1" if r.get("padded") else "0"]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def cmd_batch(cfg: RunConfig, args) -> int:
    inputs = Inputs(cfg)
    pb = _pose_batch(cfg, inputs)
    reports = run_batch(pb, cfg.mode, cfg.shots, cfg.seed)
    rows = ranked(reports)
    table = batch_table(rows, pb.encoding.type_names)
    padding = {a: {"requested": pb.n_real[a], "padded_to": len(pb.shifts[a[1]] if a[0] == "t" else pb.turns[a[1]])} for a in sorted(pb.n_real)}
    padding["conf_p"] = {"requested": pb.encoding.n_protein, "padded_to": 2**pb.encoding.nrc}
    padding["conf_l"] = {"requested": pb.encoding.n_ligand, "padded_to": 2**pb.encoding.nlc}
    out = {
        "config": cfg.to_dict(),
        "n_qubits": pb.layout.n_qubits,
        "registers": pb.layout.describe(),
        "padding": padding,
        "poses": rows,
    }
    if cfg.out is None:
        sys.stdout.write(table)
    else:
        Path(cfg.out).write_text(_dump(out))
        Path(cfg.out).with_suffix(".tsv").write_text(table)
    if args.plot:
        from .plotting import plot_ranking

        plot_ranking(rows, args.plot)
    return EXIT_OK


# -- verify --------------------------------------------------------------------

def _demo_system(seed: int):
    """Deterministic small system used when no inputs are configured."""
    rng = np.random.default_rng(seed)
    grid = GridSpec((0.0, 0.0, 0.0), 1.0, (4, 4, 4))
    types = (("C", 0.11, 2.0), ("O", 0.15, 1.7))
    protein = Molecule(tuple(
        Atom(types[i % 2][0], tuple(rng.uniform(-2.5, 5.5, 3) + np.array([0.0, 0.0, 6.0])),
             float(rng.normal(0, 0.5)), types[i % 2][1], types[i % 2][2])
        for i in range(6)
    ))
    ligand = Molecule(tuple(
        Atom(types[j % 2][0], tuple(rng.uniform(0.2, 2.8, 3)), float(rng.normal(0, 0.4)), types[j % 2][1], types[j % 2][2])
        for j in range(3)
    ))
    return protein, ligand, grid


def _check(name: str, ok: bool, detail: str) -> dict:
    return {"check": name, "pass": bool(ok), "detail": detail}


def _unit_check(maps, lig, offset) -> dict:
    problem = assemble_o_grid(maps, lig, offset)
    worst = 0.0
    for row in problem.block_rows(maps):
        if row is None or problem.ng > 10:
            continue
        for backend in ("householder", "ry_tree"):
            u = make_first_row_unitary(row, backend)
            m = u.matrix()
            worst = max(worst, float(np.max(np.abs(m.T @ m - np.eye(m.shape[0])))))
            worst = max(worst, float(np.max(np.abs(m[0] * u.global_sign - row))))
    return _check("unitarity", worst < 1e-10, f"max deviation {worst:.3e}")


def _reference_check() -> list[dict]:
    out = []
    for name, ok, diff in reference_checks():
        out.append(_check(f"reference {name}", ok, "matrix identical" if ok else f"{diff} entries differ"))
    return out


def _oracle_check(cfg, protein, ligand, maps, lig) -> list[dict]:
    problem = assemble_o_grid(maps, lig, cfg.offset)
    report = run_pipeline(problem, maps, backend=cfg.backend)[0]
    registry = build_type_registry(ligand)
    ref = reference_maps(protein, registry, maps.grid, maps.dielectric, maps.slope, maps.coulomb, maps.clamp_value)
    ele, vdw = grid_inner_product(ref, lig)
    truth = ele + sum(vdw)
    delta = abs(report.E_total - truth)
    ok = delta <= max(1e-9 * abs(truth), 1e-12)
    energy = _check("pipeline vs oracle", ok, f"pipeline {report.E_total!r} oracle {truth!r} delta {delta:.3e}")
    # catches damage at nodes the ligand does not occupy
    got, want = np.vstack(maps.blocks()), np.vstack(ref.blocks())
    map_delta = float(np.max(np.abs(got - want)))
    map_ok = map_delta <= 1e-9 * max(1.0, float(np.max(np.abs(want))))
    return [energy, _check("maps vs oracle", map_ok, f"max entry delta {map_delta:.3e}")]


def _group_check(grid: GridSpec) -> dict:
    if grid.n_qubits > 8:
        grid = GridSpec(grid.origin, grid.spacing, (4, 4, 4))
    eye = np.eye(grid.n_grid, dtype=int)
    failures = []
    for a in "xyz":
        n = grid.dim(a)
        if n == 1:
            continue
        for s1 in range(n):
            for s2 in range(n):
                lhs = permutation_matrix(shift_permutation(grid, a, s1)) @ permutation_matrix(shift_permutation(grid, a, s2))
                rhs = permutation_matrix(shift_permutation(grid, a, (s1 + s2) % n))
                if not np.array_equal(lhs, rhs):
                    failures.append(f"T{a}^{s1}T{a}^{s2}")
        try:
            check_rotatable(grid, a)
        except LayoutError:
            continue
        r = permutation_matrix(rotation_permutation(grid, a, 1))
        if not np.array_equal(np.linalg.matrix_power(r, 4), eye):
            failures.append(f"R{a}^4")
    return _check("group laws", not failures, "exact" if not failures else "failed: " + ", ".join(failures))


def cmd_verify(cfg: RunConfig, args) -> int:
    if cfg.protein is None and cfg.ligand is None:
        protein, ligand, grid = _demo_system(cfg.seed or 0)
        registry = build_type_registry(ligand)
        maps = build_maps(protein, registry, grid, cfg.dielectric, cfg.slope, cfg.coulomb, cfg.clamp)
        lig = deposit_ligand(ligand, registry, grid)
    else:
        inputs = Inputs(cfg)
        if len(inputs.maps_list) > 1:
            raise UsageError("verify checks one protein conformation")
        protein, ligand = inputs.protein.conformation(0), inputs.ligand.conformation(0)
        maps, lig = inputs.maps_list[0], inputs.deposits[0]
    checks = [_unit_check(maps, lig, cfg.offset), *_reference_check(), *_oracle_check(cfg, protein, ligand, maps, lig)]
    checks.append(_group_check(maps.grid))
    for c in checks:
        sys.stdout.write(f"{'PASS' if c['pass'] else 'FAIL'}  {c['check']}: {c['detail']}\n")
    if cfg.out is not None:
        Path(cfg.out).write_text(_dump({"config": cfg.to_dict(), "checks": checks}))
    return EXIT_OK if all(c["pass"] for c in checks) else EXIT_VERIFY


# -- circuit export -----------------------------------------------------------

def cmd_circuit_export(cfg: RunConfig, args) -> int:
    if args.backend == "householder":
        raise UsageError("circuit-export needs the ry_tree backend")
    cfg = cfg.with_overrides(backend="ry_tree")
    inputs = Inputs(cfg)
    pb = _pose_batch(cfg, inputs)
    gl = pb.to_gatelist()
    vec, _ = pb.input_state()
    replay, _ = pb.final_state()
    gl.metadata["replay_max_deviation"] = float(np.max(np.abs(gl.apply(vec) - replay)))
    gl.metadata["config"] = cfg.to_dict()
    _write_or_print(gl.to_json(), cfg.out)
    if cfg.out is not None:
        sys.stdout.write(f"{len(gl.gates)} gates on {gl.n_qubits} qubits ({gl.count('RY')} RY)\n")
    return EXIT_OK


# -- convergence ---------------------------------------------------------------

def cmd_convergence(cfg: RunConfig, args) -> int:
    _require(cfg, "protein", "ligand")
    protein, ligand = read_molecule(cfg.protein).conformation(0), read_molecule(cfg.ligand).conformation(0)
    rows = convergence_study(protein, ligand, args.spacings, pad=args.pad, dielectric=cfg.dielectric,
                             slope=cfg.slope, coulomb=cfg.coulomb)
    sys.stdout.write(format_convergence_table(rows))
    if cfg.out is not None:
        Path(cfg.out).write_text(format_convergence_table(rows, sep="\t"))
    if args.plot:
        from .plotting import plot_convergence

        plot_convergence(rows, args.plot)
    return EXIT_OK


COMMANDS = {
    "gridmap": cmd_gridmap,
    "score": cmd_score,
    "batch": cmd_batch,
    "verify": cmd_verify,
    "circuit-export": cmd_circuit_export,
    "convergence": cmd_convergence,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args)
    except FileNotFoundError as exc:
        print(f"qscreen: error: file not found: {exc.filename}", file=sys.stderr)
    except (
        ConfigError, UsageError, MoleculeFormatError, RegistryError, GridError,
        EncodingError, SimulatorError, LayoutError, UnitaryError,
    ) as exc:
        print(f"qscreen: error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
