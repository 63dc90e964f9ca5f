"""
Real-amplitude statevector engine and the end-to-end scoring pipeline.

Every operator in the pipeline (RY, H, X, permutations, reflections) is
real, so states are stored as float64 vectors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .circuits.batch import PoseBatch, build_pose_batch, pose_batch_for_problem
from .encoding import ConformationEncoding, EncodedProblem, SignAmbiguityWarning

MAX_QUBITS = 26
NORM_TOL = 1e-9


class SimulatorError(ValueError):
    pass


@dataclass
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits > MAX_QUBITS:
            raise SimulatorError(f"{self.n_qubits} qubits exceeds the {MAX_QUBITS}-qubit cap")
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise SimulatorError(f"need {2**self.n_qubits} amplitudes, got {self.amplitudes.shape}")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def probabilities(self) -> np.ndarray:
        return self.amplitudes**2


def state_from_vector(v, tol: float = NORM_TOL) -> Statevector:
    v = np.array(v, dtype=float)
    n = v.size.bit_length() - 1
    if v.ndim != 1 or v.size != 2**n:
        raise SimulatorError(f"state length must be a power of two, got {v.size}")
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise SimulatorError(f"state is not normalized (norm {np.linalg.norm(v)!r})")
    return Statevector(n, v)


def apply(op, state: Statevector) -> Statevector:
    """Return ``op . state``; ``op`` is an operator or a gate list."""
    if op.n_qubits != state.n_qubits:
        raise SimulatorError(f"operator on {op.n_qubits} qubits, state has {state.n_qubits}")
    out = Statevector(state.n_qubits, op.apply(state.amplitudes))
    if abs(out.norm - state.norm) > NORM_TOL:
        raise SimulatorError("operator did not preserve the norm")
    return out


def amplitude_at(state: Statevector, basis_index: int) -> float:
    if not 0 <= basis_index < state.amplitudes.size:
        raise IndexError(f"basis index {basis_index} out of range for {state.n_qubits} qubits")
    return float(state.amplitudes[basis_index])


@dataclass
class SamplingResult:
    shots: int
    counts: dict[int, int]
    seed: int | None = None

    def p_hat(self, index: int) -> float:
        return self.counts.get(index, 0) / self.shots

    def stderr(self, index: int) -> float:
        p = self.p_hat(index)
        return math.sqrt(p * (1.0 - p) / self.shots)

    @property
    def p0_hat(self) -> float:
        return self.p_hat(0)

    @property
    def stderr_p0(self) -> float:
        return self.stderr(0)


def sample(state: Statevector, shots: int, seed: int | None = None) -> SamplingResult:
    """Draw ``shots`` computational-basis outcomes with ``numpy.random.default_rng(seed)``."""
    if shots < 1:
        raise SimulatorError("shots must be >= 1")
    p = state.probabilities
    p = p / p.sum()
    counts = np.random.default_rng(seed).multinomial(shots, p)
    nz = np.flatnonzero(counts)
    return SamplingResult(int(shots), {int(i): int(counts[i]) for i in nz}, seed)


@dataclass
class EnergyReport:
    pose: dict
    E_total: float
    E_ele: float
    E_vdw_by_type: dict[str, float]
    mode: str
    offset_c: float
    norm_name: str
    norm_value: float
    shots: int | None = None
    stderr: float | None = None
    seed: int | None = None
    padded: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "pose": self.pose,
            "E_total": self.E_total,
            "E_ele": self.E_ele,
            "E_vdw_by_type": self.E_vdw_by_type,
            "mode": self.mode,
            "offset_c": self.offset_c,
            self.norm_name: self.norm_value,
        }
        if self.mode == "sampled":
            d.update(shots=self.shots, stderr=self.stderr, seed=self.seed)
        if self.padded:
            d["padded"] = True
        d.update(self.extra)
        return d


def run_batch(batch: PoseBatch, mode: str = "amplitude", shots: int | None = None, seed: int | None = None):
    """Score every pose of ``batch``; returns one :class:`EnergyReport` per pose.

    The electrostatic / per-type split always uses the amplitude path: each
    component is rerun with the other blocks of the input zeroed.
    """
    if mode not in ("amplitude", "sampled"):
        raise SimulatorError(f"unknown mode {mode!r}")
    final, scale = batch.final_state()
    state = Statevector(batch.layout.n_qubits, final)
    idx = batch.readout_indices()
    c = batch.offset_c
    offsets = batch.offsets()
    if mode == "amplitude":
        totals = state.amplitudes[idx] * scale - offsets
        errors = [None] * len(idx)
        result = None
    else:
        if shots is None:
            raise SimulatorError("sampled mode needs shots")
        if c == 0:
            warnings.warn(
                "sign-ambiguous decode: sampled readout with offset_c = 0",
                SignAmbiguityWarning,
                stacklevel=2,
            )
        result = sample(state, shots, seed)
        p = np.array([result.p_hat(int(i)) for i in idx])
        totals = np.sqrt(p) * scale - offsets
        errors = [
            (scale * result.stderr(int(i)) / (2.0 * math.sqrt(pi))) if pi > 0 else None
            for i, pi in zip(idx, p)
        ]

    ele, vdw = batch.split_energies()
    enc = batch.encoding
    single = enc.nrc == 0 and enc.nlc == 0
    reports = []
    for n, pose in enumerate(batch.poses):
        reports.append(
            EnergyReport(
                pose=pose.to_dict(),
                E_total=float(totals[n]),
                E_ele=float(ele[n]),
                E_vdw_by_type={t: float(v[n]) for t, v in zip(enc.type_names, vdw)},
                mode=mode,
                offset_c=c,
                norm_name="L_type" if single else "L_con",
                norm_value=enc.L_con,
                shots=shots if mode == "sampled" else None,
                stderr=None if errors[n] is None else float(errors[n]),
                seed=seed if mode == "sampled" else None,
                padded=pose.padded,
            )
        )
    return reports


def run_pipeline(
    problem,
    maps,
    mode: str = "amplitude",
    shots: int | None = None,
    seed: int | None = None,
    batch: dict | None = None,
    backend: str = "householder",
) -> list[EnergyReport]:
    """Encode, batch, apply the potential and summation stages, and decode.

    ``problem`` is an :class:`EncodedProblem` (with its ``maps``) or a
    :class:`ConformationEncoding` (with any one of its protein maps, used for
    the grid). ``batch`` may carry ``shifts`` and ``turns`` dicts keyed by axis.
    """
    batch = batch or {}
    if isinstance(problem, EncodedProblem):
        pb = pose_batch_for_problem(problem, maps, batch.get("shifts"), batch.get("turns"), backend)
    elif isinstance(problem, ConformationEncoding):
        grid = maps[0].grid if isinstance(maps, (list, tuple)) else maps.grid
        pb = build_pose_batch(problem, grid, batch.get("shifts"), batch.get("turns"), backend)
    else:
        raise TypeError(f"unsupported problem type {type(problem).__name__}")
    return run_batch(pb, mode, shots, seed)
