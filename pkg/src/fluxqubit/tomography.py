"""Quantum process tomography: 36-entry records and Choi reconstruction.

A process is probed with the six axial Bloch states as inputs and read out
along the six signed axes, 36 (preparation, basis) pairs in the canonical
order (+z, -z, +x, -x, +y, -y) for both factors.  Entry (s, b) records the
probability of the +1 outcome of the signed basis operator b after the
process acted on preparation s.

Reconstruction minimizes the squared residual between the record and the
Born probabilities predicted by a trace-2 Choi matrix, by projected
gradient descent: each gradient step is followed by alternating projections
onto the positive-semidefinite cone (eigenvalue clipping plus trace
rescaling) and the trace-preserving affine subspace.  Steps that would
increase the cost are halved, so the accepted cost sequence is monotone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import ConsistencyError
from .qcore import (
    CHOI_TRACE,
    IDENTITY,
    SIGMA_X,
    SIGMA_Z,
    average_gate_fidelity,
    bloch_rotation,
    choi_from_unitary,
    dagger,
    density_from_bloch,
    partial_trace_output,
    validate_choi,
)

AXIS_LABELS = ("+z", "-z", "+x", "-x", "+y", "-y")

_LABEL_VECTORS = {
    "+z": (0.0, 0.0, 1.0),
    "-z": (0.0, 0.0, -1.0),
    "+x": (1.0, 0.0, 0.0),
    "-x": (-1.0, 0.0, 0.0),
    "+y": (0.0, 1.0, 0.0),
    "-y": (0.0, -1.0, 0.0),
}

PREP_STATES = tuple(density_from_bloch(_LABEL_VECTORS[label]) for label in AXIS_LABELS)
BASIS_PROJECTORS = tuple(
    density_from_bloch(_LABEL_VECTORS[label]) for label in AXIS_LABELS
)  # (I + sign * sigma_axis) / 2 is itself an axial state

# Born-rule coefficient matrices: probability = Re tr(_COEFFS[k] @ C)
_COEFFS = np.stack(
    [
        np.kron(PREP_STATES[s].T, BASIS_PROJECTORS[b])
        for s in range(6)
        for b in range(6)
    ]
)

IDEAL_GATES = {
    "I": IDENTITY,
    "X90": bloch_rotation((1, 0, 0), np.pi / 2),
    "X180": bloch_rotation((1, 0, 0), np.pi),
    "Y-90": bloch_rotation((0, 1, 0), -np.pi / 2),
    "T": np.diag([1.0, np.exp(1j * np.pi / 4)]),
    "S": np.diag([1.0, 1.0j]),
    "H": (SIGMA_X + SIGMA_Z) / np.sqrt(2.0),
}


def entry_index(prep_label: str, basis_label: str) -> int:
    return AXIS_LABELS.index(prep_label) * 6 + AXIS_LABELS.index(basis_label)


def entry_labels(index: int):
    return AXIS_LABELS[index // 6], AXIS_LABELS[index % 6]


@dataclass(frozen=True)
class MeasurementRecord:
    """36 outcome probabilities in canonical order, plus the shot budget."""

    entries: np.ndarray
    shots: Optional[int] = None  # None = exact Born probabilities

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != (36,):
            raise ValueError(f"expected 36 entries, got shape {entries.shape}")
        if np.any(entries < -1e-12) or np.any(entries > 1 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "entries", np.clip(entries, 0.0, 1.0))

    def value(self, prep_label: str, basis_label: str) -> float:
        return float(self.entries[entry_index(prep_label, basis_label)])


@dataclass(frozen=True)
class ReconstructionOptions:
    step_size: float = 0.2
    max_iterations: int = 5000
    tolerance: float = 1e-12
    projection_rounds: int = 50

    def __post_init__(self):
        if min(self.step_size, self.max_iterations, self.tolerance,
               self.projection_rounds) <= 0:
            raise ValueError("all reconstruction options must be positive")


@dataclass
class ReconstructionDiagnostics:
    iterations: int
    converged: bool
    final_cost: float
    cost_history: tuple


def qpt_record(executor, shots: Optional[int], rng: Optional[np.random.Generator] = None,
               gate_name: str = "") -> MeasurementRecord:
    """Collect the 36 entries by calling the executor per (prep, basis) pair.

    The executor maps (prep_label, basis_label, shots, rng) to the estimated
    probability of the +1 outcome along the signed basis axis.
    """
    entries = np.empty(36)
    for index in range(36):
        prep_label, basis_label = entry_labels(index)
        try:
            entries[index] = executor(prep_label, basis_label, shots, rng)
        except Exception as exc:
            name = f" for {gate_name}" if gate_name else ""
            raise type(exc)(
                f"executor failed at entry {index} ({prep_label}, {basis_label}){name}: {exc}"
            ) from exc
    return MeasurementRecord(entries=entries, shots=shots)


def unitary_executor(u: np.ndarray, visibility: float = 1.0):
    """Ideal executor: prepare, conjugate by u, project; optional visibility."""
    u = np.asarray(u, dtype=complex)

    def executor(prep_label, basis_label, shots, rng):
        rho = u @ PREP_STATES[AXIS_LABELS.index(prep_label)] @ dagger(u)
        prob = float(
            np.trace(rho @ BASIS_PROJECTORS[AXIS_LABELS.index(basis_label)]).real
        )
        prob = 0.5 + visibility * (prob - 0.5)
        if shots is None:
            return prob
        return rng.binomial(int(shots), min(max(prob, 0.0), 1.0)) / int(shots)

    return executor


def predict(choi: np.ndarray, prep, basis=None) -> float:
    """Born probability of one record entry under the channel `choi`."""
    if basis is None:
        index = int(prep)
    else:
        index = entry_index(prep, basis) if isinstance(prep, str) else prep * 6 + basis
    return float(np.einsum("ij,ji->", _COEFFS[index], np.asarray(choi)).real)


def predict_all(choi: np.ndarray) -> np.ndarray:
    """All 36 Born probabilities in canonical order."""
    return np.einsum("kij,ji->k", _COEFFS, np.asarray(choi)).real


def project_cptp(c: np.ndarray, rounds: int = 50) -> np.ndarray:
    """Metric projection onto the CPTP set (Dykstra-corrected alternation).

    Alternates the positive-semidefinite cone projection (eigenvalue
    clipping, with Dykstra's correction term so the alternation converges
    to the nearest CPTP point rather than an arbitrary feasible one) and
    the trace-preservation affine projection, which also restores trace 2.
    """
    x = 0.5 * (np.asarray(c, dtype=complex) + dagger(np.asarray(c, dtype=complex)))
    correction = np.zeros_like(x)
    for _ in range(rounds):
        eigenvalues, vectors = np.linalg.eigh(x + correction)
        clipped = np.clip(eigenvalues, 0.0, None)
        y = (vectors * clipped) @ dagger(vectors)
        correction = x + correction - y
        tp_defect = IDENTITY - partial_trace_output(y)
        x = y + np.kron(tp_defect, IDENTITY) / 2.0
        if np.linalg.norm(tp_defect) < 1e-13 and eigenvalues.min() > -1e-13:
            break
    return x


def reconstruct(record: MeasurementRecord, opts: ReconstructionOptions = ReconstructionOptions()):
    """Projected gradient descent onto the CPTP set; returns (choi, diagnostics)."""
    targets = record.entries
    c = np.eye(4, dtype=complex) / 2.0  # maximally mixed channel, trace 2

    def cost_of(m):
        residual = predict_all(m) - targets
        return float(residual @ residual)

    cost = cost_of(c)
    history = [cost]
    converged = False
    iterations = 0
    for iterations in range(1, opts.max_iterations + 1):
        residual = predict_all(c) - targets
        gradient = np.einsum("k,kij->ij", 2.0 * residual, _COEFFS)
        gradient = 0.5 * (gradient + dagger(gradient))
        step = opts.step_size
        improved = False
        for _ in range(60):
            trial = project_cptp(c - step * gradient, opts.projection_rounds)
            trial_cost = cost_of(trial)
            if trial_cost <= cost:
                improved = True
                break
            step *= 0.5
        if not improved:
            converged = True  # no feasible descent: constrained optimum
            break
        change = cost - trial_cost
        c, cost = trial, trial_cost
        history.append(cost)
        if change < opts.tolerance:
            converged = True
            break
    c = validate_choi(c, "reconstructed Choi matrix")
    return c, ReconstructionDiagnostics(
        iterations=iterations, converged=converged,
        final_cost=cost, cost_history=tuple(history),
    )


def linear_lsq_choi(record: MeasurementRecord) -> np.ndarray:
    """Unconstrained least-squares Choi estimate (not CPTP in general)."""
    paulis = (np.eye(2, dtype=complex), SIGMA_X,
              np.array([[0, -1j], [1j, 0]]), SIGMA_Z)
    basis = [np.kron(a, b) / 2.0 for a in paulis for b in paulis]
    design = np.array(
        [[np.trace(coeff @ b).real for b in basis] for coeff in _COEFFS]
    )
    weights, *_ = np.linalg.lstsq(design, record.entries, rcond=None)
    return sum(w * b for w, b in zip(weights, basis))


def report_fidelities(gate_names, chois) -> list:
    """Average gate fidelity per named gate; returns (name, fidelity) rows."""
    rows = []
    for name, choi in zip(gate_names, chois):
        if name not in IDEAL_GATES:
            raise ValueError(f"unknown gate {name!r}; known: {sorted(IDEAL_GATES)}")
        rows.append((name, average_gate_fidelity(choi, IDEAL_GATES[name])))
    return rows


def choi_of_gate(name: str) -> np.ndarray:
    """Choi matrix of the ideal named gate."""
    if name not in IDEAL_GATES:
        raise ValueError(f"unknown gate {name!r}; known: {sorted(IDEAL_GATES)}")
    return choi_from_unitary(IDEAL_GATES[name])
