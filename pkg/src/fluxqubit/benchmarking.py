"""Randomized benchmarking (RB), purity benchmarking (PB), and stability runs.

The protocol, for each sequence length m: draw m group elements at random,
compute the recovery element, decompose everything into primitives, compile
the virtual Z content away, execute the physical pulses on a backend, and
estimate the ground-state return probability P_g.  Averaged over N random
sequences, P_g(m) decays as A p^m + B and the average gate fidelity follows
from p.  PB runs each sequence three times with an extra final analysis
rotation to estimate <sx>, <sy>, <sz> and tracks the purity decay
A' u^(m-1) + B' instead; the incoherent error is (1 - sqrt(u)) / 2.

Backends implement `run(pulses, shots, rng) -> P_g estimate` where pulses
are (rotation amount, axis angle) pairs.  The channel backend applies exact
rotations followed by a configurable noise channel per pulse; the pulse
backend adds fixed-duration T1/T2 decay per pulse.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import ConsistencyError
from .analysis import FitResult, fit_nlls
from .cliffords import (
    CliffordGate,
    PhysicalPulseList,
    PrimitiveSequence,
    compile_virtual_z,
    decompose,
    enumerate_cliffords,
    recovery_gate,
)
from .qcore import bloch_rotation

_GATES = enumerate_cliffords()
_X90_INDEX = 12   # R_x(pi/2): measuring z afterwards yields <sigma_y>
_Y_M90_INDEX = 15  # R_y(-pi/2): measuring z afterwards yields <sigma_x>


@dataclass(frozen=True)
class RBConfig:
    """Lengths, repetitions, shot budget, and seed of a benchmarking run."""

    lengths: tuple
    sequences_per_length: int = 50
    shots: Optional[int] = None   # None = infinite-shot (exact) readout
    seed: int = 0

    def __post_init__(self):
        lengths = tuple(int(m) for m in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if not lengths or any(m < 1 for m in lengths):
            raise ValueError("lengths must be positive integers")
        if any(b <= a for a, b in zip(lengths, lengths[1:])):
            raise ValueError("lengths must be strictly increasing")
        if self.sequences_per_length < 1:
            raise ValueError("sequences_per_length must be at least 1")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be at least 1 or None")


def log_spaced_lengths(start: int, stop: int, count: int) -> tuple:
    """Logarithmically spaced integer lengths with duplicates removed."""
    grid = np.unique(np.round(np.logspace(np.log10(start), np.log10(stop), count)))
    return tuple(int(m) for m in grid)


@dataclass(frozen=True)
class GateNoiseModel:
    """Per-pulse error channel: stochastic and coherent contributions."""

    depolarizing_prob: float = 0.0
    amplitude_damping_prob: float = 0.0
    overrotation: float = 0.0   # rad added to every rotation amount
    axis_error: float = 0.0     # rad added to every axis angle

    def __post_init__(self):
        for name in ("depolarizing_prob", "amplitude_damping_prob"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")

    @property
    def is_depolarizing_only(self) -> bool:
        return (
            self.amplitude_damping_prob == 0.0
            and self.overrotation == 0.0
            and self.axis_error == 0.0
        )


@dataclass
class DecayRecord:
    """Per-length lists of per-sequence values (P_g or purity)."""

    lengths: tuple
    values: list           # one list of floats per length
    timestamps: list       # one list of seconds per length
    kind: str = "rb"

    def means(self) -> np.ndarray:
        return np.array([np.mean(v) for v in self.values])


@dataclass
class PBResult:
    purity: DecayRecord
    survival: DecayRecord


class ChannelBackend:
    """Exact rotations followed by a per-pulse noise channel, on Bloch vectors."""

    def __init__(self, noise: GateNoiseModel = GateNoiseModel(), visibility: float = 1.0):
        if not (0.0 < visibility <= 1.0):
            raise ValueError("visibility must be in (0, 1]")
        self.noise = noise
        self.visibility = visibility

    @property
    def supports_survival_shortcut(self) -> bool:
        """True when P_g depends only on the pulse count (exact identity).

        With ideal rotations the recovery returns the Bloch vector to +z
        exactly, and per-pulse depolarizing commutes with every rotation, so
        P_g = (1 + (1 - lambda)^n) / 2 for n pulses.
        """
        return self.noise.is_depolarizing_only

    def survival_probability(self, pulse_count: int) -> float:
        polarization = (1.0 - self.noise.depolarizing_prob) ** pulse_count
        return 0.5 + self.visibility * 0.5 * polarization

    def run(self, pulses, shots: Optional[int], rng: np.random.Generator) -> float:
        v = np.array([0.0, 0.0, 1.0])
        for amount, axis_angle in pulses:
            v = self._apply_pulse(v, amount, axis_angle)
        p_g = 0.5 * (1.0 + v[2])
        return self._read_out(p_g, shots, rng)

    def _apply_pulse(self, v, amount, axis_angle):
        noise = self.noise
        angle = amount + math.copysign(noise.overrotation, amount) if noise.overrotation else amount
        axis = axis_angle + noise.axis_error
        v = _bloch_rotate(v, axis, angle)
        if noise.depolarizing_prob:
            v = (1.0 - noise.depolarizing_prob) * v
        if noise.amplitude_damping_prob:
            gamma = noise.amplitude_damping_prob
            v = np.array(
                [math.sqrt(1 - gamma) * v[0], math.sqrt(1 - gamma) * v[1],
                 gamma + (1 - gamma) * v[2]]
            )
        return v

    def _read_out(self, p_g, shots, rng):
        p_obs = 0.5 + self.visibility * (p_g - 0.5)
        if shots is None:
            return p_obs
        return rng.binomial(int(shots), min(max(p_obs, 0.0), 1.0)) / int(shots)


class PulseBackend:
    """Ideal rotations with fixed-duration T1/T2 decay after every pulse."""

    def __init__(self, t1_us: float = math.inf, t2_us: float = math.inf,
                 gate_time_ns: float = 20.0, visibility: float = 1.0):
        if t2_us > 2 * t1_us + 1e-9:
            raise ValueError("t2 cannot exceed 2 * t1")
        self.t1_ns = t1_us * 1e3
        self.t2_ns = t2_us * 1e3
        self.gate_time_ns = gate_time_ns
        self.visibility = visibility
        self.supports_survival_shortcut = False

    def run(self, pulses, shots: Optional[int], rng: np.random.Generator) -> float:
        rho = np.array([[1, 0], [0, 0]], dtype=complex)
        for amount, axis_angle in pulses:
            u = bloch_rotation((math.cos(axis_angle), math.sin(axis_angle), 0.0), amount)
            rho = u @ rho @ u.conj().T
            rho = self._decay(rho)
        p_g = rho[0, 0].real
        p_obs = 0.5 + self.visibility * (p_g - 0.5)
        if shots is None:
            return p_obs
        return rng.binomial(int(shots), min(max(p_obs, 0.0), 1.0)) / int(shots)

    def _decay(self, rho):
        tau = self.gate_time_ns
        if not math.isinf(self.t1_ns):
            gamma = 1.0 - math.exp(-tau / self.t1_ns)
            rho = np.array(
                [[rho[0, 0] + gamma * rho[1, 1], math.sqrt(1 - gamma) * rho[0, 1]],
                 [math.sqrt(1 - gamma) * rho[1, 0], (1 - gamma) * rho[1, 1]]]
            )
        rate = 0.0
        if not math.isinf(self.t2_ns):
            rate = 1.0 / self.t2_ns - (0.0 if math.isinf(self.t1_ns) else 0.5 / self.t1_ns)
        if rate > 0.0:
            decay = math.exp(-tau * rate)
            rho = np.array([[rho[0, 0], decay * rho[0, 1]], [decay * rho[1, 0], rho[1, 1]]])
        return rho


def _bloch_rotate(v, axis_angle, amount):
    """Rotate a Bloch vector about the in-plane axis at `axis_angle`."""
    n = np.array([math.cos(axis_angle), math.sin(axis_angle), 0.0])
    cos_a, sin_a = math.cos(amount), math.sin(amount)
    return cos_a * v + sin_a * np.cross(n, v) + (1 - cos_a) * (n @ v) * n


# ---------------------------------------------------------------------------
# Sequence generation and execution
# ---------------------------------------------------------------------------

def draw_sequence(m: int, rng: np.random.Generator):
    """m random group elements plus their recovery, identity-checked."""
    gates = tuple(_GATES[i] for i in rng.integers(24, size=m))
    recovery = recovery_gate(gates)
    if recovery_gate(list(gates) + [recovery]).index != 0:
        raise ConsistencyError("sequence plus recovery is not the identity")
    return gates, recovery


def compile_sequence(gates, recovery, rng: np.random.Generator) -> PhysicalPulseList:
    """Decompose every element (random choices) and compile the whole string."""
    primitives = []
    for gate in list(gates) + [recovery]:
        primitives.extend(decompose(gate, rng).gates)
    return compile_virtual_z(PrimitiveSequence(tuple(primitives), -1))


_RNG_STREAMS = {"rb": 0, "pb": 1, "stability": 2}


def _sequence_rng(seed: int, kind: str, length_index: int, sequence_index: int):
    return np.random.default_rng(
        (seed, _RNG_STREAMS[kind], length_index, sequence_index)
    )


def _wrap_backend_error(exc: Exception, message: str) -> Exception:
    try:
        return type(exc)(message)
    except Exception:
        return RuntimeError(message)


def run_rb(backend, config: RBConfig, *, keep_sequences: bool = False,
           seconds_per_sequence: float = 0.0):
    """Standard RB: returns a DecayRecord of P_g (and sequences if asked)."""
    values = [[] for _ in config.lengths]
    stamps = [[] for _ in config.lengths]
    sequences = []
    counter = 0
    for i_m, m in enumerate(config.lengths):
        for j in range(config.sequences_per_length):
            rng = _sequence_rng(config.seed, "rb", i_m, j)
            gates, recovery = draw_sequence(m, rng)
            compiled = compile_sequence(gates, recovery, rng)
            try:
                if backend.supports_survival_shortcut:
                    p_g = backend.survival_probability(len(compiled.pulses))
                    if config.shots is not None:
                        p_g = rng.binomial(config.shots, p_g) / config.shots
                else:
                    p_g = backend.run(compiled.pulses, config.shots, rng)
            except Exception as exc:
                raise _wrap_backend_error(
                    exc, f"backend failed at length {m}, sequence {j}: {exc}"
                ) from exc
            values[i_m].append(float(p_g))
            stamps[i_m].append(counter * seconds_per_sequence)
            counter += 1
            if keep_sequences:
                sequences.append((gates, recovery))
    record = DecayRecord(config.lengths, values, stamps, kind="rb")
    return (record, sequences) if keep_sequences else record


_ANALYSIS_STEPS = (
    ("z", None),
    ("x", _Y_M90_INDEX),
    ("y", _X90_INDEX),
)


def run_pb(backend, config: RBConfig, *, seconds_per_sequence: float = 0.0,
           bias_corrected: bool = False) -> PBResult:
    """Purity benchmarking via the three-readout scheme.

    Each sequence runs three times (plain, extra R_y(-pi/2), extra
    R_x(pi/2)) to estimate <sx>, <sy>, <sz>; the purity is their sum of
    squares.  The plain readings double as an RB survival record, so the
    total error can be estimated from the same data set.  With
    `bias_corrected` the binomial shot-noise variance is subtracted from
    each squared expectation (relevant at low shot counts).
    """
    purity_values = [[] for _ in config.lengths]
    survival_values = [[] for _ in config.lengths]
    stamps = [[] for _ in config.lengths]
    counter = 0
    for i_m, m in enumerate(config.lengths):
        for j in range(config.sequences_per_length):
            rng = _sequence_rng(config.seed, "pb", i_m, j)
            gates, recovery = draw_sequence(m, rng)
            base = []
            for gate in list(gates) + [recovery]:
                base.extend(decompose(gate, rng).gates)
            expectations = {}
            for label, analysis_index in _ANALYSIS_STEPS:
                primitives = list(base)
                if analysis_index is not None:
                    primitives.extend(decompose(_GATES[analysis_index], rng).gates)
                compiled = compile_virtual_z(PrimitiveSequence(tuple(primitives), -1))
                try:
                    p_g = backend.run(compiled.pulses, config.shots, rng)
                except Exception as exc:
                    raise _wrap_backend_error(
                        exc, f"backend failed at length {m}, sequence {j} ({label}): {exc}"
                    ) from exc
                expectations[label] = 2.0 * p_g - 1.0
            purity = sum(value**2 for value in expectations.values())
            if bias_corrected and config.shots is not None:
                for value in expectations.values():
                    p_hat = 0.5 * (1.0 + value)
                    purity -= 4.0 * p_hat * (1.0 - p_hat) / config.shots
            purity_values[i_m].append(float(purity))
            survival_values[i_m].append(0.5 * (1.0 + expectations["z"]))
            stamps[i_m].append(counter * seconds_per_sequence)
            counter += 1
    return PBResult(
        purity=DecayRecord(config.lengths, purity_values, stamps, kind="pb"),
        survival=DecayRecord(config.lengths, survival_values, stamps, kind="rb"),
    )


# ---------------------------------------------------------------------------
# Fitting and error metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RBFit:
    p: float
    a: float
    b: float
    average_fidelity: float
    stderr: dict
    fit: FitResult


@dataclass(frozen=True)
class PBFit:
    u: float
    a: float
    b: float
    epsilon_inc: float
    stderr: dict
    fit: FitResult


def average_fidelity_from_p(p: float, d: int = 2) -> float:
    """F = 1/d + p (1 - 1/d)."""
    return 1.0 / d + p * (1.0 - 1.0 / d)


def incoherent_error_from_u(u: float) -> float:
    """epsilon_inc = (1 - sqrt(u)) / 2 (sign-corrected decay form)."""
    return 0.5 * (1.0 - math.sqrt(u))


def fit_rb(record: DecayRecord, p0=None) -> RBFit:
    """Least-squares fit of mean P_g(m) to A p^m + B."""
    if len(record.lengths) < 3:
        raise ValueError("need at least 3 distinct lengths to fit")
    m = np.asarray(record.lengths, dtype=float)
    fit = fit_nlls("exp_decay", m, record.means(), p0=p0)
    stderr = dict(fit.stderr) if fit.stderr else {}
    if "p" in stderr:
        stderr["average_fidelity"] = 0.5 * stderr["p"]
    return RBFit(
        p=fit["p"], a=fit["A"], b=fit["B"],
        average_fidelity=average_fidelity_from_p(fit["p"]),
        stderr=stderr, fit=fit,
    )


def fit_pb(record: DecayRecord, p0=None) -> PBFit:
    """Least-squares fit of mean purity(m) to A' u^(m-1) + B'."""
    if len(record.lengths) < 3:
        raise ValueError("need at least 3 distinct lengths to fit")
    m = np.asarray(record.lengths, dtype=float) - 1.0
    fit = fit_nlls("exp_decay", m, record.means(), p0=p0)
    u = fit["p"]
    stderr = dict(fit.stderr) if fit.stderr else {}
    if "p" in stderr:
        stderr["u"] = stderr.pop("p")
        stderr["epsilon_inc"] = stderr["u"] / (4.0 * math.sqrt(max(u, 1e-12)))
    return PBFit(
        u=u, a=fit["A"], b=fit["B"],
        epsilon_inc=incoherent_error_from_u(u),
        stderr=stderr, fit=fit,
    )


def coherent_error(epsilon: float, epsilon_inc: float) -> float:
    """epsilon_coh = epsilon - epsilon_inc; warns when fits disagree."""
    if epsilon < 0 or epsilon_inc < 0:
        raise ValueError("error rates must be non-negative")
    value = epsilon - epsilon_inc
    if value < 0:
        warnings.warn(
            f"coherent error is negative ({value:.2e}): the RB and PB fits disagree",
            stacklevel=2,
        )
    return value


# ---------------------------------------------------------------------------
# Temporal stability
# ---------------------------------------------------------------------------

@dataclass
class StabilitySeries:
    times: np.ndarray        # seconds, iteration start times
    average_fidelity: np.ndarray
    window: int


def temporal_stability(backend, config: RBConfig, iterations: int, window: int,
                       *, seconds_per_iteration: float = 30.0) -> StabilitySeries:
    """Repeated single-sequence RB with a moving-window refit per iteration.

    Each iteration measures one random sequence per length; the fidelity at
    iteration j comes from refitting the window of `window` iterations
    centered on j (truncated symmetrically at the edges).
    """
    if window % 2 == 0:
        raise ValueError("window must be odd")
    if iterations < window:
        raise ValueError("need at least `window` iterations")
    lengths = config.lengths
    survival = np.empty((iterations, len(lengths)))
    for j in range(iterations):
        for i_m, m in enumerate(lengths):
            rng = _sequence_rng(config.seed, "stability", j, i_m)
            gates, recovery = draw_sequence(m, rng)
            compiled = compile_sequence(gates, recovery, rng)
            if backend.supports_survival_shortcut:
                p_g = backend.survival_probability(len(compiled.pulses))
                if config.shots is not None:
                    p_g = rng.binomial(config.shots, p_g) / config.shots
            else:
                p_g = backend.run(compiled.pulses, config.shots, rng)
            survival[j, i_m] = p_g
    m_arr = np.asarray(lengths, dtype=float)
    half = window // 2
    fidelities = np.empty(iterations)
    p0 = None
    for j in range(iterations):
        h = min(half, j, iterations - 1 - j)
        means = survival[j - h:j + h + 1].mean(axis=0)
        fit = fit_nlls("exp_decay", m_arr, means, p0=p0)
        fidelities[j] = average_fidelity_from_p(fit["p"])
        p0 = [fit["A"], fit["p"], fit["B"]]
    times = np.arange(iterations) * seconds_per_iteration
    return StabilitySeries(times=times, average_fidelity=fidelities, window=window)
