"""Time-domain simulation of a flux-tunable qubit under a fixed CW drive.

The qubit is a two-level system whose transition frequency follows the
square-root-of-cosine flux map f(i) = f_max * sqrt(|cos(pi (i - i_offset) /
i_period)|).  Dynamics are integrated in the frame rotating at the drive
frequency f_cw with

    H / h = delta(t) * sigma_z / 2 + (Omega_R / 2) * sigma_x,
    delta(t) = f_q(t) - f_cw,

where Omega_R = rabi_per_volt * drive_amplitude.  The drive phase is fixed;
rotation-axis angles arise purely from pulse timing.  Each integration step
applies the exact 2x2 exponential of the Hamiltonian sampled at the step
midpoint, followed by amplitude-damping and pure-dephasing Kraus maps with
rates 1/T1(f) and 1/T_phi = 1/T2 - 1/(2 T1).  Constant-flux segments are
exact at any step size; the step size only controls accuracy through ramps
and the sampling density of recorded time series.

Units: times in ns, frequencies in GHz, currents in uA, T1/T2 in us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import ConsistencyError
from .qcore import excited_population, validate_density_matrix

GROUND_STATE = np.array([[1, 0], [0, 0]], dtype=complex)
EXCITED_STATE = np.array([[0, 0], [0, 1]], dtype=complex)

DT_SAFETY_FACTOR = 0.05  # dt <= 0.05 / max(|detuning|, Omega_R)
TRACE_TOL_PER_US = 1e-9


@dataclass(frozen=True)
class TlsDip:
    """A Lorentzian T1 dip: two-level-system or resonator loss at one frequency."""

    center_ghz: float
    width_mhz: float
    t1_dip_us: float


@dataclass(frozen=True)
class DeviceParams:
    """Static device constants: flux map, drive, coherence, and readout."""

    f_max: float                 # GHz, maximum qubit frequency
    i_offset: float              # uA, current at which f_q is maximal
    i_period: float              # uA, current per flux quantum
    i_idle: float                # uA, quasistatic bias defining the idle frequency
    f_cw: float                  # GHz, fixed drive frequency
    rabi_per_volt: float         # MHz/V, Omega_R per volt of drive amplitude
    t1: float = math.inf         # us
    t2: float = math.inf         # us
    tls_dips: tuple = ()
    visibility: float = 1.0
    readout_f: float = 0.0       # GHz, informational

    def __post_init__(self):
        if self.f_max <= 0:
            raise ValueError("f_max must be positive")
        if self.i_period <= 0:
            raise ValueError("i_period must be positive")
        if not (0.0 < self.visibility <= 1.0):
            raise ValueError("visibility must be in (0, 1]")
        if self.t2 > 2 * self.t1 + 1e-9:
            raise ValueError("t2 cannot exceed 2 * t1")

    @property
    def idle_frequency(self) -> float:
        return freq_from_current(self, self.i_idle)

    def rabi_frequency(self, drive_amplitude: float) -> float:
        """Omega_R in GHz for a drive amplitude in volts."""
        return self.rabi_per_volt * drive_amplitude * 1e-3


@dataclass(frozen=True)
class FluxPulse:
    """A rectangular flux pulse with symmetric linear ramps.

    The flat top of length `duration` at amplitude `delta_i` is preceded and
    followed by ramps of length `rise_time`; the full footprint is
    [start, start + duration + 2 * rise_time].
    """

    delta_i: float   # uA
    start: float     # ns
    duration: float  # ns, flat-top length
    rise_time: float = 0.0  # ns

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if self.rise_time < 0:
            raise ValueError("rise_time must be non-negative")

    @property
    def end(self) -> float:
        return self.start + self.duration + 2 * self.rise_time


@dataclass(frozen=True)
class PulseSchedule:
    """Time-ordered, non-overlapping flux pulses plus the drive setting."""

    pulses: tuple
    total_duration: float
    drive_amplitude: float = 0.0
    drive_on: bool = False

    def __post_init__(self):
        pulses = tuple(sorted(self.pulses, key=lambda p: p.start))
        object.__setattr__(self, "pulses", pulses)
        for a, b in zip(pulses, pulses[1:]):
            if b.start < a.end - 1e-12:
                raise ValueError("flux pulses overlap (ramps included)")
        if pulses and pulses[-1].end > self.total_duration + 1e-12:
            raise ValueError("total_duration does not cover all pulses")
        if pulses and pulses[0].start < -1e-12:
            raise ValueError("pulses cannot start before t = 0")


@dataclass
class SimResult:
    """Sampled excited-state population and the final density matrix."""

    times: np.ndarray
    pe: np.ndarray
    final_state: np.ndarray


# ---------------------------------------------------------------------------
# Flux-to-frequency map
# ---------------------------------------------------------------------------

def freq_from_current(p: DeviceParams, i_net) -> np.ndarray | float:
    """Qubit frequency f_max * sqrt(|cos(pi (i - i_offset) / i_period)|)."""
    phase = np.pi * (np.asarray(i_net, dtype=float) - p.i_offset) / p.i_period
    f = p.f_max * np.sqrt(np.abs(np.cos(phase)))
    return float(f) if np.isscalar(i_net) else f


def current_from_freq(p: DeviceParams, f: float, reference: Optional[float] = None) -> float:
    """Inverse of freq_from_current on the monotonic branch nearest `reference`.

    The reference current (default the idle bias) selects which side of the
    flux sweet spot the solution lies on.
    """
    if not (0.0 < f <= p.f_max):
        raise ValueError(f"frequency {f} GHz is outside (0, f_max]")
    if reference is None:
        reference = p.i_idle
    offset = (p.i_period / np.pi) * np.arccos((f / p.f_max) ** 2)
    side = 1.0 if reference >= p.i_offset else -1.0
    return p.i_offset + side * float(offset)


def t1_at_frequency(p: DeviceParams, f: float) -> float:
    """T1 in us including Lorentzian dip contributions at frequency f."""
    rate = 0.0 if math.isinf(p.t1) else 1.0 / p.t1
    for dip in p.tls_dips:
        half_width = 0.5 * dip.width_mhz * 1e-3  # GHz
        lorentz = half_width**2 / ((f - dip.center_ghz) ** 2 + half_width**2)
        rate += lorentz / dip.t1_dip_us
    return math.inf if rate == 0.0 else 1.0 / rate


# ---------------------------------------------------------------------------
# Propagation engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """A span of the schedule with linearly varying flux and a drive flag."""

    duration: float   # ns
    di_start: float   # uA
    di_end: float     # uA
    drive: bool


def segments_from_schedule(p: DeviceParams, s: PulseSchedule):
    """Break a schedule into constant and ramp segments covering [0, T]."""
    segments = []
    cursor = 0.0

    def idle_until(t):
        nonlocal cursor
        if t > cursor + 1e-12:
            segments.append(Segment(t - cursor, 0.0, 0.0, s.drive_on))
            cursor = t

    for pulse in s.pulses:
        idle_until(pulse.start)
        if pulse.rise_time > 0:
            segments.append(Segment(pulse.rise_time, 0.0, pulse.delta_i, s.drive_on))
        if pulse.duration > 0:
            segments.append(Segment(pulse.duration, pulse.delta_i, pulse.delta_i, s.drive_on))
        if pulse.rise_time > 0:
            segments.append(Segment(pulse.rise_time, pulse.delta_i, 0.0, s.drive_on))
        cursor = pulse.end
    idle_until(s.total_duration)
    return segments


def _step_unitary(delta: float, omega: float, tau: float) -> np.ndarray:
    """Exact exponential of H/h = delta sz/2 + (omega/2) sx over tau ns."""
    a = np.pi * tau * omega  # sigma_x coefficient
    c = np.pi * tau * delta  # sigma_z coefficient
    theta = math.hypot(a, c)
    if theta == 0.0:
        return np.eye(2, dtype=complex)
    cos_t = math.cos(theta)
    sin_t = math.sin(theta) / theta
    return np.array(
        [[cos_t - 1j * sin_t * c, -1j * sin_t * a],
         [-1j * sin_t * a, cos_t + 1j * sin_t * c]],
        dtype=complex,
    )


def _apply_decoherence(rho: np.ndarray, p: DeviceParams, f_mid: float, tau: float) -> np.ndarray:
    """Amplitude damping with T1(f) plus pure dephasing, both over tau ns."""
    t1 = t1_at_frequency(p, f_mid) * 1e3  # ns
    if not math.isinf(t1):
        gamma = 1.0 - math.exp(-tau / t1)
        rho = np.array(
            [[rho[0, 0] + gamma * rho[1, 1], math.sqrt(1 - gamma) * rho[0, 1]],
             [math.sqrt(1 - gamma) * rho[1, 0], (1 - gamma) * rho[1, 1]]],
        )
    dephasing_rate = 0.0
    if not math.isinf(p.t2):
        dephasing_rate = 1.0 / (p.t2 * 1e3)
        if not math.isinf(p.t1):
            dephasing_rate -= 0.5 / (p.t1 * 1e3)
    if dephasing_rate > 0.0:
        decay = math.exp(-tau * dephasing_rate)
        rho = np.array(
            [[rho[0, 0], decay * rho[0, 1]], [decay * rho[1, 0], rho[1, 1]]]
        )
    return rho


def _has_decoherence(p: DeviceParams) -> bool:
    return not math.isinf(p.t1) or not math.isinf(p.t2) or bool(p.tls_dips)


def _steps_for_segments(p: DeviceParams, segments, dt: float, drive_amplitude: float,
                        resolve_constant: bool):
    steps = []
    for seg in segments:
        if seg.duration <= 1e-15:
            continue
        is_ramp = seg.di_start != seg.di_end
        if is_ramp or resolve_constant:
            n = max(1, int(math.ceil(seg.duration / dt)))
        else:
            n = 1
        tau = seg.duration / n
        omega = p.rabi_frequency(drive_amplitude) if seg.drive else 0.0
        for k in range(n):
            frac = (k + 0.5) / n
            di_mid = seg.di_start + (seg.di_end - seg.di_start) * frac
            f_mid = freq_from_current(p, p.i_idle + di_mid)
            steps.append((tau, f_mid - p.f_cw, omega, f_mid))
    return steps


def run_segments(p: DeviceParams, segments, dt: float, rho0: np.ndarray,
                 drive_amplitude: float, collect_series: bool = True,
                 check_dt: bool = True) -> SimResult:
    """Propagate rho0 through a segment list; the engine behind evolve()."""
    rho = validate_density_matrix(rho0).astype(complex)
    decohere = _has_decoherence(p)
    steps = _steps_for_segments(
        p, segments, dt, drive_amplitude,
        resolve_constant=collect_series or decohere,
    )
    if check_dt and steps:
        fastest = max(max(abs(s[1]), s[2]) for s in steps)
        if fastest > 0 and dt > DT_SAFETY_FACTOR / fastest:
            raise ValueError(
                f"dt = {dt} ns is too coarse: need dt <= "
                f"{DT_SAFETY_FACTOR / fastest:.4g} ns to resolve {fastest:.4g} GHz"
            )
    times = [0.0]
    pes = [excited_population(rho)]
    t = 0.0
    for tau, delta, omega, f_mid in steps:
        u = _step_unitary(delta, omega, tau)
        rho = u @ rho @ u.conj().T
        if decohere:
            rho = _apply_decoherence(rho, p, f_mid, tau)
        t += tau
        if collect_series:
            times.append(t)
            pes.append(excited_population(rho))
    trace_error = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
    if trace_error > TRACE_TOL_PER_US * max(1.0, t / 1e3):
        raise ConsistencyError(f"state trace drifted by {trace_error:.3e}")
    if not collect_series:
        times = [t]
        pes = [excited_population(rho)]
    return SimResult(
        times=np.asarray(times), pe=np.clip(np.asarray(pes), 0.0, 1.0), final_state=rho
    )


def evolve(p: DeviceParams, s: PulseSchedule, dt: float, rho0: np.ndarray) -> SimResult:
    """Simulate a schedule from rho0, sampling P_e roughly every dt ns."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return run_segments(
        p, segments_from_schedule(p, s), dt, rho0, s.drive_amplitude,
        collect_series=True,
    )


# ---------------------------------------------------------------------------
# Readout
# ---------------------------------------------------------------------------

def observed_probability(p: DeviceParams, pe: float) -> float:
    """Visibility-compressed probability 1/2 + visibility * (P_e - 1/2)."""
    return 0.5 + p.visibility * (pe - 0.5)


def measure(rho: np.ndarray, p: DeviceParams, shots: Optional[int] = None,
            rng: Optional[np.random.Generator] = None) -> float:
    """Estimate P_e with finite binomial sampling; shots=None is exact."""
    pe = min(max(excited_population(rho), 0.0), 1.0)
    p_obs = observed_probability(p, pe)
    if shots is None:
        return p_obs
    if shots < 1:
        raise ValueError("shots must be at least 1 (or None for the exact value)")
    if rng is None:
        raise ValueError("finite-shot measurement needs a random generator")
    return rng.binomial(int(shots), p_obs) / int(shots)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def single_pulse_schedule(delta_i: float, duration: float, rise_time: float,
                          drive_amplitude: float) -> PulseSchedule:
    pulse = FluxPulse(delta_i=delta_i, start=0.0, duration=duration, rise_time=rise_time)
    return PulseSchedule(
        pulses=(pulse,), total_duration=pulse.end,
        drive_amplitude=drive_amplitude, drive_on=True,
    )


def rabi_chevron(p: DeviceParams, delta_i_grid, t_grid, *, drive_amplitude: float,
                 rise_time: float = 0.0, dt: float = 0.05,
                 shots: Optional[int] = None, seed: int = 0) -> np.ndarray:
    """P_e map over flux-pulse amplitude (columns) and duration (rows).

    Without decoherence, each column reuses exact rise/fall propagators and a
    closed-form flat-top exponential, so columns cost one small matrix product
    per duration.
    """
    delta_i_grid = np.asarray(delta_i_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if delta_i_grid.size == 0 or t_grid.size == 0:
        raise ValueError("scan grids must be non-empty")
    out = np.empty((t_grid.size, delta_i_grid.size))
    decohere = _has_decoherence(p)
    omega = p.rabi_frequency(drive_amplitude)
    for di in delta_i_grid:
        _check_chevron_dt(p, di, omega, dt)
    for j, di in enumerate(delta_i_grid):
        if decohere:
            for i, duration in enumerate(t_grid):
                schedule = single_pulse_schedule(di, duration, rise_time, drive_amplitude)
                res = run_segments(
                    p, segments_from_schedule(p, schedule), dt,
                    GROUND_STATE, drive_amplitude, collect_series=False,
                )
                out[i, j] = res.pe[-1]
        else:
            f_flat = freq_from_current(p, p.i_idle + di)
            delta_flat = f_flat - p.f_cw
            rise = _ramp_propagator(p, 0.0, di, rise_time, dt, omega)
            fall = _ramp_propagator(p, di, 0.0, rise_time, dt, omega)
            for i, duration in enumerate(t_grid):
                u = fall @ _step_unitary(delta_flat, omega, duration) @ rise
                out[i, j] = abs(u[1, 0]) ** 2
    if shots is not None:
        out = _sample_map(p, out, shots, seed)
    else:
        out = observed_probability(p, out)
    return out


def _ramp_propagator(p: DeviceParams, di_from: float, di_to: float,
                     rise_time: float, dt: float, omega: float) -> np.ndarray:
    if rise_time <= 0:
        return np.eye(2, dtype=complex)
    n = max(1, int(math.ceil(rise_time / dt)))
    tau = rise_time / n
    u = np.eye(2, dtype=complex)
    for k in range(n):
        di_mid = di_from + (di_to - di_from) * (k + 0.5) / n
        delta = freq_from_current(p, p.i_idle + di_mid) - p.f_cw
        u = _step_unitary(delta, omega, tau) @ u
    return u


def _check_chevron_dt(p: DeviceParams, di: float, omega: float, dt: float):
    delta = abs(freq_from_current(p, p.i_idle + di) - p.f_cw)
    delta_idle = abs(p.idle_frequency - p.f_cw)
    fastest = max(delta, delta_idle, omega)
    if fastest > 0 and dt > DT_SAFETY_FACTOR / fastest:
        raise ValueError(
            f"dt = {dt} ns too coarse for detuning/Rabi of {fastest:.4g} GHz"
        )


def _sample_map(p: DeviceParams, pe_map: np.ndarray, shots: int, seed: int) -> np.ndarray:
    out = np.empty_like(pe_map)
    for idx in np.ndindex(pe_map.shape):
        rng = np.random.default_rng((seed, *idx))
        out[idx] = rng.binomial(shots, observed_probability(p, pe_map[idx])) / shots
    return out


def ramsey_axis_scan(p: DeviceParams, delta_i_mid_grid, delta_t_mid_grid, *,
                     delta_i_res: float, t_half: float, drive_amplitude: float,
                     rise_time: float = 0.0, dt: float = 0.05,
                     shots: Optional[int] = None, seed: int = 0) -> np.ndarray:
    """Two resonant half-pulses separated by a variable detuned middle step.

    The drive is active during the half-pulses only; during the middle step
    the qubit precesses freely, so at delta_i_mid = 0 the fringe period along
    delta_t_mid is 1 / (f_cw - idle frequency).  Rows index delta_t_mid,
    columns delta_i_mid.
    """
    delta_i_mid_grid = np.asarray(delta_i_mid_grid, dtype=float)
    delta_t_mid_grid = np.asarray(delta_t_mid_grid, dtype=float)
    if delta_i_mid_grid.size == 0 or delta_t_mid_grid.size == 0:
        raise ValueError("scan grids must be non-empty")
    out = np.empty((delta_t_mid_grid.size, delta_i_mid_grid.size))
    for j, di_mid in enumerate(delta_i_mid_grid):
        for i, t_mid in enumerate(delta_t_mid_grid):
            segments = ramsey_segments(
                delta_i_res=delta_i_res, t_half=t_half, di_mid=di_mid,
                t_mid=t_mid, rise_time=rise_time,
            )
            res = run_segments(
                p, segments, dt, GROUND_STATE, drive_amplitude,
                collect_series=False,
            )
            out[i, j] = res.pe[-1]
    if shots is not None:
        out = _sample_map(p, out, shots, seed)
    else:
        out = observed_probability(p, out)
    return out


def ramsey_segments(*, delta_i_res: float, t_half: float, di_mid: float,
                    t_mid: float, rise_time: float = 0.0):
    """Segment list for a half-pulse / free middle step / half-pulse sequence."""
    segments = []

    def pulse(di, duration):
        if rise_time > 0:
            segments.append(Segment(rise_time, 0.0, di, True))
        segments.append(Segment(duration, di, di, True))
        if rise_time > 0:
            segments.append(Segment(rise_time, di, 0.0, True))

    pulse(delta_i_res, t_half)
    if t_mid > 0:
        segments.append(Segment(t_mid, di_mid, di_mid, False))
    pulse(delta_i_res, t_half)
    return segments


def swap_spectroscopy(p: DeviceParams, prepared: str, f_grid, t_grid, *,
                      apply_visibility: bool = True) -> np.ndarray:
    """P_e map for relaxation at each target frequency (drive off).

    With the drive off the populations obey the exact amplitude-damping
    solution, so each cell is closed-form: exp(-t / T1(f)) for an excited
    preparation and 0 for a ground preparation (no thermal excitation is
    modeled).  Rows index time, columns frequency.
    """
    if prepared not in ("g", "e"):
        raise ValueError("prepared must be 'g' or 'e'")
    f_grid = np.asarray(f_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if f_grid.size == 0 or t_grid.size == 0:
        raise ValueError("scan grids must be non-empty")
    if np.any(f_grid <= 0) or np.any(f_grid > p.f_max):
        raise ValueError("f_grid must lie within (0, f_max]")
    t1_ns = np.array([t1_at_frequency(p, f) for f in f_grid]) * 1e3
    with np.errstate(over="ignore"):
        decay = np.exp(-np.outer(t_grid, 1.0 / t1_ns))
    pe = decay if prepared == "e" else np.zeros((t_grid.size, f_grid.size))
    return observed_probability(p, pe) if apply_visibility else pe


def on_off_stats(maps, *, min_rows: int = 10):
    """Per-column contrast <Delta P_e>_5 and the on-off ratio of a scan set.

    `maps` is one P_e map (rows = durations) or a sequence of maps, one per
    drive amplitude.  For every column the five highest and five lowest
    values are averaged and differenced; the ratio is the max over the
    resulting map divided by its min, floored at one ulp to avoid division
    by zero.  Returns (dp5, ratio) where dp5 has one row per input map.
    """
    maps = np.asarray(maps, dtype=float)
    if maps.ndim == 2:
        maps = maps[None, :, :]
    if maps.ndim != 3:
        raise ValueError("expected one 2-d map or a sequence of 2-d maps")
    if maps.shape[1] < min_rows:
        raise ValueError(f"each column needs at least {min_rows} rows")
    ordered = np.sort(maps, axis=1)
    dp5 = ordered[:, -5:, :].mean(axis=1) - ordered[:, :5, :].mean(axis=1)
    floor = np.finfo(float).eps
    if dp5.max() == dp5.min():
        ratio = 1.0
    else:
        ratio = float(dp5.max() / max(dp5.min(), floor))
    return dp5, ratio


def asymmetry_about(profile, coords, center: float) -> float:
    """Normalized antisymmetric content of profile(coords) about `center`.

    Interpolates the profile at center +/- x over the largest symmetric
    window and returns ||odd part|| / ||even part||; 0 for a symmetric
    profile.
    """
    profile = np.asarray(profile, dtype=float)
    coords = np.asarray(coords, dtype=float)
    half_span = min(center - coords.min(), coords.max() - center)
    if half_span <= 0:
        raise ValueError("center must lie strictly inside the coordinate range")
    x = np.linspace(0, half_span, 101)[1:]
    upper = np.interp(center + x, coords, profile)
    lower = np.interp(center - x, coords, profile)
    odd = np.linalg.norm(upper - lower)
    even = np.linalg.norm(upper + lower)
    return float(odd / even) if even > 0 else 0.0
