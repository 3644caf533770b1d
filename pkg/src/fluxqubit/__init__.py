"""Pulse-level simulation and gate characterization for flux-tunable qubits.

Subpackages cover complex linear algebra and fidelity metrics (qcore), the
one-qubit Clifford group and virtual-Z compilation (cliffords), time-domain
flux-pulse simulation (pulsesim), randomized and purity benchmarking
(benchmarking), curve fitting and Allan-deviation analysis (analysis),
process tomography (tomography), and demultiplexed-gate calibration and
compilation (demux).
"""

__version__ = "0.1.0"


class CalibrationError(RuntimeError):
    """Raised when a calibration scan cannot locate its target feature."""


class FitError(RuntimeError):
    """Raised when a least-squares fit cannot proceed (singular Jacobian)."""


class InvalidChannelError(ValueError):
    """Raised when a process matrix violates CPTP constraints beyond tolerance."""


class ConsistencyError(RuntimeError):
    """Raised when an internal invariant is violated (indicates a bug)."""
