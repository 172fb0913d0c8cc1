"""Beam splitters and phase shifts of the Mach-Zehnder train as exact Fock-space unitaries.

Phase convention: tau is real and non-negative, r = i|r|. A splitter maps the
input mode operators (b0, b1) to b_out0 = tau b0 + r b1, b_out1 = r b0 + tau b1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .fock import TwoModeState

# amplitude weight tolerated in sectors the truncated space cannot hold
SECTOR_LEAK_TOL = 1e-24


@dataclass(frozen=True)
class BeamSplitter:
    tau_mag: float
    r_mag: float

    def __post_init__(self):
        t, r = float(self.tau_mag), float(self.r_mag)
        if not (0.0 <= t <= 1.0 and 0.0 <= r <= 1.0):
            raise ValueError(f"|tau|, |r| must lie in [0, 1], got ({t}, {r})")
        if abs(t * t + r * r - 1.0) > 1e-12:
            raise ValueError(f"|tau|^2 + |r|^2 must be 1, got {t * t + r * r!r}")
        object.__setattr__(self, "tau_mag", t)
        object.__setattr__(self, "r_mag", r)

    @classmethod
    def from_tau_sq(cls, tau_sq: float) -> "BeamSplitter":
        tau_sq = float(tau_sq)
        if not 0.0 <= tau_sq <= 1.0:
            raise ValueError(f"tau^2 must lie in [0, 1], got {tau_sq!r}")
        return cls(math.sqrt(tau_sq), math.sqrt(1.0 - tau_sq))

    @classmethod
    def balanced(cls) -> "BeamSplitter":
        return cls.from_tau_sq(0.5)

    @property
    def tau(self) -> complex:
        return complex(self.tau_mag)

    @property
    def r(self) -> complex:
        return 1j * self.r_mag

    @property
    def tau_sq(self) -> float:
        return self.tau_mag**2

    @property
    def r_sq(self) -> float:
        return self.r_mag**2

    @property
    def mixing_angle(self) -> float:
        return math.atan2(self.r_mag, self.tau_mag)


class Scenario(str, enum.Enum):
    SINGLE_ARM = "a"
    SYMMETRIC = "b"
    TWO_PARAM = "c"


@dataclass(frozen=True)
class PhaseConfig:
    """Phase placement between the splitters.

    ``phi`` is the single-arm or symmetric phase; for the two-parameter case
    ``phi`` is phi1 (mode 0) and ``phi2`` acts on mode 1.
    """

    scenario: Scenario
    phi: float
    phi2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        if not (math.isfinite(self.phi) and math.isfinite(self.phi2)):
            raise ValueError("phase angles must be finite")
        if self.scenario is not Scenario.TWO_PARAM and self.phi2 != 0.0:
            raise ValueError("phi2 only applies to the two-parameter scenario")

    @classmethod
    def single_arm(cls, phi: float) -> "PhaseConfig":
        return cls(Scenario.SINGLE_ARM, phi)

    @classmethod
    def symmetric(cls, phi: float) -> "PhaseConfig":
        return cls(Scenario.SYMMETRIC, phi)

    @classmethod
    def two_param(cls, phi1: float, phi2: float) -> "PhaseConfig":
        return cls(Scenario.TWO_PARAM, phi1, phi2)

    @classmethod
    def from_sum_difference(cls, phi_s: float, phi_d: float) -> "PhaseConfig":
        return cls.two_param((phi_s + phi_d) / 2, (phi_s - phi_d) / 2)

    def mode_phases(self) -> tuple[float, float]:
        """(theta0, theta1) such that the state picks up exp(-i theta0 n0 - i theta1 n1)."""
        return mode_phases(self.scenario, self.phi, self.phi2)


def mode_phases(scenario: Scenario, phi, phi2=0.0):
    scenario = Scenario(scenario)
    if scenario is Scenario.SINGLE_ARM:
        return 0.0 * phi, phi
    if scenario is Scenario.SYMMETRIC:
        return phi / 2, -phi / 2
    return phi, phi2


def mode_phase_rates(scenario: Scenario) -> tuple[float, float]:
    """d(theta0, theta1)/d(phi) for the one-parameter scenarios."""
    scenario = Scenario(scenario)
    if scenario is Scenario.SINGLE_ARM:
        return 0.0, 1.0
    if scenario is Scenario.SYMMETRIC:
        return 0.5, -0.5
    raise ValueError("the two-parameter scenario has no single phase derivative")


@lru_cache(maxsize=512)
def _sector_unitary(n_total: int, theta: float) -> np.ndarray:
    # exp(i theta (b0^dag b1 + b1^dag b0)) on the basis |k, N-k>, k = 0..N
    if n_total == 0:
        return np.ones((1, 1), dtype=np.complex128)
    k = np.arange(n_total)
    off = np.sqrt((k + 1.0) * (n_total - k))
    evals, evecs = eigh_tridiagonal(np.zeros(n_total + 1), off)
    u = (evecs * np.exp(1j * theta * evals)) @ evecs.T
    u.setflags(write=False)
    return u


def apply_bs(s: TwoModeState, bs: BeamSplitter) -> TwoModeState:
    """Apply a beam splitter sector by sector in total photon number.

    Sectors with more photons than the (equal) cutoff do not fit the truncated
    space; a state with weight there is rejected rather than silently truncated.
    """
    c0, c1 = s.cutoffs
    if c0 != c1:
        raise ValueError(f"beam splitter needs equal cutoffs, got {s.cutoffs}")
    c = c0
    amp = s.amplitudes
    out = np.zeros_like(amp)
    theta = bs.mixing_angle
    n0_idx, n1_idx = np.indices(amp.shape)
    total = n0_idx + n1_idx
    leak = float(np.sum(np.abs(amp[total > c]) ** 2))
    if leak > SECTOR_LEAK_TOL:
        raise ValueError(
            f"state has weight {leak:.3g} with more than {c} photons in total; "
            "pad the cutoffs before mixing"
        )
    for n_total in range(c + 1):
        k = np.arange(n_total + 1)
        out[k, n_total - k] = _sector_unitary(n_total, theta) @ amp[k, n_total - k]
    return TwoModeState(out)


def apply_phase(s: TwoModeState, cfg: PhaseConfig) -> TwoModeState:
    theta0, theta1 = cfg.mode_phases()
    c0, c1 = s.cutoffs
    f0 = np.exp(-1j * theta0 * np.arange(c0 + 1))
    f1 = np.exp(-1j * theta1 * np.arange(c1 + 1))
    return TwoModeState(s.amplitudes * f0[:, None] * f1[None, :])


def propagate(
    state: TwoModeState,
    bs1: BeamSplitter,
    cfg: PhaseConfig,
    bs2: BeamSplitter | None = None,
) -> TwoModeState:
    """BS1, then the phase placement, then BS2 when given.

    Without BS2 the result is the pre-measurement state (ports 2, 3); with it,
    mode 0 is output port 4 and mode 1 is port 5.
    """
    out = apply_phase(apply_bs(state, bs1), cfg)
    if bs2 is not None:
        out = apply_bs(out, bs2)
    return out
