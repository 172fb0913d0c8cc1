"""SU(2) spin-coherent input state in the Fock basis and its moments."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .fock import FockState, ModeMoments, TwoModeState, tensor, vacuum

# 2j above this is refused; log-space weights stay accurate well past it,
# but the two-mode simulator is quadratic in 2j.
MAX_TWO_J = 200


def two_j_of(j) -> int:
    """Return 2j as an int, rejecting anything that is not a positive half-integer."""
    try:
        twice = 2 * float(j)
    except (TypeError, ValueError):
        raise ValueError(f"j must be a number, got {j!r}") from None
    k = round(twice)
    if not math.isfinite(twice) or abs(twice - k) > 1e-12 or k < 1:
        raise ValueError(f"j must be a positive half-integer, got {j!r}")
    if k > MAX_TWO_J:
        raise ValueError(f"2j = {k} exceeds the supported maximum {MAX_TWO_J}")
    return k


@dataclass(frozen=True)
class Su2CoherentParams:
    """Spin-coherent state label (j, lambda) with lambda = exp(-i phi) tan(theta / 2)."""

    j: float
    lam: complex

    def __post_init__(self):
        two_j_of(self.j)
        lam = complex(self.lam)
        if not cmath.isfinite(lam):
            raise ValueError(f"lambda must be finite, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)

    @classmethod
    def from_angles(cls, j, theta: float, phi: float) -> "Su2CoherentParams":
        return cls(j, cmath.exp(-1j * phi) * math.tan(theta / 2))

    @property
    def two_j(self) -> int:
        return two_j_of(self.j)

    @property
    def binomial_p(self) -> float:
        """|lambda|^2 / (1 + |lambda|^2), the per-excitation occupation probability."""
        x = abs(self.lam) ** 2
        return x / (1.0 + x)


def _log_weights(abs_lambda: float, two_j: int) -> np.ndarray:
    # log of |lambda|^(2m) / (m! (2j - m)!) for m = 0..2j
    m = np.arange(two_j + 1)
    log_fact = gammaln(m + 1.0) + gammaln(two_j - m + 1.0)
    if abs_lambda == 0.0:
        out = np.full(two_j + 1, -np.inf)
        out[0] = -log_fact[0]
        return out
    return 2.0 * m * math.log(abs_lambda) - log_fact


def normalization_c(abs_lambda: float, j) -> float:
    """C(|lambda|) = [sum_m |lambda|^(2m) / (m! (2j-m)!)]^(-1/2)."""
    if not abs_lambda >= 0.0 or not math.isfinite(abs_lambda):
        raise ValueError(f"|lambda| must be finite and non-negative, got {abs_lambda!r}")
    two_j = two_j_of(j)
    return math.exp(-0.5 * logsumexp(_log_weights(abs_lambda, two_j)))


def su2_coherent(p: Su2CoherentParams) -> FockState:
    """Fock amplitudes C lambda^eta / sqrt(eta! (2j - eta)!), eta = 0..2j.

    The magnitudes are built in log space and normalized by direct summation,
    so large j or extreme |lambda| neither overflow nor underflow the sum.
    """
    two_j = p.two_j
    logw = _log_weights(abs(p.lam), two_j)
    log_mag = 0.5 * (logw - logsumexp(logw))
    eta = np.arange(two_j + 1)
    amps = np.exp(log_mag) * np.exp(1j * cmath.phase(p.lam) * eta)
    return FockState.normalized(amps)


def input_state(p: Su2CoherentParams) -> TwoModeState:
    """Vacuum in mode 0, spin-coherent state in mode 1, cutoffs (2j, 2j).

    The support is exactly n0 + n1 <= 2j, so every beam splitter downstream acts
    exactly on this truncated space.
    """
    two_j = p.two_j
    return tensor(vacuum(two_j), su2_coherent(p))


@dataclass(frozen=True)
class InputMoments:
    """Moments of the spin-coherent mode, all from direct amplitude sums.

    ``mu`` is minus the coherence variance, -(<b^2> - <b>^2); ``nbar`` is an
    alias of ``mean_n``.
    """

    mean_n: float
    mean_n_sq: float
    var_n: float
    nu: complex
    mu: complex
    nbar: float
    lowering_sq: complex
    number_lowering: complex

    @property
    def var_b(self) -> complex:
        return -self.mu

    def as_mode_moments(self) -> ModeMoments:
        return ModeMoments(
            n=self.mean_n,
            n_sq=self.mean_n_sq,
            b=self.nu,
            b_sq=self.lowering_sq,
            n_b=self.number_lowering,
        )


def input_moments(p: Su2CoherentParams) -> InputMoments:
    m = ModeMoments.of(input_state(p), 1)
    return InputMoments(
        mean_n=m.n,
        mean_n_sq=m.n_sq,
        var_n=max(m.var_n, 0.0),
        nu=m.b,
        mu=-m.var_b,
        nbar=m.n,
        lowering_sq=m.b_sq,
        number_lowering=m.n_b,
    )
