"""Quantum Fisher information of the three phase placements and the matching Cramer-Rao bounds.

Closed forms take input-state moments; :func:`qfim_oracle` differentiates the
simulated state numerically and shares no algebra with them.

The phase generators act on the state between the splitters: phi_s multiplies
(n0 + n1) / 2 and phi_d multiplies (n0 - n1) / 2. The single-arm phase (on mode 1)
is phi_s = phi, phi_d = -phi; the symmetric phase is phi_d = phi alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import ModeMoments, TwoModeState
from .interferometer import BeamSplitter, PhaseConfig, Scenario, apply_bs, apply_phase
from .states import Su2CoherentParams, input_moments

PSD_SLACK = 1e-9
H_MIN, H_MAX = 1e-8, 1e-2
DEFAULT_H = 1e-5


def qcrb(f: float) -> float:
    """1/sqrt(F) with M = 1 repetitions; infinite when F vanishes."""
    return 1.0 / math.sqrt(f) if f > 0.0 else math.inf


@dataclass(frozen=True)
class Qfim:
    f_ss: float
    f_dd: float
    f_sd: float

    def __post_init__(self):
        if self.f_ss * self.f_dd - self.f_sd**2 < -PSD_SLACK * max(1.0, self.f_ss * self.f_dd):
            raise ValueError(f"QFIM is not positive semidefinite: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([[self.f_dd, self.f_sd], [self.f_sd, self.f_ss]])

    @property
    def single_arm(self) -> float:
        return self.f_dd + self.f_ss - 2.0 * self.f_sd

    @property
    def symmetric(self) -> float:
        return self.f_dd

    @property
    def is_degenerate(self) -> bool:
        return self.f_ss <= 0.0

    def schur_dd(self) -> float:
        """F_dd - F_sd^2 / F_ss, the information on phi_d with phi_s unknown."""
        if self.is_degenerate:
            raise ZeroDivisionError("F_ss = 0: the sum phase carries no information")
        return self.f_dd - self.f_sd**2 / self.f_ss


@dataclass(frozen=True)
class QfiReport:
    f_a: float
    f_b: float
    f_c: float
    f_sql: float
    qcrb_a: float
    qcrb_b: float
    qcrb_c: float
    sql: float
    degenerate: bool

    @classmethod
    def from_values(cls, f_a, f_b, f_c, f_sql, degenerate=False, roots=None) -> "QfiReport":
        """``roots`` optionally gives sqrt(F) for (a, b, c, sql) directly, so
        bounds survive informations too small to square."""
        if roots is None:
            bounds = [qcrb(f) for f in (f_a, f_b, f_c, f_sql)]
        else:
            bounds = [1.0 / x if x > 0.0 else math.inf for x in roots]
        return cls(
            f_a=f_a,
            f_b=f_b,
            f_c=f_c,
            f_sql=f_sql,
            qcrb_a=bounds[0],
            qcrb_b=bounds[1],
            qcrb_c=bounds[2],
            sql=bounds[3],
            degenerate=degenerate,
        )

    def qcrb_for(self, scenario) -> float:
        return {"a": self.qcrb_a, "b": self.qcrb_b, "c": self.qcrb_c}[Scenario(scenario).value]


def qfim_su2(p: Su2CoherentParams, bs1: BeamSplitter) -> Qfim:
    """QFIM for vacuum in mode 0 and the spin-coherent state in mode 1."""
    m = input_moments(p)
    d = bs1.tau_sq - bs1.r_sq
    tr_sq = bs1.tau_sq * bs1.r_sq
    return Qfim(
        f_ss=m.var_n,
        f_dd=d * d * m.var_n + 4.0 * tr_sq * m.mean_n,
        f_sd=-d * m.var_n,
    )


def qfi_report_su2(p: Su2CoherentParams, bs1: BeamSplitter) -> QfiReport:
    """All three QFIs for the vacuum + spin-coherent input.

    f_b is the full symmetric-phase information, Var(n2 - n3); it includes the
    anticorrelation of the two arms that the sum of the arm variances misses.
    f_c uses the product form 4|tau r|^2 <n1>, which stays defined when F_ss = 0.
    """
    m = input_moments(p)
    tt, rr = bs1.tau_sq, bs1.r_sq
    tr_sq = tt * rr
    f_c = 4.0 * tr_sq * m.mean_n
    f_a = 4.0 * tt * tt * m.var_n + f_c
    f_b = (tt - rr) ** 2 * m.var_n + f_c
    # factored square roots keep the bounds finite where F itself underflows
    # sqrt<n> = sqrt(2j)|lam|/sqrt(1+|lam|^2) and sqrt(Var n) = sqrt<n>/sqrt(1+|lam|^2)
    norm = math.hypot(1.0, abs(p.lam))
    sn = math.sqrt(2.0 * p.j) * abs(p.lam) / norm
    sd = sn / norm
    root_c = 2.0 * bs1.tau_mag * bs1.r_mag * sn
    root_a = 2.0 * bs1.tau_mag * math.hypot(bs1.tau_mag * sd, bs1.r_mag * sn)
    root_b = math.hypot(abs(tt - rr) * sd, root_c)
    return QfiReport.from_values(
        f_a, f_b, f_c, m.mean_n, degenerate=m.var_n <= 0.0, roots=(root_a, root_b, root_c, sn)
    )


def qfim_general(m0: ModeMoments, m1: ModeMoments, bs1: BeamSplitter) -> Qfim:
    """QFIM for an arbitrary product input |psi0> (x) |psi1>.

    Only single-mode moments enter. The sum-difference cross term carries
    ``+(<n0 b0> - <n0><b0>)<b1^dag>``; with a minus there it would disagree with
    the numerical QFIM whenever mode 0 has coherence.
    """
    d = bs1.tau_sq - bs1.r_sq
    t = bs1.tau_mag * bs1.r_mag
    b0, b1 = m0.b, m1.b
    # <b^dag n> = conj(<n b>)
    bdag_n0, bdag_n1 = np.conj(m0.n_b), np.conj(m1.n_b)

    f_ss = m0.var_n + m1.var_n
    coherence = (
        m0.n * m1.n
        - abs(b0) ** 2 * abs(b1) ** 2
        - (np.conj(m0.b_sq) * m1.b_sq - np.conj(b0) ** 2 * b1**2).real
    )
    f_dd = (
        d * d * f_ss
        + 8.0 * t * t * coherence
        + 4.0 * t * t * (m0.n + m1.n)
        - 8.0 * t * d * ((bdag_n0 - np.conj(b0) * m0.n) * b1 + b0 * (bdag_n1 - np.conj(b1) * m1.n)).imag
    )
    f_sd = d * (m0.var_n - m1.var_n) + 4.0 * t * (
        b0 * np.conj(b1)
        + (m0.n_b - m0.n * b0) * np.conj(b1)
        + b0 * (bdag_n1 - np.conj(b1) * m1.n)
    ).imag
    return Qfim(f_ss=float(f_ss), f_dd=float(f_dd), f_sd=float(f_sd))


def _check_h(h: float) -> float:
    if not H_MIN <= h <= H_MAX:
        raise ValueError(f"finite-difference step must lie in [{H_MIN}, {H_MAX}], got {h!r}")
    return h


def _central(fn, x: float, h: float, richardson: bool) -> np.ndarray:
    d1 = (fn(x + h) - fn(x - h)) / (2 * h)
    if not richardson:
        return d1
    h2 = h / 2
    d2 = (fn(x + h2) - fn(x - h2)) / (2 * h2)
    return (4.0 * d2 - d1) / 3.0


def _pure_state_qfi(psi: np.ndarray, dpsi_i: np.ndarray, dpsi_j: np.ndarray) -> float:
    # 4 Re{<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>}
    val = np.vdot(dpsi_i, dpsi_j) - np.vdot(dpsi_i, psi) * np.vdot(psi, dpsi_j)
    return float(4.0 * val.real)


def qfim_oracle(
    state: TwoModeState,
    bs1: BeamSplitter,
    h: float = DEFAULT_H,
    base: tuple[float, float] = (0.0, 0.0),
    richardson: bool = True,
) -> Qfim:
    """QFIM in (phi_s, phi_d) by central differences of the simulated state.

    ``base`` is the (phi_s, phi_d) point where the derivatives are taken.
    """
    _check_h(h)
    mixed = apply_bs(state, bs1)
    phi_s0, phi_d0 = base

    def at(phi_s, phi_d):
        return apply_phase(mixed, PhaseConfig.from_sum_difference(phi_s, phi_d)).amplitudes

    psi = at(phi_s0, phi_d0)
    d_s = _central(lambda x: at(x, phi_d0), phi_s0, h, richardson)
    d_d = _central(lambda x: at(phi_s0, x), phi_d0, h, richardson)
    f_ss = _pure_state_qfi(psi, d_s, d_s)
    f_dd = _pure_state_qfi(psi, d_d, d_d)
    f_sd = _pure_state_qfi(psi, d_s, d_d)
    return Qfim(f_ss=f_ss, f_dd=f_dd, f_sd=f_sd)


def qfi_oracle(
    state: TwoModeState,
    bs1: BeamSplitter,
    scenario,
    h: float = DEFAULT_H,
    base_phi: float = 0.0,
    richardson: bool = True,
) -> float:
    """Scalar QFI of one phase placement from finite differences.

    Scenarios (a) and (b) differentiate the one-parameter family directly;
    (c) returns the Schur complement of :func:`qfim_oracle` (0 when F_ss = 0).
    """
    scenario = Scenario(scenario)
    _check_h(h)
    if scenario is Scenario.TWO_PARAM:
        m = qfim_oracle(state, bs1, h=h, base=(0.0, base_phi), richardson=richardson)
        return 0.0 if m.f_ss <= 1e-14 else m.schur_dd()
    mixed = apply_bs(state, bs1)

    def at(phi):
        return apply_phase(mixed, PhaseConfig(scenario, phi)).amplitudes

    psi = at(base_phi)
    dpsi = _central(at, base_phi, h, richardson)
    return _pure_state_qfi(psi, dpsi, dpsi)
