"""Phase sensitivity of single-mode intensity, difference intensity and balanced homodyne detection.

Sensitivity is error propagation, Delta D / |d<D>/d phi|. The closed forms use
the spin-coherent moments with vacuum in mode 0, so every term carrying a
mode-0 coherence is absent. :func:`sensitivity_oracle` evaluates the same
quantity on the simulated output state.

Divergent points (no signal slope) are ``math.inf``, never an exception.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    TwoModeState,
    expect_diagonal,
    expect_lowering,
    expect_lowering_sq,
    expect_number,
    expect_number_sq,
)
from .interferometer import (
    BeamSplitter,
    PhaseConfig,
    Scenario,
    mode_phase_rates,
    mode_phases,
    propagate,
)
from .qfi import DEFAULT_H, H_MAX, H_MIN, qfi_report_su2
from .states import InputMoments, Su2CoherentParams, input_moments

DIVERGENT = math.inf
# |sin phi| below this is a pole of the intensity schemes (sin(pi) is ~1e-16 in floats)
SIN_POLE_TOL = 1e-12
# homodyne slope below this fraction of its largest possible value is a pole
SLOPE_REL_TOL = 1e-12
# oracle slopes within this many ulps of the mean, per unit step, count as zero
ORACLE_NOISE_ULPS = 64
SCAN_POINTS = 10_000
GOLDEN_TOL = 1e-10


class Scheme(str, enum.Enum):
    SMI = "smi"
    DI = "di"
    BH = "bh"


class Observable(str, enum.Enum):
    N4 = "n4"
    ND = "nd"
    Y = "y"


@dataclass(frozen=True)
class SmiCoeffs:
    a0: float
    a1: float
    a01: complex


@dataclass(frozen=True)
class DiCoeffs:
    ad: float
    cd: complex


@dataclass(frozen=True)
class BhCoeffs:
    k0: complex
    k1: complex
    phi_l: float


@dataclass(frozen=True)
class SensitivityPoint:
    phi: float
    delta_phi: float
    scheme: Scheme
    scenario: Scenario

    @property
    def divergent(self) -> bool:
        return math.isinf(self.delta_phi)


@dataclass(frozen=True)
class PhaseOptimum:
    phi_opt: float | None
    delta_phi_min: float

    @property
    def has_signal(self) -> bool:
        return self.phi_opt is not None


def reference_scenario(scheme, scenario) -> Scenario:
    """Scenario whose QCRB bounds the scheme.

    The intensity schemes have no phase reference and are bounded by the
    two-parameter QCRB; homodyne is bounded by its own phase placement.
    """
    scheme, scenario = Scheme(scheme), Scenario(scenario)
    if scheme is Scheme.BH:
        if scenario is Scenario.TWO_PARAM:
            raise ValueError("homodyne detection is defined for scenarios (a) and (b) only")
        return scenario
    return Scenario.TWO_PARAM


def _mags(bs1: BeamSplitter, bs2: BeamSplitter):
    return bs1.tau_mag, bs1.r_mag, bs2.tau_mag, bs2.r_mag


def _smi_arrays(bs1, bs2, phi):
    t, r, tp, rp = _mags(bs1, bs2)
    p = t * tp * r * rp
    c = np.cos(phi)
    a0 = (t * tp) ** 2 + (r * rp) ** 2 - 2 * p * c
    a1 = (t * rp) ** 2 + (tp * r) ** 2 + 2 * p * c
    # tau* r = i|tau r| and tau'* r' = i|tau' r'| under the global convention
    a01 = 1j * t * r * (2 * tp * tp - 1) + 1j * tp * rp * (t * t * np.exp(-1j * phi) - r * r * np.exp(1j * phi))
    return a0, a1, a01


def _di_arrays(bs1, bs2, phi):
    t, r, tp, rp = _mags(bs1, bs2)
    ad = 1 - 2 * (t * rp + r * tp) ** 2 + 4 * t * r * tp * rp * (1 - np.cos(phi))
    cd = 2 * tp * rp * np.sin(phi) + 2j * (t * r * (1 - 2 * tp * tp) + (1 - 2 * t * t) * tp * rp * np.cos(phi))
    return ad, cd


def _bh_arrays(bs1, bs2, phi, phi_l, scenario):
    # port-4 amplitude of b0 and b1 after the train, and d/dphi of the b1 one
    t, r, tp, rp = _mags(bs1, bs2)
    th0, th1 = mode_phases(scenario, phi)
    rho0, rho1 = mode_phase_rates(scenario)
    e0, e1 = np.exp(-1j * th0), np.exp(-1j * th1)
    k0 = tp * t * e0 - rp * r * e1
    k1 = 1j * (tp * r * e0 + rp * t * e1)
    dk1 = tp * r * rho0 * e0 + rp * t * rho1 * e1
    lo = np.exp(-1j * np.asarray(phi_l))
    return 0.5 * lo * k0, 0.5 * lo * k1, lo * dk1, abs(tp * r * rho0) + abs(rp * t * rho1)


def coeffs_smi(bs1: BeamSplitter, bs2: BeamSplitter, phi: float) -> SmiCoeffs:
    a0, a1, a01 = _smi_arrays(bs1, bs2, phi)
    return SmiCoeffs(float(a0), float(a1), complex(a01))


def coeffs_di(bs1: BeamSplitter, bs2: BeamSplitter, phi: float) -> DiCoeffs:
    ad, cd = _di_arrays(bs1, bs2, phi)
    assert abs(ad * ad + abs(cd) ** 2 - 1.0) < 1e-9, "A_d^2 + |C_d|^2 != 1"
    return DiCoeffs(float(ad), complex(cd))


def coeffs_bh(bs1: BeamSplitter, bs2: BeamSplitter, phi: float, phi_l: float | None = None, scenario="a") -> BhCoeffs:
    """K0, K1 with Y = Re{exp(-i phi_L) b4} = K0 b0 + K1 b1 + h.c."""
    scenario = _bh_scenario(scenario)
    phi_l = phi if phi_l is None else phi_l
    k0, k1, _, _ = _bh_arrays(bs1, bs2, phi, phi_l, scenario)
    return BhCoeffs(complex(k0), complex(k1), float(phi_l))


def _bh_scenario(scenario) -> Scenario:
    scenario = Scenario(scenario)
    if scenario is Scenario.TWO_PARAM:
        raise ValueError("homodyne detection is defined for scenarios (a) and (b) only")
    return scenario


def _divide(num, den, pole):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.full(np.broadcast(num, den, pole).shape, DIVERGENT)
    # a denominator that underflowed to zero is a slope past float range, like overflow
    ok = ~np.broadcast_to(pole, out.shape) & (np.broadcast_to(den, out.shape) != 0.0)
    # overflow lands on inf, which is the divergent value anyway
    with np.errstate(over="ignore"):
        np.divide(np.broadcast_to(num, out.shape), np.broadcast_to(den, out.shape), out=out, where=ok)
    return out


def smi_curve(m: InputMoments, bs1, bs2, phi) -> np.ndarray:
    """sqrt(A1^2 Var n1 + |A01|^2 <n1>) / (2|tau tau' r r'| |sin phi| <n1>).

    The slope term proportional to <b0> is absent for a vacuum mode 0, which is
    why this specialization is exact.
    """
    phi = np.asarray(phi, dtype=float)
    _, a1, a01 = _smi_arrays(bs1, bs2, phi)
    t, r, tp, rp = _mags(bs1, bs2)
    s = np.abs(np.sin(phi))
    num = np.sqrt(a1 * a1 * m.var_n + np.abs(a01) ** 2 * m.mean_n)
    den = 2 * t * tp * r * rp * s * m.mean_n
    pole = (s < SIN_POLE_TOL) | (m.mean_n <= 0.0) | (t * tp * r * rp == 0.0)
    return _divide(num, den, pole)


def di_curve(m: InputMoments, bs1, bs2, phi) -> np.ndarray:
    """sqrt(A_d^2 Var n1 + |C_d|^2 <n1>) / (4|tau r tau' r'| |sin phi| <n1>)."""
    phi = np.asarray(phi, dtype=float)
    ad, cd = _di_arrays(bs1, bs2, phi)
    t, r, tp, rp = _mags(bs1, bs2)
    s = np.abs(np.sin(phi))
    num = np.sqrt(ad * ad * m.var_n + np.abs(cd) ** 2 * m.mean_n)
    den = 4 * t * tp * r * rp * s * m.mean_n
    pole = (s < SIN_POLE_TOL) | (m.mean_n <= 0.0) | (t * tp * r * rp == 0.0)
    return _divide(num, den, pole)


def bh_variance(m: InputMoments, k1) -> np.ndarray:
    """Var Y = 1/4 + 2 Re{K1^2 (<b1^2> - <b1>^2)} + 2|K1|^2 (<n1> - |<b1>|^2)."""
    k1 = np.asarray(k1)
    return 0.25 + 2 * (k1 * k1 * m.var_b).real + 2 * np.abs(k1) ** 2 * (m.mean_n - abs(m.nu) ** 2)


def bh_curve(m: InputMoments, bs1, bs2, phi, phi_l=None, scenario="a") -> np.ndarray:
    """Homodyne sensitivity; ``phi_l=None`` locks the local-oscillator phase to phi.

    The local phase is held fixed while differentiating and only then set to
    the operating point. With phi_L = 0 and real lambda this reduces to
    sqrt(Var Y) / (|tau r'| |cos(phi) <b1>|) for the single arm and
    2 sqrt(Var Y) / (||tau' r| - |tau r'|| |cos(phi / 2) <b1>|) for the
    symmetric placement.
    """
    scenario = _bh_scenario(scenario)
    phi = np.asarray(phi, dtype=float)
    phi_l = phi if phi_l is None else np.asarray(phi_l, dtype=float)
    _, k1, dk1, slope_scale = _bh_arrays(bs1, bs2, phi, phi_l, scenario)
    num = np.sqrt(np.maximum(bh_variance(m, k1), 0.0))
    den = np.abs((dk1 * m.nu).real)
    # |<b1>|^2 <= <n1>, so a zero mean with nonzero <b1> is underflow, not signal
    pole = (den <= SLOPE_REL_TOL * slope_scale * abs(m.nu)) | (m.mean_n <= 0.0)
    return _divide(num, den, pole)


def sensitivity_curve(scheme, p: Su2CoherentParams, bs1, bs2, phi, scenario="a", phi_l=None, moments=None) -> np.ndarray:
    """Closed-form Delta phi over an array of phases."""
    scheme = Scheme(scheme)
    scenario = Scenario(scenario)
    m = input_moments(p) if moments is None else moments
    if scheme is Scheme.SMI:
        return smi_curve(m, bs1, bs2, phi)
    if scheme is Scheme.DI:
        return di_curve(m, bs1, bs2, phi)
    return bh_curve(m, bs1, bs2, phi, phi_l=phi_l, scenario=scenario)


def _point(scheme, scenario, p, bs1, bs2, phi, phi_l=None) -> SensitivityPoint:
    val = sensitivity_curve(scheme, p, bs1, bs2, phi, scenario=scenario, phi_l=phi_l)
    return SensitivityPoint(float(phi), float(val), Scheme(scheme), Scenario(scenario))


def sensitivity_smi(p, bs1, bs2, phi, scenario="a") -> SensitivityPoint:
    return _point(Scheme.SMI, scenario, p, bs1, bs2, phi)


def sensitivity_di(p, bs1, bs2, phi, scenario="a") -> SensitivityPoint:
    return _point(Scheme.DI, scenario, p, bs1, bs2, phi)


def sensitivity_bh(p, bs1, bs2, phi, phi_l=None, scenario="a") -> SensitivityPoint:
    return _point(Scheme.BH, _bh_scenario(scenario), p, bs1, bs2, phi, phi_l=phi_l)


def _observable_stats(out: TwoModeState, observable: Observable, phi_l: float):
    if observable is Observable.N4:
        mean = expect_number(out, 0)
        return mean, expect_number_sq(out, 0) - mean**2
    if observable is Observable.ND:
        mean = expect_diagonal(out, lambda a, b: a - b)
        return mean, expect_diagonal(out, lambda a, b: (a - b) ** 2) - mean**2
    rot = np.exp(-1j * phi_l)
    b = expect_lowering(out, 0)
    mean = (rot * b).real
    # b b^dag = n + 1 exactly, independent of truncation
    second = 0.5 * (rot * rot * expect_lowering_sq(out, 0)).real + 0.25 * (2 * expect_number(out, 0) + 1)
    return mean, second - mean**2


def sensitivity_oracle(
    state: TwoModeState,
    bs1: BeamSplitter,
    bs2: BeamSplitter,
    scenario,
    phi: float,
    observable,
    phi_l: float | None = None,
    h: float = DEFAULT_H,
) -> float:
    """Delta D / |d<D>/d phi| on the simulated output state.

    The slope is a Richardson-improved central difference; the local phase
    (for ``Y``) stays at its operating value while phi is varied.
    """
    if not H_MIN <= h <= H_MAX:
        raise ValueError(f"finite-difference step must lie in [{H_MIN}, {H_MAX}], got {h!r}")
    scenario = Scenario(scenario)
    observable = Observable(observable)
    phi_l = phi if phi_l is None else phi_l

    def stats(x):
        out = propagate(state, bs1, PhaseConfig(scenario, x), bs2)
        return _observable_stats(out, observable, phi_l)

    _, var = stats(phi)

    lo, hi, lo2, hi2 = (stats(x)[0] for x in (phi - h, phi + h, phi - h / 2, phi + h / 2))
    d1 = (hi - lo) / (2 * h)
    d2 = (hi2 - lo2) / h
    slope = (4 * d2 - d1) / 3
    # below the rounding floor of the difference quotients the slope is noise
    floor = ORACLE_NOISE_ULPS * np.finfo(float).eps * max(abs(lo), abs(hi), abs(lo2), abs(hi2), 1.0) / h
    if abs(slope) <= floor:
        return DIVERGENT
    return math.sqrt(max(var, 0.0)) / abs(slope)


def golden_section(fn, a: float, b: float, tol: float = GOLDEN_TOL) -> float:
    """Minimizer of a unimodal ``fn`` on [a, b]; stops once the bracket is narrower than ``tol``."""
    inv_phi = (math.sqrt(5) - 1) / 2
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        # ties keep the left part, so the result leans to smaller phi
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return c if fc <= fd else d


def optimize_phase(scheme, scenario, p: Su2CoherentParams, bs1, bs2, phi_l=None) -> PhaseOptimum:
    """Best operating phase in (0, 2 pi): uniform scan, then golden-section refinement.

    Returns a no-signal optimum (``phi_opt=None``, infinite sensitivity) when
    every scanned point diverges.
    """
    scheme, scenario = Scheme(scheme), Scenario(scenario)
    m = input_moments(p)
    step = 2 * math.pi / SCAN_POINTS
    grid = (np.arange(SCAN_POINTS) + 0.5) * step
    values = sensitivity_curve(scheme, p, bs1, bs2, grid, scenario=scenario, phi_l=phi_l, moments=m)
    if not np.any(np.isfinite(values)):
        return PhaseOptimum(None, DIVERGENT)
    k = int(np.argmin(values))

    def fn(x):
        return float(sensitivity_curve(scheme, p, bs1, bs2, x, scenario=scenario, phi_l=phi_l, moments=m))

    lo = max(grid[k] - step, 0.0)
    hi = min(grid[k] + step, 2 * math.pi)
    x = golden_section(fn, lo, hi)
    fx = fn(x)
    if not fx < values[k]:
        return PhaseOptimum(float(grid[k]), float(values[k]))
    return PhaseOptimum(float(x), fx)


def qcrb_reference(scheme, scenario, p: Su2CoherentParams, bs1: BeamSplitter) -> float:
    return qfi_report_su2(p, bs1).qcrb_for(reference_scenario(scheme, scenario))

