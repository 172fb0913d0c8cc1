"""Closed-form versus oracle checks, run by ``su2mzi verify``.

Each suite draws its random points from one seeded generator and reports the
largest deviation it saw; a suite passes when that deviation is within its
tolerance. Nothing here depends on wall-clock time or thread scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import binom

from .detection import (
    Observable,
    Scheme,
    coeffs_di,
    coeffs_smi,
    qcrb_reference,
    sensitivity_curve,
    sensitivity_oracle,
)
from .fock import FockState, ModeMoments, expect_number, tensor
from .interferometer import BeamSplitter, PhaseConfig, Scenario, propagate
from .qfi import qfi_oracle, qfi_report_su2, qfim_general, qfim_oracle
from .states import Su2CoherentParams, input_state, su2_coherent

DEFAULT_TOLERANCES = {
    "binomial_law": 1e-12,
    "qfi_closed_vs_oracle": 1e-6,
    "qfim_general_vs_oracle": 1e-6,
    "detection_closed_vs_oracle": 1e-5,
    "identities": 1e-12,
    "crb_dominance": 1e-9,
}

OBSERVABLE_OF = {Scheme.SMI: Observable.N4, Scheme.DI: Observable.ND, Scheme.BH: Observable.Y}


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    points: int

    def as_dict(self) -> dict:
        return asdict(self)


def _result(name, deviations, tolerance) -> SuiteResult:
    worst = float(max(deviations)) if len(deviations) else 0.0
    return SuiteResult(name, bool(worst <= tolerance), worst, float(tolerance), len(deviations))


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def random_params(rng: np.random.Generator, max_two_j: int = 6, max_abs_lambda: float = 3.0) -> Su2CoherentParams:
    two_j = int(rng.integers(1, max_two_j + 1))
    lam = rng.uniform(0.05, max_abs_lambda) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    return Su2CoherentParams(two_j / 2, complex(lam))


def random_splitter(rng: np.random.Generator, lo: float = 0.05, hi: float = 0.95) -> BeamSplitter:
    return BeamSplitter.from_tau_sq(rng.uniform(lo, hi))


def random_fock(rng: np.random.Generator, cutoff: int) -> FockState:
    return FockState.normalized(rng.normal(size=cutoff + 1) + 1j * rng.normal(size=cutoff + 1))


def check_binomial_law(tolerance: float) -> SuiteResult:
    devs = []
    for j in (0.5, 1, 1.5, 2, 3):
        for mag in (0.1, 0.5, 1.0, 2.0, 10.0):
            p = Su2CoherentParams(j, mag)
            ref = binom.pmf(np.arange(p.two_j + 1), p.two_j, p.binomial_p)
            devs.append(np.max(np.abs(su2_coherent(p).probabilities() - ref)))
    return _result("binomial_law", devs, tolerance)


def check_qfi(rng, n: int, tolerance: float, pool) -> SuiteResult:
    draws = [(random_params(rng), random_splitter(rng)) for _ in range(n)]

    def one(draw):
        p, bs1 = draw
        rep = qfi_report_su2(p, bs1)
        s = input_state(p)
        return max(
            _rel(rep.f_a, qfi_oracle(s, bs1, "a")),
            _rel(rep.f_b, qfi_oracle(s, bs1, "b")),
            _rel(rep.f_c, qfi_oracle(s, bs1, "c")),
        )

    return _result("qfi_closed_vs_oracle", list(pool.map(one, draws)), tolerance)


def check_qfim_general(rng, n: int, tolerance: float, pool) -> SuiteResult:
    draws = []
    for _ in range(n):
        c0, c1 = (int(x) for x in rng.integers(1, 4, size=2))
        draws.append((random_fock(rng, c0), random_fock(rng, c1), random_splitter(rng)))

    def one(draw):
        a, b, bs1 = draw
        cut = a.cutoff + b.cutoff
        s = tensor(a.padded(cut), b.padded(cut))
        closed = qfim_general(ModeMoments.of(s, 0), ModeMoments.of(s, 1), bs1)
        oracle = qfim_oracle(s, bs1)
        scale = max(abs(oracle.f_ss), abs(oracle.f_dd), 1e-300)
        return max(
            abs(closed.f_ss - oracle.f_ss) / scale,
            abs(closed.f_dd - oracle.f_dd) / scale,
            abs(closed.f_sd - oracle.f_sd) / scale,
        )

    return _result("qfim_general_vs_oracle", list(pool.map(one, draws)), tolerance)


def detection_draws(rng, n: int):
    """Random (scheme, scenario, params, bs1, bs2, phi) points away from the poles."""
    out = []
    cases = [(Scheme.SMI, Scenario.SINGLE_ARM), (Scheme.DI, Scenario.SINGLE_ARM), (Scheme.BH, Scenario.SINGLE_ARM), (Scheme.BH, Scenario.SYMMETRIC)]
    for scheme, scenario in cases:
        count = 0
        while count < n:
            p = random_params(rng)
            bs1, bs2 = random_splitter(rng), random_splitter(rng)
            phi = rng.uniform(0.1, 2 * np.pi - 0.1)
            if abs(np.sin(phi)) < 0.1:
                continue
            val = float(sensitivity_curve(scheme, p, bs1, bs2, phi, scenario=scenario))
            # keep clear of near-poles, where a relative comparison measures only rounding
            if not math.isfinite(val) or val > 1e4:
                continue
            out.append((scheme, scenario, p, bs1, bs2, phi, val))
            count += 1
    return out


def check_detection(rng, n: int, tolerance: float, pool) -> SuiteResult:
    draws = detection_draws(rng, n)

    def one(draw):
        scheme, scenario, p, bs1, bs2, phi, val = draw
        oracle = sensitivity_oracle(input_state(p), bs1, bs2, scenario, phi, OBSERVABLE_OF[scheme])
        return _rel(val, oracle)

    return _result("detection_closed_vs_oracle", list(pool.map(one, draws)), tolerance)


def check_identities(rng, n: int, tolerance: float) -> SuiteResult:
    devs = []
    for _ in range(n):
        bs1, bs2 = random_splitter(rng, 0.0, 1.0), random_splitter(rng, 0.0, 1.0)
        phi = rng.uniform(0, 2 * np.pi)
        d = coeffs_di(bs1, bs2, phi)
        s = coeffs_smi(bs1, bs2, phi)
        devs.append(abs(d.ad**2 + abs(d.cd) ** 2 - 1.0))
        devs.append(abs(s.a0 + s.a1 - 1.0))
    for _ in range(max(n // 20, 1)):
        p = random_params(rng)
        bs1, bs2 = random_splitter(rng, 0.0, 1.0), random_splitter(rng, 0.0, 1.0)
        phi = rng.uniform(0, 2 * np.pi)
        s = input_state(p)
        out = propagate(s, bs1, PhaseConfig.single_arm(phi), bs2)
        before = expect_number(s, 0) + expect_number(s, 1)
        devs.append(abs(expect_number(out, 0) + expect_number(out, 1) - before) / max(before, 1.0))
        devs.append(np.max(np.abs(out.total_number_distribution() - s.total_number_distribution())))
        # intensity schemes see the same counts for the single-arm and two-parameter placements
        two = propagate(s, bs1, PhaseConfig.two_param(phi, 0.0), bs2)
        devs.append(np.max(np.abs(np.abs(out.amplitudes) ** 2 - np.abs(two.amplitudes) ** 2)))
    return _result("identities", devs, tolerance)


def check_crb(rng, n: int, tolerance: float) -> SuiteResult:
    devs = []
    cases = [(Scheme.SMI, Scenario.SINGLE_ARM), (Scheme.DI, Scenario.SINGLE_ARM), (Scheme.BH, Scenario.SINGLE_ARM), (Scheme.BH, Scenario.SYMMETRIC)]
    for k in range(n):
        scheme, scenario = cases[k % len(cases)]
        p = random_params(rng, max_abs_lambda=5.0)
        bs1, bs2 = random_splitter(rng, 0.0, 1.0), random_splitter(rng, 0.0, 1.0)
        phi = rng.uniform(0, 2 * np.pi)
        phi_l = None if rng.uniform() < 0.5 else rng.uniform(0, 2 * np.pi)
        val = float(sensitivity_curve(scheme, p, bs1, bs2, phi, scenario=scenario, phi_l=phi_l))
        bound = qcrb_reference(scheme, scenario, p, bs1)
        # a positive deviation is how far below the bound the sensitivity fell
        devs.append(max(bound - val, 0.0) if math.isfinite(bound) else 0.0)
    return _result("crb_dominance", devs, tolerance)


def run_suites(seed: int, tolerance: float | None = None, samples: int = 40, workers: int = 1) -> dict:
    """Run every suite and return a JSON-ready report."""
    tol = {k: (v if tolerance is None else tolerance) for k, v in DEFAULT_TOLERANCES.items()}
    # one child generator per suite, so suites do not shift each other's draws
    streams = np.random.SeedSequence(seed).spawn(5)
    rngs = [np.random.default_rng(s) for s in streams]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = [
            check_binomial_law(tol["binomial_law"]),
            check_qfi(rngs[0], samples, tol["qfi_closed_vs_oracle"], pool),
            check_qfim_general(rngs[1], samples, tol["qfim_general_vs_oracle"], pool),
            check_detection(rngs[2], max(samples // 4, 1), tol["detection_closed_vs_oracle"], pool),
            check_identities(rngs[3], 25 * samples, tol["identities"]),
            check_crb(rngs[4], 25 * samples, tol["crb_dominance"]),
        ]
    return {
        "passed": all(r.passed for r in results),
        "seed": seed,
        "suites": {r.name: r.as_dict() for r in results},
    }
