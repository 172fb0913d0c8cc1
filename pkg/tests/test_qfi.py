import math
import sys

import numpy as np
import pytest
from hypothesis import given, settings

from su2mzi.fock import ModeMoments, expect_number, expect_number_sq, tensor, vacuum
from su2mzi.interferometer import BeamSplitter, apply_bs
from su2mzi.qfi import (
    Qfim,
    QfiReport,
    qcrb,
    qfi_oracle,
    qfi_report_su2,
    qfim_general,
    qfim_oracle,
    qfim_su2,
)
from su2mzi.states import Su2CoherentParams, input_moments, input_state

from .helpers import inner_tau_sqs, random_fock, su2_params

SPIN_ONE = Su2CoherentParams(1, 1)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


class TestClosedForms:
    def test_vacuum_input(self):
        m = qfim_su2(Su2CoherentParams(1, 0), BeamSplitter.balanced())
        assert (m.f_ss, m.f_dd, m.f_sd) == (0, 0, 0)
        r = qfi_report_su2(Su2CoherentParams(1, 0), BeamSplitter.balanced())
        assert r.degenerate and r.f_c == 0 and math.isinf(r.qcrb_c)

    def test_balanced_spin_one(self):
        m = qfim_su2(SPIN_ONE, BeamSplitter.balanced())
        assert m.f_ss == pytest.approx(0.5)
        assert m.f_dd == pytest.approx(1.0)
        assert m.f_sd == pytest.approx(0.0, abs=1e-15)
        r = qfi_report_su2(SPIN_ONE, BeamSplitter.balanced())
        assert r.f_c == pytest.approx(1.0)
        assert r.f_a == pytest.approx(1.5)
        assert r.f_sql == pytest.approx(1.0)
        assert r.qcrb_c == pytest.approx(r.sql)

    def test_balanced_symmetric_includes_arm_correlation(self):
        # Var(n2 - n3) after the splitter; the arm-variance sum alone would give 0.75
        r = qfi_report_su2(SPIN_ONE, BeamSplitter.balanced())
        assert r.f_b == pytest.approx(1.0)
        assert qfi_oracle(input_state(SPIN_ONE), BeamSplitter.balanced(), "b") == pytest.approx(1.0, rel=1e-9)

    def test_transparent_splitter(self):
        bs = BeamSplitter(1.0, 0.0)
        m = qfim_su2(SPIN_ONE, bs)
        assert (m.f_ss, m.f_dd, m.f_sd) == pytest.approx((0.5, 0.5, -0.5))
        r = qfi_report_su2(SPIN_ONE, bs)
        assert r.f_c == 0 and r.f_a == pytest.approx(2.0) and r.f_b == pytest.approx(0.5)

    @given(su2_params, inner_tau_sqs)
    @settings(max_examples=80, deadline=None)
    def test_two_routes_to_f_c(self, p, tau_sq):
        bs = BeamSplitter.from_tau_sq(tau_sq)
        m = qfim_su2(p, bs)
        r = qfi_report_su2(p, bs)
        if m.f_ss > 0:
            assert m.schur_dd() == pytest.approx(r.f_c, rel=1e-12, abs=1e-12)
        assert m.single_arm == pytest.approx(r.f_a, rel=1e-12, abs=1e-12)
        assert m.symmetric == pytest.approx(r.f_b, rel=1e-12, abs=1e-12)

    @given(su2_params, inner_tau_sqs)
    @settings(max_examples=80, deadline=None)
    def test_single_arm_dominates_two_param(self, p, tau_sq):
        r = qfi_report_su2(p, BeamSplitter.from_tau_sq(tau_sq))
        assert r.f_a >= r.f_c - 1e-9
        # subnormal F has lost digits, so 1/sqrt(F) is no reference there
        if r.f_a >= sys.float_info.min:
            assert r.qcrb_a == pytest.approx(1 / math.sqrt(r.f_a))

    def test_bounds_survive_underflowing_information(self):
        # j=1/2 gives <n> ~ Var(n) ~ |lam|^2; at balance F_c ~ <n> and F_a ~ 2<n>
        r = qfi_report_su2(Su2CoherentParams(0.5, 1e-200), BeamSplitter.balanced())
        assert r.f_c == 0.0
        assert r.qcrb_c == pytest.approx(1e200, rel=1e-12)
        assert r.sql == pytest.approx(1e200, rel=1e-12)
        assert r.qcrb_a == pytest.approx(1e200 / math.sqrt(2.0), rel=1e-12)

    def test_dominance_grid(self):
        for j in (0.5, 1, 1.5, 2, 2.5, 3):
            for mag in (0.1, 0.5, 1, 2, 5):
                for tau_sq in np.linspace(0.01, 0.99, 25):
                    r = qfi_report_su2(Su2CoherentParams(j, mag), BeamSplitter.from_tau_sq(tau_sq))
                    assert r.f_a >= r.f_c - 1e-9

    @pytest.mark.parametrize("j", [1, 3])
    def test_two_param_symmetric_in_tau_sq(self, j):
        grid = np.linspace(0, 1, 101)
        f_c = np.array([qfi_report_su2(Su2CoherentParams(j, 1), BeamSplitter.from_tau_sq(t)).f_c for t in grid])
        np.testing.assert_allclose(f_c, f_c[::-1], atol=1e-12)
        assert f_c[0] == 0 and f_c[-1] == pytest.approx(0, abs=1e-15)
        assert int(np.argmax(f_c)) == 50

    def test_qcrb(self):
        assert qcrb(4.0) == 0.5
        assert math.isinf(qcrb(0.0))
        assert QfiReport.from_values(1.0, 4.0, 0.0, 1.0).qcrb_for("b") == 0.5

    def test_psd_check(self):
        with pytest.raises(ValueError, match="semidefinite"):
            Qfim(1.0, 1.0, 2.0)
        with pytest.raises(ZeroDivisionError):
            Qfim(0.0, 1.0, 0.0).schur_dd()


class TestGeneral:
    def test_vacuum_pair(self):
        m = qfim_general(ModeMoments.vacuum(), ModeMoments.vacuum(), BeamSplitter.balanced())
        assert (m.f_ss, m.f_dd, m.f_sd) == (0, 0, 0)

    @given(su2_params, inner_tau_sqs)
    @settings(max_examples=60, deadline=None)
    def test_reduces_to_su2(self, p, tau_sq):
        bs = BeamSplitter.from_tau_sq(tau_sq)
        g = qfim_general(ModeMoments.vacuum(), input_moments(p).as_mode_moments(), bs)
        s = qfim_su2(p, bs)
        for a, b in ((g.f_ss, s.f_ss), (g.f_dd, s.f_dd), (g.f_sd, s.f_sd)):
            assert a == pytest.approx(b, abs=1e-12 * max(1.0, abs(s.f_dd)))

    def test_random_product_states_match_oracle(self, rng):
        for _ in range(40):
            a = random_fock(rng, int(rng.integers(1, 4)))
            b = random_fock(rng, int(rng.integers(1, 4)))
            cut = a.cutoff + b.cutoff
            s = tensor(a.padded(cut), b.padded(cut))
            bs = BeamSplitter.from_tau_sq(rng.uniform(0.05, 0.95))
            g = qfim_general(ModeMoments.of(s, 0), ModeMoments.of(s, 1), bs)
            o = qfim_oracle(s, bs)
            scale = max(abs(o.f_ss), abs(o.f_dd))
            assert abs(g.f_ss - o.f_ss) <= 1e-6 * scale
            assert abs(g.f_dd - o.f_dd) <= 1e-6 * scale
            assert abs(g.f_sd - o.f_sd) <= 1e-6 * scale


class TestOracle:
    def test_vacuum_input(self):
        s = input_state(Su2CoherentParams(1, 0))
        for scenario in "abc":
            assert qfi_oracle(s, BeamSplitter.balanced(), scenario) == 0

    def test_single_arm_is_four_times_arm_variance(self):
        p = Su2CoherentParams(1.5, 0.7 + 0.5j)
        bs = BeamSplitter.from_tau_sq(0.35)
        mixed = apply_bs(input_state(p), bs)
        var3 = expect_number_sq(mixed, 1) - expect_number(mixed, 1) ** 2
        assert qfi_oracle(input_state(p), bs, "a") == pytest.approx(4 * var3, rel=1e-6)

    def test_two_param_oracle_matches_product_form(self):
        p = Su2CoherentParams(2, 1.3)
        bs = BeamSplitter.from_tau_sq(0.27)
        want = 4 * bs.tau_sq * bs.r_sq * input_moments(p).mean_n
        assert qfi_oracle(input_state(p), bs, "c") == pytest.approx(want, rel=1e-6)

    @given(su2_params, inner_tau_sqs)
    @settings(max_examples=40, deadline=None)
    def test_closed_forms_match_oracle(self, p, tau_sq):
        bs = BeamSplitter.from_tau_sq(tau_sq)
        r = qfi_report_su2(p, bs)
        s = input_state(p)
        for scenario, closed in (("a", r.f_a), ("b", r.f_b), ("c", r.f_c)):
            assert qfi_oracle(s, bs, scenario) == pytest.approx(closed, rel=1e-6, abs=1e-9)

    def test_independent_of_base_angle(self):
        p = Su2CoherentParams(1.5, 0.9 - 0.3j)
        bs = BeamSplitter.from_tau_sq(0.6)
        s = input_state(p)
        for scenario in "abc":
            lo = qfi_oracle(s, bs, scenario, base_phi=0.3)
            hi = qfi_oracle(s, bs, scenario, base_phi=1.7)
            assert lo == pytest.approx(hi, rel=1e-8)
        m1 = qfim_oracle(s, bs, base=(0.3, 0.3))
        m2 = qfim_oracle(s, bs, base=(1.7, -0.4))
        assert m1.f_sd == pytest.approx(m2.f_sd, rel=1e-8)

    def test_step_halving_is_second_order(self):
        p = Su2CoherentParams(1.5, 0.8 + 0.3j)
        bs = BeamSplitter.from_tau_sq(0.3)
        s = input_state(p)
        exact = qfi_report_su2(p, bs).f_a
        e1 = abs(qfi_oracle(s, bs, "a", h=1e-4, richardson=False) - exact)
        e2 = abs(qfi_oracle(s, bs, "a", h=5e-5, richardson=False) - exact)
        assert e1 / e2 == pytest.approx(4.0, rel=0.05)

    @pytest.mark.parametrize("h", [0.0, 1e-9, 0.1])
    def test_step_range(self, h):
        with pytest.raises(ValueError, match="step"):
            qfi_oracle(input_state(SPIN_ONE), BeamSplitter.balanced(), "a", h=h)

    def test_general_vs_oracle_fails_with_flipped_cross_term(self, rng):
        # guards the sign of the mode-0 coherence term in F_sd: a coherent mode 0
        # makes the flipped expression disagree with the oracle
        a = random_fock(rng, 2)
        b = random_fock(rng, 2)
        s = tensor(a.padded(4), b.padded(4))
        bs = BeamSplitter.from_tau_sq(0.4)
        m0, m1 = ModeMoments.of(s, 0), ModeMoments.of(s, 1)
        g = qfim_general(m0, m1, bs)
        o = qfim_oracle(s, bs)
        flipped = g.f_sd - 2 * 4 * bs.tau_mag * bs.r_mag * ((m0.n_b - m0.n * m0.b) * np.conj(m1.b)).imag
        assert g.f_sd == pytest.approx(o.f_sd, rel=1e-6)
        assert abs(flipped - o.f_sd) > 1e-3
