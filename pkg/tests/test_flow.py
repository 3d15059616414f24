import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crcensus.critical import CriticalPointProfile, local_field_eval
from crcensus.errors import DomainError, RegimeError
from crcensus.flow import (Bubble, BubbleEnsemble, FateKind, FlowModel, balanced_alpha,
                           d_epsilon_d_lambda_i, energy_lambda_gradient, epsilon_ij,
                           integrate_flow, make_ensemble, normal_form_energy, pair_distance,
                           pseudo_gradient_field, reduced_energy)
from crcensus.heisenberg import HeisenbergPoint, SpherePoint

pos = st.floats(1e-2, 1e4)


def model_for(constants, *profiles, **kw):
    return FlowModel({p.id: p for p in profiles}, constants, **kw)


K1A = CriticalPointProfile("a", SpherePoint(1, 0), 2.0, (-10, -10, -10), 1.0)
K1B = CriticalPointProfile("b", SpherePoint(-1, 0), 2.0, (-10, -10, -10), 1.0)
K2 = CriticalPointProfile("k2", SpherePoint(0, 1), 3.0, (-1.0, 2.0, -1.0), 1.5)
NEITHER = CriticalPointProfile("n", SpherePoint(0.6, 0.8j), 2.0, (1.0, 2.0, 0.5), 2.0)


class TestEpsilon:
    def test_examples(self):
        assert epsilon_ij(3.0, 3.0, 0.0) == 0.5
        assert epsilon_ij(100.0, 100.0, 1.0) == pytest.approx(1 / 10002, rel=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(pos, pos, st.floats(0, 2))
    def test_symmetric(self, li, lj, d):
        assert epsilon_ij(li, lj, d) == pytest.approx(epsilon_ij(lj, li, d), rel=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(1, 1e4), st.floats(1, 1e4), st.floats(0, 2))
    def test_derivative_matches_differences(self, li, lj, d):
        h = 1e-5 * li
        fd = (epsilon_ij(li + h, lj, d) - epsilon_ij(li - h, lj, d)) / (2 * h)
        an = d_epsilon_d_lambda_i(li, lj, d)
        assert fd == pytest.approx(an, rel=1e-8, abs=1e-8 * abs(epsilon_ij(li, lj, d)) / li)


class TestEnsemble:
    def test_distinct_profiles(self):
        with pytest.raises(DomainError):
            make_ensemble(["a", "a"])

    def test_positive_concentration(self):
        with pytest.raises(DomainError):
            BubbleEnsemble((Bubble(1.0, HeisenbergPoint(), 0.0, "a"),))

    def test_balanced_alpha(self, constants):
        m = model_for(constants, K1A, K2)
        ens = balanced_alpha(make_ensemble(["a", "k2"], [50.0, 60.0],
                                           [HeisenbergPoint(0.1), HeisenbergPoint(0.05j, 0.01)]), m)
        for b in ens.bubbles:
            k = local_field_eval(m.profiles[b.profile_id], b.a).K
            assert b.alpha**2 * k == pytest.approx(1.0, rel=1e-14)

    def test_pair_distance_is_sphere_gauge(self, constants):
        m = model_for(constants, K1A, K1B)
        ens = make_ensemble(["a", "b"])
        assert pair_distance(ens, m, 0, 1) == pytest.approx(math.sqrt(2.0), rel=1e-14)


class TestEnergy:
    @pytest.mark.parametrize("prof", [K1A, K2])
    def test_single_bubble_limit(self, constants, prof):
        m = model_for(constants, prof)
        target = constants[2.0].S.value / math.sqrt(prof.k_value)
        ens = balanced_alpha(make_ensemble([prof.id], 1e6), m)
        assert reduced_energy(ens, m) == pytest.approx(target, rel=1e-9)

    @pytest.mark.parametrize("prof", [K1A, K2])
    def test_decreasing_in_lambda_on_k1_k2(self, constants, prof):
        m = model_for(constants, prof)
        js = [reduced_energy(balanced_alpha(make_ensemble([prof.id], lam), m), m)
              for lam in np.geomspace(10, 1e4, 20)]
        assert all(b < a for a, b in zip(js, js[1:]))

    def test_interaction_coefficient_negative_at_balance(self, constants):
        # move the second point along a great circle; only eps changes
        js, eps = [], []
        for s in (0.6, 0.8, 1.0):
            q = CriticalPointProfile("q", SpherePoint(math.cos(s), math.sin(s)), 2.0,
                                     (-10, -10, -10), 1.0)
            m = model_for(constants, K1A, q)
            ens = balanced_alpha(make_ensemble(["a", "q"], 30.0), m)
            js.append(reduced_energy(ens, m))
            eps.append(epsilon_ij(30.0, 30.0, pair_distance(ens, m, 0, 1)))
        slopes = np.diff(js) / np.diff(eps)
        assert np.all(slopes < 0)

    def test_regime_violation(self, constants):
        m = model_for(constants, K1A, regime_C_prime=1e-3)
        ens = balanced_alpha(make_ensemble(["a"], 100.0, [HeisenbergPoint(0.1)]), m)
        with pytest.raises(RegimeError) as info:
            reduced_energy(ens, m)
        assert info.value.failed
        reduced_energy(ens, m, check_regime=False)

    def test_lambda_gradient_matches_differences(self, constants):
        m = model_for(constants, K1A, K1B, K2)
        ens = balanced_alpha(make_ensemble(["a", "b", "k2"], [40.0, 55.0, 70.0]), m)
        self_part, inter_part = energy_lambda_gradient(ens, m)
        for j in range(3):
            def J(lam):
                bs = list(ens.bubbles)
                bs[j] = Bubble(bs[j].alpha, bs[j].a, lam, bs[j].profile_id)
                return reduced_energy(BubbleEnsemble(tuple(bs)), m, False)
            lam = ens.bubbles[j].lam

            def central(h):
                return (J(lam + h) - J(lam - h)) / (2 * h)

            # Richardson step: J is O(100) while dJ/dlambda is O(1e-6)
            h = 0.02 * lam
            fd = (4 * central(h / 2) - central(h)) / 3
            assert fd == pytest.approx(self_part[j] + inter_part[j], rel=1e-5)


class TestField:
    @pytest.mark.parametrize("prof", [K1A, K2])
    def test_single_bubble_at_critical_point(self, constants, prof):
        m = model_for(constants, prof)
        f = pseudo_gradient_field(make_ensemble([prof.id], 100.0), m)
        assert np.all(np.abs(f.a_dot) < 1e-12)
        assert f.lam_dot[0] > 0

    def test_neither_point_loses_concentration(self, constants):
        m = model_for(constants, NEITHER)
        f = pseudo_gradient_field(make_ensemble(["n"], 100.0), m)
        assert f.lam_dot[0] < 0

    def test_far_pair_both_concentrate(self, constants):
        m = model_for(constants, K1A, K1B)
        f = pseudo_gradient_field(make_ensemble(["a", "b"], [200.0, 300.0]), m)
        assert np.all(f.lam_dot > 0)
        assert np.all(np.abs(f.lam_dot_interaction) < np.abs(f.lam_dot_self))

    def test_matches_energy_differences_at_1e3(self, constants):
        m = model_for(constants, K1A, K1B, K2)
        ens = make_ensemble(["a", "b", "k2"], [1e3, 1.3e3, 0.8e3])
        f = pseudo_gradient_field(ens, m)
        bal = balanced_alpha(ens, m)
        for j, b in enumerate(bal.bubbles):
            h = 1e-3 * b.lam
            up = list(bal.bubbles)
            dn = list(bal.bubbles)
            up[j] = Bubble(b.alpha, b.a, b.lam + h, b.profile_id)
            dn[j] = Bubble(b.alpha, b.a, b.lam - h, b.profile_id)
            dJ = (reduced_energy(BubbleEnsemble(tuple(up)), m, False)
                  - reduced_energy(BubbleEnsemble(tuple(dn)), m, False)) / (2 * h)
            assert f.lam_dot[j] == pytest.approx(-b.lam**2 * dJ, rel=0.05)
        for j, b in enumerate(bal.bubbles):
            for axis in range(3):
                h = 1e-4
                x = np.zeros(3)
                x[axis] = h
                shifted = []
                for sign in (1, -1):
                    bs = list(bal.bubbles)
                    a = HeisenbergPoint(complex(sign * x[0], sign * x[1]), sign * x[2])
                    bs[j] = Bubble(1.0, a, b.lam, b.profile_id)
                    shifted.append(reduced_energy(balanced_alpha(BubbleEnsemble(tuple(bs)), m), m,
                                                  False))
                fd = -(shifted[0] - shifted[1]) / (2 * h) / b.lam**2
                assert f.a_dot[j, axis] == pytest.approx(fd, rel=0.05, abs=1e-14)

    def test_chart_exit(self, constants):
        m = model_for(constants, K1A)
        with pytest.raises(DomainError):
            pseudo_gradient_field(make_ensemble(["a"], 100.0, [HeisenbergPoint(0.6)]), m)


class TestNormalForm:
    def test_limit_and_monotone(self, constants):
        c3 = constants[3.0]
        assert normal_form_energy(K2, 1e8, 0.0, c3) == pytest.approx(
            c3.S.value / math.sqrt(K2.k_value), rel=1e-12)
        vals = [normal_form_energy(K2, lam, 0.0, c3) for lam in np.geomspace(10, 1e4, 30)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_quadratic_in_v(self, c2):
        base = normal_form_energy(K1A, 50.0, 0.0, c2)
        for v in (0.1, 0.5, 2.0):
            assert normal_form_energy(K1A, 50.0, v * v, c2) - base == pytest.approx(v * v, rel=1e-9)

    def test_neither_rejected(self, c2):
        with pytest.raises(DomainError):
            normal_form_energy(NEITHER, 50.0, 0.0, c2)


class TestIntegrate:
    def test_k2_single_blows_up_to_normal_form_limit(self, constants):
        m = model_for(constants, K2)
        traj, fate = integrate_flow(make_ensemble(["k2"], 50.0), m)
        assert fate.kind is FateKind.BLOW_UP and fate.members == ("k2",)
        target = constants[2.0].S.value / math.sqrt(K2.k_value)
        assert traj[-1].lam[0] > 1e4
        assert traj[-1].J == pytest.approx(target, rel=1e-3) and traj[-1].J >= target
        assert all(b.J <= a.J + 1e-12 for a, b in zip(traj, traj[1:]))

    def test_pd_pair_blows_up_with_bounded_ratio(self, constants):
        m = model_for(constants, K1A, K1B)
        traj, fate = integrate_flow(make_ensemble(["a", "b"], [20.0, 30.0]), m)
        assert fate.kind is FateKind.BLOW_UP and set(fate.members) == {"a", "b"}
        ratios = [max(r.lam) / min(r.lam) for r in traj]
        assert max(ratios) <= m.ratio_bound
        assert all(b.J <= a.J + 1e-12 for a, b in zip(traj, traj[1:]))

    def test_neither_never_blows_up(self, constants):
        m = model_for(constants, NEITHER)
        for a in (HeisenbergPoint(), HeisenbergPoint(0.01), HeisenbergPoint(0.02j, 0.01)):
            traj, fate = integrate_flow(make_ensemble(["n"], 50.0, [a]), m)
            assert fate.kind is not FateKind.BLOW_UP
            assert all(b.J <= a_.J + 1e-12 for a_, b in zip(traj, traj[1:]))

    def test_log_and_determinism(self, constants):
        m = model_for(constants, K1A, K1B)
        ens = make_ensemble(["a", "b"], [20.0, 30.0])
        buf = io.StringIO()
        traj, fate = integrate_flow(ens, m, log=buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == len(traj)
        rec = json.loads(lines[-1])
        assert set(rec) == {"time", "J", "alpha", "a", "lambda", "eps"} and len(rec["eps"]) == 1
        again, fate2 = integrate_flow(ens, m)
        assert [r.to_json() for r in again] == [r.to_json() for r in traj]
        assert fate2 == fate

    def test_horizon_stops(self, constants):
        m = model_for(constants, K1A)
        _, fate = integrate_flow(make_ensemble(["a"], 20.0), m, horizon=1e-12)
        assert fate.kind is FateKind.STAGNANT

    def test_lambda_min(self, constants):
        m = model_for(constants, K1A)
        with pytest.raises(DomainError):
            integrate_flow(make_ensemble(["a"], 5.0), m)

    @pytest.mark.parametrize("a", [HeisenbergPoint(1e-4, 1e-4), HeisenbergPoint(0.01j, -0.01)])
    def test_k1_single_off_centre_blows_up(self, constants, a):
        # the |t| kink at beta = 2 must neither stall the concentration nor trip the regime check
        m = model_for(constants, K1A)
        traj, fate = integrate_flow(make_ensemble(["a"], 50.0, [a]), m)
        assert fate.kind is FateKind.BLOW_UP
        assert traj[-1].a[0][2] == 0.0
        assert all(b.J <= a_.J + 1e-12 for a_, b in zip(traj, traj[1:]))

    def test_k2_unstable_direction_leaves(self, constants):
        m = model_for(constants, K2)
        _, fate = integrate_flow(make_ensemble(["k2"], 50.0, [HeisenbergPoint(0.01j)]), m)
        assert fate.kind is FateKind.EXIT

    def test_k2_stable_offset_still_blows_up(self, constants):
        m = model_for(constants, K2)
        _, fate = integrate_flow(make_ensemble(["k2"], 50.0, [HeisenbergPoint(0.01, 0.01)]), m)
        assert fate.kind is FateKind.BLOW_UP
