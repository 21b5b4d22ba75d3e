import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_imrt.errors import EmptyStructure
from robust_imrt.evaluation import (
    ClinicalGoals,
    PlanObjective,
    clinical_penalty,
    dose_stats,
    dvh,
    dvh_from_values,
    robust_fitness,
)
from robust_imrt.motion import make_states, make_uncertainty_set, validate_pdf
from robust_imrt.phantom import LABEL_CODES, DoseInfluence, FluencePlan, Phantom, _shift_index, expected_dose

T, L, H, N = (LABEL_CODES[k] for k in ("tumor", "left_lung", "heart", "normal"))


def phantom_of(labels):
    return Phantom(np.array(labels, dtype=np.int8), 3.0)


def check_dvh_invariants(curve):
    f = curve.volume_fraction
    assert f[0] == 1.0
    assert np.all(np.diff(f) <= 0)
    assert np.all((f >= 0) & (f <= 1))
    assert np.all(np.diff(curve.bin_edges_gy) > 0)


class TestDvh:
    def test_uniform(self):
        p = phantom_of([[T, T], [T, N]])
        curve = dvh(np.array([76.0, 76.0, 76.0, 5.0]), p, "tumor")
        assert curve.bin_edges_gy[-1] == 76.0
        assert np.all(curve.volume_fraction[curve.bin_edges_gy <= 76.0] == 1.0)
        check_dvh_invariants(curve)

    def test_two_voxels(self):
        p = phantom_of([[T, T]] + [[N, N]] * 3)
        curve = dvh(np.array([70.0, 80.0, 0, 0, 0, 0, 0, 0]), p, "tumor")
        i = int(np.flatnonzero(curve.bin_edges_gy == 75.0)[0])
        assert curve.volume_fraction[i] == 0.5
        assert curve.bin_edges_gy[1] - curve.bin_edges_gy[0] == pytest.approx(0.1)

    def test_missing_structure(self):
        p = phantom_of([[T, N]])
        with pytest.raises(EmptyStructure):
            dvh(np.zeros(2), p, "heart")

    def test_zero_dose(self):
        curve = dvh_from_values(np.zeros(5))
        np.testing.assert_array_equal(curve.bin_edges_gy, [0.0])
        np.testing.assert_array_equal(curve.volume_fraction, [1.0])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(0, 120, allow_nan=False), min_size=1, max_size=200))
    def test_invariants(self, doses):
        check_dvh_invariants(dvh_from_values(np.array(doses)))


class TestDoseStats:
    def test_uniform(self):
        p = phantom_of([[T, T], [N, N]])
        s = dose_stats(np.array([76.0, 76.0, 0, 0]), p, "tumor")
        assert (s.mean_gy, s.min_gy, s.max_gy, s.d95_gy) == (76.0, 76.0, 76.0, 76.0)

    def test_two_voxels(self):
        p = phantom_of([[T, T]])
        s = dose_stats(np.array([70.0, 80.0]), p, "tumor")
        assert (s.mean_gy, s.min_gy, s.max_gy) == (75.0, 70.0, 80.0)

    def test_d95_twenty_voxels(self):
        # thresholds up to 10.0 cover 20/20 voxels, 10.1 .. 76.0 cover 19/20 = 0.95,
        # so the largest threshold with fraction >= 0.95 is 76.0
        p = phantom_of([[T] * 20])
        d = np.full(20, 76.0)
        d[3] = 10.0
        assert dose_stats(d, p, "tumor").d95_gy == 76.0

    def test_empty(self):
        with pytest.raises(EmptyStructure):
            dose_stats(np.zeros(2), phantom_of([[T, N]]), "left_lung")

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 100), min_size=1, max_size=60))
    def test_ordering(self, doses):
        p = phantom_of([[T] * len(doses)])
        s = dose_stats(np.array(doses), p, "tumor")
        assert s.min_gy <= s.mean_gy + 1e-9 and s.mean_gy <= s.max_gy + 1e-9
        assert s.min_gy - 0.1 <= s.d95_gy <= s.max_gy


class TestPenalty:
    def test_inside_band(self):
        p = phantom_of([[T, T, L, H]])
        assert clinical_penalty(np.array([76.0, 76.0, 0, 0]), p, ClinicalGoals()) == 0.0

    def test_underdose(self):
        p = phantom_of([[T, L, H, N]])
        assert clinical_penalty(np.array([70.0, 0, 0, 0]), p, ClinicalGoals()) == pytest.approx(400.0)

    def test_lung_mean(self):
        p = phantom_of([[T, L, L, H]])
        assert clinical_penalty(np.array([76.0, 30.0, 30.0, 0]), p, ClinicalGoals()) == pytest.approx(30.0)

    def test_overdose(self):
        p = phantom_of([[T, L, H]])
        assert clinical_penalty(np.array([82.0, 0, 0]), p, ClinicalGoals()) == pytest.approx(50 * 4)

    def test_band_validation(self):
        with pytest.raises(ValueError):
            ClinicalGoals(tumor_low_gy=80, tumor_high_gy=72)
        with pytest.raises(ValueError):
            ClinicalGoals(w_lung=-1)

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(0, 150), min_size=4, max_size=4),
        st.floats(0.01, 100),
    )
    def test_weight_scaling(self, doses, c):
        p = phantom_of([[T, T, L, H]])
        g = ClinicalGoals()
        gc = ClinicalGoals(72, 80, c * g.w_under, c * g.w_over, c * g.w_lung, c * g.w_heart)
        d = np.array(doses)
        assert clinical_penalty(d, p, gc) == pytest.approx(c * clinical_penalty(d, p, g), rel=1e-12, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 150), min_size=4, max_size=4))
    def test_zero_iff_in_band_and_spared(self, doses):
        p = phantom_of([[T, T, L, H]])
        d = np.array(doses)
        in_band = np.all((d[:2] >= 72) & (d[:2] <= 80)) and d[2] == 0 and d[3] == 0
        assert (clinical_penalty(d, p, ClinicalGoals()) == 0) == in_band


def toy_instance():
    """2x2 phantom, 2 beamlets, 2 states (0 and +3 mm = one row)."""
    labels = [[T, L], [H, N]]
    phantom = phantom_of(labels)
    states = make_states([0.0, 3.0])
    base = np.array([[40.0, 10.0], [5.0, 20.0], [30.0, 2.0], [1.0, 1.0]])
    src = np.stack([_shift_index((2, 2), 0), _shift_index((2, 2), 1)])
    inf = DoseInfluence(base, states, (0, 1), src, (2, 2))
    return phantom, states, inf


class TestRobustFitness:
    def test_toy_against_direct_summation(self):
        phantom, states, inf = toy_instance()
        nominal = validate_pdf([0.7, 0.3], states)
        uset = make_uncertainty_set(nominal, [0.2, 0.1], [0.1, 0.2])
        goals = ClinicalGoals()
        w = np.array([1.5, 0.8])

        # direct per-state dose with explicit index arithmetic
        def state_dose(s):
            out = np.zeros(4)
            for r in range(2):
                for c in range(2):
                    sr = r - s
                    if 0 <= sr < 2:
                        out[r * 2 + c] = base_row(sr * 2 + c) @ w
            return out

        def base_row(i):
            return inf.base[i]

        doses = [state_dose(0), state_dose(1)]

        def penalty(p0):
            d = p0 * doses[0] + (1 - p0) * doses[1]
            t, lung, heart = d[0], d[1], d[2]
            return 100 * max(0, 72 - t) ** 2 + 50 * max(0, t - 80) ** 2 + lung + 2 * heart

        # two states: the set is a segment, extremes sit at its endpoints
        candidates = [0.7, 0.7 - 0.2, 0.7 + 0.1]
        oracle = max(penalty(p0) for p0 in candidates)
        assert robust_fitness(FluencePlan(w), inf, uset, goals, phantom) == pytest.approx(oracle, rel=1e-12)

    def test_zero_bars_equals_nominal_penalty(self, influence64, phantom64, nominal, goals, rng):
        zero = make_uncertainty_set(nominal, [0] * 5, [0] * 5)
        w = rng.uniform(0, 2, influence64.n_beamlets)
        d = expected_dose(influence64, w, nominal)
        assert robust_fitness(w, influence64, zero, goals, phantom64) == pytest.approx(
            clinical_penalty(d, phantom64, goals), rel=1e-12
        )

    def test_dominates_nominal(self, influence64, phantom64, robust_set, nominal, goals, rng):
        for _ in range(20):
            w = rng.uniform(0, rng.uniform(0.2, 3), influence64.n_beamlets)
            d = expected_dose(influence64, w, nominal)
            assert robust_fitness(w, influence64, robust_set, goals, phantom64) >= clinical_penalty(d, phantom64, goals)

    def test_objective_matches_full_grid_path(self, influence64, phantom64, robust_set, goals, rng):
        obj = PlanObjective(influence64, phantom64, robust_set, goals)
        w = rng.uniform(0, 2, influence64.n_beamlets)
        full = max(
            clinical_penalty(expected_dose(influence64, w, p), phantom64, goals) for p in obj.scenarios(w)
        )
        assert obj(w) == pytest.approx(full, rel=1e-12)

    def test_underdose_scenario_lowers_tumor_mean(self, influence64, phantom64, robust_set, goals, rng):
        obj = PlanObjective(influence64, phantom64, robust_set, goals)
        w = rng.uniform(0, 2, influence64.n_beamlets)
        sc = obj.extreme_scenarios(w)
        tumor = phantom64.mask("tumor")
        means = {k: expected_dose(influence64, w, p)[tumor].mean() for k, p in sc.items()}
        assert means["underdose"] <= means["nominal"] + 1e-9 <= means["overdose"] + 2e-9

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31), st.floats(1.0, 3.0))
    def test_monotone_in_proportional_bars(self, influence64, phantom64, nominal, goals, seed, c):
        r = np.random.default_rng(seed)
        w = r.uniform(0, r.uniform(0.3, 3), influence64.n_beamlets)
        m = nominal.mass
        lower = r.uniform(0, 1, 5) * m / 3
        upper = r.uniform(0, 1, 5) * (1 - m) / 3
        small = make_uncertainty_set(nominal, lower, upper)
        large = make_uncertainty_set(nominal, c * lower, c * upper)
        f_small = robust_fitness(w, influence64, small, goals, phantom64)
        f_large = robust_fitness(w, influence64, large, goals, phantom64)
        assert f_large >= f_small * (1 - 1e-12)

    def test_deterministic(self, influence64, phantom64, robust_set, goals, rng):
        w = rng.uniform(0, 2, influence64.n_beamlets)
        assert robust_fitness(w, influence64, robust_set, goals, phantom64) == robust_fitness(
            w.copy(), influence64, robust_set, goals, phantom64
        )
