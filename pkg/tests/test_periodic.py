"""Tests for periodic point detection, attractivity, orbit-tail
decomposition, shadowing, and the Li-Yorke pair scan."""

import numpy as np
import pytest

from noisymaps import gallery
from noisymaps.maps import evaluate, iterate
from noisymaps.periodic import (
    DecompositionError,
    PeriodicOrbit,
    Plateau,
    _orbit,
    classify_attractivity,
    decompose_omega,
    decompose_tree,
    find_periodic_points,
    liyorke_scan,
    orbit_multiplier,
    shadow_candidates,
    shadow_fraction,
    shadow_test,
)
from noisymaps.stochproc import ProcessConfig, simulate, simulate_batch

from conftest import random_pl_map


# ---------------------------------------------------------------------------
# periodic point detection


class TestFindPeriodicPoints:
    def test_tent_fixed_points(self):
        # algebraic oracle: 2x = x gives 0; 2 - 2x = x gives 2/3
        scan = find_periodic_points(gallery.tent(), 1)
        assert scan.plateaus == ()
        pts = scan.points()
        assert len(pts) == 2
        assert pts[0] == pytest.approx(0.0, abs=1e-9)
        assert pts[1] == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert all(o.label == "repelling" for o in scan.orbits)

    def test_tent_fixed_point_multipliers(self):
        scan = find_periodic_points(gallery.tent(), 1)
        mults = {round(o.points[0], 3): o.multiplier for o in scan.orbits}
        # one-sided slope at the left endpoint, interior slope at 2/3
        assert mults[0.0] == pytest.approx(2.0, abs=1e-6)
        assert mults[0.667] == pytest.approx(-2.0, abs=1e-6)

    def test_tent_period_two_orbit(self):
        # algebraic oracle: on (1/4, 1/2) the second iterate is 2 - 4x,
        # and 2 - 4x = x gives 0.4, mapping to 0.8
        scan = find_periodic_points(gallery.tent(), 2)
        assert len(scan.orbits) == 1
        orbit = scan.orbits[0]
        assert orbit.points[0] == pytest.approx(0.4, abs=1e-9)
        assert orbit.points[1] == pytest.approx(0.8, abs=1e-9)
        assert orbit.label == "repelling"
        assert orbit.multiplier == pytest.approx(-4.0, abs=1e-6)

    def test_tent_period_two_excludes_fixed_points(self):
        scan = find_periodic_points(gallery.tent(), 2)
        for o in scan.orbits:
            for p in o.points:
                assert abs(p - 0.0) > 1e-3
                assert abs(p - 2.0 / 3.0) > 1e-3

    def test_required_points_within_1e9(self):
        union = (
            find_periodic_points(gallery.tent(), 1).points()
            + find_periodic_points(gallery.tent(), 2).points()
        )
        for target in (0.0, 2.0 / 3.0, 0.4, 0.8):
            assert min(abs(p - target) for p in union) < 1e-9

    def test_bistable_fixed_structure(self):
        scan = find_periodic_points(gallery.bistable(), 1)
        assert len(scan.orbits) == 2
        assert len(scan.plateaus) == 1
        pts = scan.points()
        assert pts[0] == pytest.approx(0.0, abs=1e-9)
        assert pts[1] == pytest.approx(1.0, abs=1e-9)
        plateau = scan.plateaus[0]
        # the middle segment lies on the diagonal between 0.4 and 0.6
        assert plateau.lo == pytest.approx(0.4, abs=1e-6)
        assert plateau.hi == pytest.approx(0.6, abs=1e-6)
        assert plateau.label == "neutral"

    def test_bistable_endpoint_fixed_points_attract(self):
        scan = find_periodic_points(gallery.bistable(), 1)
        assert {o.label for o in scan.orbits} == {"attractive"}

    def test_bistable_period_two_is_empty(self):
        # every period-2 root of the bistable map is already fixed
        scan = find_periodic_points(gallery.bistable(), 2)
        assert scan.orbits == ()
        assert scan.plateaus == ()

    def test_truncated_tent_low_periods(self):
        g = gallery.truncated_tent()
        s1 = find_periodic_points(g, 1)
        assert len(s1.orbits) == 1
        assert s1.orbits[0].points[0] == pytest.approx(2.0 / 3.0, abs=1e-9)
        s2 = find_periodic_points(g, 2)
        assert len(s2.orbits) == 1
        assert s2.orbits[0].points == pytest.approx((0.4, 0.8), abs=1e-9)

    def test_truncated_tent_higher_periods_single_orbit(self):
        g = gallery.truncated_tent()
        for period in (4, 8):
            scan = find_periodic_points(g, period)
            assert len(scan.orbits) == 1
            orbit = scan.orbits[0]
            assert len(set(orbit.points)) == period
            assert abs(orbit.multiplier) == pytest.approx(2.0 ** period, rel=1e-4)

    def test_reverification_at_tighter_tolerance(self):
        # every returned orbit must satisfy its invariants when rechecked
        # with an independent iterate call at a tenth of the scan tolerance
        maps = [
            gallery.tent(),
            gallery.truncated_tent(),
            gallery.bistable(),
            gallery.contraction(),
        ]
        for f in maps:
            for period in (1, 2, 3, 4):
                scan = find_periodic_points(f, period, tol=1e-12)
                for orbit in scan.orbits:
                    p0 = orbit.points[0]
                    assert abs(float(iterate(f, p0, period)) - p0) <= 1e-13
                    for d in range(1, period):
                        if period % d == 0:
                            assert abs(float(iterate(f, p0, d)) - p0) > 1e-11
                    pts = sorted(orbit.points)
                    for a, b in zip(pts, pts[1:]):
                        assert b - a > 1e-11

    def test_orbit_points_follow_the_map(self):
        rng = np.random.default_rng(20240817)
        for _ in range(10):
            f = random_pl_map(rng)
            for period in (1, 2, 3):
                scan = find_periodic_points(f, period)
                for orbit in scan.orbits:
                    for i, p in enumerate(orbit.points):
                        succ = orbit.points[(i + 1) % period]
                        assert float(evaluate(f, p)) == pytest.approx(succ, abs=1e-8)

    def test_restricted_domain(self):
        scan = find_periodic_points(gallery.tent(), 1, domain=(0.3, 0.9))
        assert len(scan.orbits) == 1
        assert scan.orbits[0].points[0] == pytest.approx(2.0 / 3.0, abs=1e-9)

    def test_restricted_domain_keeps_full_orbit(self):
        # seeding from 0.4 only, the orbit still lists its point at 0.8
        scan = find_periodic_points(gallery.tent(), 2, domain=(0.1, 0.5))
        assert len(scan.orbits) == 1
        assert scan.orbits[0].points == pytest.approx((0.4, 0.8), abs=1e-9)

    def test_resolution_warning_on_coarse_grid(self):
        assert find_periodic_points(gallery.tent(), 8, grid_size=64).resolution_warning
        assert not find_periodic_points(gallery.tent(), 2).resolution_warning

    def test_scan_serialization(self):
        scan = find_periodic_points(gallery.bistable(), 1)
        d = scan.to_dict()
        assert d["period"] == 1
        assert len(d["orbits"]) == 2
        assert len(d["plateaus"]) == 1
        assert not d["resolution_warning"]

    def test_scan_iteration_yields_orbits_then_plateaus(self):
        scan = find_periodic_points(gallery.bistable(), 1)
        items = list(scan)
        assert len(items) == 3
        assert isinstance(items[0], PeriodicOrbit)
        assert isinstance(items[2], Plateau)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"period": 0},
            {"period": 1, "tol": 0.0},
            {"period": 1, "grid_size": 8},
            {"period": 1, "domain": (0.5, 0.5)},
            {"period": 1, "domain": (-0.1, 1.0)},
        ],
    )
    def test_rejects_bad_arguments(self, kwargs):
        with pytest.raises(ValueError):
            find_periodic_points(gallery.tent(), **kwargs)


# ---------------------------------------------------------------------------
# attractivity


class TestClassifyAttractivity:
    def test_contraction_fixed_point_attracts(self):
        f = gallery.contraction()
        orbit = find_periodic_points(f, 1).orbits[0]
        assert classify_attractivity(f, orbit) == "attractive"
        assert orbit.multiplier == pytest.approx(0.5, abs=1e-6)

    def test_tent_two_thirds_repels(self):
        f = gallery.tent()
        assert classify_attractivity(f, (2.0 / 3.0,)) == "repelling"

    def test_plateau_points_are_neutral(self):
        f = gallery.bistable()
        plateau = find_periodic_points(f, 1).plateaus[0]
        assert classify_attractivity(f, plateau) == "neutral"
        # slope is exactly 1 on the diagonal segment
        assert orbit_multiplier(f, (0.5,)) == pytest.approx(1.0, abs=1e-9)

    def test_accepts_bare_float(self):
        assert classify_attractivity(gallery.contraction(), 0.5) == "attractive"

    def test_rejects_bad_probe_arguments(self):
        with pytest.raises(ValueError):
            classify_attractivity(gallery.tent(), 0.0, probe_radius=0.0)
        with pytest.raises(ValueError):
            classify_attractivity(gallery.tent(), 0.0, probe_steps=0)


# ---------------------------------------------------------------------------
# orbit iteration fast path


class TestOrbitIteration:
    def test_matches_scalar_evaluate_bitwise(self):
        rng = np.random.default_rng(98127)
        for _ in range(5):
            f = random_pl_map(rng)
            x0 = float(rng.random())
            fast = _orbit(f, x0, 2000)
            x = x0
            for i in range(2000):
                assert fast[i] == x
                x = float(evaluate(f, x))
            assert fast[2000] == x

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            _orbit(gallery.tent(), 0.5, -1)
        with pytest.raises(ValueError):
            _orbit(gallery.tent(), float("nan"), 10)


# ---------------------------------------------------------------------------
# decomposition


# hull constants below were frozen from the settled orbit of the default
# truncated tent: the tail enters an exact 16-cycle spanning these values
LEVEL1_HULLS = ((0.341376, 0.599264), (0.700368, 0.829312))


class TestDecomposeOmega:
    def test_level_zero_single_hull(self):
        d = decompose_omega(gallery.truncated_tent(), 0, orbit_len=20_000)
        assert d.level == 0
        assert len(d.hulls) == 1
        assert d.margin == np.inf
        lo, hi = d.hulls[0]
        assert lo == pytest.approx(LEVEL1_HULLS[0][0], abs=1e-6)
        assert hi == pytest.approx(LEVEL1_HULLS[1][1], abs=1e-6)

    def test_level_one_two_exchanged_hulls(self):
        d = decompose_omega(gallery.truncated_tent(), 1, orbit_len=50_000)
        assert len(d.hulls) == 2
        for got, want in zip(d.hulls, LEVEL1_HULLS):
            assert got[0] == pytest.approx(want[0], abs=1e-6)
            assert got[1] == pytest.approx(want[1], abs=1e-6)
        assert d.margin == pytest.approx(0.101104, abs=1e-5)
        assert d.invariance_defect <= 1e-3

    def test_leftmost_hull_is_first(self):
        d = decompose_omega(gallery.truncated_tent(), 2, orbit_len=50_000)
        assert d.hulls[0][0] == min(lo for lo, _ in d.hulls)

    def test_levels_one_to_four_disjoint_invariant(self):
        for level in (1, 2, 3, 4):
            d = decompose_omega(gallery.truncated_tent(), level, orbit_len=100_000)
            assert len(d.hulls) == 2**level
            assert d.margin > 0
            assert d.invariance_defect <= 1e-3
            spatial = sorted(d.hulls)
            for (_, hi), (lo, _) in zip(spatial, spatial[1:]):
                assert hi < lo

    def test_full_tent_overlaps(self):
        with pytest.raises(DecompositionError) as err:
            decompose_omega(gallery.tent(), 1, orbit_len=20_000)
        assert "overlap" in str(err.value)
        assert err.value.diagnostics["margin"] <= 0

    def test_deterministic(self):
        a = decompose_omega(gallery.truncated_tent(), 2, orbit_len=30_000)
        b = decompose_omega(gallery.truncated_tent(), 2, orbit_len=30_000)
        assert a.hulls == b.hulls
        assert a.margin == b.margin

    def test_cluster_sizes_cover_tail(self):
        d = decompose_omega(gallery.truncated_tent(), 2, orbit_len=30_000)
        assert sum(d.cluster_sizes) == d.orbit_len - d.transient

    def test_hull_containing(self):
        d = decompose_omega(gallery.truncated_tent(), 1, orbit_len=30_000)
        assert d.hull_containing(0.35) == 0
        assert d.hull_containing(0.75) == 1
        assert d.hull_containing(0.65) is None

    def test_serialization(self):
        d = decompose_omega(gallery.truncated_tent(), 1, orbit_len=30_000)
        out = d.to_dict()
        assert out["level"] == 1
        assert len(out["hulls"]) == 2
        assert out["margin"] == d.margin

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"level": -1},
            {"level": 1, "orbit_len": 50},
            {"level": 1, "orbit_len": 1000, "transient": 1000},
            {"level": 1, "orbit_len": 1000, "x0": 1.5},
        ],
    )
    def test_rejects_bad_arguments(self, kwargs):
        with pytest.raises(ValueError):
            decompose_omega(gallery.truncated_tent(), **kwargs)


class TestDecomposeTree:
    def test_nesting_and_parents(self):
        tree = decompose_tree(gallery.truncated_tent(), 3, orbit_len=100_000)
        assert tree.max_level == 3
        assert tree.parents[0] == ()
        for k in range(1, 4):
            for j, (lo, hi) in enumerate(tree.levels[k].hulls):
                plo, phi = tree.levels[k - 1].hulls[tree.parents[k][j]]
                assert plo <= lo <= hi <= phi

    def test_parent_pattern_alternates(self):
        # successive portions alternate between the two level-1 hulls
        tree = decompose_tree(gallery.truncated_tent(), 2, orbit_len=50_000)
        assert tree.parents[1] == (0, 0)
        assert tree.parents[2] == (0, 1, 0, 1)

    def test_children_inverse_of_parents(self):
        tree = decompose_tree(gallery.truncated_tent(), 2, orbit_len=50_000)
        for j in range(2):
            for c in tree.children(1, j):
                assert tree.parents[2][c] == j
        assert tree.children(2, 0) == ()

    def test_serialization(self):
        tree = decompose_tree(gallery.truncated_tent(), 1, orbit_len=30_000)
        d = tree.to_dict()
        assert len(d["levels"]) == 2
        assert d["parents"] == [[], [0, 0]]


# ---------------------------------------------------------------------------
# shadowing


class TestShadowTest:
    def test_exact_itinerary_passes_any_eps(self):
        tent = gallery.tent()
        orbit = find_periodic_points(tent, 2).orbits[0]
        states = np.array([orbit.points[i % 2] for i in range(60)])
        res = shadow_test(states, tent, [orbit], eps=1e-12, window=(0, 59))
        assert res.passed
        assert res.sup_error == 0.0
        assert res.phase == 0

    def test_phase_alignment(self):
        tent = gallery.tent()
        orbit = find_periodic_points(tent, 2).orbits[0]
        states = np.array([orbit.points[(i + 1) % 2] for i in range(60)])
        res = shadow_test(states, tent, [orbit], eps=1e-12, window=(0, 59))
        assert res.passed
        assert res.phase == 1

    def test_monotone_in_eps(self):
        contraction = gallery.contraction()
        cfg = ProcessConfig(
            sequence=gallery.constant_seq(contraction),
            x0=0.1,
            delta=0.02,
            horizon=400,
        )
        traj = simulate(cfg)
        tight = shadow_test(traj, contraction, [0.5], eps=0.05, window=(200, 400))
        loose = shadow_test(traj, contraction, [0.5], eps=0.25, window=(200, 400))
        assert tight.sup_error == loose.sup_error
        if tight.passed:
            assert loose.passed

    def test_contraction_process_shadowed_by_fixed_point(self):
        # noise envelope: once settled the state stays within about twice
        # the noise bound of the fixed point, far below eps = 0.25
        contraction = gallery.contraction()
        cfg = ProcessConfig(
            sequence=gallery.constant_seq(contraction),
            x0=0.9,
            delta=0.02,
            horizon=400,
        )
        traj = simulate(cfg)
        res = shadow_test(traj, contraction, [0.5], eps=0.25, window=(200, 400))
        assert res.passed
        assert res.sup_error < 0.1

    def test_plateau_candidate_expansion(self):
        bistable = gallery.bistable()
        plateau = find_periodic_points(bistable, 1).plateaus[0]
        states = np.full(50, 0.45)
        res = shadow_test(states, bistable, [plateau], eps=0.25, window=(0, 49))
        assert res.passed
        assert res.candidate_index == 0
        assert not res.orbit.isolated

    def test_non_fixed_float_candidate_rejected(self):
        with pytest.raises(ValueError, match="fixed point"):
            shadow_test(np.zeros(10), gallery.tent(), [0.3], eps=0.1, window=(0, 9))

    def test_window_validation(self):
        states = np.zeros(10)
        with pytest.raises(ValueError):
            shadow_test(states, gallery.tent(), [0.0], eps=0.1, window=(0, 10))
        with pytest.raises(ValueError):
            shadow_test(states, gallery.tent(), [0.0], eps=0.0, window=(0, 9))

    def test_serialization(self):
        res = shadow_test(np.zeros(10), gallery.tent(), [0.0], eps=0.1, window=(0, 9))
        d = res.to_dict()
        assert d["passed"] is True
        assert d["window"] == [0, 9]


class TestShadowFraction:
    def test_bistable_batch_fully_shadowed(self):
        bistable = gallery.bistable()
        cfg = ProcessConfig(
            sequence=gallery.constant_seq(bistable),
            x0=0.5,
            delta=0.05,
            horizon=600,
        )
        batch = simulate_batch(cfg, n_trials=100)
        cands = shadow_candidates(bistable, max_period=1)
        summary = shadow_fraction(batch, bistable, cands, eps=0.25, window=(400, 600))
        assert summary.fraction == 1.0
        # both absorbing ends are reached across the batch
        assert summary.by_candidate[0] > 0
        assert summary.by_candidate[1] > 0
        assert summary.n_passed == sum(summary.by_candidate)

    def test_candidate_attribution(self):
        bistable = gallery.bistable()
        states = np.vstack([np.full(20, 0.02), np.full(20, 0.97)])
        summary = shadow_fraction(
            states, bistable, [0.0, 1.0], eps=0.1, window=(0, 19)
        )
        assert summary.by_candidate == (1, 1)

    def test_serialization(self):
        summary = shadow_fraction(
            np.zeros((3, 10)), gallery.tent(), [0.0], eps=0.1, window=(0, 9)
        )
        d = summary.to_dict()
        assert d["fraction"] == 1.0
        assert d["n_trajectories"] == 3


class TestShadowCandidates:
    def test_bistable_candidates(self):
        cands = shadow_candidates(gallery.bistable(), max_period=16)
        orbits = [c for c in cands if isinstance(c, PeriodicOrbit)]
        plateaus = [c for c in cands if isinstance(c, Plateau)]
        assert sorted(o.points[0] for o in orbits) == pytest.approx([0.0, 1.0])
        assert len(plateaus) == 1

    def test_plateau_representatives(self):
        bistable = gallery.bistable()
        plateau = find_periodic_points(bistable, 1).plateaus[0]
        reps = plateau.representatives(bistable)
        assert [r.points[0] for r in reps] == pytest.approx(
            [0.4, 0.5, 0.6], abs=1e-6
        )
        assert all(not r.isolated for r in reps)
        # the midpoint sits on the slope-1 diagonal segment; the edge
        # representatives straddle kinks and average the adjacent slopes
        assert reps[1].multiplier == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# Li-Yorke scan


class TestLiYorkeScan:
    def test_tent_flags_pairs(self):
        report = liyorke_scan(gallery.tent(), 1000, 10_000, 1e-3, 1e-1)
        assert report.n_flagged >= 1
        # deterministic for the default seed: every sampled pair both
        # separates past 0.1 and collapses to distance zero
        assert report.n_flagged == 1000

    def test_contraction_flags_nothing(self):
        report = liyorke_scan(gallery.contraction(), 1000, 10_000, 1e-3, 1e-1)
        assert report.n_flagged == 0

    def test_constant_map_flags_nothing(self):
        const = gallery.PiecewiseLinearMap((0.0, 1.0), (0.3, 0.3))
        assert liyorke_scan(const, 300, 200, 1e-3, 1e-1).n_flagged == 0

    def test_map_and_constant_sequence_agree(self):
        tent = gallery.tent()
        a = liyorke_scan(tent, 50, 200, 1e-3, 1e-1)
        b = liyorke_scan(gallery.constant_seq(tent), 50, 200, 1e-3, 1e-1)
        assert a.flagged == b.flagged

    def test_deterministic_per_seed(self):
        a = liyorke_scan(gallery.tent(), 50, 150, 1e-3, 1e-1, master_seed=7)
        b = liyorke_scan(gallery.tent(), 50, 150, 1e-3, 1e-1, master_seed=7)
        c = liyorke_scan(gallery.tent(), 50, 150, 1e-3, 1e-1, master_seed=8)
        assert a.flagged == b.flagged
        assert [p.x0 for p in a.flagged] != [p.x0 for p in c.flagged]

    def test_flagged_pairs_report_extremes(self):
        report = liyorke_scan(gallery.tent(), 100, 1000, 1e-3, 1e-1)
        for pair in report.flagged:
            assert pair.min_distance < 1e-3
            assert pair.max_distance > 1e-1

    def test_serialization(self):
        report = liyorke_scan(gallery.contraction(), 10, 100, 1e-3, 1e-1)
        d = report.to_dict()
        assert d["n_flagged"] == 0
        assert d["flagged"] == []
        assert d["horizon"] == 100

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_pairs": 0, "horizon": 100},
            {"n_pairs": 10, "horizon": 99},
            {"n_pairs": 10, "horizon": 100, "burn_in": 100},
            {"n_pairs": 10, "horizon": 100, "closeness": 0.0},
            {"n_pairs": 10, "horizon": 100, "separation": -1.0},
        ],
    )
    def test_rejects_bad_arguments(self, kwargs):
        with pytest.raises(ValueError):
            liyorke_scan(gallery.tent(), **{"closeness": 1e-3, "separation": 1e-1, **kwargs})

    def test_rejects_unknown_system(self):
        with pytest.raises(TypeError):
            liyorke_scan(lambda x: x, 10, 100, 1e-3, 1e-1)
