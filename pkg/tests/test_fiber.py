import itertools
import math

import numpy as np
import pytest

from fiberlab.errors import SamplingError
from fiberlab.fiber import (FiberSample, connected_components, default_box_radius,
                            epsilon_sweep, farthest_point_subsample, median_nn_distance,
                            predicted_tempered_dims, reduced_betti, rips_persistence,
                            sample_fiber)
from fiberlab.polynomials import Polynomial, parse_polynomial

CIRCLE = parse_polynomial("x1^2 + x2^2", 2)
HYPERBOLA = parse_polynomial("x1^2 - x2^2", 2)
NEGATIVE = parse_polynomial("-x1^2 - x2^2", 2)


def assert_bars_equal(mine, oracle):
    assert len(mine) == len(oracle)
    if mine:
        np.testing.assert_allclose(np.array(sorted(mine)), np.array(sorted(oracle)),
                                   rtol=0, atol=1e-12)


def brute_force_rips(points, max_dim, cap):
    """Textbook oracle: enumerate every simplex, reduce one global boundary
    matrix left to right with column sets, read bars off the pivots."""
    pts = np.asarray(points, dtype=float)
    m = len(pts)

    def diameter(verts):
        if len(verts) == 1:
            return 0.0
        return max(float(np.linalg.norm(pts[a] - pts[b]))
                   for a, b in itertools.combinations(verts, 2))

    simplices = []
    for k in range(max_dim + 2):
        for verts in itertools.combinations(range(m), k + 1):
            f = diameter(verts)
            if f <= cap:
                simplices.append((f, k, verts))
    simplices.sort(key=lambda s: (s[0], s[1], s[2]))
    index = {s[2]: i for i, s in enumerate(simplices)}

    columns = []
    for f, k, verts in simplices:
        if k == 0:
            columns.append(set())
        else:
            columns.append({index[verts[:i] + verts[i + 1:]]
                            for i in range(len(verts))})

    low_owner = {}
    pair_of = {}
    for j, col in enumerate(columns):
        col = set(col)
        while col:
            low = max(col)
            if low not in low_owner:
                low_owner[low] = (j, col)
                pair_of[low] = j
                break
            col ^= low_owner[low][1]

    creators = [j for j, _ in enumerate(columns)
                if j not in {c for c, _ in low_owner.values()}]
    bars = {d: [] for d in range(max_dim + 1)}
    for j in creators:
        birth_f, dim, _ = simplices[j]
        if dim > max_dim:
            continue
        death = simplices[pair_of[j]][0] if j in pair_of else math.inf
        if death > birth_f:
            bars[dim].append((birth_f, death))
    return {d: tuple(sorted(v)) for d, v in bars.items()}


class TestSampling:
    def test_circle_example(self):
        fs = sample_fiber(CIRCLE, 1.0, box_radius=2.0, n_seeds=500, seed=7)
        assert fs.verdict == "nonempty"
        assert len(fs) >= 100
        values = np.array([CIRCLE.evaluate(x) for x in fs.points])
        assert np.all(np.abs(values - 1.0) <= 1e-10)
        assert fs.residual_bound <= 1e-10

    def test_negative_definite_presumed_empty(self):
        fs = sample_fiber(NEGATIVE, 1.0, n_seeds=200, seed=3)
        assert fs.verdict == "presumed-empty"
        assert len(fs) == 0

    def test_hyperbola_two_branches(self):
        fs = sample_fiber(HYPERBOLA, 1.0, box_radius=3.0, n_seeds=500, seed=5)
        assert fs.verdict == "nonempty"
        assert connected_components(fs, 0.3) == 2

    def test_default_box_radius(self):
        assert default_box_radius(CIRCLE, 1.0) == pytest.approx(2.0 * math.sqrt(2.0))
        with pytest.raises(ValueError):
            default_box_radius(parse_polynomial("x1^2 - x1 - x2", 2), 1.0)

    def test_tiny_box_certifies_emptiness_locally(self):
        # the scan sees max p well below t inside the box: gap condition holds
        fs = sample_fiber(CIRCLE, 1.0, box_radius=0.05, n_seeds=5, seed=1,
                          ms_grid=0)
        assert fs.verdict == "presumed-empty"

    def test_ambiguous_emptiness_raises(self, monkeypatch):
        # grid values straddle the level but no seed converged: no verdict
        import fiberlab.fiber as fiber_mod
        monkeypatch.setattr(fiber_mod, "_newton_project",
                            lambda ev, X, t, box, max_iter=60: np.empty((0, X.shape[1])))
        with pytest.raises(SamplingError):
            sample_fiber(CIRCLE, 1.0, box_radius=2.0, n_seeds=5, seed=1,
                         ms_grid=0)

    def test_seed_determinism(self):
        a = sample_fiber(CIRCLE, 1.0, n_seeds=300, seed=9)
        b = sample_fiber(CIRCLE, 1.0, n_seeds=300, seed=9)
        assert np.array_equal(a.points, b.points)

    def test_max_points_subsampling(self):
        fs = sample_fiber(CIRCLE, 1.0, n_seeds=500, seed=2, max_points=50)
        assert len(fs) == 50

    def test_invariant_enforced(self):
        with pytest.raises(ValueError, match="residual"):
            FiberSample(CIRCLE, 1.0, np.array([[2.0, 0.0]]), 1e-3, "nonempty",
                        2.0, 10, 0)

    def test_csv_export(self, tmp_path):
        fs = sample_fiber(CIRCLE, 1.0, n_seeds=200, seed=4)
        path = tmp_path / "pts.csv"
        fs.to_csv(path)
        header, first = path.read_text().splitlines()[:2]
        assert header == "x1,x2,residual"
        assert len(first.split(",")) == 3


class TestComponents:
    def test_single_point(self):
        assert connected_components(np.array([[0.0, 0.0]]), 1.0) == 1

    def test_monotone_in_epsilon(self):
        fs = sample_fiber(HYPERBOLA, 1.0, box_radius=3.0, n_seeds=400, seed=8)
        sweep = epsilon_sweep(fs)
        counts = [c for _, c in sweep]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            connected_components(np.empty((0, 2)), 0.5)
        with pytest.raises(ValueError):
            connected_components(np.array([[0.0, 0.0]]), 0.0)

    def test_farthest_point_prefix(self):
        pts = np.random.default_rng(0).normal(size=(40, 2))
        sub8 = farthest_point_subsample(pts, 8)
        sub5 = farthest_point_subsample(pts, 5)
        assert np.array_equal(sub8[:5], sub5)


class TestRips:
    def test_polygon_matches_brute_force(self):
        ring = np.array([[math.cos(2 * math.pi * k / 12),
                          math.sin(2 * math.pi * k / 12)] for k in range(12)])
        mine = rips_persistence(ring, 1, 1.0)
        oracle = brute_force_rips(ring, 1, 1.0)
        for dim in (0, 1):
            assert_bars_equal(mine.bars[dim], oracle[dim])

    def test_random_clouds_match_brute_force(self):
        rng = np.random.default_rng(5)
        for trial in range(4):
            pts = rng.uniform(-1, 1, size=(9, 2))
            cap = 0.9
            mine = rips_persistence(pts, 1, cap)
            oracle = brute_force_rips(pts, 1, cap)
            for dim in (0, 1):
                assert_bars_equal(mine.bars[dim], oracle[dim])

    def test_small_sphere_cloud_matches_brute_force(self):
        rng = np.random.default_rng(12)
        pts = rng.normal(size=(8, 3))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        mine = rips_persistence(pts, 2, 1.3)
        oracle = brute_force_rips(pts, 2, 1.3)
        for dim in (0, 1, 2):
            assert_bars_equal(mine.bars[dim], oracle[dim])

    def test_circle_essentials(self):
        fs = sample_fiber(CIRCLE, 1.0, box_radius=2.0, n_seeds=500, seed=7)
        pd = rips_persistence(fs, 1, 0.25)
        assert pd.essential_counts() == {0: 1, 1: 1}

    def test_two_clusters(self):
        rng = np.random.default_rng(1)
        pts = np.vstack([rng.normal(0.0, 0.05, (25, 2)),
                         rng.normal(6.0, 0.05, (25, 2))])
        pd = rips_persistence(pts, 1, 1.0)
        assert pd.essential_counts() == {0: 2, 1: 0}

    def test_octahedron_pattern(self):
        octa = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0],
                         [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
        pd = rips_persistence(octa, 2, 1.5)
        assert pd.essential_counts() == {0: 1, 1: 0, 2: 1}

    def test_limits(self):
        pts = np.zeros((2, 2))
        with pytest.raises(ValueError):
            rips_persistence(np.empty((0, 2)), 1, 1.0)
        with pytest.raises(ValueError):
            rips_persistence(pts, 3, 1.0)
        with pytest.raises(ValueError, match="subsample"):
            rips_persistence(np.zeros((5001, 2)), 1, 1.0)

    def test_diagram_serialization(self):
        pd = rips_persistence(np.array([[0.0, 0.0], [1.0, 0.0]]), 0, 2.0)
        data = pd.to_json_dict()
        assert data["bars"]["0"][-1][1] == "inf"


class TestBetti:
    def test_circle(self):
        fs = sample_fiber(CIRCLE, 1.0, n_seeds=500, seed=7)
        pd = rips_persistence(fs, 1, 0.3)
        rb = reduced_betti(fs, pd)
        assert rb.to_list() == [0, 0, 1]
        assert rb.at(-1) == 0 and rb.at(1) == 1

    def test_empty_fiber_convention(self):
        fs = sample_fiber(NEGATIVE, 1.0, n_seeds=100, seed=3)
        rb = reduced_betti(fs, None)
        assert rb.to_list() == [1, 0, 0]

    def test_two_branches(self):
        fs = sample_fiber(HYPERBOLA, 1.0, box_radius=3.0, n_seeds=500, seed=5)
        pd = rips_persistence(fs, 1, 0.3)
        assert reduced_betti(fs, pd).to_list() == [0, 1, 0]

    def test_input_consistency(self):
        fs = sample_fiber(CIRCLE, 1.0, n_seeds=300, seed=7)
        with pytest.raises(ValueError):
            reduced_betti(fs, None)
        empty = sample_fiber(NEGATIVE, 1.0, n_seeds=50, seed=2)
        pd = rips_persistence(fs, 1, 0.3)
        with pytest.raises(ValueError):
            reduced_betti(empty, pd)

    def test_prediction_is_pure_index_shift(self):
        fs = sample_fiber(HYPERBOLA, 1.0, box_radius=3.0, n_seeds=500, seed=5)
        pd = rips_persistence(fs, 1, 0.3)
        rb = reduced_betti(fs, pd)
        predicted = predicted_tempered_dims(rb)
        assert len(predicted) == 3
        for k in range(-1, 2):
            assert predicted[k + 1] == rb.at(k)
