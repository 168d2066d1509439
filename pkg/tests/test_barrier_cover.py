import math

import numpy as np
import pytest
from scipy.spatial import cKDTree
from hypothesis import given, settings
from hypothesis import strategies as st

from auvcage.barrier_cover import (
    BarrierSegment,
    candidate_centers,
    coplanar_groups,
    cover_barrier,
    greedy_cover,
    read_cover_csv,
    sample_barrier,
    write_cover_csv,
)
from auvcage.errors import InfeasibleCover, ParameterError
from oracles import brute_force_set_cover


def seg(x0, y0, x1, y1, depth):
    return BarrierSegment((x0, y0), (x1, y1), depth)


def test_segment_validation():
    with pytest.raises(ParameterError):
        seg(0, 0, 0, 0, 1)
    with pytest.raises(ParameterError):
        seg(0, 0, 1, 0, 0)


def test_sample_count_and_corners():
    pts = sample_barrier([seg(0, 0, 10, 0, 5)], 1.0)
    assert len(pts) == 66
    assert pts[:, 0].min() == 0 and pts[:, 0].max() == 10
    assert pts[:, 2].min() == -5 and pts[:, 2].max() == 0
    assert np.all(pts[:, 1] == 0)


def test_samples_are_additive():
    a, b = seg(0, 0, 10, 0, 5), seg(10, 0, 10, 7, 3)
    assert len(sample_barrier([a, b], 0.8)) == len(sample_barrier([a], 0.8)) + len(sample_barrier([b], 0.8))
    assert len(sample_barrier([], 1.0)) == 0


def test_sample_pitch_never_exceeds_request():
    pts = sample_barrier([seg(0, 0, 7.3, 0, 2.9)], 1.0)
    xs = np.unique(pts[:, 0])
    zs = np.unique(pts[:, 2])
    assert np.diff(xs).max() <= 1.0 + 1e-12
    assert np.diff(zs).max() <= 1.0 + 1e-12


def test_small_segment_gets_one_centered_candidate():
    c = candidate_centers([seg(0, 0, 1, 0, 1)], 2.0)
    assert c.tolist() == [[0.5, 0.0, -0.5]]


def test_candidate_lattice_dimensions():
    pitch = 2.0 * math.sqrt(2) / 2
    c = candidate_centers([seg(0, 0, 10, 0, 5)], 2.0)
    assert len(c) == math.ceil(10 / pitch + 1) * math.ceil(5 / pitch + 1)


@settings(max_examples=40, deadline=None)
@given(w=st.floats(0.1, 30), d=st.floats(0.1, 30), r_s=st.floats(1.0, 10))
def test_candidates_reach_every_wall_point(w, d, r_s):
    s = seg(0, 0, w, 0, d)
    cands = candidate_centers([s], r_s)
    pts = sample_barrier([s], r_s / 7)
    dist, _ = cKDTree(cands).query(pts)
    assert dist.max() <= r_s / 2 + 1e-9


def test_unit_square_needs_one_disc():
    s = seg(0, 0, 1, 0, 1)
    sol = greedy_cover(sample_barrier([s], 0.25), [[0.5, 0.0, -0.5]], 1.0)
    assert sol.n_discs == 1
    assert sol.covered_samples == sol.total_samples == 25


def test_coincident_samples_need_one_disc():
    samples = np.zeros((10, 3))
    sol = greedy_cover(samples, np.zeros((4, 3)), 1.0)
    assert sol.n_discs == 1


def test_uncoverable_sample_reports_witness():
    with pytest.raises(InfeasibleCover) as exc:
        greedy_cover([[0, 0, 0], [5, 0, 0]], [[0, 0, 0]], 1.0)
    assert exc.value.witness == (5.0, 0.0, 0.0)


def test_greedy_tie_break_is_lowest_index():
    samples = [[0, 0, 0]]
    sol = greedy_cover(samples, [[0.5, 0, 0], [0.1, 0, 0]], 1.0)
    assert sol.disc_centers.tolist() == [[0.5, 0.0, 0.0]]


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_greedy_bound_against_exhaustive_optimum(seed):
    rng = np.random.default_rng(seed)
    samples = rng.uniform(0, 4, (20, 3))
    samples[:, 2] = 0
    cands = rng.uniform(0, 4, (8, 3))
    cands[:, 2] = 0
    r = 2.0
    cover = np.linalg.norm(cands[:, None] - samples[None], axis=-1) <= r
    if not cover.any(axis=0).all():
        with pytest.raises(InfeasibleCover):
            greedy_cover(samples, cands, r)
        return
    sol = greedy_cover(samples, cands, r)
    opt = brute_force_set_cover(cover)
    assert opt <= sol.n_discs <= (math.log(20) + 1) * opt
    # completeness and determinism
    d = np.linalg.norm(samples[:, None] - sol.disc_centers[None], axis=-1).min(axis=1)
    assert d.max() <= r + 1e-12
    assert np.array_equal(greedy_cover(samples, cands, r).disc_centers, sol.disc_centers)


def test_cover_barrier_certifies_continuous_coverage():
    segs = [seg(0, 0, 10, 0, 6), seg(10, 0, 20, 0, 8), seg(20, 0, 20, 10, 7)]
    r_s = 3.0
    sol = cover_barrier(segs, r_s)
    fine = sample_barrier(segs, 0.1)
    d = np.linalg.norm(fine[:, None] - sol.disc_centers[None], axis=-1).min(axis=1)
    assert d.max() <= r_s
    area = sum(s.area for s in segs)
    assert sol.n_discs >= math.ceil(area / (math.pi * r_s**2))
    assert len(sol.normals) == sol.n_discs
    assert sol.covered_samples == sol.total_samples > 0


def test_cover_barrier_rejects_coarse_spacing():
    with pytest.raises(ParameterError):
        cover_barrier([seg(0, 0, 1, 0, 1)], 1.0, spacing=0.6)


def test_coplanar_groups():
    segs = [seg(0, 0, 1, 0, 1), seg(1, 0, 2, 0, 1), seg(2, 0, 2, 1, 1), seg(5, 5, 6, 5, 1)]
    assert coplanar_groups(segs) == [[0, 1], [2], [3]]


def test_cover_csv_round_trip(tmp_path):
    sol = cover_barrier([seg(0, 0, 10, 0, 6)], 3.0)
    write_cover_csv(tmp_path / "d.csv", sol)
    back = read_cover_csv(tmp_path / "d.csv")
    assert np.array_equal(back.disc_centers, sol.disc_centers)
    assert np.array_equal(back.normals, sol.normals)
    assert back.disc_radius == sol.disc_radius
