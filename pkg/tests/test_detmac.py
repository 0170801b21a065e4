import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetmac.detmac import (
    DetConfig,
    F2Matrix,
    achievability_holds,
    achieved_rates,
    build_generator_type1,
    build_generator_type2,
    component_generators,
    component_layout,
    det_mutual_info,
    random_full_rank,
    rank_f2,
    shift_matrix,
    verify_region,
)
from hetmac.errors import InfeasibleAllocationError

from oracles import rank_by_subsets


class TestRank:
    def test_identity(self):
        assert rank_f2(F2Matrix.identity(3)) == 3

    def test_zero(self):
        assert rank_f2(F2Matrix.zeros(4, 2)) == 0

    def test_dependent_rows(self):
        m = F2Matrix.from_rows([[1, 1], [1, 1], [0, 1]])
        assert rank_f2(m) == 2

    @given(
        st.integers(1, 6),
        st.integers(1, 6),
        st.integers(0, 2**36 - 1),
    )
    @settings(max_examples=200, deadline=None)
    def test_matches_subset_oracle(self, rows, cols, packed):
        cells = [(packed >> (i * cols + j)) & 1 for i in range(rows) for j in range(cols)]
        mat = [cells[i * cols : (i + 1) * cols] for i in range(rows)]
        assert rank_f2(F2Matrix.from_rows(mat, cols)) == rank_by_subsets(mat)


class TestShift:
    def test_zero_shift_is_identity(self):
        assert shift_matrix(3, 0) == F2Matrix.identity(3)

    def test_full_shift_is_zero(self):
        assert shift_matrix(3, 3) == F2Matrix.zeros(3, 3)

    def test_down_shift_vector(self):
        v = F2Matrix.from_rows([[1], [0], [1]])
        out = shift_matrix(3, 1).matmul(v)
        assert out.to_rows() == [[0], [1], [0]]

    def test_shift_out_of_range(self):
        with pytest.raises(ValueError):
            shift_matrix(3, 4)

    @given(st.integers(0, 6), st.integers(0, 6), st.integers(1, 6))
    @settings(max_examples=100, deadline=None)
    def test_composition(self, s1, s2, q):
        s1, s2 = min(s1, q), min(s2, q)
        lhs = shift_matrix(q, s1).matmul(shift_matrix(q, s2))
        assert lhs == shift_matrix(q, min(q, s1 + s2))

    def test_shifted_down_matches_matrix_product(self):
        rng = random.Random(5)
        g = F2Matrix(6, 3, tuple(rng.getrandbits(3) for _ in range(6)))
        assert g.shifted_down(2) == shift_matrix(6, 2).matmul(g)


class TestGenerators:
    def test_two_user_layout(self):
        # levels (10, 8) with 6+4 bits filling component 1 exactly
        cfg = DetConfig(n=(10, 8), m=((6,), (4, 8)))
        g1 = build_generator_type1(cfg, 0, 0)
        assert (g1.rows, g1.cols) == (10, 6)
        # full-rank block occupies the top six rows, zero rows below
        assert [g1.bits[i] != 0 for i in range(10)] == [True] * 6 + [False] * 4
        g21 = build_generator_type1(cfg, 1, 0)
        assert [g21.bits[i] != 0 for i in range(10)] == [False] * 4 + [True] * 4 + [False] * 2

    def test_empty_message(self):
        cfg = DetConfig(n=(10, 8), m=((0,), (4, 8)))
        g = build_generator_type1(cfg, 0, 0)
        assert (g.rows, g.cols) == (10, 0)

    def test_three_user_disjoint_supports(self):
        cfg = DetConfig(n=(9, 6, 3), m=((3,), (3, 0), (3, 0, 0)))
        gens = component_generators(cfg, 0, scheme_type=1)
        shifted = {k: g.shifted_down(cfg.n[0] - cfg.n[k]) for k, g in gens.items()}
        occupied = []
        for k, g in shifted.items():
            occupied.extend(i for i in range(g.rows) if g.bits[i])
        assert len(occupied) == len(set(occupied)) == 9

    def test_type2_two_user_split(self):
        cfg = DetConfig(n=(10, 8), m=((6,), (4, 8)))
        g = build_generator_type2(cfg, 0, 0)
        # upper part in the top n1-n2 = 2 rows, lower part below user 2's window
        nonzero = [i for i in range(10) if g.bits[i]]
        assert nonzero == [0, 1, 6, 7, 8, 9]

    def test_type2_single_user_is_top_block(self):
        cfg = DetConfig(n=(6,), m=((4,),))
        g = build_generator_type2(cfg, 0, 0)
        assert [g.bits[i] != 0 for i in range(6)] == [True] * 4 + [False] * 2

    def test_type2_full_last_user_has_no_padding(self):
        cfg = DetConfig(n=(6, 4), m=((2,), (0, 4)))
        g = build_generator_type2(cfg, 1, 1)
        assert all(g.bits[i] for i in range(4))

    def test_infeasible_allocation_raises(self):
        cfg = DetConfig(n=(3,), m=((4,),))
        with pytest.raises(InfeasibleAllocationError):
            build_generator_type1(cfg, 0, 0)
        with pytest.raises(InfeasibleAllocationError):
            build_generator_type2(cfg, 0, 0)

    def test_bad_f_block_shape(self):
        cfg = DetConfig(n=(4,), m=((2,),))
        with pytest.raises(ValueError):
            build_generator_type1(cfg, 0, 0, F2Matrix.identity(3))


class TestMutualInfo:
    def test_reference_triple(self):
        cfg = DetConfig(n=(10, 8), m=((6,), (4, 8)))
        gens0 = component_generators(cfg, 0)
        assert det_mutual_info(cfg, gens0, 0, 0) == 6
        assert det_mutual_info(cfg, gens0, 1, 0) == 4
        gens1 = component_generators(cfg, 1)
        assert det_mutual_info(cfg, gens1, 1, 1) == 8

    def test_all_zero_generators(self):
        cfg = DetConfig(n=(5, 4), m=((2,), (2, 1)))
        gens = {0: F2Matrix.zeros(5, 2), 1: F2Matrix.zeros(5, 2)}
        assert det_mutual_info(cfg, gens, 0, 0) == 0

    def test_dimension_mismatch(self):
        cfg = DetConfig(n=(5, 4), m=((2,), (2, 1)))
        gens = {0: F2Matrix.zeros(4, 2), 1: F2Matrix.zeros(5, 2)}
        with pytest.raises(ValueError):
            det_mutual_info(cfg, gens, 0, 0)

    def test_concatenation_rank_is_additive(self):
        cfg = DetConfig(n=(10, 8), m=((6,), (4, 8)))
        gens = component_generators(cfg, 0)
        shifted = [gens[k].shifted_down(cfg.n[0] - cfg.n[k]) for k in (0, 1)]
        combined = shifted[0].hstack(shifted[1])
        assert rank_f2(combined) == rank_f2(shifted[0]) + rank_f2(shifted[1])

    @pytest.mark.parametrize("scheme_type", [1, 2])
    def test_random_full_rank_blocks_achieve_allocation(self, scheme_type):
        rng = random.Random(77)
        for _ in range(25):
            cfg = _random_feasible(rng)
            blocks = {
                (k, l): random_full_rank(cfg.m[k][l], rng)
                for l in range(cfg.users)
                for k in range(l, cfg.users)
            }
            assert achievability_holds(cfg, scheme_type, blocks), (cfg.n, cfg.m)


class TestRegion:
    def test_zero_slack_component(self):
        cfg = DetConfig(n=(8, 4), m=((4,), (4, 4)))
        comps = verify_region(cfg)
        assert comps[0].load == 8 and comps[0].slack == 0 and comps[0].feasible
        assert comps[1].feasible

    def test_all_zero_is_feasible(self):
        cfg = DetConfig(n=(8, 4), m=((0,), (0, 0)))
        assert all(c.feasible for c in verify_region(cfg))

    def test_direct_violation(self):
        cfg = DetConfig(n=(3,), m=((4,),))
        comp = verify_region(cfg)[0]
        assert not comp.feasible and comp.slack == -1


class TestLayout:
    def test_windows_stay_disjoint_and_within_levels(self):
        rng = random.Random(3)
        for _ in range(50):
            cfg = _random_feasible(rng)
            for scheme_type in (1, 2):
                for l in range(cfg.users):
                    m_col = [cfg.m[k][l] for k in range(l, cfg.users)]
                    layout = component_layout(cfg.n, m_col, l, scheme_type)
                    seen = set()
                    for k, frags in layout.items():
                        for start, end in frags:
                            assert start >= cfg.n[l] - cfg.n[k]
                            assert end <= cfg.n[l]
                            depths = set(range(start + 1, end + 1))
                            assert not depths & seen
                            seen |= depths
                        assert sum(e - s for s, e in frags) == cfg.m[k][l]


def _random_feasible(rng: random.Random) -> DetConfig:
    users = rng.randint(1, 4)
    n = sorted((rng.randint(0, 12) for _ in range(users)), reverse=True)
    m = [[0] * (k + 1) for k in range(users)]
    for l in range(users):
        tail = 0
        for k in range(users - 1, l - 1, -1):
            v = rng.randint(0, max(0, n[k] - tail))
            m[k][l] = v
            tail += v
    return DetConfig(n=tuple(n), m=tuple(tuple(r) for r in m))


def test_achieved_rates_cover_all_pairs():
    cfg = DetConfig(n=(10, 8), m=((6,), (4, 8)))
    rates = achieved_rates(cfg, 1)
    assert rates == {(0, 0): 6, (1, 0): 4, (1, 1): 8}
