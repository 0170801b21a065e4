import math

import numpy as np
import pytest

from hetmac.config import ChannelConfig, UserSpec
from hetmac.infodensity import (
    MI_GAP_BITS,
    estimate_stats,
    gaussian_tin_mi,
    information_density,
    mi_lower_bound,
    _density_given_y,
    _receive_tables,
)
from hetmac.pipeline import BitAllocation
from hetmac.signaling import Constellation, ScaledPart, SchemeSignaling, build_scheme

from oracles import density_moments_quadrature, tin_mi_quadrature


def single_user_cfg(snr_db: float, n: int = 128) -> ChannelConfig:
    return ChannelConfig.from_users([UserSpec(snr_db, n, 1e-5)])


def qpsk_scheme(snr_db: float):
    cfg = single_user_cfg(snr_db)
    sig = build_scheme(cfg, BitAllocation(m=((2,),)))
    return cfg, sig


def faint_qpsk_scheme(amplitude: float):
    """QPSK with a hand-set transmit amplitude, for limit behaviour tests."""
    cfg = single_user_cfg(5.0)
    part = ScaledPart(2, amplitude)
    const = Constellation.from_points(part.points())
    sig = SchemeSignaling(
        scheme_type=1,
        parts={(0, 0): (part,)},
        constellations={(0, 0): const},
        eta=(1.0,),
        energies={(0, 0): part.energy},
        zeta={(0, 0): part.energy / cfg.P[0]},
    )
    return cfg, sig


class TestInformationDensity:
    def test_matches_four_term_hand_sum(self):
        cfg, sig = qpsk_scheme(8.0)
        pts = sig.constellations[(0, 0)].points
        for y in (0.0 + 0.0j, 0.3 + 0.1j, -1.2 + 2.0j):
            for x in pts:
                num = math.exp(-abs(y - x) ** 2)
                den = sum(math.exp(-abs(y - p) ** 2) for p in pts) / 4.0
                assert information_density(y, cfg, sig, 0, 0, x) == pytest.approx(
                    math.log2(num / den), abs=1e-9
                )

    def test_symmetric_point_gives_zero_bits(self):
        cfg, sig = qpsk_scheme(8.0)
        x = sig.constellations[(0, 0)].points[0]
        assert information_density(0j, cfg, sig, 0, 0, x) == pytest.approx(0.0, abs=1e-12)

    def test_noiseless_high_snr_approaches_order(self):
        cfg, sig = qpsk_scheme(30.0)
        x = sig.constellations[(0, 0)].points[0]
        val = information_density(complex(x), cfg, sig, 0, 0, x)
        assert val == pytest.approx(2.0, abs=1e-6)

    def test_foreign_point_rejected(self):
        cfg, sig = qpsk_scheme(8.0)
        with pytest.raises(ValueError):
            information_density(0j, cfg, sig, 0, 0, 123.0 + 0j)

    def test_interferer_sum_is_order_invariant(self):
        cfg = ChannelConfig.from_users(
            [UserSpec(24.0, 100, 1e-5), UserSpec(18.0, 150, 1e-5), UserSpec(12.0, 200, 1e-5)]
        )
        sig = build_scheme(cfg, BitAllocation(m=((2,), (2, 2), (2, 2, 2))))
        own, w = _receive_tables(cfg, sig, 0, 0, 1 << 20)
        rng = np.random.default_rng(4)
        y = (rng.standard_normal(64) + 1j * rng.standard_normal(64)) * 3.0
        xi = rng.integers(0, own.size, 64)
        direct = _density_given_y(y, xi, own, w)
        reordered = _density_given_y(y, xi, own, w[::-1].copy())
        assert np.allclose(direct, reordered, atol=1e-9)

    def test_density_mean_matches_estimator(self):
        cfg, sig = qpsk_scheme(6.0)
        stats = estimate_stats(cfg, sig, 0, 0, samples=20_000, seed=5)
        rng = np.random.default_rng(123)
        pts = sig.constellations[(0, 0)].points
        vals = []
        for _ in range(4000):
            x = pts[rng.integers(0, 4)]
            z = (rng.standard_normal() + 1j * rng.standard_normal()) * math.sqrt(0.5)
            vals.append(information_density(complex(x + z), cfg, sig, 0, 0, x))
        se = np.std(vals, ddof=1) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - stats.mi) < 3 * (se + stats.std_error)


class TestEstimateStats:
    def test_matches_quadrature_oracle(self):
        cfg, sig = qpsk_scheme(10.0)
        stats = estimate_stats(cfg, sig, 0, 0, samples=100_000, seed=3)
        mi_ref = density_moments_quadrature(
            sig.constellations[(0, 0)].points * cfg.h[0], nodes=64
        )[0]
        assert abs(stats.mi - mi_ref) < 3 * stats.std_error

    def test_interfered_estimate_matches_quadrature(self):
        # both users of a loaded component, against the exhaustive-state oracle
        cfg = ChannelConfig.from_users(
            [UserSpec(24.0, 128, 1e-6), UserSpec(12.0, 200, 1e-5)]
        )
        sig = build_scheme(cfg, BitAllocation(m=((2,), (2, 4))))
        from hetmac.infodensity import _receive_tables

        for k in (0, 1):
            own, w = _receive_tables(cfg, sig, k, 0, 1 << 20)
            stats = estimate_stats(cfg, sig, k, 0, samples=100_000, seed=41)
            mi_ref = tin_mi_quadrature(own, w, nodes=48)
            assert abs(stats.mi - mi_ref) < 3 * stats.std_error, (k, stats.mi, mi_ref)

    def test_weak_signal_limit(self):
        cfg, sig = faint_qpsk_scheme(0.05)
        stats = estimate_stats(cfg, sig, 0, 0, samples=20_000, seed=2)
        assert stats.mi < 0.01
        assert stats.dispersion < 0.01

    def test_high_snr_dispersion_vanishes(self):
        cfg, sig = qpsk_scheme(30.0)
        stats = estimate_stats(cfg, sig, 0, 0, samples=20_000, seed=2)
        assert stats.mi == pytest.approx(2.0, abs=1e-3)
        assert stats.dispersion < 1e-3

    def test_mi_bounded_by_order(self):
        cfg, sig = qpsk_scheme(12.0)
        stats = estimate_stats(cfg, sig, 0, 0, samples=20_000, seed=9)
        assert stats.mi <= 2.0

    def test_deterministic_and_worker_independent(self):
        cfg, sig = qpsk_scheme(10.0)
        a = estimate_stats(cfg, sig, 0, 0, samples=20_000, seed=7, workers=1)
        b = estimate_stats(cfg, sig, 0, 0, samples=20_000, seed=7, workers=4)
        assert a == b

    def test_two_seeds_agree(self):
        cfg, sig = qpsk_scheme(6.0)
        a = estimate_stats(cfg, sig, 0, 0, samples=50_000, seed=1)
        b = estimate_stats(cfg, sig, 0, 0, samples=50_000, seed=2)
        assert abs(a.mi - b.mi) < 4 * math.hypot(a.std_error, b.std_error)

    def test_sample_floor(self):
        cfg, sig = qpsk_scheme(10.0)
        with pytest.raises(ValueError):
            estimate_stats(cfg, sig, 0, 0, samples=500, seed=1)

    def test_swapped_input_order_gives_identical_results(self):
        users = [UserSpec(24.0, 100, 1e-5), UserSpec(18.0, 150, 1e-5), UserSpec(12.0, 200, 1e-5)]
        swapped = [users[0], users[2], users[1]]
        alloc = BitAllocation(m=((2,), (2, 2), (2, 2, 2)))
        stats = []
        for specs in (users, swapped):
            cfg = ChannelConfig.from_users(specs)
            sig = build_scheme(cfg, alloc)
            stats.append(estimate_stats(cfg, sig, 0, 0, samples=10_000, seed=11))
        assert stats[0] == stats[1]


class TestSumConstellation:
    def test_sum_mi_keeps_constant_gap(self):
        # the full receive constellation of a loaded component carries at
        # least the allocated total minus the universal gap
        cfg = ChannelConfig.from_users(
            [UserSpec(24.0, 128, 1e-6), UserSpec(12.0, 200, 1e-5)]
        )
        alloc = BitAllocation(m=((4,), (4, 4)))
        sig = build_scheme(cfg, alloc)
        from hetmac.signaling import superimpose

        sup = superimpose(sig, cfg, 0)
        # the fully loaded ladder collapses to a scaled regular 256-QAM,
        # so a single-part alphabet reproduces the sum distribution exactly
        part = ScaledPart(8, sup.dmin)
        const = Constellation.from_points(part.points())
        assert np.allclose(
            np.sort_complex(const.points), np.sort_complex(sup.points), rtol=1e-9
        )
        sum_cfg = ChannelConfig.from_users([UserSpec(30.0, 128, 1e-6)])
        sum_sig = SchemeSignaling(
            scheme_type=1,
            parts={(0, 0): (part,)},
            constellations={(0, 0): const},
            eta=(1.0,),
            energies={(0, 0): part.energy},
            zeta={(0, 0): 1.0},
        )
        stats = estimate_stats(sum_cfg, sum_sig, 0, 0, samples=50_000, seed=17)
        total_bits = 8
        assert stats.mi >= total_bits - MI_GAP_BITS - 3 * stats.std_error


class TestClosedForms:
    def test_mi_lower_bound_values(self):
        alloc = BitAllocation(m=((4,), (0, 8)))
        gap = math.log2(5 * math.pi * math.e / 6)
        assert MI_GAP_BITS == pytest.approx(gap)
        assert mi_lower_bound(alloc, 0, 0) == pytest.approx(4 - gap)
        assert mi_lower_bound(alloc, 1, 0) == 0.0
        assert mi_lower_bound(alloc, 1, 1) == pytest.approx(8 - gap)

    def test_gaussian_tin_mi_reference_values(self):
        cfg = ChannelConfig.from_users(
            [UserSpec(24.0, 128, 1e-6), UserSpec(12.0, 200, 1e-5)]
        )
        s1, s2 = cfg.snr
        assert gaussian_tin_mi(cfg, 0, 0) == pytest.approx(
            math.log2(1 + s1 / (1 + s2)), rel=1e-12
        )
        assert gaussian_tin_mi(cfg, 0, 0) == pytest.approx(3.9916, abs=2e-4)
        assert gaussian_tin_mi(cfg, 1, 0) == pytest.approx(0.0879, abs=2e-4)
        assert gaussian_tin_mi(cfg, 1, 0) < 1.0
        # the weak user's clean sub-block sees no interference
        assert gaussian_tin_mi(cfg, 1, 1) == pytest.approx(math.log2(1 + s2), rel=1e-12)
