"""Symbol-wise TIN information density and its Monte Carlo moments.

The density for user k in sub-block l is

    i(x; y) = log2( sum_w exp(-|y - h_k x - w|^2)
                    / ((1/|A_k|) sum_{x'} sum_w exp(-|y - h_k x' - w|^2)) )

where w runs over the received interferer superposition with
multiplicity and A_k is the user's sub-block alphabet.  The exponent is
the squared norm of the unit-variance circular Gaussian kernel.  Means,
variances and third absolute central moments are estimated by plain
Monte Carlo with an exhaustive inner sum, evaluated with max-shifted
(log-sum-exp) stabilization.

Sampling is organized in fixed-size chunks, each driven by its own
counter-based Philox stream keyed on (seed, chunk index), so results are
bit-identical no matter how chunks are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ChannelConfig
from .errors import ConstellationTooLargeError
from .signaling import DEFAULT_POINT_CAP, SchemeSignaling

LOG2_E = math.log2(math.e)
#: Gap constant of the constellation-constrained MI bound: log2(5*pi*e/6).
MI_GAP_BITS = math.log2(5.0 * math.pi * math.e / 6.0)

_CHUNK = 4096


@dataclass(frozen=True)
class DensityStats:
    """Sample moments of the information density, in bits per symbol."""

    mi: float
    dispersion: float
    third_moment: float
    std_error: float
    samples: int

    @classmethod
    def zeros(cls) -> "DensityStats":
        return cls(0.0, 0.0, 0.0, 0.0, 0)


def _receive_tables(
    cfg: ChannelConfig, sig: SchemeSignaling, k: int, l: int, point_cap: int
) -> tuple[np.ndarray, np.ndarray]:
    """Received own alphabet h_k*A_k and interferer sum multiset w."""
    own = sig.transmit_points(k, l) * cfg.h[k]
    interferers = np.zeros(1, dtype=np.complex128)
    total = own.size
    for i in range(l, cfg.users):
        if i == k:
            continue
        pts = sig.transmit_points(i, l) * cfg.h[i]
        total *= pts.size
        if total > point_cap:
            raise ConstellationTooLargeError(
                f"density sum would cover {total} points, cap is {point_cap}"
            )
        interferers = (interferers[:, None] + pts[None, :]).ravel()
    return own, interferers


_EVAL_BUDGET = 1 << 22  # max temporary size (samples x alphabet x interferers)


def _density_given_y(y: np.ndarray, x_idx: np.ndarray, own: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Vectorized density in bits for received samples y with sent index x_idx."""
    grid = own[:, None] + w[None, :]  # received points, multiplicity kept
    out = np.empty(y.size)
    step = max(1, _EVAL_BUDGET // max(1, grid.size))
    for s in range(0, y.size, step):
        rows = slice(s, min(s + step, y.size))
        # d2[j, a, b] = |y_j - own_a - w_b|^2, max-shifted before exponentiating
        diff = y[rows, None, None] - grid[None, :, :]
        d2 = diff.real**2 + diff.imag**2
        peak = d2.min(axis=(1, 2), keepdims=True)
        ex = np.exp(-(d2 - peak))
        num = ex[np.arange(ex.shape[0]), x_idx[rows], :].sum(axis=1)
        den = ex.sum(axis=(1, 2)) / own.size
        out[rows] = np.log2(num / den)
    return out


def information_density(
    y: complex,
    cfg: ChannelConfig,
    sig: SchemeSignaling,
    k: int,
    l: int,
    x_k: complex,
    point_cap: int = DEFAULT_POINT_CAP,
) -> float:
    """Density of one received value given the transmitted point x_k.

    x_k is a point of user k's sub-block alphabet (transmit side, before
    the channel gain).
    """
    own, w = _receive_tables(cfg, sig, k, l, point_cap)
    sent = complex(x_k) * cfg.h[k]
    idx = int(np.argmin(np.abs(own - sent)))
    if abs(own[idx] - sent) > 1e-9 * max(1.0, float(np.abs(own).max())):
        raise ValueError("x_k is not a point of the user's sub-block alphabet")
    val = _density_given_y(np.array([y], dtype=np.complex128), np.array([idx]), own, w)
    return float(val[0])


def _chunk_samples(
    seed: int, chunk: int, count: int, own: np.ndarray, w: np.ndarray
) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, chunk], dtype=np.uint64)))
    u_x = rng.random(count)
    u_w = rng.random(count)
    noise = rng.standard_normal(count) * math.sqrt(0.5) + 1j * (
        rng.standard_normal(count) * math.sqrt(0.5)
    )
    x_idx = np.minimum((u_x * own.size).astype(np.int64), own.size - 1)
    w_idx = np.minimum((u_w * w.size).astype(np.int64), w.size - 1)
    y = own[x_idx] + w[w_idx] + noise
    return _density_given_y(y, x_idx, own, w)


def estimate_stats(
    cfg: ChannelConfig,
    sig: SchemeSignaling,
    k: int,
    l: int,
    samples: int = 200_000,
    seed: int = 0,
    workers: int = 1,
    point_cap: int = DEFAULT_POINT_CAP,
) -> DensityStats:
    """Monte Carlo moments of the density for user k in sub-block l.

    Deterministic for a fixed seed regardless of the worker count; the
    noise has unit variance per complex sample, the SNR being carried
    entirely by the scaled constellations and channel gains.
    """
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples for stable moments")
    own, w = _receive_tables(cfg, sig, k, l, point_cap)
    chunks = [(c, min(_CHUNK, samples - c * _CHUNK)) for c in range((samples + _CHUNK - 1) // _CHUNK)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda cc: _chunk_samples(seed, cc[0], cc[1], own, w), chunks))
    else:
        parts = [_chunk_samples(seed, c, n, own, w) for c, n in chunks]
    dens = np.concatenate(parts)
    mi = float(dens.mean())
    centered = dens - mi
    dispersion = float(centered.dot(centered) / (samples - 1))
    third = float(np.mean(np.abs(centered) ** 3))
    return DensityStats(
        mi=mi,
        dispersion=dispersion,
        third_moment=third,
        std_error=math.sqrt(dispersion / samples),
        samples=samples,
    )


def mi_lower_bound(alloc, k: int, l: int) -> float:
    """Constant-gap bound: allocated bits minus log2(5*pi*e/6), floored at 0."""
    return max(0.0, alloc.m[k][l] - MI_GAP_BITS)


def gaussian_tin_mi(cfg: ChannelConfig, k: int, l: int) -> float:
    """TIN rate of Gaussian signaling: log2(1 + SNR_k / (1 + interferer SNRs))."""
    interference = sum(cfg.snr[i] for i in range(l, cfg.users) if i != k)
    return math.log2(1.0 + cfg.snr[k] / (1.0 + interference))
