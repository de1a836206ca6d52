"""Vectorized numpy/scipy implementations of the hot kernels.

All arithmetic is exact (int64 window sums, floor division) so results are
bit-identical to the numba backend.
"""
import numpy as np
from scipy import ndimage

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int8)


def mean_filter(vol: np.ndarray, k: int) -> np.ndarray:
    """Normalized (2k+1)^2 mean filter per slice with edge replication.

    Window sums use an integral image in int64; the mean is rounded
    half-up via ``(sum + area // 2) // area``.
    """
    wlen = 2 * k + 1
    area = wlen * wlen
    half = area // 2
    out = np.empty_like(vol)
    for s in range(vol.shape[0]):
        padded = np.pad(vol[s], k, mode="edge").astype(np.int64)
        integ = padded.cumsum(axis=0).cumsum(axis=1)
        integ = np.pad(integ, ((1, 0), (1, 0)))
        sums = (
            integ[wlen:, wlen:]
            - integ[:-wlen, wlen:]
            - integ[wlen:, :-wlen]
            + integ[:-wlen, :-wlen]
        )
        out[s] = ((sums + half) // area).astype(vol.dtype)
    return out


def _erode3(masks: np.ndarray) -> np.ndarray:
    h, w = masks.shape[1], masks.shape[2]
    padded = np.pad(masks, ((0, 0), (1, 1), (1, 1)), constant_values=False)
    out = np.ones_like(masks)
    for di in range(3):
        for dj in range(3):
            out &= padded[:, di : di + h, dj : dj + w]
    return out


def _dilate3(masks: np.ndarray) -> np.ndarray:
    h, w = masks.shape[1], masks.shape[2]
    padded = np.pad(masks, ((0, 0), (1, 1), (1, 1)), constant_values=False)
    out = np.zeros_like(masks)
    for di in range(3):
        for dj in range(3):
            out |= padded[:, di : di + h, dj : dj + w]
    return out


def binary_opening(masks: np.ndarray) -> np.ndarray:
    """One pass of 3x3 binary opening (full square element, zero border)."""
    return _dilate3(_erode3(masks))


def remove_small_components(masks: np.ndarray, min_size: float) -> np.ndarray:
    """Drop 4-connected components with fewer than ``min_size`` pixels."""
    out = np.zeros_like(masks)
    for s in range(masks.shape[0]):
        labeled, n = ndimage.label(masks[s], structure=_CROSS)
        if n == 0:
            continue
        sizes = np.bincount(labeled.ravel(), minlength=n + 1)
        keep = sizes.astype(np.float64) >= min_size
        keep[0] = False
        out[s] = keep[labeled]
    return out
