"""Numba-jitted implementations of the hot kernels.

Same exact integer arithmetic as the numpy backend; kernels are cached to
disk so repeat processes skip JIT compilation.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _mean_filter_slice(img, k, out):
    h, w = img.shape
    ph = h + 2 * k
    pw = w + 2 * k
    # integral image over the edge-replicated slice, one guard row/column
    integ = np.zeros((ph + 1, pw + 1), np.int64)
    for i in range(ph):
        src_i = min(max(i - k, 0), h - 1)
        row_sum = np.int64(0)
        for j in range(pw):
            src_j = min(max(j - k, 0), w - 1)
            row_sum += img[src_i, src_j]
            integ[i + 1, j + 1] = integ[i, j + 1] + row_sum
    wlen = 2 * k + 1
    area = wlen * wlen
    half = area // 2
    for i in range(h):
        for j in range(w):
            s = (
                integ[i + wlen, j + wlen]
                - integ[i, j + wlen]
                - integ[i + wlen, j]
                + integ[i, j]
            )
            out[i, j] = (s + half) // area


def mean_filter(vol: np.ndarray, k: int) -> np.ndarray:
    """Normalized (2k+1)^2 mean filter per slice with edge replication."""
    out = np.empty_like(vol)
    for s in range(vol.shape[0]):
        _mean_filter_slice(vol[s], k, out[s])
    return out


@njit(cache=True)
def _open_slice(mask, out):
    # the 3x3 square element separates into a column pass and a row pass
    h, w = mask.shape
    tmp = np.zeros((h, w), np.bool_)
    eroded = np.zeros((h, w), np.bool_)
    for i in range(1, h - 1):
        for j in range(w):
            tmp[i, j] = mask[i - 1, j] and mask[i, j] and mask[i + 1, j]
    for i in range(h):
        for j in range(1, w - 1):
            eroded[i, j] = tmp[i, j - 1] and tmp[i, j] and tmp[i, j + 1]
    for i in range(h):
        up = max(i - 1, 0)
        down = min(i + 1, h - 1)
        for j in range(w):
            tmp[i, j] = eroded[up, j] or eroded[i, j] or eroded[down, j]
    for i in range(h):
        for j in range(w):
            left = max(j - 1, 0)
            right = min(j + 1, w - 1)
            out[i, j] = tmp[i, left] or tmp[i, j] or tmp[i, right]


def binary_opening(masks: np.ndarray) -> np.ndarray:
    """One pass of 3x3 binary opening (full square element, zero border)."""
    out = np.zeros_like(masks)
    for s in range(masks.shape[0]):
        _open_slice(masks[s], out[s])
    return out


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _filter_components_slice(mask, min_size, out):
    h, w = mask.shape
    labels = np.zeros(h * w, np.int32)
    # 4-connected components cannot exceed a checkerboard count
    parent = np.zeros(h * w // 2 + 2, np.int32)
    n_labels = 0
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                continue
            idx = i * w + j
            left = labels[idx - 1] if j > 0 and mask[i, j - 1] else 0
            top = labels[idx - w] if i > 0 and mask[i - 1, j] else 0
            if left == 0 and top == 0:
                n_labels += 1
                parent[n_labels] = n_labels
                labels[idx] = n_labels
            elif left == 0:
                labels[idx] = top
            elif top == 0:
                labels[idx] = left
            else:
                rl = _find(parent, left)
                rt = _find(parent, top)
                if rl < rt:
                    parent[rt] = rl
                    labels[idx] = rl
                else:
                    parent[rl] = rt
                    labels[idx] = rt
    sizes = np.zeros(n_labels + 1, np.int64)
    for idx in range(h * w):
        lab = labels[idx]
        if lab != 0:
            root = _find(parent, lab)
            labels[idx] = root
            sizes[root] += 1
    for i in range(h):
        for j in range(w):
            lab = labels[i * w + j]
            out[i, j] = lab != 0 and sizes[lab] >= min_size


def remove_small_components(masks: np.ndarray, min_size: float) -> np.ndarray:
    """Drop 4-connected components with fewer than ``min_size`` pixels."""
    out = np.zeros_like(masks)
    for s in range(masks.shape[0]):
        _filter_components_slice(masks[s], min_size, out[s])
    return out
