"""Naive grouped-convolution forward kernel with an instrumented MAC counter.

Tensors are float64 numpy arrays in NCHW layout; weights are
``(n, m // g, kh, kw)``. Every tap of every filter is counted as a MAC,
including taps that fall on zero padding, so the counter equals the analytic
``n * (m/g) * kh * kw * h_out * w_out`` per image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MacCounter:
    count: int = 0

    def add(self, k: int) -> None:
        self.count += int(k)


@dataclass
class GroupedWeights:
    data: np.ndarray
    g: int = 1

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 4:
            raise ValueError(f"weights must be rank 4 (n, c_per_group, kh, kw), got shape {self.data.shape}")
        if self.g < 1 or self.n % self.g:
            raise ValueError(f"g={self.g} does not divide n={self.n}")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def c_per_group(self) -> int:
        return self.data.shape[1]

    @property
    def kh(self) -> int:
        return self.data.shape[2]

    @property
    def kw(self) -> int:
        return self.data.shape[3]

    @property
    def m(self) -> int:
        return self.c_per_group * self.g


def output_size(size: int, k: int, stride: int, padding: int) -> int:
    span = size + 2 * padding - k
    if span < 0 or span % stride:
        raise ValueError(
            f"non-integral output size: ({size} + 2*{padding} - {k}) / {stride} + 1"
        )
    return span // stride + 1


def _as_tensor4(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or min(x.shape) < 1:
        raise ValueError(f"expected a non-empty NCHW tensor, got shape {x.shape}")
    return x


def conv2d_grouped(x, w: GroupedWeights, stride: int = 1, padding: int = 0, counter: MacCounter | None = None):
    """Direct grouped convolution, no bias.

    Output channel ``o`` belongs to group ``o // (n/g)`` and reads only the
    input channels of that group.
    """
    x = _as_tensor4(x)
    batch, m, height, width = x.shape
    if m != w.m:
        raise ValueError(f"input has {m} channels, weights expect {w.m} ({w.g} groups of {w.c_per_group})")
    h_out = output_size(height, w.kh, stride, padding)
    w_out = output_size(width, w.kw, stride, padding)
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    cpg, kh, kw = w.c_per_group, w.kh, w.kw
    filters_per_group = w.n // w.g
    out = np.empty((batch, w.n, h_out, w_out), dtype=np.float64)
    for b in range(batch):
        for o in range(w.n):
            c0 = (o // filters_per_group) * cpg
            filt = w.data[o].ravel()
            for i in range(h_out):
                y0 = i * stride
                for j in range(w_out):
                    x0 = j * stride
                    patch = xp[b, c0:c0 + cpg, y0:y0 + kh, x0:x0 + kw].ravel()
                    out[b, o, i, j] = np.dot(filt, patch)
    if counter is not None:
        counter.add(batch * w.n * cpg * kh * kw * h_out * w_out)
    return out


def block_diag_expand(w: GroupedWeights) -> GroupedWeights:
    """Dense (g=1) weights equal to ``w`` with zeros off the group blocks."""
    if w.g == 1:
        return w
    dense = np.zeros((w.n, w.m, w.kh, w.kw), dtype=np.float64)
    per = w.n // w.g
    cpg = w.c_per_group
    for grp in range(w.g):
        dense[grp * per:(grp + 1) * per, grp * cpg:(grp + 1) * cpg] = w.data[grp * per:(grp + 1) * per]
    return GroupedWeights(dense, 1)


def module_forward(x, w3: GroupedWeights, w1: GroupedWeights, counter: MacCounter | None = None,
                   stride: int = 1, padding: int | None = None):
    """Grouped spatial convolution followed by a dense pointwise convolution."""
    if w1.kh != 1 or w1.kw != 1 or w1.g != 1:
        raise ValueError("pointwise weights must be 1x1 with g=1")
    if w1.m != w3.n:
        raise ValueError(f"chaining mismatch: grouped layer yields {w3.n} channels, pointwise expects {w1.m}")
    if padding is None:
        padding = w3.kh // 2
    y = conv2d_grouped(x, w3, stride=stride, padding=padding, counter=counter)
    return conv2d_grouped(y, w1, stride=1, padding=0, counter=counter)


def dense_conv2d_reference(x, weights, stride: int = 1, padding: int = 0):
    """Plain dense convolution as explicit scalar loops (test oracle)."""
    x = np.asarray(x, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    batch, m, height, width = x.shape
    n, m_w, kh, kw = weights.shape
    if m_w != m:
        raise ValueError("dense weights must span every input channel")
    h_out = output_size(height, kh, stride, padding)
    w_out = output_size(width, kw, stride, padding)
    out = np.zeros((batch, n, h_out, w_out))
    for b in range(batch):
        for o in range(n):
            for i in range(h_out):
                for j in range(w_out):
                    acc = 0.0
                    for c in range(m):
                        for p in range(kh):
                            yy = i * stride + p - padding
                            if yy < 0 or yy >= height:
                                continue
                            for q in range(kw):
                                xx = j * stride + q - padding
                                if 0 <= xx < width:
                                    acc += weights[o, c, p, q] * x[b, c, yy, xx]
                    out[b, o, i, j] = acc
    return out


def analytic_macs(batch: int, w: GroupedWeights, h_out: int, w_out: int) -> int:
    return batch * w.n * w.m * w.kh * w.kw * h_out * w_out // w.g
