"""Randomized oracle suite for the reference kernels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .kernels import (
    GroupedWeights,
    MacCounter,
    analytic_macs,
    block_diag_expand,
    conv2d_grouped,
    dense_conv2d_reference,
    module_forward,
    output_size,
)

DEFAULT_SEED = 20240531
ORACLE_ATOL = 1e-12
LINEARITY_ATOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def random_config(rng: np.random.Generator):
    """Small random grouped-conv problem with a valid output size."""
    g = int(rng.choice([1, 2, 3, 4, 8]))
    m = g * int(rng.integers(1, 16 // g + 1))
    n = g * int(rng.integers(1, 16 // g + 1))
    k = int(rng.choice([1, 2, 3]))
    stride = int(rng.choice([1, 2]))
    padding = int(rng.integers(0, k))
    batch = int(rng.integers(1, 3))
    while True:
        height = int(rng.integers(k, 9))
        width = int(rng.integers(k, 9))
        if (height + 2 * padding - k) % stride == 0 and (width + 2 * padding - k) % stride == 0:
            break
    x = rng.uniform(-1, 1, size=(batch, m, height, width))
    w = GroupedWeights(rng.uniform(-1, 1, size=(n, m // g, k, k)), g)
    return x, w, stride, padding


def oracle_equivalence(n_configs: int = 100, seed: int = DEFAULT_SEED) -> List[CheckResult]:
    """Grouped kernel vs dense loops on block-diagonal weights, plus MAC count."""
    rng = np.random.default_rng(seed)
    worst, mac_failures = 0.0, 0
    for _ in range(n_configs):
        x, w, stride, padding = random_config(rng)
        counter = MacCounter()
        got = conv2d_grouped(x, w, stride, padding, counter)
        want = dense_conv2d_reference(x, block_diag_expand(w).data, stride, padding)
        worst = max(worst, float(np.max(np.abs(got - want))))
        h_out = output_size(x.shape[2], w.kh, stride, padding)
        w_out = output_size(x.shape[3], w.kw, stride, padding)
        if counter.count != analytic_macs(x.shape[0], w, h_out, w_out):
            mac_failures += 1
    return [
        CheckResult("oracle_equivalence", worst <= ORACLE_ATOL,
                    f"{n_configs} configs, max |diff| = {worst:.3g} (tol {ORACLE_ATOL:g})"),
        CheckResult("mac_counter_exact", mac_failures == 0,
                    f"{mac_failures} of {n_configs} runs disagree with the analytic MAC count"),
    ]


def linearity(n_configs: int = 20, seed: int = DEFAULT_SEED + 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_configs):
        x, w, stride, padding = random_config(rng)
        y = rng.uniform(-1, 1, size=x.shape)
        a, b = rng.uniform(-2, 2, size=2)
        lhs = conv2d_grouped(a * x + b * y, w, stride, padding)
        rhs = a * conv2d_grouped(x, w, stride, padding) + b * conv2d_grouped(y, w, stride, padding)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return CheckResult("linearity", worst <= LINEARITY_ATOL, f"max |diff| = {worst:.3g} (tol {LINEARITY_ATOL:g})")


def group_locality(n_configs: int = 20, seed: int = DEFAULT_SEED + 2) -> CheckResult:
    """Perturbing one input channel only moves outputs of the same group."""
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(n_configs):
        x, w, stride, padding = random_config(rng)
        base = conv2d_grouped(x, w, stride, padding)
        c = int(rng.integers(0, w.m))
        bumped = x.copy()
        bumped[:, c] += 1.0
        moved = np.any(conv2d_grouped(bumped, w, stride, padding) != base, axis=(0, 2, 3))
        per = w.n // w.g
        grp = c // w.c_per_group
        outside = np.ones(w.n, dtype=bool)
        outside[grp * per:(grp + 1) * per] = False
        if np.any(moved[outside]):
            violations += 1
    return CheckResult("group_locality", violations == 0, f"{violations} of {n_configs} configs leaked across groups")


def module_check(seed: int = DEFAULT_SEED + 3) -> CheckResult:
    """Grouped 3x3 + pointwise module vs two dense stages."""
    rng = np.random.default_rng(seed)
    m, n, G = 8, 8, 2
    g = m // G
    x = rng.uniform(-1, 1, size=(1, m, 6, 6))
    w3 = GroupedWeights(rng.uniform(-1, 1, size=(n, G, 3, 3)), g)
    w1 = GroupedWeights(rng.uniform(-1, 1, size=(n, n, 1, 1)), 1)
    counter = MacCounter()
    got = module_forward(x, w3, w1, counter)
    mid = dense_conv2d_reference(x, block_diag_expand(w3).data, 1, 1)
    want = dense_conv2d_reference(mid, w1.data, 1, 0)
    err = float(np.max(np.abs(got - want)))
    expected_macs = n * m * 9 * 36 // g + n * n * 36
    ok = err <= ORACLE_ATOL and counter.count == expected_macs
    return CheckResult("module_forward", ok, f"max |diff| = {err:.3g}, macs {counter.count} vs {expected_macs}")


def determinism(seed: int = DEFAULT_SEED + 4) -> CheckResult:
    rng = np.random.default_rng(seed)
    x, w, stride, padding = random_config(rng)
    first = conv2d_grouped(x, w, stride, padding)
    second = conv2d_grouped(x, w, stride, padding)
    return CheckResult("determinism", bool(np.array_equal(first, second)), "two identical runs")


def run_suite(n_configs: int = 100, seed: int = DEFAULT_SEED) -> List[CheckResult]:
    return [
        *oracle_equivalence(n_configs, seed),
        linearity(seed=seed + 1),
        group_locality(seed=seed + 2),
        module_check(seed=seed + 3),
        determinism(seed=seed + 4),
    ]
