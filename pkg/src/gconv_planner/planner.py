"""Optimum group-size model, energy proxy and E2GC/FgGC network rewriting."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import List, Tuple

from .core import (
    CostBreakdown,
    LayerSpec,
    NetworkSpec,
    ValidationError,
    Diagnostic,
    layer_cost,
    validate,
)

E2GC = "e2gc"
FGGC = "fggc"
SCONV = "sconv"
DWCONV = "dwconv"
STRATEGY_KINDS = (E2GC, FGGC, SCONV, DWCONV)


@dataclass(frozen=True)
class EnergyModelParams:
    """Constants of the balance model.

    alpha: memory-hierarchy reuse factor in (0, 1].
    beta: compute/memory energy-disparity exponent in (0, 1).
    gamma: balance level (absorbs the balance constant and ``alpha**-beta``).
    target_G: the constant group size used by E2GC rewriting.
    scale_k: multiplicative proxy scale (absorbs alpha for fitted models).
    """

    alpha: float = 1.0
    beta: float = 0.5
    gamma: float = 1.0
    target_G: int = 1
    scale_k: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if isinstance(self.target_G, bool) or not isinstance(self.target_G, int) or self.target_G < 1:
            raise ValueError(f"target_G must be a positive integer, got {self.target_G}")
        if not self.scale_k > 0.0:
            raise ValueError(f"scale_k must be positive, got {self.scale_k}")

    @classmethod
    def anchored(cls, layer: LayerSpec, group_size: float, **kwargs) -> "EnergyModelParams":
        """Choose gamma so that ``layer`` balances at ``m / g == group_size``."""
        beta = kwargs.get("beta", cls.beta)
        g_target = layer.m / group_size
        gamma = _balance_numerator(layer, beta) / g_target
        return cls(gamma=gamma, **kwargs)


_STRATEGY_RE = re.compile(r"^(e2gc):G=(\d+)$|^(fggc):g=(\d+)$|^(sconv|dwconv)$")


@dataclass(frozen=True)
class GroupingStrategy:
    kind: str
    value: int = 1

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown grouping strategy {self.kind!r}")
        if isinstance(self.value, bool) or not isinstance(self.value, int) or self.value < 1:
            raise ValueError(f"strategy value must be a positive integer, got {self.value!r}")

    @classmethod
    def parse(cls, text: str) -> "GroupingStrategy":
        """Parse ``e2gc:G=<int>``, ``fggc:g=<int>``, ``sconv`` or ``dwconv``.

        The ``/`` separator used inside config ids is accepted as well.
        """
        match = _STRATEGY_RE.match(text.strip().replace("/", ":"))
        if not match:
            raise ValueError(
                f"bad strategy {text!r}; expected e2gc:G=<int>, fggc:g=<int>, sconv or dwconv"
            )
        if match.group(1):
            return cls(E2GC, int(match.group(2)))
        if match.group(3):
            return cls(FGGC, int(match.group(4)))
        return cls(match.group(5))

    def __str__(self):
        if self.kind == E2GC:
            return f"e2gc:G={self.value}"
        if self.kind == FGGC:
            return f"fggc:g={self.value}"
        return self.kind

    @property
    def label(self) -> str:
        """Form used inside config ids, e.g. ``e2gc/G=8``."""
        return str(self).replace(":", "/")


def _balance_numerator(layer: LayerSpec, beta: float) -> float:
    return layer.m * layer.n * layer.dk_h * layer.dk_w * (layer.h * layer.w) ** (1.0 - beta)


def balanced_groups(layer: LayerSpec, params: EnergyModelParams) -> float:
    """Continuous group count at which ``mc**(1-beta) * P**beta == gamma``.

    Activations are left out of the balance because they do not depend on g.
    """
    return _balance_numerator(layer, params.beta) / params.gamma


def balance_residual(layer: LayerSpec, g: float, beta: float) -> float:
    """``mc(g)**(1-beta) * P_weight(g)**beta`` for a continuous g."""
    kernel = layer.dk_h * layer.dk_w
    mc = layer.m * layer.n * layer.h * layer.w * kernel / g
    p = layer.m * layer.n * kernel / g
    return mc ** (1.0 - beta) * p**beta


def _divisors(k: int) -> List[int]:
    small, large = [], []
    d = 1
    while d * d <= k:
        if k % d == 0:
            small.append(d)
            if d != k // d:
                large.append(k // d)
        d += 1
    return small + large[::-1]


def common_divisors(m: int, n: int) -> List[int]:
    return _divisors(math.gcd(m, n))


def round_to_valid(g_star: float, m: int, n: int) -> int:
    """Common divisor of m and n nearest to ``g_star`` in log space.

    Ties (within floating tolerance) go to the smaller divisor.
    """
    if not g_star > 0:
        raise ValueError(f"g_star must be positive, got {g_star}")
    target = math.log(g_star)
    best, best_dist = 1, math.inf
    for d in common_divisors(m, n):
        dist = abs(math.log(d) - target)
        if dist < best_dist - 1e-12:
            best, best_dist = d, dist
    return best


def _e2gc_groups(layer: LayerSpec, G: int) -> int:
    if G <= layer.m and layer.m % G == 0 and layer.n % (layer.m // G) == 0:
        return layer.m // G
    # fallback: largest common divisor not exceeding m / min(G, m)
    limit = layer.m // min(G, layer.m)
    return max(d for d in common_divisors(layer.m, layer.n) if d <= limit)


def plan(net: NetworkSpec, strategy: GroupingStrategy) -> NetworkSpec:
    """Rewrite the grouped layer of every substitution site.

    Pointwise layers and layers outside substitution sites are untouched.
    Raises :class:`ValidationError` if the result has divisibility problems.
    """
    sites = set(net.site_layer_ids)
    layers = []
    for layer in net.layers:
        if layer.id in sites:
            if strategy.kind == E2GC:
                g = _e2gc_groups(layer, strategy.value)
            elif strategy.kind == FGGC:
                g = strategy.value
            elif strategy.kind == SCONV:
                g = 1
            else:
                g = layer.m
            layer = replace(layer, g=g)
        layers.append(layer)
    out = replace(net, layers=tuple(layers))
    diags = validate(out)
    if diags:
        raise ValidationError(
            f"strategy {strategy} is not applicable to {net.name}: "
            + "; ".join(str(d) for d in diags),
            diags,
        )
    return out


def constant_G_derivation(
    net: NetworkSpec, params: EnergyModelParams
) -> List[Tuple[str, float, float]]:
    """Balanced ``g*`` and implied ``G* = m / g*`` for every site layer.

    Requires square output feature maps at every site.
    """
    rows = []
    for layer_id in net.site_layer_ids:
        layer = net.layer(layer_id)
        if layer.h != layer.w:
            raise ValidationError(
                f"layer {layer_id!r}: non-square ofmap {layer.h}x{layer.w}",
                [Diagnostic(layer_id, "ofmap must be square", f"{layer.h}x{layer.w}")],
            )
        g_star = balanced_groups(layer, params)
        rows.append((layer_id, g_star, layer.m / g_star))
    return rows


def is_constant(values, rel_tol: float = 1e-10) -> bool:
    values = list(values)
    return all(math.isclose(v, values[0], rel_tol=rel_tol) for v in values)


def energy_proxy(cost: CostBreakdown, params: EnergyModelParams) -> float:
    """``scale_k * mc**(1-beta) * (activations + params)**beta``."""
    if cost.mc == 0 or cost.footprint == 0:
        return 0.0
    beta = params.beta
    return params.scale_k * float(cost.mc) ** (1.0 - beta) * float(cost.footprint) ** beta


def network_energy(net: NetworkSpec, params: EnergyModelParams) -> float:
    """Sum of per-layer proxies."""
    return math.fsum(energy_proxy(layer_cost(layer), params) for layer in net.layers)
