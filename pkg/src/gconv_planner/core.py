"""Layer/network data model and the exact cost algebra of grouped convolution.

All counts are per frame (batch size 1) and kept as Python integers so that
network totals are exact regardless of platform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

CONV = "conv"
FULLY_CONNECTED = "fully_connected"
LAYER_KINDS = (CONV, FULLY_CONNECTED)


class ValidationError(ValueError):
    """A layer or network violates a structural invariant."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


@dataclass(frozen=True)
class LayerSpec:
    """One convolution (or fully connected) layer.

    ``h`` and ``w`` are the *output* feature-map dimensions. A fully connected
    layer is a 1x1 convolution over a 1x1 feature map.
    """

    id: str
    m: int
    n: int
    dk_h: int = 1
    dk_w: int = 1
    h: int = 1
    w: int = 1
    stride: int = 1
    padding: int = 0
    g: int = 1
    has_bias: bool = False
    has_batchnorm: bool = False
    kind: str = CONV

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ValueError(f"layer {self.id!r}: unknown kind {self.kind!r}")
        for name in ("m", "n", "dk_h", "dk_w", "h", "w", "stride", "g"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ValueError(f"layer {self.id!r}: {name} must be a positive integer, got {value!r}")
        if isinstance(self.padding, bool) or not isinstance(self.padding, int) or self.padding < 0:
            raise ValueError(f"layer {self.id!r}: padding must be a non-negative integer")

    @property
    def group_size(self) -> float:
        """Channels seen by each filter, ``m / g``."""
        return self.m / self.g

    @property
    def is_pointwise(self) -> bool:
        return self.dk_h == 1 and self.dk_w == 1


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    layers: Tuple[LayerSpec, ...] = ()
    substitution_sites: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(
            self, "substitution_sites", tuple((str(a), str(b)) for a, b in self.substitution_sites)
        )

    def layer(self, layer_id: str) -> LayerSpec:
        for layer in self.layers:
            if layer.id == layer_id:
                return layer
        raise KeyError(layer_id)

    @property
    def site_layer_ids(self) -> List[str]:
        """Ids of the grouped (first) layer of every substitution site."""
        return [first for first, _ in self.substitution_sites]


@dataclass(frozen=True)
class CostBreakdown:
    """MACs, parameters and activation elements of a layer or network."""

    mc: int = 0
    params: int = 0
    activations: int = 0

    @property
    def footprint(self) -> int:
        """Data elements touched: ``params + activations``."""
        return self.params + self.activations

    @property
    def ai(self) -> float:
        """Arithmetic intensity, MACs per data element."""
        denom = self.params + self.activations
        if denom == 0:
            return 0.0
        return self.mc / denom

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        if not isinstance(other, CostBreakdown):
            return NotImplemented
        return CostBreakdown(
            self.mc + other.mc, self.params + other.params, self.activations + other.activations
        )


@dataclass(frozen=True)
class Diagnostic:
    layer_id: Optional[str]
    rule: str
    detail: str = ""

    def __str__(self):
        where = f"layer {self.layer_id!r}" if self.layer_id is not None else "network"
        msg = f"{where}: {self.rule}"
        return f"{msg} ({self.detail})" if self.detail else msg


def _layer_diagnostics(layer: LayerSpec) -> List[Diagnostic]:
    diags = []
    if layer.m % layer.g:
        diags.append(Diagnostic(layer.id, "g does not divide m", f"g={layer.g}, m={layer.m}"))
    if layer.n % layer.g:
        diags.append(Diagnostic(layer.id, "g does not divide n", f"g={layer.g}, n={layer.n}"))
    if layer.kind == FULLY_CONNECTED and (layer.h, layer.w, layer.dk_h, layer.dk_w) != (1, 1, 1, 1):
        diags.append(
            Diagnostic(layer.id, "fully_connected layer must have unit kernel and feature map")
        )
    return diags


def weight_params(layer: LayerSpec) -> int:
    """Filter weights only, ``n * m * dk_h * dk_w / g``."""
    return layer.n * layer.m * layer.dk_h * layer.dk_w // layer.g


def layer_cost(layer: LayerSpec) -> CostBreakdown:
    """Exact per-frame cost of one layer.

    The input feature map is counted at its own spatial size
    ``(stride*h) x (stride*w)``; with stride 1 this reduces to ``(n+m)*h*w``.
    """
    diags = _layer_diagnostics(layer)
    if diags:
        raise ValidationError("; ".join(str(d) for d in diags), diags)
    mc = layer.n * layer.m * layer.h * layer.w * layer.dk_h * layer.dk_w // layer.g
    params = weight_params(layer)
    if layer.has_bias:
        params += layer.n
    if layer.has_batchnorm:
        params += 2 * layer.n
    s = layer.stride
    activations = layer.m * (s * layer.h) * (s * layer.w) + layer.n * layer.h * layer.w
    return CostBreakdown(mc, params, activations)


def network_cost(net: NetworkSpec) -> Tuple[CostBreakdown, List[CostBreakdown]]:
    """Per-layer costs and their element-wise total."""
    per_layer = [layer_cost(layer) for layer in net.layers]
    total = CostBreakdown()
    for cost in per_layer:
        total = total + cost
    return total, per_layer


def validate(net: NetworkSpec) -> List[Diagnostic]:
    """Return every invariant violation in ``net``; empty means valid.

    Channel chaining is checked against *any* earlier layer so that branches
    (e.g. residual projections that consume a block's input) are accepted:
    every layer after the first must read a channel count that some earlier
    layer produces.
    """
    diags: List[Diagnostic] = []
    seen_ids = set()
    produced = set()
    for i, layer in enumerate(net.layers):
        if layer.id in seen_ids:
            diags.append(Diagnostic(layer.id, "duplicate layer id"))
        seen_ids.add(layer.id)
        diags.extend(_layer_diagnostics(layer))
        if i == 0:
            produced.add(layer.m)
        elif layer.m not in produced:
            prev = net.layers[i - 1]
            diags.append(
                Diagnostic(
                    layer.id,
                    "in_channels do not chain with any earlier layer",
                    f"m={layer.m}, previous layer {prev.id!r} has n={prev.n}",
                )
            )
        produced.add(layer.n)

    by_id = {layer.id: layer for layer in net.layers}
    used = set()
    for first, second in net.substitution_sites:
        for lid in (first, second):
            if lid not in by_id:
                diags.append(Diagnostic(lid, "substitution site references unknown layer"))
        if second in by_id and not by_id[second].is_pointwise:
            diags.append(Diagnostic(second, "second layer of a substitution site must be 1x1"))
        if first in used:
            diags.append(Diagnostic(first, "layer appears in more than one substitution site"))
        used.add(first)
    return diags


def check(net: NetworkSpec) -> NetworkSpec:
    """Raise :class:`ValidationError` if ``net`` has any diagnostics."""
    diags = validate(net)
    if diags:
        raise ValidationError("; ".join(str(d) for d in diags), diags)
    return net

