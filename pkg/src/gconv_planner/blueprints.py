"""Layer tables for MobileNet-V1 and ResNeXt-50 (32x4d).

Counting convention, fixed once for both networks: convolution and classifier
weights plus the classifier bias. Batch-norm affine parameters are only
declared when ``BlueprintId.batchnorm`` is set. Pooling, activations and
residual additions carry no MACs and are not represented as layers.
ResNeXt downsamples with a stride-2 grouped 3x3 (and a stride-2 1x1
projection on the shortcut).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from .core import FULLY_CONNECTED, CostBreakdown, LayerSpec, NetworkSpec, check, network_cost
from .planner import DWCONV, E2GC, FGGC, GroupingStrategy, plan

MOBILENET_V1 = "mobilenet_v1"
RESNEXT50 = "resnext50_32x4d"
BLUEPRINT_NAMES = (MOBILENET_V1, RESNEXT50)

E2GC_GROUP_SIZES = (1, 2, 4, 8, 16, 32)
FGGC_GROUP_COUNTS = (2, 4, 8, 16, 32)

# (pointwise output channels, depthwise stride)
_MOBILENET_BLOCKS = (
    (64, 1), (128, 2), (128, 1), (256, 2), (256, 1), (512, 2),
    (512, 1), (512, 1), (512, 1), (512, 1), (512, 1),
    (1024, 2), (1024, 1),
)

# (blocks, bottleneck width, output channels, first-block stride)
_RESNEXT_STAGES = (
    (3, 128, 256, 1),
    (4, 256, 512, 2),
    (6, 512, 1024, 2),
    (3, 1024, 2048, 2),
)

NUM_CLASSES = 1000


@dataclass(frozen=True)
class BlueprintId:
    name: str
    input_resolution: int = 224
    width_multiplier: float = 1.0
    batchnorm: bool = False

    def __post_init__(self):
        if self.name not in BLUEPRINT_NAMES:
            raise ValueError(f"unknown blueprint {self.name!r}; choose from {', '.join(BLUEPRINT_NAMES)}")
        if self.input_resolution < 32 or self.input_resolution % 32:
            raise ValueError(f"input_resolution must be a positive multiple of 32, got {self.input_resolution}")
        if self.width_multiplier <= 0:
            raise ValueError("width_multiplier must be positive")
        if self.name != MOBILENET_V1 and self.width_multiplier != 1.0:
            raise ValueError("width_multiplier is only supported for mobilenet_v1")


def _scaled(channels: int, multiplier: float) -> int:
    scaled = channels * multiplier
    if abs(scaled - round(scaled)) > 1e-9 or round(scaled) < 1:
        raise ValueError(
            f"width multiplier {multiplier} gives non-integral channel count {scaled} (from {channels})"
        )
    return int(round(scaled))


def _conv(layer_id, m, n, k, out, stride=1, g=1, bn=False):
    return LayerSpec(
        id=layer_id, m=m, n=n, dk_h=k, dk_w=k, h=out, w=out,
        stride=stride, padding=k // 2, g=g, has_batchnorm=bn,
    )


def _classifier(m):
    return LayerSpec(id="fc", m=m, n=NUM_CLASSES, has_bias=True, kind=FULLY_CONNECTED)


def _mobilenet_v1(bp: BlueprintId) -> NetworkSpec:
    bn = bp.batchnorm
    size = bp.input_resolution // 2
    c = _scaled(32, bp.width_multiplier)
    layers = [_conv("conv1", 3, c, 3, size, stride=2, bn=bn)]
    sites = []
    for i, (out, stride) in enumerate(_MOBILENET_BLOCKS, start=1):
        out = _scaled(out, bp.width_multiplier)
        size //= stride
        layers.append(_conv(f"dw{i}", c, c, 3, size, stride=stride, g=c, bn=bn))
        layers.append(_conv(f"pw{i}", c, out, 1, size, bn=bn))
        sites.append((f"dw{i}", f"pw{i}"))
        c = out
    layers.append(_classifier(c))
    return NetworkSpec(MOBILENET_V1, layers, sites)


def _resnext50(bp: BlueprintId, cardinality: int = 32) -> NetworkSpec:
    bn = bp.batchnorm
    size = bp.input_resolution // 2
    layers = [_conv("conv1", 3, 64, 7, size, stride=2, bn=bn)]
    size //= 2  # max pool
    c = 64
    sites = []
    for stage, (blocks, width, out, first_stride) in enumerate(_RESNEXT_STAGES, start=1):
        for b in range(blocks):
            stride = first_stride if b == 0 else 1
            in_size, size = size, size // stride
            prefix = f"layer{stage}.{b}"
            layers.append(_conv(f"{prefix}.conv1", c, width, 1, in_size, bn=bn))
            layers.append(_conv(f"{prefix}.conv2", width, width, 3, size, stride=stride, g=cardinality, bn=bn))
            layers.append(_conv(f"{prefix}.conv3", width, out, 1, size, bn=bn))
            if b == 0:
                layers.append(_conv(f"{prefix}.downsample", c, out, 1, size, stride=stride, bn=bn))
            sites.append((f"{prefix}.conv2", f"{prefix}.conv3"))
            c = out
    layers.append(_classifier(c))
    return NetworkSpec(RESNEXT50, layers, sites)


def generate(bp: BlueprintId | str) -> NetworkSpec:
    """Build the baseline network (depthwise MobileNet-V1, g=32 ResNeXt-50)."""
    if isinstance(bp, str):
        bp = BlueprintId(bp)
    net = _mobilenet_v1(bp) if bp.name == MOBILENET_V1 else _resnext50(bp)
    return check(net)


def variant_strategies() -> List[GroupingStrategy]:
    return [GroupingStrategy(E2GC, G) for G in E2GC_GROUP_SIZES] + [
        GroupingStrategy(FGGC, g) for g in FGGC_GROUP_COUNTS
    ]


def variant_table(bp: BlueprintId | str) -> List[Tuple[GroupingStrategy, CostBreakdown]]:
    """Totals for E2GC G in {1..32} and FgGC g in {2..32}, 11 rows."""
    base = generate(bp)
    rows = []
    for strategy in variant_strategies():
        total, _ = network_cost(plan(base, strategy))
        rows.append((strategy, total))
    return rows


def config_id(name: str, strategy: GroupingStrategy) -> str:
    return f"{name}/{strategy.label}"


def resolve_config(cid: str) -> Tuple[BlueprintId, GroupingStrategy]:
    """Split ``mobilenet_v1/e2gc/G=8`` into blueprint and strategy."""
    name, _, rest = cid.strip().partition("/")
    if not rest:
        raise ValueError(f"config id {cid!r} has no strategy part")
    return BlueprintId(name), GroupingStrategy.parse(rest)


def config_network(cid: str) -> NetworkSpec:
    bp, strategy = resolve_config(cid)
    return plan(generate(bp), strategy)


def baseline_strategy(name: str) -> GroupingStrategy:
    return GroupingStrategy(DWCONV) if name == MOBILENET_V1 else GroupingStrategy(FGGC, 32)
