"""Report assembly: cost rows for networks and the group-size sweep."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional

from .core import LayerSpec, NetworkSpec, layer_cost, network_cost
from .formats import ReportRow
from .planner import EnergyModelParams, common_divisors, energy_proxy

TOTAL = "TOTAL"


def cost_rows(
    net: NetworkSpec,
    config_id: str,
    strategy: str,
    params: Optional[EnergyModelParams] = None,
    per_layer: bool = False,
    epf: Optional[float] = None,
) -> List[ReportRow]:
    """Report rows for ``net``: optionally one per layer, then the total.

    The total's energy proxy is the sum of the per-layer proxies.
    """
    total, layer_costs = network_cost(net)
    rows = []
    energies = [energy_proxy(c, params) for c in layer_costs] if params else None
    if per_layer:
        for i, (layer, cost) in enumerate(zip(net.layers, layer_costs)):
            rows.append(
                ReportRow(config_id, strategy, layer.id, cost.mc, cost.params, cost.activations,
                          cost.ai, energies[i] if energies else None, None)
            )
    rows.append(
        ReportRow(config_id, strategy, TOTAL, total.mc, total.params, total.activations, total.ai,
                  sum(energies) if energies else None, epf)
    )
    return rows


@dataclass(frozen=True)
class SweepRow:
    G: int
    g: int
    normalized_mc: Fraction
    normalized_ai: Fraction
    normalized_memory_access: Fraction


SWEEP_COLUMNS = ("G", "g", "normalized_mc", "normalized_ai", "normalized_memory_access")


def _exact_ai(layer: LayerSpec) -> Fraction:
    cost = layer_cost(layer)
    return Fraction(cost.mc, cost.params + cost.activations)


def sweep_fig3(n: int = 512, m: int = 512, dk: int = 3, h: int = 14, w: int = 14) -> List[SweepRow]:
    """MACs, arithmetic intensity and memory accesses versus group size.

    Every series is normalized to the depthwise row (G = 1, g = m); memory
    accesses are estimated as ``1 / AI``. Values are exact fractions.
    Only group sizes whose group count also divides ``n`` are listed.
    """
    def layer(g):
        return LayerSpec("sweep", m=m, n=n, dk_h=dk, dk_w=dk, h=h, w=w, padding=dk // 2, g=g)

    base = layer(m)
    base_mc = layer_cost(base).mc
    base_ai = _exact_ai(base)
    rows = []
    for G in common_divisors(m, m):
        g = m // G
        if n % g:
            continue
        lay = layer(g)
        ai = _exact_ai(lay) / base_ai
        rows.append(SweepRow(G, g, Fraction(layer_cost(lay).mc, base_mc), ai, 1 / ai))
    return rows


def sweep_dicts(rows: List[SweepRow]) -> List[dict]:
    return [
        {
            "G": r.G,
            "g": r.g,
            "normalized_mc": float(r.normalized_mc),
            "normalized_ai": float(r.normalized_ai),
            "normalized_memory_access": float(r.normalized_memory_access),
        }
        for r in rows
    ]
