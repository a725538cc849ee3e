import pytest

from gconv_planner.blueprints import (
    MOBILENET_V1,
    RESNEXT50,
    BlueprintId,
    baseline_strategy,
    config_id,
    config_network,
    generate,
    resolve_config,
    variant_table,
)
from gconv_planner.core import layer_cost, network_cost, validate
from gconv_planner.planner import DWCONV, E2GC, FGGC, GroupingStrategy, plan


def totals(name, strategy):
    return network_cost(plan(generate(name), strategy))[0]


def test_mobilenet_structure():
    net = generate(MOBILENET_V1)
    assert len(net.layers) == 1 + 2 * 13 + 1
    assert len(net.substitution_sites) == 13
    assert net.layers[0].m == 3 and net.layers[0].id not in net.site_layer_ids
    assert net.layers[-1].kind == "fully_connected"
    assert all(net.layer(lid).g == net.layer(lid).m for lid in net.site_layer_ids)
    assert net.layer("dw13").h == 7


def test_resnext_structure():
    net = generate(RESNEXT50)
    assert len(net.substitution_sites) == 16
    assert all(net.layer(lid).g == 32 for lid in net.site_layer_ids)
    downsample = [l for l in net.layers if l.id.endswith("downsample")]
    assert len(downsample) == 4
    assert not set(l.id for l in downsample) & {x for site in net.substitution_sites for x in site}
    assert net.layer("layer2.0.conv2").stride == 2
    assert net.layer("layer4.2.conv3").h == 7


@pytest.mark.parametrize(
    "name,strategy,params_m,mc",
    [
        (MOBILENET_V1, GroupingStrategy(DWCONV), 4.20, 568.74e6),
        (MOBILENET_V1, GroupingStrategy(E2GC, 32), 5.59, 1107.71e6),
        (MOBILENET_V1, GroupingStrategy(FGGC, 2), 16.72, 2690.06e6),
        (RESNEXT50, GroupingStrategy(FGGC, 32), 24.96, 4.23e9),
        (RESNEXT50, GroupingStrategy(E2GC, 16), 24.63, 4.40e9),
    ],
)
def test_reported_totals(name, strategy, params_m, mc):
    t = totals(name, strategy)
    assert t.params / 1e6 == pytest.approx(params_m, rel=0.01)
    assert t.mc == pytest.approx(mc, rel=0.01)


def test_variant_table_rows():
    rows = dict((str(s), c) for s, c in variant_table(MOBILENET_V1))
    assert len(rows) == 11
    assert rows["e2gc:G=8"].params / 1e6 == pytest.approx(4.52, rel=0.01)
    assert rows["e2gc:G=8"].mc / 1e6 == pytest.approx(690.44, rel=0.01)
    assert rows["fggc:g=32"].params / 1e6 == pytest.approx(4.95, rel=0.01)
    rx = dict((str(s), c) for s, c in variant_table(RESNEXT50))
    assert rx["e2gc:G=1"].params / 1e6 == pytest.approx(23.61, rel=0.01)
    assert rx["e2gc:G=1"].mc / 1e9 == pytest.approx(4.02, rel=0.01)


@pytest.mark.parametrize("name", [MOBILENET_V1, RESNEXT50])
def test_variants_valid_and_monotone(name):
    base = generate(name)
    assert validate(base) == []
    rows = variant_table(name)
    for strategy, _ in rows:
        assert validate(plan(base, strategy)) == []
    e2gc = [c for s, c in rows if s.kind == E2GC]
    fggc = [c for s, c in rows if s.kind == FGGC]
    for seq, sign in ((e2gc, 1), (fggc, -1)):
        for a, b in zip(seq, seq[1:]):
            assert sign * (b.params - a.params) > 0
            assert sign * (b.mc - a.mc) > 0


def test_mobilenet_baselines_identical():
    assert totals(MOBILENET_V1, GroupingStrategy(E2GC, 1)) == totals(MOBILENET_V1, GroupingStrategy(DWCONV))
    assert network_cost(generate(MOBILENET_V1))[0] == totals(MOBILENET_V1, GroupingStrategy(DWCONV))


def test_resnext_baseline_is_g32():
    assert plan(generate(RESNEXT50), baseline_strategy(RESNEXT50)) == generate(RESNEXT50)


def test_resnext_doubling_pattern_at_sites():
    net = generate(RESNEXT50)
    sites = [net.layer(lid) for lid in net.site_layer_ids]
    for a, b in zip(sites, sites[1:]):
        if b.h == a.h // 2:
            assert b.n == 2 * a.n
        else:
            assert (b.h, b.n) == (a.h, a.n)


def test_network_totals_resummed_independently():
    for name in (MOBILENET_V1, RESNEXT50):
        for strategy, total in variant_table(name):
            net = plan(generate(name), strategy)
            mc = params = acts = 0
            for layer in net.layers:
                c = layer_cost(layer)
                mc, params, acts = mc + c.mc, params + c.params, acts + c.activations
            assert (total.mc, total.params, total.activations) == (mc, params, acts)


def test_batchnorm_knob_adds_two_per_channel():
    plain = network_cost(generate(BlueprintId(MOBILENET_V1)))[0]
    with_bn = network_cost(generate(BlueprintId(MOBILENET_V1, batchnorm=True)))[0]
    channels = sum(l.n for l in generate(MOBILENET_V1).layers if l.kind == "conv")
    assert with_bn.params - plain.params == 2 * channels


def test_width_multiplier_and_resolution():
    half = generate(BlueprintId(MOBILENET_V1, width_multiplier=0.5, input_resolution=160))
    assert half.layer("pw13").n == 512
    assert half.layer("conv1").h == 80
    assert validate(half) == []
    with pytest.raises(ValueError, match="non-integral"):
        generate(BlueprintId(MOBILENET_V1, width_multiplier=0.3))
    with pytest.raises(ValueError):
        BlueprintId(MOBILENET_V1, input_resolution=100)
    with pytest.raises(ValueError):
        BlueprintId(RESNEXT50, width_multiplier=0.5)
    with pytest.raises(ValueError):
        BlueprintId("vgg16")


def test_config_ids():
    s = GroupingStrategy(E2GC, 8)
    cid = config_id(MOBILENET_V1, s)
    assert cid == "mobilenet_v1/e2gc/G=8"
    bp, strat = resolve_config(cid)
    assert bp.name == MOBILENET_V1 and strat == s
    assert config_network(cid) == plan(generate(MOBILENET_V1), s)
    with pytest.raises(ValueError):
        resolve_config("mobilenet_v1")
