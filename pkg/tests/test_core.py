import numpy as np
import pytest
from hypothesis import given, strategies as st

from gconv_planner.core import (
    CostBreakdown,
    LayerSpec,
    NetworkSpec,
    ValidationError,
    layer_cost,
    network_cost,
    validate,
)
from gconv_planner.kernels import GroupedWeights, MacCounter, conv2d_grouped


def fig3_layer(g):
    return LayerSpec("l", m=512, n=512, dk_h=3, dk_w=3, h=14, w=14, padding=1, g=g)


def test_unit_layer():
    cost = layer_cost(LayerSpec("u", m=1, n=1))
    assert (cost.mc, cost.params, cost.activations) == (1, 1, 2)
    assert cost.ai == 1 / 3


def test_depthwise_example():
    cost = layer_cost(fig3_layer(512))
    assert cost.mc == 903_168
    assert cost.params == 4_608
    assert cost.activations == 200_704
    assert cost.ai == pytest.approx(4.399, abs=5e-4)


def test_standard_conv_example():
    cost = layer_cost(fig3_layer(1))
    assert cost.mc == 462_422_016 == 903_168 * 512
    assert cost.params == 2_359_296 == 4_608 * 512


def test_mac_count_matches_instrumented_kernel():
    # scaled-down depthwise layer: the kernel counter is the independent oracle
    layer = LayerSpec("dw", m=16, n=16, dk_h=3, dk_w=3, h=6, w=6, padding=1, g=16)
    counter = MacCounter()
    x = np.zeros((1, 16, 6, 6))
    conv2d_grouped(x, GroupedWeights(np.zeros((16, 1, 3, 3)), 16), 1, 1, counter)
    assert counter.count == layer_cost(layer).mc


def test_bias_and_batchnorm_params():
    plain = layer_cost(LayerSpec("a", m=8, n=4, dk_h=3, dk_w=3, h=5, w=5))
    both = layer_cost(LayerSpec("a", m=8, n=4, dk_h=3, dk_w=3, h=5, w=5, has_bias=True, has_batchnorm=True))
    assert both.params - plain.params == 4 + 2 * 4
    assert both.mc == plain.mc


def test_strided_layer_counts_input_at_input_resolution():
    cost = layer_cost(LayerSpec("s", m=3, n=32, dk_h=3, dk_w=3, h=112, w=112, stride=2))
    assert cost.activations == 3 * 224 * 224 + 32 * 112 * 112


def test_divisibility_error_names_layer():
    with pytest.raises(ValidationError, match="'bad'"):
        layer_cost(LayerSpec("bad", m=64, n=64, g=3))


def test_non_positive_dims_rejected():
    with pytest.raises(ValueError):
        LayerSpec("z", m=0, n=1)


def test_empty_network():
    total, per_layer = network_cost(NetworkSpec("empty"))
    assert total == CostBreakdown()
    assert per_layer == []
    assert total.ai == 0.0


def test_validate_divisibility_diagnostic():
    diags = validate(NetworkSpec("n", [LayerSpec("c", m=64, n=64, g=3)]))
    assert any(d.rule == "g does not divide m" and d.layer_id == "c" for d in diags)


def test_validate_chaining_diagnostic():
    net = NetworkSpec("n", [LayerSpec("a", m=3, n=32), LayerSpec("b", m=48, n=16)])
    diags = validate(net)
    assert [d.layer_id for d in diags] == ["b"]
    assert "chain" in diags[0].rule


def test_validate_sites():
    net = NetworkSpec(
        "n",
        [LayerSpec("a", m=8, n=8, dk_h=3, dk_w=3), LayerSpec("b", m=8, n=8, dk_h=3, dk_w=3)],
        [("a", "b"), ("a", "zz")],
    )
    rules = {d.rule for d in validate(net)}
    assert "second layer of a substitution site must be 1x1" in rules
    assert "substitution site references unknown layer" in rules


def test_validate_duplicate_ids():
    net = NetworkSpec("n", [LayerSpec("a", m=8, n=8), LayerSpec("a", m=8, n=8)])
    assert any(d.rule == "duplicate layer id" for d in validate(net))


def test_validate_clean_network():
    net = NetworkSpec("n", [LayerSpec("a", m=3, n=8), LayerSpec("b", m=8, n=8, g=8)])
    assert validate(net) == []


divisors_512 = [d for d in range(1, 513) if 512 % d == 0]


@given(st.sampled_from(divisors_512))
def test_mc_scales_with_group_size(G):
    g = 512 // G
    assert layer_cost(fig3_layer(g)).mc * g == layer_cost(fig3_layer(1)).mc
    assert layer_cost(fig3_layer(512)).mc * G == layer_cost(fig3_layer(g)).mc


dims = st.integers(1, 6)


@given(
    st.integers(1, 8), st.integers(1, 8), st.integers(1, 8), st.integers(1, 5),
    dims, dims, st.integers(1, 3), st.booleans(), st.booleans(),
)
def test_group_scaling_and_activation_invariance(gm, gn, g, k, h, w, s, bias, bn):
    layer = LayerSpec("p", m=gm * g, n=gn * g, dk_h=k, dk_w=k, h=h, w=w, stride=s, g=g,
                      has_bias=bias, has_batchnorm=bn)
    dense = LayerSpec("p", m=gm * g, n=gn * g, dk_h=k, dk_w=k, h=h, w=w, stride=s, g=1,
                      has_bias=bias, has_batchnorm=bn)
    extra = (layer.n if bias else 0) + (2 * layer.n if bn else 0)
    c, d = layer_cost(layer), layer_cost(dense)
    assert c.mc * g == d.mc
    assert (c.params - extra) * g == d.params - extra
    assert c.activations == d.activations
    assert c.ai == c.mc / (c.params + c.activations)


def test_ai_strictly_decreasing_in_g():
    ais = [layer_cost(fig3_layer(g)).ai for g in sorted(divisors_512)]
    assert all(a > b for a, b in zip(ais, ais[1:]))


def test_network_totals_are_exact_sums():
    net = NetworkSpec("n", [LayerSpec("a", m=3, n=8, dk_h=3, dk_w=3, h=4, w=4), LayerSpec("b", m=8, n=4)])
    total, per = network_cost(net)
    assert total.mc == sum(c.mc for c in per)
    assert total.params == sum(c.params for c in per)
    assert total.activations == sum(c.activations for c in per)
    assert total.ai == total.mc / (total.params + total.activations)
