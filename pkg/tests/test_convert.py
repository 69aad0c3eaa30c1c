"""Conversion constructions: block lowering, layer assembly, both directions."""
import random

import pytest

from kanrelu import (
    FREE,
    STRUCTURAL,
    Activation,
    ConversionMode,
    Kan,
    KanLayer,
    Mlp,
    MlpLayer,
    PiecewiseLinear,
    assert_equiv,
    eval_kan,
    eval_mlp,
    eval_pl,
    kan_layer_to_relu,
    kan_to_mlp,
    mlp_to_kan,
    pl_to_relu_unit,
)

from conftest import random_kan, random_mlp, random_pl


def _relu(x):
    return x if x > 0.0 else 0.0


class TestUnitLowering:
    def test_exact_block_structure(self, three_segment_pl):
        block = pl_to_relu_unit(three_segment_pl, ConversionMode.EXACT)
        # hidden pre-activations (x, -x, x+1, x-1); weights (a1, -a1, diffs...)
        assert block.hidden_width == three_segment_pl.segments + 1
        assert [row[0] for row in block.w1] == [1.0, -1.0, 1.0, 1.0]
        assert list(block.b1) == [0.0, 0.0, 1.0, -1.0]
        assert list(block.w2[0]) == [1.0, -1.0, 1.0, -1.5]
        assert block.b2 == (0.0,)
        assert block.valid_lower is None

    def test_exact_block_matches_closed_form(self, three_segment_pl):
        block = pl_to_relu_unit(three_segment_pl, ConversionMode.EXACT)
        for x in (-2.0, 0.0, 2.0):
            expected = _relu(x) - _relu(-x) + 1.0 * _relu(x + 1.0) - 1.5 * _relu(x - 1.0)
            assert block.apply((x,)) == (expected,)
            assert block.apply((x,)) == (eval_pl(three_segment_pl, x),)

    def test_converting_relu_reproduces_relu(self, relu_pl):
        block = pl_to_relu_unit(relu_pl, ConversionMode.EXACT)
        for x in (-1.0, 0.0, 1.0):
            assert block.apply((x,)) == (_relu(x),)

    def test_two_breakpoint_symbolic_form(self):
        # slope-difference expansion plus the identity-pair correction
        rng = random.Random(21)
        for _ in range(20):
            f = random_pl(rng, segments=3)
            a1, a2, a3 = f.slopes
            b1, b2 = f.breakpoints
            block = pl_to_relu_unit(f, ConversionMode.EXACT)
            for x in (-4.0, b1, (b1 + b2) / 2, b2, 4.0):
                expected = (
                    a1 * (_relu(x) - _relu(-x))
                    + (a2 - a1) * _relu(x - b1)
                    + (a3 - a2) * _relu(x - b2)
                    + f.intercept
                )
                got = block.apply((x,))[0]
                assert abs(got - expected) <= 1e-12 * max(1.0, abs(expected))

    def test_paper_block_structure(self, three_segment_pl):
        block = pl_to_relu_unit(three_segment_pl, ConversionMode.PAPER)
        assert block.hidden_width == three_segment_pl.segments
        assert [row[0] for row in block.w1] == [1.0, 1.0, 1.0]
        assert list(block.b1) == [0.0, 1.0, -1.0]
        assert list(block.w2[0]) == [1.0, 1.0, -1.5]
        assert block.valid_lower == 0.0

    def test_paper_block_valid_on_nonnegative_inputs(self):
        rng = random.Random(5)
        for _ in range(40):
            f = random_pl(rng, breakpoint_range=(0.0, 3.0))
            block = pl_to_relu_unit(f, ConversionMode.PAPER)
            probes = [0.0, 0.5, 1.0, 2.5, 4.0] + [b + 1e-6 for b in f.breakpoints]
            for x in probes:
                expected = eval_pl(f, x)
                assert abs(block.apply((x,))[0] - expected) <= 1e-10 * max(1.0, abs(expected))

    def test_provenance_tags(self, three_segment_pl):
        block = pl_to_relu_unit(three_segment_pl, ConversionMode.EXACT)
        assert all(t == STRUCTURAL for row in block.w1_tags for t in row)
        assert list(block.b1_tags) == [STRUCTURAL, STRUCTURAL, FREE, FREE]
        assert all(t == FREE for t in block.w2_tags[0])
        assert block.b2_tags == (FREE,)


class TestLayerLowering:
    def test_two_input_sum(self, identity_pl):
        layer = KanLayer(((identity_pl, identity_pl),))
        block = kan_layer_to_relu(layer, ConversionMode.EXACT)
        assert block.apply((1.5, -0.5)) == (1.0,)

    def test_one_to_two_layer(self, three_segment_pl, relu_pl):
        layer = KanLayer(((three_segment_pl,), (relu_pl,)))
        block = kan_layer_to_relu(layer, ConversionMode.EXACT)
        assert block.apply((2.0,)) == (3.5, 2.0)

    def test_exact_width_law(self, three_segment_pl):
        grid = ((three_segment_pl, three_segment_pl), (three_segment_pl, three_segment_pl))
        layer = KanLayer(grid)
        assert kan_layer_to_relu(layer, ConversionMode.EXACT).hidden_width == 12

    @pytest.mark.parametrize("mode", [ConversionMode.EXACT, ConversionMode.PAPER])
    def test_width_laws_random(self, mode):
        rng = random.Random(13)
        for _ in range(25):
            kan = random_kan(rng, max_depth=1)
            layer = kan.layers[0]
            block = kan_layer_to_relu(layer, mode)
            segs = [act.segments for row in layer.activations for act in row]
            if mode is ConversionMode.EXACT:
                assert block.hidden_width == 2 * layer.n_in + sum(s - 1 for s in segs)
            else:
                assert block.hidden_width == sum(segs)

    def test_each_hidden_unit_reads_one_input(self):
        rng = random.Random(17)
        layer = random_kan(rng, max_depth=1).layers[0]
        for mode in ConversionMode:
            block = kan_layer_to_relu(layer, mode)
            for row in block.w1:
                assert sum(1 for v in row if v != 0.0) == 1

    def test_layer_map_agrees_on_grid(self):
        rng = random.Random(29)
        for _ in range(10):
            kan = random_kan(rng, max_depth=1)
            layer = kan.layers[0]
            block = kan_layer_to_relu(layer, ConversionMode.EXACT)
            for _ in range(20):
                x = tuple(rng.uniform(-4, 4) for _ in range(layer.n_in))
                want = layer.apply(x)
                got = block.apply(x)
                for w, g in zip(want, got):
                    assert abs(w - g) <= 1e-10 * max(1.0, abs(w))


class TestKanToMlp:
    def test_single_layer_values(self, three_segment_pl):
        kan = Kan((KanLayer(((three_segment_pl,),)),))
        mlp = kan_to_mlp(kan, ConversionMode.EXACT)
        assert len(mlp.layers) == 2
        got = [eval_mlp(mlp, (x,))[0] for x in (-2.0, 0.0, 2.0)]
        assert got == [-2.0, 1.0, 3.5]

    def test_identity_kan_converts_to_identity_map(self, identity_pl):
        grid = ((identity_pl, PiecewiseLinear((), (0.0,), 0.0)),
                (PiecewiseLinear((), (0.0,), 0.0), identity_pl))
        kan = Kan((KanLayer(grid), KanLayer(grid)))
        mlp = kan_to_mlp(kan, ConversionMode.EXACT)
        for point in ((0.3, -0.7), (-2.0, 5.0), (0.0, 0.0)):
            got = eval_mlp(mlp, point)
            for want, have in zip(point, got):
                assert abs(want - have) <= 1e-12 * max(1.0, abs(want))

    def test_depth_law(self):
        rng = random.Random(31)
        for _ in range(20):
            kan = random_kan(rng)
            for mode in ConversionMode:
                assert len(kan_to_mlp(kan, mode).layers) == len(kan.layers) + 1

    def test_two_layer_kan_gives_three_affine_layers(self):
        rng = random.Random(37)
        kan = random_kan(rng, max_depth=2, input_dim=2)
        while len(kan.layers) != 2:
            kan = random_kan(rng, max_depth=2, input_dim=2)
        assert len(kan_to_mlp(kan, ConversionMode.EXACT).layers) == 3

    def test_merged_tags_survive(self, three_segment_pl):
        kan = Kan(
            (
                KanLayer(((three_segment_pl,),)),
                KanLayer(((three_segment_pl,),)),
            )
        )
        mlp = kan_to_mlp(kan, ConversionMode.EXACT)
        middle = mlp.layers[1]
        assert middle.weight_tags is not None
        # merged rows copy the previous output map with a sign: free where it
        # was free, structural zero where untouched
        assert any(t == FREE for row in middle.weight_tags for t in row)
        for row, tags in zip(middle.weight, middle.weight_tags):
            for v, t in zip(row, tags):
                if t == STRUCTURAL:
                    assert v in (0.0, 1.0, -1.0)

    def test_round_trip_sweep_with_dense_sampling(self):
        # the deep sweep: 10k low-discrepancy points plus kink probes
        rng = random.Random(41)
        for _ in range(3):
            kan = random_kan(rng)
            mlp = kan_to_mlp(kan, ConversionMode.EXACT)
            box = [(-5.0, 5.0)] * kan.input_dim
            report = assert_equiv(kan, mlp, box, samples=10_000, tol=1e-8)
            assert report.passed, report

    def test_mlp_round_trip_sweep(self):
        rng = random.Random(43)
        for _ in range(3):
            mlp = random_mlp(rng)
            kan = mlp_to_kan(mlp)
            box = [(-5.0, 5.0)] * mlp.input_dim
            report = assert_equiv(mlp, kan, box, samples=10_000, tol=1e-8)
            assert report.passed, report

    def test_double_round_trip(self):
        rng = random.Random(47)
        for _ in range(3):
            kan = random_kan(rng)
            back = mlp_to_kan(kan_to_mlp(kan, ConversionMode.EXACT))
            box = [(-5.0, 5.0)] * kan.input_dim
            report = assert_equiv(kan, back, box, samples=5_000, tol=1e-8)
            assert report.passed, report


class TestMlpToKan:
    def test_abs_network(self, abs_mlp):
        kan = mlp_to_kan(abs_mlp)
        assert eval_kan(kan, (-3.0,)) == (3.0,)
        first = kan.layers[0].activations
        assert first[0][0].slopes == (1.0,)
        assert first[1][0].slopes == (-1.0,)
        second = kan.layers[1].activations
        assert second[0][0] == PiecewiseLinear((0.0,), (0.0, 1.0), 0.0)
        assert second[0][1] == PiecewiseLinear((0.0,), (0.0, 1.0), 0.0)

    def test_layer_count_preserved(self):
        rng = random.Random(53)
        for _ in range(20):
            mlp = random_mlp(rng)
            assert len(mlp_to_kan(mlp).layers) == len(mlp.layers)

    def test_segment_law(self):
        rng = random.Random(59)
        for _ in range(20):
            kan = mlp_to_kan(random_mlp(rng))
            assert kan.max_segments() <= 2

    def test_pure_affine_mlp(self):
        mlp = Mlp((MlpLayer(((2.0, -1.0),), (0.5,), Activation.IDENTITY),))
        kan = mlp_to_kan(mlp)
        assert len(kan.layers) == 1
        assert kan.max_segments() == 1
        for point in ((1.0, 1.0), (-2.0, 0.25)):
            assert eval_kan(kan, point) == eval_mlp(mlp, point)

    def test_outer_activation_network(self):
        # relu applied after a single affine row: bias rides on the first input
        rng = random.Random(61)
        w = [rng.uniform(-2, 2) for _ in range(3)]
        b = rng.uniform(-2, 2)
        mlp = Mlp(
            (
                MlpLayer((tuple(w),), (b,), Activation.RELU),
                MlpLayer(((1.0,),), (0.0,), Activation.IDENTITY),
            )
        )
        kan = mlp_to_kan(mlp)
        first = kan.layers[0].activations[0]
        assert first[0].intercept == b
        assert first[1].intercept == 0.0 and first[2].intercept == 0.0
        for _ in range(20):
            x = tuple(rng.uniform(-3, 3) for _ in range(3))
            want = _relu(sum(wi * xi for wi, xi in zip(w, x)) + b)
            got = eval_kan(kan, x)[0]
            assert abs(want - got) <= 1e-12 * max(1.0, abs(want))

    def test_bias_only_on_first_input_activation(self):
        rng = random.Random(67)
        mlp = random_mlp(rng, input_dim=3, max_depth=2)
        kan = mlp_to_kan(mlp)
        for t, layer in enumerate(kan.layers):
            for q, row in enumerate(layer.activations):
                for p, act in enumerate(row):
                    if p > 0:
                        assert act.intercept == 0.0
                    else:
                        assert act.intercept == mlp.layers[t].bias[q]
