"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; the whole suite is property-based at desk scale and targets well
under a minute of runtime.
"""
import contextlib
import io
import random
from pathlib import Path

from kanrelu import (
    ConversionMode,
    Kan,
    KanLayer,
    PolySegmentSpline,
    assert_equiv,
    bspline_to_monomial_relu,
    class_embedding_check,
    count_params_mlp,
    composition_segment_bound,
    equiv_exact_1d,
    eval_monomial_relu,
    exact_regions_1d,
    kan_region_upper_bound,
    kan_to_mlp,
    kan_to_relu_param_formula,
    load,
    mlp_to_kan,
    relu_region_upper_bound,
    relu_to_kan_param_formula,
    save,
)
from kanrelu.cli import main

from conftest import random_kan, random_mlp, random_pl, random_spline

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


def _criterion(number: int, description: str, failures: list) -> None:
    status = "PASS" if not failures else "FAIL"
    print(f"acceptance {number} {status}: {description}")
    assert not failures, f"criterion {number}: {failures[:5]}"


def _dense_mlp(rng: random.Random, widths):
    from kanrelu import Activation, Mlp, MlpLayer

    layers = []
    for i, (a, b) in enumerate(zip(widths, widths[1:])):
        weight = tuple(tuple(rng.uniform(0.5, 2.0) for _ in range(a)) for _ in range(b))
        bias = tuple(rng.uniform(0.5, 2.0) for _ in range(b))
        act = Activation.IDENTITY if i == len(widths) - 2 else Activation.RELU
        layers.append(MlpLayer(weight, bias, act))
    return Mlp(tuple(layers))


def test_criterion_1_conversion_exactness():
    failures = []
    rng = random.Random(20240901)
    for i in range(500):
        kan = random_kan(rng, max_width=4, max_depth=3, max_segments=6)
        mlp = kan_to_mlp(kan, ConversionMode.EXACT)
        box = [(-5.0, 5.0)] * kan.input_dim
        report = assert_equiv(kan, mlp, box, samples=100, tol=1e-8)
        if not report.passed:
            failures.append(("kan", i, report.max_rel_error))
    for i in range(500):
        mlp = random_mlp(rng, max_width=4, max_depth=3)
        kan = mlp_to_kan(mlp)
        box = [(-5.0, 5.0)] * mlp.input_dim
        report = assert_equiv(mlp, kan, box, samples=100, tol=1e-8)
        if not report.passed:
            failures.append(("mlp", i, report.max_rel_error))
    _criterion(1, "round-trip equivalence at 1e-8 on 500 KANs and 500 MLPs", failures)


def test_criterion_2_exact_1d_certification():
    failures = []
    rng = random.Random(20240902)
    for i in range(200):
        kan = random_kan(rng, input_dim=1, max_width=4, max_depth=3, max_segments=6)
        report = equiv_exact_1d(kan, kan_to_mlp(kan, ConversionMode.EXACT), tol=1e-9)
        if not report.passed:
            failures.append((i, report.max_rel_error))
    _criterion(2, "exact 1-D certification at 1e-9 on 200 KANs", failures)


def test_criterion_3_depth_width_segment_laws():
    failures = []
    rng = random.Random(20240903)
    for i in range(200):
        kan = random_kan(rng, max_width=4, max_depth=3, max_segments=6)
        report = class_embedding_check(kan)
        if not report.depth_bound_satisfied:
            failures.append((i, "depth"))
        if not report.width_bound_satisfied:
            failures.append((i, "width"))
        if not report.segment_bound_satisfied:
            failures.append((i, "segments"))
    _criterion(3, "embedding depth/width/segment laws on 200 KANs", failures)


def test_criterion_4_parameter_formulas():
    failures = []
    rng = random.Random(20240904)
    for i in range(100):
        mlp = random_mlp(rng, output_dim=1, max_width=4, max_depth=3)
        report = count_params_mlp(mlp)
        if report.total_entries != report.closed_form:
            failures.append(("mlp-closed-form", i))
    for i in range(100):
        segments = rng.randint(1, 6)
        kan = random_kan(rng, max_width=4, max_depth=3, segments=segments)
        expected = 2 * segments * sum(layer.n_in * layer.n_out for layer in kan.layers)
        if kan_to_relu_param_formula(kan) != expected:
            failures.append(("formula", i))
        if count_params_mlp(kan_to_mlp(kan, ConversionMode.PAPER)).free_entries != expected:
            failures.append(("converted-free", i))
    worked = _dense_mlp(random.Random(44), widths=(2, 3, 2, 1))
    if count_params_mlp(worked).closed_form != 20 or relu_to_kan_param_formula(worked) != 44:
        failures.append(("worked-44",))
    _criterion(4, "parameter formulas: closed forms, conversion counts, worked 44", failures)


def test_criterion_5_region_bound_domination():
    failures = []
    rng = random.Random(20240905)
    for i in range(200):
        mlp = random_mlp(rng, input_dim=1, output_dim=1, max_width=3, max_depth=2)
        bound = relu_region_upper_bound(1, list(mlp.hidden_widths))
        if exact_regions_1d(mlp).region_count > bound:
            failures.append(("mlp", i))
    for i in range(200):
        kan = random_kan(rng, input_dim=1, output_dim=1, max_width=3,
                         max_depth=2, max_segments=4)
        bound = kan_region_upper_bound(list(kan.widths[:-1]), kan.max_segments())
        if exact_regions_1d(kan).region_count > bound:
            failures.append(("kan", i))
    if relu_region_upper_bound(2, [3]) != 7:
        failures.append(("worked-7",))
    if kan_region_upper_bound([1, 2], 3) != 81:
        failures.append(("worked-81",))
    _criterion(5, "oracle regions within family bounds on 400 nets; worked 7 and 81", failures)


def test_criterion_6_composition_bound():
    failures = []
    rng = random.Random(20240906)
    for i in range(100):
        f = random_pl(rng, max_segments=6)
        g = random_pl(rng, max_segments=6)
        composed = Kan((KanLayer(((f,),)), KanLayer(((g,),))))
        regions = exact_regions_1d(composed).region_count
        if regions > composition_segment_bound(f.segments, g.segments):
            failures.append((i, regions, f.segments, g.segments))
    _criterion(6, "composed regions within segment product on 100 pairs", failures)


def test_criterion_7_spline_lowering():
    failures = []
    rng = random.Random(20240907)
    for i in range(100):
        s = random_spline(rng, max_pieces=4, max_degree=3)
        net = bspline_to_monomial_relu(s)
        probes = [-4.0 + j * (8.0 / 993) for j in range(994)]
        for b in s.breakpoints:
            probes.extend((b - 1e-6, b + 1e-6))
        worst = 0.0
        for x in probes:
            want = s.evaluate(x)
            got = eval_monomial_relu(net, (x,))[0]
            worst = max(worst, abs(got - want) / max(1.0, abs(want)))
        if worst > 1e-7:
            failures.append((i, worst))
    flip = PolySegmentSpline((0.0,), ((0.0, 0.0, 1.0), (0.0, 0.0, -1.0)), 2)
    net = bspline_to_monomial_relu(flip)
    values = tuple(eval_monomial_relu(net, (x,))[0] for x in (-1.0, 0.0, 1.0))
    if values != (1.0, 0.0, -1.0):
        failures.append(("worked-square-flip", values))
    _criterion(7, "telescoping spline lowering within 1e-7 on 100 splines", failures)


def test_criterion_8_serialization_and_goldens(tmp_path):
    failures = []
    for fixture in sorted(FIXTURES.glob("*.json")):
        sparse = "sparse" in fixture.stem
        model = load(fixture)
        first = tmp_path / f"{fixture.stem}.1.json"
        second = tmp_path / f"{fixture.stem}.2.json"
        save(model, first, sparse=sparse)
        save(load(first), second, sparse=sparse)
        if first.read_bytes() != second.read_bytes():
            failures.append(("round-trip", fixture.stem))

    kan = str(FIXTURES / "three_segment_kan.json")
    mlp = str(FIXTURES / "three_segment_mlp.json")
    golden_cases = {
        "eval_three_segment.txt": ["eval", kan, "--input", "2"],
        "eval_three_segment.json": ["eval", kan, "--input", "2", "--json"],
        "params_three_segment.json": ["params", kan, "--paper-formula", "--json"],
        "params_converted_mlp.json": ["params", mlp, "--json"],
        "bounds_three_segment.json": ["bounds", kan, "--json"],
        "verify_sampled.json": ["verify", kan, mlp, "--samples", "64", "--tol", "1e-8", "--json"],
        "verify_exact.json": ["verify", kan, mlp, "--exact-1d", "--tol", "1e-9", "--json"],
        "embed_check_three_segment.json": ["embed-check", kan, "--json"],
    }
    for name, argv in golden_cases.items():
        buffer = io.StringIO()
        with contextlib.redirect_stdout(buffer):
            code = main(argv)
        if code != 0 or buffer.getvalue() != (GOLDEN / name).read_text(encoding="utf-8"):
            failures.append(("golden", name))
    _criterion(8, "fixture round trips byte-stable and CLI goldens match", failures)
