"""Exit criteria.

Criteria 1-6 run at desk scale on synthetic classifiers. Criteria 7-9 need a
user-supplied ResNet-50 ONNX export and an ImageNet validation subset; they
are skipped unless these environment variables are set:

    SOLARBENCH_RESNET50_ONNX     path to the exported model
    SOLARBENCH_IMAGENET_MANIFEST manifest CSV of >= 1000 validation images
    SOLARBENCH_PREPROCESS        optional preprocessing JSON
"""

import csv
import io
import json
import math
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from _support import (
    GRID_1001,
    brightness_label,
    brightness_success_set,
    brute_solarized_mean,
    make_dataset,
    sigmoid,
    write_uniform_png,
)
from solarbench import (
    AttackConfig,
    BrightnessClassifier,
    ConstantClassifier,
    Image,
    evaluate_clean,
    evaluate_robust,
    loss_landscape,
    rand_sol_attack,
    solarize,
    universal_sweep,
)
from solarbench.cli import main
from solarbench.plots import landscape_csv, landscape_svg
from solarbench.report import RunReport
from solarbench.sweep import alpha_grid

pytestmark = pytest.mark.acceptance


# ---------------------------------------------------------------- 1


def test_c1_transform_properties(criterion):
    with criterion("C1 transform property suite, 1000 images, <10 s", budget_s=10):
        rng = np.random.default_rng(1)
        failures = 0
        for _ in range(1000):
            h, w = rng.integers(1, 17, size=2)
            c = int(rng.choice([1, 3]))
            # multiples of 1/256 are exact under 1 - (1 - v)
            x = rng.integers(0, 257, size=(h, w, c)) / 256.0
            img = Image(x)
            alpha = float(rng.random())

            out = solarize(img, alpha).pixels
            hit = x >= alpha
            ok = (
                out.shape == x.shape
                and out.min() >= 0.0
                and out.max() <= 1.0
                and np.array_equal(out[~hit], x[~hit])
                and np.array_equal(out[hit], 1.0 - x[hit])
                and np.array_equal(solarize(img, 1.0 + float(rng.random()) + 1e-9).pixels, x)
                and np.array_equal(solarize(img, 0.0).pixels, 1.0 - x)
                and np.array_equal(solarize(solarize(img, 0.0), 0.0).pixels, x)
            )
            failures += not ok
        assert failures == 0


# ---------------------------------------------------------------- 2


def _oracle_samples(count=20, min_measure=0.1):
    """Random 4x4 RGB images with clean-correct labels whose grid success set
    covers at least ``min_measure`` of [0, 1]."""
    rng = np.random.default_rng(2)
    chosen = []
    while len(chosen) < count:
        base = rng.random()
        x = np.clip(base + 0.25 * rng.standard_normal((4, 4, 3)), 0.0, 1.0)
        label = brightness_label(brute_solarized_mean(x, 2.0))
        success = brightness_success_set(x, label)
        if len(success) / len(GRID_1001) >= min_measure:
            chosen.append((f"o{len(chosen)}", x, label, success))
    return chosen


def test_c2_oracle_equivalence(criterion):
    with criterion("C2 oracle equivalence, RandSol-Top1-100 on 20 mock samples, >=99/100 seeds, <30 s", budget_s=30):
        samples = _oracle_samples()
        assert all(len(s) >= 101 for *_, s in samples)
        clf = BrightnessClassifier()
        good_seeds = 0
        for seed in range(100):
            cfg = AttackConfig(k=1, n=100, seed=seed)
            all_ok = True
            for sid, x, label, _ in samples:
                out = rand_sol_attack(clf, Image(x), label, cfg, sid)
                if out.success:
                    # the chosen threshold really is in the success set
                    assert brightness_label(brute_solarized_mean(x, out.chosen_alpha)) != label
                all_ok &= out.success
            good_seeds += all_ok
        assert good_seeds >= 99, good_seeds


# ---------------------------------------------------------------- 3


@pytest.fixture
def png_bench(tmp_path):
    rng = np.random.default_rng(3)
    lines = ["id,path,label"]
    for i in range(24):
        v = int(rng.integers(0, 256))
        write_uniform_png(tmp_path / f"p{i}.png", v)
        lines.append(f"p{i},p{i}.png,{int(rng.integers(0, 2))}")
    (tmp_path / "m.csv").write_text("\n".join(lines) + "\n")
    return tmp_path


def test_c3_determinism_and_monotonicity(criterion, png_bench):
    with criterion("C3 byte-identical reports across 1 and 8 workers; robust accuracy non-increasing in n"):
        d = png_bench
        common = ["--manifest", d / "m.csv", "--model", "synthetic:brightness:12", "--timestamp", "2026-01-01T00:00:00+00:00"]
        for w in (1, 8):
            assert main([str(a) for a in ["attack", *common, "--n", 10, "--seed", 77, "--workers", w, "--out", d / f"a{w}.json"]]) == 0
            assert main([str(a) for a in ["sweep", *common, "--step", 0.05, "--workers", w, "--out", d / f"s{w}.json"]]) == 0
        assert (d / "a1.json").read_bytes() == (d / "a8.json").read_bytes()
        assert (d / "s1.json").read_bytes() == (d / "s8.json").read_bytes()
        assert (d / "s1.csv").read_bytes() == (d / "s8.csv").read_bytes()

        suite = make_dataset([(v, 0) for v in (0.01, 0.03, 0.05, 0.08, 0.12, 0.2)] + [(v, 1) for v in (0.52, 0.55, 0.7, 0.97)])
        clf = BrightnessClassifier()
        for seed in range(20):
            accs, succ = [], []
            for n in (5, 10, 50):
                res = evaluate_robust(clf, suite, AttackConfig(k=1, n=n, seed=seed))
                accs.append(res.top1)
                succ.append([o.success for o in res.outcomes])
            assert accs[0] >= accs[1] >= accs[2]
            for a, b in zip(succ, succ[1:]):
                assert all(y or not x for x, y in zip(a, b))


# ---------------------------------------------------------------- 4


def test_c4_sweep_consistency(criterion):
    with criterion("C4 sweep equals clean evaluation on pre-solarized data; step 0.01 gives 101 points"):
        rng = np.random.default_rng(4)
        data = [(f"q{i}", Image(rng.random((4, 4, 3))), int(rng.integers(0, 2))) for i in range(40)]
        clf = BrightnessClassifier(sharpness=9.0)
        res = universal_sweep(clf, data, 0.25)
        assert len(res.alphas) == 5
        for a, t1, t5 in zip(res.alphas, res.top1_accuracy, res.top5_accuracy):
            pre = [(sid, solarize(img, a), y) for sid, img, y in data]
            clean = evaluate_clean(clf, pre, (1, 2))
            assert clean[1] == t1 and clean[2] == t5
        grid = alpha_grid(0.01)
        assert grid.size == 101 and grid[0] == 0.0 and grid[-1] == 1.0


# ---------------------------------------------------------------- 5


def test_c5_landscape(criterion):
    with criterion("C5 landscape: -log identities to 1e-12, calibrated mock to 1e-9"):
        img = Image.uniform(0.8)
        ones = loss_landscape(ConstantClassifier.one_hot(1, 2), ("a", img, 1), 33)
        assert all(abs(v) <= 1e-12 for v in ones.losses)
        p = math.exp(-1)
        unit = loss_landscape(ConstantClassifier([1 - p, p]), ("b", img, 1), 33)
        assert all(abs(v - 1.0) <= 1e-12 for v in unit.losses)

        # hand-derived: image drops to 0.2 for alpha <= 0.8, stays 0.8 above
        hand = [math.log1p(math.exp(3.0))] * 4 + [math.log1p(math.exp(-3.0))]
        mock = loss_landscape(BrightnessClassifier(sharpness=10.0), ("c", img, 1), 5)
        assert mock.alphas == (0.0, 0.25, 0.5, 0.75, 1.0)
        for got, want, a in zip(mock.losses, hand, mock.alphas):
            assert abs(got - want) <= 1e-9
            assert abs(got + math.log(sigmoid(10 * (brute_solarized_mean(img.pixels, a) - 0.5)))) <= 1e-9


# ---------------------------------------------------------------- 6

_SVG = "{http://www.w3.org/2000/svg}"


def _svg_series(text):
    root = ET.fromstring(text)
    return {
        g.get("data-label"): [(float(c.get("data-x")), float(c.get("data-y"))) for c in g.iter(_SVG + "circle")]
        for g in root.iter(_SVG + "g")
        if g.get("class") == "series"
    }


def test_c6_round_trip_and_plot_fidelity(criterion, png_bench):
    with criterion("C6 report round-trip and SVG/CSV fidelity exact"):
        d = png_bench
        common = ["--manifest", d / "m.csv", "--model", "synthetic:brightness:12"]
        assert main([str(a) for a in ["attack", *common, "--n", 7, "--out", d / "a.json"]]) == 0
        assert main([str(a) for a in ["sweep", *common, "--out", d / "s.json"]]) == 0
        for name in ("a.json", "s.json"):
            text = (d / name).read_text()
            assert RunReport.from_json(text).to_json() == text
            assert RunReport.from_json(RunReport.from_json(text).to_json()).to_json() == text

        rows = list(csv.DictReader(io.StringIO((d / "s.csv").read_text())))
        series = _svg_series((d / "s.svg").read_text())
        assert len(rows) == 101
        for col in ("top1", "top5"):
            assert series[col] == [(float(r["alpha"]), float(r[col])) for r in rows]
        rep = json.loads((d / "s.json").read_text())
        assert [float(r["alpha"]) for r in rows] == rep["sweep"]["alphas"]
        assert [float(r["top1"]) for r in rows] == rep["sweep"]["top1_accuracy"]

        clf = BrightnessClassifier(sharpness=5.0)
        rng = np.random.default_rng(6)
        ls = [loss_landscape(clf, (f"l{i}", Image(rng.random((3, 3, 3))), i % 2), 64) for i in range(5)]
        lrows = list(csv.DictReader(io.StringIO(landscape_csv(ls))))
        lseries = _svg_series(landscape_svg(ls))
        for l in ls:
            assert lseries[l.sample_id] == [(float(r["alpha"]), float(r["loss"])) for r in lrows if r["sample_id"] == l.sample_id]


# ---------------------------------------------------------------- 7-9 (integration)

MODEL = os.environ.get("SOLARBENCH_RESNET50_ONNX")
MANIFEST = os.environ.get("SOLARBENCH_IMAGENET_MANIFEST")
PREPROCESS = os.environ.get("SOLARBENCH_PREPROCESS")


@pytest.fixture(scope="module")
def imagenet():
    if not (MODEL and MANIFEST):
        pytest.skip("set SOLARBENCH_RESNET50_ONNX and SOLARBENCH_IMAGENET_MANIFEST to run")
    from solarbench import OnnxClassifier, PreprocessConfig, load_manifest
    from solarbench.dataset import lazy_samples

    cfg = PreprocessConfig.from_json(PREPROCESS) if PREPROCESS else None
    clf = OnnxClassifier(MODEL, cfg)
    manifest = load_manifest(MANIFEST, clf.num_classes)
    assert len(manifest) >= 1000
    return clf, lazy_samples(manifest)


@pytest.mark.integration
def test_c7_clean_top1(criterion, request):
    with criterion("C7 ResNet-50 clean top-1 within 3 pp of 76.13%"):
        clf, samples = request.getfixturevalue("imagenet")
        acc = evaluate_clean(clf, samples, (1,), workers=os.cpu_count() or 1)[1]
        assert abs(acc - 0.7613) <= 0.03, acc


@pytest.mark.integration
def test_c8_randsol_top1_10(criterion, request):
    with criterion("C8 RandSol-Top1-10 robust top-1 <= 25%"):
        clf, samples = request.getfixturevalue("imagenet")
        res = evaluate_robust(clf, samples, AttackConfig(k=1, n=10, seed=0), workers=os.cpu_count() or 1)
        assert res.top1 <= 0.25, res.top1


@pytest.mark.integration
def test_c9_universal_minimum(criterion, request):
    with criterion("C9 universal sweep minimum at alpha = 0.12 +/- 0.05"):
        clf, samples = request.getfixturevalue("imagenet")
        res = universal_sweep(clf, samples, 0.01, workers=os.cpu_count() or 1)
        assert abs(res.global_min_alpha - 0.12) <= 0.05, res.global_min_alpha
