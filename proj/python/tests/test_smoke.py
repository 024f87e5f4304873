import json
import math
import os
import pathlib

import pytest

import r2opt

ROOT = pathlib.Path(os.environ.get("R2OPT_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
CONFIGS = ROOT / "configs"


def test_version_and_problems():
    assert r2opt.__version__ == "0.1.0"
    assert set(r2opt.problem_names()) >= {"hypersphere", "dtlz2", "gmm", "toy1d"}


def test_dtlz2_origin_of_inputs():
    y = r2opt.evaluate("dtlz2", [0.0] + [0.5] * 7, M=2)
    assert len(y) == 2
    assert math.hypot(*y) == pytest.approx(1.0)


def test_hypervolume_two_boxes():
    assert r2opt.hypervolume([[1.0, 2.0], [2.0, 1.0]], [0.0, 0.0]) == pytest.approx(3.0)


def test_d1_and_igd_vanish_on_the_references():
    refs = [[1.0, 0.0], [0.0, 1.0]]
    assert r2opt.d1_utility(refs, refs, [0.5, 0.5]) == pytest.approx(0.0, abs=1e-12)
    assert r2opt.igd_utility(refs, refs) == pytest.approx(0.0, abs=1e-12)


def test_r2_is_seeded():
    pts = [[0.2, 0.9], [0.7, 0.4]]
    a = r2opt.r2_utility(pts, [1.0, 1.0], J=512, seed=5)
    b = r2opt.r2_utility(pts, [1.0, 1.0], J=512, seed=5)
    assert a == b
    assert a[1] > 0


def test_bad_config_reports_line():
    with pytest.raises(ValueError, match=r":3: "):
        r2opt.canonical_config('{\n "name": "x",\n "budget": 0\n}')


def test_shipped_configs_match_schema():
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((CONFIGS / "schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    configs = [p for p in CONFIGS.glob("*.json") if p.name != "schema.json"]
    assert len(configs) >= 3
    for path in configs:
        text = path.read_text()
        jsonschema.validate(json.loads(text), schema)
        assert len(r2opt.config_digest(text)) == 16


def test_quick_run_curve():
    text = (CONFIGS / "toy1d_quick.json").read_text()
    curve = r2opt.run(text, replications=2, parallel=2)
    assert curve["runs"] == 2 and curve["failures"] == 0
    assert len(curve["mean"]) == len(curve["iteration"]) > 0
    assert all(math.isfinite(v) for v in curve["mean"])
