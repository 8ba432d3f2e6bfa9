import json

import numpy as np
import pytest

from panoptix.core import init_weights
from panoptix.evaluate import METRICS, run_eval
from panoptix.registry import Registry
from panoptix.scene import SceneError, TranslationPlan
from panoptix.sra import SraBundle, SraNets
from panoptix.toyset import generate_dataset
from panoptix.tra import TraBundle, TraNets


@pytest.fixture(scope="module")
def setup(tmp_path_factory):
    root = tmp_path_factory.mktemp("ev")
    generate_dataset(root / "test", "A", 5, 32, 42)
    reg = Registry(bundles={
        "t": TraBundle(init_weights(TraNets(), 0, std=0.2), "boxthing", "blobthing"),
        "s": SraBundle(init_weights(SraNets(), 1, std=0.2), "A", "B"),
    })
    plan = TranslationPlan.from_dict({
        "thing_steps": [{"source_label": "boxthing", "target_label": "blobthing",
                         "tra_bundle_id": "t"}],
        "stuff_steps": [{"source_label": "sky", "target_domain_id": "B", "sra_bundle_id": "s",
                         "style_source": "random(0)"}],
    })
    return root, reg, plan


def test_random_bundles_give_finite_report(setup, tmp_path):
    root, reg, plan = setup
    report = run_eval(root / "test", plan, reg, n_styles=3, seed=0, out_path=tmp_path / "r.json")
    assert set(report) == {"version", "config", "per_scene", "aggregate"}
    assert len(report["per_scene"]) == 5
    for scene in report["per_scene"]:
        for m in METRICS:
            assert np.isfinite(scene[m]) and scene[m] >= 0
    assert json.loads((tmp_path / "r.json").read_text())["aggregate"] == report["aggregate"]


def test_deterministic_in_seed(setup):
    root, reg, plan = setup
    a = run_eval(root / "test", plan, reg, n_styles=2, seed=4)
    b = run_eval(root / "test", plan, reg, n_styles=2, seed=4)
    c = run_eval(root / "test", plan, reg, n_styles=2, seed=5)
    assert a == b
    assert a["aggregate"]["diversity"] != c["aggregate"]["diversity"]


def test_empty_manifest(tmp_path, setup):
    _, reg, plan = setup
    (tmp_path / "manifest.json").write_text(json.dumps({"version": 1, "records": []}))
    with pytest.raises(SceneError, match="no scenes"):
        run_eval(tmp_path, plan, reg)


def test_error_names_scene(setup):
    root, reg, _ = setup
    plan = TranslationPlan.from_dict({"thing_steps": [
        {"source_label": "boxthing", "target_label": "blobthing", "tra_bundle_id": "missing"}]})
    with pytest.raises(SceneError, match="scene 0"):
        run_eval(root / "test", plan, reg, n_styles=1)
