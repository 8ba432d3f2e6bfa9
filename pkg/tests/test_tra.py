import numpy as np
import pytest
import torch

from panoptix.core import TrainConfig, init_weights
from panoptix.registry import Registry
from panoptix.scene import BinaryMask, MaskSet, SceneError, ThingStep
from panoptix.toyset import ToySceneSpec, generate_scene
from panoptix.tra import (
    TraBundle,
    TraNets,
    apply_tra_chain,
    soft_union,
    tra_forward,
    tra_loss,
    train_tra,
)
from panoptix.verify import random_scene_tensors, tra_gradient_errors


def scene(domain, n=2, seed=0, size=32):
    return generate_scene(ToySceneSpec(domain, size, n, seed))


def records(domain, count, base=0, size=32):
    from panoptix.toyset import Record

    return [Record(*scene(domain, 1 + s % 3, base + s, size), domain) for s in range(count)]


def random_bundle(seed=0, std=0.02):
    return TraBundle(init_weights(TraNets(), seed, std=std), "boxthing", "blobthing")


def test_arity_contract():
    x, m = scene("A", 1)
    out, masks = tra_forward(x, list(m.instance_masks), random_bundle())
    assert out.shape == (32, 32) and len(masks) == 1 and masks[0].shape == (32, 32)


def test_permutation_equivariance():
    x, m = scene("A", 2, seed=3)
    bundle = random_bundle(std=0.3)
    a, b = m.instance_masks
    out1, (p1, q1) = tra_forward(x, [a, b], bundle, chunk_size=0)
    out2, (q2, p2) = tra_forward(x, [b, a], bundle, chunk_size=0)
    assert np.array_equal(p1.bits, p2.bits) and np.array_equal(q1.bits, q2.bits)
    np.testing.assert_allclose(out1.pixels, out2.pixels, atol=1e-5)


def test_zero_generators_give_constant_image():
    nets = TraNets()
    with torch.no_grad():
        for p in nets.parameters():
            p.zero_()
    x, m = scene("B", 3)
    out, masks = tra_forward(x, list(m.instance_masks), TraBundle(nets, "a", "b"))
    assert np.all(out.pixels == out.pixels[0, 0, 0]) and len(masks) == 3


def test_forward_errors():
    x, m = scene("A", 2)
    with pytest.raises(SceneError):
        tra_forward(x, [], random_bundle())
    a = m.instance_masks[0]
    with pytest.raises(SceneError, match="overlap"):
        tra_forward(x, [a, a], random_bundle())


def test_soft_union_matches_or():
    m = torch.tensor([[[[0.0, 1.0], [0.0, 1.0]], [[0.0, 0.0], [1.0, 1.0]]]])
    assert torch.equal(soft_union(m)[0, 0], torch.tensor([[0.0, 1.0], [1.0, 1.0]]))


def _identity_generator_nets():
    class Identity(torch.nn.Module):
        def forward(self, x, masks):
            return x, masks

    nets = TraNets()
    nets.gen_ir = nets.gen_ri = Identity()
    return nets


def test_identity_translation_zero_terms():
    x_i, p_i = random_scene_tensors(0, 8, dtype=torch.float32)
    x_r, p_r = random_scene_tensors(1, 8, dtype=torch.float32)
    out = tra_loss((x_i, p_i, x_r, p_r), _identity_generator_nets())
    for k in ("cycle", "identity", "context"):
        assert out[k].item() == 0.0


def test_full_masks_zero_context():
    nets = init_weights(TraNets(), 1, std=0.3)
    x_i, _ = random_scene_tensors(2, 8, dtype=torch.float32)
    x_r, p_r = random_scene_tensors(3, 8, dtype=torch.float32)
    full = torch.ones(1, 1, 8, 8)
    assert tra_loss((x_i, full, x_r, full), nets)["context"].item() == 0.0
    assert tra_loss((x_i, full, x_r, p_r), nets)["context"].item() > 0.0


def test_total_weights():
    nets = init_weights(TraNets(), 2)
    x_i, p_i = random_scene_tensors(4, 16, dtype=torch.float32)
    x_r, p_r = random_scene_tensors(5, 16, dtype=torch.float32)
    o = {k: v.item() for k, v in tra_loss((x_i, p_i, x_r, p_r), nets).items()}
    want = o["gan"] + 10 * (o["cycle"] + o["identity"] + o["context"])
    assert o["total"] == pytest.approx(want, rel=1e-6)


@pytest.mark.parametrize("seed", [0, 1])
def test_gradients_agree_with_finite_differences(seed):
    for term, errs in tra_gradient_errors(seed, epsilon=1e-6).items():
        assert np.median(errs) < 1e-5, term
        assert (errs < 1e-2).mean() >= 0.85, term


@pytest.fixture(scope="module")
def small_bundle():
    cfg = TrainConfig(learning_rate=1e-3, epochs=2, seed=4, log_every=10)
    return train_tra(records("A", 20), records("B", 20, base=40), cfg, "boxthing", "blobthing")


def test_smoke_training_finite(small_bundle):
    assert small_bundle.train_log
    for entry in small_bundle.train_log:
        assert all(np.isfinite(v) for v in entry["losses"].values())


def test_step_one_deterministic():
    cfg = TrainConfig(epochs=1, seed=9)
    a = train_tra(records("A", 2), records("B", 2, base=5), cfg, "boxthing", "blobthing")
    b = train_tra(records("A", 2), records("B", 2, base=5), cfg, "boxthing", "blobthing")
    assert a.first_losses["total"] == pytest.approx(b.first_losses["total"], abs=1e-6)


def test_train_requires_labeled_masks():
    with pytest.raises(SceneError, match="no instance masks labeled"):
        train_tra(records("A", 2), records("B", 2), TrainConfig(epochs=1), "boxthing", "car")


def test_bundle_round_trip(small_bundle, tmp_path):
    small_bundle.save(tmp_path)
    loaded = TraBundle.load(tmp_path)
    x, m = scene("A", 3, seed=50)
    a = tra_forward(x, list(m.instance_masks), small_bundle)
    b = tra_forward(x, list(m.instance_masks), loaded)
    assert a[0].equals(b[0])
    assert all(np.array_equal(p.bits, q.bits) for p, q in zip(a[1], b[1]))


def test_bundle_label_rules():
    with pytest.raises(SceneError):
        TraBundle(TraNets(), "car", "car")
    with pytest.raises(SceneError):
        TraBundle(TraNets(), "", "car")


@pytest.fixture(scope="module")
def chain_setup():
    fwd = random_bundle(0, std=0.3)
    back = TraBundle(init_weights(TraNets(), 1, std=0.3), "blobthing", "boxthing")
    reg = Registry(bundles={"t1": fwd, "t2": back})
    x, m = scene("A", 3, seed=12)
    return reg, x, m


def test_chain_k0_identity(chain_setup):
    reg, x, m = chain_setup
    out, masks = apply_tra_chain(x, m, [], reg)
    assert out.equals(x) and masks is m


def test_chain_k2_matches_manual(chain_setup):
    reg, x, m = chain_setup
    steps = [ThingStep("boxthing", "blobthing", "t1"), ThingStep("blobthing", "boxthing", "t2")]
    out, masks = apply_tra_chain(x, m, steps, reg)

    x1, g1 = tra_forward(x, list(m.instance_masks), reg.tra("t1"), "i->r")
    g1 = [g.relabel("blobthing") for g in g1]
    x2, g2 = tra_forward(x1, g1, reg.tra("t2"), "i->r")
    assert out.equals(x2)
    assert [mm.label for mm in masks.instance_masks] == ["boxthing"] * 3
    assert all(np.array_equal(a.bits, b.bits) for a, b in zip(masks.instance_masks, g2))
    assert masks.stuff_masks == m.stuff_masks


def test_chain_other_masks_untouched(chain_setup):
    reg, x, m = chain_setup
    extra = BinaryMask(np.zeros((32, 32), np.uint8), "person")
    ms = MaskSet(list(m.instance_masks) + [extra], m.stuff_masks)
    _, masks = apply_tra_chain(x, ms, [ThingStep("boxthing", "blobthing", "t1")], reg)
    assert masks.instance_masks[-1] is extra


def test_chain_errors(chain_setup):
    reg, x, m = chain_setup
    xb, mb = scene("B", 2, seed=3)
    with pytest.raises(SceneError, match="step 1: no masks labeled boxthing"):
        apply_tra_chain(xb, mb, [ThingStep("boxthing", "blobthing", "t1")], reg)
    with pytest.raises(SceneError, match="maps boxthing<->blobthing"):
        apply_tra_chain(x, m, [ThingStep("car", "blobthing", "t1")], reg)
    with pytest.raises(SceneError, match="unresolved"):
        apply_tra_chain(x, m, [ThingStep("boxthing", "blobthing", "nope")], reg)
    two = [ThingStep("boxthing", "blobthing", "t1"), ThingStep("boxthing", "blobthing", "t1")]
    with pytest.raises(SceneError, match="step 2: no masks labeled boxthing"):
        apply_tra_chain(x, m, two, reg)
