import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from panoptix.scene import (
    BinaryMask,
    Image,
    MaskSet,
    SceneError,
    StyleSource,
    TranslationPlan,
    denormalize,
    mask_union,
    normalize,
    validate_scene,
)


def blank(h=8, w=8):
    return Image(np.zeros((h, w, 3), dtype=np.float32))


def mask(bits, label="m"):
    return BinaryMask(np.asarray(bits, dtype=np.uint8), label)


def test_validate_clean_scene():
    a = np.zeros((8, 8), np.uint8)
    a[:2, :2] = 1
    b = np.zeros((8, 8), np.uint8)
    b[5:, 5:] = 1
    assert validate_scene(blank(), MaskSet([mask(a, "car"), mask(b, "car")])) == []


def test_validate_shape_mismatch():
    found = validate_scene(blank(), MaskSet([mask(np.ones((4, 4)), "car")]))
    assert found == ["mask 'car': shape (4,4) ≠ (8,8)"]


def test_validate_overlap():
    m = np.zeros((8, 8), np.uint8)
    m[2:4, 2:4] = 1
    found = validate_scene(blank(), MaskSet([mask(m, "car"), mask(m, "car")]))
    assert found == ["instance masks 0,1 overlap"]


def test_validate_image_rules():
    assert any("divisible by 4" in v for v in validate_scene(blank(10, 12), MaskSet()))
    assert any("smaller than 8x8" in v for v in validate_scene(blank(4, 8), MaskSet()))
    bad = np.zeros((8, 8, 3), np.float32)
    bad[0, 0, 0] = 1.5
    assert any("outside [-1, 1]" in v for v in validate_scene(Image(bad), MaskSet()))
    bad[0, 0, 0] = np.nan
    assert any("non-finite" in v for v in validate_scene(Image(bad), MaskSet()))


def test_stuff_may_overlap_instances():
    m = mask(np.ones((8, 8)), "car")
    assert validate_scene(blank(), MaskSet([m], {"sky": mask(np.ones((8, 8)), "sky")})) == []


def test_binary_mask_rejects_non_binary():
    with pytest.raises(SceneError):
        BinaryMask(np.full((8, 8), 2))


def test_union_trivial_cases():
    z = np.zeros((8, 8), np.uint8)
    assert not mask_union([mask(z), mask(z)]).bits.any()
    left, right = z.copy(), z.copy()
    left[:, :4] = 1
    right[:, 4:] = 1
    u = mask_union([mask(left), mask(right)])
    assert u.bits.all() and u.label == "union"


def test_union_matches_scalar_loop():
    rng = np.random.default_rng(3)
    ms = [mask(rng.integers(0, 2, (8, 8))) for _ in range(5)]
    expected = np.zeros((8, 8), np.uint8)
    for r in range(8):
        for c in range(8):
            v = 0
            for m in ms:
                if m.bits[r, c] == 1:
                    v = 1
            expected[r, c] = v
    assert np.array_equal(mask_union(ms).bits, expected)


def test_union_errors():
    with pytest.raises(SceneError, match="empty mask list"):
        mask_union([])
    with pytest.raises(SceneError):
        mask_union([mask(np.zeros((8, 8))), mask(np.zeros((4, 4)))])


bitmaps = arrays(np.uint8, (6, 6), elements=st.integers(0, 1))


@given(st.lists(bitmaps, min_size=1, max_size=5))
def test_union_properties(raws):
    ms = [mask(r) for r in raws]
    u = mask_union(ms)
    assert np.array_equal(mask_union(ms + ms).bits, u.bits)
    assert np.array_equal(mask_union(ms[::-1]).bits, u.bits)
    for m in ms:
        assert np.all(u.bits >= m.bits)


def test_normalize_endpoints():
    raw = np.array([[[0, 255, 127]]], dtype=np.uint8).repeat(8, 0).repeat(8, 1)
    px = normalize(raw).pixels
    assert px[0, 0, 0] == -1.0 and px[0, 0, 1] == 1.0
    assert px[0, 0, 2] == pytest.approx(-0.0039215686, abs=1e-7)
    assert denormalize(normalize(raw))[0, 0, 2] == 127


def test_normalize_all_128():
    px = normalize(np.full((2, 2, 3), 128, np.uint8)).pixels
    assert np.allclose(px, 128 / 127.5 - 1) and px[0, 0, 0] == pytest.approx(0.0039215686, abs=1e-7)


def test_round_trip_all_values():
    raw = np.arange(256, dtype=np.uint8).reshape(16, 16, 1).repeat(3, axis=2)
    assert np.array_equal(denormalize(normalize(raw)), raw)


def test_denormalize_rounds_half_up_and_clamps():
    # 0.0 maps to 127.5, exactly halfway between codes 127 and 128
    img = Image(np.array([[[0.0, -1.5, 1.5]]]))
    out = denormalize(img)
    assert out[0, 0, 0] == 128 and out[0, 0, 1] == 0 and out[0, 0, 2] == 255


def test_normalize_errors():
    with pytest.raises(SceneError):
        normalize(np.zeros((4, 4)))
    with pytest.raises(SceneError):
        normalize(np.full((4, 4, 3), 300))


@settings(max_examples=50)
@given(arrays(np.uint8, (4, 4, 3)))
def test_round_trip_property(raw):
    assert np.array_equal(denormalize(normalize(raw)), raw)


def test_plan_round_trip():
    d = {
        "thing_steps": [{"source_label": "boxthing", "target_label": "blobthing",
                         "tra_bundle_id": "tra1"}],
        "stuff_steps": [{"source_label": "sky", "target_domain_id": "B",
                         "sra_bundle_id": "sra1", "style_source": "random(4)"},
                        {"source_label": "ground", "target_domain_id": "B",
                         "sra_bundle_id": "sra1", "style_source": "reference(ref.png)"}],
        "A": 1,
    }
    plan = TranslationPlan.from_dict(d)
    assert (plan.K, plan.L, plan.M, plan.A) == (1, 2, 3, 1)
    assert plan.stuff_steps[1].style_source == StyleSource("reference", image_path="ref.png")
    assert plan.to_dict() == d


def test_plan_rejects_bad_style_and_wrong_A():
    with pytest.raises(SceneError):
        StyleSource.parse("gaussian")
    bad = {"stuff_steps": [{"source_label": "sky", "target_domain_id": "B",
                            "sra_bundle_id": "s", "style_source": "random(1)"}], "A": 2}
    with pytest.raises(SceneError):
        TranslationPlan.from_dict(bad)


def test_values_are_immutable():
    img = blank()
    with pytest.raises(ValueError):
        img.pixels[0, 0, 0] = 1
