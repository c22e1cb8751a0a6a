import numpy as np
import pytest

import sphmark


@pytest.fixture(scope="module")
def marked():
    cover = sphmark.synthetic_cover(64, 3, 5)
    image, side, clip = sphmark.embed(cover, "0xdeadbeef", key=42)
    return cover, image, side, clip


def test_version():
    assert sphmark.__version__ == sphmark.version()


def test_synthetic_cover_shape_and_range():
    x = sphmark.synthetic_cover(32, 3, 1)
    assert x.shape == (32, 64, 3)
    assert x.min() >= 0.0 and x.max() <= 1.0
    np.testing.assert_array_equal(x, sphmark.synthetic_cover(32, 3, 1))


def test_embed_extract_round_trip(marked):
    cover, image, side, clip = marked
    assert image.shape == cover.shape
    assert 0.0 <= clip < 0.05
    assert sphmark.psnr(cover, image) >= 35.0
    out = sphmark.extract(image, side, key=42)
    assert out["payload_hex"] == "0xdeadbeef"
    assert not out["low_confidence"]


def test_rotation_keeps_payload(marked):
    _, image, side, _ = marked
    turned = sphmark.rotate(image, seed=7)
    assert sphmark.extract(turned, side, key=42)["payload_hex"] == "0xdeadbeef"
    assert sphmark.bispectrum_cosine(image, turned) > 0.999


def test_wrong_key_is_flagged(marked):
    _, image, side, _ = marked
    assert sphmark.extract(image, side, key=43)["low_confidence"]


def test_attacks(marked):
    _, image, _, _ = marked
    np.testing.assert_array_equal(sphmark.attack(image, "identity"), image)
    blurred = sphmark.attack(image, "blur:sigma=3,k=7")
    assert sphmark.bispectrum_cosine(image, blurred) >= 0.99
    with pytest.raises(sphmark.ValidationError):
        sphmark.attack(image, "sharpen")


def test_side_info_and_ppm_files(tmp_path, marked):
    _, image, side, _ = marked
    side.save(str(tmp_path / "wm"))
    loaded = sphmark.SignatureSet.load(str(tmp_path / "wm"))
    assert loaded.alpha == side.alpha
    sphmark.write_ppm(str(tmp_path / "wm.ppm"), image)
    stored = sphmark.read_ppm(str(tmp_path / "wm.ppm"))
    assert np.abs(stored - image).max() <= 0.5 / 255 + 1e-12
    assert sphmark.extract(stored, loaded, key=42)["payload_hex"] == "0xdeadbeef"
    with pytest.raises(sphmark.IoError):
        sphmark.read_ppm(str(tmp_path / "missing.ppm"))


def test_config():
    cfg = sphmark.CodecConfig()
    assert cfg.bits == 32 and cfg.embed_degrees == [6, 8, 14]
    cfg.strength = 0.5
    assert sphmark.CodecConfig.from_json(cfg.to_json()).strength == 0.5
    cfg.bits = 1000
    with pytest.raises(sphmark.ValidationError):
        cfg.validate(3)


def test_bispectrum_is_rotation_invariant():
    x = sphmark.synthetic_cover(64, 1, 3)
    a = np.asarray(sphmark.bispectrum(x, 8))
    b = np.asarray(sphmark.bispectrum(sphmark.rotate(x, 11), 8))
    assert np.linalg.norm(a - b) <= 0.05 * np.linalg.norm(a)
