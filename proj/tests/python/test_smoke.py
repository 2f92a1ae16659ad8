import os
import subprocess

import numpy as np
import pytest

import lsi


def test_exports_present():
    for name in lsi.__all__:
        assert hasattr(lsi, name)


def test_synthetic_faces_and_image_io(tmp_path):
    lsi.make_synthetic_faces(str(tmp_path), 12, 16, 3)
    files = sorted(p.name for p in tmp_path.glob("face_*.png"))
    assert len(files) == 12
    img = lsi.read_image(str(tmp_path / files[0]))
    assert img.shape == (1, 16, 16)
    assert img.min() >= 0.0 and img.max() <= 1.0

    out = tmp_path / "copy.png"
    lsi.write_image(str(out), img)
    again = lsi.read_image(str(out))
    np.testing.assert_array_equal(img, again)


def test_fsi_full_budget_is_exact():
    rng = np.random.default_rng(5)
    img = rng.uniform(0.0, 1.0, size=(8, 8))
    recon = lsi.fsi_reconstruct(img, lsi.fsi_full_budget(8, 8))
    assert lsi.mse(recon, img) < 1e-10


def test_fsi_budget_too_small():
    with pytest.raises(lsi.ConfigError):
        lsi.fsi_reconstruct(np.zeros((8, 8)), 2)


def test_sensor_affine_response():
    out = lsi.sense(np.array([100.0]), gain=2.0, adc_bits=16, adc_hi=65535.0)
    assert out[0] == pytest.approx(200.0, abs=0.5)


def test_psnr_identity():
    a = np.full((4, 4), 0.25)
    assert lsi.psnr(a, a) == np.inf
    assert lsi.mse(a, a) == 0.0


def test_system_checkpoint_roundtrip(tmp_path):
    ckpt = str(tmp_path / "demo.lsi")
    lsi._core.save_demo_system(ckpt, d=6, size=16, seed=7)
    sys_ = lsi.System(ckpt)
    assert (sys_.d, sys_.image_size, sys_.levels, sys_.latent_channels) == (6, 16, 3, 8)

    rng = np.random.default_rng(11)
    img = rng.uniform(0.0, 1.0, size=(1, 16, 16))
    meas = sys_.measure(img)
    assert meas.shape == (6,)
    z = sys_.encode(meas)
    assert z.shape == (3, 8)
    recon = sys_.decode(z)
    assert recon.shape == (1, 16, 16)
    assert recon.min() > 0.0 and recon.max() < 1.0
    np.testing.assert_allclose(sys_.reconstruct(img), recon)

    masks = sys_.masks()
    assert masks.shape == (6, 16, 16)
    assert set(np.unique(masks)) <= {0.0, 1.0}
    assert sys_.occupancy() == masks.reshape(6, -1).sum(axis=1).astype(int).tolist()

    z_ref = sys_.invert(img)
    assert z_ref.shape == (3, 8)


def test_measurements_match_masks(tmp_path):
    ckpt = str(tmp_path / "demo.lsi")
    lsi._core.save_demo_system(ckpt, d=4, size=16, seed=9)
    sys_ = lsi.System(ckpt)
    img = np.linspace(0.0, 1.0, 256).reshape(1, 16, 16)
    expected = (sys_.masks() * img[0]).reshape(4, -1).sum(axis=1)
    np.testing.assert_allclose(sys_.measure(img), expected, rtol=1e-12)


cli = pytest.mark.skipif("LSI_CLI" not in os.environ, reason="CLI path not provided")


@cli
def test_cli_help_exits_clean():
    proc = subprocess.run([os.environ["LSI_CLI"], "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "Subcommands" in proc.stdout


@cli
def test_cli_rejects_missing_checkpoint(tmp_path):
    proc = subprocess.run(
        [os.environ["LSI_CLI"], "evaluate", "--out", str(tmp_path / "run")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 2
    assert "train" in proc.stderr


@cli
def test_cli_pipeline_make_dataset(tmp_path):
    proc = subprocess.run(
        [
            os.environ["LSI_CLI"],
            "make-dataset",
            "--out",
            str(tmp_path / "run"),
            "--set",
            f"data.dir={tmp_path / 'faces'}",
            "--set",
            "data.count=8",
            "--set",
            "data.size=16",
        ],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert len(list((tmp_path / "faces").glob("*.png"))) == 8
    assert (tmp_path / "faces" / "labels.tsv").exists()
    assert (tmp_path / "run" / "config.txt").exists()
