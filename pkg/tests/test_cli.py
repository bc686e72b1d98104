import numpy as np
import pytest

from region_mixup.cli import main
from region_mixup.data import load_dataset
from region_mixup.nn import load_tensors


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


@pytest.fixture
def synth_files(tmp_path, capsys):
    train, test = tmp_path / "train.rmx", tmp_path / "test.rmx"
    assert run(capsys, "synth", "--out", train, "--n", 120, "--size", 8, "--seed", 1)[0] == 0
    assert run(capsys, "synth", "--out", test, "--n", 40, "--size", 8, "--seed", 2)[0] == 0
    return train, test


def write_cfg(path, train, test, **extra):
    lines = [f"dataset_train = {train}", f"dataset_test = {test}", "epochs = 2", "batch_size = 32", "augment = crop"]
    lines += [f"{k} = {v}" for k, v in extra.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_synth_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        assert run(capsys, "synth", "--out", tmp_path / name, "--n", 100, "--size", 16, "--seed", 7)[0] == 0
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()
    ds = load_dataset(tmp_path / "a")
    assert ds.images.shape == (100, 3, 16, 16)


def test_train_eval_attack(tmp_path, capsys, synth_files):
    cfg = write_cfg(tmp_path / "c.cfg", *synth_files, method="region", k=2)
    code, out = run(capsys, "train", "--config", cfg, "--out", tmp_path / "run")
    assert code == 0, out.err
    assert (tmp_path / "run" / "metrics.csv").read_text().startswith("epoch,train_loss,test_acc,seconds\n")
    assert set(load_tensors(tmp_path / "run" / "checkpoint.rmx")) >= {"conv1.w", "fc.b"}

    code, ev = run(capsys, "eval", "--model", tmp_path / "run" / "checkpoint.rmx", "--data", synth_files[1])
    assert code == 0 and ev.out.startswith("accuracy=")
    code, at = run(capsys, "attack", "--eps", 0, "--model", tmp_path / "run" / "checkpoint.rmx", "--data", synth_files[1])
    assert code == 0 and at.out == ev.out
    code, at8 = run(capsys, "attack", "--config", cfg, "--out", tmp_path / "run")
    assert code == 0 and 0.0 <= float(at8.out.strip().split("=")[1]) <= 1.0


def test_train_reproducible(tmp_path, capsys, synth_files):
    cfg = write_cfg(tmp_path / "c.cfg", *synth_files, method="cutmix", seed=3)
    for name in ("r1", "r2"):
        assert run(capsys, "train", "--config", cfg, "--out", tmp_path / name)[0] == 0
    for f in ("checkpoint.rmx", "metrics.csv", "run.cfg"):
        assert (tmp_path / "r1" / f).read_bytes() == (tmp_path / "r2" / f).read_bytes()


def test_flags_override_config(tmp_path, capsys, synth_files):
    cfg = write_cfg(tmp_path / "c.cfg", *synth_files, method="region", k=3)
    code, _ = run(capsys, "train", "--config", cfg, "--k", 2, "--method", "mixup", "--limit", 64, "--out", tmp_path / "o")
    assert code == 0
    saved = (tmp_path / "o" / "run.cfg").read_text()
    assert "method = mixup" in saved and "k = 2" in saved and "limit = 64" in saved


def test_train_divisibility_exits_2(tmp_path, capsys):
    data = tmp_path / "d32.rmx"
    assert run(capsys, "synth", "--out", data, "--n", 8, "--size", 32, "--seed", 0)[0] == 0
    cfg = write_cfg(tmp_path / "c.cfg", data, data, method="region", k=3)
    code, out = run(capsys, "train", "--config", cfg, "--out", tmp_path / "o")
    assert code == 2
    assert "divisible" in out.err
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize("method", ["region", "mixup", "cutmix", "none"])
def test_augment_reproducible(tmp_path, capsys, synth_files, method):
    outs = []
    for name in ("a.rmx", "b.rmx"):
        code, _ = run(capsys, "augment", "--data", synth_files[0], "--method", method, "--k", 2, "--seed", 5, "--out", tmp_path / name)
        assert code == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    t = load_tensors(tmp_path / "a.rmx")
    assert t["images"].shape == (120, 3, 8, 8) and t["labels"].shape == (120, 2)
    np.testing.assert_allclose(t["labels"].sum(axis=1), 1.0, atol=1e-6)


def test_bad_config_exits_2(tmp_path, capsys):
    (tmp_path / "c.cfg").write_text("k = 2\nbogus = 1\n")
    code, out = run(capsys, "train", "--config", tmp_path / "c.cfg")
    assert code == 2 and "line 2" in out.err


def test_bad_format_exits_2(tmp_path, capsys):
    (tmp_path / "junk.bin").write_bytes(b"\x00" * 10)
    code, _ = run(capsys, "eval", "--model", tmp_path / "junk.bin", "--data", tmp_path / "junk.bin")
    assert code == 2


def test_unknown_subcommand(capsys):
    code, out = run(capsys, "fly")
    assert code == 2 and "usage" in out.err


def test_missing_required(capsys):
    code, out = run(capsys, "train")
    assert code == 2 and "required" in out.err
