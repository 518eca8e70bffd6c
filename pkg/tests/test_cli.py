import math
import subprocess
import sys

import numpy as np
import pytest

from apinet.cli import main
from apinet.params_io import load_params, save_params
from apinet.model import ModelDims, init_params

SMALL = """\
n_super = 2
n_sub = 3
d_in = 5
n_train = 6
n_test = 5
n_cl = 3
n_im = 2
epochs = 2
freeze_epochs = 1
episodes_per_epoch = 2
d = 6
d_h = 2
enc_hidden = 6
ablation_seeds = 1
"""


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "c.txt").write_text(SMALL)
    assert main(["gen-data", "--config", str(tmp_path / "c.txt"), "--out", str(tmp_path / "d.bin")]) == 0
    return tmp_path


def test_train_writes_outputs(workdir, capsys):
    assert main(["train", "--config", str(workdir / "c.txt"), "--data", str(workdir / "d.bin"),
                 "--out-dir", str(workdir / "run")]) == 0
    for name in ("params.bin", "metrics.csv", "config.txt"):
        assert (workdir / "run" / name).exists()
    _, meta = load_params(workdir / "run" / "params.bin")
    assert meta["mutual"] == "mlp" and meta["gate"] == "pair" and meta["d"] == "6"
    assert "final test accuracy" in capsys.readouterr().out


def test_rerun_from_effective_config(workdir):
    args = ["--data", str(workdir / "d.bin")]
    main(["train", "--config", str(workdir / "c.txt"), *args, "--out-dir", str(workdir / "a")])
    main(["train", "--config", str(workdir / "a" / "config.txt"), *args, "--out-dir", str(workdir / "b")])
    for name in ("params.bin", "metrics.csv", "config.txt"):
        assert (workdir / "a" / name).read_bytes() == (workdir / "b" / name).read_bytes()


def test_eval_untrained_near_chance(workdir, capsys):
    # zero classifier weights: argmax ties go to class 0, so accuracy is exactly 1/C on balanced data
    P = init_params(ModelDims(d_in=5, d=6, d_h=2, enc_hidden=6, n_classes=6), None, np.random.default_rng(0))
    P["classifier.w"][:] = 0
    save_params(workdir / "p.bin", P)
    capsys.readouterr()
    assert main(["eval", "--params", str(workdir / "p.bin"), "--data", str(workdir / "d.bin")]) == 0
    assert math.isclose(float(capsys.readouterr().out), 1 / 6, abs_tol=1e-6)


def test_inspect_gates(workdir, capsys):
    main(["train", "--config", str(workdir / "c.txt"), "--data", str(workdir / "d.bin"), "--out-dir", str(workdir / "r")])
    capsys.readouterr()
    assert main(["inspect-gates", "--params", str(workdir / "r" / "params.bin"), "--data", str(workdir / "d.bin"),
                 "--pairs", "0:1,3:20", "--k", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    for line in lines:
        g1 = line.split(" g1 ")[1].split(" g2 ")[0].split()
        g2 = line.split(" g2 ")[1].split()
        assert len(g1) == 5 and len(g2) == 5


def test_inspect_gates_bad_id(workdir):
    main(["train", "--config", str(workdir / "c.txt"), "--data", str(workdir / "d.bin"), "--out-dir", str(workdir / "r")])
    assert main(["inspect-gates", "--params", str(workdir / "r" / "params.bin"), "--data", str(workdir / "d.bin"),
                 "--pairs", "0:999"]) == 1


def test_gradcheck_default_config(capsys):
    assert main(["gradcheck"]) == 0
    err = float(capsys.readouterr().out.split()[-1])
    assert err < 1e-4


def test_gradcheck_threshold_exit(tmp_path, capsys):
    # a step this coarse cannot resolve the gradients; the command must say so with exit 2
    (tmp_path / "c.txt").write_text("gradcheck_h = 0.5\n")
    assert main(["gradcheck", "--config", str(tmp_path / "c.txt")]) == 2


def test_ablate(workdir):
    assert main(["ablate", "--config", str(workdir / "c.txt"), "--data", str(workdir / "d.bin"),
                 "--out-dir", str(workdir / "abl"), "--tables", "3"]) == 0
    text = (workdir / "abl" / "ablation_table3.csv").read_text()
    assert text.startswith("table,axis,value,seed,test_acc\n")


def test_validation_errors(tmp_path, workdir):
    (tmp_path / "bad.txt").write_text("epochs = 2\nbogus = 1\n")
    assert main(["gen-data", "--config", str(tmp_path / "bad.txt"), "--out", str(tmp_path / "x.bin")]) == 1
    (tmp_path / "junk.bin").write_bytes(b"not a dataset")
    assert main(["eval", "--params", str(tmp_path / "junk.bin"), "--data", str(workdir / "d.bin")]) == 1
    assert main(["eval", "--params", str(tmp_path / "missing.bin"), "--data", str(workdir / "d.bin")]) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "apinet", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "inspect-gates" in out.stdout
