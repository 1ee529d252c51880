# -*- coding: utf-8 -*-

"""
命令行：各子命令的输出与退出码
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import json
import logging
import re

import numpy as np
import pytest

from TNAFLib.cli import main
from TNAFLib.data import load_matrix, save_matrix, toy_generate
from TNAFLib.utils import setup_logging

RESULT_LINE = re.compile(r"^test_ll=(-?\d+\.\d+) ± (\d+\.\d+)")


@pytest.fixture
def trained(tmp_path, tiny_config_file, capsys):
    config = tiny_config_file("affine")
    checkpoint = tmp_path / "model.ckpt"
    assert main(["-q", "train", "-c", str(config), "-o", str(checkpoint), "--no-progress"]) == 0
    capsys.readouterr()
    return config, checkpoint


def test_train_prints_result_and_count(tmp_path, tiny_config_file, capsys):
    config = tiny_config_file("spline")
    checkpoint = tmp_path / "spline.ckpt"
    code = main(["-q", "train", "-c", str(config), "-o", str(checkpoint), "--no-progress"])
    assert code == 0
    last = capsys.readouterr().out.strip().splitlines()[-1]
    assert RESULT_LINE.match(last)
    assert re.search(r"param_count=\d+$", last)
    assert checkpoint.read_bytes()[:8] == b"TNAFCKPT"


def test_count_with_psi_adds_pseudo_parameters(trained, capsys):
    _, checkpoint = trained
    assert main(["inspect", "-m", str(checkpoint)]) == 0
    plain = int(re.search(r"param_count=(\d+)", capsys.readouterr().out).group(1))
    assert main(["inspect", "-m", str(checkpoint), "--count-with-psi"]) == 0
    with_psi = int(re.search(r"param_count=(\d+)", capsys.readouterr().out).group(1))
    # 二维仿射头：每个样本 2 × 2 个伪参数
    assert with_psi - plain == 4


def test_eval_and_raw_space(trained, tmp_path, capsys):
    _, checkpoint = trained
    data = tmp_path / "points.csv"
    save_matrix(toy_generate("ring", 50, seed=9), data)
    assert main(["eval", "-m", str(checkpoint), "-d", str(data)]) == 0
    standardized = float(RESULT_LINE.match(capsys.readouterr().out.strip()).group(1))
    assert main(["eval", "-m", str(checkpoint), "-d", str(data), "--raw-space"]) == 0
    raw = float(RESULT_LINE.match(capsys.readouterr().out.strip()).group(1))
    assert raw != standardized


def test_sample_and_invert_write_csv(trained, tmp_path):
    _, checkpoint = trained
    samples = tmp_path / "samples.csv"
    assert main(["sample", "-m", str(checkpoint), "-n", "7", "--seed", "3", "-o", str(samples)]) == 0
    first = load_matrix(samples).values
    assert first.shape == (7, 2)
    assert main(["sample", "-m", str(checkpoint), "-n", "7", "--seed", "3", "-o", str(samples)]) == 0
    np.testing.assert_array_equal(load_matrix(samples).values, first)

    latent = tmp_path / "latent.csv"
    assert main(["invert", "-m", str(checkpoint), "-d", str(samples), "-o", str(latent)]) == 0
    assert load_matrix(latent).values.shape == (7, 2)


def test_check_prints_pass_lines(trained, capsys):
    _, checkpoint = trained
    assert main(["check", "-m", str(checkpoint)]) == 0
    out = capsys.readouterr().out
    for name in ("triangularity", "logdet", "gradient", "inversion"):
        assert "{}=pass".format(name) in out


def test_check_from_config(tiny_config_file, capsys):
    assert main(["check", "-c", str(tiny_config_file("shared_cdf"))]) == 0
    assert "inversion=pass" in capsys.readouterr().out


def test_config_errors_exit_with_two(tmp_path, tiny_config_document, capsys):
    document = tiny_config_document()
    document["train"]["learning_rat"] = 0.1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    assert main(["train", "-c", str(path), "-o", str(tmp_path / "x.ckpt")]) == 2
    assert "train.learning_rat" in capsys.readouterr().err


def test_usage_errors_exit_with_two():
    with pytest.raises(SystemExit) as info:
        main(["sample", "-m", "x.ckpt", "-n", "0", "-o", "y.csv"])
    assert info.value.code == 2


def test_data_errors_exit_with_three(trained, tmp_path):
    _, checkpoint = trained
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n", encoding="utf-8")
    assert main(["eval", "-m", str(checkpoint), "-d", str(ragged)]) == 3
    wide = tmp_path / "wide.csv"
    wide.write_text("1,2,3\n", encoding="utf-8")
    assert main(["eval", "-m", str(checkpoint), "-d", str(wide)]) == 3
    assert main(["eval", "-m", str(checkpoint), "-d", str(tmp_path / "absent.csv")]) == 3


def test_corrupt_checkpoint_exits_with_four(trained, tmp_path):
    _, checkpoint = trained
    data = checkpoint.read_bytes()
    checkpoint.write_bytes(data[: len(data) // 2])
    assert main(["inspect", "-m", str(checkpoint)]) == 4


def test_ablate_prints_one_row_per_configuration(tiny_config_file, capsys):
    config = tiny_config_file("cdf", max_steps=2, eval_every=1)
    code = main(
        [
            "-q", "ablate", "-c", str(config),
            "--heads", "cdf", "spline",
            "--layers", "1", "2",
            "--seeds", "0", "1",
            "--no-progress",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert len(re.findall(r"-?\d+\.\d{4} ± \d+\.\d{4}", out)) == 4
    assert "spline" in out


def test_identical_runs_write_identical_checkpoints(tmp_path, tiny_config_file):
    config = tiny_config_file("cdf")
    first, second = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    for path in (first, second):
        assert main(["-q", "train", "-c", str(config), "-o", str(path), "--no-progress"]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_logging_setup_does_not_stack_handlers():
    foreign = logging.NullHandler()
    logging.getLogger("TNAFLib").addHandler(foreign)
    setup_logging(0)
    setup_logging(1)
    for name in ("TNAFLib", "TNAFLib.metrics"):
        names = [h.get_name() for h in logging.getLogger(name).handlers]
        assert names.count("TNAFLib.cli") == 1
    assert foreign in logging.getLogger("TNAFLib").handlers
    assert logging.getLogger("TNAFLib").level == logging.DEBUG
