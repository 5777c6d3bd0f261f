import json

import numpy as np
import pytest

from s2vr.cli import (
    DEFAULT_CONFIG,
    cmd_generate,
    main,
    pipeline_hash,
    read_predictions,
    resolve_config,
    resolved_paths,
    write_predictions,
)
from s2vr.errors import FormatError, ParameterError
from s2vr.geometry import LABEL_LENGTH, read_annotations


def _tiny_overrides(workdir, n=12):
    """Config overrides for a fast end-to-end run (small frame, few samples)."""
    return [
        f"generate.n_samples={n}",
        "hog.cell=32",
        "kernels.sigma_count=4",
        "train.max_outer=4",
        "evaluate.folds=2",
        f"paths.workdir={json.dumps(str(workdir))}",
    ]


def _run(args):
    return main(args)


# ----------------------------------------------------------------------
# configuration resolution
# ----------------------------------------------------------------------


def test_defaults_are_self_consistent():
    cfg = resolve_config(None, env={})
    assert cfg == DEFAULT_CONFIG
    paths = resolved_paths(cfg)
    assert paths["annotations"].name == "annotations.txt"


def test_config_file_overrides_defaults(tmp_path):
    cfile = tmp_path / "cfg.json"
    cfile.write_text(json.dumps({"seed": 42, "train": {"tau": 2.5}}))
    cfg = resolve_config(str(cfile), env={})
    assert cfg["seed"] == 42
    assert cfg["train"]["tau"] == 2.5
    assert cfg["train"]["gamma"] == DEFAULT_CONFIG["train"]["gamma"]


def test_env_paths_put_artifacts_elsewhere(tmp_path):
    env = {"S2VR_WORKDIR": str(tmp_path / "w"), "S2VR_MODEL": str(tmp_path / "m.bin")}
    cfg = resolve_config(None, env=env)
    paths = resolved_paths(cfg)
    assert paths["workdir"] == tmp_path / "w"
    assert paths["model"] == tmp_path / "m.bin"
    assert paths["features"] == tmp_path / "w" / "features.txt"


def test_set_overrides_beat_config_file(tmp_path):
    cfile = tmp_path / "cfg.json"
    cfile.write_text(json.dumps({"train": {"tau": 2.5}}))
    cfg = resolve_config(str(cfile), sets=["train.tau=9.0", "train.rho=0.7"], env={})
    assert cfg["train"]["tau"] == 9.0
    assert cfg["train"]["rho"] == 0.7


def test_set_parses_json_values():
    cfg = resolve_config(
        None,
        sets=[
            "generate.scale=[0.9, 1.0]",
            "generate.mirror=false",
            "train.epsilon=auto",
        ],
        env={},
    )
    assert cfg["generate"]["scale"] == [0.9, 1.0]
    assert cfg["generate"]["mirror"] is False
    assert cfg["train"]["epsilon"] == "auto"  # bare word falls back to string


def test_flag_paths_beat_env(tmp_path):
    env = {"S2VR_MODEL": str(tmp_path / "env.bin")}
    cfg = resolve_config(None, flag_paths={"model": str(tmp_path / "flag.bin")}, env=env)
    assert resolved_paths(cfg)["model"] == tmp_path / "flag.bin"


def test_bad_set_and_mode_rejected():
    with pytest.raises(ParameterError):
        resolve_config(None, sets=["no_equals_sign"], env={})
    with pytest.raises(ParameterError):
        resolve_config(None, mode="both", env={})


def test_config_file_must_hold_object(tmp_path):
    cfile = tmp_path / "cfg.json"
    cfile.write_text("[1, 2]")
    with pytest.raises(FormatError):
        resolve_config(str(cfile), env={})


def test_pipeline_hash_ignores_paths(tmp_path):
    f = tmp_path / "data.txt"
    f.write_text("payload")
    cfg_a = resolve_config(None, sets=["paths.workdir=/a"], env={})
    cfg_b = resolve_config(None, sets=["paths.workdir=/b"], env={})
    assert pipeline_hash(cfg_a, [f]) == pipeline_hash(cfg_b, [f])
    cfg_c = resolve_config(None, sets=["seed=1"], env={})
    assert pipeline_hash(cfg_c, [f]) != pipeline_hash(cfg_a, [f])
    g = tmp_path / "data2.txt"
    g.write_text("payload2")
    assert pipeline_hash(cfg_a, [g]) != pipeline_hash(cfg_a, [f])


# ----------------------------------------------------------------------
# prediction file round trip
# ----------------------------------------------------------------------


def test_prediction_io_round_trip(tmp_path):
    P = np.random.default_rng(0).normal(size=(5, 3))
    path = tmp_path / "pred.txt"
    write_predictions(path, P, mode="angles_only", pipeline="cafe")
    back, header = read_predictions(path)
    assert np.array_equal(back, P)
    assert header["mode"] == "angles_only"
    assert header["pipeline"] == "cafe"
    bad = tmp_path / "bad.txt"
    bad.write_text("1.0,2.0\n")
    with pytest.raises(FormatError):
        read_predictions(bad)


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------


def test_generate_writes_annotations_and_images(tmp_path):
    cfg = resolve_config(None, sets=_tiny_overrides(tmp_path, n=3), env={})
    out = cmd_generate(cfg)
    labels, header = read_annotations(tmp_path / "annotations.txt")
    assert labels.shape == (LABEL_LENGTH, 3)
    assert len(header["pipeline"]) == 16
    pngs = sorted((tmp_path / "images").glob("*.png"))
    assert len(pngs) == 3
    assert out["count"] == 3


def test_generate_zero_samples(tmp_path):
    cfg = resolve_config(None, sets=_tiny_overrides(tmp_path, n=0), env={})
    cmd_generate(cfg)
    labels, _ = read_annotations(tmp_path / "annotations.txt")
    assert labels.shape == (LABEL_LENGTH, 0)


def test_generate_deterministic_per_sample(tmp_path):
    cfg = resolve_config(None, sets=_tiny_overrides(tmp_path, n=4), env={})
    cmd_generate(cfg)
    first = (tmp_path / "annotations.txt").read_bytes()
    cmd_generate(cfg)
    assert (tmp_path / "annotations.txt").read_bytes() == first


def test_cli_unknown_file_exits_one(tmp_path, capsys):
    rc = _run(["train", "--workdir", str(tmp_path / "missing")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_cli_bad_config_json_exits_one(tmp_path, capsys):
    cfile = tmp_path / "broken.json"
    cfile.write_text("{not json")
    rc = _run(["generate", "--config", str(cfile)])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_full_pipeline_end_to_end(tmp_path, capsys):
    over = _tiny_overrides(tmp_path)
    args = [x for s in over for x in ("--set", s)]
    for cmd in ("generate", "features", "align", "train", "predict", "evaluate"):
        rc = _run([cmd, *args])
        out = capsys.readouterr()
        assert rc == 0, f"{cmd} failed: {out.err}"
        json.loads(out.out.strip().splitlines()[-1])  # summary is valid JSON

    # alignment report exists and its weights have unit norm
    alignment = (tmp_path / "alignment.txt").read_text().splitlines()
    assert alignment[0].startswith("# s2vr-alignment v1")
    sums = [l for l in alignment if l.startswith("omega_sum_sq=")]
    assert len(sums) == 1
    assert float(sums[0].split("=")[1]) == pytest.approx(1.0, abs=1e-9)

    # train log structure
    log = (tmp_path / "train.log").read_text().splitlines()
    assert log[0] == "# s2vr-train-log v1"
    assert any(l.startswith("mode=") for l in log)
    assert any(l.startswith("method=") for l in log)
    assert any(l.startswith("support=") for l in log)
    outer = [l for l in log if l.startswith("outer ")]
    assert outer and all(len(l.split()) == 4 for l in outer)
    trace = [float(l.split()[2]) for l in log if l.startswith("trace ")]
    assert len(trace) >= 2
    tr = np.array(trace)
    assert np.all(np.diff(tr) <= 1e-9 * (1.0 + np.abs(tr[:-1])))
    assert any(l.startswith("converged=") for l in log)

    # predictions match the joint label length
    P, pheader = read_predictions(tmp_path / "predictions.txt")
    assert P.shape[0] == LABEL_LENGTH
    assert P.shape[1] == 12

    # evaluation report exists in both forms and they agree
    rep_txt = (tmp_path / "report" / "report.txt").read_text()
    rep = json.loads((tmp_path / "report" / "report.json").read_text())
    assert rep["n_samples"] == 12 and rep["folds"] == 2
    for method in ("s2vr", "svr"):
        assert method in rep_txt
        for mode in ("joint_angles_landmarks", "angles_only"):
            cell = rep["methods"][method][mode]
            assert np.isfinite(cell["angle_rrmse"])
            assert np.isfinite(cell["all_output_rrmse"])
            assert len(cell["angle_correlation"]) == 3
    joint = rep["methods"]["s2vr"]["joint_angles_landmarks"]
    assert "consistency_gap_median" in joint
    assert len(joint["consistency_gap_per_angle"]) == 3


def test_pipeline_deterministic_across_workdirs(tmp_path, capsys):
    blobs = {}
    for sub in ("one", "two"):
        wd = tmp_path / sub
        over = _tiny_overrides(wd)
        args = [x for s in over for x in ("--set", s)]
        for cmd in ("generate", "features", "align", "train", "predict", "evaluate"):
            rc = _run([cmd, *args])
            assert rc == 0, capsys.readouterr().err
            capsys.readouterr()
        blobs[sub] = {
            "annotations": (wd / "annotations.txt").read_bytes(),
            "features": (wd / "features.txt").read_bytes(),
            "alignment": (wd / "alignment.txt").read_bytes(),
            "model": (wd / "model.s2vr").read_bytes(),
            "predictions": (wd / "predictions.txt").read_bytes(),
            "report": (wd / "report" / "report.json").read_bytes(),
        }
    for key in blobs["one"]:
        assert blobs["one"][key] == blobs["two"][key], f"{key} differs across workdirs"
