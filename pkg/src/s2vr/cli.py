"""Command-line pipeline: generate | features | align | train | predict | evaluate.

Configuration comes from built-in defaults, optionally overridden by a JSON
config file, then by environment variables (paths only, S2VR_* names), then
by command-line flags; later sources win.  Every text artifact carries a
pipeline hash derived from the resolved configuration and the content
digests of the inputs the command read, so identical configs and inputs
produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import geometry, metrics
from .errors import FormatError, ParameterError, S2VRError, ShapeError
from .features import hog, hog_length, read_features, render, write_features
from .geometry import (
    LABEL_LENGTH,
    SpineShapeParams,
    format_float,
    generate_spine,
    read_annotations,
    write_annotations,
)
from .kernels import TargetKernel, align_weights, alignment, build_gaussian_bank, combine
from .model import (
    MODE_ANGLES,
    MODE_JOINT,
    FeatureScaler,
    fit_baseline_svr,
    fit_model,
    load_model,
    predict,
    save_model,
)
from .solver import TrainConfig

PREDICTION_MAGIC = "s2vr-predictions v1"
REPORT_MAGIC = "s2vr-report v1"
ALIGNMENT_MAGIC = "s2vr-alignment v1"
TRAINLOG_MAGIC = "s2vr-train-log v1"

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "mode": MODE_JOINT,
    "paths": {
        "workdir": "s2vr_run",
        "annotations": "",
        "images": "",
        "features": "",
        "model": "",
        "predictions": "",
        "report_dir": "",
        "log": "",
        "alignment": "",
    },
    "generate": {
        "n_samples": 200,
        "amp1": [3.0, 7.5],
        "amp2": [6.0, 12.0],
        "amp3": [0.0, 1.2],
        # phase windows keep the apex pair away from the spine ends so all
        # three angles vary smoothly with the latent shape; mirror flips the
        # whole curve left/right with probability 1/2
        "phase1": [1.0708, 2.0708],
        "phase2": [3.9, 4.9],
        "phase3": [0.5, 1.5],
        "mirror": True,
        "rot_jitter_deg": 0.4,
        "scale": [1.0, 1.0],
        "shift_h": [-1.5, 1.5],
        "shift_v": [-3.0, 3.0],
        "vertebra_width": 36.0,
        "vertebra_height": 12.0,
        "gap": 9.0,
    },
    "render": {"width": 96, "height": 384, "noise_level": 0.03},
    "hog": {"cell": 16, "block": 2, "bins": 9},
    "kernels": {"sigma_min": 0.1, "sigma_max": 1.0, "sigma_count": 10},
    "train": {
        "method": "s2vr",
        "tau": 10.0,
        "gamma": 1e-4,
        "lam": 1e-2,
        "epsilon": 0.0,
        "max_outer": 15,
        "max_irwls": 20,
        "max_s_iters": 20,
        "tol": 1e-5,
        "smoothing": 1e-8,
        "rho": "auto",
    },
    "evaluate": {"folds": 5, "methods": ["s2vr", "svr"]},
}

# environment overrides are restricted to filesystem locations
_ENV_PATH_KEYS = {
    "S2VR_WORKDIR": "workdir",
    "S2VR_ANNOTATIONS": "annotations",
    "S2VR_IMAGES": "images",
    "S2VR_FEATURES": "features",
    "S2VR_MODEL": "model",
    "S2VR_PREDICTIONS": "predictions",
    "S2VR_REPORT_DIR": "report_dir",
    "S2VR_LOG": "log",
    "S2VR_ALIGNMENT": "alignment",
}


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------


def _deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_set(expr: str) -> tuple[list[str], object]:
    if "=" not in expr:
        raise ParameterError(f"--set expects dotted.key=value, got {expr!r}")
    key, raw = expr.split("=", 1)
    try:
        val = json.loads(raw)
    except json.JSONDecodeError:
        val = raw
    return key.strip().split("."), val


def resolve_config(
    config_path: str | None,
    sets: list[str] | None = None,
    flag_paths: dict[str, str] | None = None,
    seed: int | None = None,
    mode: str | None = None,
    env: dict | None = None,
) -> dict:
    """Merge defaults, config file, environment paths, and flags (flags win)."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise FormatError("config file must hold a JSON object")
        cfg = _deep_merge(cfg, loaded)
    env = os.environ if env is None else env
    for var, key in _ENV_PATH_KEYS.items():
        if var in env and env[var]:
            cfg["paths"][key] = env[var]
    for expr in sets or []:
        keys, val = _parse_set(expr)
        node = cfg
        for k in keys[:-1]:
            node = node.setdefault(k, {})
        node[keys[-1]] = val
    for key, val in (flag_paths or {}).items():
        if val:
            cfg["paths"][key] = val
    if seed is not None:
        cfg["seed"] = seed
    if mode is not None:
        cfg["mode"] = mode
    if cfg["mode"] not in (MODE_JOINT, MODE_ANGLES):
        raise ParameterError(f"mode must be {MODE_JOINT!r} or {MODE_ANGLES!r}")
    return cfg


def resolved_paths(cfg: dict) -> dict[str, Path]:
    work = Path(cfg["paths"]["workdir"])
    defaults = {
        "annotations": work / "annotations.txt",
        "images": work / "images",
        "features": work / "features.txt",
        "model": work / "model.s2vr",
        "predictions": work / "predictions.txt",
        "report_dir": work / "report",
        "log": work / "train.log",
        "alignment": work / "alignment.txt",
    }
    out = {"workdir": work}
    for key, dflt in defaults.items():
        val = cfg["paths"].get(key, "")
        out[key] = Path(val) if val else dflt
    return out


def pipeline_hash(cfg: dict, input_files: list[Path]) -> str:
    """Digest of the resolved config plus the content of every input artifact.

    Filesystem locations are excluded so the same data and settings hash the
    same regardless of where the artifacts live.
    """
    h = hashlib.sha256()
    stripped = {k: v for k, v in cfg.items() if k != "paths"}
    h.update(json.dumps(stripped, sort_keys=True).encode())
    for p in input_files:
        h.update(str(p.name).encode())
        h.update(Path(p).read_bytes())
    return h.hexdigest()[:16]


def train_config_from(cfg: dict) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        tau=float(t["tau"]),
        gamma=float(t["gamma"]),
        lam=float(t["lam"]),
        epsilon=t["epsilon"] if isinstance(t["epsilon"], str) else float(t["epsilon"]),
        max_outer=int(t["max_outer"]),
        max_irwls=int(t["max_irwls"]),
        max_s_iters=int(t["max_s_iters"]),
        tol=float(t["tol"]),
        smoothing=float(t["smoothing"]),
    )


def bandwidths_from(cfg: dict) -> tuple[float, ...]:
    k = cfg["kernels"]
    return tuple(np.linspace(float(k["sigma_min"]), float(k["sigma_max"]), int(k["sigma_count"])))


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------


def cmd_generate(cfg: dict) -> dict:
    """Sample spines, write the annotation file and one PNG per sample."""
    from PIL import Image

    paths = resolved_paths(cfg)
    g = cfg["generate"]
    r = cfg["render"]
    n = int(g["n_samples"])
    if n < 0:
        raise ParameterError(f"n_samples must be >= 0, got {n}")
    seed = int(cfg["seed"])
    width, height = int(r["width"]), int(r["height"])
    paths["images"].mkdir(parents=True, exist_ok=True)
    paths["annotations"].parent.mkdir(parents=True, exist_ok=True)
    labels = np.empty((LABEL_LENGTH, n))
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        # steep tilt draws can collide vertebrae; redraw from the same
        # per-sample stream so the output stays a pure function of (seed, i)
        for attempt in range(100):
            phases = [
                rng.uniform(*g["phase1"]),
                rng.uniform(*g["phase2"]),
                rng.uniform(*g["phase3"]),
            ]
            if g.get("mirror", False) and rng.integers(2):
                phases = [p + math.pi for p in phases]
            params = SpineShapeParams(
                amplitudes=(
                    rng.uniform(*g["amp1"]),
                    rng.uniform(*g["amp2"]),
                    rng.uniform(*g["amp3"]),
                ),
                phases=tuple(phases),
                vertebra_width=float(g["vertebra_width"]),
                vertebra_height=float(g["vertebra_height"]),
                gap=float(g["gap"]),
                rot_jitter_deg=float(g["rot_jitter_deg"]),
                scale=rng.uniform(*g["scale"]),
                shift=(rng.uniform(*g["shift_h"]), rng.uniform(*g["shift_v"])),
                frame=(width, height),
                seed=int(rng.integers(2**31)),
            )
            try:
                ann = generate_spine(params)
                break
            except ParameterError:
                if attempt == 99:
                    raise
        labels[:, i] = ann.label_vector()
        img = render(ann, width, height, float(r["noise_level"]), seed=int(rng.integers(2**31)))
        pix = np.round(img.pixels * 255.0).astype(np.uint8)
        Image.fromarray(pix, mode="L").save(paths["images"] / f"sample_{i:05d}.png")
    phash = pipeline_hash(cfg, [])
    write_annotations(paths["annotations"], labels, pipeline=phash)
    return {"annotations": paths["annotations"], "images": paths["images"], "count": n}


def _load_images(images_dir: Path) -> tuple[np.ndarray, list[str]]:
    from PIL import Image

    files = sorted(p for p in images_dir.iterdir() if p.suffix == ".png")
    if not files:
        return np.empty((0, 0, 0)), []
    stack = []
    shape = None
    for p in files:
        arr = np.asarray(Image.open(p).convert("L"), dtype=float) / 255.0
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise ShapeError(f"image {p.name} has shape {arr.shape}, expected {shape}")
        stack.append(arr)
    return np.stack(stack), [p.name for p in files]


def cmd_features(cfg: dict) -> dict:
    """Extract one descriptor per rendered image into the feature file."""
    paths = resolved_paths(cfg)
    h = cfg["hog"]
    cell, block, bins = int(h["cell"]), int(h["block"]), int(h["bins"])
    images, names = _load_images(paths["images"])
    phash = pipeline_hash(cfg, sorted(paths["images"].glob("*.png")))
    if len(names) == 0:
        width, height = int(cfg["render"]["width"]), int(cfg["render"]["height"])
        d = hog_length(width, height, cell, block, bins)
        F = np.empty((d, 0))
    else:
        height, width = images.shape[1:]
        d = hog_length(width, height, cell, block, bins)
        F = np.empty((d, len(names)))
        for i in range(len(names)):
            F[:, i] = hog(images[i], cell, block, bins).vector
    meta = {
        "image": f"{width}x{height}",
        "cell": cell,
        "block": block,
        "bins": bins,
    }
    paths["features"].parent.mkdir(parents=True, exist_ok=True)
    write_features(paths["features"], F, meta=meta, pipeline=phash)
    return {"features": paths["features"], "count": F.shape[1], "length": d}


def _load_xy(cfg: dict, paths: dict) -> tuple[np.ndarray, np.ndarray, str]:
    X, _ = read_features(paths["features"])
    labels, _ = read_annotations(paths["annotations"])
    if X.shape[1] != labels.shape[1]:
        raise ShapeError(
            f"feature count {X.shape[1]} does not match annotation count {labels.shape[1]}"
        )
    mode = cfg["mode"]
    Y = labels if mode == MODE_JOINT else labels[-3:]
    phash = pipeline_hash(cfg, [paths["features"], paths["annotations"]])
    return X, Y, phash


def cmd_align(cfg: dict) -> dict:
    """Report per-bandwidth and combined kernel alignment against the label target."""
    paths = resolved_paths(cfg)
    X, Y, phash = _load_xy(cfg, paths)
    if X.shape[1] < 2:
        raise ShapeError("alignment inspection needs at least 2 samples")
    scaler = FeatureScaler.fit(X)
    Xs = scaler.transform(X)
    Yc = Y - Y.mean(axis=1, keepdims=True)
    bank = build_gaussian_bank(Xs, bandwidths_from(cfg))
    target = TargetKernel.from_labels(Yc)
    weights = align_weights(bank, target)
    cbank = bank.centered_copy()
    combined = alignment(combine(cbank, weights), target.matrix)
    lines = [
        f"# {ALIGNMENT_MAGIC}",
        f"# pipeline={phash}",
        f"# mode={cfg['mode']}",
    ]
    for sig, a, w in zip(bank.bandwidths, weights.per_kernel_alignment, weights.omega):
        lines.append(
            f"sigma={format_float(sig)} alignment={format_float(a)} omega={format_float(w)}"
        )
    lines.append(f"combined_alignment={format_float(combined)}")
    lines.append(f"omega_sum_sq={format_float(float(np.sum(weights.omega ** 2)))}")
    paths["alignment"].parent.mkdir(parents=True, exist_ok=True)
    paths["alignment"].write_text("\n".join(lines) + "\n", encoding="ascii")
    return {"alignment": paths["alignment"], "combined": combined}


def _fit_by_method(method: str, X, Y, tcfg, mode, bandwidths, rho):
    if method == "s2vr":
        return fit_model(X, Y, tcfg, mode=mode, bandwidths=bandwidths, rho=rho)
    if method == "svr":
        return fit_baseline_svr(X, Y, tcfg, mode=mode, bandwidths=bandwidths)
    raise ParameterError(f"unknown method {method!r}")


def cmd_train(cfg: dict) -> dict:
    """Fit one model on the full feature/annotation set and write it plus a log."""
    paths = resolved_paths(cfg)
    X, Y, phash = _load_xy(cfg, paths)
    tcfg = train_config_from(cfg)
    method = cfg["train"].get("method", "s2vr")
    with warnings.catch_warnings(record=True) as wlog:
        warnings.simplefilter("always")
        mdl = _fit_by_method(
            method, X, Y, tcfg, cfg["mode"], bandwidths_from(cfg), cfg["train"]["rho"]
        )
    paths["model"].parent.mkdir(parents=True, exist_ok=True)
    save_model(mdl, paths["model"])
    state = mdl.fit_state
    lines = [
        f"# {TRAINLOG_MAGIC}",
        f"# pipeline={phash}",
        f"mode={cfg['mode']}",
        f"method={method}",
        f"epsilon={format_float(mdl.config.epsilon)}",
        "omega=" + ",".join(format_float(w) for w in mdl.params.omega),
        f"omega_sum_sq={format_float(float(np.sum(mdl.params.omega ** 2)))}",
        f"support={mdl.n_support}",
    ]
    for k, v in enumerate(state.outer_trace):
        lines.append(f"outer {k + 1} objective {format_float(v)}")
    for k, v in enumerate(state.objective_trace):
        lines.append(f"trace {k} {format_float(v)}")
    lines.append(f"converged={str(state.converged).lower()}")
    for fl in state.flags:
        lines.append(f"flag={fl}")
    for w in wlog:
        lines.append(f"warning={w.message}")
    paths["log"].parent.mkdir(parents=True, exist_ok=True)
    paths["log"].write_text("\n".join(lines) + "\n", encoding="ascii")
    for w in wlog:
        print(f"warning: {w.message}", file=sys.stderr)
    return {"model": paths["model"], "log": paths["log"], "support": mdl.n_support}


def write_predictions(path, P: np.ndarray, mode: str, pipeline: str = "") -> None:
    P = np.asarray(P, dtype=float)
    lines = [
        f"# {PREDICTION_MAGIC}",
        f"# pipeline={pipeline}",
        f"# mode={mode}",
        f"# length={P.shape[0]}",
        f"# count={P.shape[1]}",
    ]
    for i in range(P.shape[1]):
        lines.append(",".join(format_float(x) for x in P[:, i]))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_predictions(path) -> tuple[np.ndarray, dict]:
    with open(path, "r", encoding="ascii") as fh:
        raw = fh.read().splitlines()
    header: dict[str, str] = {}
    rows = []
    tagged = False
    for line in raw:
        if line.startswith("#"):
            body = line[1:].strip()
            if body == PREDICTION_MAGIC:
                tagged = True
            elif "=" in body:
                k, v = body.split("=", 1)
                header[k.strip()] = v.strip()
            continue
        if line.strip():
            rows.append(np.array([float(t) for t in line.split(",")], dtype=float))
    if not tagged:
        raise FormatError(f"missing '{PREDICTION_MAGIC}' header")
    P = np.stack(rows, axis=1) if rows else np.empty((int(header.get("length", 0)), 0))
    return P, header


def cmd_predict(cfg: dict) -> dict:
    """Predict label vectors for every sample in the feature file."""
    paths = resolved_paths(cfg)
    X, _ = read_features(paths["features"])
    mdl = load_model(paths["model"])
    phash = pipeline_hash(cfg, [paths["features"], paths["model"]])
    P = predict(mdl, X)
    paths["predictions"].parent.mkdir(parents=True, exist_ok=True)
    write_predictions(paths["predictions"], P, mdl.mode, pipeline=phash)
    return {"predictions": paths["predictions"], "count": P.shape[1]}


def cmd_evaluate(cfg: dict) -> dict:
    """Cross-validated comparison of methods across both output modes.

    Writes a plain-text table and a JSON mirror.  Cells are the mean (over
    folds) of the average relative RMSE over the three angle outputs; the
    joint column additionally reports all-output RRMSE, pooled per-angle
    correlations, and the angle/landmark consistency gap.
    """
    paths = resolved_paths(cfg)
    X, _ = read_features(paths["features"])
    labels, _ = read_annotations(paths["annotations"])
    if X.shape[1] != labels.shape[1]:
        raise ShapeError(
            f"feature count {X.shape[1]} does not match annotation count {labels.shape[1]}"
        )
    n = X.shape[1]
    folds = int(cfg["evaluate"]["folds"])
    methods = list(cfg["evaluate"]["methods"])
    tcfg = train_config_from(cfg)
    bandwidths = bandwidths_from(cfg)
    rho = cfg["train"]["rho"]
    phash = pipeline_hash(cfg, [paths["features"], paths["annotations"]])
    splits = metrics.kfold_indices(n, folds, seed=int(cfg["seed"]))

    results: dict = {}
    for method in methods:
        results[method] = {}
        for mode in (MODE_ANGLES, MODE_JOINT):
            Yall = labels if mode == MODE_JOINT else labels[-3:]
            q = Yall.shape[0]
            angle_rrmse_folds = []
            all_rrmse_folds = []
            pooled_pred = np.zeros((q, n))
            pooled_truth = np.zeros((q, n))
            gaps = []
            for train_idx, test_idx in splits:
                mdl = _fit_by_method(
                    method, X[:, train_idx], Yall[:, train_idx], tcfg, mode, bandwidths, rho
                )
                rep = metrics.evaluate(
                    mdl, X[:, test_idx], Yall[:, test_idx], Yall[:, train_idx].mean(axis=1)
                )
                angle_rrmse_folds.append(float(rep.per_output_rrmse[-3:].mean()))
                all_rrmse_folds.append(rep.rrmse_mean)
                Yhat = predict(mdl, X[:, test_idx])
                pooled_pred[:, test_idx] = Yhat
                pooled_truth[:, test_idx] = Yall[:, test_idx]
                if mode == MODE_JOINT and q == LABEL_LENGTH:
                    for j in range(len(test_idx)):
                        gaps.append(geometry.consistency_gap(Yhat[:, j]))
            corr = [
                metrics.pearson(pooled_pred[i], pooled_truth[i]) for i in range(q - 3, q)
            ]
            cell: dict = {
                "angle_rrmse": float(np.mean(angle_rrmse_folds)),
                "all_output_rrmse": float(np.mean(all_rrmse_folds)),
                "angle_correlation": [float(c) for c in corr],
            }
            if gaps:
                gap_arr = np.stack(gaps, axis=1)
                cell["consistency_gap_median"] = float(np.median(gap_arr))
                cell["consistency_gap_per_angle"] = [
                    float(v) for v in np.median(gap_arr, axis=1)
                ]
            results[method][mode] = cell

    report = {
        "pipeline": phash,
        "n_samples": n,
        "folds": folds,
        "mode_columns": [MODE_ANGLES, MODE_JOINT],
        "methods": results,
    }
    rdir = paths["report_dir"]
    rdir.mkdir(parents=True, exist_ok=True)
    (rdir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )
    lines = [
        f"# {REPORT_MAGIC}",
        f"# pipeline={phash}",
        f"# samples={n} folds={folds}",
        "# cells: mean over folds of the average angle-output RRMSE (%)",
        f"{'method':<10}{'angles_only':>16}{'joint':>16}",
    ]
    for method in methods:
        a = results[method][MODE_ANGLES]["angle_rrmse"]
        j = results[method][MODE_JOINT]["angle_rrmse"]
        lines.append(f"{method:<10}{a:>16.4f}{j:>16.4f}")
    lines.append("")
    lines.append("# per-angle Pearson correlation (pooled out-of-fold), joint mode")
    for method in methods:
        c = results[method][MODE_JOINT]["angle_correlation"]
        lines.append(
            f"{method:<10}top={c[0]:.4f} main={c[1]:.4f} bottom={c[2]:.4f}"
        )
    for method in methods:
        cell = results[method][MODE_JOINT]
        if "consistency_gap_median" in cell:
            lines.append("")
            lines.append(
                f"# {method} joint consistency gap median (deg): "
                f"{cell['consistency_gap_median']:.4f}"
            )
    (rdir / "report.txt").write_text("\n".join(lines) + "\n", encoding="ascii")
    return {"report_dir": rdir, "report": report}


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="s2vr",
        description="Synthetic spine pipeline: structured multi-output kernel regression.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn in (
        ("generate", cmd_generate),
        ("features", cmd_features),
        ("align", cmd_align),
        ("train", cmd_train),
        ("predict", cmd_predict),
        ("evaluate", cmd_evaluate),
    ):
        p = sub.add_parser(name, help=fn.__doc__.splitlines()[0] if fn.__doc__ else None)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--mode", default=None, choices=[MODE_JOINT, MODE_ANGLES])
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override any config entry via dotted keys (JSON values)",
        )
        p.add_argument("--workdir", default=None)
        p.add_argument("--annotations", default=None)
        p.add_argument("--images", default=None)
        p.add_argument("--features", default=None)
        p.add_argument("--model", default=None)
        p.add_argument("--predictions", default=None)
        p.add_argument("--report-dir", dest="report_dir", default=None)
        p.add_argument("--log", default=None)
        p.add_argument("--alignment", default=None)
        p.set_defaults(fn=fn)
    return ap


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns 0 unless a hard error occurred."""
    args = _build_parser().parse_args(argv)
    flag_paths = {
        key: getattr(args, key)
        for key in (
            "workdir",
            "annotations",
            "images",
            "features",
            "model",
            "predictions",
            "report_dir",
            "log",
            "alignment",
        )
        if getattr(args, key)
    }
    try:
        cfg = resolve_config(
            args.config,
            sets=args.set,
            flag_paths=flag_paths,
            seed=args.seed,
            mode=args.mode,
        )
        out = args.fn(cfg)
    except (S2VRError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = {
        k: (str(v) if isinstance(v, Path) else v) for k, v in out.items() if k != "report"
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
