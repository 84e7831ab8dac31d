"""Run orchestration behind the CLI: train, compare, gradcheck and verify."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import activations, autoencoder, convergence, data, gradients, metrics, network, plotting
from . import problems
from . import topology as topo
from .config import RunConfig, dumps
from .errors import ConfigError, DimensionMismatch, TooLargeForFiniteDifference
from .training import TrainResult, train

log = logging.getLogger(__name__)

GRADCHECK_MAX_WEIGHTS = 10_000
GRADCHECK_TOLERANCE = 1e-6
NEAR_ZERO = 1e-8


@dataclass
class RunData:
    train_x: np.ndarray
    train_d: np.ndarray
    test_x: Optional[np.ndarray]
    image_shape: Optional[tuple[int, int]]


def load_topology(cfg: RunConfig) -> topo.DagTopology:
    return topo.load(cfg.topology_path)


def with_code_width(t: topo.DagTopology, code: int) -> topo.DagTopology:
    if t.code_layer is None:
        raise ConfigError("'codes' needs a topology with a code layer")
    widths = list(t.layer_widths)
    widths[t.code_layer] = code
    return topo.validate(widths, t.edges, t.code_layer)


def build_data(cfg: RunConfig, t: topo.DagTopology, seed: int) -> RunData:
    """Training inputs/targets and, for image datasets, held-out test images."""
    if cfg.dataset in ("vertex", "teacher"):
        make = problems.vertex_problem if cfg.dataset == "vertex" else problems.teacher_problem
        p = make(t, cfg.samples, cfg.data_seed)
        return RunData(p.inputs, p.targets, None, None)

    if cfg.dataset == "synthetic":
        full = data.synthetic_faces(
            cfg.train_count + cfg.test_count, cfg.image_rows, cfg.image_cols, cfg.data_seed
        )
    else:
        full = data.load_pgm_directory(cfg.resolve(cfg.dataset[len("pgm:"):]))
        if len(full) == 0:
            raise ConfigError(f"no PGM images found for {cfg.dataset!r}")
    if full.samples.shape[1] != t.layer_widths[0] or t.layer_widths[-1] != t.layer_widths[0]:
        raise DimensionMismatch(
            f"images have {full.samples.shape[1]} pixels; topology maps "
            f"{t.layer_widths[0]} -> {t.layer_widths[-1]}"
        )
    tr, te = data.split(full, cfg.train_count, seed)
    test = te.samples[: cfg.test_count] if len(te) else None
    return RunData(tr.samples, tr.samples, test, full.image_shape)


def _activation(cfg: RunConfig, unchecked: bool = False) -> activations.Activation:
    return activations.get(cfg.activation, unchecked=unchecked)


def _fit(cfg: RunConfig, t: topo.DagTopology, rd: RunData, seed: int) -> TrainResult:
    act = _activation(cfg)
    w0 = network.init_weights(t, np.random.default_rng(seed), cfg.init_scale)
    check_cut = t.code_layer is not None

    def on_step(k, w):
        if check_cut:
            autoencoder.assert_cut_respected(t, w)

    return train(
        t,
        w0,
        act,
        rd.train_x,
        rd.train_d,
        cfg.eta,
        cfg.s,
        cfg.iterations,
        tail_threshold=cfg.tail_threshold if cfg.early_stop else None,
        tail_window=cfg.tail_window,
        optimizer=cfg.optimizer,
        beta=cfg.momentum,
        on_step=on_step,
    )


def test_metrics(originals: np.ndarray, recon: np.ndarray, shape: tuple[int, int]) -> dict[str, float]:
    """Per-image PSNR / SSIM / NRMSE averaged over the test set."""
    per = [metrics.image_metrics(a.reshape(shape), b.reshape(shape)) for a, b in zip(originals, recon)]
    return {k: float(np.mean([m[k] for m in per])) for k in ("psnr", "ssim", "nrmse")}


def verdict_exit_code(v: Optional[convergence.ConvergenceVerdict], result: TrainResult) -> int:
    """0 when descent was monotone and every per-step inequality held, else 3."""
    if v is None:
        return 0
    ok = (
        v.monotone_descent
        and v.descent_inequality_violations == 0
        and not result.lemma2_violations
    )
    return 0 if ok else 3


@dataclass
class TrainOutcome:
    result: TrainResult
    verdict: Optional[convergence.ConvergenceVerdict]
    report: dict
    exit_code: int
    output_dir: Path


def run_train(cfg: RunConfig, dump_gradients: bool = False) -> TrainOutcome:
    """Train once and write model, trajectory, verdict and figures to ``output_dir``.

    Validation happens before the output directory is created, so a bad
    topology or config leaves nothing behind.
    """
    t = load_topology(cfg)
    act = _activation(cfg)
    rd = build_data(cfg, t, cfg.seed)
    chash = cfg.fingerprint()
    out = Path(cfg.output_dir)

    result = _fit(cfg, t, rd, cfg.seed)
    out.mkdir(parents=True, exist_ok=True)

    verdict = None
    if cfg.optimizer == "adaptive":
        verdict = convergence.verify_theorem1(
            result.records,
            cfg.eta,
            cfg.s,
            C_used=cfg.C,
            tail_threshold=cfg.tail_threshold,
            tail_window=cfg.tail_window,
        )
    header = {"config_hash": chash, "eta": repr(cfg.eta), "s": repr(cfg.s), "optimizer": cfg.optimizer}
    convergence.write_trajectory_csv(out / "trajectory.csv", result.records, header)
    network.save_weights(out / "model.npz", t, result.weights, kind=f"model config_hash={chash}")
    (out / "config.txt").write_text(f"# config_hash={chash}\n" + dumps(cfg))

    report: dict = {
        "config_hash": chash,
        "optimizer": cfg.optimizer,
        "iterations_run": len(result.records),
        "stopped_early": result.stopped_early,
        "final_error": result.final_error,
        "lemma2_increment_violations": len(result.lemma2_violations),
        "descent_inequality_violations_online": len(result.descent_violations),
    }
    if verdict is not None:
        report["verdict"] = verdict.summary()
    else:
        report["verdict"] = None
        report["note"] = "fixed-momentum baseline: outside the convergence guarantee, no verdict"

    if rd.test_x is not None and rd.image_shape is not None:
        recon = network.predict(t, result.weights, act, rd.test_x)
        report["test_metrics"] = test_metrics(rd.test_x, recon, rd.image_shape)
        plotting.plot_reconstructions(
            rd.test_x, {cfg.activation: recon}, rd.image_shape, out / "reconstructions.png", config_hash=chash
        )
    if dump_gradients:
        g = gradients.gradients(t, result.weights, act, rd.train_x, rd.train_d)
        network.save_weights(out / "gradients.npz", t, g.q, kind=f"gradients config_hash={chash}")

    plotting.plot_training(result.records, out / "training.png", verdict, config_hash=chash)
    code = verdict_exit_code(verdict, result)
    report["exit_code"] = code
    (out / "verdict.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return TrainOutcome(result, verdict, report, code, out)


COMPARE_COLUMNS = ("model", "code", "seed", "psnr", "ssim", "nrmse", "final_error")


def _fmt4(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.4f}"
    return str(v)


def run_compare(
    cfg_cross: RunConfig,
    cfg_seq: Optional[RunConfig] = None,
    labels: tuple[str, str] = ("CrossEncoder", "Autoencoder"),
    write: bool = True,
) -> list[dict]:
    """Train both models for every (code, seed) cell and tabulate test metrics.

    Without ``cfg_seq`` the second model is the sequential counterpart of the
    first. Both slots share data, seeds and budget.
    """
    cross_t = load_topology(cfg_cross)
    if cfg_seq is None:
        cfg_seq = cfg_cross
        seq_t = topo.sequential_counterpart(cross_t)
    else:
        seq_t = load_topology(cfg_seq)
        for key in ("dataset", "iterations", "seed", "seeds", "codes", "data_seed", "train_count", "test_count"):
            if getattr(cfg_cross, key) != getattr(cfg_seq, key):
                raise ConfigError(f"compared configs differ in {key!r}")
    if cross_t.code_layer is None:
        raise ConfigError("compare needs autoencoder topologies (with a code layer)")
    codes = cfg_cross.codes or [cross_t.layer_widths[cross_t.code_layer]]
    seeds = cfg_cross.seeds or [cfg_cross.seed]

    rows: list[dict] = []
    recon_examples: dict[str, np.ndarray] = {}
    shape = None
    test_ref = None
    for code in codes:
        for seed in seeds:
            for label, cfg, base in ((labels[0], cfg_cross, cross_t), (labels[1], cfg_seq, seq_t)):
                t = with_code_width(base, code)
                rd = build_data(cfg, t, seed)
                if rd.test_x is None:
                    raise ConfigError("compare needs an image dataset with a test split")
                res = _fit(cfg, t, rd, seed)
                recon = network.predict(t, res.weights, _activation(cfg), rd.test_x)
                m = test_metrics(rd.test_x, recon, rd.image_shape)
                E = [r.E for r in res.records]
                rows.append(
                    {
                        "model": label,
                        "code": code,
                        "seed": seed,
                        **m,
                        "final_error": res.final_error,
                        "monotone": all(b <= a + convergence.MONOTONE_SLACK for a, b in zip(E, E[1:])),
                        "lemma2_violations": len(res.lemma2_violations),
                        "descent_violations": len(res.descent_violations),
                    }
                )
                log.info("%s code=%d seed=%d psnr=%.4f", label, code, seed, m["psnr"])
                if seed == seeds[0] and code == codes[-1]:
                    recon_examples[f"{label} 1x{code}"] = recon
                    shape, test_ref = rd.image_shape, rd.test_x

    if write:
        out = Path(cfg_cross.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        chash = cfg_cross.fingerprint()
        write_comparison_csv(out / "comparison.csv", rows, chash)
        plotting.plot_comparison(rows, out / "comparison.png", config_hash=chash)
        if shape is not None:
            plotting.plot_reconstructions(test_ref, recon_examples, shape, out / "reconstructions.png", config_hash=chash)
    return rows


def write_comparison_csv(path: Path, rows: list[dict], config_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARE_COLUMNS)
        for r in rows:
            writer.writerow([_fmt4(r[c]) for c in COMPARE_COLUMNS])
        for model in dict.fromkeys(r["model"] for r in rows):
            for code in dict.fromkeys(r["code"] for r in rows):
                cell = [r for r in rows if r["model"] == model and r["code"] == code]
                means = {k: float(np.mean([r[k] for r in cell])) for k in ("psnr", "ssim", "nrmse", "final_error")}
                writer.writerow([model, code, "mean"] + [_fmt4(means[k]) for k in COMPARE_COLUMNS[3:]])


def format_table(rows: list[dict], labels: tuple[str, str] = ("CrossEncoder", "Autoencoder")) -> str:
    """Seed-averaged metrics, one line per code, laid out model by model."""
    head = f"{'Code':>8} | " + " | ".join(f"{lab:^30}" for lab in labels)
    sub = f"{'':>8} | " + " | ".join(f"{'PSNR':>9} {'SSIM':>9} {'NRMSE':>9} " for _ in labels)
    lines = [head, sub, "-" * len(sub)]
    for code in dict.fromkeys(r["code"] for r in rows):
        cells = []
        for lab in labels:
            sel = [r for r in rows if r["model"] == lab and r["code"] == code]
            cells.append(" ".join(f"{_fmt4(float(np.mean([r[k] for r in sel]))):>9}" for k in ("psnr", "ssim", "nrmse")) + " ")
        lines.append(f"{'1x' + str(code):>8} | " + " | ".join(cells))
    return "\n".join(lines)


def run_gradcheck(cfg: RunConfig, unchecked: bool = False, h: float = 1e-6) -> dict:
    """Compare adjoint gradients to central differences at the initial weights."""
    t = load_topology(cfg)
    if t.n_weights > GRADCHECK_MAX_WEIGHTS:
        raise TooLargeForFiniteDifference(
            f"{t.n_weights} weights exceed the finite-difference limit of {GRADCHECK_MAX_WEIGHTS}"
        )
    act = _activation(cfg, unchecked=unchecked)
    rd = build_data(cfg, t, cfg.seed)
    x, d = rd.train_x[: cfg.samples], rd.train_d[: cfg.samples]
    w = network.init_weights(t, np.random.default_rng(cfg.seed), cfg.init_scale)
    exact = gradients.gradients(t, w, act, x, d)
    approx = gradients.finite_difference_gradients(t, w, act, x, d, h)
    max_abs = max(float(np.max(np.abs(exact.q[e] - approx.q[e]))) for e in t.edges)
    scale = max(float(np.max(np.abs(m))) for m in exact.q.values())
    near_zero = scale < NEAR_ZERO
    rel = gradients.max_relative_error(exact, approx)
    passed = max_abs < 1e-10 if near_zero else rel < GRADCHECK_TOLERANCE
    return {
        "n_weights": t.n_weights,
        "samples": int(x.shape[0]),
        "h": h,
        "max_relative_error": rel,
        "max_absolute_error": max_abs,
        "max_abs_gradient": scale,
        "near_zero_mode": near_zero,
        "passed": passed,
    }


def run_verify(
    csv_path: str | Path,
    eta: Optional[float] = None,
    s: Optional[float] = None,
    C: Optional[float] = None,
    tail_threshold: float = convergence.DEFAULT_TAIL_THRESHOLD,
    tail_window: int = convergence.DEFAULT_TAIL_WINDOW,
) -> convergence.ConvergenceVerdict:
    records, header = convergence.read_trajectory_csv(csv_path)
    try:
        eta = float(header["eta"]) if eta is None else eta
        s = float(header["s"]) if s is None else s
    except KeyError as exc:
        raise ConfigError(f"trajectory header lacks {exc.args[0]!r}; pass it explicitly") from None
    return convergence.verify_theorem1(records, eta, s, C, tail_threshold, tail_window)
