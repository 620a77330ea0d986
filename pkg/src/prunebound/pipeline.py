"""Experiment stages: train -> prune -> sketch -> bounds -> report.

Every stage reads the previous stage's persisted artifacts and writes its
own, so each is individually re-runnable. All randomness flows from the
config seed, all JSON is written with sorted keys and no wall-clock
fields, so re-running a stage reproduces its artifacts byte for byte.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .bounds import BoundBudget, LayerSketchInfo, assemble_report
from .closedform import delta_moments, latala_gamma
from .config import config_hash
from .errors import NumericalFailure, ValidationFailure
from .linalg import spectral_norm
from .mnist import load_mnist_idx
from .model_io import load_model, save_model
from .models import Dataset, ModelStack, accuracy
from .pruning import DiscretizeParams, PruneParams, choose_rho, discretize, \
    estimate_psi, mbp_prune
from .rng import RngHandle
from .sketching import default_degree, draw_ensemble, sketch, sketch_dim
from .training import init_mlp, train
from .verify import run_all

MODEL_FILE = "model.bin"
PRUNED_FILE = "pruned.bin"
DISCRETIZED_FILE = "discretized.bin"
PRUNE_INFO = "prune_info.json"
SKETCH_INFO = "sketch_info.json"
REPORT_JSON = "report.json"
REPORT_CSV = "report.csv"
CHART_SVG = "bounds_chart.svg"
SWEEP_CSV = "sweep.csv"
SWEEP_SVG = "sweep.svg"


def _out(cfg: dict) -> Path:
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def load_dataset(cfg: dict, which: str = "train") -> Dataset:
    ds = cfg["dataset"]
    images = ds.get(f"{which}_images")
    labels = ds.get(f"{which}_labels")
    if not images or not labels:
        raise ValidationFailure(f"config is missing dataset.{which}_images / {which}_labels")
    for p in (images, labels):
        if not Path(p).exists():
            raise ValidationFailure(f"dataset file not found: {p}")
    return load_mnist_idx(images, labels, limit=ds.get(f"{which}_limit"))


def stage_train(cfg: dict) -> dict:
    """Train the configured MLP and persist the model plus metrics."""
    out = _out(cfg)
    data = load_dataset(cfg, "train")
    m = cfg["model"]
    t = cfg["training"]
    seed = int(cfg["seed"])
    model = init_mlp(data.samples.shape[1], m["hidden_dim"], m["depth"],
                     m["num_classes"], RngHandle(seed, 1))
    trained = train(model, data, t["epochs"], t["batch_size"], t["lr"],
                    RngHandle(seed, 2))
    save_model(trained, out / MODEL_FILE)
    metrics = {
        "config_hash": config_hash(cfg),
        "seed": seed,
        "n_train": len(data),
        "train_accuracy": accuracy(trained, data),
        "epochs": t["epochs"],
    }
    _write_json(out / "train_metrics.json", metrics)
    return {"model": str(out / MODEL_FILE), "metrics": str(out / "train_metrics.json")}


def auto_prune_strength(norms: list[float], psis: list[float], eps: list[float],
                        depth: int, safety: float, C: float = 1.0,
                        dims: list[tuple[int, int]] | None = None) -> float:
    """Largest d whose pruning term eps*Gamma(d) stays within safety *
    ||A||/L on every layer (Gamma is monotone increasing in d)."""

    def worst_ratio(d: float) -> float:
        ratios = []
        for (d1, d2), psi, e, a in zip(dims, psis, eps, norms):
            g = latala_gamma(d1, d2, delta_moments(d, psi), C).gamma
            ratios.append(e * g / (a / depth))
        return max(ratios)

    lo, hi = 1e-8, 1e6
    if worst_ratio(lo) > safety:
        raise NumericalFailure(
            "pruning error budget infeasible even at vanishing prune strength; "
            "raise the safety factor or lower eps")
    if worst_ratio(hi) <= safety:
        return hi
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if worst_ratio(mid) <= safety:
            lo = mid
        else:
            hi = mid
    return lo


def stage_prune(cfg: dict) -> dict:
    """Prune the trained model, pick feasible grids, persist both models."""
    out = _out(cfg)
    model_path = out / MODEL_FILE
    if not model_path.exists():
        raise ValidationFailure(f"run the train stage first: {model_path} missing")
    model = load_model(model_path)
    seed = int(cfg["seed"])
    depth = model.depth
    pcfg = cfg["prune"]
    bcfg = cfg["budget"]
    C = float(cfg["constants"]["latala_C"])

    psis = estimate_psi(model) if pcfg["psi"] == "auto" else \
        [float(pcfg["psi"])] * depth
    norms = [spectral_norm(layer.weights, max_iter=20000) for layer in model.layers]
    eps = [float(bcfg["eps"])] * depth
    dims = [layer.weights.shape for layer in model.layers]

    if pcfg["d"] == "auto":
        d = auto_prune_strength(norms, psis, eps, depth, float(pcfg["safety"]),
                                C=C, dims=dims)
    else:
        d = float(pcfg["d"])

    outcome = mbp_prune(model, PruneParams(d=d, psi=psis, seed=RngHandle(seed, 3)))
    gammas = [latala_gamma(d1, d2, delta_moments(d, psi), C).gamma
              for (d1, d2), psi in zip(dims, psis)]
    rhos = []
    for a, e, g, j in zip(norms, eps, gammas, outcome.nnz):
        rho = choose_rho(a, depth, e * g, j)
        rhos.append(min(rho, 0.5))  # the sketch-count bound needs rho < 1
    disc = discretize(outcome, DiscretizeParams(rho=tuple(rhos)))

    save_model(outcome.pruned, out / PRUNED_FILE)
    save_model(disc, out / DISCRETIZED_FILE)
    info = {
        "config_hash": config_hash(cfg),
        "seed": seed,
        "d": d,
        "psi": psis,
        "spectral_norms": norms,
        "gamma_l": gammas,
        "eps": eps,
        "lam": [float(bcfg["lam"])] * depth,
        "rho_l": rhos,
        "J_l": [int(v) for v in outcome.nnz],
        "j_r": [int(v) for v in outcome.max_col_nnz],
        "j_c": [int(v) for v in outcome.max_row_nnz],
    }
    _write_json(out / PRUNE_INFO, info)
    return {"pruned": str(out / PRUNED_FILE), "discretized": str(out / DISCRETIZED_FILE),
            "info": str(out / PRUNE_INFO)}


def stage_sketch(cfg: dict) -> dict:
    """Draw bipartite ensembles per layer and persist the dense sketches."""
    out = _out(cfg)
    info_path = out / PRUNE_INFO
    if not info_path.exists():
        raise ValidationFailure(f"run the prune stage first: {info_path} missing")
    info = json.loads(info_path.read_text())
    disc = load_model(out / DISCRETIZED_FILE)
    seed = int(cfg["seed"])
    c_m = float(cfg["sketch"]["c_m"])
    cfg_degree = cfg["sketch"]["degree"]

    layers = []
    for li, layer in enumerate(disc.layers):
        d1, d2 = layer.weights.shape
        p = max(d1, d2)
        j = max(info["j_r"][li], info["j_c"][li])
        m_formula = sketch_dim(j, d1, d2, p, c_m)
        m = min(m_formula, d1, d2)  # both ensembles need m <= their partition
        degree = min(int(cfg_degree) if cfg_degree else default_degree(p), m)
        h = RngHandle(seed, 4).child(li)
        A = draw_ensemble(m, d1, degree, h.child(0))
        B = draw_ensemble(m, d2, degree, h.child(1))
        pair = sketch(layer.weights, A, B)
        y_path = out / f"sketch_Y_{li:03d}.npy"
        np.save(y_path, pair.Y)
        layers.append({
            "layer": li, "d1": d1, "d2": d2, "p": p, "j": j,
            "m_formula": m_formula, "m": m, "param_count": m * m,
            "degree": degree, "Y_file": y_path.name,
        })
    payload = {"config_hash": config_hash(cfg), "seed": seed, "c_m": c_m,
               "layers": layers}
    _write_json(out / SKETCH_INFO, payload)
    return {"info": str(out / SKETCH_INFO)}


def stage_bounds(cfg: dict, methods: list[str] | None = None) -> dict:
    """Assemble the bound report (JSON + CSV + SVG chart)."""
    from .plots import save_bound_chart

    out = _out(cfg)
    for required in (PRUNE_INFO, SKETCH_INFO):
        if not (out / required).exists():
            raise ValidationFailure(f"run earlier stages first: {out / required} missing")
    model = load_model(out / MODEL_FILE)
    pruned = load_model(out / PRUNED_FILE)
    disc = load_model(out / DISCRETIZED_FILE)
    pinfo = json.loads((out / PRUNE_INFO).read_text())
    sinfo = json.loads((out / SKETCH_INFO).read_text())
    train_data = load_dataset(cfg, "train")
    test_data = None
    ds = cfg["dataset"]
    if ds.get("test_images") and ds.get("test_labels"):
        test_data = load_dataset(cfg, "test")

    bcfg = cfg["budget"]
    budget = BoundBudget.uniform(model.depth, eps=float(bcfg["eps"]),
                                 lam=float(bcfg["lam"]), delta=float(bcfg["delta"]),
                                 n=len(train_data), gamma=bcfg.get("gamma"))
    sketch_infos = [LayerSketchInfo(d1=l["d1"], d2=l["d2"], p=l["p"], j=l["j"],
                                    m=l["m"], param_count=l["param_count"])
                    for l in sinfo["layers"]]
    snapshot = {k: v for k, v in cfg.items() if k != "out_dir"}
    report = assemble_report(
        model, train_data, test_data, d=pinfo["d"], psis=pinfo["psi"],
        pruned_model=pruned, discretized=disc, Js=pinfo["J_l"],
        rhos=pinfo["rho_l"], sketch_infos=sketch_infos, budget=budget,
        config=snapshot, config_hash=config_hash(cfg), seed=int(cfg["seed"]),
        constants=cfg["constants"], spectral_norms=pinfo["spectral_norms"])

    if methods:
        keep = {_canonical_method(m) for m in methods}
        unknown = keep - set(report.log_methods)
        if unknown:
            raise ValidationFailure(f"unknown methods requested: {sorted(unknown)}")
        report.methods = {k: v for k, v in report.methods.items() if k in keep}
        report.log_methods = {k: v for k, v in report.log_methods.items() if k in keep}

    _write_json(out / REPORT_JSON, report.to_json_dict())
    _write_csv(out / REPORT_CSV, report.csv_rows(),
               ["method", "bound", "ln_bound", "probability", "config_hash"])
    save_bound_chart(report.log_methods, out / CHART_SVG, salt=report.config_hash)
    return {"report": str(out / REPORT_JSON), "csv": str(out / REPORT_CSV),
            "chart": str(out / CHART_SVG)}


_METHOD_ALIASES = {
    "sketch": "ours_sketch",
    "ours": "ours_sketch",
    "bartlett": "bartlett_2017",
    "neyshabur2015": "neyshabur_2015",
    "neyshabur2017": "neyshabur_2017",
    "covering": "covering_ntk",
}


def _canonical_method(name: str) -> str:
    key = name.strip().lower()
    return _METHOD_ALIASES.get(key, key)


def _write_csv(path: Path, rows: list[dict], fields: list[str]) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def run_chain(cfg: dict) -> dict:
    """train -> prune -> sketch -> bounds, returning the report payload."""
    stage_train(cfg)
    stage_prune(cfg)
    stage_sketch(cfg)
    stage_bounds(cfg)
    return json.loads((Path(cfg["out_dir"]) / REPORT_JSON).read_text())


def stage_report(cfg: dict) -> dict:
    """Re-render charts/CSV from an existing report; with sweep dims in the
    config, run the whole chain per hidden dimension and emit the sweep
    table and figure."""
    from .plots import save_bound_chart, save_sweep_chart

    out = _out(cfg)
    artifacts = {}
    sweep_dims = cfg.get("sweep_hidden_dims") or []
    if sweep_dims:
        series: dict[str, list[float]] = {}
        rows = []
        for dim in sweep_dims:
            sub = json.loads(json.dumps(cfg))
            sub["model"]["hidden_dim"] = int(dim)
            sub["out_dir"] = str(out / f"sweep_{dim}")
            sub["sweep_hidden_dims"] = []
            payload = run_chain(sub)
            row = {"hidden_dim": int(dim)}
            for name, val in sorted(payload["log_methods"].items()):
                row[f"ln_{name}"] = val
                series.setdefault(name, []).append(val)
            rows.append(row)
        fields = ["hidden_dim"] + [f"ln_{name}" for name in sorted(series)]
        _write_csv(out / SWEEP_CSV, rows, fields)
        save_sweep_chart([int(d) for d in sweep_dims], series, out / SWEEP_SVG,
                         salt=config_hash(cfg))
        artifacts["sweep_csv"] = str(out / SWEEP_CSV)
        artifacts["sweep_svg"] = str(out / SWEEP_SVG)

    report_path = out / REPORT_JSON
    if report_path.exists():
        payload = json.loads(report_path.read_text())
        save_bound_chart(payload["log_methods"], out / CHART_SVG,
                         salt=payload["config_hash"])
        artifacts["chart"] = str(out / CHART_SVG)
    elif not sweep_dims:
        raise ValidationFailure(
            f"nothing to report: no {REPORT_JSON} in {out} and no sweep configured")
    return artifacts


def stage_verify(cfg: dict) -> tuple[list, bool]:
    """Run every Monte Carlo verifier; returns (results, all_passed)."""
    out = _out(cfg)
    results = run_all(int(cfg["seed"]), trials=cfg.get("verify") or None)
    payload = {
        "config_hash": config_hash(cfg),
        "seed": int(cfg["seed"]),
        "checks": [
            {"name": r.name, "passed": r.passed, "expected": r.expected,
             "estimate": r.estimate, "z": r.z, "detail": r.detail}
            for r in results
        ],
    }
    _write_json(out / "verification.json", payload)
    return results, all(r.passed for r in results)
