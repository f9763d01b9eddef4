"""Acceptance gate: ten criteria, each recorded as a PASS/FAIL summary line.

Criteria 3, 8 and 9 run on the desk-scale dataset (500 + 100 structures at
64^2), which the session-scoped fixture builds once.  Criterion 10 reruns
a reduced-scale pipeline twice and byte-compares every CSV artifact.
"""

import csv
import filecmp
import os
import time

import numpy as np
import pytest

from conftest import random_admissible, random_bounds, record_acceptance
from test_surrogate import fd_gradient_worst_rel
from vrnet import dataset as ds
from vrnet.bounds import audit_bounds, bounds_from_matrices
from vrnet.cli import main
from vrnet.homsolve import ConductionProblem, solve_effective
from vrnet.microgen import make_checkerboard, make_laminate, rng_from_seed
from vrnet.specnorm import denormalize, normalize, rel_frob_error
from vrnet.surrogate import (
    NetConfig,
    TrainConfig,
    default_hidden,
    evaluate,
    init_params,
    train,
    vr_predict,
)

_SERIAL = 1.0 / 0.505  # half/half series combination of 1 and 100
_PARALLEL = 50.5


def test_acceptance_1_laminate_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for axis in (0, 1):
        g = make_laminate((128, 128), axis, 0.5)
        res = solve_effective(ConductionProblem(g, 1.0, 100.0), tol=1e-8)
        k = res.kappa_eff
        for i in range(2):
            expect = _SERIAL if i == axis else _PARALLEL
            worst = max(worst, abs(k[i, i] - expect) / expect)
        worst = max(worst, abs(k[0, 1]) / _PARALLEL)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-6 and dt <= 10.0
    record_acceptance(1, ok, f"laminate rel error {worst:.2e} at 128^2 in {dt:.1f}s")
    assert ok


def test_acceptance_2_checkerboard_oracle():
    t0 = time.perf_counter()
    rels = {}
    for res_n, gate in ((128, 0.01), (256, 0.005)):
        g = make_checkerboard((res_n, res_n))
        k = solve_effective(ConductionProblem(g, 1.0, 100.0), tol=1e-8).kappa_eff
        rels[res_n] = float(np.linalg.norm(k - 10.0 * np.eye(2)) / np.linalg.norm(10.0 * np.eye(2)))
    dt = time.perf_counter() - t0
    ok = rels[128] <= 0.01 and rels[256] <= 0.005 and dt <= 60.0
    record_acceptance(
        2, ok, f"rel error {rels[128]:.2e} at 128^2, {rels[256]:.2e} at 256^2 in {dt:.1f}s"
    )
    assert ok


def test_acceptance_3_bound_audit(desk_dataset):
    data_dir, man = desk_dataset
    rows = ds.read_targets_csv(os.path.join(data_dir, "targets_train.csv"))
    checked = 0
    violations = 0
    for rec in rows:
        b = bounds_from_matrices(rec.y_voigt, rec.y_reuss)
        if not audit_bounds(rec.kappa, b, tol=1e-8):
            violations += 1
        checked += 1
    enough = len(man.train_ids) >= 500 and checked >= 500 * 12
    ok = enough and violations == 0 and man.complete
    record_acceptance(
        3, ok,
        f"{checked} samples ({len(man.train_ids)} structures x 12 contrasts), "
        f"{violations} violations at 1e-8",
    )
    assert ok


def test_acceptance_4_structural_guarantee():
    t0 = time.perf_counter()
    rng = rng_from_seed(77)
    n = 0
    violations = 0
    for m, base in ((2, 100), (3, 200)):
        for s in range(50):
            cfg = NetConfig(input_dim=7, hidden=(8,), head="vr", m=m, seed=base + s)
            params = init_params(cfg)
            if s % 2:
                # saturate the head to probe the extreme corners of [0, 1]
                params.W[-1] = params.W[-1] * 10.0
            for _ in range(100):
                x = rng.normal(scale=3.0, size=7)
                yv, yr = random_bounds(rng, m)
                if n % 7 == 0:
                    yv = yr + (yv - yr) * 1e-4  # nearly coincident bounds
                b = bounds_from_matrices(yv, yr)
                y = vr_predict(params, cfg, x, b)
                if not audit_bounds(y, b, tol=1e-8):
                    violations += 1
                n += 1
    dt = time.perf_counter() - t0
    ok = n == 10_000 and violations == 0 and dt <= 10.0
    record_acceptance(4, ok, f"{n} untrained predictions, {violations} violations in {dt:.1f}s")
    assert ok


def test_acceptance_5_roundtrip():
    worst = 0.0
    for m in (2, 3, 6):
        rng = rng_from_seed(500 + m)
        for _ in range(1000):
            yv, yr = random_bounds(rng, m)
            b = bounds_from_matrices(yv, yr)
            y = random_admissible(rng, b)
            y2 = denormalize(normalize(y, b).y_tilde, b)
            worst = max(worst, rel_frob_error(y, y2))
    ok = worst <= 1e-10
    record_acceptance(5, ok, f"worst round-trip error {worst:.2e} over 3x1000 tensors")
    assert ok


def test_acceptance_6_gradient_check():
    worst = 0.0
    total = 0
    for head, m, seed in (("vr", 2, 61), ("vr", 3, 62), ("vanilla", 2, 63)):
        cfg = NetConfig(input_dim=6, hidden=(16, 8), head=head, m=m, seed=seed)
        w, n = fd_gradient_worst_rel(cfg, seed=seed, n_coords=50, h=1e-5)
        worst = max(worst, w)
        total += n
    ok = worst < 1e-5 and total >= 50
    record_acceptance(6, ok, f"worst FD mismatch {worst:.2e} over {total} coordinates, both heads")
    assert ok


def test_acceptance_7_dof_accounting():
    cfg2 = NetConfig(input_dim=19, hidden=(8,), head="vr", m=2)
    cfg3 = NetConfig(input_dim=27, hidden=(8,), head="vr", m=3)
    ok = (
        cfg2.out_dim == 3 and cfg2.n_rot == 1 and cfg2.out_dim - cfg2.n_rot == 2
        and cfg3.out_dim == 6 and cfg3.n_rot == 3 and cfg3.out_dim - cfg3.n_rot == 3
    )
    record_acceptance(7, ok, "output dims 3 (2D) and 6 (3D), splits (1,2) and (3,3)")
    assert ok


@pytest.fixture(scope="module")
def desk_heads(desk_dataset):
    """Both heads trained on the full desk training set with identical trunks."""
    data_dir, man = desk_dataset
    samples = ds.load_eval_samples(data_dir, "val")
    out = {}
    t0 = time.perf_counter()
    for head in ("vr", "vanilla"):
        arrays = ds.load_training_arrays(data_dir, head, 2)
        (x_tr, t_tr), (x_va, t_va) = arrays["train"], arrays["val"]
        cfg = NetConfig(input_dim=x_tr.shape[1], hidden=default_hidden(2), head=head, m=2, seed=0)
        params, hist = train(cfg, TrainConfig(seed=0), x_tr, t_tr, x_va, t_va)
        out[head] = (cfg, params, hist, evaluate(params, cfg, samples, head=head))
    out["elapsed"] = time.perf_counter() - t0
    return data_dir, samples, out


def test_acceptance_8_desk_training(desk_heads):
    data_dir, samples, heads = desk_heads
    _, _, hist_vr, rep_vr = heads["vr"]
    _, _, _, rep_van = heads["vanilla"]
    vr_med = rep_vr.overall["rel_median"]
    van_med = rep_van.overall["rel_median"]
    val_curve = np.array(hist_vr["val_loss"])
    curve_ok = val_curve[-1] <= 2.0 * val_curve.min()
    dt = heads["elapsed"]
    ok = (
        len(hist_vr["epoch"]) >= 200
        and vr_med <= van_med
        and rep_vr.overall["violations"] == 0
        and rep_van.overall["violations"] >= 0
        and curve_ok
        and dt <= 7200.0
    )
    factor = van_med / max(vr_med, 1e-300)
    record_acceptance(
        8, ok,
        f"VR median {vr_med:.4g} vs vanilla {van_med:.4g} (factor {factor:.2f}, reported), "
        f"violations VR={rep_vr.overall['violations']} vanilla={rep_van.overall['violations']}, "
        f"final/min val loss {val_curve[-1] / val_curve.min():.2f}, {dt / 60:.1f} min",
    )
    assert ok


def test_acceptance_9_data_scarcity(desk_dataset, desk_heads):
    data_dir, man = desk_dataset
    _, samples, heads = desk_heads
    n_full = len(man.train_ids) * len(man.contrasts_train)
    sub_a = ds.scenario_subset(man, "A", seed=0)
    sub_b = ds.scenario_subset(man, "B", seed=0)
    counts_ok = (
        len(sub_a) == 400 and len(sub_b) == 60
        and abs(len(sub_a) / n_full - 0.0667) < 5e-4
        and len(sub_b) / n_full == 0.01
    )
    results = {"O": heads["vr"][3].overall}
    for scen in ("A", "B"):
        arrays = ds.load_training_arrays(data_dir, "vr", 2, scenario=scen, scenario_seed=0)
        (x_tr, t_tr), (x_va, t_va) = arrays["train"], arrays["val"]
        cfg = NetConfig(input_dim=x_tr.shape[1], hidden=default_hidden(2), head="vr", m=2, seed=0)
        params, _ = train(cfg, TrainConfig(seed=0), x_tr, t_tr, x_va, t_va)
        results[scen] = evaluate(params, cfg, samples, head="vr").overall
    table = os.path.join(data_dir, "scenario_comparison.csv")
    with open(table, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "n_train", "rel_median", "violations"])
        for scen, n_rows in (("O", n_full), ("A", len(sub_a)), ("B", len(sub_b))):
            o = results[scen]
            w.writerow([scen, n_rows, "%.17g" % o["rel_median"], o["violations"]])
    order = "B<=A" if results["B"]["rel_median"] <= results["A"]["rel_median"] else "A<B"
    ok = counts_ok and os.path.getsize(table) > 0
    record_acceptance(
        9, ok,
        f"fractions {len(sub_a) / n_full:.4f}/{len(sub_b) / n_full:.4f}, medians "
        f"A={results['A']['rel_median']:.4g} B={results['B']['rel_median']:.4g} "
        f"(observed ordering {order}, reported; table -> scenario_comparison.csv)",
    )
    assert ok


def _reduced_pipeline(root):
    data = os.path.join(root, "ds")
    assert main(["gen", "--out", data, "--res", "32", "--n-train", "6", "--n-val", "2",
                 "--seed", "11"]) == 0
    assert main(["solve", "--data", data]) == 0
    assert main(["featurize", "--data", data]) == 0
    assert main(["train", "--data", data, "--head", "vr", "--epochs", "40", "--batch", "256",
                 "--hidden", "16,8", "--seed", "5"]) == 0
    assert main(["eval", "--data", data, "--head", "vr"]) == 0
    grid = os.path.join(data, "grids", "tr0000.vrvg")
    assert main(["solve", "--grid", grid, "--contrasts", "2.0,50.0",
                 "--out", os.path.join(data, "single.csv")]) == 0
    return data


def test_acceptance_10_determinism(tmp_path):
    a = _reduced_pipeline(str(tmp_path / "a"))
    b = _reduced_pipeline(str(tmp_path / "b"))
    artifacts = [
        "manifest.json", "targets_train.csv", "targets_val.csv", "features.csv",
        "history_vr.csv", "model_vr.vrck", "eval_vr_metrics.csv", "eval_vr_r2.csv",
        "eval_vr_ecdf.csv", "eval_vr_eigen.csv", "single.csv",
    ]
    differing = [
        f for f in artifacts
        if not filecmp.cmp(os.path.join(a, f), os.path.join(b, f), shallow=False)
    ]
    ok = not differing
    record_acceptance(
        10, ok,
        "all 11 artifacts byte-identical across reruns" if ok
        else f"differing artifacts: {differing}",
    )
    assert ok
