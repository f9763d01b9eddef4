"""Persistence and dataset assembly.

File formats (all little-endian, all documented in the README):

* grids: magic "VRVG", u16 version, u8 dim, u32 extents, then the
  occupancy bit-packed row-major (numpy packbits order, most significant
  bit first), padded to a byte boundary;
* tables: UTF-8 CSV, floats printed with %.17g so that a load/save
  round-trip is bit-exact;
* manifest: JSON, schema-versioned;
* checkpoints: see :mod:`vrnet.surrogate`.

Targets are audited against their stored bounds at load time; a violating
row is a corrupted or foreign file and raises BoundViolation.
"""

import csv
import json
import os
import struct
from dataclasses import dataclass, asdict

import numpy as np

from .bounds import (
    bounds_from_matrices,
    reuss_bound,
    two_phase_isotropic,
    voigt_bound,
)
from .errors import (
    BoundViolation,
    CorruptFile,
    GenerationIncomplete,
    InvalidInput,
    UnsupportedSchema,
)
from .features import (
    SCHEMA_ID,
    FeatureVector,
    assemble_input,
    extract_features,
    feature_length,
)
from .homsolve import contrast_sweep
from .microgen import GenSpec, VoxelGrid, generate_rsa, volume_fraction, rng_from_seed
from .spdcore import loewner_leq, sym_pack, sym_unpack

__all__ = [
    "GRID_MAGIC",
    "save_grid",
    "load_grid",
    "SampleRecord",
    "write_targets_csv",
    "read_targets_csv",
    "write_features_csv",
    "read_features_csv",
    "write_history_csv",
    "write_metrics_csv",
    "write_r2_csv",
    "write_ecdf_csv",
    "write_eigen_csv",
    "Manifest",
    "save_manifest",
    "load_manifest",
    "generate_structures",
    "featurize_dataset",
    "solve_dataset",
    "build_dataset",
    "scenario_subset",
    "structure_seed",
    "load_eval_samples",
    "load_training_arrays",
    "TRAIN_CONTRASTS",
    "VAL_CONTRASTS",
    "SCENARIO_A_CONTRASTS",
]

GRID_MAGIC = b"VRVG"
GRID_VERSION = 1
MANIFEST_SCHEMA = 1

# the 12 training contrasts and the 20-value validation sweep
TRAIN_CONTRASTS = (
    1 / 100, 1 / 50, 1 / 20, 1 / 10, 1 / 5, 1 / 2,
    2.0, 5.0, 10.0, 20.0, 50.0, 100.0,
)
VAL_CONTRASTS = (
    1 / 100, 1 / 75, 1 / 50, 1 / 30, 1 / 20, 1 / 10, 1 / 7, 1 / 5, 1 / 3, 1 / 2,
    2.0, 3.0, 5.0, 7.0, 10.0, 20.0, 30.0, 50.0, 75.0, 100.0,
)
SCENARIO_A_CONTRASTS = (1 / 100, 1 / 5, 5.0, 100.0)

_F = "%.17g"


def save_grid(path, g: VoxelGrid):
    cells = g.cells
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(struct.pack("<HB", GRID_VERSION, cells.ndim))
        for n in cells.shape:
            fh.write(struct.pack("<I", n))
        fh.write(np.packbits(cells.reshape(-1)).tobytes())


def load_grid(path) -> VoxelGrid:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 7 or data[:4] != GRID_MAGIC:
        raise CorruptFile(f"{path}: not a grid file")
    version, dim = struct.unpack("<HB", data[4:7])
    if version != GRID_VERSION:
        raise UnsupportedSchema(f"{path}: grid version {version}")
    if dim not in (2, 3) or len(data) < 7 + 4 * dim:
        raise CorruptFile(f"{path}: bad header")
    shape = struct.unpack("<" + "I" * dim, data[7 : 7 + 4 * dim])
    total = int(np.prod(shape))
    payload = data[7 + 4 * dim :]
    if len(payload) != (total + 7) // 8:
        raise CorruptFile(f"{path}: payload is {len(payload)} bytes, expected {(total + 7) // 8}")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=total)
    return VoxelGrid(bits.reshape(shape))


@dataclass(frozen=True)
class SampleRecord:
    """One (microstructure, contrast) row of a targets table."""

    id: str
    contrast: float
    kappa: np.ndarray
    y_voigt: np.ndarray
    y_reuss: np.ndarray
    residual: float


def _sym_headers(prefix, m):
    iu = np.triu_indices(m)
    return [f"{prefix}{i}{j}" for i, j in zip(*iu)]


def write_targets_csv(path, records):
    if not records:
        raise InvalidInput("no records to write")
    m = records[0].kappa.shape[0]
    header = (
        ["id", "R"]
        + _sym_headers("k", m)
        + _sym_headers("v", m)
        + _sym_headers("r", m)
        + ["residual"]
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for rec in records:
            row = [rec.id, _F % rec.contrast]
            row += [_F % x for x in sym_pack(rec.kappa)]
            row += [_F % x for x in sym_pack(rec.y_voigt)]
            row += [_F % x for x in sym_pack(rec.y_reuss)]
            row.append(_F % rec.residual)
            w.writerow(row)


def read_targets_csv(path, audit_tol=1e-8):
    """Load a targets table, auditing every row against its bounds."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CorruptFile(f"{path}: empty table")
    header = rows[0]
    n_sym = (len(header) - 3) // 3
    m = int((np.sqrt(8 * n_sym + 1) - 1) / 2)
    if m * (m + 1) // 2 != n_sym or len(header) != 3 + 3 * n_sym:
        raise CorruptFile(f"{path}: unexpected column count {len(header)}")
    out = []
    for row in rows[1:]:
        if len(row) != len(header):
            raise CorruptFile(f"{path}: ragged row for id {row[0] if row else '?'}")
        vals = [float(x) for x in row[1:]]
        rec = SampleRecord(
            id=row[0],
            contrast=vals[0],
            kappa=sym_unpack(vals[1 : 1 + n_sym], m),
            y_voigt=sym_unpack(vals[1 + n_sym : 1 + 2 * n_sym], m),
            y_reuss=sym_unpack(vals[1 + 2 * n_sym : 1 + 3 * n_sym], m),
            residual=vals[-1],
        )
        if not (
            loewner_leq(rec.y_reuss, rec.kappa, audit_tol)
            and loewner_leq(rec.kappa, rec.y_voigt, audit_tol)
        ):
            raise BoundViolation(f"{path}: stored target {rec.id} at R={rec.contrast} fails the bound audit")
        out.append(rec)
    return out


def write_features_csv(path, ids, vectors, schema=SCHEMA_ID):
    if len(ids) != len(vectors) or not ids:
        raise InvalidInput("ids and vectors must be equal-length and nonempty")
    width = len(vectors[0].values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + [f"x{i}" for i in range(width)])
        for i, fv in zip(ids, vectors):
            if fv.schema != schema or len(fv.values) != width:
                raise InvalidInput(f"feature schema mismatch for id {i}")
            w.writerow([i] + [_F % x for x in fv.values])


def read_features_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CorruptFile(f"{path}: empty table")
    out = {}
    width = len(rows[0]) - 1
    for row in rows[1:]:
        if len(row) != width + 1:
            raise CorruptFile(f"{path}: ragged row")
        out[row[0]] = np.array([float(x) for x in row[1:]])
    return out


def write_history_csv(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "val_loss", "lr"])
        for i in range(len(history["epoch"])):
            w.writerow(
                [
                    history["epoch"][i],
                    _F % history["train_loss"][i],
                    _F % history["val_loss"][i],
                    _F % history["lr"][i],
                ]
            )


def write_metrics_csv(path, report, label):
    cols = ["model", "R", "n", "phi_mean", "phi_median", "phi_std",
            "rel_mean", "rel_median", "rel_std", "violations"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in report.per_contrast:
            w.writerow(
                [label, _F % row["R"], row["n"]]
                + [_F % row[k] for k in cols[3:9]]
                + [row["violations"]]
            )
        o = report.overall
        w.writerow(
            [label, "all", o["n"], _F % o["phi_mean"], _F % o["phi_median"], "",
             _F % o["rel_mean"], _F % o["rel_median"], "", o["violations"]]
        )


def write_r2_csv(path, report, label):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "component", "r2"])
        for i, v in enumerate(report.r2):
            w.writerow([label, i, _F % v])


def write_ecdf_csv(path, report, label):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "rel_frob_error", "cum_fraction"])
        for x, y in zip(*report.ecdf):
            w.writerow([label, _F % x, _F % y])


def write_eigen_csv(path, report, label):
    cols = ["id", "R", "pred_min", "pred_max", "true_min", "true_max", "reuss_min", "voigt_max"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model"] + cols)
        for row in report.eigen_rows:
            w.writerow([label, row["id"]] + [_F % row[k] for k in cols[1:]])


@dataclass
class Manifest:
    """Dataset card; train and validation structure ids must not overlap."""

    dim: int
    resolution: tuple
    contrasts_train: tuple
    contrasts_val: tuple
    train_ids: tuple
    val_ids: tuple
    seed: int
    feature_schema: str = SCHEMA_ID
    solver_tol: float = 1e-8
    complete: bool = True
    failures: tuple = ()
    schema_version: int = MANIFEST_SCHEMA

    def __post_init__(self):
        overlap = set(self.train_ids) & set(self.val_ids)
        if overlap:
            raise InvalidInput(f"train/validation ids overlap: {sorted(overlap)[:5]}")


def save_manifest(path, man: Manifest):
    d = asdict(man)
    for k in ("resolution", "contrasts_train", "contrasts_val", "train_ids", "val_ids", "failures"):
        d[k] = list(d[k])
    with open(path, "w") as fh:
        json.dump(d, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> Manifest:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if d.get("schema_version") != MANIFEST_SCHEMA:
        raise UnsupportedSchema(f"{path}: manifest schema {d.get('schema_version')}")
    try:
        return Manifest(
            dim=int(d["dim"]),
            resolution=tuple(d["resolution"]),
            contrasts_train=tuple(d["contrasts_train"]),
            contrasts_val=tuple(d["contrasts_val"]),
            train_ids=tuple(d["train_ids"]),
            val_ids=tuple(d["val_ids"]),
            seed=int(d["seed"]),
            feature_schema=d["feature_schema"],
            solver_tol=float(d["solver_tol"]),
            complete=bool(d["complete"]),
            failures=tuple(d["failures"]),
        )
    except KeyError as exc:
        raise CorruptFile(f"{path}: missing key {exc}") from exc


def structure_seed(base_seed, split, index):
    """Per-structure generator seed; stable, collision-free, documented."""
    tag = {"train": 0, "val": 1}[split]
    return int(np.random.SeedSequence((int(base_seed), tag, int(index))).generate_state(1)[0])


def _solve_structure(args):
    # module-level so a process pool can pickle it
    grid_cells, contrasts, tol = args
    grid = VoxelGrid(grid_cells)
    vf = volume_fraction(grid)
    rows = []
    for r_val, res in contrast_sweep(grid, contrasts, tol=tol):
        ps = two_phase_isotropic(grid.dim, 1.0, 1.0 / r_val, vf)
        rows.append(
            (
                r_val,
                res.kappa_eff,
                voigt_bound(ps),
                reuss_bound(ps),
                float(res.residuals.max()),
            )
        )
    return rows


def generate_structures(
    out_dir,
    dim=2,
    resolution=64,
    n_train=500,
    n_val=100,
    contrasts_train=TRAIN_CONTRASTS,
    contrasts_val=VAL_CONTRASTS,
    seed=0,
    tol=1e-8,
    train_gen=None,
    val_gen=None,
):
    """Generate and persist the microstructures plus the dataset manifest.

    Validation structures come from a generator configuration that the
    training split never uses (different inclusion mix and size band), so
    the held-out morphology is genuinely outside the training family.
    Generation failures are recorded in the manifest, their ids excluded,
    and `complete` set False.
    """
    os.makedirs(out_dir, exist_ok=True)
    grid_dir = os.path.join(out_dir, "grids")
    os.makedirs(grid_dir, exist_ok=True)
    shape = (resolution,) * dim
    kinds_train = ("disks", "rectangles") if dim == 2 else ("spheres", "ellipsoids")
    kinds_val = ("rectangles",) if dim == 2 else ("ellipsoids",)
    train_gen = dict(
        dict(kinds=kinds_train, vf_range=(0.18, 0.84), size_range=(0.08, 0.35)),
        **(train_gen or {}),
    )
    val_gen = dict(
        dict(kinds=kinds_val, vf_range=(0.18, 0.84), size_range=(0.12, 0.45)),
        **(val_gen or {}),
    )
    failures = []
    ids = {"train": [], "val": []}
    for split, count, genkw in (("train", n_train, train_gen), ("val", n_val, val_gen)):
        prefix = "tr" if split == "train" else "va"
        for i in range(count):
            sid = f"{prefix}{i:04d}"
            spec = GenSpec(dim=dim, shape=shape, seed=structure_seed(seed, split, i), **genkw)
            try:
                g = generate_rsa(spec)
            except GenerationIncomplete as exc:
                failures.append(f"gen {sid}: {exc}")
                continue
            ids[split].append(sid)
            save_grid(os.path.join(grid_dir, sid + ".vrvg"), g)
    man = Manifest(
        dim=dim,
        resolution=shape,
        contrasts_train=tuple(float(c) for c in contrasts_train),
        contrasts_val=tuple(float(c) for c in contrasts_val),
        train_ids=tuple(ids["train"]),
        val_ids=tuple(ids["val"]),
        seed=seed,
        solver_tol=tol,
        complete=not failures,
        failures=tuple(failures),
    )
    save_manifest(os.path.join(out_dir, "manifest.json"), man)
    return man


def _load_split_grids(data_dir, man: Manifest, split):
    sids = man.train_ids if split == "train" else man.val_ids
    return {sid: load_grid(os.path.join(data_dir, "grids", sid + ".vrvg")) for sid in sids}


def featurize_dataset(data_dir, manifest=None):
    """Extract descriptors for every structure and write features.csv."""
    man = manifest or load_manifest(os.path.join(data_dir, "manifest.json"))
    all_ids = list(man.train_ids) + list(man.val_ids)
    vectors = []
    for sid in all_ids:
        g = load_grid(os.path.join(data_dir, "grids", sid + ".vrvg"))
        vectors.append(extract_features(g))
    path = os.path.join(data_dir, "features.csv")
    write_features_csv(path, all_ids, vectors)
    return path


def solve_dataset(data_dir, jobs=1, manifest=None, splits=("train", "val")):
    """Run the contrast sweeps and write the per-split targets tables.

    Bound-audit failures are excluded from the tables, recorded in the
    manifest and reflected in its `complete` flag.
    """
    import dataclasses

    man = manifest or load_manifest(os.path.join(data_dir, "manifest.json"))
    tol = man.solver_tol
    failures = list(man.failures)
    for split in splits:
        contrasts = man.contrasts_train if split == "train" else man.contrasts_val
        grids = _load_split_grids(data_dir, man, split)
        sids = list(grids)
        work = [(grids[sid].cells, tuple(contrasts), tol) for sid in sids]
        if jobs > 1 and len(work) > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=jobs) as pool:
                solved = list(pool.map(_solve_structure, work, chunksize=4))
        else:
            solved = [_solve_structure(w) for w in work]
        records = []
        for sid, rows in zip(sids, solved):
            for r_val, kappa, yv, yr, residual in rows:
                if not (loewner_leq(yr, kappa, tol=1e-8) and loewner_leq(kappa, yv, tol=1e-8)):
                    failures.append(f"audit {sid}@R={r_val}")
                    continue
                records.append(SampleRecord(sid, r_val, kappa, yv, yr, residual))
        write_targets_csv(os.path.join(data_dir, f"targets_{split}.csv"), records)
    man = dataclasses.replace(man, failures=tuple(failures), complete=not failures)
    save_manifest(os.path.join(data_dir, "manifest.json"), man)
    return man


def build_dataset(
    out_dir,
    dim=2,
    resolution=64,
    n_train=500,
    n_val=100,
    contrasts_train=TRAIN_CONTRASTS,
    contrasts_val=VAL_CONTRASTS,
    seed=0,
    tol=1e-8,
    jobs=1,
    train_gen=None,
    val_gen=None,
):
    """Generate, featurize, solve and persist a complete dataset."""
    man = generate_structures(
        out_dir,
        dim=dim,
        resolution=resolution,
        n_train=n_train,
        n_val=n_val,
        contrasts_train=contrasts_train,
        contrasts_val=contrasts_val,
        seed=seed,
        tol=tol,
        train_gen=train_gen,
        val_gen=val_gen,
    )
    featurize_dataset(out_dir, manifest=man)
    return solve_dataset(out_dir, jobs=jobs, manifest=man)


def scenario_subset(manifest: Manifest, scenario, seed=0):
    """Sample keys (structure id, contrast) for the data-scarcity cases.

    O keeps everything; A draws 20% of the training structures and keeps
    four contrasts; B draws 1% of the structures at all contrasts.  Draws
    are deterministic in the seed.
    """
    ids = list(manifest.train_ids)
    contrasts = list(manifest.contrasts_train)
    if scenario == "O":
        return [(i, c) for i in ids for c in contrasts]
    if scenario == "A":
        frac, keep = 0.20, list(SCENARIO_A_CONTRASTS)
        missing = [c for c in keep if c not in contrasts]
        if missing:
            raise InvalidInput(f"manifest lacks contrasts {missing}")
    elif scenario == "B":
        frac, keep = 0.01, contrasts
    else:
        raise InvalidInput(f"unknown scenario {scenario!r}")
    k = round(frac * len(ids))
    if k < 1:
        raise InvalidInput(f"scenario {scenario} needs at least {1 / frac:.0f} structures")
    rng = rng_from_seed(seed)
    chosen = sorted(rng.choice(np.array(ids), size=k, replace=False).tolist())
    return [(i, c) for i in chosen for c in keep]


def load_eval_samples(data_dir, split="val", manifest=None):
    """Assemble the arrays the surrogate's evaluate() expects."""
    man = manifest or load_manifest(os.path.join(data_dir, "manifest.json"))
    feats = read_features_csv(os.path.join(data_dir, "features.csv"))
    records = read_targets_csv(os.path.join(data_dir, f"targets_{split}.csv"))
    ids, contrast, inputs, kappa, voigt, reuss = [], [], [], [], [], []
    for rec in records:
        fv = FeatureVector(feats[rec.id], man.feature_schema)
        ids.append(rec.id)
        contrast.append(rec.contrast)
        inputs.append(assemble_input(fv, rec.contrast))
        kappa.append(rec.kappa)
        voigt.append(rec.y_voigt)
        reuss.append(rec.y_reuss)
    return {
        "ids": ids,
        "contrast": np.array(contrast),
        "inputs": np.array(inputs),
        "kappa": kappa,
        "voigt": voigt,
        "reuss": reuss,
    }


def load_training_arrays(data_dir, head, m, scenario="O", scenario_seed=0, manifest=None):
    """Inputs and head-appropriate targets for the train/val splits.

    VR targets are the normalized tensors (computed from the stored
    kappa and bounds); vanilla targets are packed raw components.
    """
    from .specnorm import normalize

    man = manifest or load_manifest(os.path.join(data_dir, "manifest.json"))
    feats = read_features_csv(os.path.join(data_dir, "features.csv"))
    out = {}
    for split in ("train", "val"):
        records = read_targets_csv(os.path.join(data_dir, f"targets_{split}.csv"))
        if split == "train" and scenario != "O":
            keep = set(scenario_subset(man, scenario, seed=scenario_seed))
            records = [r for r in records if (r.id, r.contrast) in keep]
        X, T = [], []
        for rec in records:
            X.append(np.concatenate([feats[rec.id], [np.log10(rec.contrast)]]))
            if head == "vr":
                b = bounds_from_matrices(rec.y_voigt, rec.y_reuss)
                if b.rank != m:
                    raise InvalidInput(f"sample {rec.id} has rank-{b.rank} bounds")
                T.append(normalize(rec.kappa, b).y_tilde)
            else:
                T.append(sym_pack(rec.kappa))
        out[split] = (np.array(X), np.array(T))
    return out
