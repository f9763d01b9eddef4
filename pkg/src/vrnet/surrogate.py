"""Feedforward surrogate with hand-written reverse-mode differentiation.

Two heads share the same trunk architecture.  The bound-respecting head
emits sigmoid outputs xi in [0,1]^{m(m+1)/2}, split into orthogonal
parameters (first m(m-1)/2) and eigenvalues (last m); the reconstruction
Q(xi_q) diag(xi_lambda) Q(xi_q)^T composed with the inverse spectral map
is admissible for every parameter setting, trained or not.  The vanilla
head predicts raw tensor components (z-scored per component during
training) with no such guarantee.

Trunk: z -> activation(BN(W z + b)) with neurons split into four equal
groups [SELU, tanh, sigmoid, identity].  BN uses biased batch variance,
momentum 0.1 running stats and a train/eval mode distinction.  Training
is plain Adam plus a reduce-on-plateau learning-rate scheduler.  All
gradients (including through batch statistics, the sigmoid head, the
matrix exponential for m in {2,3} and the congruence QLQ^T) are analytic;
finite differences are used only as a test oracle.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

from .bounds import BoundsPair, bounds_from_matrices
from .errors import (
    CorruptFile,
    EmptySplit,
    InvalidInput,
    TrainingDiverged,
    UnsupportedSchema,
)
from .microgen import rng_from_seed
from .specnorm import denormalize, normalize, phi_loss, rel_frob_error, reconstruct
from .spdcore import eig_sym, loewner_leq, sym_pack, sym_unpack

__all__ = [
    "NetConfig",
    "NetParams",
    "TrainConfig",
    "default_hidden",
    "init_params",
    "forward",
    "loss_and_grad",
    "vr_predict",
    "train",
    "evaluate",
    "EvalReport",
    "save_checkpoint",
    "load_checkpoint",
]

SELU_ALPHA = 1.6732632423543772
SELU_LAMBDA = 1.0507009873554805
BN_EPS = 1e-5
BN_MOMENTUM = 0.1

CHECKPOINT_MAGIC = b"VRCK"
CHECKPOINT_VERSION = 1


def default_hidden(dim):
    """Trunk widths used by the 2D and 3D pipelines."""
    if dim == 2:
        return (256, 128, 64, 32, 16)
    if dim == 3:
        return (512, 256, 128, 64, 32, 16)
    raise InvalidInput(f"no default trunk for dim {dim}")


@dataclass(frozen=True)
class NetConfig:
    input_dim: int
    hidden: tuple
    head: str  # "vr" | "vanilla"
    m: int  # tensor dimension; output width is m(m+1)/2
    batchnorm: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.head not in ("vr", "vanilla"):
            raise InvalidInput(f"unknown head {self.head!r}")
        if self.input_dim < 1 or self.m < 1:
            raise InvalidInput("input_dim and m must be positive")
        hidden = tuple(int(h) for h in self.hidden)
        if not hidden or any(h < 4 or h % 4 for h in hidden):
            raise InvalidInput("hidden widths must be positive multiples of 4")
        if self.head == "vr" and self.m not in (2, 3):
            raise InvalidInput("the bound-respecting head supports m in {2, 3}")
        object.__setattr__(self, "hidden", hidden)

    @property
    def out_dim(self):
        return self.m * (self.m + 1) // 2

    @property
    def n_rot(self):
        return self.m * (self.m - 1) // 2


@dataclass
class NetParams:
    """All trainable and persistent state of one network."""

    W: list
    b: list
    gamma: list
    beta: list
    run_mean: list
    run_var: list
    x_shift: np.ndarray
    x_scale: np.ndarray
    t_shift: np.ndarray
    t_scale: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 750
    batch_size: int = 1024
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    plateau_factor: float = 0.5
    plateau_patience: int = 20
    min_lr: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidInput("epochs must be >= 1")
        if self.lr <= 0.0:
            raise InvalidInput("learning rate must be positive")


def init_params(cfg: NetConfig) -> NetParams:
    """LeCun-normal weights, zero biases, identity BN, unit standardization."""
    rng = rng_from_seed(cfg.seed)
    widths = [cfg.input_dim, *cfg.hidden, cfg.out_dim]
    W, b = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        W.append(rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out)))
        b.append(np.zeros(fan_out))
    gamma = [np.ones(h) for h in cfg.hidden]
    beta = [np.zeros(h) for h in cfg.hidden]
    run_mean = [np.zeros(h) for h in cfg.hidden]
    run_var = [np.ones(h) for h in cfg.hidden]
    return NetParams(
        W=W,
        b=b,
        gamma=gamma,
        beta=beta,
        run_mean=run_mean,
        run_var=run_var,
        x_shift=np.zeros(cfg.input_dim),
        x_scale=np.ones(cfg.input_dim),
        t_shift=np.zeros(cfg.out_dim),
        t_scale=np.ones(cfg.out_dim),
    )


def set_input_standardization(params: NetParams, X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    params.x_shift = mu
    params.x_scale = np.where(sd > 1e-12, sd, 1.0)


def set_target_standardization(params: NetParams, T):
    mu = T.mean(axis=0)
    sd = T.std(axis=0)
    params.t_shift = mu
    params.t_scale = np.where(sd > 1e-12, sd, 1.0)


def _act_forward(y, h4):
    # columns [0:h4) selu, [h4:2h4) tanh, [2h4:3h4) sigmoid, rest identity
    out = np.empty_like(y)
    g0, g1, g2 = y[:, :h4], y[:, h4 : 2 * h4], y[:, 2 * h4 : 3 * h4]
    out[:, :h4] = SELU_LAMBDA * np.where(g0 > 0.0, g0, SELU_ALPHA * np.expm1(g0))
    out[:, h4 : 2 * h4] = np.tanh(g1)
    out[:, 2 * h4 : 3 * h4] = 1.0 / (1.0 + np.exp(-g2))
    out[:, 3 * h4 :] = y[:, 3 * h4 :]
    return out


def _act_backward(y, h, h4):
    # derivative of _act_forward evaluated from (pre-activation y, output h)
    d = np.empty_like(y)
    g0 = y[:, :h4]
    d[:, :h4] = np.where(g0 > 0.0, SELU_LAMBDA, h[:, :h4] + SELU_LAMBDA * SELU_ALPHA)
    d[:, h4 : 2 * h4] = 1.0 - h[:, h4 : 2 * h4] ** 2
    s = h[:, 2 * h4 : 3 * h4]
    d[:, 2 * h4 : 3 * h4] = s * (1.0 - s)
    d[:, 3 * h4 :] = 1.0
    return d


def forward(params: NetParams, cfg: NetConfig, X, training=False, update_running=False):
    """Batch forward pass; returns (outputs, cache for backward)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != cfg.input_dim:
        raise InvalidInput(f"input width {X.shape[1]} != {cfg.input_dim}")
    h = (X - params.x_shift) / params.x_scale
    layers = []
    for l, width in enumerate(cfg.hidden):
        z = h @ params.W[l] + params.b[l]
        if cfg.batchnorm:
            if training:
                mu = z.mean(axis=0)
                var = z.var(axis=0)  # biased, matching the running average
                if update_running:
                    params.run_mean[l] = (1 - BN_MOMENTUM) * params.run_mean[l] + BN_MOMENTUM * mu
                    params.run_var[l] = (1 - BN_MOMENTUM) * params.run_var[l] + BN_MOMENTUM * var
            else:
                mu = params.run_mean[l]
                var = params.run_var[l]
            denom = np.sqrt(var + BN_EPS)
            xhat = (z - mu) / denom
            y = params.gamma[l] * xhat + params.beta[l]
        else:
            xhat = None
            denom = None
            y = z
        act = _act_forward(y, width // 4)
        layers.append({"h_in": h, "y": y, "xhat": xhat, "denom": denom, "act": act})
        h = act
    out_lin = h @ params.W[-1] + params.b[-1]
    if cfg.head == "vr":
        out = 1.0 / (1.0 + np.exp(-out_lin))
    else:
        out = out_lin
    cache = {"layers": layers, "head_in": h, "out_lin": out_lin, "out": out, "training": training}
    return out, cache


def _backward(params, cfg, cache, d_out_lin):
    """Gradients of all trainable arrays from d(loss)/d(head preactivation)."""
    gW = [None] * len(params.W)
    gb = [None] * len(params.b)
    ggamma = [np.zeros_like(g) for g in params.gamma]
    gbeta = [np.zeros_like(g) for g in params.beta]
    gW[-1] = cache["head_in"].T @ d_out_lin
    gb[-1] = d_out_lin.sum(axis=0)
    dh = d_out_lin @ params.W[-1].T
    n = d_out_lin.shape[0]
    for l in range(len(cfg.hidden) - 1, -1, -1):
        lay = cache["layers"][l]
        dy = dh * _act_backward(lay["y"], lay["act"], cfg.hidden[l] // 4)
        if cfg.batchnorm:
            ggamma[l] = (dy * lay["xhat"]).sum(axis=0)
            gbeta[l] = dy.sum(axis=0)
            dxhat = dy * params.gamma[l]
            if cache["training"]:
                # full backprop through the batch statistics
                mean_dxhat = dxhat.mean(axis=0)
                mean_dxhat_xhat = (dxhat * lay["xhat"]).mean(axis=0)
                dz = (dxhat - mean_dxhat - lay["xhat"] * mean_dxhat_xhat) / lay["denom"]
            else:
                dz = dxhat / lay["denom"]
        else:
            dz = dy
        gW[l] = lay["h_in"].T @ dz
        gb[l] = dz.sum(axis=0)
        dh = dz @ params.W[l].T
    return {"W": gW, "b": gb, "gamma": ggamma, "beta": gbeta}


def _offdiag_weights(m):
    iu = np.triu_indices(m)
    return np.where(iu[0] == iu[1], 1.0, 2.0)


def _rodrigues_batch(t):
    """A, B and their derivatives in t = ||a||^2, elementwise with series fallback."""
    small = t < 1e-8
    ts = np.where(small, 1.0, t)
    r = np.sqrt(ts)
    sin_r, cos_r = np.sin(r), np.cos(r)
    a_c = sin_r / r
    b_c = (1.0 - cos_r) / ts
    at_c = (r * cos_r - sin_r) / (2.0 * r ** 3)
    bt_c = (r * sin_r - 2.0 * (1.0 - cos_r)) / (2.0 * ts * ts)
    a_s = 1.0 - t / 6.0 + t * t / 120.0
    b_s = 0.5 - t / 24.0 + t * t / 720.0
    at_s = -1.0 / 6.0 + t / 60.0 - t * t / 1680.0
    bt_s = -1.0 / 24.0 + t / 360.0 - t * t / 13440.0
    return (
        np.where(small, a_s, a_c),
        np.where(small, b_s, b_c),
        np.where(small, at_s, at_c),
        np.where(small, bt_s, bt_c),
    )


def _batch_q(a, m):
    """Q(a) and dQ/da_k, vectorized over the batch; a has shape (n, m(m-1)/2)."""
    n = a.shape[0]
    if m == 2:
        c, s = np.cos(a[:, 0]), np.sin(a[:, 0])
        q = np.empty((n, 2, 2))
        q[:, 0, 0] = c
        q[:, 0, 1] = -s
        q[:, 1, 0] = s
        q[:, 1, 1] = c
        dq = np.empty((n, 1, 2, 2))
        dq[:, 0, 0, 0] = -s
        dq[:, 0, 0, 1] = -c
        dq[:, 0, 1, 0] = c
        dq[:, 0, 1, 1] = -s
        return q, dq
    if m == 3:
        basis = np.zeros((3, 3, 3))
        for k, (i, j) in enumerate(((0, 1), (0, 2), (1, 2))):
            basis[k, i, j] = -1.0
            basis[k, j, i] = 1.0
        s_mat = np.einsum("nk,kij->nij", a, basis)
        s_sq = s_mat @ s_mat
        t = np.einsum("nk,nk->n", a, a)
        ca, cb, cat, cbt = _rodrigues_batch(t)
        q = np.eye(3) + ca[:, None, None] * s_mat + cb[:, None, None] * s_sq
        es = np.einsum("kij,njl->nkil", basis, s_mat)
        se = np.einsum("nij,kjl->nkil", s_mat, basis)
        dq = (
            (2.0 * a * cat[:, None])[:, :, None, None] * s_mat[:, None]
            + ca[:, None, None, None] * basis[None]
            + (2.0 * a * cbt[:, None])[:, :, None, None] * s_sq[:, None]
            + cb[:, None, None, None] * (es + se)
        )
        return q, dq
    raise InvalidInput("analytic orthogonal chain implemented for m in {2, 3}")


def _vr_loss(xi, targets, m):
    """Mean phi^2 over the batch plus its gradient w.r.t. the sigmoid outputs."""
    n_rot = m * (m - 1) // 2
    a = np.pi * (2.0 * xi[:, :n_rot] - 1.0)
    lam = xi[:, n_rot:]
    q, dqda = _batch_q(a, m)
    y_hat = np.einsum("nij,nj,nkj->nik", q, lam, q)
    diff = y_hat - targets
    n = xi.shape[0]
    loss = float(np.sum(diff * diff) / (n * m))
    g = (2.0 / (n * m)) * diff
    dlam = np.einsum("nik,nij,njk->nk", q, g, q)
    dq = 2.0 * np.einsum("nij,njk,nk->nik", g, q, lam)
    da = np.einsum("nij,nkij->nk", dq, dqda)
    return loss, np.concatenate([2.0 * np.pi * da, dlam], axis=1)


def loss_and_grad(params, cfg, X, targets, training=False, update_running=False):
    """Loss and analytic parameter gradients for one batch.

    VR head: targets is (n, m, m) of normalized tensors, loss mean phi^2.
    Vanilla head: targets is (n, m(m+1)/2) raw components; they are
    z-scored with the stored standardization, MSE with off-diagonals
    weighted twice.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise EmptySplit("empty batch")
    out, cache = forward(params, cfg, X, training=training, update_running=update_running)
    if cfg.head == "vr":
        t = np.asarray(targets, dtype=float)
        if t.shape != (X.shape[0], cfg.m, cfg.m):
            raise InvalidInput(f"VR targets must be (n, m, m), got {t.shape}")
        loss, dxi = _vr_loss(out, t, cfg.m)
        d_out_lin = dxi * out * (1.0 - out)  # sigmoid chain
    else:
        t = np.asarray(targets, dtype=float)
        if t.shape != out.shape:
            raise InvalidInput(f"vanilla targets must be {out.shape}, got {t.shape}")
        t_std = (t - params.t_shift) / params.t_scale
        w = _offdiag_weights(cfg.m)
        diff = out - t_std
        n = out.shape[0]
        loss = float(np.sum(w * diff * diff) / (n * cfg.m))
        d_out_lin = (2.0 / (n * cfg.m)) * w * diff
    if not np.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss {loss!r}")
    return loss, _backward(params, cfg, cache, d_out_lin)


def vr_predict(params, cfg, x, b: BoundsPair):
    """Bound-admissible prediction for a single input.

    Admissibility is structural: for any parameter values the output
    satisfies Reuss <= Y <= Voigt.  A rank-0 bounds pair pins the answer
    to the (coinciding) bounds themselves.
    """
    if b.rank == 0:
        return b.y_voigt.copy()
    if b.rank < cfg.m:
        raise InvalidInput(f"rank-deficient bounds (rank {b.rank} < m {cfg.m})")
    xi, _ = forward(params, cfg, np.asarray(x, dtype=float).reshape(1, -1), training=False)
    xi = xi[0]
    y_tilde = reconstruct(xi[: cfg.n_rot], xi[cfg.n_rot :], cfg.m)
    return denormalize(y_tilde, b)


class _Adam:
    def __init__(self, tcfg):
        self.tcfg = tcfg
        self.m = {}
        self.v = {}
        self.t = 0

    def step(self, params, grads, lr):
        c = self.tcfg
        self.t += 1
        for group in ("W", "b", "gamma", "beta"):
            arrays = getattr(params, group)
            for i, g in enumerate(grads[group]):
                if g is None:
                    continue
                key = (group, i)
                if key not in self.m:
                    self.m[key] = np.zeros_like(g)
                    self.v[key] = np.zeros_like(g)
                self.m[key] = c.beta1 * self.m[key] + (1 - c.beta1) * g
                self.v[key] = c.beta2 * self.v[key] + (1 - c.beta2) * g * g
                mhat = self.m[key] / (1 - c.beta1 ** self.t)
                vhat = self.v[key] / (1 - c.beta2 ** self.t)
                arrays[i] -= lr * mhat / (np.sqrt(vhat) + c.adam_eps)


def train(cfg: NetConfig, tcfg: TrainConfig, X_train, T_train, X_val, T_val):
    """Adam + plateau scheduler; deterministic for fixed seeds.

    Returns (params, history) with history columns epoch, train_loss,
    val_loss, lr.  The validation loss is evaluated in BN eval mode.
    """
    X_train = np.asarray(X_train, dtype=float)
    X_val = np.asarray(X_val, dtype=float)
    n = X_train.shape[0]
    if n == 0 or X_val.shape[0] == 0:
        raise EmptySplit("training and validation splits must both be nonempty")
    params = init_params(cfg)
    set_input_standardization(params, X_train)
    if cfg.head == "vanilla":
        set_target_standardization(params, np.asarray(T_train, dtype=float))
    adam = _Adam(tcfg)
    rng = rng_from_seed(tcfg.seed)
    lr = tcfg.lr
    best = np.inf
    wait = 0
    history = {"epoch": [], "train_loss": [], "val_loss": [], "lr": []}
    T_train = np.asarray(T_train, dtype=float)
    T_val = np.asarray(T_val, dtype=float)
    for epoch in range(1, tcfg.epochs + 1):
        perm = rng.permutation(n)
        seen = 0
        acc = 0.0
        for start in range(0, n, tcfg.batch_size):
            sel = perm[start : start + tcfg.batch_size]
            loss, grads = loss_and_grad(
                params, cfg, X_train[sel], T_train[sel], training=True, update_running=True
            )
            adam.step(params, grads, lr)
            for group in ("W", "b", "gamma", "beta"):
                for arr in getattr(params, group):
                    if not np.all(np.isfinite(arr)):
                        raise TrainingDiverged(f"non-finite parameters at epoch {epoch}")
            acc += loss * len(sel)
            seen += len(sel)
        val_loss, _ = loss_and_grad(params, cfg, X_val, T_val, training=False)
        history["epoch"].append(epoch)
        history["train_loss"].append(acc / seen)
        history["val_loss"].append(val_loss)
        history["lr"].append(lr)
        if val_loss < best:
            best = val_loss
            wait = 0
        else:
            wait += 1
            if wait >= tcfg.plateau_patience:
                lr = max(lr * tcfg.plateau_factor, tcfg.min_lr)
                wait = 0
    return params, history


@dataclass
class EvalReport:
    """Aggregated metrics of one predictor on one split."""

    head: str
    per_contrast: list
    overall: dict
    r2: np.ndarray
    ecdf: tuple
    eigen_rows: list


def _predict_all(params, cfg, samples, head):
    n = len(samples["ids"])
    preds = []
    if head == "hill":
        for i in range(n):
            preds.append(0.5 * (samples["voigt"][i] + samples["reuss"][i]))
        return preds
    if head == "vanilla":
        out, _ = forward(params, cfg, samples["inputs"], training=False)
        raw = out * params.t_scale + params.t_shift
        for i in range(n):
            preds.append(sym_unpack(raw[i], cfg.m))
        return preds
    out, _ = forward(params, cfg, samples["inputs"], training=False)
    for i in range(n):
        b = bounds_from_matrices(samples["voigt"][i], samples["reuss"][i])
        if b.rank == 0:
            preds.append(b.y_voigt.copy())
            continue
        xi = out[i]
        y_tilde = reconstruct(xi[: cfg.n_rot], xi[cfg.n_rot :], cfg.m)
        preds.append(denormalize(y_tilde, b))
    return preds


def evaluate(params, cfg, samples, head=None, tol=1e-8) -> EvalReport:
    """Per-contrast error statistics, bound audit, R^2 and the error ECDF.

    `samples` maps "ids", "contrast" to sequences and "inputs", "kappa",
    "voigt", "reuss" to arrays.  head defaults to cfg.head; "hill"
    evaluates the bound midpoint and needs no parameters.
    """
    head = head or cfg.head
    ids = samples["ids"]
    contrast = np.asarray(samples["contrast"], dtype=float)
    kappa = samples["kappa"]
    n = len(ids)
    if n == 0:
        raise EmptySplit("nothing to evaluate")
    m = kappa[0].shape[0]
    preds = _predict_all(params, cfg, samples, head)
    phi = np.zeros(n)
    rel = np.zeros(n)
    viol = np.zeros(n, dtype=bool)
    eigen_rows = []
    for i in range(n):
        b = bounds_from_matrices(samples["voigt"][i], samples["reuss"][i])
        nt = normalize(kappa[i], b, tol=tol)
        img = b.l_pinv @ (b.y_voigt - preds[i]) @ b.l_pinv.T
        phi[i] = phi_loss(nt.y_tilde, 0.5 * (img + img.T))
        rel[i] = rel_frob_error(kappa[i], preds[i])
        ok_lo = loewner_leq(b.y_reuss, preds[i], tol)
        ok_hi = loewner_leq(preds[i], b.y_voigt, tol)
        viol[i] = not (ok_lo and ok_hi)
        ep = eig_sym(preds[i]).values
        et = eig_sym(kappa[i]).values
        eigen_rows.append(
            {
                "id": ids[i],
                "R": float(contrast[i]),
                "pred_min": float(ep[-1]),
                "pred_max": float(ep[0]),
                "true_min": float(et[-1]),
                "true_max": float(et[0]),
                "reuss_min": float(eig_sym(samples["reuss"][i]).values[-1]),
                "voigt_max": float(eig_sym(samples["voigt"][i]).values[0]),
            }
        )
    per_contrast = []
    for r_val in sorted(set(contrast.tolist())):
        sel = contrast == r_val
        per_contrast.append(
            {
                "R": r_val,
                "n": int(sel.sum()),
                "phi_mean": float(phi[sel].mean()),
                "phi_median": float(np.median(phi[sel])),
                "phi_std": float(phi[sel].std()),
                "rel_mean": float(rel[sel].mean()),
                "rel_median": float(np.median(rel[sel])),
                "rel_std": float(rel[sel].std()),
                "violations": int(viol[sel].sum()),
            }
        )
    overall = {
        "n": n,
        "phi_mean": float(phi.mean()),
        "phi_median": float(np.median(phi)),
        "rel_mean": float(rel.mean()),
        "rel_median": float(np.median(rel)),
        "violations": int(viol.sum()),
    }
    true_packed = np.stack([sym_pack(k) for k in kappa])
    pred_packed = np.stack([sym_pack(p) for p in preds])
    ss_res = np.sum((pred_packed - true_packed) ** 2, axis=0)
    ss_tot = np.sum((true_packed - true_packed.mean(axis=0)) ** 2, axis=0)
    r2 = 1.0 - ss_res / np.where(ss_tot > 0.0, ss_tot, 1.0)
    order = np.argsort(rel, kind="stable")
    ecdf = (rel[order], (np.arange(n) + 1.0) / n)
    return EvalReport(
        head=head,
        per_contrast=per_contrast,
        overall=overall,
        r2=r2,
        ecdf=ecdf,
        eigen_rows=eigen_rows,
    )


def _array_manifest(params, cfg):
    # declaration order is the checkpoint wire order
    arrays = []
    for l in range(len(cfg.hidden)):
        arrays.append((f"W{l}", params.W[l]))
        arrays.append((f"b{l}", params.b[l]))
        if cfg.batchnorm:
            arrays.append((f"gamma{l}", params.gamma[l]))
            arrays.append((f"beta{l}", params.beta[l]))
            arrays.append((f"run_mean{l}", params.run_mean[l]))
            arrays.append((f"run_var{l}", params.run_var[l]))
    arrays.append(("W_head", params.W[-1]))
    arrays.append(("b_head", params.b[-1]))
    arrays.append(("x_shift", params.x_shift))
    arrays.append(("x_scale", params.x_scale))
    arrays.append(("t_shift", params.t_shift))
    arrays.append(("t_scale", params.t_scale))
    return arrays


def save_checkpoint(path, params: NetParams, cfg: NetConfig):
    """Versioned binary: magic, version, JSON header, float64 LE arrays."""
    header = {
        "schema": CHECKPOINT_VERSION,
        "config": {
            "input_dim": cfg.input_dim,
            "hidden": list(cfg.hidden),
            "head": cfg.head,
            "m": cfg.m,
            "batchnorm": cfg.batchnorm,
            "seed": cfg.seed,
        },
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<HI", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for _, arr in _array_manifest(params, cfg):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 10 or data[:4] != CHECKPOINT_MAGIC:
        raise CorruptFile(f"{path}: not a checkpoint file")
    version, hlen = struct.unpack("<HI", data[4:10])
    if version != CHECKPOINT_VERSION:
        raise UnsupportedSchema(f"{path}: checkpoint version {version}")
    if len(data) < 10 + hlen:
        raise CorruptFile(f"{path}: truncated header")
    try:
        header = json.loads(data[10 : 10 + hlen].decode("utf-8"))
        c = header["config"]
        cfg = NetConfig(
            input_dim=int(c["input_dim"]),
            hidden=tuple(c["hidden"]),
            head=c["head"],
            m=int(c["m"]),
            batchnorm=bool(c["batchnorm"]),
            seed=int(c["seed"]),
        )
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"{path}: bad header ({exc})") from exc
    params = init_params(cfg)
    offset = 10 + hlen
    for _, arr in _array_manifest(params, cfg):
        nbytes = arr.size * 8
        if offset + nbytes > len(data):
            raise CorruptFile(f"{path}: truncated array payload")
        arr[...] = np.frombuffer(data[offset : offset + nbytes], dtype="<f8").reshape(arr.shape)
        offset += nbytes
    if offset != len(data):
        raise CorruptFile(f"{path}: {len(data) - offset} trailing bytes")
    return params, cfg
