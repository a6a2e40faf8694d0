"""Multi-branch stress classifier with explicit numpy forward/backward.

Each signal branch is [dense -> batch norm -> ReLU -> dropout] per hidden
layer followed by a dense embedding and a sigmoid head; a fusion trunk
concatenates the branch embeddings and adds a fourth head.  The training
loss is the sum of the active heads' mean binary cross-entropies and the
prediction is the average of the active head probabilities.

Batch normalization, inverted dropout, and Adam are implemented here rather
than borrowed from a framework so gradients stay inspectable and a fixed
seed reproduces training bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointVersionMismatch, ShapeMismatch, SingleClassSplit
from .windows import FEATURE_SLICES, N_FUSED

BN_EPS = 1e-5
BN_MOMENTUM = 0.9
PROB_CLAMP = 1e-7
CHECKPOINT_VERSION = 1

BRANCH_ORDER = ("eda", "bvp", "st")


@dataclass(frozen=True)
class BranchSpec:
    input_dim: int
    hidden_dims: tuple[int, ...]
    embed_dim: int = 16

    def __post_init__(self):
        if self.input_dim < 1 or self.embed_dim < 1 or any(w < 1 for w in self.hidden_dims):
            raise ValueError("all layer widths must be >= 1")


def _default_spec(signal: str) -> BranchSpec:
    dim = FEATURE_SLICES[signal].stop - FEATURE_SLICES[signal].start
    return BranchSpec(input_dim=dim, hidden_dims=(dim,), embed_dim=16)


@dataclass(frozen=True)
class NetConfig:
    """Architecture + which branches/heads participate.

    ``active`` lists the enabled heads; "fusion" enables the concatenation
    trunk over the active branches.  Parameters for inactive branches still
    exist (and stay untouched) so checkpoints have a uniform layout.
    """

    eda: BranchSpec = field(default_factory=lambda: _default_spec("eda"))
    bvp: BranchSpec = field(default_factory=lambda: _default_spec("bvp"))
    st: BranchSpec = field(default_factory=lambda: _default_spec("st"))
    fusion_hidden: int = 32
    active: tuple[str, ...] = ("eda", "bvp", "st", "fusion")
    predict_include_fusion: bool = True

    def __post_init__(self):
        if not self.active:
            raise ValueError("at least one head must be active")
        allowed = set(BRANCH_ORDER) | {"fusion"}
        unknown = set(self.active) - allowed
        if unknown:
            raise ValueError(f"unknown active entries {sorted(unknown)}")
        if self.active == ("fusion",):
            raise ValueError("fusion requires at least one active branch")

    def active_branches(self) -> tuple[str, ...]:
        return tuple(n for n in BRANCH_ORDER if n in self.active)

    def spec(self, name: str) -> BranchSpec:
        return getattr(self, name)


def config_for_signals(signals: str, **overrides) -> NetConfig:
    """NetConfig for an experiment lane: "fusion" enables everything, a
    single signal name enables just that branch and its head."""
    if signals == "fusion":
        return NetConfig(**overrides)
    if signals in BRANCH_ORDER:
        return NetConfig(active=(signals,), **overrides)
    raise ValueError(f"unknown signal lane {signals!r}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.003
    batch_size: int = 2048
    dropout: float = 0.10
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_epochs: int = 200
    patience: int = 20
    val_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


# ---------------------------------------------------------------------------
# Parameters


def _glorot(rng, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _init_block(params, rng, prefix: str, fan_in: int, fan_out: int, bn: bool):
    params[f"{prefix}.W"] = _glorot(rng, fan_in, fan_out)
    params[f"{prefix}.b"] = np.zeros(fan_out)
    if bn:
        params[f"{prefix}.bn.gamma"] = np.ones(fan_out)
        params[f"{prefix}.bn.beta"] = np.zeros(fan_out)
        params[f"{prefix}.bn.running_mean"] = np.zeros(fan_out)
        params[f"{prefix}.bn.running_var"] = np.ones(fan_out)


def init_params(cfg: NetConfig, seed: int) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases, identity batch-norm state.
    Creates every branch regardless of ``cfg.active``."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name in BRANCH_ORDER:
        spec = cfg.spec(name)
        prev = spec.input_dim
        for i, width in enumerate(spec.hidden_dims):
            _init_block(params, rng, f"{name}.h{i}", prev, width, bn=True)
            prev = width
        _init_block(params, rng, f"{name}.embed", prev, spec.embed_dim, bn=False)
        _init_block(params, rng, f"{name}.head", spec.embed_dim, 1, bn=False)
    fusion_in = sum(cfg.spec(n).embed_dim for n in cfg.active_branches())
    _init_block(params, rng, "fusion.h0", fusion_in, cfg.fusion_hidden, bn=True)
    _init_block(params, rng, "fusion.head", cfg.fusion_hidden, 1, bn=False)
    params["norm.mean"] = np.zeros(N_FUSED)
    params["norm.std"] = np.ones(N_FUSED)
    return params


def trainable_keys(params) -> list[str]:
    return sorted(
        k for k in params
        if not k.startswith("norm.") and not k.endswith((".running_mean", ".running_var"))
    )


def _standardize(params, X) -> np.ndarray:
    return (X - params["norm.mean"]) / params["norm.std"]


# ---------------------------------------------------------------------------
# Forward / backward


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _layer_forward(params, prefix, h, train, dropout_p, rng, new_running):
    """dense -> BN -> ReLU -> dropout; returns (out, cache)."""
    W, b = params[f"{prefix}.W"], params[f"{prefix}.b"]
    z = h @ W + b
    gamma, beta = params[f"{prefix}.bn.gamma"], params[f"{prefix}.bn.beta"]
    if train:
        mean = z.mean(axis=0)
        var = z.var(axis=0)
        new_running[f"{prefix}.bn.running_mean"] = (
            BN_MOMENTUM * params[f"{prefix}.bn.running_mean"] + (1 - BN_MOMENTUM) * mean
        )
        new_running[f"{prefix}.bn.running_var"] = (
            BN_MOMENTUM * params[f"{prefix}.bn.running_var"] + (1 - BN_MOMENTUM) * var
        )
    else:
        mean = params[f"{prefix}.bn.running_mean"]
        var = params[f"{prefix}.bn.running_var"]
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (z - mean) * inv_std
    bn_out = gamma * xhat + beta
    relu_mask = bn_out > 0
    a = bn_out * relu_mask
    if train and dropout_p > 0.0:
        keep = rng.random(a.shape) >= dropout_p
        drop_scale = keep / (1.0 - dropout_p)
    else:
        drop_scale = None
    out = a * drop_scale if drop_scale is not None else a
    cache = {
        "input": h, "xhat": xhat, "inv_std": inv_std, "gamma": gamma,
        "relu_mask": relu_mask, "drop_scale": drop_scale, "train": train,
        "prefix": prefix,
    }
    return out, cache


def _layer_backward(params, cache, dout, grads):
    prefix = cache["prefix"]
    if cache["drop_scale"] is not None:
        dout = dout * cache["drop_scale"]
    dbn = dout * cache["relu_mask"]
    grads[f"{prefix}.bn.gamma"] += (dbn * cache["xhat"]).sum(axis=0)
    grads[f"{prefix}.bn.beta"] += dbn.sum(axis=0)
    dxhat = dbn * cache["gamma"]
    if cache["train"]:
        xhat = cache["xhat"]
        dz = (
            dxhat - dxhat.mean(axis=0) - xhat * (dxhat * xhat).mean(axis=0)
        ) * cache["inv_std"]
    else:
        dz = dxhat * cache["inv_std"]
    grads[f"{prefix}.W"] += cache["input"].T @ dz
    grads[f"{prefix}.b"] += dz.sum(axis=0)
    return dz @ params[f"{prefix}.W"].T


def _dense_forward(params, prefix, h):
    return h @ params[f"{prefix}.W"] + params[f"{prefix}.b"]


def _dense_backward(params, prefix, h, dz, grads):
    grads[f"{prefix}.W"] += h.T @ dz
    grads[f"{prefix}.b"] += dz.sum(axis=0)
    return dz @ params[f"{prefix}.W"].T


def forward(params, cfg: NetConfig, X, train: bool = False,
            dropout_p: float = 0.0, rng=None):
    """Head logits for a standardized batch.

    Returns (logits dict head->(n,), cache, new_running).  ``new_running``
    holds updated BN running statistics (train mode only); the caller
    decides when to fold them back into the parameters.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != N_FUSED:
        raise ShapeMismatch(f"expected (n, {N_FUSED}) input, got {X.shape}")
    if train and X.shape[0] < 2:
        raise ShapeMismatch("train-mode forward needs at least 2 rows for BN")
    if train and dropout_p > 0.0 and rng is None:
        raise ValueError("train-mode dropout requires an rng")
    logits: dict[str, np.ndarray] = {}
    cache: dict = {"branches": {}, "fusion": None}
    new_running: dict[str, np.ndarray] = {}
    embeds = []
    for name in cfg.active_branches():
        spec = cfg.spec(name)
        h = X[:, FEATURE_SLICES[name]]
        layer_caches = []
        for i in range(len(spec.hidden_dims)):
            h, c = _layer_forward(params, f"{name}.h{i}", h, train, dropout_p, rng, new_running)
            layer_caches.append(c)
        embed = _dense_forward(params, f"{name}.embed", h)
        logits[name] = _dense_forward(params, f"{name}.head", embed).ravel()
        cache["branches"][name] = {"layers": layer_caches, "embed_in": h, "embed": embed}
        embeds.append(embed)
    if "fusion" in cfg.active:
        f_in = np.concatenate(embeds, axis=1)
        f_h, f_cache = _layer_forward(params, "fusion.h0", f_in, train, dropout_p, rng, new_running)
        logits["fusion"] = _dense_forward(params, "fusion.head", f_h).ravel()
        cache["fusion"] = {"input": f_in, "layer": f_cache, "head_in": f_h}
    return logits, cache, new_running


def loss_from_logits(logits: dict[str, np.ndarray], y) -> float:
    """Sum over heads of mean BCE; probabilities clamped to [1e-7, 1-1e-7]."""
    y = np.asarray(y, dtype=float)
    total = 0.0
    for z in logits.values():
        p = np.clip(_sigmoid(z), PROB_CLAMP, 1.0 - PROB_CLAMP)
        total += float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))
    return total


def loss_and_grads(params, cfg: NetConfig, X, y, dropout_p: float = 0.0,
                   rng=None, train: bool = True):
    """Loss, exact gradients, and updated BN running stats for one batch.

    Pure in ``params``: running statistics are returned, never written.  A
    caller re-seeding ``rng`` identically gets identical dropout masks,
    which is what the finite-difference gradient check relies on.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    Xs = _standardize(params, X)
    logits, cache, new_running = forward(params, cfg, Xs, train=train,
                                         dropout_p=dropout_p, rng=rng)
    loss = loss_from_logits(logits, y)
    n = len(y)
    grads = {k: np.zeros_like(params[k]) for k in trainable_keys(params)}

    d_embed: dict[str, np.ndarray] = {}
    for name in cfg.active_branches():
        dz = ((_sigmoid(logits[name]) - y) / n)[:, None]
        d_embed[name] = _dense_backward(params, f"{name}.head", cache["branches"][name]["embed"], dz, grads)
    if "fusion" in cfg.active:
        f = cache["fusion"]
        dzf = ((_sigmoid(logits["fusion"]) - y) / n)[:, None]
        d_fh = _dense_backward(params, "fusion.head", f["head_in"], dzf, grads)
        d_fin = _layer_backward(params, f["layer"], d_fh, grads)
        offset = 0
        for name in cfg.active_branches():
            width = cfg.spec(name).embed_dim
            d_embed[name] = d_embed[name] + d_fin[:, offset : offset + width]
            offset += width
    for name in cfg.active_branches():
        bc = cache["branches"][name]
        dh = _dense_backward(params, f"{name}.embed", bc["embed_in"], d_embed[name], grads)
        for c in reversed(bc["layers"]):
            dh = _layer_backward(params, c, dh, grads)
    return loss, grads, new_running


# ---------------------------------------------------------------------------
# Optimizer


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params) -> "AdamState":
        keys = trainable_keys(params)
        return cls(
            m={k: np.zeros_like(params[k]) for k in keys},
            v={k: np.zeros_like(params[k]) for k in keys},
        )


def adam_step(params, grads, state: AdamState, cfg: TrainConfig) -> None:
    """One in-place Adam update with bias correction."""
    state.t += 1
    b1c = 1.0 - cfg.beta1**state.t
    b2c = 1.0 - cfg.beta2**state.t
    for k in state.m:
        g = grads[k]
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g**2
        m_hat = state.m[k] / b1c
        v_hat = state.v[k] / b2c
        params[k] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)


# ---------------------------------------------------------------------------
# Training / inference


def predict_proba(params, cfg: NetConfig, X) -> np.ndarray:
    """Mean of active head probabilities (eval mode)."""
    Xs = _standardize(params, np.asarray(X, dtype=float))
    logits, _, _ = forward(params, cfg, Xs, train=False)
    heads = list(cfg.active_branches())
    if "fusion" in cfg.active and cfg.predict_include_fusion:
        heads.append("fusion")
    return np.mean([_sigmoid(logits[h]) for h in heads], axis=0)


def predict(params, cfg: NetConfig, X):
    """(labels, probabilities); label 1 iff mean probability >= 0.5."""
    probs = predict_proba(params, cfg, X)
    return (probs >= 0.5).astype(int), probs


@dataclass
class TrainResult:
    params: dict[str, np.ndarray]
    history: list[dict]
    best_epoch: int


def _check_both_classes(y, what: str):
    if len(np.unique(y)) < 2:
        raise SingleClassSplit(f"{what} split contains a single class")


def train(X, y, net_cfg: NetConfig = NetConfig(), train_cfg: TrainConfig = TrainConfig(),
          X_val=None, y_val=None) -> TrainResult:
    """Mini-batch Adam with early stopping on validation balanced accuracy.

    When no validation split is supplied, an internal stratified shuffle
    split carves ``val_frac`` off the training data.  Feature
    standardization statistics come from the train portion only and are
    stored in the returned parameters.
    """
    from .evaluate import balanced_accuracy, stratified_shuffle_split

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    rng = np.random.default_rng(train_cfg.seed)
    if X_val is None:
        tr_idx, val_idx = stratified_shuffle_split(
            y, 1.0 - train_cfg.val_frac, train_cfg.seed
        )
        X, X_val = X[tr_idx], X[val_idx]
        y, y_val = y[tr_idx], y[val_idx]
    else:
        X_val = np.asarray(X_val, dtype=float)
        y_val = np.asarray(y_val, dtype=int)
    _check_both_classes(y, "train")
    _check_both_classes(y_val, "validation")

    params = init_params(net_cfg, seed=train_cfg.seed)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0.0] = 1.0
    params["norm.mean"] = mean
    params["norm.std"] = std

    state = AdamState.for_params(params)
    history: list[dict] = []
    best_ba = -np.inf
    best_epoch = 0
    best_params = {k: v.copy() for k, v in params.items()}
    n = len(y)
    for epoch in range(1, train_cfg.max_epochs + 1):
        perm = rng.permutation(n)
        epoch_loss = 0.0
        n_batches = 0
        for lo in range(0, n, train_cfg.batch_size):
            idx = perm[lo : lo + train_cfg.batch_size]
            if len(idx) < 2:
                continue  # BN cannot normalize a single row
            loss, grads, new_running = loss_and_grads(
                params, net_cfg, X[idx], y[idx],
                dropout_p=train_cfg.dropout, rng=rng,
            )
            adam_step(params, grads, state, train_cfg)
            params.update(new_running)
            epoch_loss += loss
            n_batches += 1
        labels, _ = predict(params, net_cfg, X_val)
        val_ba = balanced_accuracy(y_val, labels)
        history.append({
            "epoch": epoch,
            "train_loss": epoch_loss / max(n_batches, 1),
            "val_balanced_accuracy": val_ba,
        })
        if val_ba > best_ba:
            best_ba = val_ba
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
        elif epoch - best_epoch >= train_cfg.patience:
            break
    return TrainResult(params=best_params, history=history, best_epoch=best_epoch)


# ---------------------------------------------------------------------------
# Checkpoints


def _net_cfg_to_dict(cfg: NetConfig) -> dict:
    return {
        "branches": {
            name: {
                "input_dim": cfg.spec(name).input_dim,
                "hidden_dims": list(cfg.spec(name).hidden_dims),
                "embed_dim": cfg.spec(name).embed_dim,
            }
            for name in BRANCH_ORDER
        },
        "fusion_hidden": cfg.fusion_hidden,
        "active": list(cfg.active),
        "predict_include_fusion": cfg.predict_include_fusion,
    }


def _net_cfg_from_dict(d: dict) -> NetConfig:
    specs = {
        name: BranchSpec(
            input_dim=b["input_dim"],
            hidden_dims=tuple(b["hidden_dims"]),
            embed_dim=b["embed_dim"],
        )
        for name, b in d["branches"].items()
    }
    return NetConfig(
        eda=specs["eda"], bvp=specs["bvp"], st=specs["st"],
        fusion_hidden=d["fusion_hidden"],
        active=tuple(d["active"]),
        predict_include_fusion=d["predict_include_fusion"],
    )


def save_checkpoint(path, params, net_cfg: NetConfig) -> None:
    meta = {"version": CHECKPOINT_VERSION, "net": _net_cfg_to_dict(net_cfg)}
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **params)


def load_checkpoint(path):
    """(params, NetConfig); rejects checkpoints from other format versions."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise CheckpointVersionMismatch(
                f"checkpoint version {meta.get('version')} != {CHECKPOINT_VERSION}"
            )
        params = {k: data[k].copy() for k in data.files if k != "__meta__"}
    return params, _net_cfg_from_dict(meta["net"])
