"""Reference channel-independent MLP forecaster with embedding conditioning.

One shared network maps each node's normalized history window to its
forecast. A per-window reversible normalization absorbs level and scale,
a linear embedder produces the temporal token, and an optional two-layer
LeakyReLU adapter projects a node's geolocation embedding to a small
vector that is concatenated onto the token before the encoder. Training
is plain numpy with hand-derived gradients and an adaptive-moment
optimizer, fully deterministic for a fixed seed.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dataio import TimeSeriesDataset, chronological_split
from .embedding import GeoRepresentation
from .errors import DimMismatch, Misalignment, NonFiniteLoss, TooShort

MODE_PLAIN = "plain"
MODE_GEOVEC = "geovec"
MODE_TABLE = "table"

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8

_FORECASTER_KEYS = ("embed_w", "embed_b", "enc_w", "enc_b", "dec_w", "dec_b")
_ADAPTER_KEYS = ("ad_w1", "ad_b1", "ad_w2", "ad_b2")


@dataclass(frozen=True)
class ForecastConfig:
    history: int
    horizon: int
    token_dim: int = 32
    adapter_dim: int = 16
    hidden: int = 64
    lr: float = 1e-3
    epochs: int = 50
    batch: int = 256
    seed: int = 0
    leaky_slope: float = 0.01
    epsilon_revin: float = 1e-5
    preserve_width: bool = False

    def __post_init__(self) -> None:
        for name in ("history", "horizon", "token_dim", "hidden", "batch", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.adapter_dim < 0:
            raise ValueError("adapter_dim must be >= 0")

    def effective_token_dim(self, conditioned: bool) -> int:
        """Token width; the width-preserving flag trades token for adapter dims."""
        if conditioned and self.preserve_width:
            d = self.token_dim - self.adapter_dim
            if d < 1:
                raise ValueError("preserve_width leaves no token dimensions")
            return d
        return self.token_dim


@dataclass
class AdapterParams:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


@dataclass
class ForecasterParams:
    embed_w: np.ndarray
    embed_b: np.ndarray
    enc_w: np.ndarray
    enc_b: np.ndarray
    dec_w: np.ndarray
    dec_b: np.ndarray


@dataclass
class NodeEmbeddingTable:
    """Jointly trained per-node feature columns with a mean fallback."""

    node_ids: tuple[str, ...]
    table: np.ndarray

    @property
    def fallback(self) -> np.ndarray:
        return self.table.mean(axis=1)

    def columns_for(self, node_ids: tuple[str, ...]) -> np.ndarray:
        pos = {nid: i for i, nid in enumerate(self.node_ids)}
        cols = np.empty((self.table.shape[0], len(node_ids)))
        fb = self.fallback
        for j, nid in enumerate(node_ids):
            idx = pos.get(nid)
            cols[:, j] = self.table[:, idx] if idx is not None else fb
        return cols


@dataclass
class TrainResult:
    mode: str
    config: ForecastConfig
    params: ForecasterParams
    adapter: AdapterParams | None
    table: NodeEmbeddingTable | None
    loss_history: list[tuple[int, float, float]]
    best_epoch: int
    provider_id: str | None = None


@dataclass
class WindowBatch:
    """A few (window, target) samples plus what conditions them."""

    windows: np.ndarray
    targets: np.ndarray
    node_idx: np.ndarray
    rep_matrix: np.ndarray | None = None


# -- normalization ------------------------------------------------------------


def revin_normalize(window: np.ndarray, epsilon: float = 1e-5) -> tuple[np.ndarray, float, float]:
    """Per-window z-score: sigma = sqrt(population variance + epsilon)."""
    window = np.asarray(window, dtype=float)
    mu = float(window.mean())
    sigma = float(np.sqrt(window.var() + epsilon))
    return (window - mu) / sigma, mu, sigma


def revin_denormalize(values: np.ndarray, mu: float, sigma: float) -> np.ndarray:
    return np.asarray(values, dtype=float) * sigma + mu


def leaky_relu(x: np.ndarray, slope: float = 0.01) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


# -- forward paths ------------------------------------------------------------


def adapter_forward(z: np.ndarray, params: AdapterParams, slope: float = 0.01) -> np.ndarray:
    """Two-layer projection with LeakyReLU between the layers only."""
    z = np.asarray(z, dtype=float)
    if z.shape != (params.w1.shape[1],):
        raise DimMismatch(f"adapter expects {params.w1.shape[1]} inputs, got {z.shape}")
    return params.w2 @ leaky_relu(params.w1 @ z + params.b1, slope) + params.b2


def adapter_transform(matrix: np.ndarray, params: AdapterParams, slope: float = 0.01) -> np.ndarray:
    """Adapter applied column-wise to a dim x nodes embedding matrix."""
    u = params.w1 @ matrix + params.b1[:, None]
    return params.w2 @ leaky_relu(u, slope) + params.b2[:, None]


def forecaster_forward(
    window: np.ndarray,
    z_prime: np.ndarray,
    params: ForecasterParams,
    config: ForecastConfig,
) -> np.ndarray:
    """Normalize, embed, concatenate, encode, decode, denormalize."""
    window = np.asarray(window, dtype=float)
    if window.shape != (config.history,):
        raise DimMismatch(f"window must have length {config.history}, got {window.shape}")
    normalized, mu, sigma = revin_normalize(window, config.epsilon_revin)
    token = params.embed_w @ normalized + params.embed_b
    joined = np.concatenate([token, np.asarray(z_prime, dtype=float)])
    if joined.shape != (params.enc_w.shape[1],):
        raise DimMismatch(
            f"encoder expects width {params.enc_w.shape[1]}, got {joined.shape[0]}"
        )
    hidden = leaky_relu(params.enc_w @ joined + params.enc_b, config.leaky_slope)
    out = params.dec_w @ hidden + params.dec_b
    return revin_denormalize(out, mu, sigma)


# -- parameter dictionaries ---------------------------------------------------


def _init_params(config: ForecastConfig, rep_dim: int | None, n_nodes: int | None) -> dict[str, np.ndarray]:
    """Seeded init. Weights are uniform in +-sqrt(6/(fan_in+fan_out)), biases zero.

    Draw order is fixed (embedder, encoder, decoder, then conditioning) so
    a zero-width adapter reproduces the plain model bit for bit.
    """
    rng = np.random.default_rng(config.seed)

    def glorot(fan_out: int, fan_in: int) -> np.ndarray:
        bound = np.sqrt(6.0 / max(fan_in + fan_out, 1))
        return rng.uniform(-bound, bound, size=(fan_out, fan_in))

    conditioned = rep_dim is not None or n_nodes is not None
    d_s = config.adapter_dim if conditioned else 0
    d_t = config.effective_token_dim(conditioned)
    p = {
        "embed_w": glorot(d_t, config.history),
        "embed_b": np.zeros(d_t),
        "enc_w": glorot(config.hidden, d_t + d_s),
        "enc_b": np.zeros(config.hidden),
        "dec_w": glorot(config.horizon, config.hidden),
        "dec_b": np.zeros(config.horizon),
    }
    if rep_dim is not None:
        p["ad_w1"] = glorot(d_s, rep_dim)
        p["ad_b1"] = np.zeros(d_s)
        p["ad_w2"] = glorot(d_s, d_s)
        p["ad_b2"] = np.zeros(d_s)
    elif n_nodes is not None:
        bound = np.sqrt(6.0 / (d_s + n_nodes))
        p["table"] = rng.uniform(-bound, bound, size=(d_s, n_nodes))
    return p


def _params_from_dict(p: dict[str, np.ndarray]) -> ForecasterParams:
    return ForecasterParams(**{k: p[k].copy() for k in _FORECASTER_KEYS})


def _adapter_from_dict(p: dict[str, np.ndarray]) -> AdapterParams | None:
    if "ad_w1" not in p:
        return None
    return AdapterParams(*(p[k].copy() for k in _ADAPTER_KEYS))


def _dict_from_parts(
    params: ForecasterParams,
    adapter: AdapterParams | None = None,
    table: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    p = {k: getattr(params, k) for k in _FORECASTER_KEYS}
    if adapter is not None:
        p.update(ad_w1=adapter.w1, ad_b1=adapter.b1, ad_w2=adapter.w2, ad_b2=adapter.b2)
    if table is not None:
        p["table"] = table
    return p


def _zprime_for_batch(p: dict[str, np.ndarray], batch: WindowBatch, slope: float) -> tuple[np.ndarray | None, dict]:
    """Per-sample conditioning rows and the cache needed for its gradient."""
    if "ad_w1" in p:
        z = batch.rep_matrix
        u = p["ad_w1"] @ z + p["ad_b1"][:, None]
        g = leaky_relu(u, slope)
        zp_all = p["ad_w2"] @ g + p["ad_b2"][:, None]
        return zp_all[:, batch.node_idx].T, {"u": u, "g": g, "z": z, "n_cols": z.shape[1]}
    if "table" in p:
        zp_all = p["table"]
        return zp_all[:, batch.node_idx].T, {"n_cols": zp_all.shape[1]}
    return None, {}


def _forward_batch(
    p: dict[str, np.ndarray],
    batch: WindowBatch,
    config: ForecastConfig,
) -> tuple[np.ndarray, dict]:
    w = batch.windows
    mu = w.mean(axis=1)
    sigma = np.sqrt(w.var(axis=1) + config.epsilon_revin)
    normalized = (w - mu[:, None]) / sigma[:, None]
    tokens = normalized @ p["embed_w"].T + p["embed_b"]
    zp, zp_cache = _zprime_for_batch(p, batch, config.leaky_slope)
    joined = tokens if zp is None else np.concatenate([tokens, zp], axis=1)
    pre = joined @ p["enc_w"].T + p["enc_b"]
    hid = leaky_relu(pre, config.leaky_slope)
    out = hid @ p["dec_w"].T + p["dec_b"]
    yhat = out * sigma[:, None] + mu[:, None]
    cache = {
        "normalized": normalized,
        "sigma": sigma,
        "joined": joined,
        "pre": pre,
        "hid": hid,
        "zp_cache": zp_cache,
    }
    return yhat, cache


def batch_loss(
    p: dict[str, np.ndarray],
    batch: WindowBatch,
    config: ForecastConfig,
    scale: float = 1.0,
) -> float:
    yhat, _ = _forward_batch(p, batch, config)
    return scale * float(np.mean((yhat - batch.targets) ** 2))


def batch_gradients(
    p: dict[str, np.ndarray],
    batch: WindowBatch,
    config: ForecastConfig,
    scale: float = 1.0,
) -> tuple[float, dict[str, np.ndarray]]:
    """Analytic gradients of the mean squared error over the batch."""
    yhat, cache = _forward_batch(p, batch, config)
    residual = yhat - batch.targets
    loss = scale * float(np.mean(residual ** 2))
    slope = config.leaky_slope
    d_t = p["embed_w"].shape[0]

    d_yhat = scale * 2.0 * residual / residual.size
    d_out = d_yhat * cache["sigma"][:, None]
    grads: dict[str, np.ndarray] = {
        "dec_w": d_out.T @ cache["hid"],
        "dec_b": d_out.sum(axis=0),
    }
    d_hid = d_out @ p["dec_w"]
    d_pre = d_hid * np.where(cache["pre"] > 0, 1.0, slope)
    grads["enc_w"] = d_pre.T @ cache["joined"]
    grads["enc_b"] = d_pre.sum(axis=0)
    d_joined = d_pre @ p["enc_w"]
    d_tokens = d_joined[:, :d_t]
    grads["embed_w"] = d_tokens.T @ cache["normalized"]
    grads["embed_b"] = d_tokens.sum(axis=0)

    zc = cache["zp_cache"]
    if zc:
        d_zp = d_joined[:, d_t:]
        acc = np.zeros((zc["n_cols"], d_zp.shape[1]))
        np.add.at(acc, batch.node_idx, d_zp)
        d_zp_all = acc.T
        if "u" in zc:
            grads["ad_w2"] = d_zp_all @ zc["g"].T
            grads["ad_b2"] = d_zp_all.sum(axis=1)
            d_g = p["ad_w2"].T @ d_zp_all
            d_u = d_g * np.where(zc["u"] > 0, 1.0, slope)
            grads["ad_w1"] = d_u @ zc["z"].T
            grads["ad_b1"] = d_u.sum(axis=1)
        else:
            grads["table"] = d_zp_all
    return loss, grads


def grad_check(
    batch: WindowBatch,
    params: ForecasterParams,
    config: ForecastConfig,
    adapter: AdapterParams | None = None,
    table: np.ndarray | None = None,
    step: float = 1e-4,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    p = {k: v.astype(float).copy() for k, v in _dict_from_parts(params, adapter, table).items()}
    _, grads = batch_gradients(p, batch, config)
    worst = 0.0
    for key in sorted(p):
        flat = p[key].reshape(-1)
        gflat = grads[key].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = batch_loss(p, batch, config)
            flat[i] = orig - step
            down = batch_loss(p, batch, config)
            flat[i] = orig
            fd = (up - down) / (2.0 * step)
            denom = max(1.0, abs(gflat[i]), abs(fd))
            worst = max(worst, abs(gflat[i] - fd) / denom)
    return worst


# -- training -----------------------------------------------------------------


def _window_index(split_len: int, n_nodes: int, config: ForecastConfig) -> tuple[np.ndarray, np.ndarray]:
    n_starts = split_len - config.history - config.horizon + 1
    if n_starts < 1:
        raise TooShort(
            f"split of {split_len} steps cannot hold history {config.history} + horizon {config.horizon}"
        )
    starts = np.repeat(np.arange(n_starts), n_nodes)
    nodes = np.tile(np.arange(n_nodes), n_starts)
    return starts, nodes


def _gather(values: np.ndarray, starts: np.ndarray, nodes: np.ndarray, config: ForecastConfig) -> tuple[np.ndarray, np.ndarray]:
    h, f = config.history, config.horizon
    windows = values[starts[:, None] + np.arange(h)[None, :], nodes[:, None]]
    targets = values[starts[:, None] + h + np.arange(f)[None, :], nodes[:, None]]
    return windows, targets


def _aligned_matrix(rep: GeoRepresentation, node_ids: tuple[str, ...]) -> np.ndarray:
    if set(rep.node_ids) != set(node_ids):
        missing = set(rep.node_ids) ^ set(node_ids)
        raise Misalignment(f"representation and series node ids differ: {sorted(missing)[:5]}")
    pos = {nid: i for i, nid in enumerate(rep.node_ids)}
    return rep.matrix[:, [pos[nid] for nid in node_ids]]


def _split_mse(
    p: dict[str, np.ndarray],
    values: np.ndarray,
    starts: np.ndarray,
    nodes: np.ndarray,
    config: ForecastConfig,
    rep_matrix: np.ndarray | None,
    chunk: int = 8192,
) -> tuple[float, float]:
    sq_sum = 0.0
    abs_sum = 0.0
    count = 0
    for lo in range(0, starts.size, chunk):
        s = starts[lo : lo + chunk]
        n = nodes[lo : lo + chunk]
        windows, targets = _gather(values, s, n, config)
        yhat, _ = _forward_batch(p, WindowBatch(windows, targets, n, rep_matrix), config)
        err = yhat - targets
        sq_sum += float(np.sum(err ** 2))
        abs_sum += float(np.sum(np.abs(err)))
        count += err.size
    return sq_sum / count, abs_sum / count


def _train(
    ds: TimeSeriesDataset,
    config: ForecastConfig,
    rep: GeoRepresentation | None,
    use_table: bool,
) -> TrainResult:
    rep_matrix = None
    provider_id = None
    if rep is not None:
        rep_matrix = _aligned_matrix(rep, ds.node_ids)
        provider_id = rep.provider_id
    train, val, _ = chronological_split(ds, min_length=config.history + config.horizon)
    n_nodes = len(ds.node_ids)
    p = _init_params(
        config,
        rep_dim=rep_matrix.shape[0] if rep_matrix is not None else None,
        n_nodes=n_nodes if use_table else None,
    )
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x5A17]))
    tr_starts, tr_nodes = _window_index(len(train), n_nodes, config)
    va_starts, va_nodes = _window_index(len(val), n_nodes, config)

    adam_m = {k: np.zeros_like(v) for k, v in p.items()}
    adam_v = {k: np.zeros_like(v) for k, v in p.items()}
    adam_t = 0

    history: list[tuple[int, float, float]] = []
    best_val = np.inf
    best_state = {k: v.copy() for k, v in p.items()}
    best_epoch = 0
    n_samples = tr_starts.size
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_samples)
        running = 0.0
        seen = 0
        for lo in range(0, n_samples, config.batch):
            pick = order[lo : lo + config.batch]
            windows, targets = _gather(train.values, tr_starts[pick], tr_nodes[pick], config)
            batch = WindowBatch(windows, targets, tr_nodes[pick], rep_matrix)
            loss, grads = batch_gradients(p, batch, config)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"epoch {epoch}: batch loss is {loss}")
            adam_t += 1
            for key, g in grads.items():
                adam_m[key] = _ADAM_BETA1 * adam_m[key] + (1 - _ADAM_BETA1) * g
                adam_v[key] = _ADAM_BETA2 * adam_v[key] + (1 - _ADAM_BETA2) * g * g
                m_hat = adam_m[key] / (1 - _ADAM_BETA1 ** adam_t)
                v_hat = adam_v[key] / (1 - _ADAM_BETA2 ** adam_t)
                p[key] = p[key] - config.lr * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)
            running += loss * pick.size
            seen += pick.size
        train_mse = running / seen
        val_mse, _ = _split_mse(p, val.values, va_starts, va_nodes, config, rep_matrix)
        history.append((epoch, train_mse, val_mse))
        if val_mse < best_val:
            best_val = val_mse
            best_state = {k: v.copy() for k, v in p.items()}
            best_epoch = epoch

    result_table = None
    if use_table:
        result_table = NodeEmbeddingTable(node_ids=ds.node_ids, table=best_state["table"].copy())
    mode = MODE_TABLE if use_table else (MODE_GEOVEC if rep is not None else MODE_PLAIN)
    return TrainResult(
        mode=mode,
        config=config,
        params=_params_from_dict(best_state),
        adapter=_adapter_from_dict(best_state),
        table=result_table,
        loss_history=history,
        best_epoch=best_epoch,
        provider_id=provider_id,
    )


def train_forecaster(
    ds: TimeSeriesDataset,
    rep: GeoRepresentation | None,
    config: ForecastConfig,
) -> TrainResult:
    """Train on the chronological train split, keeping the best-val weights."""
    return _train(ds, config, rep, use_table=False)


def train_with_node_table(ds: TimeSeriesDataset, config: ForecastConfig) -> TrainResult:
    """Same training loop, but conditioning comes from a learnable node table."""
    return _train(ds, config, None, use_table=True)


# -- evaluation ---------------------------------------------------------------


def _conditioning_for(result: TrainResult, ds: TimeSeriesDataset, rep: GeoRepresentation | None) -> np.ndarray | None:
    if result.mode == MODE_GEOVEC:
        if rep is None:
            raise Misalignment("a geovec-conditioned model needs a representation to evaluate")
        matrix = _aligned_matrix(rep, ds.node_ids)
        return adapter_transform(matrix, result.adapter, result.config.leaky_slope)
    if result.mode == MODE_TABLE:
        return result.table.columns_for(ds.node_ids)
    return None


def evaluate_forecaster(
    result: TrainResult,
    split_ds: TimeSeriesDataset,
    rep: GeoRepresentation | None = None,
) -> tuple[float, float]:
    """(MSE, MAE) over every stride-1 window of the split, original units."""
    config = result.config
    starts, nodes = _window_index(len(split_ds), len(split_ds.node_ids), config)
    zp_all = _conditioning_for(result, split_ds, rep)
    p = _dict_from_parts(result.params)
    if zp_all is not None:
        p["table"] = zp_all  # evaluation treats any conditioning as fixed columns
    return _split_mse(p, split_ds.values, starts, nodes, config, None)


def zero_shot_eval(
    result: TrainResult,
    target_ds: TimeSeriesDataset,
    target_rep: GeoRepresentation | None = None,
) -> tuple[float, float]:
    """Frozen evaluation on unseen nodes via their own embeddings.

    Geovec models push the target representation through the trained
    adapter; node-table models fall back to the mean column for ids not
    seen in training. No parameters are read-modified anywhere.
    """
    return evaluate_forecaster(result, target_ds, target_rep)


def presmooth(ds: TimeSeriesDataset, weights: np.ndarray, mix: float = 0.5) -> TimeSeriesDataset:
    """Optional input smoothing toward inverse-distance-weighted neighbors."""
    if not 0.0 <= mix <= 1.0:
        raise ValueError("mix must lie in [0, 1]")
    w = np.asarray(weights, dtype=float)
    row_sums = w.sum(axis=1, keepdims=True)
    norm = np.divide(w, row_sums, out=np.zeros_like(w), where=row_sums > 0)
    return TimeSeriesDataset(
        node_ids=ds.node_ids,
        timestamps=ds.timestamps,
        values=(1.0 - mix) * ds.values + mix * ds.values @ norm.T,
    )


# -- persistence --------------------------------------------------------------


def param_hash(result: TrainResult) -> str:
    """Stable digest of every trained array; mutation detection for tests."""
    h = hashlib.sha256()
    p = _dict_from_parts(result.params, result.adapter, result.table.table if result.table else None)
    for key in sorted(p):
        h.update(key.encode("ascii"))
        h.update(np.ascontiguousarray(p[key], dtype="<f8").tobytes())
    return h.hexdigest()


def save_checkpoint(result: TrainResult, path: str | Path) -> None:
    """Single JSON document: config header plus base64 f64 parameter blob."""
    p = _dict_from_parts(result.params, result.adapter, result.table.table if result.table else None)
    keys = sorted(p)
    blob = b"".join(np.ascontiguousarray(p[k], dtype="<f8").tobytes() for k in keys)
    doc = {
        "format": "geovec-forecast",
        "version": 1,
        "mode": result.mode,
        "config": asdict(result.config),
        "provider_id": result.provider_id,
        "best_epoch": result.best_epoch,
        "loss_history": [[e, t, v] for e, t, v in result.loss_history],
        "param_order": keys,
        "param_shapes": {k: list(p[k].shape) for k in keys},
        "table_node_ids": list(result.table.node_ids) if result.table else None,
        "blob": base64.b64encode(blob).decode("ascii"),
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, separators=(",", ":")), encoding="utf-8")


def load_checkpoint(path: str | Path) -> TrainResult:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != "geovec-forecast" or doc.get("version") != 1:
        raise ValueError(f"{path}: not a forecaster checkpoint")
    blob = base64.b64decode(doc["blob"])
    p: dict[str, np.ndarray] = {}
    offset = 0
    for key in doc["param_order"]:
        shape = tuple(doc["param_shapes"][key])
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f8", count=size, offset=offset).reshape(shape)
        p[key] = arr.astype(float)
        offset += size * 8
    table = None
    if "table" in p:
        table = NodeEmbeddingTable(node_ids=tuple(doc["table_node_ids"]), table=p["table"])
    return TrainResult(
        mode=doc["mode"],
        config=ForecastConfig(**doc["config"]),
        params=_params_from_dict(p),
        adapter=_adapter_from_dict(p),
        table=table,
        loss_history=[(int(e), float(t), float(v)) for e, t, v in doc["loss_history"]],
        best_epoch=int(doc["best_epoch"]),
        provider_id=doc.get("provider_id"),
    )


def write_loss_history_csv(history: list[tuple[int, float, float]], path: str | Path) -> None:
    lines = ["epoch,train_mse,val_mse"]
    for epoch, train_mse, val_mse in history:
        lines.append(f"{epoch},{train_mse!r},{val_mse!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
