"""Graph-attention networks with hand-written backward passes.

Two architectures share the attention stack:

* ``expectation``: 4 attention layers, mean-pool over gate nodes (31),
  a 3->12->12 head on the globals, concat (43) and an MLP trunk
  256->128->64->out_dim with a logistic output.
* ``compare``: the same stack over a pair graph. After layers 1-3 the pooled
  A and B vectors are subtracted (3 x 31); after layer 4 they are concatenated
  (62). With the 12-wide global-difference head the trunk input is 167.

Parameters live in a flat ``dict[str, ndarray]`` (float64). Names:
``att{l}.w{h}`` (31x31, applied as ``x @ w``), ``att{l}.a{h}`` (62),
``att{l}.bias`` (31), ``glob{i}.w``/``glob{i}.b`` and ``fc{i}.w``/``fc{i}.b``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from .. import _kernels as K
from ..graph import FEATURE_DIM, NUM_GLOBALS
from .batch import Batch, Pooling

ARCHITECTURES = ("expectation", "compare")


@dataclass(frozen=True)
class ModelConfig:
    arch: str = "expectation"
    out_dim: int = 1
    layers: int = 4
    heads: int = 2
    hidden: tuple[int, ...] = (256, 128, 64)
    global_hidden: int = 12
    slope: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.arch!r}")
        if not 0.0 < self.slope < 1.0:
            raise ValueError("LeakyReLU slope must lie in (0, 1)")
        if self.out_dim not in (1, 2):
            raise ValueError("out_dim must be 1 or 2")
        if self.arch == "compare" and self.out_dim != 1:
            raise ValueError("the comparator has a single output")
        if self.layers < 1 or self.heads < 1:
            raise ValueError("need at least one layer and one head")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @property
    def trunk_in(self) -> int:
        if self.arch == "expectation":
            return FEATURE_DIM + self.global_hidden
        return (self.layers - 1) * FEATURE_DIM + 2 * FEATURE_DIM + self.global_hidden

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["hidden"] = tuple(d.get("hidden", (256, 128, 64)))
        return cls(**d)


def _leaky(x, slope):
    return np.maximum(x, slope * x)  # valid for 0 < slope < 1


def _leaky_back(dy, x, slope):
    """dy * LeakyReLU'(x), with the derivative at 0 taken as ``slope``."""
    out = dy * slope
    np.copyto(out, dy, where=x > 0)
    return out


def _glorot(rng, fan_in, fan_out, shape):
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def init_params(cfg: ModelConfig) -> dict[str, np.ndarray]:
    from ..randgen import stream

    rng = stream(cfg.seed, 1)
    d = FEATURE_DIM
    p: dict[str, np.ndarray] = {}
    for l in range(cfg.layers):
        for h in range(cfg.heads):
            p[f"att{l}.w{h}"] = _glorot(rng, d, d, (d, d))
            p[f"att{l}.a{h}"] = _glorot(rng, 2 * d, 1, (2 * d,))
        p[f"att{l}.bias"] = np.zeros(d)
    gdims = [NUM_GLOBALS, cfg.global_hidden, cfg.global_hidden]
    for i in range(2):
        p[f"glob{i}.w"] = _glorot(rng, gdims[i], gdims[i + 1], (gdims[i], gdims[i + 1]))
        p[f"glob{i}.b"] = np.zeros(gdims[i + 1])
    dims = [cfg.trunk_in, *cfg.hidden, cfg.out_dim]
    for i in range(len(dims) - 1):
        p[f"fc{i}.w"] = _glorot(rng, dims[i], dims[i + 1], (dims[i], dims[i + 1]))
        p[f"fc{i}.b"] = np.zeros(dims[i + 1])
    return p


# ---- attention layer -------------------------------------------------------

def attention_forward(x, p, l, heads, batch: Batch, slope):
    """One multi-head attention layer; returns (output, cache)."""
    d = FEATURE_DIM
    ptr, src, dst = batch.ptr, batch.src, batch.dst
    acc = np.zeros((x.shape[0], d))
    per_head = []
    for h in range(heads):
        w, a = p[f"att{l}.w{h}"], p[f"att{l}.a{h}"]
        z = np.ascontiguousarray(x @ w)
        s_src, s_dst = z @ a[:d], z @ a[d:]
        pre = s_src[src] + s_dst[dst]
        alpha = K.segment_softmax(np.ascontiguousarray(_leaky(pre, slope)), ptr)
        acc += K.csr_matmul(ptr, src, alpha, z)
        per_head.append((z, pre, alpha))
    m = acc / heads + p[f"att{l}.bias"]
    return _leaky(m, slope), (x, m, per_head)


def attention_backward(dy, cache, p, l, heads, batch: Batch, slope, grads):
    """Accumulate parameter gradients into ``grads``; return d(input)."""
    d = FEATURE_DIM
    x, m, per_head = cache
    ptr, src = batch.ptr, batch.src
    n = x.shape[0]
    dm = _leaky_back(dy, m, slope)
    grads[f"att{l}.bias"] = dm.sum(axis=0)
    dout = np.ascontiguousarray(dm / heads)
    dx = np.zeros_like(x)
    for h, (z, pre, alpha) in enumerate(per_head):
        w, a = p[f"att{l}.w{h}"], p[f"att{l}.a{h}"]
        dalpha = K.edge_dot(ptr, src, dout, z)
        dz = K.csr_matmul_t(ptr, src, alpha, dout, n)
        de = K.segment_softmax_backward(alpha, dalpha, ptr)
        dpre = _leaky_back(de, pre, slope)
        ds_src = np.bincount(src, weights=dpre, minlength=n)
        ds_dst = np.add.reduceat(dpre, ptr[:-1]) if n else np.zeros(0)
        dz += np.outer(ds_src, a[:d]) + np.outer(ds_dst, a[d:])
        grads[f"att{l}.a{h}"] = np.concatenate([z.T @ ds_src, z.T @ ds_dst])
        grads[f"att{l}.w{h}"] = x.T @ dz
        dx += dz @ w.T
    return dx


# ---- pooling and dense stacks ---------------------------------------------

def _pool(pool: Pooling, y):
    return K.csr_matmul(pool.ptr, pool.cols, pool.vals, np.ascontiguousarray(y))


def _pool_t(pool: Pooling, dp):
    return K.csr_matmul_t(pool.ptr, pool.cols, pool.vals, np.ascontiguousarray(dp), pool.num_nodes)


def _mlp_forward(h, p, prefix, count, slope, last_linear):
    cache = []
    for i in range(count):
        pre = h @ p[f"{prefix}{i}.w"] + p[f"{prefix}{i}.b"]
        cache.append((h, pre))
        h = pre if (last_linear and i == count - 1) else _leaky(pre, slope)
    return h, cache


def _mlp_backward(dh, cache, p, prefix, slope, last_linear, grads):
    count = len(cache)
    for i in reversed(range(count)):
        h, pre = cache[i]
        dpre = dh if (last_linear and i == count - 1) else _leaky_back(dh, pre, slope)
        grads[f"{prefix}{i}.w"] = h.T @ dpre
        grads[f"{prefix}{i}.b"] = dpre.sum(axis=0)
        dh = dpre @ p[f"{prefix}{i}.w"].T
    return dh


# ---- model -----------------------------------------------------------------

@dataclass
class GnnModel:
    config: ModelConfig = field(default_factory=ModelConfig)
    params: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.params:
            self.params = init_params(self.config)

    @classmethod
    def create(cls, arch: str = "expectation", out_dim: int = 1, seed: int = 0, **kw) -> "GnnModel":
        return cls(ModelConfig(arch=arch, out_dim=out_dim, seed=seed, **kw))

    @property
    def num_parameters(self) -> int:
        return sum(v.size for v in self.params.values())

    def _check_batch(self, batch: Batch):
        want = 1 if self.config.arch == "expectation" else 2
        if len(batch.pools) != want:
            kind = "circuit-graph" if want == 1 else "pair-graph"
            raise ValueError(f"{self.config.arch} model needs a {kind} batch")

    def forward(self, batch: Batch, keep_cache: bool = False):
        self._check_batch(batch)
        cfg, p = self.config, self.params
        slope = cfg.slope
        h = batch.x
        att_caches, outs = [], []
        for l in range(cfg.layers):
            h, c = attention_forward(h, p, l, cfg.heads, batch, slope)
            att_caches.append(c)
            outs.append(h)
        if cfg.arch == "expectation":
            pooled = [_pool(batch.pools[0], outs[-1])]
        else:
            pa, pb = batch.pools
            pooled = [_pool(pa, y) - _pool(pb, y) for y in outs[:-1]]
            pooled += [_pool(pa, outs[-1]), _pool(pb, outs[-1])]
        g, gcache = _mlp_forward(batch.globals, p, "glob", 2, slope, False)
        feat = np.concatenate(pooled + [g], axis=1)
        logits, fcache = _mlp_forward(feat, p, "fc", len(cfg.hidden) + 1, slope, True)
        pred = expit(logits)
        if not keep_cache:
            return pred
        return pred, (att_caches, gcache, fcache, pred)

    def predict(self, batch: Batch) -> np.ndarray:
        return self.forward(batch)

    def backward(self, batch: Batch, cache, dpred) -> dict[str, np.ndarray]:
        cfg, p = self.config, self.params
        slope = cfg.slope
        att_caches, gcache, fcache, pred = cache
        grads: dict[str, np.ndarray] = {}
        dlogits = dpred * pred * (1.0 - pred)
        dfeat = _mlp_backward(dlogits, fcache, p, "fc", slope, True, grads)
        d = FEATURE_DIM
        dg = dfeat[:, -cfg.global_hidden:]
        _mlp_backward(dg, gcache, p, "glob", slope, False, grads)
        n = batch.num_nodes
        dys = [np.zeros((n, d)) for _ in range(cfg.layers)]
        if cfg.arch == "expectation":
            dys[-1] += _pool_t(batch.pools[0], dfeat[:, :d])
        else:
            pa, pb = batch.pools
            for l in range(cfg.layers - 1):
                dd = dfeat[:, l * d:(l + 1) * d]
                dys[l] += _pool_t(pa, dd) - _pool_t(pb, dd)
            o = (cfg.layers - 1) * d
            dys[-1] += _pool_t(pa, dfeat[:, o:o + d]) + _pool_t(pb, dfeat[:, o + d:o + 2 * d])
        dh = np.zeros((n, d))
        for l in reversed(range(cfg.layers)):
            dh = attention_backward(dh + dys[l], att_caches[l], p, l, cfg.heads, batch, slope, grads)
        return grads

    def loss_and_grads(self, batch: Batch, target: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
        pred, cache = self.forward(batch, keep_cache=True)
        target = np.asarray(target, dtype=float).reshape(pred.shape)
        loss, dpred = loss_mse(pred, target, with_grad=True)
        return loss, self.backward(batch, cache, dpred)


def loss_mse(pred, target, with_grad: bool = False):
    """Mean squared error over graphs (and outputs)."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float).reshape(pred.shape)
    diff = pred - target
    loss = float(np.mean(diff**2))
    if not with_grad:
        return loss
    return loss, 2.0 * diff / diff.size
