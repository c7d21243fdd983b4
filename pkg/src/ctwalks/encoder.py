"""Walk encoder: interleaved GRU updates and continuous-state integration.

Each anonymized walk is folded left to right: the hidden state is first
integrated over the elapsed time to the next step (an ODE flow with GRU-gate
structure), then updated discretely with the step's features.  Elapsed times
feed the solver through log10(dt + 1) and the flow is reparameterized onto
s in [0, 1], so one fixed-step fourth-order Runge-Kutta (3/8 rule) schedule
serves every interval.  Gradients are exact derivatives of the discretized
computation, written out by hand; no autograd is involved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class IntegrationDiverged(RuntimeError):
    """Hidden state left the finite range during integration."""


@dataclass(frozen=True)
class SolverConfig:
    step_size: float = 0.125
    log_time: bool = True

    def to_dict(self) -> dict:
        return {"step_size": self.step_size, "log_time": self.log_time}


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form: overflow-free and a single transcendental per element
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


@dataclass
class EncoderParams:
    """All trainable tensors.  Gate rows are stacked in z, r, h order."""

    gru_W: np.ndarray       # (3*d_h, d_h)   recurrent weights
    gru_U: np.ndarray       # (3*d_h, d_in)  input weights
    gru_b: np.ndarray       # (3*d_h,)
    ode_W: np.ndarray       # (3*d_h, d_h)
    ode_b: np.ndarray       # (3*d_h,)
    emb: np.ndarray         # (n_tokens, d_c) community embeddings, last row = pad
    mlp_W1: np.ndarray      # (d_h, d_h)
    mlp_b1: np.ndarray      # (d_h,)
    mlp_w2: np.ndarray      # (d_h,)
    mlp_b2: np.ndarray      # ()

    @property
    def d_h(self) -> int:
        return self.gru_W.shape[1]

    @property
    def d_in(self) -> int:
        return self.gru_U.shape[1]

    @property
    def d_c(self) -> int:
        return self.emb.shape[1]

    @property
    def n_tokens(self) -> int:
        return self.emb.shape[0]

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        return [(name, getattr(self, name)) for name in _TENSOR_ORDER]

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self.tensors()}

    def copy(self) -> "EncoderParams":
        return EncoderParams(**{name: arr.copy() for name, arr in self.tensors()})


_TENSOR_ORDER = (
    "gru_W", "gru_U", "gru_b", "ode_W", "ode_b",
    "emb", "mlp_W1", "mlp_b1", "mlp_w2", "mlp_b2",
)


def init_params(
    d_h: int, d_in: int, n_tokens: int, d_c: int, seed: int = 0
) -> EncoderParams:
    """Uniform [-1/sqrt(d_h), 1/sqrt(d_h)] weights, zero biases, seeded draws."""
    rng = np.random.Generator(np.random.PCG64(seed))
    s = 1.0 / np.sqrt(d_h)

    def u(*shape):
        return rng.uniform(-s, s, size=shape)

    return EncoderParams(
        gru_W=u(3 * d_h, d_h), gru_U=u(3 * d_h, d_in), gru_b=np.zeros(3 * d_h),
        ode_W=u(3 * d_h, d_h), ode_b=np.zeros(3 * d_h),
        emb=u(n_tokens, d_c),
        mlp_W1=u(d_h, d_h), mlp_b1=np.zeros(d_h),
        mlp_w2=u(d_h), mlp_b2=np.zeros(()),
    )


# ---------------------------------------------------------------- GRU update

def gru_update(h: np.ndarray, x: np.ndarray, params: EncoderParams) -> np.ndarray:
    """Standard GRU cell; accepts (d_h,) or (N, d_h) states."""
    out, _ = _gru_fwd(h, x, params)
    return out


def _gru_fwd(h, x, params):
    d = params.d_h
    a = h @ params.gru_W[: 2 * d].T + x @ params.gru_U[: 2 * d].T + params.gru_b[: 2 * d]
    zr = _sigmoid(a)
    z = zr[..., :d]
    r = zr[..., d:]
    rh = r * h
    ah = rh @ params.gru_W[2 * d:].T + x @ params.gru_U[2 * d:].T + params.gru_b[2 * d:]
    hh = np.tanh(ah)
    out = z * hh + (1.0 - z) * h
    return out, (h, x, z, r, rh, hh)


def _gru_bwd(cache, dout, params, grads):
    h, x, z, r, rh, hh = cache
    d = params.d_h
    dz = dout * (hh - h)
    dhh = dout * z
    dh = dout * (1.0 - z)
    dah = dhh * (1.0 - hh * hh)
    grads["gru_W"][2 * d:] += dah.T @ rh
    grads["gru_U"][2 * d:] += dah.T @ x
    grads["gru_b"][2 * d:] += dah.sum(axis=0)
    drh = dah @ params.gru_W[2 * d:]
    dr = drh * h
    dh += drh * r
    daz = dz * z * (1.0 - z)
    dar = dr * r * (1.0 - r)
    grads["gru_W"][:d] += daz.T @ h
    grads["gru_W"][d:2 * d] += dar.T @ h
    grads["gru_U"][:d] += daz.T @ x
    grads["gru_U"][d:2 * d] += dar.T @ x
    grads["gru_b"][:d] += daz.sum(axis=0)
    grads["gru_b"][d:2 * d] += dar.sum(axis=0)
    dh += daz @ params.gru_W[:d] + dar @ params.gru_W[d:2 * d]
    dx = dah @ params.gru_U[2 * d:] + daz @ params.gru_U[:d] + dar @ params.gru_U[d:2 * d]
    return dh, dx


# ------------------------------------------------------------------- ODE RHS

def ode_rhs(h: np.ndarray, params: EncoderParams) -> np.ndarray:
    """Gated drift f(h) = (1 - z) * (hh - h); bounded by 2 in sup norm."""
    d = params.d_h
    a = h @ params.ode_W[: 2 * d].T + params.ode_b[: 2 * d]
    zr = _sigmoid(a)
    z = zr[..., :d]
    r = zr[..., d:]
    ah = (r * h) @ params.ode_W[2 * d:].T + params.ode_b[2 * d:]
    hh = np.tanh(ah)
    return (1.0 - z) * (hh - h)


def _rhs_bwd(y, g, params, grads):
    """VJP of ode_rhs at y with upstream g; gate values are recomputed."""
    d = params.d_h
    a = y @ params.ode_W[: 2 * d].T + params.ode_b[: 2 * d]
    zr = _sigmoid(a)
    z = zr[..., :d]
    r = zr[..., d:]
    ry = r * y
    ah = ry @ params.ode_W[2 * d:].T + params.ode_b[2 * d:]
    hh = np.tanh(ah)
    dz = -g * (hh - y)
    dhh = g * (1.0 - z)
    dy = -g * (1.0 - z)
    dah = dhh * (1.0 - hh * hh)
    grads["ode_W"][2 * d:] += dah.T @ ry
    grads["ode_b"][2 * d:] += dah.sum(axis=0)
    dry = dah @ params.ode_W[2 * d:]
    dr = dry * y
    dy += dry * r
    daz = dz * z * (1.0 - z)
    dar = dr * r * (1.0 - r)
    grads["ode_W"][:d] += daz.T @ y
    grads["ode_W"][d:2 * d] += dar.T @ y
    grads["ode_b"][:d] += daz.sum(axis=0)
    grads["ode_b"][d:2 * d] += dar.sum(axis=0)
    dy += daz @ params.ode_W[:d] + dar @ params.ode_W[d:2 * d]
    return dy


# ------------------------------------------------------------ RK 3/8 solver

_A21 = 1.0 / 3.0
_B = (1.0 / 8.0, 3.0 / 8.0, 3.0 / 8.0, 1.0 / 8.0)


def rk38_step(f, h, s):
    """One explicit step of the 3/8-rule Runge-Kutta scheme, step size s."""
    k1 = f(h)
    k2 = f(h + (s * _A21) * k1)
    k3 = f(h + s * (-_A21 * k1 + k2))
    k4 = f(h + s * (k1 - k2 + k3))
    out = h + (s / 8.0) * (k1 + 3.0 * (k2 + k3) + k4)
    return out, (h, k1, k2, k3, k4)


def rk38_solve(f, h0, n_steps: int, step_size: float, keep_cache: bool = False):
    """Integrate dh/ds = f(h) over n_steps fixed steps; optionally keep stages."""
    h = h0
    cache = [] if keep_cache else None
    for _ in range(n_steps):
        h, stages = rk38_step(f, h, step_size)
        if keep_cache:
            cache.append(stages)
    return h, cache


def transform_interval(dt, log_time: bool):
    """Raw elapsed time to solver scale: log10(dt + 1) when enabled."""
    dt = np.asarray(dt, dtype=np.float64)
    return np.log10(dt + 1.0) if log_time else dt


def integrate(
    h: np.ndarray, dt, params: EncoderParams, solver: SolverConfig
) -> np.ndarray:
    """Flow h along the ODE for elapsed time dt (scalar or per-row array).

    The interval is reparameterized to s in [0, 1]: the RHS is scaled by the
    transformed interval and stepped with the configured fixed step.  A zero
    interval returns the state unchanged, bit for bit.
    """
    out, _ = _integrate_fwd(h, dt, params, solver, keep_cache=False)
    return out


def _integrate_fwd(h, dt, params, solver, keep_cache):
    single = h.ndim == 1
    hb = h[None, :] if single else h
    n_rows = hb.shape[0]
    dt_arr = np.broadcast_to(np.asarray(dt, dtype=np.float64), (n_rows,))
    active = dt_arr != 0.0
    if not active.any():
        return (h.copy() if not single else h.copy()), (None, None, None)
    scale = transform_interval(dt_arr[active], solver.log_time)[:, None]
    n_steps = max(1, int(round(1.0 / solver.step_size)))
    sub = hb[active]

    def f(y):
        return ode_rhs(y, params) * scale

    end, cache = rk38_solve(f, sub, n_steps, solver.step_size, keep_cache=keep_cache)
    if not np.all(np.isfinite(end)):
        raise IntegrationDiverged("non-finite hidden state during integration")
    out = hb.copy()
    out[active] = end
    return (out[0] if single else out), (active, scale, cache)


def _integrate_bwd(ctx, dout, params, grads, solver):
    active, scale, cache = ctx
    if active is None:
        return dout.copy()
    s = solver.step_size
    dh_full = dout.copy()
    dh = dout[active]
    for h, k1, k2, k3, k4 in reversed(cache):
        dk1 = (s / 8.0) * dh
        dk2 = (3.0 * s / 8.0) * dh
        dk3 = (3.0 * s / 8.0) * dh
        dk4 = (s / 8.0) * dh
        y4 = h + s * (k1 - k2 + k3)
        dy4 = _rhs_bwd(y4, dk4 * scale, params, grads)
        dh = dh + dy4
        dk1 += s * dy4
        dk2 -= s * dy4
        dk3 += s * dy4
        y3 = h + s * (-_A21 * k1 + k2)
        dy3 = _rhs_bwd(y3, dk3 * scale, params, grads)
        dh = dh + dy3
        dk1 -= (s * _A21) * dy3
        dk2 += s * dy3
        y2 = h + (s * _A21) * k1
        dy2 = _rhs_bwd(y2, dk2 * scale, params, grads)
        dh = dh + dy2
        dk1 += (s * _A21) * dy2
        dy1 = _rhs_bwd(h, dk1 * scale, params, grads)
        dh = dh + dy1
    dh_full[active] = dh
    return dh_full


# ------------------------------------------------------------ walk encoding

def build_features(
    cs: np.ndarray, ct: np.ndarray, tok_u: np.ndarray, tok_v: np.ndarray,
    params: EncoderParams, extra: np.ndarray | None = None,
    use_labels: bool = True,
) -> np.ndarray:
    """Per-step input [counts_src | emb(C_u) | counts_tgt | emb(C_v) | extra].

    ``cs``/``ct`` are (N, l, l) count blocks, ``tok_u``/``tok_v`` (N, l)
    community tokens; ``extra`` appends attribute columns.  With
    ``use_labels`` off the embedding columns are omitted entirely.
    """
    parts = [cs]
    if use_labels:
        parts.append(params.emb[tok_u])
    parts.append(ct)
    if use_labels:
        parts.append(params.emb[tok_v])
    if extra is not None:
        parts.append(extra)
    return np.concatenate(parts, axis=-1)


def feature_width(length: int, d_c: int, extra_width: int = 0, use_labels: bool = True) -> int:
    return 2 * length + (2 * d_c if use_labels else 0) + extra_width


@dataclass
class ForwardCache:
    gru: list = field(default_factory=list)
    rk: list = field(default_factory=list)
    feats: np.ndarray | None = None
    pool: tuple | None = None
    no_continuous: bool = False


def forward_walks(
    params: EncoderParams,
    solver: SolverConfig,
    feats: np.ndarray,          # (N, l, d_in)
    dts: np.ndarray,            # (N, l-1) elapsed times between steps
    no_continuous: bool = False,
    keep_cache: bool = False,
) -> tuple[np.ndarray, ForwardCache]:
    """Encode N walks in lockstep; returns final states (N, d_h)."""
    n, length, _ = feats.shape
    cache = ForwardCache(feats=feats, no_continuous=no_continuous)
    h = np.zeros((n, params.d_h))
    for i in range(length):
        if i > 0:
            if no_continuous:
                cache.rk.append(None)
            else:
                h, ctx = _integrate_fwd(h, dts[:, i - 1], params, solver, keep_cache=keep_cache)
                cache.rk.append(ctx)
        out, gctx = _gru_fwd(h, feats[:, i], params)
        if keep_cache:
            cache.gru.append(gctx)
        h = out
    return h, cache


def encode_walk(
    walk, params: EncoderParams, solver: SolverConfig, no_continuous: bool = False
) -> np.ndarray:
    """Final hidden state of one anonymized walk (rep steps plus elapsed times)."""
    cs = np.stack([r.source_counts for r in walk.reps]).astype(np.float64)[None]
    ct = np.stack([r.target_counts for r in walk.reps]).astype(np.float64)[None]
    tok_u = np.asarray([[r.source_community for r in walk.reps]], dtype=np.int64)
    tok_v = np.asarray([[r.target_community for r in walk.reps]], dtype=np.int64)
    feats = build_features(cs, ct, tok_u, tok_v, params)
    dts = np.abs(walk.times[:-1] - walk.times[1:])[None]
    enc, _ = forward_walks(params, solver, feats, dts, no_continuous=no_continuous)
    return enc[0]


def pool_and_score(
    encodings: np.ndarray, params: EncoderParams, group_size: int | None = None
):
    """Mean-pool walk encodings per interaction, then MLP -> sigmoid.

    ``encodings`` is (N, d_h); ``group_size`` walks form one interaction
    (default: all of them).  Returns probabilities (B,) and a cache.
    """
    n = encodings.shape[0]
    g = group_size or n
    if n % g:
        raise ValueError(f"{n} encodings do not divide into groups of {g}")
    pooled = encodings.reshape(n // g, g, -1).mean(axis=1)
    a1 = pooled @ params.mlp_W1.T + params.mlp_b1
    h1 = np.maximum(a1, 0.0)
    logit = h1 @ params.mlp_w2 + params.mlp_b2
    prob = _sigmoid(logit)
    return prob, (pooled, a1, h1, logit, g)


def score_backward(pool_cache, dlogit, params, grads):
    """Backprop of pool_and_score; returns gradient on the walk encodings."""
    pooled, a1, h1, _, g = pool_cache
    grads["mlp_w2"] += h1.T @ dlogit
    grads["mlp_b2"] += dlogit.sum()
    dh1 = np.outer(dlogit, params.mlp_w2)
    da1 = dh1 * (a1 > 0)
    grads["mlp_W1"] += da1.T @ pooled
    grads["mlp_b1"] += da1.sum(axis=0)
    dpooled = da1 @ params.mlp_W1
    denc = np.repeat(dpooled, g, axis=0) / g
    return denc


def backward_walks(
    params: EncoderParams,
    solver: SolverConfig,
    cache: ForwardCache,
    denc: np.ndarray,
    grads: dict[str, np.ndarray],
) -> np.ndarray:
    """Backprop through the GRU/integration chain; returns d(features)."""
    feats = cache.feats
    n, length, d_in = feats.shape
    dfeats = np.zeros_like(feats)
    dh = denc
    for i in reversed(range(length)):
        dh, dx = _gru_bwd(cache.gru[i], dh, params, grads)
        dfeats[:, i] = dx
        if i > 0 and not cache.no_continuous:
            dh = _integrate_bwd(cache.rk[i - 1], dh, params, grads, solver)
    return dfeats


def scatter_label_grads(
    dfeats: np.ndarray, tok_u: np.ndarray, tok_v: np.ndarray,
    length: int, d_c: int, grads: dict[str, np.ndarray],
) -> None:
    """Accumulate embedding-table gradients from the feature gradient blocks."""
    du = dfeats[:, :, length: length + d_c]
    dv = dfeats[:, :, 2 * length + d_c: 2 * length + 2 * d_c]
    np.add.at(grads["emb"], tok_u.reshape(-1), du.reshape(-1, d_c))
    np.add.at(grads["emb"], tok_v.reshape(-1), dv.reshape(-1, d_c))


# ------------------------------------------------------------- persistence

_CKPT_MAGIC = "ctwalks-checkpoint-v1"


def save_checkpoint(
    params: EncoderParams, solver: SolverConfig, path: str | Path,
    meta: dict | None = None,
) -> None:
    """Header JSON line with shapes and config, then raw little-endian float64."""
    header = {
        "magic": _CKPT_MAGIC,
        "solver": solver.to_dict(),
        "tensors": [{"name": n, "shape": list(a.shape)} for n, a in params.tensors()],
        "meta": meta or {},
    }
    payload = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for _, a in params.tensors()
    )
    with Path(path).open("wb") as fh:
        fh.write(json.dumps(header).encode() + b"\n")
        fh.write(payload)


def load_checkpoint(path: str | Path) -> tuple[EncoderParams, SolverConfig, dict]:
    with Path(path).open("rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("magic") != _CKPT_MAGIC:
            raise ValueError(f"{path} is not a checkpoint file")
        blob = fh.read()
    fields = {}
    off = 0
    for spec in header["tensors"]:
        size = int(np.prod(spec["shape"])) if spec["shape"] else 1
        arr = np.frombuffer(blob, dtype="<f8", count=size, offset=off).reshape(spec["shape"])
        fields[spec["name"]] = arr.astype(np.float64)
        off += size * 8
    params = EncoderParams(**fields)
    solver = SolverConfig(**header["solver"])
    return params, solver, header.get("meta", {})
