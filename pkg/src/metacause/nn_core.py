"""Dense-network substrate: parameters, forward/backward, Adam, FD checking.

Everything is float64 and pure: `adam_step` returns fresh parameter objects,
forward passes never mutate inputs, and a tape can be consumed exactly once.
The only architectures supported are stacks of affine layers with relu or
identity activations — that is all the models here need.

Checkpoints are JSON ("metacause-checkpoint-v1"): a flat list of named
tensors with shapes and row-major float64 values, plus a free-form metadata
object. Python's repr-based float serialization makes the round trip
lossless for finite values.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .autodiff import Var, backward, lift, relu
from .errors import ConfigError, NumericError, ShapeMismatchError, TapeReusedError
from .seeding import rng_from

CHECKPOINT_FORMAT = "metacause-checkpoint-v1"

_ACTIVATIONS = ("relu", "identity")


@dataclass
class ParamTensor:
    """A named float64 parameter array with a gradient slot."""

    name: str
    values: np.ndarray
    grad: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        else:
            self.grad = np.asarray(self.grad, dtype=np.float64)
        if self.grad.shape != self.values.shape:
            raise ShapeMismatchError(
                f"{self.name}: grad shape {self.grad.shape} != values shape {self.values.shape}"
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape


@dataclass(frozen=True)
class MLPConfig:
    """Widths input..output, one activation per affine layer, and an init seed."""

    layer_widths: tuple[int, ...]
    activations: tuple[str, ...] = ()
    init_seed: int = 0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ConfigError("layer_widths needs at least input and output")
        if any(w <= 0 for w in widths):
            raise ConfigError(f"zero or negative layer width in {widths}")
        acts = tuple(self.activations)
        if not acts:
            acts = ("relu",) * (len(widths) - 2) + ("identity",)
        object.__setattr__(self, "activations", acts)
        if len(acts) != len(widths) - 1:
            raise ConfigError("need one activation per affine layer")
        for a in acts:
            if a not in _ACTIVATIONS:
                raise ConfigError(f"unknown activation {a!r}")
        if acts[-1] != "identity":
            raise ConfigError("output layer activation must be identity")

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1


def mlp_init(config: MLPConfig, name_prefix: str = "") -> list[ParamTensor]:
    """Seeded init: weights uniform in ±sqrt(6/(fan_in+fan_out)), biases zero.

    Weights are stored (fan_in, fan_out) so application is ``x @ W + b``.
    """
    rng = rng_from(config.init_seed, "mlp_init", name_prefix)
    params: list[ParamTensor] = []
    for i in range(config.n_layers):
        fan_in, fan_out = config.layer_widths[i], config.layer_widths[i + 1]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        params.append(ParamTensor(f"{name_prefix}W{i}", w))
        params.append(ParamTensor(f"{name_prefix}b{i}", np.zeros(fan_out)))
    return params


def mlp_apply(params: Sequence[ParamTensor | Var], config: MLPConfig, x: Var) -> Var:
    """Graph-mode forward: builds the autodiff graph and returns the output Var.

    `params` may mix ParamTensors (wrapped as leaves) and live Vars; pass Vars
    when the caller wants gradients accumulated on shared leaves.
    """
    if len(params) != 2 * config.n_layers:
        raise ShapeMismatchError(
            f"expected {2 * config.n_layers} parameter tensors, got {len(params)}"
        )
    h = lift(x)
    if h.value.ndim != 2 or h.value.shape[1] != config.layer_widths[0]:
        raise ShapeMismatchError(
            f"input shape {h.value.shape} incompatible with first width "
            f"{config.layer_widths[0]}"
        )
    for i, act in enumerate(config.activations):
        w = params[2 * i]
        b = params[2 * i + 1]
        w = w if isinstance(w, Var) else Var(w.values)
        b = b if isinstance(b, Var) else Var(b.values)
        h = h @ w + b
        if act == "relu":
            h = relu(h)
    return h


class Tape:
    """Single-use record of a forward pass, for `backprop`."""

    def __init__(self, output: Var, param_vars: list[Var], input_var: Var):
        self.output = output
        self.param_vars = param_vars
        self.input_var = input_var
        self.consumed = False


def mlp_forward(
    params: Sequence[ParamTensor], config: MLPConfig, x: np.ndarray
) -> tuple[np.ndarray, Tape]:
    """Evaluate the network on a batch (rows = examples). Returns (output, tape)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    input_var = Var(x)
    param_vars = [Var(p.values) for p in params]
    out = mlp_apply(param_vars, config, input_var)
    return out.value, Tape(out, param_vars, input_var)


def backprop(tape: Tape, output_cotangent: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact reverse-mode gradients of output·cotangent.

    Returns (per-parameter gradients in `params` order, gradient w.r.t. input).
    A tape is consumable once; reuse raises.
    """
    if tape.consumed:
        raise TapeReusedError("tape already consumed; rerun the forward pass")
    tape.consumed = True
    backward(tape.output, np.asarray(output_cotangent, dtype=np.float64))
    grads = [
        pv.grad if pv.grad is not None else np.zeros_like(pv.value)
        for pv in tape.param_vars
    ]
    in_grad = (
        tape.input_var.grad
        if tape.input_var.grad is not None
        else np.zeros_like(tape.input_var.value)
    )
    return grads, in_grad


@dataclass(frozen=True)
class AdamState:
    """Immutable optimizer state; `adam_step` returns the successor state."""

    step_count: int
    first_moment: tuple[np.ndarray, ...]
    second_moment: tuple[np.ndarray, ...]
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigError("beta1/beta2 must lie in (0, 1)")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.step_count < 0:
            raise ConfigError("step_count must be non-negative")


def adam_init(params: Sequence[ParamTensor], lr: float = 0.01) -> AdamState:
    zeros = tuple(np.zeros_like(p.values) for p in params)
    return AdamState(0, zeros, tuple(np.zeros_like(p.values) for p in params), lr=lr)


def adam_step(
    params: Sequence[ParamTensor],
    gradients: Sequence[np.ndarray],
    state: AdamState,
) -> tuple[list[ParamTensor], AdamState]:
    """One Adam update with bias correction. Pure: inputs are untouched."""
    if len(params) != len(gradients) or len(params) != len(state.first_moment):
        raise ShapeMismatchError("params/gradients/state length mismatch")
    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    new_params: list[ParamTensor] = []
    new_m: list[np.ndarray] = []
    new_v: list[np.ndarray] = []
    for p, g, m, v in zip(params, gradients, state.first_moment, state.second_moment):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.values.shape:
            raise ShapeMismatchError(
                f"{p.name}: gradient shape {g.shape} != param shape {p.values.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {p.name}")
        m2 = b1 * m + (1.0 - b1) * g
        v2 = b2 * v + (1.0 - b2) * g * g
        m_hat = m2 / (1.0 - b1**t)
        v_hat = v2 / (1.0 - b2**t)
        step = state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
        new_params.append(ParamTensor(p.name, p.values - step))
        new_m.append(m2)
        new_v.append(v2)
    return new_params, replace(
        state, step_count=t, first_moment=tuple(new_m), second_moment=tuple(new_v)
    )


def finite_diff_check(
    loss_fn: Callable[[Sequence[ParamTensor]], tuple[float, Sequence[np.ndarray]]],
    params: Sequence[ParamTensor],
    eps: float = 1e-6,
    coordinate_limit: int | None = None,
    probe_seed: int = 0,
) -> float:
    """Max relative error between analytic gradients and central differences.

    `loss_fn` must be deterministic (freeze any RNG) and return
    ``(value, grads)``; only the value is used for the FD probes. With
    `coordinate_limit`, a seeded subsample of coordinates is probed instead
    of all of them. Relative error per coordinate:
    |analytic − fd| / (|analytic| + |fd| + 1e−12).
    """
    _, grads = loss_fn(params)
    if len(grads) != len(params):
        raise ShapeMismatchError("loss_fn returned wrong number of gradients")

    def value_at(vals: list[np.ndarray]) -> float:
        probe = [ParamTensor(p.name, v) for p, v in zip(params, vals)]
        out, _ = loss_fn(probe)
        return float(out)

    base = [p.values.copy() for p in params]
    coords = [
        (i, idx)
        for i, p in enumerate(params)
        for idx in np.ndindex(p.values.shape)
    ]
    if coordinate_limit is not None and coordinate_limit < len(coords):
        rng = rng_from(probe_seed, "finite_diff_check")
        pick = rng.choice(len(coords), size=coordinate_limit, replace=False)
        coords = [coords[int(j)] for j in pick]

    worst = 0.0
    for i, idx in coords:
        saved = base[i][idx]
        base[i][idx] = saved + eps
        f_plus = value_at(base)
        base[i][idx] = saved - eps
        f_minus = value_at(base)
        base[i][idx] = saved
        fd = (f_plus - f_minus) / (2.0 * eps)
        analytic = float(np.asarray(grads[i])[idx])
        err = abs(analytic - fd) / (abs(analytic) + abs(fd) + 1e-12)
        worst = max(worst, err)
    return worst


# -- checkpoints -----------------------------------------------------------


def config_digest(obj) -> str:
    """Stable hex digest of a config (dataclass or JSON-serializable)."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = dataclasses.asdict(obj)
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def save_checkpoint(path: str, params: Sequence[ParamTensor], metadata: dict) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "metadata": metadata,
        "tensors": [
            {
                "name": p.name,
                "shape": list(p.values.shape),
                "values": [float(v) for v in p.values.ravel()],
            }
            for p in params
        ],
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def load_checkpoint(path: str) -> tuple[list[ParamTensor], dict]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"not a {CHECKPOINT_FORMAT} file: {path}")
    params = [
        ParamTensor(
            t["name"],
            np.asarray(t["values"], dtype=np.float64).reshape(t["shape"]),
        )
        for t in doc["tensors"]
    ]
    return params, doc["metadata"]
