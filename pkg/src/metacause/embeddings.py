"""Dataset-feature extraction: conditional mean embeddings and DeepSets.

Two ways to summarize a dataset for the generator:

* CME — fit a ridge operator from cause features to effect features; each
  point x_j then gets a per-point feature vector (the embedded conditional).
  Features come from fixed random Fourier maps and are not trained.
* DeepSets — a small MLP applied to each (x, y) pair, averaged over the
  dataset into one global vector. Trained jointly with the generator.

The CME operator keeps two interchangeable forms: the primal ridge weight
obtained through the push-through identity (default, cheap in the feature
dimension) and the dual form that solves an n×n system (kept as an oracle;
the two agree to numerical precision because they use the same RFF kernel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Var, vmean
from .errors import ConfigError, NumericError, PreconditionError
from .kernels import RFFMap, make_rff_map, rff_features
from .nn_core import MLPConfig, ParamTensor, mlp_apply, mlp_init

DEFAULT_FEATURE_DIM = 100  # RFF features per variable
DEFAULT_LENGTHSCALE = 1.0
DEFAULT_RIDGE = 1.0
DEFAULT_DEEPSETS_DIM = 10


def default_cme_maps(seed: int = 0, n_features: int = DEFAULT_FEATURE_DIM) -> tuple[RFFMap, RFFMap]:
    """The fixed (cause, effect) feature maps used by the CME path."""
    rff_x = make_rff_map(1, n_features, DEFAULT_LENGTHSCALE, seed * 2 + 1)
    rff_y = make_rff_map(1, n_features, DEFAULT_LENGTHSCALE, seed * 2 + 2)
    return rff_x, rff_y


@dataclass
class CMEOperator:
    """Fitted conditional-mean-embedding operator for one dataset."""

    form: str  # "primal" or "dual"
    lam: float
    rff_x: RFFMap
    rff_y: RFFMap
    primal_weight: np.ndarray | None = None  # (D_y, D_x)
    dual_matrix: np.ndarray | None = None  # (K + lam I)^-1, (n, n)
    training_inputs: np.ndarray | None = None  # x values, dual form
    training_effect_features: np.ndarray | None = None  # z_y rows, dual form


def fit_cmeo(dataset, rff_x: RFFMap, rff_y: RFFMap, lam: float = DEFAULT_RIDGE,
             form: str = "primal") -> CMEOperator:
    """Ridge-fit the operator mapping cause features to effect features.

    `dataset` is anything with .x and .y vectors. The primal form inverts a
    D×D feature Gram (push-through identity); the dual form inverts the n×n
    kernel matrix built from the same RFF kernel.
    """
    x = np.asarray(dataset.x, dtype=np.float64).ravel()
    y = np.asarray(dataset.y, dtype=np.float64).ravel()
    if x.shape[0] < 2:
        raise PreconditionError("CME fit needs at least 2 points")
    if lam <= 0:
        raise PreconditionError("ridge parameter must be positive")
    zx = rff_features(x, rff_x)  # (n, D_x)
    zy = rff_features(y, rff_y)  # (n, D_y)
    if form == "primal":
        d = zx.shape[1]
        gram = zx.T @ zx + lam * np.eye(d)
        try:
            w = np.linalg.solve(gram, zx.T @ zy).T  # (D_y, D_x)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"primal CME solve failed: {exc}") from exc
        return CMEOperator("primal", float(lam), rff_x, rff_y, primal_weight=w)
    if form == "dual":
        n = x.shape[0]
        kmat = zx @ zx.T
        try:
            inv = np.linalg.inv(kmat + lam * np.eye(n))
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"dual CME solve failed: {exc}") from exc
        return CMEOperator(
            "dual", float(lam), rff_x, rff_y,
            dual_matrix=inv, training_inputs=x, training_effect_features=zy,
        )
    raise ConfigError(f"unknown CME form {form!r}")


def cme_embed(op: CMEOperator, x) -> np.ndarray:
    """Embedded conditional for query point(s) x: (D_y,) or (m, D_y)."""
    xa = np.asarray(x, dtype=np.float64)
    single = xa.ndim == 0
    xa = np.atleast_1d(xa).ravel()
    zq = rff_features(xa, op.rff_x)  # (m, D_x)
    if op.form == "primal":
        out = zq @ op.primal_weight.T
    else:
        ztr = rff_features(op.training_inputs, op.rff_x)  # (n, D_x)
        beta = op.dual_matrix @ (ztr @ zq.T)  # (n, m)
        out = beta.T @ op.training_effect_features  # (m, D_y)
    return out[0] if single else out


def cme_feature_matrix(op: CMEOperator, dataset) -> np.ndarray:
    """Per-point features for every x_j in the dataset, (m, D_y)."""
    return cme_embed(op, np.asarray(dataset.x, dtype=np.float64).ravel())


@dataclass
class DeepSetsEncoder:
    """Per-pair MLP plus mean pooling; output is one vector per dataset."""

    config: MLPConfig
    params: list[ParamTensor]

    @property
    def output_dim(self) -> int:
        return self.config.layer_widths[-1]


def make_deepsets_encoder(output_dim: int = DEFAULT_DEEPSETS_DIM, seed: int = 0,
                          hidden: tuple[int, int] = (40, 10)) -> DeepSetsEncoder:
    config = MLPConfig((2, hidden[0], hidden[1], output_dim), init_seed=seed)
    return DeepSetsEncoder(config, mlp_init(config, "encoder/"))


def deepsets_embed(encoder: DeepSetsEncoder, dataset) -> np.ndarray:
    """Mean over points of phi([x_j, y_j]); exactly permutation-invariant
    up to floating summation order."""
    x = np.asarray(dataset.x, dtype=np.float64).ravel()
    y = np.asarray(dataset.y, dtype=np.float64).ravel()
    if x.shape[0] < 1:
        raise PreconditionError("cannot embed an empty dataset")
    var = deepsets_embed_var([Var(p.values) for p in encoder.params],
                             encoder.config, np.stack([x, y], axis=1))
    return var.value.ravel()


def deepsets_embed_var(params: list[Var], config: MLPConfig, xy: np.ndarray) -> Var:
    """Graph-mode DeepSets embedding: (m, 2) pairs → (1, c) Var."""
    phi = mlp_apply(params, config, Var(xy))
    return vmean(phi, axis=0, keepdims=True)


@dataclass
class DatasetFeature:
    """Either one global vector (DeepSets) or one row per point (CME)."""

    kind: str  # "global" or "per_point"
    global_vec: np.ndarray | None = None
    per_point: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "global":
            if self.global_vec is None or self.per_point is not None:
                raise ConfigError("global feature must set global_vec only")
        elif self.kind == "per_point":
            if self.per_point is None or self.global_vec is not None:
                raise ConfigError("per-point feature must set per_point only")
        else:
            raise ConfigError(f"unknown feature kind {self.kind!r}")

    @property
    def dim(self) -> int:
        vec = self.global_vec if self.kind == "global" else self.per_point
        return vec.shape[-1]
