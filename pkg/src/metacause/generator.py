"""The adaptive generative model: ŷ = decoder(x, w) conditioned on a dataset.

The conditioning feature C (global DeepSets vector or per-point CME rows)
feeds two small heads:

* an amortization net emitting (μ, σ_raw); the latent is w = μ + softplus(σ_raw)·z
  with z ~ N(0, 1), one-dimensional per point;
* a FiLM net emitting per-unit (shift β, scale γ) applied to the decoder's
  single hidden layer *pre-activation*: relu(β + γ∘(affine(x, w))).

Variants: "full" (everything), "no_film" (identity modulation, amortizer
kept) and "naive_joint" (bare decoder on (x, z); no conditioning at all).

`generate_graph` builds the autodiff graph — training and inference share
this one code path, so scored values are exactly what the loss saw.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Var, concat_cols, cols, relu, softplus
from .embeddings import (
    DatasetFeature,
    DeepSetsEncoder,
    cme_feature_matrix,
    default_cme_maps,
    deepsets_embed,
    deepsets_embed_var,
    fit_cmeo,
    make_deepsets_encoder,
)
from .errors import ConfigError, PreconditionError, ShapeMismatchError
from .kernels import RFFMap
from .nn_core import (
    MLPConfig,
    ParamTensor,
    load_checkpoint,
    mlp_apply,
    mlp_forward,
    mlp_init,
    save_checkpoint,
)
from .seeding import derive_seed, rng_from

VARIANTS = ("full", "no_film", "naive_joint")
ENCODER_KINDS = ("deepsets", "cme")


@dataclass
class FiLMNet:
    """Maps a feature vector to concatenated (shift, scale) for the decoder."""

    config: MLPConfig
    params: list[ParamTensor]

    def __post_init__(self):
        if self.config.layer_widths[-1] % 2 != 0:
            raise ConfigError("FiLM output must split into equal (shift, scale) halves")

    @property
    def target_width(self) -> int:
        return self.config.layer_widths[-1] // 2


@dataclass
class AmortizationNet:
    """Maps a feature vector to (mean, raw scale) of the latent distribution."""

    config: MLPConfig
    params: list[ParamTensor]

    def __post_init__(self):
        if self.config.layer_widths[-1] != 2:
            raise ConfigError("amortizer must output exactly (mu, sigma_raw)")


@dataclass
class GeneratorModel:
    variant: str
    encoder_kind: str
    decoder_config: MLPConfig
    decoder_params: list[ParamTensor]
    encoder: DeepSetsEncoder | None = None
    film: FiLMNet | None = None
    amortizer: AmortizationNet | None = None
    cme_rff_x: RFFMap | None = None
    cme_rff_y: RFFMap | None = None
    cme_lam: float = 1.0
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.encoder_kind not in ENCODER_KINDS:
            raise ConfigError(f"unknown encoder kind {self.encoder_kind!r}")
        if self.decoder_config.n_layers != 2:
            raise ConfigError("decoder must have exactly one hidden layer")

    @property
    def decoder_hidden(self) -> int:
        return self.decoder_config.layer_widths[1]

    @property
    def feature_dim(self) -> int:
        if self.encoder_kind == "deepsets":
            return self.encoder.output_dim
        return self.cme_rff_y.n_features


def component_order(model: GeneratorModel) -> list[str]:
    """Fixed ordering of trainable components, for optimizers and I/O."""
    order = []
    if model.variant != "naive_joint":
        if model.encoder_kind == "deepsets":
            order.append("encoder")
        if model.variant == "full" and model.film is not None:
            order.append("film")
        order.append("amortizer")
    order.append("decoder")
    return order


def get_params(model: GeneratorModel) -> dict[str, list[ParamTensor]]:
    out = {}
    for name in component_order(model):
        if name == "encoder":
            out[name] = model.encoder.params
        elif name == "film":
            out[name] = model.film.params
        elif name == "amortizer":
            out[name] = model.amortizer.params
        else:
            out[name] = model.decoder_params
    return out


def set_params(model: GeneratorModel, new: dict[str, list[ParamTensor]]) -> None:
    for name, tensors in new.items():
        if name == "encoder":
            model.encoder.params = tensors
        elif name == "film":
            model.film.params = tensors
        elif name == "amortizer":
            model.amortizer.params = tensors
        elif name == "decoder":
            model.decoder_params = tensors
        else:
            raise ConfigError(f"unknown component {name!r}")


def make_generator_model(
    variant: str = "full",
    encoder_kind: str = "deepsets",
    decoder_hidden: int = 40,
    seed: int = 0,
    deepsets_dim: int = 10,
    cme_features: int = 100,
    cme_lam: float = 1.0,
) -> GeneratorModel:
    """Fresh model with all component nets initialized from derived seeds."""
    if decoder_hidden < 1:
        raise ConfigError("decoder_hidden must be positive")
    dec_cfg = MLPConfig((2, decoder_hidden, 1), init_seed=derive_seed(seed, "decoder"))
    model = GeneratorModel(
        variant=variant,
        encoder_kind=encoder_kind,
        decoder_config=dec_cfg,
        decoder_params=mlp_init(dec_cfg, "decoder/"),
        seed=seed,
    )
    if variant == "naive_joint":
        return model
    if encoder_kind == "deepsets":
        model.encoder = make_deepsets_encoder(deepsets_dim, seed=derive_seed(seed, "encoder"))
        fd = deepsets_dim
    else:
        model.cme_rff_x, model.cme_rff_y = default_cme_maps(
            derive_seed(seed, "cme"), n_features=cme_features
        )
        model.cme_lam = float(cme_lam)
        fd = cme_features
    if variant == "full":
        film_cfg = MLPConfig((fd, 40, 40, 2 * decoder_hidden), init_seed=derive_seed(seed, "film"))
        film_params = mlp_init(film_cfg, "film/")
        # Start modulation at identity (shift 0, scale 1): with the default
        # zero-bias init the scale half would sit near 0 and gate off the
        # decoder's input pathway, crippling early training.
        film_params[-1].values[decoder_hidden:] = 1.0
        model.film = FiLMNet(film_cfg, film_params)
    am_cfg = MLPConfig((fd, 40, 20, 2), init_seed=derive_seed(seed, "amortizer"))
    model.amortizer = AmortizationNet(am_cfg, mlp_init(am_cfg, "amortizer/"))
    return model


# -- the three conditioning primitives (value level) -------------------------


def film_modulate(film: FiLMNet, feature, hidden_preactivation):
    """β + γ∘l where (β, γ) = film(feature); applied before the nonlinearity."""
    c = np.atleast_2d(np.asarray(feature, dtype=np.float64))
    out, _ = mlp_forward(film.params, film.config, c)
    h = film.target_width
    beta, gamma = out[:, :h], out[:, h:]
    pre = np.asarray(hidden_preactivation, dtype=np.float64)
    flat = pre.ndim == 1
    pre2 = np.atleast_2d(pre)
    if pre2.shape[1] != h:
        raise ShapeMismatchError(
            f"hidden width {pre2.shape[1]} != FiLM target width {h}"
        )
    mod = beta + gamma * pre2
    return mod.ravel() if flat and mod.shape[0] == 1 else mod


def amortize_params(amortizer: AmortizationNet, feature) -> tuple[np.ndarray, np.ndarray]:
    """(μ, σ) with σ = softplus(raw) — strictly positive by construction."""
    c = np.atleast_2d(np.asarray(feature, dtype=np.float64))
    out, _ = mlp_forward(amortizer.params, amortizer.config, c)
    return out[:, 0], np.logaddexp(0.0, out[:, 1])


def amortize_latent(amortizer: AmortizationNet, feature, z):
    """w = μ(C) + σ(C)·z for noise draw(s) z."""
    mu, sigma = amortize_params(amortizer, feature)
    w = mu + sigma * np.asarray(z, dtype=np.float64)
    return float(w[0]) if w.size == 1 and np.ndim(z) == 0 else w


# -- dataset conditioning ----------------------------------------------------


def dataset_feature(model: GeneratorModel, dataset) -> DatasetFeature:
    """Compute the conditioning feature the model's encoder kind prescribes."""
    if model.variant == "naive_joint":
        raise ConfigError("naive_joint models are unconditioned")
    if model.encoder_kind == "deepsets":
        return DatasetFeature("global", global_vec=deepsets_embed(model.encoder, dataset))
    op = fit_cmeo(dataset, model.cme_rff_x, model.cme_rff_y, model.cme_lam)
    return DatasetFeature("per_point", per_point=cme_feature_matrix(op, dataset))


def generate_graph(
    model: GeneratorModel,
    pvars: dict[str, list[Var]],
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    cme_feature: np.ndarray | None = None,
) -> Var:
    """Differentiable generation: returns ŷ as an (m, 1) Var.

    `pvars` holds one Var per ParamTensor, keyed by component. For the CME
    path callers should pass the precomputed per-point feature matrix
    (non-trainable); it is fit from the dataset itself otherwise.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    z = np.asarray(z, dtype=np.float64).ravel()
    m = x.shape[0]
    if m < 1:
        raise PreconditionError("cannot generate for an empty dataset")
    if z.shape[0] != m:
        raise ShapeMismatchError(f"noise length {z.shape[0]} != dataset size {m}")

    feature_var: Var | None = None
    if model.variant == "naive_joint":
        w = Var(z[:, None])
    else:
        if model.encoder_kind == "deepsets":
            y = np.asarray(y, dtype=np.float64).ravel()
            feature_var = deepsets_embed_var(
                pvars["encoder"], model.encoder.config, np.stack([x, y], axis=1)
            )  # (1, c)
        else:
            feats = cme_feature
            if feats is None:
                feats = dataset_feature(
                    model, type("D", (), {"x": x, "y": y})()
                ).per_point
            feats = np.asarray(feats, dtype=np.float64)
            if feats.ndim != 2 or feats.shape[0] != m:
                raise ConfigError(
                    f"per-point feature shape {feats.shape} does not match dataset size {m}"
                )
            feature_var = Var(feats)  # (m, D_y), constant
        am = mlp_apply(pvars["amortizer"], model.amortizer.config, feature_var)
        mu = cols(am, 0, 1)
        sigma = softplus(cols(am, 1, 2))
        w = mu + sigma * Var(z[:, None])

    dec = pvars["decoder"]
    inp = concat_cols([Var(x[:, None]), w])
    pre = inp @ dec[0] + dec[1]
    if model.variant == "full" and model.film is not None:
        film_out = mlp_apply(pvars["film"], model.film.config, feature_var)
        h = model.film.target_width
        if h != model.decoder_hidden:
            raise ShapeMismatchError(
                f"FiLM width {h} != decoder hidden width {model.decoder_hidden}"
            )
        pre = cols(film_out, 0, h) + cols(film_out, h, 2 * h) * pre
    hidden = relu(pre)
    return hidden @ dec[2] + dec[3]


def const_param_vars(model: GeneratorModel) -> dict[str, list[Var]]:
    return {
        name: [Var(p.values) for p in tensors]
        for name, tensors in get_params(model).items()
    }


def generate(model: GeneratorModel, dataset, noise_seed: int) -> np.ndarray:
    """Sample one synthetic effect vector ŷ for the dataset; deterministic
    per noise_seed. Uses the same graph as training."""
    x = np.asarray(dataset.x, dtype=np.float64).ravel()
    y = np.asarray(dataset.y, dtype=np.float64).ravel()
    z = rng_from(noise_seed, "gen-z").standard_normal(x.shape[0])
    feats = None
    if model.variant != "naive_joint" and model.encoder_kind == "cme":
        feats = dataset_feature(model, dataset).per_point
    out = generate_graph(model, const_param_vars(model), x, y, z, cme_feature=feats)
    return out.value.ravel()


# -- persistence -------------------------------------------------------------


def save_model(path: str, model: GeneratorModel, extra_metadata: dict | None = None) -> None:
    tensors: list[ParamTensor] = []
    for name in component_order(model):
        tensors.extend(get_params(model)[name])
    metadata = {
        "kind": "generator-model",
        "variant": model.variant,
        "encoder_kind": model.encoder_kind,
        "decoder_hidden": model.decoder_hidden,
        "seed": model.seed,
        "deepsets_dim": model.encoder.output_dim
        if model.encoder is not None
        else None,
        "cme": None
        if model.cme_rff_x is None
        else {
            "n_features": model.cme_rff_x.n_features,
            "lengthscale": model.cme_rff_x.lengthscale,
            "seed_x": model.cme_rff_x.seed,
            "seed_y": model.cme_rff_y.seed,
            "lam": model.cme_lam,
        },
    }
    if extra_metadata:
        metadata.update(extra_metadata)
    save_checkpoint(path, tensors, metadata)


def load_model(path: str) -> GeneratorModel:
    tensors, meta = load_checkpoint(path)
    if meta.get("kind") != "generator-model":
        raise ConfigError(f"{path} is not a generator-model checkpoint")
    model = make_generator_model(
        variant=meta["variant"],
        encoder_kind=meta["encoder_kind"],
        decoder_hidden=meta["decoder_hidden"],
        seed=meta["seed"],
        deepsets_dim=meta.get("deepsets_dim") or 10,
        cme_features=(meta.get("cme") or {}).get("n_features", 100),
        cme_lam=(meta.get("cme") or {}).get("lam", 1.0),
    )
    by_name = {t.name: t for t in tensors}
    for name, tensors_ in get_params(model).items():
        replaced = []
        for p in tensors_:
            if p.name not in by_name:
                raise ConfigError(f"checkpoint missing tensor {p.name}")
            stored = by_name[p.name]
            if stored.values.shape != p.values.shape:
                raise ShapeMismatchError(
                    f"{p.name}: checkpoint shape {stored.values.shape} != model {p.values.shape}"
                )
            replaced.append(stored)
        set_params(model, {name: replaced})
    model.meta = dict(meta)
    return model
