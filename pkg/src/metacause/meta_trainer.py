"""Joint training across the cause-effect database and direction inference.

One model is fit to *all* training pairs at once: each step draws a
mini-batch of datasets, generates ŷ for every dataset conditioned on that
dataset's own feature, and descends the summed MMD² between each real joint
(x, y) and its generated counterpart (x, ŷ). Noise is redrawn every epoch;
dataset order is reshuffled every epoch; everything is keyed off run_seed,
so a run is reproducible bit-for-bit.

Direction inference compares the fit of both orientations: score s =
MMD²(y→x fit) − MMD²(x→y fit), predicting x→y when s > 0. Both directions
consume the same noise seed, which makes the score exactly antisymmetric
under swapping the dataset. Ensembles average the two MMD values across
runs before applying the rule — not the per-run decisions.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .autodiff import Var, backward
from .datagen import CEDatabase, PairDataset, swap_pair
from .errors import ConfigError, NumericError, PreconditionError
from .generator import (
    GeneratorModel,
    component_order,
    generate,
    generate_graph,
    get_params,
    make_generator_model,
    save_model,
    set_params,
)
from .kernels import (
    BandwidthSet,
    JointMMDCache,
    LinearMMDCache,
    joint_mmd2,
    joint_mmd2_linear,
    mmd2_unbiased,
    rff_maps_for_bandwidths,
)
from .nn_core import adam_init, adam_step
from .seeding import derive_seed, rng_from


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    batch_datasets: int = 10  # datasets per optimization step
    lr: float = 0.01
    bandwidths: BandwidthSet = field(default_factory=BandwidthSet)
    ensemble_size: int = 4
    encoder_kind: str = "deepsets"
    decoder_hidden: int = 40
    master_seed: int = 0
    loss_kind: str = "quadratic"  # "quadratic" (exact MMD) or "linear" (RFF means)
    rff_loss_features: int = 100
    deepsets_dim: int = 10
    cme_features: int = 100
    cme_lam: float = 1.0
    checkpoint_every: int = 0
    checkpoint_dir: str | None = None
    log_path: str | None = None

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be ≥ 0")  # 0 = untrained (init only)
        if min(self.batch_datasets, self.ensemble_size) < 1:
            raise ConfigError("batch_datasets and ensemble_size must be ≥ 1")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.loss_kind not in ("quadratic", "linear"):
            raise ConfigError(f"unknown loss_kind {self.loss_kind!r}")
        if self.encoder_kind not in ("deepsets", "cme"):
            raise ConfigError(f"unknown encoder_kind {self.encoder_kind!r}")
        if self.decoder_hidden < 1:
            raise ConfigError("decoder_hidden must be ≥ 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["bandwidths"] = list(self.bandwidths.etas)
        return d


@dataclass(frozen=True)
class DirectionScore:
    m_xy: float
    m_yx: float

    @property
    def s(self) -> float:
        return self.m_yx - self.m_xy

    @property
    def predicted(self) -> str:
        if self.s > 0:
            return "x_to_y"
        if self.s < 0:
            return "y_to_x"
        return "tie"


def _check_standardized(db: CEDatabase) -> None:
    for i, ds in enumerate(db.datasets):
        for name, v in (("x", ds.x), ("y", ds.y)):
            if abs(float(v.mean())) > 1e-6 or abs(float(v.std()) - 1.0) > 1e-6:
                raise PreconditionError(
                    f"dataset {ds.name or i} is not standardized ({name}: "
                    f"mean {v.mean():.3g}, std {v.std():.3g})"
                )


def train(
    db: CEDatabase,
    config: TrainConfig,
    run_seed: int,
    variant: str = "full",
) -> GeneratorModel:
    """Fit one model over the whole database; deterministic per run_seed."""
    if len(db) == 0:
        raise PreconditionError("training database is empty")
    _check_standardized(db)

    model = make_generator_model(
        variant=variant,
        encoder_kind=config.encoder_kind,
        decoder_hidden=config.decoder_hidden,
        seed=derive_seed(run_seed, "init"),
        deepsets_dim=config.deepsets_dim,
        cme_features=config.cme_features,
        cme_lam=config.cme_lam,
    )

    if config.loss_kind == "quadratic":
        caches = [JointMMDCache(ds.x, ds.y, config.bandwidths.etas) for ds in db.datasets]
        loss_op = joint_mmd2
    else:
        maps = rff_maps_for_bandwidths(
            2, config.rff_loss_features, config.bandwidths,
            seed=derive_seed(run_seed, "loss-rff"),
        )
        caches = [LinearMMDCache(ds.x, ds.y, maps) for ds in db.datasets]
        loss_op = joint_mmd2_linear

    cme_feats = None
    if variant != "naive_joint" and config.encoder_kind == "cme":
        from .generator import dataset_feature

        cme_feats = [dataset_feature(model, ds).per_point for ds in db.datasets]

    order_names = component_order(model)
    flat_params = []
    for name in order_names:
        flat_params.extend(get_params(model)[name])
    opt_state = adam_init(flat_params, lr=config.lr)

    n = len(db)
    q = min(config.batch_datasets, n)
    history: list[float] = []
    log_fh = open(config.log_path, "a") if config.log_path else None
    try:
        for epoch in range(config.epochs):
            perm = rng_from(run_seed, "shuffle", epoch).permutation(n)
            epoch_losses = np.zeros(n)
            for start in range(0, n, q):
                batch = perm[start : start + q]
                pvars = [Var(p.values) for p in flat_params]
                pdict: dict[str, list[Var]] = {}
                k = 0
                for name in order_names:
                    cnt = len(get_params(model)[name])
                    pdict[name] = pvars[k : k + cnt]
                    k += cnt
                total = None
                for i in batch:
                    ds = db.datasets[i]
                    z = rng_from(run_seed, "noise", epoch, int(i)).standard_normal(ds.m)
                    y_hat = generate_graph(
                        model, pdict, ds.x, ds.y, z,
                        cme_feature=None if cme_feats is None else cme_feats[i],
                    )
                    term = loss_op(caches[i], y_hat)
                    epoch_losses[i] = term.value
                    total = term if total is None else total + term
                if not np.isfinite(total.value):
                    bad = [int(i) for i in batch if not np.isfinite(epoch_losses[i])]
                    raise NumericError(
                        f"non-finite loss at epoch {epoch}, dataset indices {bad}"
                    )
                backward(total)
                grads = [
                    pv.grad if pv.grad is not None else np.zeros_like(pv.value)
                    for pv in pvars
                ]
                try:
                    flat_params, opt_state = adam_step(flat_params, grads, opt_state)
                except NumericError as exc:
                    raise NumericError(f"epoch {epoch}: {exc}") from exc
                k = 0
                for name in order_names:
                    cnt = len(get_params(model)[name])
                    set_params(model, {name: flat_params[k : k + cnt]})
                    k += cnt
            for p in flat_params:
                if not np.all(np.isfinite(p.values)):
                    raise NumericError(f"non-finite parameter {p.name} after epoch {epoch}")
            mean_loss = float(epoch_losses.mean())
            history.append(mean_loss)
            if log_fh is not None:
                log_fh.write(json.dumps({"epoch": epoch, "mean_loss": mean_loss,
                                         "run_seed": int(run_seed)}) + "\n")
                log_fh.flush()
            if (
                config.checkpoint_every > 0
                and config.checkpoint_dir
                and (epoch + 1) % config.checkpoint_every == 0
            ):
                os.makedirs(config.checkpoint_dir, exist_ok=True)
                save_model(
                    os.path.join(
                        config.checkpoint_dir, f"run{run_seed}-epoch{epoch + 1}.json"
                    ),
                    model,
                    {"epoch": epoch + 1, "run_seed": int(run_seed)},
                )
    finally:
        if log_fh is not None:
            log_fh.close()
    model.meta = {
        "run_seed": int(run_seed),
        "variant": variant,
        "config": config.to_dict(),
        "epoch_mean_loss": history,
    }
    return model


def train_ensemble(db: CEDatabase, config: TrainConfig, variant: str = "full") -> list[GeneratorModel]:
    """Independent restarts sharing the config; seeds derived from master_seed."""
    return [
        train(db, config, derive_seed(config.master_seed, "run", k), variant=variant)
        for k in range(config.ensemble_size)
    ]


def score_direction(model: GeneratorModel, dataset: PairDataset, noise_seed: int,
                    bands: BandwidthSet | None = None) -> DirectionScore:
    """Fit quality of both orientations; positive score means x→y.

    The same noise seed drives generation for both orientations, so scoring
    the swapped dataset yields exactly the negated score.
    """
    if dataset.m < 2:
        raise PreconditionError("need at least 2 points to score")
    bands = bands or BandwidthSet()
    rev = swap_pair(dataset)
    m_vals = []
    for d in (dataset, rev):
        y_hat = generate(model, d, noise_seed)
        real = np.stack([d.x, d.y], axis=1)
        fake = np.stack([d.x, y_hat], axis=1)
        m_vals.append(mmd2_unbiased(real, fake, bands))
    return DirectionScore(m_xy=m_vals[0], m_yx=m_vals[1])


def ensemble_score(models: list[GeneratorModel], dataset: PairDataset,
                   noise_seed: int, bands: BandwidthSet | None = None) -> DirectionScore:
    """Average the MMD values (not decisions) over ensemble members."""
    if not models:
        raise PreconditionError("empty ensemble")
    parts = [
        score_direction(m, dataset, derive_seed(noise_seed, "member", k), bands)
        for k, m in enumerate(models)
    ]
    return DirectionScore(
        m_xy=float(np.mean([p.m_xy for p in parts])),
        m_yx=float(np.mean([p.m_yx for p in parts])),
    )


def evaluate_accuracy(models: list[GeneratorModel], db: CEDatabase,
                      score_seed: int) -> tuple[float, list[DirectionScore]]:
    """Fraction of presented pairs whose direction the ensemble gets right.

    Ties count as incorrect. Scores are returned in database order.
    """
    scores, correct = [], 0
    for i in range(len(db)):
        shown = db.presented(i)
        sc = ensemble_score(models, shown, derive_seed(score_seed, "pair", i))
        scores.append(sc)
        if sc.predicted == shown.label:
            correct += 1
    return correct / len(db), scores


def select_decoder_width(db: CEDatabase, config: TrainConfig,
                         candidates: tuple[int, ...] = (5, 40),
                         holdout_fraction: float = 0.25,
                         variant: str = "full") -> int:
    """Pick the hidden width by validation accuracy on a held-out slice.

    Ties keep the earlier (narrower) candidate.
    """
    n = len(db)
    n_val = max(1, int(round(n * holdout_fraction)))
    if n - n_val < 1:
        raise PreconditionError("database too small to split for width selection")
    perm = rng_from(config.master_seed, "width-split").permutation(n)
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    tr_db, val_db = db.subset(tr_idx), db.subset(val_idx)
    best_width, best_acc = None, -1.0
    for h in candidates:
        cfg = dataclasses.replace(config, decoder_hidden=h)
        models = train_ensemble(tr_db, cfg, variant=variant)
        acc, _ = evaluate_accuracy(models, val_db, derive_seed(config.master_seed, "width-score", h))
        if acc > best_acc:
            best_width, best_acc = h, acc
    return best_width
