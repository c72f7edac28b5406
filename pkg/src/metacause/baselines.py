"""Reference direction-inference methods and ablation training wrappers.

reci/igci/cds are simplified reimplementations of each method's defining
statistic (reference quality, not certified ports of the original
toolboxes). cgnn_score trains fresh unconditioned decoders on the single
dataset per direction — the expensive per-dataset approach the shared
meta-model replaces.

All scores reuse DirectionScore: the two fields hold each direction's
badness-of-fit (MMD, residual, slope integral, ...) and s > 0 means the
first-column→second-column direction. Every method is exactly antisymmetric
under swapping the dataset's variables (with mirrored seeds where training
is involved).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .datagen import CEDatabase, PairDataset, swap_pair
from .errors import ConfigError, DegenerateDataError, PreconditionError
from .generator import GeneratorModel
from .kernels import BandwidthSet, mmd2_unbiased
from .meta_trainer import DirectionScore, TrainConfig, train, train_ensemble
from .generator import generate
from .seeding import derive_seed

BASELINE_METHODS = ("reci", "igci", "cds", "cgnn", "meta_nofilm", "naive_joint")


@dataclass(frozen=True)
class BaselineConfig:
    method: str
    degree: int = 3  # reci
    bins: int = 10  # cds
    ensemble: int = 4  # cgnn
    epochs: int = 100  # cgnn
    decoder_hidden: int = 40  # cgnn
    seed: int = 0

    def __post_init__(self):
        if self.method not in BASELINE_METHODS:
            raise ConfigError(f"unknown baseline {self.method!r}; choose from {BASELINE_METHODS}")
        if self.degree < 1:
            raise ConfigError("polynomial degree must be ≥ 1")
        if self.bins < 2:
            raise ConfigError("need at least 2 bins")
        if self.ensemble < 1:
            raise ConfigError("ensemble must be ≥ 1")


def _zs(v: np.ndarray) -> np.ndarray:
    sd = float(v.std())
    if sd < 1e-12:
        raise DegenerateDataError("zero-variance variable in baseline input")
    return (v - v.mean()) / sd


def _unit(v: np.ndarray) -> np.ndarray:
    lo, hi = float(v.min()), float(v.max())
    if hi - lo < 1e-12:
        raise DegenerateDataError("zero-range variable cannot be rescaled to [0,1]")
    return (v - lo) / (hi - lo)


# -- RECI ---------------------------------------------------------------------


def _poly_mse(u: np.ndarray, v: np.ndarray, degree: int) -> float:
    while True:
        design = np.polynomial.polynomial.polyvander(u, degree)
        coef, _, rank, _ = np.linalg.lstsq(design, v, rcond=None)
        if rank < degree + 1 and degree > 1:
            warnings.warn(
                f"rank-deficient polynomial design (rank {rank}), reducing degree "
                f"to {degree - 1}",
                stacklevel=3,
            )
            degree -= 1
            continue
        resid = v - design @ coef
        return float(np.mean(resid**2))


def reci_score(dataset: PairDataset, degree: int = 3) -> DirectionScore:
    """Polynomial regression residuals in both directions on [0,1]-rescaled
    data; the direction with the smaller residual is called causal."""
    if degree < 1:
        raise PreconditionError("degree must be ≥ 1")
    u, v = _unit(dataset.x), _unit(dataset.y)
    return DirectionScore(m_xy=_poly_mse(u, v, degree), m_yx=_poly_mse(v, u, degree))


# -- IGCI ---------------------------------------------------------------------


def _slope_integral(u: np.ndarray, v: np.ndarray) -> float:
    """Mean log slope of v against sorted u; zero-gap pairs are skipped."""
    order = np.argsort(u, kind="stable")
    du = np.diff(u[order])
    dv = np.diff(v[order])
    keep = (du != 0.0) & (dv != 0.0)
    if not keep.any():
        return 0.0
    return float(np.mean(np.log(np.abs(dv[keep]) / np.abs(du[keep]))))


def igci_score(dataset: PairDataset) -> DirectionScore:
    """Slope-based information-geometric statistic with Gaussian-reference
    (z-score) normalization; the flatter log-slope direction is causal."""
    if dataset.m < 3:
        raise PreconditionError("IGCI needs at least 3 points")
    u, v = _zs(dataset.x), _zs(dataset.y)
    return DirectionScore(m_xy=_slope_integral(u, v), m_yx=_slope_integral(v, u))


# -- CDS ----------------------------------------------------------------------


def _equal_count_chunks(order: np.ndarray, bins: int) -> list[np.ndarray]:
    chunks = [c for c in np.array_split(order, bins) if c.size > 0]
    merged: list[np.ndarray] = []
    for c in chunks:
        if merged and (c.size < 2 or merged[-1].size < 2):
            merged[-1] = np.concatenate([merged[-1], c])
        else:
            merged.append(c)
    if len(merged) > 1 and merged[-1].size < 2:
        merged[-2] = np.concatenate([merged[-2], merged.pop()])
    return merged


def _spread_variability(u: np.ndarray, v: np.ndarray, bins: int) -> float:
    """Variance across equal-count u-bins of std(v | bin)."""
    chunks = _equal_count_chunks(np.argsort(u, kind="stable"), bins)
    stds = np.asarray([v[c].std() for c in chunks])
    return float(stds.var())


def cds_score(dataset: PairDataset, bins: int = 10) -> DirectionScore:
    """Conditional-spread statistic: the causal direction has more uniform
    conditional scatter across conditioning bins."""
    if bins < 2:
        raise PreconditionError("need at least 2 bins")
    u, v = _zs(dataset.x), _zs(dataset.y)
    return DirectionScore(
        m_xy=_spread_variability(u, v, bins), m_yx=_spread_variability(v, u, bins)
    )


# -- per-dataset CGNN ---------------------------------------------------------


def _single_pair_db(d: PairDataset) -> CEDatabase:
    hypothesized = PairDataset(d.x, d.y, "x_to_y", d.name or "pair", d.weight)
    return CEDatabase([hypothesized], ["as_is"], [None])


def cgnn_score(
    dataset: PairDataset,
    ensemble: int = 4,
    epochs: int = 100,
    decoder_hidden: int = 40,
    seed: int = 0,
    bands: BandwidthSet | None = None,
    loss_kind: str = "quadratic",
    lr: float = 0.01,
    direction_seeds: tuple[int, int] | None = None,
) -> DirectionScore:
    """Train fresh unconditioned decoders on this dataset alone, per
    direction, and compare average generative fit. Slow by design — this is
    the per-dataset cost the shared model amortizes away.

    `direction_seeds` pins each direction's full seed budget; pass them
    mirrored to evaluate a swapped dataset identically.
    """
    bands = bands or BandwidthSet()
    if direction_seeds is None:
        direction_seeds = (
            derive_seed(seed, "cgnn-dir", 0),
            derive_seed(seed, "cgnn-dir", 1),
        )
    fits = []
    for d, dir_seed in zip((dataset, swap_pair(dataset)), direction_seeds):
        cfg = TrainConfig(
            epochs=epochs,
            batch_datasets=1,
            lr=lr,
            bandwidths=bands,
            ensemble_size=ensemble,
            decoder_hidden=decoder_hidden,
            master_seed=dir_seed,
            loss_kind=loss_kind,
        )
        models = train_ensemble(_single_pair_db(d), cfg, variant="naive_joint")
        real = np.stack([d.x, d.y], axis=1)
        vals = []
        for k, model in enumerate(models):
            y_hat = generate(model, d, derive_seed(dir_seed, "eval", k))
            vals.append(mmd2_unbiased(real, np.stack([d.x, y_hat], axis=1), bands))
        fits.append(float(np.mean(vals)))
    return DirectionScore(m_xy=fits[0], m_yx=fits[1])


# -- ablations ----------------------------------------------------------------


def ablation_variant(
    db: CEDatabase, config: TrainConfig, variant: str, run_seed: int | None = None
) -> GeneratorModel:
    """Train a deliberately weakened model: "no_film" keeps the amortizer but
    bypasses modulation; "naive_joint" is one bare decoder shared by all
    datasets."""
    if variant not in ("no_film", "naive_joint"):
        raise ConfigError(f"unknown ablation {variant!r}")
    if run_seed is None:
        run_seed = derive_seed(config.master_seed, "run", 0)
    return train(db, config, run_seed, variant=variant)


def baseline_score(dataset: PairDataset, config: BaselineConfig) -> DirectionScore:
    """Dispatch the per-dataset baselines. The trained-ablation methods
    (meta_nofilm, naive_joint) go through the benchmark runner instead."""
    if config.method == "reci":
        return reci_score(dataset, config.degree)
    if config.method == "igci":
        return igci_score(dataset)
    if config.method == "cds":
        return cds_score(dataset, config.bins)
    if config.method == "cgnn":
        return cgnn_score(
            dataset,
            ensemble=config.ensemble,
            epochs=config.epochs,
            decoder_hidden=config.decoder_hidden,
            seed=config.seed,
        )
    raise ConfigError(
        f"{config.method} is a trained variant; run it through the benchmark runner"
    )
