"""Synthetic cause-effect pair generation and the on-disk database format.

Three families, each producing standardized bivariate datasets where the
first variable causes the second:

* net   — cause from a random 1–5 component Gaussian mixture; effect from a
          random tanh network applied to (cause, fresh noise).
* gauss — mixture cause; effect = smooth random function (a 200-term random
          cosine expansion, which converges to an RBF-GP sample path) plus
          additive Gaussian noise of random scale.
* multi — standard-normal cause; random polynomial mechanism of degree 1–3
          with noise applied additively or multiplicatively, before or after
          the mechanism.

Every pair is regenerable bit-for-bit from its PairSpec: cause, mechanism
and noise use three independently derived seed streams (so noise ⫫ cause by
construction). Databases store pairs internally in causal orientation with
a recorded presentation orientation for balanced evaluation; on disk each
pair is a two-column text file in *presented* orientation plus one JSON
manifest. Save → load → save is byte-identical.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    ConfigError,
    DataFormatError,
    DegenerateDataError,
    PreconditionError,
    ShapeMismatchError,
)
from .seeding import derive_seed, rng_from

DB_FORMAT = "metacause-db-v1"
FAMILIES = ("net", "gauss", "multi")
NOISE_MODES = ("additive_pre", "additive_post", "multiplicative_pre", "multiplicative_post")
LABELS = ("x_to_y", "y_to_x", "unknown")


@dataclass
class PairDataset:
    x: np.ndarray
    y: np.ndarray
    label: str = "unknown"
    name: str = ""
    weight: float = 1.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64).ravel()
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        if self.x.shape[0] != self.y.shape[0]:
            raise ShapeMismatchError(
                f"{self.name or 'pair'}: x has {self.x.shape[0]} points, y has {self.y.shape[0]}"
            )
        if self.x.shape[0] < 2:
            raise PreconditionError(f"{self.name or 'pair'}: need at least 2 points")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise DegenerateDataError(f"{self.name or 'pair'}: non-finite values")
        if self.label not in LABELS:
            raise ConfigError(f"unknown label {self.label!r}")

    @property
    def m(self) -> int:
        return self.x.shape[0]


def swap_pair(ds: PairDataset) -> PairDataset:
    flipped = {"x_to_y": "y_to_x", "y_to_x": "x_to_y", "unknown": "unknown"}[ds.label]
    return PairDataset(ds.y.copy(), ds.x.copy(), flipped, ds.name, ds.weight)


@dataclass(frozen=True)
class PairSpec:
    family: str
    mechanism_seed: int
    cause_seed: int
    noise_seed: int
    n_points: int
    noise_mode: str | None = None  # multi only

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.family == "multi" and self.noise_mode not in NOISE_MODES:
            raise ConfigError(f"multi pairs need a noise_mode, got {self.noise_mode!r}")
        if self.n_points < 2:
            raise PreconditionError("n_points must be ≥ 2")


@dataclass
class CEDatabase:
    """Labeled cause-effect pairs, internally always in causal orientation.

    Pairs without a generative spec (real data, ad-hoc pairs) carry None in
    `specs`.
    """

    datasets: list[PairDataset]
    orientations: list[str]  # "as_is" | "swapped" per pair (presentation)
    specs: list[PairSpec | None]
    meta: dict = field(default_factory=dict)
    diags: list[dict] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.datasets)
        if len(self.orientations) != n or len(self.specs) != n:
            raise ShapeMismatchError("datasets/orientations/specs lengths differ")
        for ds in self.datasets:
            if ds.label != "x_to_y":
                raise ConfigError(f"{ds.name}: database pairs must be stored cause-first")
        for o in self.orientations:
            if o not in ("as_is", "swapped"):
                raise ConfigError(f"unknown orientation {o!r}")

    def __len__(self) -> int:
        return len(self.datasets)

    def presented(self, i: int) -> PairDataset:
        """The pair as an evaluator sees it (possibly variable-swapped)."""
        ds = self.datasets[i]
        return swap_pair(ds) if self.orientations[i] == "swapped" else replace(ds)

    def subset(self, indices) -> "CEDatabase":
        idx = list(indices)
        return CEDatabase(
            [self.datasets[i] for i in idx],
            [self.orientations[i] for i in idx],
            [self.specs[i] for i in idx],
            dict(self.meta),
            [self.diags[i] for i in idx] if self.diags else [],
        )


# -- standardization ---------------------------------------------------------


def _zscore(v: np.ndarray, what: str) -> np.ndarray:
    sd = float(v.std())  # population convention: two points map to ±1
    if not np.isfinite(sd) or sd < 1e-12:
        raise DegenerateDataError(f"{what}: zero variance, cannot standardize")
    return (v - v.mean()) / sd


def standardize(ds: PairDataset) -> PairDataset:
    """Shift/scale each variable to mean 0, variance 1 (population std)."""
    return PairDataset(
        _zscore(ds.x, f"{ds.name or 'pair'}.x"),
        _zscore(ds.y, f"{ds.name or 'pair'}.y"),
        ds.label,
        ds.name,
        ds.weight,
    )


# -- pair synthesis ----------------------------------------------------------


def _mixture_cause(rng: np.random.Generator, n: int) -> tuple[np.ndarray, int]:
    k = int(rng.integers(1, 6))
    means = rng.normal(0.0, 2.0, size=k)
    scales = rng.uniform(0.5, 1.5, size=k)
    comp = rng.integers(0, k, size=n)
    return means[comp] + scales[comp] * rng.standard_normal(n), k


def _gauss_mechanism(rng: np.random.Generator):
    """Random smooth function via a 200-term cosine expansion."""
    n_terms = 200
    ell = rng.uniform(0.5, 2.0)
    omega = rng.standard_normal(n_terms) / ell
    phase = rng.uniform(0.0, 2.0 * np.pi, size=n_terms)
    amp = rng.standard_normal(n_terms) * np.sqrt(2.0 / n_terms)

    def f(t: np.ndarray) -> np.ndarray:
        return np.cos(np.outer(t, omega) + phase) @ amp

    return f


def _raw_pair(spec: PairSpec, attempt: int) -> tuple[np.ndarray, np.ndarray, dict]:
    rng_c = rng_from(spec.cause_seed, "cause", attempt)
    rng_m = rng_from(spec.mechanism_seed, "mech", attempt)
    rng_n = rng_from(spec.noise_seed, "noise", attempt)
    n = spec.n_points
    if spec.family == "net":
        x, k = _mixture_cause(rng_c, n)
        w1 = rng_m.standard_normal((2, 20))
        b1 = rng_m.standard_normal(20)
        w2 = rng_m.standard_normal((20, 1))
        b2 = rng_m.standard_normal(1)
        e = rng_n.standard_normal(n)
        hidden = np.tanh(np.stack([x, e], axis=1) @ w1 + b1)
        y = (hidden @ w2 + b2).ravel()
        return x, y, {"cause_components": k}
    if spec.family == "gauss":
        x, k = _mixture_cause(rng_c, n)
        f = _gauss_mechanism(rng_m)
        noise_scale = rng_m.uniform(0.1, 0.5)
        fx = f(x)
        y = fx + noise_scale * rng_n.standard_normal(n)
        order = np.argsort(x)
        gaps = np.diff(x[order])
        ok = gaps > 1e-9
        lip = float(np.max(np.abs(np.diff(fx[order]))[ok] / gaps[ok])) if ok.any() else 0.0
        return x, y, {"cause_components": k, "mechanism_lipschitz": lip}
    # multi
    x = rng_c.standard_normal(n)
    degree = int(rng_m.integers(1, 4))
    coeffs = rng_m.standard_normal(degree + 1)
    sigma = rng_m.uniform(0.1, 0.4)
    e = rng_n.standard_normal(n)

    def f(t):
        return np.polynomial.polynomial.polyval(t, coeffs)

    mode = spec.noise_mode
    if mode == "additive_pre":
        y = f(x + sigma * e)
    elif mode == "additive_post":
        y = f(x) + sigma * e
    elif mode == "multiplicative_pre":
        y = f(x * (1.0 + sigma * e))
    else:  # multiplicative_post
        y = f(x) * (1.0 + sigma * e)
    return x, y, {"degree": degree, "noise_mode": mode, "noise_scale": float(sigma)}


def generate_pair(spec: PairSpec, name: str = "") -> tuple[PairDataset, dict]:
    """Regenerate one standardized pair (cause first) from its spec.

    Deterministic: the rare degenerate draw (zero variance) advances an
    attempt counter that is itself part of the derivation, so retries are
    reproducible too.
    """
    for attempt in range(64):
        x, y, diag = _raw_pair(spec, attempt)
        try:
            ds = PairDataset(
                _zscore(x, "cause"), _zscore(y, "effect"), "x_to_y", name
            )
        except DegenerateDataError:
            continue
        diag["attempt"] = attempt
        return ds, diag
    raise DegenerateDataError(f"{name or spec.family}: no valid draw in 64 attempts")


def _gen_family(family: str, n_pairs: int, n_points: int, master_seed: int) -> CEDatabase:
    if n_pairs < 1:
        raise PreconditionError("n_pairs must be ≥ 1")
    datasets, specs, diags = [], [], []
    for i in range(n_pairs):
        mode = None
        if family == "multi":
            mode = NOISE_MODES[int(rng_from(master_seed, family, i, "mode").integers(0, 4))]
        spec = PairSpec(
            family,
            derive_seed(master_seed, family, i, "mech"),
            derive_seed(master_seed, family, i, "cause"),
            derive_seed(master_seed, family, i, "noise"),
            n_points,
            mode,
        )
        ds, diag = generate_pair(spec, name=f"{family}-{i:04d}")
        datasets.append(ds)
        specs.append(spec)
        diags.append(diag)
    flips = rng_from(master_seed, family, "orient").integers(0, 2, size=n_pairs)
    orientations = ["swapped" if f else "as_is" for f in flips]
    meta = {
        "family": family,
        "master_seed": int(master_seed),
        "n_pairs": n_pairs,
        "n_points": n_points,
    }
    return CEDatabase(datasets, orientations, specs, meta, diags)


def gen_ce_net(n_pairs: int, n_points: int, master_seed: int) -> CEDatabase:
    return _gen_family("net", n_pairs, n_points, master_seed)


def gen_ce_gauss(n_pairs: int, n_points: int, master_seed: int) -> CEDatabase:
    return _gen_family("gauss", n_pairs, n_points, master_seed)


def gen_ce_multi(n_pairs: int, n_points: int, master_seed: int) -> CEDatabase:
    return _gen_family("multi", n_pairs, n_points, master_seed)


def generate_database(family: str, n_pairs: int, n_points: int, master_seed: int) -> CEDatabase:
    if family not in FAMILIES:
        raise ConfigError(f"unknown family {family!r}; choose from {FAMILIES}")
    return _gen_family(family, n_pairs, n_points, master_seed)


# -- disk format --------------------------------------------------------------


def read_numeric_table(path: str) -> np.ndarray:
    """Whitespace-delimited numeric rows → (n, k) array; strict about shape."""
    rows: list[list[float]] = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split()
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise DataFormatError(
                    f"non-numeric value in row: {stripped[:60]!r}", path=path, line=lineno
                ) from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise DataFormatError(
                    f"expected {width} columns, found {len(vals)}", path=path, line=lineno
                )
            rows.append(vals)
    if not rows:
        raise DataFormatError("file contains no data rows", path=path)
    return np.asarray(rows, dtype=np.float64)


def save_database(db: CEDatabase, directory: str) -> None:
    """One two-column text file per pair (presented orientation) + manifest."""
    os.makedirs(directory, exist_ok=True)
    entries = []
    for i, ds in enumerate(db.datasets):
        shown = db.presented(i)
        fname = f"{ds.name or f'pair-{i:04d}'}.txt"
        with open(os.path.join(directory, fname), "w") as fh:
            for a, b in zip(shown.x, shown.y):
                fh.write(f"{a:.17g} {b:.17g}\n")
        spec = db.specs[i]
        entries.append(
            {
                "name": ds.name,
                "file": fname,
                "family": spec.family if spec else None,
                "n_points": spec.n_points if spec else ds.m,
                "mechanism_seed": spec.mechanism_seed if spec else None,
                "cause_seed": spec.cause_seed if spec else None,
                "noise_seed": spec.noise_seed if spec else None,
                "noise_mode": spec.noise_mode if spec else None,
                "label": shown.label,
                "orientation": db.orientations[i],
                "weight": ds.weight,
                "diag": db.diags[i] if db.diags else {},
            }
        )
    manifest = {"format": DB_FORMAT, "meta": db.meta, "pairs": entries}
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1)


def load_database(directory: str) -> CEDatabase:
    mpath = os.path.join(directory, "manifest.json")
    if not os.path.exists(mpath):
        raise DataFormatError("manifest.json not found", path=mpath)
    with open(mpath) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != DB_FORMAT:
        raise DataFormatError(f"unsupported database format {manifest.get('format')!r}", path=mpath)
    datasets, orientations, specs, diags = [], [], [], []
    for entry in manifest["pairs"]:
        table = read_numeric_table(os.path.join(directory, entry["file"]))
        if table.shape[1] != 2:
            raise DataFormatError(
                f"expected 2 columns, found {table.shape[1]}",
                path=os.path.join(directory, entry["file"]),
            )
        shown = PairDataset(
            table[:, 0], table[:, 1], entry["label"], entry["name"], entry["weight"]
        )
        causal = swap_pair(shown) if entry["orientation"] == "swapped" else shown
        datasets.append(causal)
        orientations.append(entry["orientation"])
        if entry.get("family") is None:
            specs.append(None)
        else:
            specs.append(
                PairSpec(
                    entry["family"],
                    entry["mechanism_seed"],
                    entry["cause_seed"],
                    entry["noise_seed"],
                    entry["n_points"],
                    entry.get("noise_mode"),
                )
            )
        diags.append(entry.get("diag", {}))
    return CEDatabase(datasets, orientations, specs, manifest.get("meta", {}), diags)


# -- diagnostics ---------------------------------------------------------------


def conditional_spread_profile(ds: PairDataset, bins: int = 10) -> np.ndarray:
    """Std of y within equal-count bins of x; a cheap mechanism fingerprint."""
    order = np.argsort(ds.x, kind="stable")
    chunks = np.array_split(order, bins)
    return np.asarray([ds.y[c].std() for c in chunks if c.size >= 2])
