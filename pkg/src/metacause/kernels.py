"""Gaussian kernels, unbiased MMD over a bandwidth set, and RFF variants.

Kernel parameterization is k(u, v) = exp(−eta·‖u−v‖²); the default bandwidth
set is {0.005, 0.05, 0.25, 0.5, 1, 5, 50} and estimators sum over it.

`mmd2_unbiased` uses the three-term estimator with within-set diagonals
excluded, so it can be negative. The cross term is computed as the mean of
the cross-kernel sum and its transpose's sum, which makes the estimator
*bitwise* symmetric under swapping the two sets.

`mmd2_linear` is the O(n) random-Fourier-feature variant: sum over per-
bandwidth maps of ‖mean z(u) − mean z(v)‖², always ≥ 0.

Differentiable (autodiff Var) counterparts live alongside, plus fused
training losses that cache everything constant about the real dataset —
squared cause distances and the real-real kernel term — so a training step
only pays for kernels that involve generated values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Var
from .errors import ConfigError, PreconditionError, ShapeMismatchError
from .seeding import rng_from

DEFAULT_BANDWIDTHS: tuple[float, ...] = (0.005, 0.05, 0.25, 0.5, 1.0, 5.0, 50.0)


@dataclass(frozen=True)
class BandwidthSet:
    etas: tuple[float, ...] = DEFAULT_BANDWIDTHS

    def __post_init__(self):
        etas = tuple(float(e) for e in self.etas)
        if not etas:
            raise ConfigError("bandwidth set is empty")
        if any(e <= 0 for e in etas):
            raise ConfigError(f"bandwidths must be positive, got {etas}")
        object.__setattr__(self, "etas", etas)


def _as_bands(bands) -> BandwidthSet:
    if bands is None:
        return BandwidthSet()
    if isinstance(bands, BandwidthSet):
        return bands
    return BandwidthSet(tuple(bands))


def _as_points(arr, name: str) -> np.ndarray:
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ShapeMismatchError(f"{name}: expected points (n, d), got shape {a.shape}")
    return a


def _sq_dists(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Pairwise squared distances via explicit per-dimension differences.

    Swapping u and v yields the bitwise transpose, which the symmetric cross
    term in `mmd2_unbiased` relies on.
    """
    d2 = (u[:, 0][:, None] - v[:, 0][None, :]) ** 2
    for j in range(1, u.shape[1]):
        d2 = d2 + (u[:, j][:, None] - v[:, j][None, :]) ** 2
    return d2


def gaussian_kernel(u, v, eta: float) -> float:
    """exp(−eta·‖u−v‖²) for two points."""
    if eta <= 0:
        raise PreconditionError(f"eta must be positive, got {eta}")
    ua = np.atleast_1d(np.asarray(u, dtype=np.float64))
    va = np.atleast_1d(np.asarray(v, dtype=np.float64))
    if ua.shape != va.shape:
        raise ShapeMismatchError(f"point shapes differ: {ua.shape} vs {va.shape}")
    return float(np.exp(-eta * np.sum((ua - va) ** 2)))


def mmd2_unbiased(U, V, bands=None) -> float:
    """Unbiased squared MMD between sample sets, summed over bandwidths.

    Within-set sums exclude the diagonal (hence "unbiased", and hence the
    estimator may be negative); the cross sum keeps every pair.
    """
    bands = _as_bands(bands)
    u = _as_points(U, "U")
    v = _as_points(V, "V")
    n, m = u.shape[0], v.shape[0]
    if n < 2 or m < 2:
        raise PreconditionError(f"need ≥2 points per set, got {n} and {m}")
    if u.shape[1] != v.shape[1]:
        raise ShapeMismatchError(
            f"point dimensions differ: {u.shape[1]} vs {v.shape[1]}"
        )
    d_uu = _sq_dists(u, u)
    d_vv = _sq_dists(v, v)
    d_uv = _sq_dists(u, v)
    total = 0.0
    for eta in bands.etas:
        k_uu = np.exp(-eta * d_uu)
        k_vv = np.exp(-eta * d_vv)
        k_uv = np.exp(-eta * d_uv)
        s_uu = (k_uu.sum() - n) / (n * (n - 1))
        s_vv = (k_vv.sum() - m) / (m * (m - 1))
        # symmetrized cross sum: bitwise invariant under (U, V) swap
        s_uv = 0.5 * (k_uv.sum() + np.ascontiguousarray(k_uv.T).sum()) / (n * m)
        total += s_uu + s_vv - 2.0 * s_uv
    return float(total)


# -- random Fourier features ------------------------------------------------


@dataclass(frozen=True)
class RFFMap:
    """Frozen random frequencies approximating exp(−‖u−v‖²/(2l²)).

    Features are sqrt(2/D)·(cos(ωᵀx), sin(ωᵀx)) per frequency row, laid out
    as the cos block followed by the sin block; ‖z(x)‖² = 1 exactly.
    """

    frequencies: np.ndarray
    n_features: int
    lengthscale: float
    seed: int

    def __post_init__(self):
        if self.n_features % 2 != 0 or self.n_features <= 0:
            raise ConfigError(f"n_features must be even positive, got {self.n_features}")
        if self.lengthscale <= 0:
            raise ConfigError("lengthscale must be positive")
        if self.frequencies.shape[0] != self.n_features // 2:
            raise ShapeMismatchError("frequency rows must equal n_features/2")

    @property
    def input_dim(self) -> int:
        return self.frequencies.shape[1]


def make_rff_map(input_dim: int, n_features: int, lengthscale: float, seed: int) -> RFFMap:
    if n_features % 2 != 0 or n_features <= 0:
        raise ConfigError(f"n_features must be even positive, got {n_features}")
    rng = rng_from(seed, "rff")
    freq = rng.standard_normal((n_features // 2, input_dim)) / float(lengthscale)
    return RFFMap(freq, n_features, float(lengthscale), seed)


def _rff_batch(x, rmap: RFFMap) -> tuple[np.ndarray, bool]:
    """Coerce input to an (n, input_dim) batch; report if it was one point."""
    a = np.asarray(x, dtype=np.float64)
    single = False
    if a.ndim == 0:
        a = a.reshape(1, 1)
        single = True
    elif a.ndim == 1:
        if rmap.input_dim == 1:
            a = a[:, None]
        elif a.shape[0] == rmap.input_dim:
            a = a[None, :]
            single = True
        else:
            raise ShapeMismatchError(
                f"point of dim {a.shape[0]} fed to map of input_dim {rmap.input_dim}"
            )
    if a.shape[1] != rmap.input_dim:
        raise ShapeMismatchError(
            f"input dim {a.shape[1]} != map input_dim {rmap.input_dim}"
        )
    return a, single


def rff_features(x, rmap: RFFMap) -> np.ndarray:
    """Feature vector(s) z(x); (D,) for one point, (n, D) for a batch."""
    a, single = _rff_batch(x, rmap)
    ang = a @ rmap.frequencies.T
    scale = np.sqrt(2.0 / rmap.n_features)
    z = scale * np.concatenate([np.cos(ang), np.sin(ang)], axis=1)
    return z[0] if single else z


def rff_maps_for_bandwidths(
    input_dim: int, n_features: int, bands=None, seed: int = 0
) -> list[RFFMap]:
    """One map per bandwidth, lengthscale 1/sqrt(2η) so the approximated
    kernel matches exp(−η‖·‖²)."""
    bands = _as_bands(bands)
    return [
        make_rff_map(input_dim, n_features, 1.0 / np.sqrt(2.0 * eta), int(seed) + i)
        for i, eta in enumerate(bands.etas)
    ]


def mmd2_linear(U, V, maps: list[RFFMap]) -> float:
    """Σ over maps of ‖mean z(u) − mean z(v)‖²; non-negative, O(n+m) per map."""
    u = _as_points(U, "U")
    v = _as_points(V, "V")
    if u.shape[0] < 1 or v.shape[0] < 1:
        raise PreconditionError("need at least one point in each set")
    total = 0.0
    for rmap in maps:
        diff = rff_features(u, rmap).mean(axis=0) - rff_features(v, rmap).mean(axis=0)
        total += float(diff @ diff)
    return total


# -- differentiable variants -------------------------------------------------


def _wsum_kernels(d2: np.ndarray, etas) -> tuple[float, np.ndarray]:
    """(Σ_η sum of exp(−η d2), Σ_η η·exp(−η d2)) for gradient reuse."""
    total = 0.0
    w = np.zeros_like(d2)
    for eta in etas:
        k = np.exp(-eta * d2)
        total += k.sum()
        w += eta * k
    return total, w


def mmd2_unbiased_var(U, V, bands=None) -> Var:
    """Graph-mode `mmd2_unbiased`: differentiable in both sets' coordinates."""
    bands = _as_bands(bands)
    uv_in = (U if isinstance(U, Var) else Var(_as_points(U, "U")),
             V if isinstance(V, Var) else Var(_as_points(V, "V")))
    u = _as_points(uv_in[0].value, "U")
    v = _as_points(uv_in[1].value, "V")
    n, m = u.shape[0], v.shape[0]
    if n < 2 or m < 2:
        raise PreconditionError(f"need ≥2 points per set, got {n} and {m}")
    d_uu = _sq_dists(u, u)
    d_vv = _sq_dists(v, v)
    d_uv = _sq_dists(u, v)
    value = 0.0
    w_uu = np.zeros_like(d_uu)
    w_vv = np.zeros_like(d_vv)
    w_uv = np.zeros_like(d_uv)
    for eta in bands.etas:
        k_uu = np.exp(-eta * d_uu)
        k_vv = np.exp(-eta * d_vv)
        k_uv = np.exp(-eta * d_uv)
        value += (k_uu.sum() - n) / (n * (n - 1))
        value += (k_vv.sum() - m) / (m * (m - 1))
        value -= k_uv.sum() / (n * m)
        value -= np.ascontiguousarray(k_uv.T).sum() / (n * m)
        w_uu += eta * k_uu
        w_vv += eta * k_vv
        w_uv += eta * k_uv

    def vjp(g):
        gs = float(g)
        r_uu = w_uu.sum(axis=1)
        r_uv = w_uv.sum(axis=1)
        c_uv = w_uv.sum(axis=0)
        grad_u = (
            -4.0 / (n * (n - 1)) * (r_uu[:, None] * u - w_uu @ u)
            + 4.0 / (n * m) * (r_uv[:, None] * u - w_uv @ v)
        )
        r_vv = w_vv.sum(axis=1)
        grad_v = (
            -4.0 / (m * (m - 1)) * (r_vv[:, None] * v - w_vv @ v)
            + 4.0 / (n * m) * (c_uv[:, None] * v - w_uv.T @ u)
        )
        out = []
        for node, grad in zip(uv_in, (grad_u, grad_v)):
            out.append(grad.reshape(node.value.shape) * gs)
        return tuple(out)

    return Var(np.float64(value), uv_in, vjp)


def _trig(points: np.ndarray, rmap: RFFMap) -> tuple[np.ndarray, np.ndarray]:
    ang = points @ rmap.frequencies.T
    return np.cos(ang), np.sin(ang)


def mmd2_linear_var(U, V, maps: list[RFFMap]) -> Var:
    """Graph-mode `mmd2_linear`, differentiable in both sets' coordinates."""
    uv_in = (U if isinstance(U, Var) else Var(_as_points(U, "U")),
             V if isinstance(V, Var) else Var(_as_points(V, "V")))
    u = _as_points(uv_in[0].value, "U")
    v = _as_points(uv_in[1].value, "V")
    n, m = u.shape[0], v.shape[0]
    if n < 1 or m < 1:
        raise PreconditionError("need at least one point in each set")
    value = 0.0
    saved = []
    for rmap in maps:
        scale = np.sqrt(2.0 / rmap.n_features)
        cu, su = _trig(u, rmap)
        cv, sv = _trig(v, rmap)
        dc = scale * (cu.mean(axis=0) - cv.mean(axis=0))
        ds = scale * (su.mean(axis=0) - sv.mean(axis=0))
        value += float(dc @ dc + ds @ ds)
        saved.append((scale, cu, su, cv, sv, dc, ds, rmap.frequencies))

    def vjp(g):
        gs = float(g)
        grad_u = np.zeros_like(u)
        grad_v = np.zeros_like(v)
        for scale, cu, su, cv, sv, dc, ds, freq in saved:
            # d value / d angle, per point: chain through cos/sin means
            ga_u = (2.0 * scale / n) * (-su * dc[None, :] + cu * ds[None, :])
            ga_v = (2.0 * scale / m) * (sv * dc[None, :] - cv * ds[None, :])
            grad_u += ga_u @ freq
            grad_v += ga_v @ freq
        return (
            grad_u.reshape(uv_in[0].value.shape) * gs,
            grad_v.reshape(uv_in[1].value.shape) * gs,
        )

    return Var(np.float64(value), uv_in, vjp)


# -- fused training losses (real dataset fixed, generated y varies) ----------


@dataclass
class JointMMDCache:
    """Constants of the quadratic joint-MMD loss for one real dataset.

    The generated joint shares the real causes, so the squared-distance
    matrix of the cause coordinate and the real-real kernel term never
    change across training steps.
    """

    x: np.ndarray
    y: np.ndarray
    etas: tuple[float, ...]
    dx2: np.ndarray = field(init=False)
    s_pp_total: float = field(init=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64).ravel()
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        n = self.x.shape[0]
        if n < 2:
            raise PreconditionError("need ≥2 points")
        if self.y.shape[0] != n:
            raise ShapeMismatchError("x and y lengths differ")
        self.dx2 = (self.x[:, None] - self.x[None, :]) ** 2
        d_pp = self.dx2 + (self.y[:, None] - self.y[None, :]) ** 2
        total = 0.0
        for eta in self.etas:
            total += (np.exp(-eta * d_pp).sum() - n) / (n * (n - 1))
        self.s_pp_total = float(total)


def joint_mmd2(cache: JointMMDCache, y_hat: Var) -> Var:
    """MMD²((x, y) vs (x, ŷ)) summed over bandwidths, differentiable in ŷ."""
    yh = y_hat.value.ravel()
    n = cache.x.shape[0]
    if yh.shape[0] != n:
        raise ShapeMismatchError(f"generated length {yh.shape[0]} != dataset size {n}")
    e_pq = cache.y[:, None] - yh[None, :]
    e_qq = yh[:, None] - yh[None, :]
    d_pq = cache.dx2 + e_pq**2
    d_qq = cache.dx2 + e_qq**2
    value = cache.s_pp_total
    w_pq = np.zeros_like(d_pq)
    w_qq = np.zeros_like(d_qq)
    for eta in cache.etas:
        k_pq = np.exp(-eta * d_pq)
        k_qq = np.exp(-eta * d_qq)
        value += (k_qq.sum() - n) / (n * (n - 1))
        value -= 2.0 * k_pq.sum() / (n * n)
        w_pq += eta * k_pq
        w_qq += eta * k_qq

    def vjp(g):
        gs = float(g)
        term_qq = yh * w_qq.sum(axis=1) - w_qq @ yh
        term_pq = yh * w_pq.sum(axis=0) - w_pq.T @ cache.y
        grad = -4.0 / (n * (n - 1)) * term_qq + 4.0 / (n * n) * term_pq
        return (gs * grad.reshape(y_hat.value.shape),)

    return Var(np.float64(value), (y_hat,), vjp)


@dataclass
class LinearMMDCache:
    """Constants of the RFF (linear-time) joint loss for one real dataset."""

    x: np.ndarray
    y: np.ndarray
    maps: list[RFFMap]
    real_means: list[np.ndarray] = field(init=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64).ravel()
        self.y = np.asarray(self.y, dtype=np.float64).ravel()
        pts = np.stack([self.x, self.y], axis=1)
        self.real_means = [rff_features(pts, m).mean(axis=0) for m in self.maps]


def joint_mmd2_linear(cache: LinearMMDCache, y_hat: Var) -> Var:
    """RFF-mean loss ‖μ_real − μ_gen‖² summed over maps, differentiable in ŷ."""
    yh = y_hat.value.ravel()
    n = cache.x.shape[0]
    if yh.shape[0] != n:
        raise ShapeMismatchError(f"generated length {yh.shape[0]} != dataset size {n}")
    pts = np.stack([cache.x, yh], axis=1)
    value = 0.0
    saved = []
    for rmap, mu_real in zip(cache.maps, cache.real_means):
        scale = np.sqrt(2.0 / rmap.n_features)
        c, s = _trig(pts, rmap)
        half = rmap.n_features // 2
        dc = mu_real[:half] - scale * c.mean(axis=0)
        ds = mu_real[half:] - scale * s.mean(axis=0)
        value += float(dc @ dc + ds @ ds)
        saved.append((scale, c, s, dc, ds, rmap.frequencies))

    def vjp(g):
        gs = float(g)
        grad = np.zeros(n)
        for scale, c, s, dc, ds, freq in saved:
            ga = (2.0 * scale / n) * (s * dc[None, :] - c * ds[None, :])
            grad += ga @ freq[:, 1]
        return (gs * grad.reshape(y_hat.value.shape),)

    return Var(np.float64(value), (y_hat,), vjp)
