import time

import numpy as np
import pytest

from metacause.autodiff import Var, backward
from metacause.datagen import PairDataset
from metacause.embeddings import (
    DEFAULT_FEATURE_DIM,
    DatasetFeature,
    cme_embed,
    cme_feature_matrix,
    deepsets_embed,
    deepsets_embed_var,
    default_cme_maps,
    fit_cmeo,
    make_deepsets_encoder,
)
from metacause.errors import ConfigError, PreconditionError
from metacause.kernels import rff_features


def _pair(rng, m=20):
    x = rng.standard_normal(m)
    return PairDataset(x, np.tanh(x) + 0.1 * rng.standard_normal(m), "x_to_y", "t")


def test_primal_dual_agree():
    rng = np.random.default_rng(0)
    d = _pair(rng, 20)
    fx, fy = default_cme_maps(seed=1)
    primal = fit_cmeo(d, fx, fy, lam=1.0, form="primal")
    dual = fit_cmeo(d, fx, fy, lam=1.0, form="dual")
    for x in (-1.0, 0.0, 0.7):
        assert np.allclose(cme_embed(primal, x), cme_embed(dual, x), atol=1e-8)


def test_dual_two_point_oracle():
    # duplicated point (0, 0), lambda=1: beta = (K+I)^-1 K[:,0] by hand
    d = PairDataset(np.zeros(2), np.zeros(2), "x_to_y", "dup")
    fx, fy = default_cme_maps(seed=2)
    op = fit_cmeo(d, fx, fy, lam=1.0, form="dual")
    zx = rff_features(np.zeros((2, 1)), fx)
    zy = rff_features(np.zeros((2, 1)), fy)
    K = zx @ zx.T
    beta = np.linalg.solve(K + np.eye(2), zx @ rff_features(np.array(0.0), fx))
    expected = zy.T @ beta
    assert np.allclose(cme_embed(op, 0.0), expected, atol=1e-12)


def test_large_ridge_shrinks_embeddings():
    rng = np.random.default_rng(3)
    d = _pair(rng, 25)
    fx, fy = default_cme_maps(seed=3)
    small = fit_cmeo(d, fx, fy, lam=1.0)
    big = fit_cmeo(d, fx, fy, lam=1e6)
    n1 = np.linalg.norm(cme_embed(small, 0.2))
    n2 = np.linalg.norm(cme_embed(big, 0.2))
    assert n2 < 1e-3 * n1


def test_constant_y_embedding_direction():
    # all y = 3: embedding ≈ phi_y(3) scaled by the ridge shrinkage n/(n+lam)
    n = 30
    rng = np.random.default_rng(4)
    d = PairDataset(rng.standard_normal(n), np.full(n, 3.0), "x_to_y", "const-y")
    fx, fy = default_cme_maps(seed=4)
    op = fit_cmeo(d, fx, fy, lam=1.0)
    emb = cme_embed(op, 0.1)
    target = rff_features(np.array(3.0), fy)
    cos = float(emb @ target) / (np.linalg.norm(emb) * np.linalg.norm(target))
    assert cos > 0.999


def test_cme_embedding_norm_bounded_on_standardized_data():
    rng = np.random.default_rng(5)
    for _ in range(5):
        d = _pair(rng, 40)
        fx, fy = default_cme_maps(seed=6)
        op = fit_cmeo(d, fx, fy, lam=1.0)
        for x in rng.standard_normal(5):
            assert np.linalg.norm(cme_embed(op, float(x))) <= 1.0 + 1e-6


def test_cme_permutation_invariance():
    rng = np.random.default_rng(6)
    d = _pair(rng, 30)
    perm = rng.permutation(30)
    dp = PairDataset(d.x[perm], d.y[perm], d.label, d.name)
    fx, fy = default_cme_maps(seed=7)
    a = fit_cmeo(d, fx, fy)
    b = fit_cmeo(dp, fx, fy)
    assert np.allclose(cme_embed(a, 0.3), cme_embed(b, 0.3), atol=1e-10)


def test_cme_feature_matrix_shape():
    rng = np.random.default_rng(7)
    d = _pair(rng, 12)
    fx, fy = default_cme_maps(seed=8)
    op = fit_cmeo(d, fx, fy)
    F = cme_feature_matrix(op, d)
    assert F.shape == (12, DEFAULT_FEATURE_DIM)
    assert np.all(np.isfinite(F))


def test_primal_fit_scales_linearly_in_n():
    fx, fy = default_cme_maps(seed=9)
    rng = np.random.default_rng(8)

    def fit_time(n):
        d = _pair(rng, n)
        t0 = time.perf_counter()
        for _ in range(3):
            fit_cmeo(d, fx, fy, form="primal")
        return (time.perf_counter() - t0) / 3

    t_small, t_big = fit_time(100), fit_time(1000)
    # O(D^3 + D^2 n): 10x points must cost far less than 100x time
    assert t_big < 40 * max(t_small, 1e-4)


def test_deepsets_permutation_and_duplication_invariance():
    enc = make_deepsets_encoder(seed=1)
    rng = np.random.default_rng(9)
    d = _pair(rng, 15)
    base = deepsets_embed(enc, d)
    assert base.shape == (10,)
    perm = rng.permutation(15)
    shuffled = PairDataset(d.x[perm], d.y[perm], d.label, d.name)
    assert np.allclose(deepsets_embed(enc, shuffled), base, atol=1e-12)
    doubled = PairDataset(np.concatenate([d.x, d.x]), np.concatenate([d.y, d.y]), d.label, d.name)
    assert np.allclose(deepsets_embed(enc, doubled), base, atol=1e-12)


def test_deepsets_single_point_equals_phi():
    from metacause.nn_core import mlp_forward

    enc = make_deepsets_encoder(seed=2)
    d = PairDataset(np.array([0.4, 0.4]), np.array([-1.2, -1.2]), "x_to_y", "p")
    out = deepsets_embed(enc, d)
    phi, _ = mlp_forward(enc.params, enc.config, np.array([[0.4, -1.2]]))
    assert np.allclose(out, phi[0], atol=1e-12)


def test_deepsets_embed_var_grads_flow():
    enc = make_deepsets_encoder(seed=3)
    rng = np.random.default_rng(10)
    d = _pair(rng, 8)
    xy = np.column_stack([d.x, d.y])
    pvars = [Var(p.values.copy()) for p in enc.params]
    out = deepsets_embed_var(pvars, enc.config, xy)
    assert out.value.shape == (1, 10)
    backward(out, cotangent=np.ones_like(out.value))
    assert any(np.any(v.grad != 0) for v in pvars)


def test_dataset_feature_kind_validation():
    DatasetFeature("global", global_vec=np.zeros(10))
    DatasetFeature("per_point", per_point=np.zeros((5, 100)))
    with pytest.raises(ConfigError):
        DatasetFeature("global", per_point=np.zeros((5, 100)))
    with pytest.raises(ConfigError):
        DatasetFeature("nope", global_vec=np.zeros(10))


def test_fit_cmeo_preconditions():
    fx, fy = default_cme_maps(seed=10)
    with pytest.raises(PreconditionError):
        fit_cmeo(PairDataset(np.zeros(2), np.zeros(2), "x_to_y", "z"), fx, fy, lam=0.0)
    with pytest.raises(ConfigError):
        fit_cmeo(PairDataset(np.zeros(2), np.zeros(2), "x_to_y", "z"), fx, fy, form="banana")
