import numpy as np
import pytest

from metacause.errors import ConfigError, NumericError, TapeReusedError
from metacause.nn_core import (
    MLPConfig,
    ParamTensor,
    adam_init,
    adam_step,
    backprop,
    config_digest,
    finite_diff_check,
    load_checkpoint,
    mlp_apply,
    mlp_forward,
    mlp_init,
    save_checkpoint,
)


def test_mlp_config_validation():
    with pytest.raises(ConfigError):
        MLPConfig((3,))
    with pytest.raises(ConfigError):
        MLPConfig((3, 0, 1))
    with pytest.raises(ConfigError):
        MLPConfig((3, 4, 1), activations=("relu", "relu"))  # last must be identity


def test_init_bounds_and_zero_bias():
    cfg = MLPConfig((2, 3, 1), init_seed=9)
    params = mlp_init(cfg)
    w0, b0, w1, b1 = params
    assert w0.shape == (2, 3) and b0.shape == (3,)
    assert w1.shape == (3, 1) and b1.shape == (1,)
    bound = np.sqrt(6.0 / (2 + 3))
    assert np.all(np.abs(w0.values) <= bound)
    assert np.all(b0.values == 0.0) and np.all(b1.values == 0.0)
    # deterministic per seed, distinct across prefixes
    again = mlp_init(cfg)
    assert all(np.array_equal(a.values, b.values) for a, b in zip(params, again))
    other = mlp_init(cfg, "other/")
    assert not np.array_equal(params[0].values, other[0].values)


def test_all_zero_params_give_zero_output():
    cfg = MLPConfig((2, 4, 3))
    params = [ParamTensor(p.name, np.zeros_like(p.values)) for p in mlp_init(cfg)]
    out, _ = mlp_forward(params, cfg, np.random.default_rng(0).standard_normal((5, 2)))
    assert np.array_equal(out, np.zeros((5, 3)))


def test_forward_matches_manual_composition():
    cfg = MLPConfig((2, 3, 1), init_seed=4)
    params = mlp_init(cfg)
    x = np.random.default_rng(1).standard_normal((6, 2))
    out, _ = mlp_forward(params, cfg, x)
    h = np.maximum(x @ params[0].values + params[1].values, 0.0)
    manual = h @ params[2].values + params[3].values
    assert np.allclose(out, manual, atol=1e-14)


def test_backprop_matches_finite_differences():
    cfg = MLPConfig((3, 5, 2), init_seed=2)
    params = mlp_init(cfg)
    x = np.random.default_rng(3).standard_normal((7, 3))

    def loss_fn(ps):
        out, tape = mlp_forward(ps, cfg, x)
        grads, _ = backprop(tape, np.ones_like(out))
        return float(out.sum()), grads

    max_rel = finite_diff_check(loss_fn, params, coordinate_limit=25)
    assert max_rel < 1e-6


def test_backprop_input_gradient():
    cfg = MLPConfig((2, 4, 1), init_seed=5)
    params = mlp_init(cfg)
    x = np.random.default_rng(4).standard_normal((3, 2))
    out, tape = mlp_forward(params, cfg, x)
    _, gx = backprop(tape, np.ones_like(out))
    eps = 1e-6
    fd = np.zeros_like(x)
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            xp, xm = x.copy(), x.copy()
            xp[i, j] += eps
            xm[i, j] -= eps
            fd[i, j] = (mlp_forward(params, cfg, xp)[0].sum() - mlp_forward(params, cfg, xm)[0].sum()) / (2 * eps)
    assert np.allclose(gx, fd, atol=1e-6)


def test_tape_single_use():
    cfg = MLPConfig((2, 3, 1))
    params = mlp_init(cfg)
    out, tape = mlp_forward(params, cfg, np.zeros((2, 2)))
    backprop(tape, np.ones_like(out))
    with pytest.raises(TapeReusedError):
        backprop(tape, np.ones_like(out))


def test_adam_first_step_oracle():
    # after one step: m̂ = g, v̂ = g², so Δ = −lr·g/(|g|+eps)
    p = [ParamTensor("w", np.array([1.0, -2.0]))]
    g = [np.array([0.5, -0.25])]
    state = adam_init(p, lr=0.01)
    new, _ = adam_step(p, g, state)
    expected = p[0].values - 0.01 * g[0] / (np.abs(g[0]) + 1e-8)
    assert np.allclose(new[0].values, expected, atol=1e-12)
    # pure: inputs untouched
    assert np.array_equal(p[0].values, [1.0, -2.0])


def test_adam_two_steps_change_and_stay_finite():
    p = [ParamTensor("w", np.ones(3))]
    state = adam_init(p, lr=0.01)
    g = [np.array([1.0, -1.0, 2.0])]
    p1, state = adam_step(p, g, state)
    p2, state = adam_step(p1, g, state)
    assert state.step_count == 2
    assert np.all(np.isfinite(p2[0].values))
    assert not np.array_equal(p1[0].values, p2[0].values)


def test_adam_rejects_nonfinite_gradient():
    p = [ParamTensor("w", np.ones(2))]
    state = adam_init(p, lr=0.01)
    with pytest.raises(NumericError):
        adam_step(p, [np.array([np.nan, 0.0])], state)


def test_finite_diff_check_flags_wrong_gradient():
    p = [ParamTensor("w", np.array([1.0, 2.0]))]

    def bad_loss(ps):
        v = float((ps[0].values ** 2).sum())
        return v, [3.0 * ps[0].values]  # true grad is 2w

    assert finite_diff_check(bad_loss, p) > 0.1


def test_checkpoint_round_trip_lossless(tmp_path):
    cfg = MLPConfig((2, 3, 1), init_seed=11)
    params = mlp_init(cfg)
    params[0].values[0, 0] = np.pi * 1e-7  # not exactly representable in short decimal
    path = tmp_path / "ck.json"
    save_checkpoint(str(path), params, {"kind": "test", "digest": config_digest(cfg)})
    loaded, meta = load_checkpoint(str(path))
    assert meta["kind"] == "test"
    assert [p.name for p in loaded] == [p.name for p in params]
    for a, b in zip(loaded, params):
        assert np.array_equal(a.values, b.values)  # bitwise


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(Exception):
        load_checkpoint(str(path))


def test_config_digest_stable_and_sensitive():
    a = MLPConfig((2, 3, 1), init_seed=0)
    b = MLPConfig((2, 3, 1), init_seed=0)
    c = MLPConfig((2, 4, 1), init_seed=0)
    assert config_digest(a) == config_digest(b)
    assert config_digest(a) != config_digest(c)
