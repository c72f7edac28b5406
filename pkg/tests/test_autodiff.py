import numpy as np
import pytest

from metacause.autodiff import (
    Var,
    backward,
    cols,
    concat_cols,
    exp as vexp,
    lift,
    relu,
    softplus,
    vmean,
    vsum,
)


def _fd_grad(f, x, eps=1e-6):
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp, xm = x.copy(), x.copy()
        xp[idx] += eps
        xm[idx] -= eps
        g[idx] = (f(xp) - f(xm)) / (2 * eps)
    return g


def _check(build, x, tol=1e-6):
    """build(Var) -> scalar Var; compare backward grad to finite differences."""
    v = Var(x.copy())
    out = build(v)
    backward(out)
    fd = _fd_grad(lambda z: build(Var(z)).value, x)
    assert np.allclose(v.grad, fd, rtol=tol, atol=tol), (v.grad, fd)


def test_add_mul_grad():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 4))
    _check(lambda v: vsum((v + v) * v), x)


def test_matmul_grad():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((3, 4))
    w = rng.standard_normal((4, 2))
    _check(lambda v: vsum(v @ lift(w)), x)
    wv = Var(w.copy())
    out = vsum(Var(x) @ wv)
    backward(out)
    fd = _fd_grad(lambda z: np.sum(x @ z), w)
    assert np.allclose(wv.grad, fd, atol=1e-6)


def test_broadcast_bias_grad():
    # (n, d) + (d,) must unbroadcast the bias gradient by summing rows
    rng = np.random.default_rng(2)
    x = rng.standard_normal((5, 3))
    b = rng.standard_normal(3)
    bv = Var(b.copy())
    out = vsum((Var(x) + bv) * Var(x))
    backward(out)
    fd = _fd_grad(lambda z: np.sum((x + z) * x), b)
    assert np.allclose(bv.grad, fd, atol=1e-6)


def test_relu_values_and_grad():
    x = np.array([-2.0, 0.0, 3.0])
    v = Var(x)
    out = relu(v)
    assert np.array_equal(out.value, [0.0, 0.0, 3.0])
    backward(vsum(out))
    # subgradient at 0 is taken as 0
    assert np.array_equal(v.grad, [0.0, 0.0, 1.0])


def test_softplus_oracle():
    v = Var(np.array([0.0]))
    out = softplus(v)
    assert np.isclose(out.value[0], np.log(2.0))
    backward(vsum(out))
    assert np.isclose(v.grad[0], 0.5)


def test_softplus_extreme_inputs_finite():
    v = Var(np.array([-800.0, 800.0]))
    out = softplus(v)
    assert np.all(np.isfinite(out.value))
    assert out.value[1] == pytest.approx(800.0)


def test_exp_mean_grads():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((4, 2))
    _check(lambda v: vsum(vexp(v)), x)
    _check(lambda v: vsum(vmean(v, axis=0, keepdims=True) * lift(np.ones((1, 2)))), x)


def test_cols_concat_grads():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((3, 6))
    _check(lambda v: vsum(cols(v, 1, 4) * cols(v, 1, 4)), x)
    a = rng.standard_normal((3, 2))
    w = rng.standard_normal((8, 1))
    _check(lambda v: vsum(concat_cols([v, lift(a)]) @ lift(w)), x)


def test_grad_accumulates_over_reuse():
    # same Var used twice in the graph: contributions must add
    x = np.array([2.0])
    v = Var(x)
    out = vsum(v * v + v)
    backward(out)
    assert np.allclose(v.grad, 2 * x + 1)


def test_deep_chain_no_recursion_limit():
    v = Var(np.array([0.01]))
    out = v
    for _ in range(5000):
        out = out + lift(np.array([0.0]))
    backward(vsum(out))
    assert np.allclose(v.grad, 1.0)


def test_backward_custom_cotangent():
    v = Var(np.array([1.0, 2.0]))
    out = v * v
    backward(out, cotangent=np.array([1.0, 0.0]))
    assert np.allclose(v.grad, [2.0, 0.0])


def test_transpose_grad():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((2, 5))
    w = rng.standard_normal((2, 1))
    _check(lambda v: vsum(v.T @ lift(w)), x)
