import numpy as np
import pytest

from dungeonrl.nn import autograd as ag
from dungeonrl.nn.autograd import Tensor


def fd_check(build_loss, leaves, h=1e-6, rtol=1e-4, atol=1e-7, probes=6, seed=0):
    """Central-difference check of d(loss)/d(leaf) at random coordinates."""
    for t in leaves:
        t.zero_grad()
    loss = build_loss()
    loss.backward()
    rng = np.random.default_rng(seed)
    for leaf in leaves:
        grad = leaf.grad
        assert grad is not None, "no gradient reached the leaf"
        flat = leaf.data.ravel()
        for i in rng.choice(flat.size, size=min(probes, flat.size), replace=False):
            original = flat[i]
            flat[i] = original + h
            up = build_loss().item()
            flat[i] = original - h
            down = build_loss().item()
            flat[i] = original
            fd = (up - down) / (2 * h)
            auto = grad.ravel()[i]
            assert abs(auto - fd) <= atol + rtol * max(abs(auto), abs(fd)), \
                f"coordinate {i}: autodiff {auto} vs finite difference {fd}"


def leaf(shape, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    return Tensor(rng.normal(size=shape, scale=scale), requires_grad=True)


def test_constant_loss_gives_zero_gradients():
    w = leaf((4, 3))
    loss = ag.sum_all(ag.mul(w, Tensor(np.zeros((4, 3)))))
    loss.backward()
    assert np.allclose(w.grad, 0.0)


def test_dense_quadratic_matches_closed_form():
    # loss = ||x W - y||^2  =>  dL/dW = 2 x^T (x W - y)
    rng = np.random.default_rng(3)
    x = rng.normal(size=(5, 4))
    y = rng.normal(size=(5, 2))
    w = leaf((4, 2), seed=4)
    err = ag.matmul(Tensor(x), w) - Tensor(y)
    loss = ag.sum_all(ag.square(err))
    loss.backward()
    expected = 2.0 * x.T @ (x @ w.data - y)
    assert np.allclose(w.grad, expected, rtol=1e-10)


def test_add_broadcast_bias_gradient():
    x = leaf((6, 3), seed=1)
    b = leaf((3,), seed=2)
    fd_check(lambda: ag.sum_all(ag.square(ag.add(x, b))), [x, b])


def test_elementwise_op_gradients():
    x = leaf((4, 5), seed=7, scale=0.7)
    for op in (ag.relu, ag.sigmoid, ag.tanh, ag.exp, ag.square):
        fd_check(lambda op=op: ag.sum_all(op(x)), [x])


def test_log_gradient_on_positive_input():
    x = Tensor(np.random.default_rng(0).uniform(0.5, 2.0, (3, 3)),
               requires_grad=True)
    fd_check(lambda: ag.sum_all(ag.log(x)), [x])


def test_matmul_gradients_both_sides():
    a = leaf((3, 4), seed=1)
    b = leaf((4, 2), seed=2)
    fd_check(lambda: ag.sum_all(ag.square(ag.matmul(a, b))), [a, b])


def test_minimum_routes_gradient_to_smaller_side():
    a = Tensor(np.array([1.0, 5.0]), requires_grad=True)
    b = Tensor(np.array([2.0, 3.0]), requires_grad=True)
    loss = ag.sum_all(ag.minimum(a, b))
    loss.backward()
    assert a.grad.tolist() == [1.0, 0.0]
    assert b.grad.tolist() == [0.0, 1.0]


def test_clip_gradient_zero_outside_bounds():
    x = Tensor(np.array([0.5, 1.0, 2.0]), requires_grad=True)
    loss = ag.sum_all(ag.clip(x, 0.8, 1.2))
    loss.backward()
    assert x.grad.tolist() == [0.0, 1.0, 0.0]


def test_concat_and_slice_gradients():
    a = leaf((2, 3), seed=1)
    b = leaf((2, 2), seed=2)
    fd_check(lambda: ag.sum_all(ag.square(ag.concat([a, b], axis=1))), [a, b])
    c = leaf((3, 6), seed=3)
    fd_check(lambda: ag.sum_all(ag.square(ag.slice_cols(c, 1, 4))), [c])


def test_embedding_gradient_accumulates_repeated_rows():
    table = leaf((5, 3), seed=1)
    idx = np.array([[0, 2, 2], [4, 0, 0]])
    fd_check(lambda: ag.sum_all(ag.square(ag.embedding(table, idx))), [table])
    # repeated indices must sum their contributions
    table.zero_grad()
    out = ag.embedding(table, np.array([1, 1, 1]))
    ag.sum_all(out).backward()
    assert np.allclose(table.grad[1], 3.0)
    assert np.allclose(table.grad[0], 0.0)


def test_conv3x3_gradients():
    x = leaf((2, 5, 4, 3), seed=1, scale=0.5)
    k = leaf((3, 3, 3, 4), seed=2, scale=0.5)
    fd_check(lambda: ag.sum_all(ag.square(ag.conv3x3_same(x, k))), [x, k],
             probes=10)


def test_conv3x3_matches_naive_convolution():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(1, 4, 4, 2))
    k = rng.normal(size=(3, 3, 2, 3))
    out = ag.conv3x3_same(Tensor(x), Tensor(k)).data
    padded = np.zeros((1, 6, 6, 2))
    padded[:, 1:5, 1:5, :] = x
    expected = np.zeros((1, 4, 4, 3))
    for i in range(4):
        for j in range(4):
            patch = padded[0, i:i + 3, j:j + 3, :]
            for o in range(3):
                expected[0, i, j, o] = (patch * k[:, :, :, o]).sum()
    assert np.allclose(out, expected, rtol=1e-10)


def test_log_softmax_gradient_and_normalization():
    x = leaf((4, 7), seed=9)
    out = ag.log_softmax(x)
    assert np.allclose(np.exp(out.data).sum(axis=1), 1.0, atol=1e-12)
    idx = np.array([0, 3, 6, 2])
    fd_check(lambda: ag.sum_all(ag.gather_rows(ag.log_softmax(x), idx)), [x])


def test_softmax_cross_entropy_composite_gradient():
    # d/dlogits of -logp[target] must be softmax - onehot
    x = leaf((3, 5), seed=11)
    targets = np.array([1, 4, 0])
    loss = ag.mean_all(ag.gather_rows(ag.log_softmax(x), targets) * -1.0)
    loss.backward()
    softmax = np.exp(x.data - x.data.max(axis=1, keepdims=True))
    softmax /= softmax.sum(axis=1, keepdims=True)
    onehot = np.zeros_like(softmax)
    onehot[np.arange(3), targets] = 1.0
    assert np.allclose(x.grad, (softmax - onehot) / 3, rtol=1e-8)


def test_gradient_accumulates_across_reuse():
    x = leaf((3,), seed=1)
    loss = ag.sum_all(ag.add(x, x))
    loss.backward()
    assert np.allclose(x.grad, 2.0)


def test_no_grad_disables_graph():
    x = leaf((2, 2), seed=1)
    with ag.no_grad():
        out = ag.square(x)
    assert out._backward is None and not out.requires_grad


def test_backward_requires_scalar():
    x = leaf((2, 2))
    with pytest.raises(ValueError):
        ag.square(x).backward()


def test_deep_chain_backward_is_iterative():
    # a graph deep enough to break a recursive traversal
    x = leaf((1,), seed=0)
    node = x
    for _ in range(5000):
        node = node + Tensor(np.ones(1))
    ag.sum_all(node).backward()
    assert np.allclose(x.grad, 1.0)


def test_float64_graphs_preserve_dtype():
    x = Tensor(np.random.default_rng(0).normal(size=(3, 3)).astype(np.float32),
               requires_grad=True)
    out = ag.sum_all(ag.sigmoid(ag.mul(x, x)))
    assert out.dtype == np.float32
    y = Tensor(np.random.default_rng(0).normal(size=(3, 3)), requires_grad=True)
    assert ag.sum_all(ag.tanh(y)).dtype == np.float64
