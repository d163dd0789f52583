import numpy as np
import pytest

from hotrnn import autodiff as ad
from hotrnn.autodiff import ShapeError, Tensor

from util import check_grads, numerical_grad, rel_error


def test_hadamard_values():
    out = ad.hadamard(Tensor([1.0, 2.0]), Tensor([3.0, 4.0]))
    np.testing.assert_array_equal(out.data, [3.0, 8.0])


def test_add_identity():
    out = Tensor([0.0, 0.0]) + Tensor([5.0, -5.0])
    np.testing.assert_array_equal(out.data, [5.0, -5.0])


def test_elementwise_shape_mismatch():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(3, 2\)"):
        ad.mul(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 2))))


def test_matvec_identity():
    out = ad.matvec(Tensor(np.eye(2)), Tensor([3.0, 7.0]))
    np.testing.assert_array_equal(out.data, [3.0, 7.0])


def test_matvec_row_sums():
    out = ad.matvec(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([1.0, 1.0]))
    np.testing.assert_array_equal(out.data, [3.0, 7.0])


def test_matvec_inner_dim_mismatch():
    with pytest.raises(ShapeError):
        ad.matvec(Tensor(np.ones((2, 3))), Tensor(np.ones(4)))


def test_matvec_gradients_vs_finite_differences():
    rng = np.random.default_rng(7)
    w = Tensor(rng.normal(size=(5, 4)))
    v = Tensor(rng.normal(size=4))
    check_grads(
        lambda: ad.tensor_sum(ad.tanh(ad.matvec(w, v))),
        {"w": w, "v": v},
        tol=1e-6,
    )


def test_sigmoid_tanh_at_zero():
    assert ad.sigmoid(Tensor(0.0)).item() == 0.5
    assert ad.tanh(Tensor(0.0)).item() == 0.0


def test_sigmoid_gradient_at_one():
    x = Tensor(1.0)
    loss = ad.sigmoid(x)
    loss.backward()
    numeric = numerical_grad(lambda: float(ad.sigmoid(x).data), x)
    assert rel_error(x.grad, numeric) < 1e-6


def test_backward_square_sum():
    w = Tensor([1.0, 2.0, 3.0])
    loss = ad.tensor_sum(w * w)
    loss.backward()
    np.testing.assert_allclose(w.grad, [2.0, 4.0, 6.0])


def test_backward_constant_root_zero_grads():
    w = Tensor([1.0, 2.0])
    c = Tensor(5.0)
    loss = c + ad.tensor_sum(w) * 0.0
    loss.backward()
    np.testing.assert_array_equal(w.grad, [0.0, 0.0])


def test_backward_requires_scalar_root():
    w = Tensor([1.0, 2.0])
    with pytest.raises(ShapeError):
        (w * w).backward()


def test_backward_linearity():
    rng = np.random.default_rng(3)
    x = Tensor(rng.normal(size=6))

    def grad_of(a, b):
        f = ad.tensor_sum(ad.tanh(x))
        g = ad.tensor_sum(x * x)
        (a * f + b * g).backward()
        return x.grad.copy()

    ga = grad_of(1.0, 0.0)
    gb = grad_of(0.0, 1.0)
    combined = grad_of(2.5, -1.5)
    np.testing.assert_allclose(combined, 2.5 * ga - 1.5 * gb, rtol=1e-12)


def test_composite_graph_gradcheck():
    rng = np.random.default_rng(11)
    a = Tensor(rng.normal(size=(3, 4)))
    b = Tensor(rng.normal(size=(4, 2)))
    c = Tensor(rng.normal(size=2))

    def loss():
        y = ad.sigmoid(ad.matmul(a, b)) + c
        return ad.tensor_sum(y * ad.tanh(y))

    check_grads(loss, {"a": a, "b": b, "c": c}, tol=1e-4)


def test_bmm_gradcheck():
    rng = np.random.default_rng(13)
    a = Tensor(rng.normal(size=(2, 3, 4)))
    b = Tensor(rng.normal(size=(2, 4, 2)))
    check_grads(lambda: ad.tensor_sum(ad.bmm(a, b)), {"a": a, "b": b}, tol=1e-6)


def test_concat_and_reshape_gradcheck():
    rng = np.random.default_rng(17)
    a = Tensor(rng.normal(size=(2, 3)))
    b = Tensor(rng.normal(size=(2, 2)))

    def loss():
        joined = ad.concat([a, b], axis=1)
        return ad.tensor_sum(ad.tanh(ad.reshape(joined, (10,))))

    check_grads(loss, {"a": a, "b": b}, tol=1e-6)


def test_broadcast_bias_gradcheck():
    rng = np.random.default_rng(19)
    x = Tensor(rng.normal(size=(4, 3)))
    bias = Tensor(rng.normal(size=3))
    check_grads(
        lambda: ad.tensor_sum(ad.sigmoid(x + bias)), {"x": x, "b": bias}, tol=1e-6
    )


def test_transpose_gradcheck():
    rng = np.random.default_rng(23)
    a = Tensor(rng.normal(size=(2, 3, 4)))
    check_grads(
        lambda: ad.tensor_sum(ad.tanh(ad.transpose(a, (2, 0, 1)))), {"a": a},
        tol=1e-6,
    )


def test_determinism_bit_identical():
    rng = np.random.default_rng(29)
    data = rng.normal(size=(3, 3))

    def run():
        a = Tensor(data.copy())
        loss = ad.tensor_sum(ad.sigmoid(ad.matmul(a, a)) * a)
        loss.backward()
        return loss.data.copy(), a.grad.copy()

    l1, g1 = run()
    l2, g2 = run()
    assert np.array_equal(l1, l2)
    assert np.array_equal(g1, g2)


def test_finite_outputs_on_finite_inputs():
    rng = np.random.default_rng(31)
    a = Tensor(rng.normal(size=(5, 5)) * 100)
    out = ad.sigmoid(ad.matmul(a, a))
    assert np.all(np.isfinite(out.data))
    out2 = ad.tanh(a * a)
    assert np.all(np.isfinite(out2.data))
