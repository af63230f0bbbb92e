"""Autodiff engine: forward values, gradients vs central differences."""

import numpy as np
import pytest

from gradcheck import fd_grad, max_rel_err
from setinfer.errors import GradientError, ShapeError
from setinfer.tensor import Parameters, Tensor, concat, grad_dict, no_grad, stack


def test_softmax_symmetry():
    y = Tensor([0.0, 0.0]).softmax()
    assert np.allclose(y.data, [0.5, 0.5])


def test_softmax_empty_axis_errors():
    with pytest.raises(ShapeError):
        Tensor(np.zeros((3, 0))).softmax()


def test_layer_norm_constant_vector_is_zero():
    y = Tensor([2.5, 2.5, 2.5, 2.5]).layer_norm()
    assert np.allclose(y.data, 0.0)


def test_matmul_identity():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(3, 3))
    out = Tensor(np.eye(3)) @ Tensor(a)
    assert np.allclose(out.data, a)


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError) as exc:
        Tensor(np.zeros((2, 3))) @ Tensor(np.zeros((4, 2)))
    assert "(2, 3)" in str(exc.value) and "(4, 2)" in str(exc.value)


def test_backward_sum_of_squares():
    x = Tensor([1.0, 2.0])
    loss = (x * x).sum()
    loss.backward()
    assert np.allclose(x.grad, [2.0, 4.0])


def test_backward_requires_scalar():
    x = Tensor([1.0, 2.0])
    with pytest.raises(GradientError):
        (x * x).backward()


def test_unreachable_parameter_gets_zero_grad():
    params = Parameters()
    a = params.add("a", [1.0, 2.0])
    params.add("b", [3.0])
    loss = (a * a).sum()
    grads = grad_dict(loss, params)
    assert np.allclose(grads["a"], [2.0, 4.0])
    assert np.allclose(grads["b"], [0.0])


def test_fanout_accumulates():
    x = Tensor(3.0)
    loss = x * x + x  # d/dx = 2x + 1 = 7
    loss.backward()
    assert np.allclose(x.grad, 7.0)


def test_two_layer_net_matches_central_difference():
    rng = np.random.default_rng(7)
    arrays = {
        "w1": rng.normal(size=(4, 5)),
        "b1": rng.normal(size=(5,)),
        "w2": rng.normal(size=(5, 3)),
        "x": rng.normal(size=(2, 4)),
    }

    params = Parameters()
    tens = {}
    for k, v in arrays.items():
        tens[k] = params.add(k, v)
    x = tens["x"]
    h = (x @ tens["w1"] + tens["b1"]).gelu()
    loss = ((h @ tens["w2"]) ** 2).mean()
    grads = grad_dict(loss, params)

    def scalar_fn(arrs):
        x = Tensor(arrs["x"])
        h = (x @ Tensor(arrs["w1"]) + Tensor(arrs["b1"])).gelu()
        return float((((h @ Tensor(arrs["w2"])) ** 2).mean()).data)

    for name in arrays:
        numeric = fd_grad(scalar_fn, arrays, name)
        assert max_rel_err(grads[name], numeric) <= 1e-4, name


OPS = {
    "add": lambda x, y: x + y,
    "sub": lambda x, y: x - y,
    "mul": lambda x, y: x * y,
    "div": lambda x, y: x / (y * y + 1.0),
    "matmul": lambda x, y: x @ y.transpose(),
    "tanh": lambda x, y: x.tanh() + y.sum(),
    "sigmoid": lambda x, y: x.sigmoid() * y,
    "softplus": lambda x, y: x.softplus() + y,
    "gelu": lambda x, y: x.gelu() * y,
    "exp": lambda x, y: (x * 0.3).exp() + y,
    "log": lambda x, y: (x * x + 1.0).log() * y,
    "sqrt": lambda x, y: (x * x + 0.5).sqrt() + y,
    "softmax": lambda x, y: x.softmax(axis=-1) * y,
    "logsumexp": lambda x, y: x.logsumexp(axis=-1) + y.sum(axis=-1),
    "layer_norm": lambda x, y: x.layer_norm() * y,
    "mean": lambda x, y: (x * y).mean(axis=0),
    "getitem": lambda x, y: x[1:, :] * y[:2, :],
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_gradients_match_central_difference(name):
    op = OPS[name]
    for seed in range(3):
        rng = np.random.default_rng(100 + seed)
        arrays = {"x": rng.normal(size=(3, 4)), "y": rng.normal(size=(3, 4))}

        def scalar_fn(arrs):
            out = op(Tensor(arrs["x"]), Tensor(arrs["y"]))
            return float((out * out).sum().data)

        params = Parameters()
        tx = params.add("x", arrays["x"])
        ty = params.add("y", arrays["y"])
        out = op(tx, ty)
        grads = grad_dict((out * out).sum(), params)
        for pname in ("x", "y"):
            numeric = fd_grad(scalar_fn, arrays, pname)
            assert max_rel_err(grads[pname], numeric) <= 1e-4, (name, pname, seed)


def test_broadcast_gradients():
    rng = np.random.default_rng(3)
    arrays = {"x": rng.normal(size=(3, 4)), "b": rng.normal(size=(4,))}

    def scalar_fn(arrs):
        out = Tensor(arrs["x"]) + Tensor(arrs["b"])
        return float((out * out).sum().data)

    params = Parameters()
    tx = params.add("x", arrays["x"])
    tb = params.add("b", arrays["b"])
    out = tx + tb
    grads = grad_dict((out * out).sum(), params)
    for pname in arrays:
        numeric = fd_grad(scalar_fn, arrays, pname)
        assert max_rel_err(grads[pname], numeric) <= 1e-4, pname


def test_batched_matmul_gradients():
    rng = np.random.default_rng(11)
    arrays = {"a": rng.normal(size=(2, 3, 4)), "b": rng.normal(size=(2, 4, 5))}

    def scalar_fn(arrs):
        out = Tensor(arrs["a"]) @ Tensor(arrs["b"])
        return float((out * out).sum().data)

    params = Parameters()
    ta = params.add("a", arrays["a"])
    tb = params.add("b", arrays["b"])
    grads = grad_dict(((ta @ tb) ** 2).sum(), params)
    for pname in arrays:
        numeric = fd_grad(scalar_fn, arrays, pname)
        assert max_rel_err(grads[pname], numeric) <= 1e-4, pname


@pytest.mark.parametrize(
    "sa,sb",
    [((4,), (4, 5)), ((3, 4), (4,)), ((4,), (4,)), ((2, 3, 4), (4,))],
)
def test_vector_matmul_gradients(sa, sb):
    rng = np.random.default_rng(12)
    arrays = {"a": rng.normal(size=sa), "b": rng.normal(size=sb)}

    def scalar_fn(arrs):
        out = Tensor(arrs["a"]) @ Tensor(arrs["b"])
        return float((out * out).sum().data)

    params = Parameters()
    ta = params.add("a", arrays["a"])
    tb = params.add("b", arrays["b"])
    out = ta @ tb
    assert out.data.shape == (np.asarray(arrays["a"]) @ np.asarray(arrays["b"])).shape
    grads = grad_dict(((out * out)).sum(), params)
    for pname in arrays:
        numeric = fd_grad(scalar_fn, arrays, pname)
        assert max_rel_err(grads[pname], numeric) <= 1e-4, pname


def test_concat_stack_gather_gradients():
    rng = np.random.default_rng(13)
    arrays = {"a": rng.normal(size=(2, 3)), "b": rng.normal(size=(4, 3))}
    idx = [0, 2, 2, 1]

    def scalar_fn(arrs):
        cat = concat([Tensor(arrs["a"]), Tensor(arrs["b"])], axis=0)
        rows = Tensor(arrs["b"]).gather_rows(idx)
        st = stack([rows.sum(axis=0), cat.mean(axis=0)], axis=0)
        return float((st * st).sum().data)

    params = Parameters()
    ta = params.add("a", arrays["a"])
    tb = params.add("b", arrays["b"])
    cat = concat([ta, tb], axis=0)
    rows = tb.gather_rows(idx)
    st = stack([rows.sum(axis=0), cat.mean(axis=0)], axis=0)
    grads = grad_dict((st * st).sum(), params)
    for pname in arrays:
        numeric = fd_grad(scalar_fn, arrays, pname)
        assert max_rel_err(grads[pname], numeric) <= 1e-4, pname


def test_reverse_mode_linearity():
    rng = np.random.default_rng(17)
    x0 = rng.normal(size=(3,))
    a, b = 2.5, -1.25

    def grads_of(fn):
        x = Tensor(x0)
        fn(x).backward()
        return x.grad

    gf = grads_of(lambda x: (x.tanh() * x).sum())
    gg = grads_of(lambda x: (x * x * x).sum())
    gcombo = grads_of(lambda x: a * (x.tanh() * x).sum() + b * (x * x * x).sum())
    assert np.allclose(gcombo, a * gf + b * gg, atol=1e-12)


def test_forward_determinism_bitwise():
    rng = np.random.default_rng(19)
    x = rng.normal(size=(5, 6))
    w = rng.normal(size=(6, 6))

    def run():
        return ((Tensor(x) @ Tensor(w)).layer_norm().gelu().softmax(axis=-1)).data

    a, b = run(), run()
    assert a.tobytes() == b.tobytes()


def test_no_grad_skips_recording():
    x = Tensor([1.0, 2.0])
    with no_grad():
        y = (x * x).sum()
    assert y._parents == ()


def test_duplicate_parameter_name_rejected():
    params = Parameters()
    params.add("w", [1.0])
    with pytest.raises(ValueError):
        params.add("w", [2.0])
