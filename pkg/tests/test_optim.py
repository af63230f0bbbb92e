"""Adam update rule against hand-computed steps."""

import numpy as np
import pytest

from setinfer.errors import GradientError
from setinfer.optim import Adam
from setinfer.tensor import Parameters


def test_zero_gradient_leaves_parameters_unchanged():
    params = Parameters()
    params.add("w", [1.0, -2.0, 3.0])
    opt = Adam(params)
    opt.step({"w": np.zeros(3)})
    assert np.allclose(params["w"].data, [1.0, -2.0, 3.0])


def test_first_step_size_matches_hand_computation():
    # grad=1 at defaults: mhat = vhat = 1, so step = lr / (1 + eps).
    params = Parameters()
    params.add("w", [0.0])
    opt = Adam(params, lr=1e-3)
    opt.step({"w": np.array([1.0])})
    expected = -1e-3 / (1.0 + 1e-8)
    assert params["w"].data[0] == pytest.approx(expected, abs=1e-15)


def test_identical_parameters_get_identical_updates():
    params = Parameters()
    params.add("a", [0.5, 0.5])
    params.add("b", [0.5, 0.5])
    opt = Adam(params)
    g = np.array([0.3, -0.7])
    for _ in range(5):
        opt.step({"a": g.copy(), "b": g.copy()})
    assert params["a"].data.tobytes() == params["b"].data.tobytes()


def test_nonfinite_gradient_errors_with_name():
    params = Parameters()
    params.add("w", [1.0])
    opt = Adam(params)
    with pytest.raises(GradientError) as exc:
        opt.step({"w": np.array([np.nan])})
    assert "w" in str(exc.value)


def test_missing_gradient_treated_as_zero():
    params = Parameters()
    params.add("w", [4.0])
    opt = Adam(params)
    opt.step({})
    assert np.allclose(params["w"].data, [4.0])


def test_state_round_trip():
    params = Parameters()
    params.add("w", [1.0, 2.0])
    opt = Adam(params, lr=0.01)
    for i in range(3):
        opt.step({"w": np.array([0.1, -0.2]) * (i + 1)})
    state = opt.state_arrays()

    params2 = Parameters()
    params2.add("w", params["w"].data.copy())
    opt2 = Adam(params2, lr=0.01)
    opt2.load_arrays(state)
    g = np.array([0.05, 0.05])
    opt.step({"w": g.copy()})
    opt2.step({"w": g.copy()})
    assert params["w"].data.tobytes() == params2["w"].data.tobytes()
