import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ternary_rram import faults
from ternary_rram.datasets import Dataset
from ternary_rram.faults import ErrorSpec, eval_under_errors, inject, sweep
from ternary_rram.qnn.network import mlp, quantized_weights
from ternary_rram.qnn.train import Hyper, evaluate, train


def _within(count, n, p, sigmas=3.0):
    sd = np.sqrt(n * p * (1 - p))
    return abs(count - n * p) <= sigmas * sd + 1e-9


@pytest.fixture(scope="module")
def toy():
    rng = np.random.default_rng(0)
    centres = rng.standard_normal((4, 24)) * 2
    y = rng.integers(0, 4, 800)
    data = Dataset((centres[y] + rng.standard_normal((800, 24))).astype(np.float32), y.astype(np.int64))
    nets = {}
    for kind in ("ternary", "binary"):
        net = mlp([24, 64, 4], kind)
        state, _ = train(net, data, Hyper(epochs=4, batch_size=32), seed=0)
        nets[kind] = (net, state)
    return data, nets


def test_clean_spec_is_identity(rng):
    w = rng.integers(-1, 2, (50, 40)).astype(np.float32)
    assert np.array_equal(inject(w, ErrorSpec(), rng), w)


def test_p1_one_flips_every_nonzero(rng):
    w = rng.integers(-1, 2, (30, 30)).astype(np.float32)
    assert np.array_equal(inject(w, ErrorSpec(p1=1.0), rng), -w)


def test_p2_one_zeroes_everything(rng):
    w = rng.integers(-1, 2, (30, 30)).astype(np.float32)
    assert not inject(w, ErrorSpec(p2=1.0), rng).any()


def test_type3_count_and_sign_balance(rng):
    out = inject(np.zeros(100_000), ErrorSpec(p3=0.2), rng)
    k = int((out != 0).sum())
    assert _within(k, 100_000, 0.2)
    assert stats.binomtest(int((out == 1).sum()), k, 0.5).pvalue > 1e-3


@pytest.mark.parametrize("p1,p2", [(0.1, 0.0), (0.0, 0.15), (0.05, 0.2)])
def test_nonzero_error_counts_are_binomial(rng, p1, p2):
    w = np.where(rng.random(200_000) < 0.5, 1.0, -1.0)
    out = inject(w, ErrorSpec(p1, p2), rng)
    assert _within(int((out == -w).sum()), w.size, p1)
    assert _within(int((out == 0).sum()), w.size, p2)
    assert _within(int((out != w).sum()), w.size, p1 + p2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 0.5), st.floats(0, 0.5), st.floats(0, 1))
def test_values_stay_ternary_and_input_untouched(seed, p1, p2, p3):
    rng = np.random.default_rng(seed)
    w = rng.integers(-1, 2, (17, 9)).astype(np.float32)
    before = w.copy()
    out = inject({"a": w, "b": w[:3]}, ErrorSpec(p1, p2, p3), rng)
    assert np.array_equal(w, before)
    for v in out.values():
        assert set(np.unique(v)) <= {-1.0, 0.0, 1.0}
    a, nz = out["a"], before != 0
    assert np.all((a[nz] == before[nz]) | (a[nz] == -before[nz]) | (a[nz] == 0))
    if p1 == p2 == 0:
        assert np.array_equal(a[nz], before[nz])
    if p3 == 0:
        assert not a[~nz].any()


def test_dict_injection_is_order_independent(rng):
    w = {"1.weight": np.ones((4, 4)), "0.weight": -np.ones((3, 3))}
    spec = ErrorSpec(0.3, 0.2)
    a = inject(w, spec, np.random.default_rng(5))
    b = inject(dict(reversed(list(w.items()))), spec, np.random.default_rng(5))
    assert all(np.array_equal(a[k], b[k]) for k in w)


def test_spec_validation():
    with pytest.raises(ValueError):
        ErrorSpec(p1=-0.1)
    with pytest.raises(ValueError):
        ErrorSpec(p3=1.5)
    with pytest.raises(ValueError):
        ErrorSpec(p1=0.6, p2=0.5)
    with pytest.raises(ValueError):
        ErrorSpec.single(4, 0.1)
    with pytest.raises(ValueError):
        inject(np.array([0.5]), ErrorSpec(p1=0.1), np.random.default_rng(0))
    assert ErrorSpec.single(2, 0.1) == ErrorSpec(p2=0.1)


def test_binary_rejects_type2_and_type3(toy, rng):
    data, nets = toy
    net, state = nets["binary"]
    with pytest.raises(ValueError, match="Type 1"):
        eval_under_errors(net, state, ErrorSpec(p3=0.1), data)
    with pytest.raises(ValueError):
        inject(np.ones(4), ErrorSpec(p2=0.1), rng, binary=True)
    mean, _, _ = eval_under_errors(net, state, ErrorSpec(p1=0.05), data, n_passes=2)
    assert 0 <= mean <= 1


def test_real_network_is_rejected(toy):
    data, _ = toy
    net = mlp([24, 4], "real")
    state, _ = train(net, data, Hyper(epochs=1), seed=0)
    with pytest.raises(ValueError, match="binary or ternary"):
        eval_under_errors(net, state, ErrorSpec(p1=0.1), data)


def test_clean_evaluation_matches_plain_evaluate(toy):
    data, nets = toy
    net, state = nets["ternary"]
    mean, std, accs = eval_under_errors(net, state, ErrorSpec(), data, n_passes=3)
    assert mean == evaluate(net, state, data) and std == 0.0 and len(accs) == 3


def test_injection_does_not_touch_trainer_state(toy):
    data, nets = toy
    net, state = nets["ternary"]
    snap = state.copy()
    eval_under_errors(net, state, ErrorSpec(0.1, 0.1, 0.1), data, n_passes=2)
    assert all(np.array_equal(snap.params[k], state.params[k]) for k in state.params)
    assert all(np.array_equal(snap.buffers[k], state.buffers[k]) for k in state.buffers)


@pytest.mark.parametrize("per_batch", [True, False])
def test_results_do_not_depend_on_threads(toy, per_batch):
    data, nets = toy
    net, state = nets["ternary"]
    spec = ErrorSpec(0.1, 0.05, 0.1)
    one = eval_under_errors(net, state, spec, data, 4, seed=3, per_batch=per_batch, threads=1)
    four = eval_under_errors(net, state, spec, data, 4, seed=3, per_batch=per_batch, threads=4)
    assert np.array_equal(one[2], four[2])
    other = eval_under_errors(net, state, spec, data, 4, seed=4, per_batch=per_batch)
    assert not np.array_equal(one[2], other[2])


def test_per_pass_mode_uses_one_draw_per_pass(toy, monkeypatch):
    data, nets = toy
    net, state = nets["ternary"]
    calls = []
    real = faults.inject
    monkeypatch.setattr(faults, "inject", lambda *a, **k: calls.append(1) or real(*a, **k))
    eval_under_errors(net, state, ErrorSpec(p1=0.1), data, n_passes=3, per_batch=False)
    assert len(calls) == 3
    calls.clear()
    eval_under_errors(net, state, ErrorSpec(p1=0.1), data, n_passes=3, per_batch=True, batch_size=200)
    assert len(calls) == 3 * 4


def test_sweep_rejects_unsorted_rates(toy):
    data, nets = toy
    with pytest.raises(ValueError, match="ascending"):
        sweep(*nets["ternary"], 1, [0.2, 0.1], data)


def test_type1_curve_is_monotone_within_noise(toy):
    data, nets = toy
    pts = sweep(*nets["ternary"], 1, [0.0, 0.1, 0.2, 0.3, 0.4], data, seed=0, n_passes=5)
    assert pts[0].std_acc == 0.0
    for a, b in zip(pts, pts[1:]):
        noise = 3 * np.hypot(a.std_acc, b.std_acc) / np.sqrt(5) + 1e-3
        assert b.mean_acc <= a.mean_acc + noise
    assert pts[-1].mean_acc < pts[0].mean_acc
    assert pts[1].row() == (1, 0.1, pts[1].mean_acc, pts[1].std_acc, 5)


def test_quantized_weights_are_what_gets_corrupted(toy):
    _, nets = toy
    net, state = nets["ternary"]
    wq = quantized_weights(net, state)
    out = inject(wq, ErrorSpec(p2=1.0), np.random.default_rng(0))
    assert all(not v.any() for v in out.values())
