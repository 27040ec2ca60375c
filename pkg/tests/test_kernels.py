import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ternary_rram import _accel, _kernels, analysis, device, pcsa

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba backend not active")

TIMING = analysis._timing_args(pcsa.default_params(), pcsa.NOMINAL, 50e-9)


@needs_numba
@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**63), st.sampled_from([-1, 0, 1]), st.integers(0, 10**9), st.sampled_from(["strong", "weak"]))
def test_ber_backends_agree_exactly(key, w, start, preset):
    c = device.get_preset(preset)
    args = (np.uint64(key), w, start, 3000, c.lrs_median, c.lrs_log_sigma, c.hrs_median, c.hrs_log_sigma, *TIMING)
    assert np.array_equal(_kernels._ber_reads_numba(*args), _kernels._ber_reads_numpy(*args))


@needs_numba
@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**63), st.integers(1, 40))
def test_map_backends_agree_exactly(key, reads):
    r = np.geomspace(1e3, 1e6, 9)
    g1, g2 = np.meshgrid(r, r, indexing="ij")
    args = (np.uint64(key), g1.ravel().copy(), g2.ravel().copy(), reads, *TIMING)
    assert np.array_equal(_kernels._map_counts_numba(*args), _kernels._map_counts_numpy(*args))


def test_chunked_ber_is_split_invariant():
    c = device.preset_weak()
    key = np.uint64(123)
    whole = _kernels._ber_reads_numpy(key, 0, 0, 1000, c.lrs_median, c.lrs_log_sigma, c.hrs_median, c.hrs_log_sigma, *TIMING)
    part = _kernels._ber_reads_numpy(key, 0, 400, 600, c.lrs_median, c.lrs_log_sigma, c.hrs_median, c.hrs_log_sigma, *TIMING)
    assert np.array_equal(whole[400:], part)


def test_tie_reads_zero():
    key = np.uint64(5)
    r = np.array([5e4, 1e3])
    counts = _kernels.map_counts(key, r, r.copy(), 50, *TIMING)
    assert np.all(counts[:, 1] == 50)


def test_env_flag_selects_numpy_backend():
    code = "from ternary_rram import _accel, _kernels; print(_accel.BACKEND, _kernels.ber_reads.__name__)"
    env = dict(os.environ, TERNARY_RRAM_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "_ber_reads_numpy"]


@needs_numba
def test_numba_is_default_backend():
    assert _accel.BACKEND == "numba"
    assert _kernels.ber_reads is _kernels._ber_reads_numba
