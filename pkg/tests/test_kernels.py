"""The numba and numpy backends must agree."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adoptmatch import _arrays, kernels
from adoptmatch.equilibrium import Side, solve_equilibrium

from conftest import instance_and_profile, small_instances

numba_k = kernels.load_backend("numba")
numpy_k = kernels.load_backend("numpy")


def _args(inst):
    vc, vf = _arrays.values(inst)
    return vc, vf, _arrays.child_order(inst), _arrays.params(inst)


@given(instance_and_profile(max_n=6, max_m=6), st.booleans())
def test_utilities_agree(case, cs):
    inst, s = case
    vc, vf, order, prm = _args(inst)
    sc, sf = _arrays.profile_arrays(s)
    a = numba_k.utilities(vc, vf, order, sc, sf, prm, cs)
    b = numpy_k.utilities(vc, vf, order, sc, sf, prm, cs)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)


@given(small_instances(max_n=6, max_m=6), st.integers(0, 2**31), st.booleans())
def test_induce_and_tmap_agree(inst, seed, cs):
    rng = np.random.default_rng(seed)
    vc, vf, order, prm = _args(inst)
    yc = rng.random(inst.n) * inst.v_bar
    yf = rng.random(inst.m) * inst.v_bar
    if cs:
        a, b = numba_k.induce_cs(vc, vf, yc, yf, prm), numpy_k.induce_cs(vc, vf, yc, yf, prm)
    else:
        a, b = numba_k.induce_fs(vc, vf, order, yc, yf, prm), numpy_k.induce_fs(vc, vf, order, yc, yf, prm)
    for x, y in zip(a, b):
        assert np.array_equal(np.asarray(x, bool), np.asarray(y, bool))
    ta = numba_k.t_map(vc, vf, order, yc, yf, prm, cs)
    tb = numpy_k.t_map(vc, vf, order, yc, yf, prm, cs)
    for x, y in zip(ta, tb):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_equilibria_agree_across_backends(seed):
    from adoptmatch.gen import generate_instance
    from adoptmatch.model import Regime

    inst = generate_instance(8, 7, 0.5, seed)
    prev = kernels.backend_name()
    out = {}
    try:
        for name in kernels.BACKENDS:
            kernels.use_backend(name)
            out[name] = [
                solve_equilibrium(inst, r, sd) for r in Regime for sd in Side
            ]
    finally:
        kernels.use_backend(prev)
    for a, b in zip(out["numba"], out["numpy"]):
        assert a.profile == b.profile
        np.testing.assert_allclose(a.utilities.as_vector(), b.utilities.as_vector(), atol=1e-12)


def test_backend_switch_and_unknown():
    prev = kernels.backend_name()
    kernels.use_backend("numpy")
    assert kernels.backend_name() == "numpy"
    kernels.use_backend(prev)
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")
