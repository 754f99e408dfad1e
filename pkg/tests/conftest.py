import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from adoptmatch import kernels
from adoptmatch.gen import generate_instance
from adoptmatch.model import StrategyProfile

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def small_instances(draw, max_n=4, max_m=4, kappa_zero=False):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    lam = draw(st.sampled_from([0.0, 0.25, 0.5, 0.75]))
    seed = draw(st.integers(0, 10_000))
    p = draw(st.sampled_from([0.2, 0.5, 0.8, 0.95]))
    d_c = draw(st.sampled_from([0.0, 0.5, 0.9, 0.99]))
    d_f = draw(st.sampled_from([0.0, 0.5, 0.9, 0.99]))
    if kappa_zero:
        k_c = k_f = 0.0
    else:
        k_c = draw(st.sampled_from([0.0, 0.02, 0.1, 0.3]))
        k_f = draw(st.sampled_from([0.0, 0.02, 0.1, 0.3]))
    return generate_instance(n, m, lam, seed, delta_C=d_c, delta_F=d_f, kappa_C=k_c, kappa_F=k_f, p=p)


@st.composite
def profiles_for(draw, inst):
    seed = draw(st.integers(0, 2**32 - 1))
    density = draw(st.sampled_from([0.3, 0.6, 0.9]))
    rng = np.random.default_rng(seed)
    return StrategyProfile(rng.random((inst.n, inst.m)) < density, rng.random((inst.m, inst.n)) < density)


@st.composite
def instance_and_profile(draw, **kw):
    inst = draw(small_instances(**kw))
    return inst, draw(profiles_for(inst))


def random_profile(inst, rng, density=0.6):
    return StrategyProfile(rng.random((inst.n, inst.m)) < density, rng.random((inst.m, inst.n)) < density)


@pytest.fixture(params=kernels.BACKENDS)
def backend(request):
    prev = kernels.backend_name()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(prev)


@pytest.fixture
def base_2x2():
    return generate_instance(2, 2, 0.0, 3)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
