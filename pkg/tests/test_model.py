import json

import numpy as np
import pytest
from hypothesis import given

from adoptmatch.model import (
    Agent,
    Instance,
    StrategyProfile,
    matching_correspondence,
    validate_instance,
)

from conftest import instance_and_profile, small_instances


def make(vc=((1.0, 0.5), (0.2, 0.7)), vf=((0.3, 0.9), (0.8, 0.1)), **kw):
    params = dict(delta_C=0.5, delta_F=0.5, kappa_C=0.1, kappa_F=0.1, p=0.5)
    params.update(kw)
    return Instance(np.array(vc), np.array(vf), **params)


def test_valid_instance_ok():
    assert validate_instance(make()).ok


def test_row_strictness_violation():
    rep = validate_instance(make(vc=((0.5, 0.5), (0.2, 0.7))))
    assert not rep.ok
    assert "row-strictness child 0" in rep.violations


def test_family_row_strictness_violation():
    rep = validate_instance(make(vf=((0.3, 0.9), (0.4, 0.4))))
    assert "row-strictness family 1" in rep.violations


def test_p_boundary_violation():
    rep = validate_instance(make(p=1.0))
    assert "p out of (0,1)" in rep.violations


@pytest.mark.parametrize(
    "kw, msg",
    [
        (dict(delta_C=1.0), "delta_C out of [0,1)"),
        (dict(delta_F=-0.1), "delta_F out of [0,1)"),
        (dict(kappa_C=-0.01), "kappa_C must be non-negative"),
        (dict(p=0.0), "p out of (0,1)"),
    ],
)
def test_parameter_violations(kw, msg):
    assert msg in validate_instance(make(**kw)).violations


def test_non_finite_values_reported():
    rep = validate_instance(make(vc=((np.inf, 0.5), (0.2, 0.7))))
    assert not rep.ok


def test_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        Instance(np.ones((2, 3)), np.ones((2, 2)), 0.5, 0.5, 0.1, 0.1, 0.5)


def test_correspondence_all_ones():
    s = StrategyProfile.full(2, 2)
    assert matching_correspondence(s).pairs == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_correspondence_no_child_interest():
    s = StrategyProfile(np.zeros((2, 2), bool), np.ones((2, 2), bool))
    assert len(matching_correspondence(s)) == 0


def test_correspondence_single_overlap():
    ci = np.array([[1, 0], [0, 0]], bool)
    fi = np.array([[1, 1], [0, 0]], bool)
    mc = matching_correspondence(StrategyProfile(ci, fi))
    assert mc.pairs == {(0, 0)}
    assert mc.of_child(0) == {0} and mc.of_family(0) == {0}
    assert mc.of_child(1) == frozenset()
    assert mc.is_matching()


@given(instance_and_profile())
def test_correspondence_views_symmetric(case):
    inst, s = case
    mc = matching_correspondence(s)
    for c in range(inst.n):
        for f in range(inst.m):
            mutual = bool(s.child_interest[c, f] and s.family_interest[f, c])
            assert ((c, f) in mc) == mutual == (f in mc.of_child(c)) == (c in mc.of_family(f))


@given(small_instances(max_n=6, max_m=6))
def test_generated_instances_validate(inst):
    assert validate_instance(inst).ok


@given(small_instances())
def test_json_roundtrip(inst):
    back = Instance.from_dict(json.loads(inst.dumps()))
    assert np.array_equal(back.v_child, inst.v_child)
    assert np.array_equal(back.v_family, inst.v_family)
    assert (back.delta_C, back.delta_F, back.kappa_C, back.kappa_F, back.p) == (
        inst.delta_C, inst.delta_F, inst.kappa_C, inst.kappa_F, inst.p
    )


def test_json_rejects_unknown_field():
    d = make().to_dict()
    d["extra"] = 1
    with pytest.raises(ValueError, match="unknown"):
        Instance.from_dict(d)


def test_json_rejects_missing_field():
    d = make().to_dict()
    del d["p"]
    with pytest.raises(ValueError, match="missing"):
        Instance.from_dict(d)


def test_json_rejects_wrong_declared_size():
    d = make().to_dict()
    d["n"] = 3
    with pytest.raises(ValueError):
        Instance.from_dict(d)


def test_instance_is_immutable():
    inst = make()
    with pytest.raises(ValueError):
        inst.v_child[0, 0] = 5.0


def test_replace_shortcuts():
    inst = make().replace(delta=0.9, kappa=0.0)
    assert inst.delta_C == inst.delta_F == 0.9
    assert inst.kappa_C == inst.kappa_F == 0.0


def test_profile_roundtrip_and_rows():
    s = StrategyProfile(np.array([[1, 0], [0, 1]], bool), np.array([[1, 1], [0, 0]], bool))
    assert StrategyProfile.from_dict(s.to_dict()) == s
    assert np.array_equal(s.row(Agent.family(0)), [True, True])
    t = s.with_row(Agent.child(0), [False, True])
    assert not t.child_interest[0, 0] and t.child_interest[0, 1]
    assert s.child_interest[0, 0]  # original untouched


def test_agent_labels():
    assert str(Agent.child(2)) == "c2" and str(Agent.family(0)) == "f0"


def test_correspondence_not_matching():
    s = StrategyProfile.full(2, 2)
    assert not matching_correspondence(s).is_matching()
