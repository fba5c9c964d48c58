from dataclasses import replace

import numpy as np
import pytest

from sdaell import problems
from sdaell.brownian import generate
from sdaell.errors import UnknownProblem
from sdaell.pencil import projector_bundle
from sdaell.stepper import DEFAULT_OPTS, integrate_ll


def test_names():
    assert problems.names() == ["gbm_constrained", "linear_const", "paper3x3"]


def test_unknown():
    with pytest.raises(UnknownProblem):
        problems.get("nope")


def test_paper_entry():
    p = problems.get("paper3x3").problem
    assert (p.dim_d, p.dim_noise, p.horizon_T) == (3, 3, 1.0)
    np.testing.assert_array_equal(p.a(0.3), problems.PAPER_A)
    np.testing.assert_array_equal(p.initial, [1.0, 1.0, -1.0])
    x = np.array([2.0, -1.0, 0.5])
    np.testing.assert_array_equal(p.f(0.0, x), [2 - 8 - 1 + 1, 4 + 0.5, 2 - 1])
    np.testing.assert_array_equal(p.g(0.0, x), [[3.0, 0, 0.5], [0, 0, 0], [0, 1.0, 0]])
    b = projector_bundle(p.a(0.0))
    for got, want in ((b.a_pinv, problems.PAPER_A_PINV), (b.p, problems.PAPER_P),
                      (b.r, problems.PAPER_R)):
        assert np.max(np.abs(got - want)) <= 1e-12


def test_horizon_override():
    assert problems.get("paper3x3", horizon=0.5).problem.horizon_T == 0.5


def test_gbm_entry_constraint_along_path():
    entry = problems.get("gbm_constrained")
    p = entry.problem
    assert (p.dim_d, p.dim_noise) == (2, 1)
    b = projector_bundle(p.a(0.0))
    assert np.all(b.r @ p.g(0.0, np.array([3.0, 1.0])) == 0.0)
    traj = integrate_ll(p, DEFAULT_OPTS, generate(17, 2**8, 1, 1.0))
    assert np.max(np.abs(traj.states[:, 0] - traj.states[:, 1])) <= 1e-8


def test_linear_exact():
    entry = problems.get("linear_const")
    assert entry.exact(0.5, np.zeros(1))[0] == pytest.approx(np.exp(0.5))


def test_registry_rejects_duplicates_and_failed_validation():
    reg = problems.Registry()
    reg.register("linear_const", problems.linear_const)
    with pytest.raises(ValueError):
        reg.register("linear_const", problems.linear_const)

    def bad():
        return problems.ProblemEntry("bad", problems.paper3x3().problem)

    with pytest.raises(ValueError):
        reg.register("other", bad)

    def inconsistent():
        e = problems.paper3x3()
        return problems.ProblemEntry("paper3x3", replace(e.problem, initial=np.array([1.0, 1.0, 0.0])))

    with pytest.raises(AssertionError):
        reg.register("paper3x3", inconsistent, problems._validate_paper3x3)
    assert reg.names() == ["linear_const"]
