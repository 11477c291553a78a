import numpy as np

from quadricflow import suites
from quadricflow.model import sample_ellipsoid_state


def test_check_record():
    c = suites.Check("x", 1e-12, 1e-10)
    assert c.passed and c.as_dict()["pass"]
    assert not suites.Check("x", float("nan"), 1.0).passed
    assert suites.all_required_pass([c, suites.Check("y", 1.0, 0.0, required=False)])


def test_brackets_and_involution_suites(rng, p3c):
    for checks in (suites.brackets_suite(p3c, rng, 8), suites.involution_suite(p3c, rng, 8, fd_points=4)):
        assert all(c.passed for c in checks), [c for c in checks if not c.passed]


def test_gaussmap_suite(rng, p3):
    states = [sample_ellipsoid_state(rng, p3, min_abs=0.1)]
    checks = suites.gaussmap_suite(p3, states, t_end=2.0)
    assert suites.all_required_pass(checks)


def test_reduction_suite(rng, p3c):
    checks = suites.reduction_suite(p3c, rng, count=1, t_end=2.0)
    assert suites.all_required_pass(checks), [c for c in checks if not c.passed]


def test_reduction_without_barriers(rng, p3):
    # zero-momentum planes may cross the origin; the reduction must follow them
    checks = suites.reduction_suite(p3, rng, count=1, t_end=2.0, speed=1.5)
    assert suites.all_required_pass(checks)


def test_identities_suite_flags_stated_forms(rng, p3):
    states = [sample_ellipsoid_state(rng, p3, min_abs=0.1)]
    checks = {c.name: c for c in suites.identities_suite(p3, states, mu=0.0, t_end=1.0)}
    assert checks["sum_y2_over_a"].passed
    assert not checks["sum_bF_stated"].required
    assert all(c.passed for c in checks.values() if c.required)


def test_reduce_states_signed_projection():
    theta0 = np.array([0.3])
    x = np.array([-0.5, 0.2])
    rows = np.array([[xi * np.cos(theta0[0]), xi * np.sin(theta0[0]), 0.0, 0.0] for xi in x])
    red = suites.reduce_states(rows, np.array([0.0]), np.array([1.0]), theta0)
    np.testing.assert_allclose(red[:, 0], x, atol=1e-15)
