import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pnmcsurf.errors import BracketError, IntegrationError
from pnmcsurf.odecore import EventSpec, OdeProblem, find_root, integrate


def exp_problem():
    return OdeProblem(1, lambda u, y: y, 0.0, 1.0, np.array([1.0]))


def harmonic_problem():
    return OdeProblem(
        2, lambda u, y: np.array([y[1], -y[0]]), 0.0, 10.0, np.array([1.0, 0.0])
    )


def linear_problem():
    return OdeProblem(1, lambda u, y: np.array([-1.0]), 0.0, 2.0, np.array([1.0]))


def test_exponential_growth():
    rel_tol = 1e-10
    traj = integrate(exp_problem(), rel_tol=rel_tol, abs_tol=1e-12)
    assert traj.states[-1][0] == pytest.approx(math.e, rel=rel_tol)


def test_harmonic_energy_conserved():
    rel_tol = 1e-10
    traj = integrate(harmonic_problem(), rel_tol=rel_tol, abs_tol=1e-12)
    energy = traj.states[-1][0] ** 2 + traj.states[-1][1] ** 2
    assert abs(energy - 1.0) <= 10.0 * rel_tol


def test_linear_event_location():
    abs_tol = 1e-12
    traj = integrate(
        linear_problem(),
        rel_tol=1e-10,
        abs_tol=abs_tol,
        events=[EventSpec(indicator=lambda u, y: y[0], direction="falling")],
    )
    assert traj.event_u == pytest.approx(1.0, abs=abs_tol)
    assert traj.event_index == 0


def test_event_direction_filter():
    # cos falls through zero at pi/2 and rises at 3*pi/2; the direction
    # filter must pick the matching crossing.
    prob = OdeProblem(
        2, lambda u, y: np.array([y[1], -y[0]]), 0.0, 10.0, np.array([1.0, 0.0])
    )
    falling = integrate(
        prob, events=[EventSpec(indicator=lambda u, y: y[0], direction="falling")]
    )
    assert falling.event_u == pytest.approx(math.pi / 2.0, abs=1e-9)
    rising = integrate(
        prob, events=[EventSpec(indicator=lambda u, y: y[0], direction="rising")]
    )
    assert rising.event_u == pytest.approx(3.0 * math.pi / 2.0, abs=1e-9)


@pytest.mark.parametrize(
    "problem, reference",
    [
        (exp_problem(), np.array([math.e])),
        (harmonic_problem(), np.array([math.cos(10.0), -math.sin(10.0)])),
        (linear_problem(), np.array([-1.0])),
    ],
    ids=["exp", "harmonic", "linear"],
)
def test_halving_rel_tol_never_increases_error(problem, reference):
    floor = 4.0 * np.finfo(float).eps * np.max(np.abs(reference))
    rel_tol = 1e-5
    errors = []
    for _ in range(12):
        traj = integrate(problem, rel_tol=rel_tol, abs_tol=1e-14)
        errors.append(float(np.max(np.abs(traj.states[-1] - reference))))
        rel_tol /= 2.0
    for coarse, fine in zip(errors, errors[1:]):
        assert fine <= coarse + floor


def test_dense_output_matches_nodes():
    abs_tol = 1e-12
    traj = integrate(harmonic_problem(), rel_tol=1e-10, abs_tol=abs_tol)
    for u, state in zip(traj.nodes, traj.states):
        assert np.max(np.abs(traj(u) - state)) <= abs_tol


def test_event_location_independent_of_step_history():
    abs_tol = 1e-12
    event = EventSpec(indicator=lambda u, y: y[0] - 0.25, direction="falling")
    prob = OdeProblem(
        1, lambda u, y: -y, 0.0, 5.0, np.array([1.0])
    )
    locs = []
    for first_step in (1e-4, 1e-1):
        traj = integrate(prob, abs_tol=abs_tol, events=[event], first_step=first_step)
        locs.append(traj.event_u)
    assert abs(locs[0] - locs[1]) <= 10.0 * abs_tol
    assert locs[0] == pytest.approx(math.log(4.0), abs=1e-9)


def test_backward_integration():
    prob = OdeProblem(1, lambda u, y: y, 1.0, 0.0, np.array([math.e]))
    traj = integrate(prob)
    assert traj.states[-1][0] == pytest.approx(1.0, rel=1e-9)
    assert np.all(np.diff(traj.nodes) < 0)


def test_non_finite_rhs_reports_location():
    def rhs(u, y):
        return np.array([1.0 / (0.5 - u)])

    with pytest.raises(IntegrationError):
        integrate(OdeProblem(1, rhs, 0.0, 1.0, np.array([0.0])))


def test_problem_validation():
    with pytest.raises(ValueError):
        OdeProblem(2, lambda u, y: y, 0.0, 1.0, np.array([1.0]))
    with pytest.raises(ValueError):
        OdeProblem(1, lambda u, y: y, 1.0, 1.0, np.array([1.0]))
    with pytest.raises(ValueError):
        integrate(exp_problem(), rel_tol=-1.0)


def test_find_root_examples():
    assert find_root(lambda x: x * x - 2.0, (1.0, 2.0), tol=1e-12) == pytest.approx(
        math.sqrt(2.0), abs=1e-11
    )
    assert find_root(lambda x: x, (-1.0, 1.0), tol=1e-12) == pytest.approx(0.0, abs=1e-11)
    assert find_root(lambda x: math.cos(x), (1.0, 2.0), tol=1e-12) == pytest.approx(
        math.pi / 2.0, abs=1e-11
    )


def test_find_root_invalid_bracket():
    with pytest.raises(BracketError):
        find_root(lambda x: x * x + 1.0, (-1.0, 1.0))


def test_find_root_endpoint_root():
    assert find_root(lambda x: x - 1.0, (1.0, 2.0)) == 1.0


@given(
    root=st.floats(-100.0, 100.0),
    left=st.floats(0.01, 10.0),
    right=st.floats(0.01, 10.0),
)
def test_find_root_recovers_shifted_cubic(root, left, right):
    f = lambda x: (x - root) ** 3 + (x - root)
    found = find_root(f, (root - left, root + right), tol=1e-12)
    assert abs(found - root) <= 1e-9 * max(1.0, abs(root))
