import numpy as np
import pytest

from sdcdrive.geometry import Pose
from sdcdrive.route import RouteProgress, RouteSpec, oracle_waypoints, route_point_local


@pytest.fixture
def straight():
    return RouteSpec(np.array([(0.0, 0.0), (0.0, 100.0)]))


def test_length_matches_goal_polyline(straight):
    assert straight.length == pytest.approx(100.0)


def test_duplicate_goals_rejected():
    with pytest.raises(ValueError):
        RouteSpec(np.array([(0.0, 0.0), (0.0, 0.0), (1.0, 1.0)]))


def test_corner_goals_survive_resampling():
    route = RouteSpec(np.array([(0.0, 0.0), (0.0, 10.3), (5.0, 10.3)]))
    assert route.length == pytest.approx(15.3)


class TestProgress:
    def test_monotone(self, straight):
        prog = RouteProgress(straight)
        assert prog.update((0.0, 10.0)) == pytest.approx(10.0)
        assert prog.update((0.0, 4.0)) == pytest.approx(10.0)  # never backwards
        assert prog.update((0.5, 20.0)) == pytest.approx(20.0)

    def test_lateral_distance(self, straight):
        prog = RouteProgress(straight)
        assert prog.lateral_distance((3.0, 50.0)) == pytest.approx(3.0)


class TestOracleWaypoints:
    def test_straight_ahead(self, straight):
        ego = Pose(0.0, 0.0, -90.0)  # facing +y
        wps = oracle_waypoints(ego, straight, progress_s=0.0)
        assert np.allclose(wps, [(0, 2), (0, 4), (0, 6)], atol=1e-9)

    def test_route_end_repeats_terminal_point(self, straight):
        ego = Pose(0.0, 100.0, -90.0)
        wps = oracle_waypoints(ego, straight, progress_s=100.0)
        assert np.allclose(wps[0], wps[1]) and np.allclose(wps[1], wps[2])
        assert np.allclose(wps[0], (0.0, 0.0), atol=1e-9)

    def test_lateral_displacement_shared_by_all_points(self, straight):
        ego = Pose(1.0, 20.0, -90.0)  # 1 m right of the path
        wps = oracle_waypoints(ego, straight, progress_s=20.0)
        assert np.allclose(wps[:, 0], -1.0, atol=1e-9)
        assert np.allclose(wps[:, 1], (2.0, 4.0, 6.0), atol=1e-9)


def test_route_point_local_next_goal():
    route = RouteSpec(np.array([(0.0, 0.0), (0.0, 50.0), (20.0, 50.0)]))
    ego = Pose(0.0, 10.0, -90.0)
    pt = route_point_local(ego, route, progress_s=10.0)
    assert np.allclose(pt, (0.0, 40.0), atol=1e-9)
    pt2 = route_point_local(ego, route, progress_s=60.0)
    assert np.allclose(pt2, (20.0, 40.0), atol=1e-9)
