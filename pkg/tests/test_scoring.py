import math

import numpy as np
import pytest

from reference_impls import naive_accuracy, naive_iou, naive_mae, naive_seg_loss
from sdcdrive.route import RouteProgress, RouteSpec
from sdcdrive.scoring import (AggregateScore, InfractionLedger, MetricReport,
                              PenaltyTable, RouteResult, TerminationMonitor, accuracy,
                              check_termination, detect_infractions, driving_score,
                              infraction_penalty, iou, mae, route_completion, seg_loss,
                              total_loss)
from sdcdrive.trace import TraceRecorder
from sdcdrive.worldmap import PhaseStep, StaticObstacle, StopSign, TrafficLight, WorldMap


def straight_map(**kwargs):
    road = [(-3.5, -20.0), (3.5, -20.0), (3.5, 150.0), (-3.5, 150.0)]
    return WorldMap(name="test-straight", roads=[road], **kwargs)


def straight_route(length=100.0):
    return RouteSpec(np.array([(0.0, 0.0), (0.0, length)]))


def drive_trace(route, ys, dt=0.1, xs=None, speeds=None, world_map=None,
                termination="completed", light_red=None, actors=()):
    """Build a trace for an ego moving through the given y positions."""
    world_map = world_map or straight_map()
    rec = TraceRecorder(dt)
    prog = RouteProgress(route)
    xs = xs if xs is not None else np.zeros(len(ys))
    for i, (x, y) in enumerate(zip(xs, ys)):
        speed = speeds[i] if speeds is not None else (
            abs(ys[min(i + 1, len(ys) - 1)] - y) / dt)
        s = prog.update((x, y))
        rec.add_step(t=i * dt, ego_xy=(x, y), ego_heading=-90.0, ego_speed=speed,
                     controls=(0.0, 0.5, 0.0), progress_s=s,
                     on_road=bool(world_map.on_road(x, y)),
                     actors=actors(i) if callable(actors) else actors,
                     light_red={k: v[i] for k, v in light_red.items()} if light_red else None)
    return rec.freeze(termination)


class TestInfractionPenalty:
    def test_empty_ledger_is_one(self):
        assert infraction_penalty(InfractionLedger()) == 1.0

    def test_one_pedestrian_collision(self):
        ledger = InfractionLedger()
        ledger.record("collision_pedestrian", 1.0, "walker")
        assert infraction_penalty(ledger) == pytest.approx(0.5)

    def test_two_red_one_stop(self):
        ledger = InfractionLedger()
        ledger.record("red_light", 1.0)
        ledger.record("red_light", 5.0)
        ledger.record("stop_sign", 9.0)
        assert infraction_penalty(ledger) == pytest.approx(0.392, abs=1e-12)

    def test_paper_penalty_values(self):
        table = PenaltyTable()
        assert table.collision_pedestrian == 0.50
        assert table.collision_vehicle == 0.60
        assert table.collision_static == 0.65
        assert table.red_light == 0.70
        assert table.stop_sign == 0.80

    def test_multiplicative_over_merged_ledgers(self):
        a = InfractionLedger()
        a.record("red_light", 1.0)
        b = InfractionLedger()
        b.record("collision_vehicle", 2.0)
        b.record("stop_sign", 3.0)
        assert infraction_penalty(a.merged(b)) == pytest.approx(
            infraction_penalty(a) * infraction_penalty(b))


class TestRouteCompletion:
    def test_full_traversal(self):
        route = straight_route()
        ys = np.linspace(0, 100, 201)
        trace = drive_trace(route, ys)
        assert route_completion(trace, route) == pytest.approx(100.0)

    def test_half_traversal(self):
        route = straight_route()
        ys = np.linspace(0, 50, 101)
        trace = drive_trace(route, ys, termination="timeout")
        assert route_completion(trace, route) == pytest.approx(50.0, abs=0.01)

    def test_offroad_progress_excluded(self):
        # Road surface with a 10 m hole between y=50 and y=60: the stretch
        # driven there is off the road and must not count toward RC.
        wmap = WorldMap(name="gap", roads=[
            [(-3.5, -20.0), (3.5, -20.0), (3.5, 50.0), (-3.5, 50.0)],
            [(-3.5, 60.0), (3.5, 60.0), (3.5, 150.0), (-3.5, 150.0)],
        ])
        route = straight_route()
        ys = np.linspace(0, 100, 201)
        trace = drive_trace(route, ys, world_map=wmap)
        rc = route_completion(trace, route)
        assert rc == pytest.approx(90.0, abs=1.0)
        ledger = detect_infractions(trace, wmap)
        assert ledger.offroad_meters == pytest.approx(10.0, abs=1.0)


class TestDrivingScore:
    def result(self, rid, rc, ip):
        return RouteResult(route_id=rid, rc=rc, ip=ip, ds=rc * ip, termination="completed")

    def test_single_perfect_route(self):
        agg = driving_score([self.result("r0", 100.0, 1.0)])
        assert agg.ds == 100.0

    def test_half_rc_half_ip(self):
        agg = driving_score([self.result("r0", 50.0, 0.5)])
        assert agg.ds == pytest.approx(25.0)

    def test_mean_of_products(self):
        agg = driving_score([self.result("a", 100.0, 1.0), self.result("b", 0.0, 1.0)])
        assert agg.ds == pytest.approx(50.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            driving_score([])

    def test_ds_not_product_of_means(self):
        results = [self.result("a", 100.0, 0.5), self.result("b", 20.0, 1.0)]
        agg = driving_score(results)
        assert agg.ds == pytest.approx(35.0)
        assert agg.rc * agg.ip == pytest.approx(45.0)
        assert agg.ds != pytest.approx(agg.rc * agg.ip)

    def test_route_result_validates_ds(self):
        with pytest.raises(ValueError):
            RouteResult(route_id="x", rc=50.0, ip=0.5, ds=30.0, termination="completed")

    def test_ds_never_exceeds_rc(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            rc = rng.uniform(0, 100)
            ip = rng.uniform(0, 1)
            r = self.result("r", rc, ip)
            assert r.ds <= r.rc + 1e-12


class TestDetectInfractions:
    def test_clean_run_empty_ledger(self):
        route = straight_route()
        trace = drive_trace(route, np.linspace(0, 100, 201))
        ledger = detect_infractions(trace, straight_map())
        assert ledger.total == 0
        assert ledger.offroad_meters == 0.0

    def test_red_light_crossing_counts_once(self):
        light = TrafficLight(
            light_id="tl0", position=(4.0, 50.0),
            stop_line=[(-3.5, 50.0), (3.5, 50.0)], approach_heading=-90.0,
            schedule=[PhaseStep("red", 1000.0)])
        wmap = straight_map(traffic_lights=[light])
        route = straight_route()
        n = 201
        trace = drive_trace(route, np.linspace(0, 100, n), world_map=wmap,
                            light_red={"tl0": np.ones(n, dtype=bool)})
        ledger = detect_infractions(trace, wmap)
        assert ledger.counts["red_light"] == 1

    def test_green_light_crossing_is_clean(self):
        light = TrafficLight(
            light_id="tl0", position=(4.0, 50.0),
            stop_line=[(-3.5, 50.0), (3.5, 50.0)], approach_heading=-90.0,
            schedule=[PhaseStep("green", 1000.0)])
        wmap = straight_map(traffic_lights=[light])
        route = straight_route()
        n = 201
        trace = drive_trace(route, np.linspace(0, 100, n), world_map=wmap,
                            light_red={"tl0": np.zeros(n, dtype=bool)})
        assert detect_infractions(trace, wmap).counts["red_light"] == 0

    def test_stop_sign_blown_through(self):
        sign = StopSign("ss0", (4.0, 50.0),
                        zone=[(-3.5, 45.0), (3.5, 45.0), (3.5, 55.0), (-3.5, 55.0)])
        wmap = straight_map(stop_signs=[sign])
        route = straight_route()
        trace = drive_trace(route, np.linspace(0, 100, 201), world_map=wmap)
        assert detect_infractions(trace, wmap).counts["stop_sign"] == 1

    def test_stop_sign_compliance(self):
        sign = StopSign("ss0", (4.0, 50.0),
                        zone=[(-3.5, 45.0), (3.5, 45.0), (3.5, 55.0), (-3.5, 55.0)])
        wmap = straight_map(stop_signs=[sign])
        route = straight_route()
        ys = np.concatenate([np.linspace(0, 50, 101), np.full(30, 50.0),
                             np.linspace(50, 100, 101)])
        speeds = np.concatenate([np.full(101, 5.0), np.zeros(30), np.full(101, 5.0)])
        trace = drive_trace(route, ys, speeds=speeds, world_map=wmap)
        assert detect_infractions(trace, wmap).counts["stop_sign"] == 0

    def test_pedestrian_collision_with_dedup(self):
        route = straight_route()
        ys = np.linspace(0, 100, 201)  # 0.5 m per 0.1 s step

        def actors(i):
            # Pedestrian parked on the route at y=50: continuous contact.
            return [("walker", "pedestrian", (0.0, 50.0), 0.0, True, 0.5, 0.5)]

        trace = drive_trace(route, ys, actors=actors)
        ledger = detect_infractions(trace, straight_map())
        assert ledger.counts["collision_pedestrian"] == 1

    def test_static_obstacle_collision(self):
        ob = StaticObstacle(footprint=[(-1, 49), (1, 49), (1, 51), (-1, 51)],
                            height=2.0, class_id=19)
        wmap = straight_map(obstacles=[ob])
        route = straight_route()
        trace = drive_trace(route, np.linspace(0, 100, 201), world_map=wmap)
        ledger = detect_infractions(trace, wmap)
        assert ledger.counts["collision_static"] >= 1


class TestTermination:
    def test_parked_181_seconds_times_out(self):
        route = straight_route()
        ys = np.zeros(183)
        trace = drive_trace(route, ys, dt=1.0, speeds=np.zeros(183),
                            termination="timeout")
        assert check_termination(trace, route) == "timeout"

    def test_31m_deviation(self):
        route = straight_route()
        trace = drive_trace(route, np.full(3, 10.0), dt=0.1,
                            xs=np.array([0.0, 31.0, 31.0]), termination="deviation")
        assert check_termination(trace, route) == "deviation"

    def test_reaching_goal_completes(self):
        route = straight_route()
        trace = drive_trace(route, np.linspace(0, 100, 201))
        assert check_termination(trace, route) == "completed"

    def test_short_stop_does_not_time_out(self):
        route = straight_route()
        monitor = TerminationMonitor(route, dt=1.0)
        for i in range(100):
            assert monitor.update((0.0, 0.0), 0.0, 0.0) is None


class TestMetricOracles:
    def test_iou_examples(self):
        assert iou(np.array([1, 1, 0]), np.array([1, 1, 0])) == 1.0
        assert iou(np.array([1, 0, 0]), np.array([0, 1, 1])) == 0.0
        assert iou(np.array([1, 1, 0, 0]), np.array([0, 1, 1, 0])) == pytest.approx(1 / 3)
        assert iou(np.zeros(5), np.zeros(5)) == 1.0

    def test_iou_symmetry_and_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = rng.integers(0, 2, size=64)
            b = rng.integers(0, 2, size=64)
            assert iou(a, b) == iou(b, a)
            assert iou(a, a) == 1.0

    def test_iou_shape_mismatch(self):
        with pytest.raises(ValueError):
            iou(np.zeros(3), np.zeros(4))

    def test_accuracy_examples(self):
        assert accuracy([1, 0, 1], [1, 0, 1]) == 1.0
        assert accuracy([1, 0], [0, 1]) == 0.0
        preds = [1] * 9 + [0] * 90 + [1]
        gts = [1] * 9 + [0] * 90 + [0]
        assert accuracy(preds, gts) == pytest.approx(0.99)

    def test_accuracy_thresholds_real_values(self):
        assert accuracy([0.7, 0.2], [1.0, 0.0]) == 1.0

    def test_accuracy_empty_rejected(self):
        with pytest.raises(ValueError):
            accuracy([], [])

    def test_seg_loss_perfect_prediction(self):
        gt = np.array([1.0, 0.0, 1.0, 0.0])
        assert seg_loss(gt, gt) <= 2e-6

    def test_seg_loss_worked_example(self):
        # Uniform 0.5 prediction, half the ground truth set: BCE ln 2,
        # dice term 0.5.
        n = 1000
        pred = np.full(n, 0.5)
        gt = np.concatenate([np.ones(n // 2), np.zeros(n // 2)])
        assert seg_loss(pred, gt) == pytest.approx(math.log(2) + 0.5, abs=1e-4)

    def test_seg_loss_inverted_prediction(self):
        gt = np.concatenate([np.ones(50), np.zeros(50)])
        loss = seg_loss(1.0 - gt, gt)
        assert loss == pytest.approx(-math.log(1e-7) + 1.0, rel=1e-3)

    def test_seg_loss_nonnegative(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            pred = rng.uniform(0, 1, size=128)
            gt = rng.integers(0, 2, size=128).astype(float)
            assert seg_loss(pred, gt) >= 0.0

    def test_mae_examples(self):
        assert mae([0.3], [0.1]) == pytest.approx(0.2)
        assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_total_loss_example(self):
        assert total_loss([0.1] * 7, [1.0] * 7) == pytest.approx(0.7)

    def test_metrics_match_naive_references(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            n = int(rng.integers(4, 200))
            bp = rng.integers(0, 2, size=n)
            bg = rng.integers(0, 2, size=n)
            assert iou(bp, bg) == pytest.approx(naive_iou(bp, bg), abs=1e-9)
            rp = rng.uniform(0, 1, size=n)
            rg = rng.integers(0, 2, size=n).astype(float)
            assert accuracy(rp, rg) == pytest.approx(naive_accuracy(rp, rg), abs=1e-9)
            assert seg_loss(rp, rg) == pytest.approx(naive_seg_loss(rp, rg), abs=1e-9)
            assert mae(rp, rg) == pytest.approx(naive_mae(rp, rg), abs=1e-9)


def test_trace_replay_is_deterministic():
    route = straight_route()
    wmap = straight_map()
    trace = drive_trace(route, np.linspace(0, 100, 201), world_map=wmap)
    first = detect_infractions(trace, wmap)
    second = detect_infractions(trace, wmap)
    assert first.counts == second.counts
    assert route_completion(trace, route) == route_completion(trace, route)
