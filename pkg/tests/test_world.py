import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wheelsim.commands import Motor
from wheelsim.world import (PPG_IR_DC, CircleObstacle, SceneObject,
                            ScriptStep, SegmentObstacle, UltrasonicModel,
                            UserProfile, World, WorldState, body_temp_at,
                            gesture_at, measure_ultrasonic,
                            normalize_heading, ray_distance_m, step_world,
                            synth_ecg_temp, synth_gyro, synth_ppg,
                            visible_objects)
from wheelsim.commands import Command


def state_at(x=0.0, y=0.0, heading=0.0, obstacles=(), objects=(), **kw):
    return WorldState(time=0.0, x=x, y=y, heading=heading,
                      obstacles=tuple(obstacles), objects=tuple(objects), **kw)


class TestHeading:
    @given(st.floats(min_value=-100.0, max_value=100.0))
    def test_wraps_into_half_open_interval(self, h):
        w = normalize_heading(h)
        assert -math.pi <= w < math.pi
        # Same direction: difference is a whole number of turns.
        turns = (h - w) / (2.0 * math.pi)
        assert turns == pytest.approx(round(turns), abs=1e-9)

    def test_pi_maps_to_minus_pi(self):
        assert normalize_heading(math.pi) == -math.pi


class TestGeometryValidation:
    def test_circle_needs_positive_radius(self):
        with pytest.raises(ValueError):
            CircleObstacle("c", 0.0, 0.0, 0.0)

    def test_segment_must_be_axis_aligned(self):
        with pytest.raises(ValueError):
            SegmentObstacle("w", 0.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            SegmentObstacle("w", 1.0, 1.0, 1.0, 1.0)

    def test_scene_object_label_alphabet(self):
        with pytest.raises(ValueError):
            SceneObject("Cat", 1.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            SceneObject("Person", 1.0, 1.0, 0.0)

    def test_ultrasonic_model_ranges(self):
        with pytest.raises(ValueError):
            UltrasonicModel(max_range_cm=20.0)
        with pytest.raises(ValueError):
            UltrasonicModel(miss_probability=1.5)
        with pytest.raises(ValueError):
            UltrasonicModel(noise_sigma_cm=-0.1)

    def test_duplicate_obstacle_ids_rejected(self):
        with pytest.raises(ValueError):
            World(obstacles=[CircleObstacle("a", 1, 0, 0.1),
                             CircleObstacle("a", 2, 0, 0.1)])


class TestStepWorld:
    def test_forward_moves_along_heading(self):
        s = step_world(state_at(heading=0.0), Motor.FORWARD, 0.1)
        assert s.x == pytest.approx(0.05) and s.y == 0.0

    def test_backward_reverses(self):
        s = step_world(state_at(heading=math.pi / 2), Motor.BACKWARD, 0.1)
        assert s.y == pytest.approx(-0.05)
        assert s.x == pytest.approx(0.0, abs=1e-12)

    def test_left_right_rotate_opposite_ways(self):
        left = step_world(state_at(), Motor.LEFT, 0.1)
        right = step_world(state_at(), Motor.RIGHT, 0.1)
        assert left.heading == pytest.approx(0.08)    # 0.8 rad/s * 0.1 s
        assert right.heading == pytest.approx(-0.08)
        assert (left.x, left.y) == (0.0, 0.0)

    def test_stop_holds_pose_but_advances_time(self):
        s = step_world(state_at(x=1.0, y=2.0, heading=0.3), Motor.STOP, 0.01)
        assert (s.x, s.y, s.heading) == (1.0, 2.0, 0.3)
        assert s.time == 0.01

    def test_heading_wraps_during_rotation(self):
        s = state_at(heading=math.pi - 0.01)
        s = step_world(s, Motor.LEFT, 0.1)   # +0.08 rad crosses pi
        assert s.heading == pytest.approx(-math.pi + 0.07)

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ValueError):
            step_world(state_at(), Motor.STOP, 0.0)


class TestRayDistance:
    def test_circle_dead_ahead(self):
        s = state_at(obstacles=[CircleObstacle("c", 2.0, 0.0, 0.5)])
        assert ray_distance_m(s) == pytest.approx(1.5)

    def test_circle_behind_is_ignored(self):
        s = state_at(obstacles=[CircleObstacle("c", -2.0, 0.0, 0.5)])
        assert ray_distance_m(s) is None

    def test_tangent_ray_grazes(self):
        s = state_at(obstacles=[CircleObstacle("c", 2.0, 0.5, 0.5)])
        assert ray_distance_m(s) == pytest.approx(2.0)

    def test_origin_inside_circle_is_contact(self):
        s = state_at(obstacles=[CircleObstacle("c", 0.1, 0.0, 0.5)])
        assert ray_distance_m(s) == 0.0

    def test_vertical_wall_head_on(self):
        wall = SegmentObstacle("w", 3.0, -1.0, 3.0, 1.0)
        assert ray_distance_m(state_at(obstacles=[wall])) == pytest.approx(3.0)

    def test_parallel_ray_misses_wall(self):
        wall = SegmentObstacle("w", 3.0, -1.0, 3.0, 1.0)
        s = state_at(heading=math.pi / 2, obstacles=[wall])
        assert ray_distance_m(s) is None

    def test_ray_past_wall_end_misses(self):
        wall = SegmentObstacle("w", 3.0, 1.0, 3.0, 2.0)
        assert ray_distance_m(state_at(obstacles=[wall])) is None

    def test_horizontal_wall_from_oblique_heading(self):
        wall = SegmentObstacle("w", 0.0, 2.0, 4.0, 2.0)
        s = state_at(x=1.0, heading=math.pi / 4, obstacles=[wall])
        # hit at y=2 -> t = 2 / sin(45deg)
        assert ray_distance_m(s) == pytest.approx(2.0 * math.sqrt(2.0))

    def test_nearest_of_several_wins(self):
        s = state_at(obstacles=[
            CircleObstacle("far", 5.0, 0.0, 0.5),
            CircleObstacle("near", 2.0, 0.0, 0.5),
            SegmentObstacle("wall", 10.0, -1.0, 10.0, 1.0),
        ])
        assert ray_distance_m(s) == pytest.approx(1.5)

    @given(d=st.floats(min_value=1.0, max_value=10.0),
           heading=st.floats(min_value=-3.0, max_value=3.0))
    def test_distance_invariant_under_rotation(self, d, heading):
        """A circle placed along the heading yields the same standoff."""
        cx = d * math.cos(heading)
        cy = d * math.sin(heading)
        s = state_at(heading=heading,
                     obstacles=[CircleObstacle("c", cx, cy, 0.5)])
        assert ray_distance_m(s) == pytest.approx(d - 0.5, abs=1e-9)


class TestMeasureUltrasonic:
    def test_clean_reading_is_ray_distance_in_cm(self):
        s = state_at(obstacles=[CircleObstacle("c", 1.0, 0.0, 0.5)])
        assert measure_ultrasonic(s, UltrasonicModel()) == pytest.approx(50.0)

    def test_no_obstacle_saturates(self):
        assert measure_ultrasonic(state_at(), UltrasonicModel()) == 400.0

    def test_beyond_range_clamps(self):
        s = state_at(obstacles=[CircleObstacle("c", 6.0, 0.0, 0.5)])
        assert measure_ultrasonic(s, UltrasonicModel(max_range_cm=400.0)) == 400.0

    def test_certain_miss_hides_obstacle(self):
        s = state_at(obstacles=[CircleObstacle("c", 1.0, 0.0, 0.5)])
        model = UltrasonicModel(miss_probability=1.0)
        rng = np.random.default_rng(0)
        assert measure_ultrasonic(s, model, rng) == 400.0

    def test_noiseless_model_never_touches_rng(self):
        s = state_at(obstacles=[CircleObstacle("c", 1.0, 0.0, 0.5)])
        # rng=None would raise on any consultation.
        assert measure_ultrasonic(s, UltrasonicModel(), None) == pytest.approx(50.0)

    def test_noise_is_seed_deterministic(self):
        s = state_at(obstacles=[CircleObstacle("c", 1.0, 0.0, 0.5)])
        model = UltrasonicModel(noise_sigma_cm=2.0)
        a = [measure_ultrasonic(s, model, np.random.default_rng(9)) for _ in range(1)]
        b = [measure_ultrasonic(s, model, np.random.default_rng(9)) for _ in range(1)]
        assert a == b
        assert a[0] != 50.0


class TestSyntheticSignals:
    def test_ppg_trough_at_beat_start(self):
        profile = UserProfile(heart_rate_bpm=60.0)
        ir0, _ = synth_ppg(profile, 0.0)
        assert ir0 == pytest.approx(PPG_IR_DC - 512.0)

    def test_ppg_periodic_at_heart_rate(self):
        profile = UserProfile(heart_rate_bpm=72.0)
        period = 60.0 / 72.0
        ir_a, red_a = synth_ppg(profile, 0.123)
        ir_b, red_b = synth_ppg(profile, 0.123 + period)
        assert ir_a == pytest.approx(ir_b, abs=1e-6)
        assert red_a == pytest.approx(red_b, abs=1e-6)

    def test_gyro_follows_script_then_rests(self):
        profile = UserProfile(
            gesture_script=(ScriptStep(Command.FORWARD, 1.0, 45.0),
                            ScriptStep(Command.RIGHT, 1.0, 45.0)),
            gyro_bias=(2.0, -1.5, 0.5))
        g = synth_gyro(profile, 0.5)
        assert (g.gx, g.gy, g.gz) == (2.0, 43.5, 0.5)
        g = synth_gyro(profile, 1.5)
        assert (g.gx, g.gy) == (47.0, -1.5)
        g = synth_gyro(profile, 5.0)   # past the script: bias only
        assert (g.gx, g.gy, g.gz) == (2.0, -1.5, 0.5)

    def test_gesture_at_boundaries(self):
        profile = UserProfile(gesture_script=(ScriptStep(Command.LEFT, 2.0),))
        assert gesture_at(profile, 0.0)[0] is Command.LEFT
        assert gesture_at(profile, 1.999)[0] is Command.LEFT
        assert gesture_at(profile, 2.0) == (Command.STOP, 0.0)

    def test_ecg_lead_off_flatlines_at_baseline(self):
        profile = UserProfile(lead_status=1, ecg_template=(0.0, 100.0))
        ecg, _, _, lead = synth_ecg_temp(profile, 0.25)
        assert ecg == 512 and lead == 1

    def test_ecg_template_cycles_with_heart_rate(self):
        profile = UserProfile(heart_rate_bpm=60.0,
                              ecg_template=(0.0, 100.0, -50.0, 25.0))
        values = [synth_ecg_temp(profile, t)[0] for t in (0.0, 0.25, 0.5, 0.75)]
        assert values == [512, 612, 462, 537]
        assert synth_ecg_temp(profile, 1.0)[0] == 512   # next beat

    def test_temps_pass_through(self):
        profile = UserProfile(ambient_temp_c=22.5, body_temp_c=((0.0, 36.5),))
        _, ambient, obj, _ = synth_ecg_temp(profile, 3.0)
        assert ambient == 22.5 and obj == 36.5


class TestBodyTempTrajectory:
    PROFILE = UserProfile(body_temp_c=((0.0, 37.0), (30.0, 38.2)))

    def test_clamped_before_and_after(self):
        assert body_temp_at(self.PROFILE, -5.0) == 37.0
        assert body_temp_at(self.PROFILE, 0.0) == 37.0
        assert body_temp_at(self.PROFILE, 31.0) == 38.2

    def test_linear_midpoint(self):
        assert body_temp_at(self.PROFILE, 15.0) == pytest.approx(37.6)

    def test_multi_segment(self):
        profile = UserProfile(
            body_temp_c=((0.0, 37.0), (10.0, 39.0), (20.0, 38.0)))
        assert body_temp_at(profile, 5.0) == pytest.approx(38.0)
        assert body_temp_at(profile, 15.0) == pytest.approx(38.5)


class TestVisibleObjects:
    def test_range_boundary_inclusive(self):
        objs = [SceneObject("Person", 3.0, 0.0, 0.5),
                SceneObject("Chair", 3.0001, 0.0, 0.5)]
        seen = visible_objects(state_at(objects=objs), 60.0, 3.0)
        assert [o.class_label for o in seen] == ["Person"]

    def test_fov_boundary_inclusive(self):
        half = math.radians(30.0)
        objs = [SceneObject("Person",
                            2.0 * math.cos(half), 2.0 * math.sin(half), 0.5),
                SceneObject("Chair",
                            2.0 * math.cos(half + 0.01),
                            2.0 * math.sin(half + 0.01), 0.5)]
        seen = visible_objects(state_at(objects=objs), 60.0, 5.0)
        assert [o.class_label for o in seen] == ["Person"]

    def test_object_behind_excluded(self):
        objs = [SceneObject("Door", -1.0, 0.0, 0.5)]
        assert visible_objects(state_at(objects=objs), 60.0, 5.0) == []

    def test_follows_chair_heading(self):
        objs = [SceneObject("Table", 0.0, 2.0, 0.5)]
        assert visible_objects(state_at(objects=objs), 60.0, 5.0) == []
        seen = visible_objects(
            state_at(heading=math.pi / 2, objects=objs), 60.0, 5.0)
        assert len(seen) == 1

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            visible_objects(state_at(), 0.0, 5.0)
        with pytest.raises(ValueError):
            visible_objects(state_at(), 181.0, 5.0)
        with pytest.raises(ValueError):
            visible_objects(state_at(), 60.0, 0.0)


class TestWorld:
    def test_time_is_exactly_ticks_times_dt(self):
        world = World(dt=0.01)
        for _ in range(1000):
            world.step(Motor.STOP)
        assert world.time == 1000 * 0.01
        # 0.01 is not dyadic: naive accumulation would have drifted.
        drift = sum(0.01 for _ in range(1000))
        assert drift != 10.0 and world.time == 10.0

    def test_start_pose_heading_normalized(self):
        world = World(start_pose=(0.0, 0.0, 3.0 * math.pi))
        assert world.state.heading == pytest.approx(-math.pi)

    def test_step_moves_and_measures(self):
        world = World(obstacles=[CircleObstacle("c", 1.0, 0.0, 0.5)],
                      dt=0.1, linear_speed=0.5)
        assert world.measure_distance_cm() == pytest.approx(50.0)
        for _ in range(4):
            world.step(Motor.FORWARD)
        assert world.state.x == pytest.approx(0.2)
        assert world.measure_distance_cm() == pytest.approx(30.0)

    def test_ppg_noise_uses_private_stream(self):
        profile = UserProfile(ppg_noise_sigma=4.0)
        w1 = World(profile=profile, ppg_rng=np.random.default_rng(3))
        w2 = World(profile=profile, ppg_rng=np.random.default_rng(3))
        assert w1.sample_ppg() == w2.sample_ppg()
        clean = World(profile=UserProfile()).sample_ppg()
        assert w1.sample_ppg() != clean
