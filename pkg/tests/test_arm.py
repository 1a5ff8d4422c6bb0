import numpy as np
import pytest

from armplay import kernels
from armplay.arm import (
    ConfigError,
    clamp_command,
    forward_kinematics,
    initial_state,
    load_arm_config,
    step,
)
from armplay.session import SIM_DT

from .oracles import fk_oracle


def random_q(chain, rng, n):
    return rng.uniform(chain.q_min, chain.q_max, size=(n, len(chain.q_min)))


class TestForwardKinematics:
    def test_matches_independent_oracle(self, chain, rng):
        for q in random_q(chain, rng, 500):
            got = kernels.fk_position(chain.dh, q)
            want = fk_oracle.fk_position(chain.dh, q)
            assert np.max(np.abs(got - want)) < 1e-9

    def test_orientation_matches_oracle(self, chain, rng):
        for q in random_q(chain, rng, 50):
            pose = forward_kinematics(chain, q)
            m = fk_oracle.fk_matrix(chain.dh, q)
            from armplay.geometry import quat_rotate

            for axis in np.eye(3):
                assert np.allclose(quat_rotate(pose.orientation, axis), m[:3, :3] @ axis, atol=1e-9)

    def test_home_pose_reachable_over_table(self, chain, safety):
        pos = forward_kinematics(chain, chain.home_q).position
        assert safety.workspace_lo[0] < pos[0] < safety.workspace_hi[0]
        assert pos[2] > safety.table_height_z + 0.1

    def test_limits_enforced(self, chain):
        q_bad = chain.q_max + 0.5
        with pytest.raises(Exception):
            forward_kinematics(chain, q_bad)


class TestSafetyClamp:
    def test_rate_limit(self, chain, safety):
        state = initial_state(chain)
        target = state.q + 10.0
        cmd = clamp_command(state, target, safety, chain)
        assert np.all(np.abs(cmd - state.q) <= safety.max_joint_delta_per_tick + 1e-12)

    def test_joint_limits(self, chain, safety, rng):
        state = initial_state(chain)
        for _ in range(200):
            target = rng.uniform(-20, 20, size=7)
            cmd = clamp_command(state, target, safety, chain)
            assert np.all(cmd >= chain.q_min - 1e-12)
            assert np.all(cmd <= chain.q_max + 1e-12)

    def test_hostile_nan_inf(self, chain, safety):
        state = initial_state(chain)
        for bad in (np.full(7, np.nan), np.full(7, np.inf), np.full(7, -np.inf)):
            cmd = clamp_command(state, bad, safety, chain)
            assert np.all(np.isfinite(cmd))

    def test_workspace_never_violated(self, chain, safety, rng):
        state = initial_state(chain)
        lo, hi = safety.effective_lo, safety.workspace_hi
        for _ in range(2000):
            target = state.q + rng.uniform(-0.3, 0.3, size=7)
            cmd = clamp_command(state, target, safety, chain)
            pos = kernels.fk_position(chain.dh, cmd)
            assert np.all(pos >= lo - 1e-9) and np.all(pos <= hi + 1e-9)
            state = step(state, cmd, False, SIM_DT, chain)


class TestStep:
    def test_tracks_command(self, chain):
        state = initial_state(chain)
        cmd = state.q + 0.01
        state2 = step(state, cmd, False, SIM_DT, chain)
        assert np.allclose(state2.q, cmd, atol=1e-9)
        assert state2.tick == state.tick + 1

    def test_velocity_limit_binds(self, chain):
        state = initial_state(chain)
        cmd = state.q + 1.0
        state2 = step(state, cmd, False, SIM_DT, chain)
        assert np.all(np.abs(state2.q - state.q) <= chain.vel_limit * SIM_DT + 1e-12)

    def test_gripper_actuation(self, chain):
        state = initial_state(chain)
        assert state.gripper.aperture == 1.0
        for _ in range(30):
            state = step(state, state.q, True, SIM_DT, chain)
        assert state.gripper.aperture == 0.0
        assert state.gripper_closed


class TestConfig:
    def test_loads_default(self):
        chain, safety = load_arm_config()
        assert chain.dh.shape == (7, 4)
        assert np.all(chain.q_min < chain.q_max)

    def test_rejects_bad_schema(self, tmp_path):
        p = tmp_path / "arm.yaml"
        p.write_text("schema: nope/v0\n")
        with pytest.raises((ConfigError, KeyError)):
            load_arm_config(p)


def test_backend_equivalence(chain, safety, rng):
    """The compiled kernels and the plain-python implementations must agree
    bit-for-bit on the same inputs."""
    impls = [
        (kernels.fk_position, kernels._fk_position_impl),
        (kernels.clamp_command_kernel, kernels._clamp_command_impl),
    ]
    for wrapped, impl in impls:
        py = getattr(wrapped, "py_func", wrapped)
        assert callable(py)
    state_q = chain.home_q.copy()
    for _ in range(100):
        target = state_q + rng.uniform(-0.2, 0.2, size=7)
        args = (
            state_q,
            target,
            chain.q_min,
            chain.q_max,
            safety.max_joint_delta_per_tick,
            chain.dh,
            safety.effective_lo,
            safety.workspace_hi,
            safety.projection_iters,
        )
        a = kernels.clamp_command_kernel(*args)
        b = getattr(kernels.clamp_command_kernel, "py_func", kernels.clamp_command_kernel)(*args)
        assert np.array_equal(a, b)
        state_q = a
