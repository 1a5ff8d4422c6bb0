"""Timing comparison of the compiled kernels against the pure-numpy path.

The numpy path is exercised in a subprocess with ARMPLAY_FORCE_NUMPY=1 so
both backends run the exact same code with a clean import.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def run_suite(steps: int) -> dict:
    import numpy as np

    from armplay import kernels
    from armplay.arm import clamp_command, initial_state, load_arm_config, step

    chain, safety = load_arm_config()
    kernels.warmup()
    state = initial_state(chain)
    rng = np.random.default_rng(0)
    targets = state.q + rng.uniform(-0.4, 0.4, size=(steps, 7))

    t0 = time.perf_counter()
    for i in range(steps):
        cmd = clamp_command(state, targets[i], safety, chain)
        state = step(state, cmd, False, 1.0 / 60.0, chain)
    elapsed = time.perf_counter() - t0

    q = state.q.copy()
    t1 = time.perf_counter()
    for i in range(steps):
        kernels.fk_position(chain.dh, q)
    fk_elapsed = time.perf_counter() - t1

    return {
        "backend": kernels.BACKEND,
        "steps": steps,
        "clamp_step_s": round(elapsed, 4),
        "clamp_step_us_per_iter": round(elapsed / steps * 1e6, 2),
        "fk_s": round(fk_elapsed, 4),
        "fk_us_per_iter": round(fk_elapsed / steps * 1e6, 2),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=20000)
    parser.add_argument("--inner", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.inner:
        print(json.dumps(run_suite(args.steps)))
        return

    results = []
    for backend_env in ("0", "1"):
        env = dict(os.environ, ARMPLAY_FORCE_NUMPY=backend_env)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--steps", str(args.steps), "--inner"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        results.append(json.loads(out.stdout.strip().splitlines()[-1]))

    for r in results:
        print(
            f"{r['backend']:>6}: clamp+step {r['clamp_step_us_per_iter']:8.2f} us/iter"
            f"   fk {r['fk_us_per_iter']:8.2f} us/iter   ({r['steps']} steps)"
        )
    speedup = results[1]["clamp_step_s"] / max(results[0]["clamp_step_s"], 1e-9)
    print(f"speedup (clamp+step, numba vs numpy): {speedup:.1f}x")


if __name__ == "__main__":
    main()
