"""Generate the checked-in episode fixtures used by the replay tests.

Twenty episodes across all six tasks: full scripted successes, aborted
(incomplete) attempts, and timeout failures. Run from the repo root:

    python3 tools/make_fixtures.py
"""
from __future__ import annotations

import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from armplay.arm import load_arm_config  # noqa: E402
from armplay.dataset import Recorder  # noqa: E402
from armplay.scripting import ScriptDriver, load_script, script_path  # noqa: E402
from armplay.session import create_session  # noqa: E402
from armplay.tasks import TASK_IDS  # noqa: E402

OUT = ROOT / "tests" / "fixtures" / "episodes"
SEED = 7


def run_attempt(session, entries, stop_after: float | None = None, then_abort: bool = False):
    """Drive one attempt; optionally stop feeding the script at `stop_after`
    seconds and either abort or idle until timeout."""
    driver = ScriptDriver(entries)
    session.begin_attempt()
    while session.phase == "countdown":
        session.tick([])
    while session.phase == "playing":
        if stop_after is not None and session.clock >= stop_after:
            if then_abort:
                session.abort_attempt()
                return
            session.tick([])  # hold last command until timeout
        else:
            session.tick([driver.input_at(session.clock)])


def main():
    if OUT.exists():
        shutil.rmtree(OUT)
    OUT.mkdir(parents=True)
    chain, safety = load_arm_config()
    count = 0
    for task_id in TASK_IDS:
        entries = load_script(script_path(task_id))
        half = entries[len(entries) // 2].t

        # full success
        s = create_session("fx-ok", task_id, SEED, chain, safety, session_id=f"fx-{task_id}-ok")
        run_attempt(s, entries)
        Recorder(OUT).flush_attempt(s)
        count += 1

        # aborted mid-script: incomplete episode
        s = create_session("fx-ab", task_id, SEED, chain, safety, session_id=f"fx-{task_id}-ab")
        run_attempt(s, entries, stop_after=half, then_abort=True)
        Recorder(OUT).flush_attempt(s)
        count += 1

        # idle past the script start: timeout failure
        s = create_session("fx-to", task_id, SEED, chain, safety, session_id=f"fx-{task_id}-to")
        run_attempt(s, entries[:1], stop_after=0.5)
        Recorder(OUT).flush_attempt(s)
        count += 1

    # two partial runs: half the script, then time out with stages started
    for task_id in ("SceneTwins", "GroceryCheckout"):
        entries = load_script(script_path(task_id))
        half = entries[len(entries) // 2].t
        s = create_session("fx-pt", task_id, SEED, chain, safety, session_id=f"fx-{task_id}-pt")
        run_attempt(s, entries, stop_after=half)
        Recorder(OUT).flush_attempt(s)
        count += 1

    episodes = sorted(p.parent.name for p in OUT.glob("*/*/manifest.json"))
    print(f"wrote {count} episodes under {OUT}")
    for e in episodes:
        print(" ", e)
    assert count == 20, count


if __name__ == "__main__":
    main()
