"""Command-line entry points. Output is line-delimited JSON where a
machine might read it (bot, replay, sample, leaderboard)."""
from __future__ import annotations

import asyncio
import errno
import json
import os
import socket
import sys
from pathlib import Path

import click
import numpy as np


def _emit(obj: dict):
    click.echo(json.dumps(obj, sort_keys=True))


@click.group()
def main():
    """Gamified teleoperation sandbox: server, bots, datasets, scores."""


@main.command()
@click.option("--host", default=None, help="bind address (default env ARMPLAY_BIND)")
@click.option("--port", default=None, type=int, help="TCP port (default env ARMPLAY_PORT)")
@click.option("--data-dir", default=None, type=click.Path(), help="episodes + progression root")
def serve(host, port, data_dir):
    """Run the WebSocket gateway."""
    from .server import ServerConfig, serve as run_server

    overrides = {}
    if host:
        overrides["host"] = host
    if port:
        overrides["port"] = port
    if data_dir:
        overrides["data_dir"] = Path(data_dir)
    cfg = ServerConfig.from_env(**overrides)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((cfg.host, cfg.port))
    except OSError as e:
        if e.errno == errno.EADDRINUSE:
            raise click.ClickException(f"port {cfg.port} already in use on {cfg.host}")
        raise click.ClickException(str(e))
    finally:
        probe.close()
    click.echo(f"listening on ws://{cfg.host}:{cfg.port}  data={cfg.data_dir}", err=True)
    run_server(cfg)


@main.command()
@click.option("--task", "task_id", required=True)
@click.option("--seed", default=7, type=int)
@click.option("--url", default="http://127.0.0.1:8787")
@click.option("--username", default="bot-operator")
@click.option("--attempts", default=1, type=int)
@click.option("--latency-base-ms", default=0.0, type=float,
              help="ask the server harness for injected latency (env passthrough)")
@click.option("--latency-jitter-ms", default=0.0, type=float)
def bot(task_id, seed, url, username, attempts, latency_base_ms, latency_jitter_ms):
    """Drive a scripted operator session over the network; exit 0 on success."""
    from .bot import run_bot
    from .tasks import TASK_IDS, load_task

    if task_id not in TASK_IDS:
        raise click.ClickException(f"unknown task {task_id!r}; choose from {', '.join(TASK_IDS)}")
    if latency_base_ms or latency_jitter_ms:
        os.environ["ARMPLAY_LAT_BASE_MS"] = str(latency_base_ms)
        os.environ["ARMPLAY_LAT_JITTER_MS"] = str(latency_jitter_ms)
    report = asyncio.run(run_bot(url, task_id, seed, username=username, attempts=attempts))
    expected = len(load_task(task_id).stages)
    _emit(
        {
            "task": task_id,
            "seed": seed,
            "success": report.success,
            "stages_achieved": sum(report.stage_flags),
            "stages_expected": expected,
            "episodes": report.episodes,
            "errors": report.errors,
            "summary": report.summary,
        }
    )
    ok = report.success and sum(report.stage_flags) == expected and not report.errors
    sys.exit(0 if ok else 1)


@main.command()
@click.argument("episode_path", type=click.Path(exists=True))
def replay(episode_path):
    """Re-simulate a recorded episode and verify the final state hash."""
    from .dataset import replay_episode

    result = replay_episode(episode_path)
    _emit(
        {
            "episode": str(episode_path),
            "matches_stored": result.matches_stored,
            "final_hash": result.final_hash,
            "stages": [r.achieved for r in result.stage_results],
            "mismatches": result.mismatches,
        }
    )
    sys.exit(0 if result.matches_stored else 1)


@main.command()
@click.argument("episode_path", type=click.Path(exists=True))
def inspect(episode_path):
    """Print an episode manifest plus per-array shapes."""
    from .dataset import read_episode

    episode, commands, stored_hash = read_episode(episode_path)
    _emit(
        {
            "episode_id": episode.episode_id,
            "task_id": episode.task_id,
            "player_id": episode.player_id,
            "attempt_index": episode.attempt_index,
            "seed": episode.seed,
            "success": episode.success,
            "incomplete": episode.incomplete,
            "transitions": len(episode.transitions),
            "commands": len(commands),
            "objects": list(episode.object_ids),
            "stages": [
                {"id": r.stage_id, "achieved": r.achieved, "t": r.t_achieved}
                for r in episode.stage_results
            ],
            "final_hash": stored_hash,
            "software_version": episode.software_version,
        }
    )


@main.command()
@click.option("--root", required=True, type=click.Path(exists=True), help="episode dataset root")
@click.option("--split", default=0.5, type=float, help="fraction drawn from support tasks")
@click.option("--batch", default=128, type=int)
@click.option("--batches", default=1, type=int)
@click.option("--seed", default=0, type=int)
def sample(root, split, batch, batches, seed):
    """Draw co-training batches; one JSON line per batch."""
    from .dataset import CotrainSampler, build_index

    index = build_index(root)
    sampler = CotrainSampler(
        index.filter(label="support"),
        index.filter(label="target"),
        batch_size=batch,
        split=split,
        seed=seed,
    )
    names = {"a": "support", "b": "target"}
    for _ in range(batches):
        rows = sampler.sample_batch()
        _emit(
            {
                "batch_size": len(rows),
                "support": sum(1 for tag, _, _ in rows if tag == "a"),
                "target": sum(1 for tag, _, _ in rows if tag == "b"),
                "rows": [{"source": names[t], "episode": e, "transition": i} for t, e, i in rows],
            }
        )


@main.command()
@click.option("--data-dir", default="./armplay-data", type=click.Path())
@click.option("--top", default=10, type=int)
def leaderboard(data_dir, top):
    """Dump the ranked leaderboard."""
    from .progression import ProgressionStore

    store = ProgressionStore(Path(data_dir) / "progression")
    for e in store.leaderboard(max(1, top)):
        _emit(
            {
                "rank": e.rank,
                "username": e.username,
                "total_points": e.total_points,
            }
        )


@main.command()
@click.option("--arm-config", default=None, type=click.Path(exists=True))
def validate(arm_config):
    """Validate configuration files; nonzero exit with diagnostics on error."""
    from .arm import ConfigError, load_arm_config
    from .tasks import TASK_IDS, load_task

    failures = []
    try:
        chain, safety = load_arm_config(arm_config) if arm_config else load_arm_config()
        _emit({"check": "arm_config", "ok": True, "joints": len(chain.q_min)})
    except (ConfigError, OSError, KeyError) as e:
        failures.append(str(e))
        _emit({"check": "arm_config", "ok": False, "error": str(e)})
    for tid in TASK_IDS:
        try:
            spec = load_task(tid)
            _emit({"check": f"task:{tid}", "ok": True, "stages": len(spec.stages)})
        except Exception as e:
            failures.append(f"{tid}: {e}")
            _emit({"check": f"task:{tid}", "ok": False, "error": str(e)})
    sys.exit(1 if failures else 0)


@main.command()
@click.option("--steps", default=20000, type=int)
def bench(steps):
    """Compare the compiled and pure-numpy kernel paths."""
    import subprocess

    script = Path(__file__).resolve().parents[2] / "benchmarks" / "bench_kernels.py"
    raise SystemExit(subprocess.call([sys.executable, str(script), "--steps", str(steps)]))


if __name__ == "__main__":
    main()
