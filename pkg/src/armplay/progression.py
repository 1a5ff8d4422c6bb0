"""Player profiles, points, badges, and the leaderboard.

Persistence is event-sourced: an append-only JSONL log of applied events
plus periodic snapshots. Replaying the log reconstructs the exact store,
and summary application is idempotent under duplicate delivery.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .session import SessionSummary

BADGE_CATALOG = Path(__file__).parent / "data" / "badges.yaml"
SNAPSHOT_EVERY = 64


class UnknownPlayerError(KeyError):
    pass


class UsernameError(ValueError):
    pass


@dataclass(frozen=True)
class Badge:
    id: str
    name: str
    rule: str  # episodes_played | games_played | total_points | task_first_success
    threshold: int = 0
    task: str | None = None


@dataclass(frozen=True)
class PlayerProfile:
    player_id: str
    username: str
    avatar_id: str
    total_points: int = 0
    episodes_played: int = 0
    games_played: int = 0
    badges: frozenset[str] = frozenset()
    tasks_succeeded: frozenset[str] = frozenset()
    created_at: float = 0.0


@dataclass(frozen=True)
class LeaderboardEntry:
    rank: int
    player_id: str
    username: str
    total_points: int


def load_badges(path: str | Path = BADGE_CATALOG) -> tuple[Badge, ...]:
    with open(path) as f:
        raw = yaml.safe_load(f)
    return tuple(
        Badge(
            id=b["id"],
            name=b["name"],
            rule=b["rule"],
            threshold=int(b.get("threshold", 0)),
            task=b.get("task"),
        )
        for b in raw["badges"]
    )


def _badge_satisfied(badge: Badge, profile: PlayerProfile) -> bool:
    if badge.rule == "episodes_played":
        return profile.episodes_played >= badge.threshold
    if badge.rule == "games_played":
        return profile.games_played >= badge.threshold
    if badge.rule == "total_points":
        return profile.total_points >= badge.threshold
    if badge.rule == "task_first_success":
        return badge.task in profile.tasks_succeeded
    raise ValueError(f"unknown badge rule {badge.rule!r}")


class ProgressionStore:
    """Single-writer store; reads see consistent snapshots of the dicts."""

    def __init__(self, root: str | Path, badges: tuple[Badge, ...] | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.badges = badges if badges is not None else load_badges()
        self.players: dict[str, PlayerProfile] = {}
        self.by_username: dict[str, str] = {}
        self.applied_summaries: set[str] = set()
        self._events_since_snapshot = 0
        self._recover()

    # -- persistence ------------------------------------------------------

    @property
    def log_path(self) -> Path:
        return self.root / "events.jsonl"

    @property
    def snapshot_path(self) -> Path:
        return self.root / "snapshot.json"

    def _append_event(self, event: dict):
        with open(self.log_path, "a") as f:
            f.write(json.dumps(event, sort_keys=True) + "\n")
            f.flush()
            os.fsync(f.fileno())
        self._events_since_snapshot += 1

    def _maybe_snapshot(self):
        # called after the in-memory state reflects the appended event, so
        # the snapshot's log_offset never skips an unapplied line
        if self._events_since_snapshot >= SNAPSHOT_EVERY:
            self.write_snapshot()

    def write_snapshot(self):
        state = {
            "log_offset": self._log_line_count(),
            "applied_summaries": sorted(self.applied_summaries),
            "players": [
                {
                    "player_id": p.player_id,
                    "username": p.username,
                    "avatar_id": p.avatar_id,
                    "total_points": p.total_points,
                    "episodes_played": p.episodes_played,
                    "games_played": p.games_played,
                    "badges": sorted(p.badges),
                    "tasks_succeeded": sorted(p.tasks_succeeded),
                    "created_at": p.created_at,
                }
                for p in self.players.values()
            ],
        }
        tmp = self.snapshot_path.with_suffix(".tmp")
        with open(tmp, "w") as f:
            json.dump(state, f)
            f.flush()
            os.fsync(f.fileno())
        tmp.rename(self.snapshot_path)
        self._events_since_snapshot = 0

    def _log_line_count(self) -> int:
        if not self.log_path.exists():
            return 0
        with open(self.log_path) as f:
            return sum(1 for _ in f)

    def _recover(self):
        offset = 0
        if self.snapshot_path.exists():
            with open(self.snapshot_path) as f:
                snap = json.load(f)
            offset = snap["log_offset"]
            self.applied_summaries = set(snap["applied_summaries"])
            for p in snap["players"]:
                profile = PlayerProfile(
                    player_id=p["player_id"],
                    username=p["username"],
                    avatar_id=p["avatar_id"],
                    total_points=p["total_points"],
                    episodes_played=p["episodes_played"],
                    games_played=p["games_played"],
                    badges=frozenset(p["badges"]),
                    tasks_succeeded=frozenset(p["tasks_succeeded"]),
                    created_at=p["created_at"],
                )
                self.players[profile.player_id] = profile
                self.by_username[profile.username] = profile.player_id
        if self.log_path.exists():
            with open(self.log_path) as f:
                for i, line in enumerate(f):
                    if i < offset or not line.strip():
                        continue
                    self._apply_event(json.loads(line))

    def _apply_event(self, event: dict):
        if event["kind"] == "player_registered":
            self._do_register(
                event["player_id"], event["username"], event["avatar_id"], event["created_at"]
            )
        elif event["kind"] == "summary_applied":
            self._do_apply(
                event["summary_id"],
                event["player_id"],
                event["points"],
                event["episodes"],
                event["games"],
                set(event["tasks_succeeded"]),
            )
        else:
            raise ValueError(f"unknown event kind {event['kind']!r}")

    # -- registration -----------------------------------------------------

    def _do_register(self, player_id, username, avatar_id, created_at) -> PlayerProfile:
        profile = PlayerProfile(
            player_id=player_id, username=username, avatar_id=avatar_id, created_at=created_at
        )
        self.players[player_id] = profile
        self.by_username[username] = player_id
        return profile

    def register_player(self, username: str, avatar_id: str = "avatar-0") -> PlayerProfile:
        if not (3 <= len(username) <= 24):
            raise UsernameError("username must be 3-24 characters")
        if username in self.by_username:
            return self.players[self.by_username[username]]
        player_id = f"p{len(self.players):06d}"
        created_at = time.time()
        self._append_event(
            {
                "kind": "player_registered",
                "player_id": player_id,
                "username": username,
                "avatar_id": avatar_id,
                "created_at": created_at,
            }
        )
        profile = self._do_register(player_id, username, avatar_id, created_at)
        self._maybe_snapshot()
        return profile

    def get(self, player_id: str) -> PlayerProfile:
        if player_id not in self.players:
            raise UnknownPlayerError(player_id)
        return self.players[player_id]

    # -- summary application ----------------------------------------------

    def _do_apply(
        self, summary_id, player_id, points, episodes, games, tasks_succeeded
    ) -> tuple[PlayerProfile, list[Badge]]:
        self.applied_summaries.add(summary_id)
        profile = self.players[player_id]
        profile = replace(
            profile,
            total_points=profile.total_points + points,
            episodes_played=profile.episodes_played + episodes,
            games_played=profile.games_played + games,
            tasks_succeeded=profile.tasks_succeeded | tasks_succeeded,
        )
        newly: list[Badge] = []
        held = set(profile.badges)
        for badge in self.badges:
            if badge.id not in held and _badge_satisfied(badge, profile):
                held.add(badge.id)
                newly.append(badge)
        profile = replace(profile, badges=frozenset(held))
        self.players[player_id] = profile
        return profile, newly

    def apply_summary(self, summary: SessionSummary) -> tuple[PlayerProfile, list[Badge]]:
        """Idempotent: a replayed summary id is a no-op."""
        if summary.player_id not in self.players:
            raise UnknownPlayerError(summary.player_id)
        if summary.summary_id in self.applied_summaries:
            return self.players[summary.player_id], []
        tasks_succeeded = (
            {summary.task_id} if any(a.success for a in summary.attempts) else set()
        )
        event = {
            "kind": "summary_applied",
            "summary_id": summary.summary_id,
            "player_id": summary.player_id,
            "points": summary.total_points,
            "episodes": len(summary.attempts),
            "games": 1,
            "tasks_succeeded": sorted(tasks_succeeded),
        }
        self._append_event(event)
        result = self._do_apply(
            summary.summary_id,
            summary.player_id,
            summary.total_points,
            len(summary.attempts),
            1,
            tasks_succeeded,
        )
        self._maybe_snapshot()
        return result

    # -- leaderboard ------------------------------------------------------

    def leaderboard(self, top_n: int) -> list[LeaderboardEntry]:
        if top_n < 1:
            raise ValueError("top_n must be >= 1")
        ranked = sorted(
            self.players.values(),
            key=lambda p: (-p.total_points, p.created_at, p.username),
        )
        return [
            LeaderboardEntry(
                rank=i + 1, player_id=p.player_id, username=p.username, total_points=p.total_points
            )
            for i, p in enumerate(ranked[:top_n])
        ]
