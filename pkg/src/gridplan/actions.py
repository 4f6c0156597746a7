"""Lookup-table motion primitives and the speed-dependent steering limit.

The action table is a 21x21 window of discrete cell offsets around the
origin.  Headings use a right-handed frame with +x = +col and +y = -row, so
0 points right and pi/2 points up the map.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass

TAU = 2.0 * math.pi
WINDOW_REACH = 10  # offsets span [-10, 10] in both axes


def angular_distance(a: float, b: float) -> float:
    """Circular distance between two angles, in [0, pi]."""
    d = (a - b) % TAU
    if d > math.pi:
        d = TAU - d
    return d


def heading_bin(heading: float, theta_bins: int) -> int:
    """Bucket index of a heading for closed-set keying."""
    frac = (heading % TAU) / TAU
    return min(int(frac * theta_bins), theta_bins - 1)


@dataclass(frozen=True)
class Action:
    """One table entry: a straight hop of (dx, dy) cells."""

    dx: int
    dy: int
    direction: float  # radians in (-pi, pi]
    length: float  # cells

    def __post_init__(self):
        if not (abs(self.dx) <= WINDOW_REACH and abs(self.dy) <= WINDOW_REACH):
            raise ValueError(f"offset ({self.dx}, {self.dy}) outside the table window")
        if self.dx == 0 and self.dy == 0:
            raise ValueError("zero offset is not an action")

    @classmethod
    def from_offset(cls, dx: int, dy: int) -> "Action":
        # +row is down the map, so screen dy negates into the heading frame
        return cls(dx=dx, dy=dy, direction=math.atan2(-dy, dx), length=math.hypot(dx, dy))


@dataclass(frozen=True)
class ActionSet:
    """Immutable action table, sorted by direction then length."""

    actions: tuple[Action, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.actions, key=lambda a: (a.direction, a.length)))
        object.__setattr__(self, "actions", ordered)

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def offsets(self) -> set[tuple[int, int]]:
        return {(a.dx, a.dy) for a in self.actions}


def build_action_set(mode: str = "coprime") -> ActionSet:
    """Generate the lookup table.

    coprime: offsets with gcd(|dx|, |dy|) = 1, one action per visible lattice
    direction (256 actions).  all-offsets: every nonzero offset in the window
    (440 actions); directions repeat at multiple lengths.
    """
    if mode not in ("coprime", "all-offsets"):
        raise ValueError(f"unknown action-set mode {mode!r}")
    acts = []
    for dy in range(-WINDOW_REACH, WINDOW_REACH + 1):
        for dx in range(-WINDOW_REACH, WINDOW_REACH + 1):
            if dx == 0 and dy == 0:
                continue
            if mode == "coprime" and math.gcd(abs(dx), abs(dy)) != 1:
                continue
            acts.append(Action.from_offset(dx, dy))
    return ActionSet(actions=tuple(acts))


def children_within(actions: ActionSet, heading: float, limit: float) -> list[Action]:
    """Actions whose direction lies within the circular limit of heading."""
    if not (0.0 < limit <= math.pi):
        raise ValueError("limit must be in (0, pi]")
    return [a for a in actions if angular_distance(a.direction, heading) <= limit]


@dataclass(frozen=True)
class SpeedProfile:
    """Piecewise-constant steering limit by speed.

    breakpoints: ((speed m/s, limit radians), ...) with strictly increasing
    speeds and nonincreasing limits; limits in (0, pi].
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(s), float(l)) for s, l in self.breakpoints)
        if not pts:
            raise ValueError("profile needs at least one breakpoint")
        for i, (s, l) in enumerate(pts):
            if not (0.0 < l <= math.pi):
                raise ValueError(f"limit {l} at breakpoint {i} outside (0, pi]")
            if i > 0:
                if s <= pts[i - 1][0]:
                    raise ValueError("breakpoint speeds must strictly increase")
                if l > pts[i - 1][1]:
                    raise ValueError("limits must be nonincreasing with speed")
        object.__setattr__(self, "breakpoints", pts)


DEFAULT_SPEED_PROFILE = SpeedProfile(
    breakpoints=(
        (0.0, math.radians(120.0)),
        (2.0, math.radians(90.0)),
        (5.0, math.radians(60.0)),
        (10.0, math.radians(40.0)),
    )
)


def angle_limit(profile: SpeedProfile, speed: float) -> float:
    """Limit of the largest breakpoint with speed <= the query speed; the
    first limit below the first breakpoint."""
    if speed < 0:
        raise ValueError("speed must be >= 0")
    speeds = [s for s, _ in profile.breakpoints]
    idx = bisect_right(speeds, speed) - 1
    if idx < 0:
        idx = 0
    return profile.breakpoints[idx][1]


def dump_actions_csv(actions: ActionSet, stream) -> None:
    """Emit the table as CSV rows (dx, dy, direction, length), full float
    precision, stable order."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["dx", "dy", "direction", "length"])
    for a in actions:
        writer.writerow([a.dx, a.dy, repr(a.direction), repr(a.length)])
