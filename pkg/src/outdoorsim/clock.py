from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class GameClock:
    """Real and game time in seconds; game time runs ``time_scale`` times faster."""

    real_elapsed: float = 0.0
    game_time: float = 0.0
    time_scale: float = 1.0

    def __post_init__(self):
        if not self.time_scale > 0:
            raise ValueError(f"time_scale must be > 0, got {self.time_scale}")


def advance_clock(clock: GameClock, real_dt: float) -> GameClock:
    if real_dt < 0:
        raise ValueError(f"negative time step: {real_dt}")
    if real_dt == 0:
        return clock
    return replace(
        clock,
        real_elapsed=clock.real_elapsed + real_dt,
        game_time=clock.game_time + real_dt * clock.time_scale,
    )
