"""Constant-velocity motion from the two most recent per-frame displacements.

No Kalman filter: the velocity estimate is the plain mean of the last (up
to) two top-left displacements, so it reacts within two frames to a change
of direction. Box size is carried over from the last observation and never
extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass

from .geometry import Box

WINDOW = 2


@dataclass(frozen=True, slots=True)
class MotionState:
    last_box: Box
    displacements: tuple[tuple[float, float], ...] = ()
    frames_coasted: int = 0

    @property
    def velocity(self) -> tuple[float, float]:
        """Mean displacement in pixels/frame; zero with no history."""
        d = self.displacements
        if not d:
            return 0.0, 0.0
        if len(d) == 1:
            return d[0]
        return (d[0][0] + d[1][0]) / 2.0, (d[0][1] + d[1][1]) / 2.0


def observe(state: MotionState, box: Box, frames_elapsed: int = 1) -> MotionState:
    """Record a matched box ``frames_elapsed`` frames after ``state.last_box``.

    The displacement is normalised per frame so a re-acquired track does not
    inflate its velocity by the length of the gap.
    """
    last = state.last_box
    step = float(max(frames_elapsed, 1))
    d = ((box.left - last.left) / step, (box.top - last.top) / step)
    return MotionState(box, (state.displacements + (d,))[-WINDOW:], 0)


def coast(state: MotionState) -> MotionState:
    return MotionState(state.last_box, state.displacements, state.frames_coasted + 1)


def predict(state: MotionState, steps: int | None = None) -> Box:
    """Box expected ``steps`` frames after the last observation.

    By default that is the frame after the current one: one step past the
    last observation plus one per coasted frame, at the frozen velocity.
    """
    if steps is None:
        steps = state.frames_coasted + 1
    vx, vy = state.velocity
    return state.last_box.translated(steps * vx, steps * vy)
