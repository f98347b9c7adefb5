"""Per-load controller state machines.

Every load runs exactly one controller mode at a time:

* ``Baseline`` -- plain hysteresis: switch the compressor ON when the
  temperature reaches the upper deadband edge, OFF at the lower edge,
  hold anywhere in between.

* ``SetpointShift`` -- the whole deadband is moved by a fixed delta at a
  single instant (the "unsafe" direct-control action).  Loads stranded
  outside the moved band switch immediately; afterwards the controller
  is plain hysteresis on the shifted band.

* ``ExtendPhase`` -- a timer protocol that postpones the next natural
  switch.  The load operates normally until it next reaches the band
  edge where it would switch (upper edge while OFF, or lower edge while
  ON, depending on direction), then holds its current state for an extra
  ``hold_s`` seconds while the temperature drifts past the edge, flips,
  and reverts to plain hysteresis.

* ``TimedPulse`` -- a timer protocol producing a sharp aggregate pulse of
  prescribed duration.  For a downward pulse, loads running at signal
  time are forced OFF for ``hold_s`` seconds and then released; loads
  idle at signal time keep operating but, on reaching the stored upper
  edge, stay OFF for an extra ``hold_s`` before switching.  An upward
  pulse is the mirror image.

All protocol machines are one-shot: phases advance monotonically to
``DONE``, the active band ends up equal to the band stored at signal
time, and every decision after ``DONE`` is plain hysteresis.  A fresh
signal must install a fresh mode object.

Mode objects are immutable; ``decide`` returns the replacement mode
along with the desired compressor state for this step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Union

DEFAULT_MAX_SHIFT_C = 2.0  # comfort bound on |setpoint shift|


class ExtendDirection(str, Enum):
    """Which natural switch gets postponed."""

    EXTEND_OFF = "extend_off"  # stay OFF past the upper edge (delay consumption)
    EXTEND_ON = "extend_on"    # stay ON past the lower edge (absorb energy)


class PulseDirection(str, Enum):
    """Sign of the aggregate pulse a timed pulse produces."""

    DOWN = "down"  # running loads forced OFF
    UP = "up"      # idle loads forced ON


class Phase(str, Enum):
    ARMED = "armed"                  # signal received, waiting for the trigger edge
    HOLDING = "holding"              # at the edge, timer running (ExtendPhase)
    FORCED_HOLD = "forced_hold"      # forced switch cohort, timer running (TimedPulse)
    AWAITING_EDGE = "awaiting_edge"  # complementary cohort, normal operation until edge
    EDGE_HOLD = "edge_hold"          # at the stored edge, timer running (TimedPulse)
    DONE = "done"                    # terminal: plain hysteresis from here on


@dataclass(frozen=True)
class Baseline:
    band_lo: float
    band_hi: float

    @property
    def stored_band(self) -> tuple[float, float]:
        return (self.band_lo, self.band_hi)


@dataclass(frozen=True)
class SetpointShift:
    band_lo: float
    band_hi: float
    stored_lo: float       # band before the shift
    stored_hi: float
    delta_c: float
    applied_at_h: float

    @property
    def stored_band(self) -> tuple[float, float]:
        return (self.stored_lo, self.stored_hi)


@dataclass(frozen=True)
class ExtendPhase:
    band_lo: float
    band_hi: float
    direction: ExtendDirection
    hold_s: float
    phase: Phase = Phase.ARMED
    remaining_s: float = 0.0
    done_at_h: float = math.nan

    @property
    def stored_band(self) -> tuple[float, float]:
        # The band is never moved by this protocol.
        return (self.band_lo, self.band_hi)


@dataclass(frozen=True)
class TimedPulse:
    band_lo: float
    band_hi: float
    direction: PulseDirection
    hold_s: float
    phase: Phase
    remaining_s: float = 0.0
    done_at_h: float = math.nan

    @property
    def stored_band(self) -> tuple[float, float]:
        return (self.band_lo, self.band_hi)


ControllerMode = Union[Baseline, SetpointShift, ExtendPhase, TimedPulse]


def hysteresis(band_lo: float, band_hi: float, theta: float, on: bool) -> bool:
    """Plain deadband rule: ON at or above the top edge, OFF at or below the bottom."""
    if theta >= band_hi:
        return True
    if theta <= band_lo:
        return False
    return on


def decide(mode: ControllerMode, theta: float, on: bool, dt_s: float,
           t_h: float = 0.0) -> tuple[bool, ControllerMode]:
    """One controller evaluation: desired compressor state plus successor mode.

    Timers embedded in the mode are advanced by ``dt_s``.  ``t_h`` is the
    simulation clock, recorded when a protocol completes.
    """
    if isinstance(mode, (Baseline, SetpointShift)):
        return hysteresis(mode.band_lo, mode.band_hi, theta, on), mode
    if isinstance(mode, ExtendPhase):
        return _decide_extend(mode, theta, on, dt_s, t_h)
    if isinstance(mode, TimedPulse):
        return _decide_pulse(mode, theta, on, dt_s, t_h)
    raise TypeError(f"unknown controller mode: {type(mode).__name__}")


def _decide_extend(m: ExtendPhase, theta: float, on: bool, dt_s: float,
                   t_h: float) -> tuple[bool, ExtendPhase]:
    if m.phase is Phase.DONE:
        return hysteresis(m.band_lo, m.band_hi, theta, on), m
    if m.phase is Phase.ARMED:
        if m.direction is ExtendDirection.EXTEND_OFF:
            triggered = (not on) and theta >= m.band_hi
        else:
            triggered = on and theta <= m.band_lo
        if not triggered:
            return hysteresis(m.band_lo, m.band_hi, theta, on), m
        m = replace(m, phase=Phase.HOLDING, remaining_s=m.hold_s)
        if m.remaining_s > 0.0:
            return on, m
        return _finish_extend(m, t_h)  # zero hold degenerates to the normal switch
    # Phase.HOLDING
    rem = m.remaining_s - dt_s
    if rem > 0.0:
        return on, replace(m, remaining_s=rem)
    return _finish_extend(m, t_h)


def _finish_extend(m: ExtendPhase, t_h: float) -> tuple[bool, ExtendPhase]:
    new_on = m.direction is ExtendDirection.EXTEND_OFF  # held OFF past top edge -> ON
    return new_on, replace(m, phase=Phase.DONE, remaining_s=0.0, done_at_h=t_h)


def _decide_pulse(m: TimedPulse, theta: float, on: bool, dt_s: float,
                  t_h: float) -> tuple[bool, TimedPulse]:
    if m.phase is Phase.DONE:
        return hysteresis(m.band_lo, m.band_hi, theta, on), m
    if m.phase is Phase.FORCED_HOLD:
        rem = m.remaining_s - dt_s
        if rem > 0.0:
            return on, replace(m, remaining_s=rem)
        return _finish_pulse(m, t_h)
    if m.phase is Phase.AWAITING_EDGE:
        if m.direction is PulseDirection.DOWN:
            triggered = (not on) and theta >= m.band_hi
        else:
            triggered = on and theta <= m.band_lo
        if not triggered:
            return hysteresis(m.band_lo, m.band_hi, theta, on), m
        m = replace(m, phase=Phase.EDGE_HOLD, remaining_s=m.hold_s)
        if m.remaining_s > 0.0:
            return on, m
        return _finish_pulse(m, t_h)
    # Phase.EDGE_HOLD
    rem = m.remaining_s - dt_s
    if rem > 0.0:
        return on, replace(m, remaining_s=rem)
    return _finish_pulse(m, t_h)


def _finish_pulse(m: TimedPulse, t_h: float) -> tuple[bool, TimedPulse]:
    new_on = m.direction is PulseDirection.DOWN  # down cohorts end by switching ON
    return new_on, replace(m, phase=Phase.DONE, remaining_s=0.0, done_at_h=t_h)


def active_band(mode: ControllerMode) -> tuple[float, float]:
    return (mode.band_lo, mode.band_hi)


def is_done(mode: ControllerMode) -> bool:
    """True when the mode imposes no future forced behavior."""
    if isinstance(mode, (Baseline, SetpointShift)):
        return True
    return mode.phase is Phase.DONE


# ---------------------------------------------------------------------------
# Signal application
# ---------------------------------------------------------------------------

def shift_band(mode: ControllerMode, delta_c: float, theta: float, on: bool,
               t_h: float, max_shift_c: float = DEFAULT_MAX_SHIFT_C,
               ) -> tuple[Optional[bool], SetpointShift]:
    """Move the active band by ``delta_c`` keeping its width.

    Returns ``(forced_on, new_mode)`` where ``forced_on`` is the immediate
    switch command for a load stranded outside the moved band (None when
    no switch is required).
    """
    if abs(delta_c) > max_shift_c:
        raise ValueError(
            f"setpoint shift {delta_c:+.3f} C exceeds comfort bound {max_shift_c:.3f} C")
    lo, hi = active_band(mode)
    new_lo, new_hi = lo + delta_c, hi + delta_c
    forced: Optional[bool] = None
    if on and theta < new_lo:
        forced = False
    elif (not on) and theta > new_hi:
        forced = True
    return forced, SetpointShift(new_lo, new_hi, lo, hi, delta_c, t_h)


def arm_extend_phase(mode: ControllerMode, direction: ExtendDirection,
                     hold_min: float) -> ExtendPhase:
    """Install an ExtendPhase protocol on the load's current active band."""
    lo, hi = active_band(mode)
    return ExtendPhase(lo, hi, direction, hold_s=hold_min * 60.0)


def start_timed_pulse(mode: ControllerMode, direction: PulseDirection,
                      hold_min: float, on: bool, t_h: float,
                      ) -> tuple[Optional[bool], TimedPulse]:
    """Install a TimedPulse protocol, splitting the load by its current state.

    Returns ``(forced_on, new_mode)``; ``forced_on`` is the immediate switch
    command for the forced cohort.  A non-positive hold is a no-op (the mode
    goes straight to DONE).
    """
    lo, hi = active_band(mode)
    hold_s = hold_min * 60.0
    if hold_s <= 0.0:
        return None, TimedPulse(lo, hi, direction, hold_s, Phase.DONE, 0.0, t_h)
    if direction is PulseDirection.DOWN:
        if on:
            return False, TimedPulse(lo, hi, direction, hold_s, Phase.FORCED_HOLD, hold_s)
        return None, TimedPulse(lo, hi, direction, hold_s, Phase.AWAITING_EDGE)
    if not on:
        return True, TimedPulse(lo, hi, direction, hold_s, Phase.FORCED_HOLD, hold_s)
    return None, TimedPulse(lo, hi, direction, hold_s, Phase.AWAITING_EDGE)


# ---------------------------------------------------------------------------
# Control events (shared by the single-load and fleet engines)
# ---------------------------------------------------------------------------

ACTION_SETPOINT_SHIFT = "setpoint_shift"
ACTION_EXTEND_PHASE = "extend_phase"
ACTION_TIMED_PULSE = "timed_pulse"

ACTIONS = (ACTION_SETPOINT_SHIFT, ACTION_EXTEND_PHASE, ACTION_TIMED_PULSE)


@dataclass(frozen=True)
class ControlEvent:
    """A broadcast control signal addressed to a subset of the fleet.

    ``target`` is either the string ``"all"`` or a sequence of load ids.
    Which extra fields matter depends on ``action``:
    ``setpoint_shift`` uses ``delta_c``; the two timer protocols use
    ``direction`` and ``hold_min``.
    """

    t_h: float
    action: str
    delta_c: float = 0.0
    direction: str = ""
    hold_min: float = 0.0
    target: Union[str, Sequence[int]] = "all"

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown control action {self.action!r}")
        if self.action == ACTION_EXTEND_PHASE:
            ExtendDirection(self.direction)
        elif self.action == ACTION_TIMED_PULSE:
            PulseDirection(self.direction)


def apply_event(event: ControlEvent, mode: ControllerMode, theta: float, on: bool,
                t_h: float, max_shift_c: float = DEFAULT_MAX_SHIFT_C,
                ) -> tuple[Optional[bool], ControllerMode]:
    """Apply a control event to one load; returns (forced_on, new_mode)."""
    if event.action == ACTION_SETPOINT_SHIFT:
        return shift_band(mode, event.delta_c, theta, on, t_h, max_shift_c)
    if event.action == ACTION_EXTEND_PHASE:
        return None, arm_extend_phase(mode, ExtendDirection(event.direction), event.hold_min)
    return start_timed_pulse(mode, PulseDirection(event.direction), event.hold_min, on, t_h)
