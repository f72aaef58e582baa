"""Sub-dataset selection: heralding, pulse ranges, phase windows, state, invalid policy.

The phase domain is circular (wraps at 160): phase is a cyclic laser-period
coordinate, so windows near 0/160 wrap around.  Ties at the window boundary
go Inside (distance == halfwidth passes Inside, fails Outside).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .errors import MalformedRecordError
from .events import (
    PHASE_DOMAIN,
    PULSE_MAX,
    Dataset,
    DetectionTag,
    Outcome,
    Party,
    StateTag,
    TrialRecord,
)


class WindowMode(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"


class InvalidPolicy(enum.Enum):
    DROP = "drop"
    COUNT_AS_CLICK = "as-click"


def circular_distance(x: int, center: int, domain: int) -> int:
    d = abs(x - center) % domain
    return min(d, domain - d)


@dataclass(frozen=True)
class PhaseWindow:
    center: int
    halfwidth: int
    mode: WindowMode

    def __post_init__(self) -> None:
        if not 0 <= self.center < PHASE_DOMAIN:
            raise ValueError(f"phase center {self.center} outside 0..{PHASE_DOMAIN - 1}")
        if self.halfwidth < 0:
            raise ValueError("halfwidth must be >= 0")

    def contains(self, phase: int) -> bool:
        inside = circular_distance(phase, self.center, PHASE_DOMAIN) <= self.halfwidth
        return inside if self.mode is WindowMode.INSIDE else not inside

    def wraps(self) -> bool:
        """True when the excluded/included band crosses the 0/160 boundary."""
        return self.center - self.halfwidth < 0 or self.center + self.halfwidth >= PHASE_DOMAIN


@dataclass(frozen=True)
class PulseRange:
    lo: int
    hi: int  # inclusive

    def __post_init__(self) -> None:
        if not 0 <= self.lo <= self.hi <= PULSE_MAX:
            raise ValueError(f"pulse range {self.lo}:{self.hi} outside 0..{PULSE_MAX}")

    def contains(self, pulse: int) -> bool:
        return self.lo <= pulse <= self.hi


@dataclass(frozen=True)
class FilterSpec:
    """Conjunction of record constraints; absent fields constrain nothing."""

    herald_required: bool = False
    pulse_a: PulseRange | None = None
    pulse_b: PulseRange | None = None
    phase_a: PhaseWindow | None = None
    phase_b: PhaseWindow | None = None
    state: StateTag | None = None
    invalid_policy: InvalidPolicy | None = None


def _tag_passes(tag: DetectionTag, pulse: PulseRange | None, phase: PhaseWindow | None) -> bool:
    if pulse is not None and tag.pulse is not None and not pulse.contains(tag.pulse):
        return False
    if phase is not None and tag.phase is not None and not phase.contains(tag.phase):
        return False
    return True


def _tag_constrained(tag: DetectionTag, pulse: PulseRange | None, phase: PhaseWindow | None) -> bool:
    return (pulse is not None and tag.pulse is not None) or (
        phase is not None and tag.phase is not None
    )


def _filter_record(r: TrialRecord, f: FilterSpec) -> TrialRecord | None:
    """Apply all constraints to one record; None means the record is dropped.

    Window constraints act per party on that party's tags: tags failing
    the window are pruned; a record that had constrained tags for a party
    but none passing is dropped.  Records without constrained tags for a
    party pass that party's window vacuously (window constraints never
    reject tagless records, e.g. spin readouts).
    """
    if f.herald_required and r.herald is not Outcome.CLICK:
        return None
    if f.state is not None and r.state_tag is not f.state:
        return None

    outcome_a, outcome_b = r.outcome_a, r.outcome_b
    if f.invalid_policy is InvalidPolicy.DROP:
        if outcome_a is Outcome.INVALID or outcome_b is Outcome.INVALID:
            return None
    elif f.invalid_policy is InvalidPolicy.COUNT_AS_CLICK:
        if outcome_a is Outcome.INVALID:
            outcome_a = Outcome.CLICK
        if outcome_b is Outcome.INVALID:
            outcome_b = Outcome.CLICK

    constraints = {Party.A: (f.pulse_a, f.phase_a), Party.B: (f.pulse_b, f.phase_b)}
    tags = r.tags
    if r.tags and any(c != (None, None) for c in constraints.values()):
        kept = []
        had_constrained = {Party.A: False, Party.B: False}
        passed_constrained = {Party.A: False, Party.B: False}
        for tag in r.tags:
            pulse, phase = constraints.get(tag.party, (None, None))
            if not _tag_constrained(tag, pulse, phase):
                kept.append(tag)
                continue
            had_constrained[tag.party] = True
            if _tag_passes(tag, pulse, phase):
                passed_constrained[tag.party] = True
                kept.append(tag)
        for party in (Party.A, Party.B):
            if had_constrained[party] and not passed_constrained[party]:
                return None
        tags = tuple(kept)

    if outcome_a is r.outcome_a and outcome_b is r.outcome_b and tags is r.tags:
        return r
    return r._replace(outcome_a=outcome_a, outcome_b=outcome_b, tags=tags)


def apply_filter(d: Dataset, f: FilterSpec) -> Dataset:
    """Pure, idempotent selection; an empty result is valid."""
    out = []
    for r in d.records:
        kept = _filter_record(r, f)
        if kept is not None:
            out.append(kept)
    meta = dict(d.meta)
    if (f.phase_a is not None and f.phase_a.wraps()) or (
        f.phase_b is not None and f.phase_b.wraps()
    ):
        meta["phase_window_wraps"] = "true"
    return Dataset(tuple(out), meta)


def window_area_fraction(w: PhaseWindow, domain: int) -> Fraction:
    """Look-elsewhere rescale factor: full domain over the width searched.

    An Outside window with halfwidth h excludes a band of width 2h, so the
    searched width is domain - 2h and the factor is domain/(domain - 2h),
    e.g. 160/(160 - 32) = 1.25 for halfwidth 16.  For an Inside window the
    searched width is the band itself, min(2h, domain).
    """
    if domain <= 0:
        raise ValueError("domain must be positive")
    if w.mode is WindowMode.OUTSIDE:
        covered = domain - 2 * w.halfwidth
        if covered <= 0:
            raise ValueError("excluded width covers the whole domain")
    else:
        covered = min(2 * w.halfwidth, domain)
        if covered <= 0:
            raise ValueError("inside window has zero width")
    return Fraction(domain, covered)


def parse_phase_window(text: str) -> PhaseWindow:
    """Parse CLI syntax 'inside:90:16' / 'outside:125:20'."""
    parts = text.split(":")
    if len(parts) != 3:
        raise MalformedRecordError(f"bad phase window: {text!r}")
    try:
        mode = WindowMode(parts[0].lower())
    except ValueError:
        raise MalformedRecordError(f"bad window mode: {parts[0]!r}") from None
    return PhaseWindow(int(parts[1]), int(parts[2]), mode)


def parse_pulse_range(text: str) -> PulseRange:
    """Parse CLI syntax '28:800'."""
    parts = text.split(":")
    if len(parts) != 2:
        raise MalformedRecordError(f"bad pulse range: {text!r}")
    return PulseRange(int(parts[0]), int(parts[1]))
