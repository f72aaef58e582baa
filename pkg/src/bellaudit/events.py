"""Unified trial/detection data model and the line-oriented record format.

One record per line, tab-separated:

    trial_id <TAB> a <TAB> b <TAB> A <TAB> B <TAB> C <TAB> state <TAB> tags

    a, b   : choice bits, 0 or 1 (mandatory)
    A, B   : outcomes, one of  +1  -1  1  0  inv  -   (- marks absent)
    C      : herald outcome, one of  1  0  -
    state  : psi+  psi-  -
    tags   : semicolon-separated detector clicks  party:pulse:phase:time_ns
             with - for absent subfields, or a single - when there are no tags

Header lines start with '#'; lines of the form '# key=value' carry dataset
metadata, any other '#' line is a comment.  Malformed data lines are skipped
and counted, never fatal: raw experimental dumps contain noise lines.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, NamedTuple

from .errors import MalformedRecordError

SPEED_OF_LIGHT_M_PER_S = 299_792_458.0  # exact SI value

PULSE_MAX = 800     # valid pulse indices are 0..800 inclusive
PHASE_DOMAIN = 160  # valid phase indices are 0..159, circular


class Party(enum.Enum):
    A = "A"
    B = "B"
    C = "C"


class Outcome(enum.Enum):
    """Measurement outcome; token doubles as the serialized form.

    PLUS/MINUS are spin readouts (Delft/Munich style), CLICK/NOCLICK photon
    detections (NIST/Vienna style).  INVALID is preserved as found in the
    source data; reinterpreting it is a filter-stage decision.
    """

    PLUS = "+1"
    MINUS = "-1"
    CLICK = "1"
    NOCLICK = "0"
    INVALID = "inv"


class StateTag(enum.Enum):
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"
    NONE = "-"


class DetectionTag(NamedTuple):
    """One detector click: which party saw it and when (pulse/phase/time)."""

    party: Party
    pulse: int | None = None
    phase: int | None = None
    time_offset_ns: float | None = None


class TrialRecord(NamedTuple):
    """One experimental attempt with both choice bits and whatever was read out."""

    trial_id: int
    choice_a: int
    choice_b: int
    outcome_a: Outcome | None = None
    outcome_b: Outcome | None = None
    herald: Outcome | None = None
    state_tag: StateTag = StateTag.NONE
    tags: tuple[DetectionTag, ...] = ()


@dataclass(frozen=True)
class Dataset:
    """Ordered, immutable collection of trial records plus free-form metadata.

    Record order is ingestion order and is preserved by emit().  The skipped
    line count is a diagnostic, not part of dataset identity.
    """

    records: tuple[TrialRecord, ...] = ()
    meta: dict[str, str] = field(default_factory=dict)
    skipped_lines: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TrialRecord]:
        return iter(self.records)

    def replace_records(self, records: Iterable[TrialRecord]) -> "Dataset":
        return Dataset(tuple(records), dict(self.meta))


def concat(*datasets: Dataset) -> Dataset:
    """Concatenate datasets in order; metadata of the first one wins."""
    records: list[TrialRecord] = []
    for d in datasets:
        records.extend(d.records)
    meta = dict(datasets[0].meta) if datasets else {}
    return Dataset(tuple(records), meta)


def validate_tag(tag: DetectionTag) -> None:
    if tag.pulse is None and tag.phase is None and tag.time_offset_ns is None:
        raise MalformedRecordError("detection tag carries no pulse, phase or time")
    if tag.pulse is not None and not (0 <= tag.pulse <= PULSE_MAX):
        raise MalformedRecordError(f"pulse {tag.pulse} outside 0..{PULSE_MAX}")
    if tag.phase is not None and not (0 <= tag.phase < PHASE_DOMAIN):
        raise MalformedRecordError(f"phase {tag.phase} outside 0..{PHASE_DOMAIN - 1}")


_HERALD_TOKENS = {"1": Outcome.CLICK, "0": Outcome.NOCLICK, "-": None}
_OUTCOME_TOKENS = {o.value: o for o in Outcome} | {"-": None}
_STATE_TOKENS = {s.value: s for s in StateTag}
_PARTY_TOKENS = {p.value: p for p in Party}


def _parse_int(token: str, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MalformedRecordError(f"bad {what}: {token!r}") from None


def _parse_tags(token: str) -> tuple[DetectionTag, ...]:
    if token == "-":
        return ()
    tags = []
    for part in token.split(";"):
        sub = part.split(":")
        if len(sub) != 4:
            raise MalformedRecordError(f"bad tag: {part!r}")
        party = _PARTY_TOKENS.get(sub[0])
        if party is None:
            raise MalformedRecordError(f"bad tag party: {sub[0]!r}")
        pulse = None if sub[1] == "-" else _parse_int(sub[1], "tag pulse")
        phase = None if sub[2] == "-" else _parse_int(sub[2], "tag phase")
        if sub[3] == "-":
            time_ns = None
        else:
            try:
                time_ns = float(sub[3])
            except ValueError:
                raise MalformedRecordError(f"bad tag time: {sub[3]!r}") from None
        tag = DetectionTag(party, pulse, phase, time_ns)
        validate_tag(tag)
        tags.append(tag)
    return tuple(tags)


def parse_line(line: str) -> TrialRecord:
    """Parse one data line; raises MalformedRecordError on any defect."""
    fields = line.rstrip("\n").split("\t")
    if len(fields) != 8:
        raise MalformedRecordError(f"expected 8 fields, got {len(fields)}")
    trial_id = _parse_int(fields[0], "trial_id")
    a = _parse_int(fields[1], "choice a")
    b = _parse_int(fields[2], "choice b")
    if a not in (0, 1) or b not in (0, 1):
        raise MalformedRecordError(f"choices must be 0 or 1, got {a},{b}")
    if fields[3] not in _OUTCOME_TOKENS or fields[4] not in _OUTCOME_TOKENS:
        raise MalformedRecordError(f"bad outcome token: {fields[3]!r}/{fields[4]!r}")
    if fields[5] not in _HERALD_TOKENS:
        raise MalformedRecordError(f"bad herald token: {fields[5]!r}")
    if fields[6] not in _STATE_TOKENS:
        raise MalformedRecordError(f"bad state token: {fields[6]!r}")
    return TrialRecord(
        trial_id=trial_id,
        choice_a=a,
        choice_b=b,
        outcome_a=_OUTCOME_TOKENS[fields[3]],
        outcome_b=_OUTCOME_TOKENS[fields[4]],
        herald=_HERALD_TOKENS[fields[5]],
        state_tag=_STATE_TOKENS[fields[6]],
        tags=_parse_tags(fields[7]),
    )


def format_record(r: TrialRecord) -> str:
    """Inverse of parse_line; floats use repr so round-trips are exact."""
    if r.tags:
        tags = ";".join(
            ":".join(
                (
                    t.party.value,
                    "-" if t.pulse is None else str(t.pulse),
                    "-" if t.phase is None else str(t.phase),
                    "-" if t.time_offset_ns is None else repr(t.time_offset_ns),
                )
            )
            for t in r.tags
        )
    else:
        tags = "-"
    return "\t".join(
        (
            str(r.trial_id),
            str(r.choice_a),
            str(r.choice_b),
            "-" if r.outcome_a is None else r.outcome_a.value,
            "-" if r.outcome_b is None else r.outcome_b.value,
            "-" if r.herald is None else r.herald.value,
            r.state_tag.value,
            tags,
        )
    )


def ingest(stream: Iterable[str]) -> Dataset:
    """Read a line-oriented record stream into a Dataset.

    Malformed lines (including duplicate trial ids) are skipped and counted
    in Dataset.skipped_lines.  An unreadable source raises whatever the
    underlying iterator raises — that is fatal by design.
    """
    records: list[TrialRecord] = []
    meta: dict[str, str] = {}
    seen: set[int] = set()
    skipped = 0
    for line in stream:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        try:
            record = parse_line(line)
        except MalformedRecordError:
            skipped += 1
            continue
        if record.trial_id in seen:
            skipped += 1
            continue
        seen.add(record.trial_id)
        records.append(record)
    return Dataset(tuple(records), meta, skipped)


def emit(dataset: Dataset, sink: IO[str]) -> None:
    """Write a Dataset in the line format; ingest(emit(d)) == d, byte-stable."""
    for key in sorted(dataset.meta):
        sink.write(f"# {key}={dataset.meta[key]}\n")
    for record in dataset.records:
        sink.write(format_record(record))
        sink.write("\n")


def read_dataset(path: str) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return ingest(fh)


def write_dataset(dataset: Dataset, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        emit(dataset, fh)


def spacelike_margin(distance_m: float, elapsed_ns: float) -> float:
    """Light-travel margin in ns: distance_m / c minus the elapsed time.

    Positive means the two events are spacelike separated with that much
    slack; negative means a light signal could have connected them.
    """
    if distance_m < 0 or elapsed_ns < 0:
        raise ValueError("distance and elapsed time must be non-negative")
    return distance_m / SPEED_OF_LIGHT_M_PER_S * 1e9 - elapsed_ns
