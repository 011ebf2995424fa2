"""Raw tracking samples, shot records, and CSV ingestion.

Two CSV files describe a corpus:

* tracking: ``shot_id, entity, t, x, y, z`` with ``z`` empty for players;
* metadata: ``shot_id, shot_type, shooter_id, receiver_id, shooter_hand,
  receiver_hand, outcome``.

Records are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import OrientationError, ParseError

ENTITIES = ("ball", "shooter", "receiver")
SHOT_TYPES = ("serve", "serve_return", "rally")
BOUNCE_FLAGS = ("one_bounce", "no_bounce")
OUTCOMES = ("win", "error", "in_play")
HANDS = ("left", "right")

# Ball z at the nearest sample to a real bounce is bounded by fall speed
# times the sampling interval; 0.15 m covers rates >= 50 Hz comfortably.
BOUNCE_Z_THRESHOLD = 0.15

# Samples may dip slightly below the court plane from tracking jitter.
BALL_Z_TOLERANCE = 0.05

# Minimum ball samples per arc so a cubic fit is determined with slack.
MIN_ARC_SAMPLES = 4

TRACKING_COLUMNS = ("shot_id", "entity", "t", "x", "y", "z")
METADATA_COLUMNS = (
    "shot_id",
    "shot_type",
    "shooter_id",
    "receiver_id",
    "shooter_hand",
    "receiver_hand",
    "outcome",
)


@dataclass(frozen=True, slots=True)
class TrackingSample:
    """One positional sample; ``t`` is seconds since shot impact."""

    entity: str
    t: float
    x: float
    y: float
    z: float | None = None  # meters above court, ball only

    def __post_init__(self):
        if self.entity not in ENTITIES:
            raise ValueError(f"unknown entity {self.entity!r}")
        if self.t < 0:
            raise ValueError(f"negative timestamp {self.t}")
        if self.entity == "ball":
            if self.z is None:
                raise ValueError("ball sample missing z")
            if self.z < -BALL_Z_TOLERANCE:
                raise ValueError(f"ball z below court plane: {self.z}")
        elif self.z is not None:
            raise ValueError(f"{self.entity} sample carries z")


@dataclass(frozen=True, slots=True)
class PlayerMeta:
    player_id: str
    handedness: str

    def __post_init__(self):
        if self.handedness not in HANDS:
            raise ValueError(f"handedness must be one of {HANDS}, got {self.handedness!r}")


@dataclass(frozen=True, slots=True)
class OutcomeLabel:
    label: str

    def __post_init__(self):
        if self.label not in OUTCOMES:
            raise ValueError(f"outcome must be one of {OUTCOMES}, got {self.label!r}")

    @property
    def win_indicator(self):
        return 1 if self.label == "win" else 0


@dataclass(frozen=True, slots=True)
class ShotRecord:
    """All ball and player samples of one shot, plus metadata."""

    shot_id: str
    shot_type: str
    bounce_flag: str
    samples: tuple = field(repr=False)
    shooter_meta: PlayerMeta = None
    receiver_meta: PlayerMeta = None
    outcome: OutcomeLabel = None

    def __post_init__(self):
        if self.shot_type not in SHOT_TYPES:
            raise ValueError(f"unknown shot_type {self.shot_type!r}")
        if self.bounce_flag not in BOUNCE_FLAGS:
            raise ValueError(f"unknown bounce_flag {self.bounce_flag!r}")
        present = {e for e in ENTITIES if any(s.entity == e for s in self.samples)}
        missing = set(ENTITIES) - present
        if missing:
            raise ValueError(f"shot {self.shot_id}: missing streams {sorted(missing)}")
        for entity in ENTITIES:
            ts = [s.t for s in self.samples if s.entity == entity]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ValueError(f"shot {self.shot_id}: non-monotone timestamps for {entity}")
        n_ball = sum(1 for s in self.samples if s.entity == "ball")
        if n_ball < MIN_ARC_SAMPLES:
            raise ValueError(
                f"shot {self.shot_id}: {n_ball} ball samples, need >= {MIN_ARC_SAMPLES}"
            )

    def entity_samples(self, entity):
        return [s for s in self.samples if s.entity == entity]

    def entity_arrays(self, entity):
        """(t, x, y, z) float arrays for one entity; z is all-nan for players."""
        sel = self.entity_samples(entity)
        t = np.array([s.t for s in sel], dtype=float)
        x = np.array([s.x for s in sel], dtype=float)
        y = np.array([s.y for s in sel], dtype=float)
        z = np.array([np.nan if s.z is None else s.z for s in sel], dtype=float)
        return t, x, y, z


def find_bounce_index(z, threshold=BOUNCE_Z_THRESHOLD):
    """Index of the earliest local z-minimum at or below ``threshold``.

    Returns None when no sample qualifies. Endpoints do not count: a bounce
    needs samples on both sides.
    """
    z = np.asarray(z, dtype=float)
    for i in range(1, len(z) - 1):
        if z[i] <= threshold and z[i] <= z[i - 1] and z[i] <= z[i + 1]:
            return i
    return None


def _infer_bounce_flag(z, threshold=BOUNCE_Z_THRESHOLD):
    i = find_bounce_index(z, threshold)
    if i is None:
        return "no_bounce"
    # Each arc must remain individually fittable.
    if i + 1 < MIN_ARC_SAMPLES or len(z) - i < MIN_ARC_SAMPLES:
        return "no_bounce"
    return "one_bounce"


def _as_text_lines(stream):
    if isinstance(stream, (str, bytes)):
        data = stream.decode("utf-8") if isinstance(stream, bytes) else stream
        return io.StringIO(data)
    if isinstance(stream, io.TextIOBase):
        return stream
    return io.TextIOWrapper(stream, encoding="utf-8")


def _read_csv_rows(stream, columns, what):
    reader = csv.reader(_as_text_lines(stream))
    rows = []
    header = None
    for lineno, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if row[0].startswith("#"):
            continue
        if header is None:
            header = [c.strip() for c in row]
            if header != list(columns):
                raise ParseError(f"{what} line {lineno}: expected header {','.join(columns)}")
            continue
        if len(row) != len(columns):
            raise ParseError(f"{what} line {lineno}: expected {len(columns)} fields, got {len(row)}")
        rows.append((lineno, row))
    return rows


def parse_tracking(tracking_stream, metadata_stream, bounce_threshold=BOUNCE_Z_THRESHOLD):
    """Parse tracking + metadata CSV streams into a list of ShotRecord.

    Accepts bytes, str, or file objects. Samples are grouped per entity and
    sorted by t; the bounce flag is inferred from the ball z profile. Raises
    ParseError naming the offending line or shot on malformed input.
    """
    meta = {}
    for lineno, row in _read_csv_rows(metadata_stream, METADATA_COLUMNS, "metadata"):
        shot_id, shot_type, shooter_id, receiver_id, sh_hand, rc_hand, outcome = (
            f.strip() for f in row
        )
        if shot_id in meta:
            raise ParseError(f"metadata line {lineno}: duplicate shot_id {shot_id!r}")
        try:
            meta[shot_id] = (
                shot_type,
                PlayerMeta(shooter_id, sh_hand),
                PlayerMeta(receiver_id, rc_hand),
                OutcomeLabel(outcome),
            )
        except ValueError as exc:
            raise ParseError(f"metadata line {lineno}: {exc}") from exc

    by_shot = {}
    for lineno, row in _read_csv_rows(tracking_stream, TRACKING_COLUMNS, "tracking"):
        shot_id = row[0].strip()
        entity = row[1].strip()
        try:
            t = float(row[2])
            x = float(row[3])
            y = float(row[4])
            zs = row[5].strip()
            z = float(zs) if zs else None
            sample = TrackingSample(entity, t, x, y, z)
        except ValueError as exc:
            raise ParseError(f"tracking line {lineno}: {exc}") from exc
        by_shot.setdefault(shot_id, []).append(sample)

    records = []
    for shot_id, samples in by_shot.items():
        if shot_id not in meta:
            raise ParseError(f"shot {shot_id}: tracking rows without metadata")
        shot_type, shooter_meta, receiver_meta, outcome = meta[shot_id]
        grouped = []
        for entity in ENTITIES:
            sel = sorted((s for s in samples if s.entity == entity), key=lambda s: s.t)
            ts = [s.t for s in sel]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise ParseError(f"shot {shot_id}: non-monotone timestamps for {entity}")
            grouped.extend(sel)
        ball_z = [s.z for s in grouped if s.entity == "ball"]
        if not ball_z:
            raise ParseError(f"shot {shot_id}: missing ball stream")
        flag = _infer_bounce_flag(ball_z, bounce_threshold)
        try:
            records.append(
                ShotRecord(
                    shot_id=shot_id,
                    shot_type=shot_type,
                    bounce_flag=flag,
                    samples=tuple(grouped),
                    shooter_meta=shooter_meta,
                    receiver_meta=receiver_meta,
                    outcome=outcome,
                )
            )
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    return records


def serialize_tracking(records, tracking_stream, metadata_stream):
    """Write records back to the two-CSV layout; inverse of parse_tracking."""
    tw = csv.writer(tracking_stream, lineterminator="\n")
    tw.writerow(TRACKING_COLUMNS)
    mw = csv.writer(metadata_stream, lineterminator="\n")
    mw.writerow(METADATA_COLUMNS)
    for rec in records:
        mw.writerow(
            [
                rec.shot_id,
                rec.shot_type,
                rec.shooter_meta.player_id,
                rec.receiver_meta.player_id,
                rec.shooter_meta.handedness,
                rec.receiver_meta.handedness,
                rec.outcome.label,
            ]
        )
        for s in rec.samples:
            tw.writerow(
                [
                    rec.shot_id,
                    s.entity,
                    repr(float(s.t)),
                    repr(float(s.x)),
                    repr(float(s.y)),
                    "" if s.z is None else repr(float(s.z)),
                ]
            )


def canonicalize(record, tolerance=1e-6):
    """Reflect y so the shooter hits from y < 0; idempotent.

    Raises OrientationError when the shooter's impact position is on the net
    line within ``tolerance`` (orientation ambiguous).
    """
    shooter = record.entity_samples("shooter")
    y0 = shooter[0].y
    if abs(y0) <= tolerance:
        raise OrientationError(
            f"shot {record.shot_id}: shooter impact y={y0} straddles the net line"
        )
    if y0 < 0:
        return record
    flipped = tuple(
        TrackingSample(s.entity, s.t, s.x, -s.y, s.z) for s in record.samples
    )
    return ShotRecord(
        shot_id=record.shot_id,
        shot_type=record.shot_type,
        bounce_flag=record.bounce_flag,
        samples=flipped,
        shooter_meta=record.shooter_meta,
        receiver_meta=record.receiver_meta,
        outcome=record.outcome,
    )
