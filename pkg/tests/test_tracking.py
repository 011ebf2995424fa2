import io

import numpy as np
import pytest

from helpers import ballistic_record
from shotvalue.errors import OrientationError, ParseError
from shotvalue.tracking import (
    TrackingSample,
    canonicalize,
    parse_tracking,
    serialize_tracking,
)


def test_empty_file_gives_empty_list():
    tracking = "shot_id,entity,t,x,y,z\n"
    metadata = "shot_id,shot_type,shooter_id,receiver_id,shooter_hand,receiver_hand,outcome\n"
    assert parse_tracking(tracking, metadata) == []


def test_roundtrip_is_identity():
    rec1, _ = ballistic_record(shot_id="a1", shot_type="serve", z0=2.8, y0=-11.9, vy=21.0)
    rec2, _ = ballistic_record(shot_id="a2", vy=19.0, vx=-2.0)
    t_buf, m_buf = io.StringIO(), io.StringIO()
    serialize_tracking([rec1, rec2], t_buf, m_buf)
    parsed = parse_tracking(t_buf.getvalue(), m_buf.getvalue())
    assert parsed == [rec1, rec2]
    # second round trip is a fixed point
    t2, m2 = io.StringIO(), io.StringIO()
    serialize_tracking(parsed, t2, m2)
    assert parse_tracking(t2.getvalue(), m2.getvalue()) == parsed


def test_decreasing_timestamp_errors_with_shot_id():
    rec, _ = ballistic_record(shot_id="bad1")
    rows = ["shot_id,entity,t,x,y,z"]
    for s in rec.samples:
        rows.append(f"bad1,{s.entity},{s.t!r},{s.x!r},{s.y!r},{'' if s.z is None else repr(s.z)}")
    # duplicate an early ball timestamp at the end of the stream
    first_ball = next(s for s in rec.samples if s.entity == "ball")
    rows.append(f"bad1,ball,{first_ball.t!r},{first_ball.x!r},{first_ball.y!r},{first_ball.z!r}")
    metadata = (
        "shot_id,shot_type,shooter_id,receiver_id,shooter_hand,receiver_hand,outcome\n"
        "bad1,rally,sh1,rc1,right,right,in_play\n"
    )
    with pytest.raises(ParseError, match="bad1"):
        parse_tracking("\n".join(rows), metadata)


def test_missing_ball_stream_errors():
    metadata = (
        "shot_id,shot_type,shooter_id,receiver_id,shooter_hand,receiver_hand,outcome\n"
        "x1,rally,sh1,rc1,right,right,in_play\n"
    )
    tracking = "shot_id,entity,t,x,y,z\n" + "\n".join(
        f"x1,shooter,{t},0.0,-5.0," for t in (0.0, 0.1, 0.2, 0.3)
    )
    with pytest.raises(ParseError, match="ball"):
        parse_tracking(tracking, metadata)


def test_malformed_row_reports_line():
    metadata = (
        "shot_id,shot_type,shooter_id,receiver_id,shooter_hand,receiver_hand,outcome\n"
        "x1,rally,sh1,rc1,right,right,in_play\n"
    )
    tracking = "shot_id,entity,t,x,y,z\nx1,ball,zero,0.0,-5.0,1.0\n"
    with pytest.raises(ParseError, match="line 2"):
        parse_tracking(tracking, metadata)


def test_ball_sample_validation():
    with pytest.raises(ValueError):
        TrackingSample("ball", 0.0, 0.0, 0.0, None)  # missing z
    with pytest.raises(ValueError):
        TrackingSample("shooter", 0.0, 0.0, 0.0, 1.0)  # player with z
    with pytest.raises(ValueError):
        TrackingSample("ball", -0.5, 0.0, 0.0, 1.0)  # negative time
    with pytest.raises(ValueError):
        TrackingSample("ball", 0.0, 0.0, 0.0, -1.0)  # under the court


class TestCanonicalize:
    def test_already_canonical_identity(self):
        rec, _ = ballistic_record()
        assert canonicalize(rec) is rec

    def test_flip_negates_all_y(self):
        rec, _ = ballistic_record()
        flipped_samples = tuple(
            TrackingSample(s.entity, s.t, s.x, -s.y, s.z) for s in rec.samples
        )
        flipped = type(rec)(
            shot_id=rec.shot_id,
            shot_type=rec.shot_type,
            bounce_flag=rec.bounce_flag,
            samples=flipped_samples,
            shooter_meta=rec.shooter_meta,
            receiver_meta=rec.receiver_meta,
            outcome=rec.outcome,
        )
        restored = canonicalize(flipped)
        for a, b in zip(restored.samples, rec.samples):
            assert a.y == pytest.approx(b.y, abs=0)
            assert a.x == b.x and a.t == b.t

    def test_idempotent(self):
        rec, _ = ballistic_record(y0=-7.5)
        once = canonicalize(rec)
        assert canonicalize(once) == once

    def test_preserves_pairwise_distances(self):
        rec, _ = ballistic_record(receiver_start=(-1.5, 9.0), receiver_v=(1.0, -2.0))
        flipped_samples = tuple(
            TrackingSample(s.entity, s.t, s.x, -s.y, s.z) for s in rec.samples
        )
        flipped = type(rec)(
            shot_id=rec.shot_id,
            shot_type=rec.shot_type,
            bounce_flag=rec.bounce_flag,
            samples=flipped_samples,
            shooter_meta=rec.shooter_meta,
            receiver_meta=rec.receiver_meta,
            outcome=rec.outcome,
        )
        canon = canonicalize(flipped)
        bt, bx, by, _ = canon.entity_arrays("ball")
        rt, rx, ry, _ = canon.entity_arrays("receiver")
        bt0, bx0, by0, _ = flipped.entity_arrays("ball")
        rt0, rx0, ry0, _ = flipped.entity_arrays("receiver")
        np.testing.assert_allclose(
            np.hypot(bx - rx, by - ry), np.hypot(bx0 - rx0, by0 - ry0), atol=1e-12
        )

    def test_straddling_net_is_ambiguous(self):
        rec, _ = ballistic_record(y0=-8.0)
        moved = tuple(
            TrackingSample(s.entity, s.t, s.x, 0.0 if s.entity == "shooter" else s.y, s.z)
            for s in rec.samples
        )
        shifted = type(rec)(
            shot_id=rec.shot_id,
            shot_type=rec.shot_type,
            bounce_flag=rec.bounce_flag,
            samples=moved,
            shooter_meta=rec.shooter_meta,
            receiver_meta=rec.receiver_meta,
            outcome=rec.outcome,
        )
        with pytest.raises(OrientationError):
            canonicalize(shifted)
