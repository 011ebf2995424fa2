"""Functional encoding of shot events.

A shot is compressed to a fixed-length coefficient vector: cubic ball arcs
per spatial dimension, the stochastic time the ball spends on the second
arc, and linear player segments. One-bounce shots carry two arcs (33
features total), no-bounce shots one arc plus the total duration (21).

Time bases: arc 1 starts at the shot impact (t = 0); arc 2 is rebased to
the bounce instant, defined as the first positive root of the arc-1 z
polynomial so that evaluation is continuous by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import BounceNotFoundError, EncodingError
from .tracking import BOUNCE_Z_THRESHOLD, MIN_ARC_SAMPLES, find_bounce_index

DIMS = ("x", "y", "z")

# Upper bound on the physically meaningful first-arc duration; no tennis
# shot stays up anywhere near this long.
T1_CAP = 10.0

# Implied player speed above this is a fit artifact, not tennis.
PLAYER_SPEED_CAP = 12.0


def _arc_names(arc):
    return [f"{arc}_{dim}_{k}" for dim in DIMS for k in range(4)]


_PLAYER_NAMES = [
    f"{who}_{dim}_{coef}"
    for who in ("shooter", "receiver")
    for dim in ("x", "y")
    for coef in ("intercept", "slope")
]


@dataclass(frozen=True)
class EncodingLayout:
    """Index map from named features to vector positions.

    ``shooter_ball_indices`` (S) covers everything the impact player
    controls: ball coefficients, durations, and the shooter segment.
    ``receiver_indices`` (R) are the receiver's four segment coefficients.
    """

    bounce_flag: str
    names: tuple

    def __post_init__(self):
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    @property
    def dim(self):
        return len(self.names)

    def index(self, name):
        return self._index[name]

    @property
    def receiver_indices(self):
        return np.array([self._index[n] for n in self.names if n.startswith("receiver_")])

    @property
    def shooter_ball_indices(self):
        return np.array([i for i, n in enumerate(self.names) if not n.startswith("receiver_")])

    @property
    def shot_iq_unit_features(self):
        # Player impact positions; the bounce itself is pinned with
        # polynomial rows at the observed bounce time, not unit rows.
        return (
            "shooter_x_intercept",
            "shooter_y_intercept",
            "receiver_x_intercept",
            "receiver_y_intercept",
        )

    def arc_block(self, arc, dim):
        """Indices of the four coefficients of one arc polynomial dimension."""
        return np.array([self._index[f"{arc}_{dim}_{k}"] for k in range(4)])

    def player_block(self, who, dim):
        """(intercept, slope) indices for one player dimension."""
        return np.array(
            [self._index[f"{who}_{dim}_intercept"], self._index[f"{who}_{dim}_slope"]]
        )


def layout_for(bounce_flag):
    if bounce_flag == "one_bounce":
        names = _arc_names("arc1") + _arc_names("arc2") + ["exit_duration"] + _PLAYER_NAMES
    elif bounce_flag == "no_bounce":
        names = _arc_names("arc1") + ["total_duration"] + _PLAYER_NAMES
    else:
        raise ValueError(f"unknown bounce_flag {bounce_flag!r}")
    return EncodingLayout(bounce_flag=bounce_flag, names=tuple(names))


ONE_BOUNCE_LAYOUT = layout_for("one_bounce")
NO_BOUNCE_LAYOUT = layout_for("no_bounce")
ONE_BOUNCE_DIM = ONE_BOUNCE_LAYOUT.dim  # 33
NO_BOUNCE_DIM = NO_BOUNCE_LAYOUT.dim  # 21


@dataclass(frozen=True)
class ArcPolynomial:
    """Cubic coefficients per spatial dimension, rows ordered (x, y, z)."""

    coeffs: np.ndarray  # (3, 4), ascending powers

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=float)
        if c.shape != (3, 4):
            raise ValueError(f"arc coefficients must be (3, 4), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite arc coefficients")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def at(self, t):
        """Positions (x, y, z) at scalar or vector time on this arc's base."""
        t = np.asarray(t, dtype=float)
        powers = np.stack([np.ones_like(t), t, t**2, t**3])
        return self.coeffs @ powers

    def velocity_at(self, t):
        t = np.asarray(t, dtype=float)
        powers = np.stack([np.zeros_like(t), np.ones_like(t), 2 * t, 3 * t**2])
        return self.coeffs @ powers

    def dim_coeffs(self, dim):
        return self.coeffs[DIMS.index(dim)]


@dataclass(frozen=True)
class PlayerSegment:
    """Linear motion per player: rows (x, y), columns (intercept, slope)."""

    shooter: np.ndarray  # (2, 2)
    receiver: np.ndarray  # (2, 2)

    def __post_init__(self):
        for name in ("shooter", "receiver"):
            a = np.ascontiguousarray(getattr(self, name), dtype=float)
            if a.shape != (2, 2) or not np.all(np.isfinite(a)):
                raise ValueError(f"{name} segment must be finite (2, 2)")
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    def position_at(self, who, t):
        seg = getattr(self, who)
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return seg[:, 0] + seg[:, 1] * t
        return seg[:, 0, None] + seg[:, 1, None] * t


@dataclass(frozen=True)
class FitDiagnostics:
    rmse: dict  # stream name -> meters
    sample_counts: dict


@dataclass(frozen=True)
class FunctionalEncoding:
    """The full coefficient vector of one shot event, with its layout."""

    bounce_flag: str
    arc1: ArcPolynomial
    players: PlayerSegment
    arc2: ArcPolynomial | None = None
    exit_duration: float | None = None  # one-bounce only, seconds after T1
    total_duration: float | None = None  # no-bounce only
    layout: EncodingLayout = field(default=None, repr=False)

    def __post_init__(self):
        if self.bounce_flag == "one_bounce":
            if self.arc2 is None or self.exit_duration is None:
                raise ValueError("one-bounce encoding requires arc2 and exit_duration")
            if not self.exit_duration > 0:
                raise ValueError(f"exit_duration must be positive, got {self.exit_duration}")
        elif self.bounce_flag == "no_bounce":
            if self.arc2 is not None or self.exit_duration is not None:
                raise ValueError("no-bounce encoding must not carry arc2")
            if self.total_duration is None or not self.total_duration > 0:
                raise ValueError("no-bounce encoding requires positive total_duration")
        else:
            raise ValueError(f"unknown bounce_flag {self.bounce_flag!r}")
        if self.layout is None:
            object.__setattr__(self, "layout", layout_for(self.bounce_flag))

    def to_vector(self):
        vec = np.empty(self.layout.dim)
        vec[0:12] = self.arc1.coeffs.ravel()
        if self.bounce_flag == "one_bounce":
            vec[12:24] = self.arc2.coeffs.ravel()
            vec[24] = self.exit_duration
            vec[25:33] = np.concatenate(
                [self.players.shooter.ravel(), self.players.receiver.ravel()]
            )
        else:
            vec[12] = self.total_duration
            vec[13:21] = np.concatenate(
                [self.players.shooter.ravel(), self.players.receiver.ravel()]
            )
        return vec

    @classmethod
    def from_vector(cls, vec, bounce_flag):
        vec = np.asarray(vec, dtype=float)
        layout = layout_for(bounce_flag)
        if vec.shape != (layout.dim,):
            raise ValueError(f"expected vector of length {layout.dim}, got {vec.shape}")
        arc1 = ArcPolynomial(vec[0:12].reshape(3, 4))
        if bounce_flag == "one_bounce":
            arc2 = ArcPolynomial(vec[12:24].reshape(3, 4))
            players = PlayerSegment(vec[25:29].reshape(2, 2), vec[29:33].reshape(2, 2))
            return cls(
                bounce_flag=bounce_flag,
                arc1=arc1,
                arc2=arc2,
                exit_duration=float(vec[24]),
                players=players,
                layout=layout,
            )
        players = PlayerSegment(vec[13:17].reshape(2, 2), vec[17:21].reshape(2, 2))
        return cls(
            bounce_flag=bounce_flag,
            arc1=arc1,
            players=players,
            total_duration=float(vec[12]),
            layout=layout,
        )

    @property
    def duration(self):
        if self.bounce_flag == "one_bounce":
            t1, _, _ = bounce_location(self)
            return t1 + self.exit_duration
        return self.total_duration


def fit_polynomial(t, values, degree):
    """Least-squares polynomial coefficients (ascending) plus fit RMSE.

    Degree must be 1 or 3. Raises EncodingError on too few samples or a
    rank-deficient design (duplicate timestamps).
    """
    if degree not in (1, 3):
        raise ValueError(f"degree must be 1 or 3, got {degree}")
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != values.shape:
        raise ValueError("t and values must be matching 1-d arrays")
    if len(t) < degree + 1:
        raise EncodingError(f"need >= {degree + 1} samples for degree {degree}, got {len(t)}")
    design = np.vander(t, degree + 1, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(design, values, rcond=None)
    if rank < degree + 1:
        raise EncodingError("rank-deficient polynomial design (duplicate timestamps?)")
    resid = design @ coeffs - values
    rmse = float(np.sqrt(np.mean(resid**2)))
    return coeffs, rmse


def detect_bounce(ball_t, ball_z, threshold=BOUNCE_Z_THRESHOLD):
    """Bounce sample index and time from a ball stream.

    The bounce is the earliest local z-minimum at or below ``threshold``;
    ties resolve to the earliest. Raises BounceNotFoundError when no sample
    qualifies.
    """
    idx = find_bounce_index(ball_z, threshold)
    if idx is None:
        raise BounceNotFoundError(
            f"no bounce found: no interior z sample at or below {threshold} m"
        )
    return idx, float(np.asarray(ball_t, dtype=float)[idx])


def encode(record, bounce_threshold=BOUNCE_Z_THRESHOLD, t1_cap=T1_CAP):
    """Fit the functional encoding of a canonical ShotRecord.

    Returns (FunctionalEncoding, FitDiagnostics). For one-bounce shots the
    arc split comes from the sampled bounce; arc 2 is then rebased to the
    arc-1 z root so the two arcs meet at z = 0 exactly.
    """
    bt, bx, by, bz = record.entity_arrays("ball")
    t0 = bt[0]
    bt = bt - t0

    rmse = {}
    counts = {}

    def _fit_arc(t, x, y, z, label):
        coeffs = np.empty((3, 4))
        for row, (dim, v) in enumerate(zip(DIMS, (x, y, z))):
            c, r = fit_polynomial(t, v, degree=3)
            coeffs[row] = c
            rmse[f"{label}_{dim}"] = r
        counts[label] = len(t)
        return ArcPolynomial(coeffs)

    if record.bounce_flag == "one_bounce":
        idx, _ = detect_bounce(bt, bz, bounce_threshold)
        if idx + 1 < MIN_ARC_SAMPLES or len(bt) - idx < MIN_ARC_SAMPLES:
            raise EncodingError(
                f"shot {record.shot_id}: too few samples around the bounce "
                f"({idx + 1} before, {len(bt) - idx} after incl. bounce)"
            )
        arc1 = _fit_arc(bt[: idx + 1], bx[: idx + 1], by[: idx + 1], bz[: idx + 1], "arc1")
        root = _kernels.smallest_root_in(arc1.dim_coeffs("z")[None, :], 0.0, t1_cap)[0]
        if not np.isfinite(root):
            raise EncodingError(
                f"shot {record.shot_id}: arc-1 z polynomial has no root in (0, {t1_cap}]"
            )
        t1 = float(root)
        arc2 = _fit_arc(
            bt[idx:] - t1, bx[idx:], by[idx:], bz[idx:], "arc2"
        )
        exit_duration = float(bt[-1] - t1)
        if exit_duration <= 0:
            raise EncodingError(f"shot {record.shot_id}: ball stream ends before the bounce")
        enc = FunctionalEncoding(
            bounce_flag="one_bounce",
            arc1=arc1,
            arc2=arc2,
            exit_duration=exit_duration,
            players=_fit_players(record, t0, rmse, counts),
        )
    else:
        arc1 = _fit_arc(bt, bx, by, bz, "arc1")
        if not bt[-1] > 0:
            raise EncodingError(f"shot {record.shot_id}: zero-length ball stream")
        enc = FunctionalEncoding(
            bounce_flag="no_bounce",
            arc1=arc1,
            total_duration=float(bt[-1]),
            players=_fit_players(record, t0, rmse, counts),
        )
    return enc, FitDiagnostics(rmse=rmse, sample_counts=counts)


def _fit_players(record, t0, rmse, counts):
    segs = {}
    for who in ("shooter", "receiver"):
        t, x, y, _ = record.entity_arrays(who)
        t = t - t0
        seg = np.empty((2, 2))
        for row, (dim, v) in enumerate(zip(("x", "y"), (x, y))):
            c, r = fit_polynomial(t, v, degree=1)
            seg[row] = c
            rmse[f"{who}_{dim}"] = r
        counts[who] = len(t)
        speed = float(np.hypot(seg[0, 1], seg[1, 1]))
        if speed > PLAYER_SPEED_CAP:
            raise EncodingError(
                f"shot {record.shot_id}: implied {who} speed {speed:.1f} m/s exceeds "
                f"{PLAYER_SPEED_CAP} m/s"
            )
        segs[who] = seg
    return PlayerSegment(shooter=segs["shooter"], receiver=segs["receiver"])


def bounce_location(encoding, t1_cap=T1_CAP):
    """(T1, x, y) of the bounce: first positive arc-1 z root and the ball
    position there. One-bounce encodings only."""
    if encoding.bounce_flag != "one_bounce":
        raise EncodingError("bounce_location requires a one-bounce encoding")
    root = _kernels.smallest_root_in(encoding.arc1.dim_coeffs("z")[None, :], 0.0, t1_cap)[0]
    if not np.isfinite(root):
        raise EncodingError(f"arc-1 z polynomial has no real root in (0, {t1_cap}]")
    t1 = float(root)
    pos = encoding.arc1.at(t1)
    return t1, float(pos[0]), float(pos[1])


def evaluate(encoding, t):
    """Ball (x, y, z), shooter (x, y), receiver (x, y) at time t since impact.

    Arc 1 applies through the bounce instant T1, arc 2 on rebased time after
    it. Raises EncodingError outside [0, duration].
    """
    t = float(t)
    if encoding.bounce_flag == "one_bounce":
        t1, _, _ = bounce_location(encoding)
        duration = t1 + encoding.exit_duration
    else:
        t1 = None
        duration = encoding.total_duration
    if not (0.0 <= t <= duration + 1e-12):
        raise EncodingError(f"t={t} outside shot duration [0, {duration}]")
    if t1 is not None and t > t1:
        ball = encoding.arc2.at(t - t1)
    else:
        ball = encoding.arc1.at(t)
    shooter = encoding.players.position_at("shooter", t)
    receiver = encoding.players.position_at("receiver", t)
    return (
        (float(ball[0]), float(ball[1]), float(ball[2])),
        (float(shooter[0]), float(shooter[1])),
        (float(receiver[0]), float(receiver[1])),
    )


def encode_corpus(records, bounce_threshold=BOUNCE_Z_THRESHOLD):
    """Encode many records, split by bounce flag.

    Returns a dict ``{bounce_flag: (shot_ids, shot_types, matrix)}`` plus a
    list of (shot_id, error message) for shots that failed to encode.
    """
    buckets = {"one_bounce": [], "no_bounce": []}
    failures = []
    for rec in records:
        try:
            enc, _ = encode(rec, bounce_threshold)
        except EncodingError as exc:
            failures.append((rec.shot_id, str(exc)))
            continue
        buckets[rec.bounce_flag].append((rec.shot_id, rec.shot_type, enc.to_vector()))
    out = {}
    for flag, rows in buckets.items():
        if rows:
            ids, types, vecs = zip(*rows)
            out[flag] = (list(ids), list(types), np.vstack(vecs))
        else:
            out[flag] = ([], [], np.empty((0, layout_for(flag).dim)))
    return out, failures
