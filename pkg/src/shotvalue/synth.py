"""Ballistic synthetic shot generator with a known outcome rule.

Physics is drag-free on purpose: every trajectory is closed-form (z exactly
quadratic in t), so each downstream stage has an analytic oracle. Labels
come from a declared logistic rule over ground-truth features, with shots
whose true bounce lands outside the legal region assigned 'error'.

Receiver archetypes differ in stance and movement: 'deep_returner' starts
central/deep and runs toward the true good position, 'flat_footed' starts
wide-biased and does not move. The stance difference is what gives court-
coverage metrics a known sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .geometry import CourtGeometry, in_bounds, in_service_boxes
from .tracking import OutcomeLabel, PlayerMeta, ShotRecord, TrackingSample

GRAVITY = 9.81

ARCHETYPES = ("deep_returner", "flat_footed")

DEFAULT_RULE = {
    "intercept": -6.0,
    "impact_speed": 0.09,
    "dist_good_position": 0.30,
    "bounce_y": 0.12,
    "abs_bounce_x": 0.25,
}

# Volleys have no bounce, so the rule shrinks to its speed term.
DEFAULT_VOLLEY_RULE = {
    "intercept": -3.0,
    "impact_speed": 0.09,
}

# Launch ranges per shot type: impact height, launch y, and velocity boxes.
# Shots that fail to clear the net are resampled, so the effective corpus
# is shaped by these ranges intersected with net clearance.
_LAUNCH = {
    "serve": dict(z0=(2.7, 2.9), y0=(-12.5, -11.9), x0=(-2.0, 2.0),
                  vy=(18.0, 25.0), vx=(-3.0, 3.0), vz=(-0.5, 1.2)),
    "serve_return": dict(z0=(0.8, 1.4), y0=(-12.5, -9.0), x0=(-3.5, 3.5),
                         vy=(13.0, 22.0), vx=(-4.0, 4.0), vz=(1.5, 4.5)),
    "rally": dict(z0=(0.9, 1.4), y0=(-11.5, -5.0), x0=(-3.5, 3.5),
                  vy=(13.0, 23.0), vx=(-4.0, 4.0), vz=(1.5, 4.5)),
}

_SHOOTER_POOL = ("p01", "p02", "p03", "p04")


@dataclass(frozen=True)
class SynthConfig:
    gravity: float = GRAVITY
    restitution: float = 0.75
    rate_hz: float = 50.0
    noise_sd: float = 0.02
    volley_fraction: float = 0.12
    shot_type_weights: tuple = (1.0, 1.0, 1.0)  # serve, serve_return, rally
    archetype_weights: tuple = (0.5, 0.5)  # deep_returner, flat_footed
    receiver_speed_cap: float = 8.0
    good_position_height: float = 1.0
    rule: dict = field(default_factory=lambda: dict(DEFAULT_RULE))
    volley_rule: dict = field(default_factory=lambda: dict(DEFAULT_VOLLEY_RULE))
    random_orientation: bool = True
    geometry: CourtGeometry = field(default_factory=CourtGeometry)

    def __post_init__(self):
        if not 0.0 < self.restitution < 1.0:
            raise ConfigError(f"restitution must be in (0, 1), got {self.restitution}")
        if self.rate_hz < 20.0:
            raise ConfigError(f"sampling rate must be >= 20 Hz, got {self.rate_hz}")
        if not 0.0 <= self.volley_fraction <= 1.0:
            raise ConfigError("volley_fraction must be in [0, 1]")


@dataclass(frozen=True)
class SynthShot:
    """A generated record plus everything the generator knew about it."""

    record: ShotRecord
    true_p: float
    true_bounce: tuple  # (x, y); ballistic landing point even for volleys
    archetype: str
    truth: dict = field(repr=False)  # launch params and derived quantities


def _sigmoid(v):
    return 1.0 / (1.0 + math.exp(-v))


def _rule_index(rule, features):
    total = rule.get("intercept", 0.0)
    for name, coef in rule.items():
        if name == "intercept":
            continue
        if name not in features:
            raise ConfigError(f"outcome rule references unknown feature {name!r}")
        total += coef * features[name]
    return total


def _true_good_position(v2z, gravity, height):
    """Arc-2 time when the ball first reaches ``height``, or the apex time."""
    disc = v2z * v2z - 2.0 * gravity * height
    if disc >= 0.0:
        return (v2z - math.sqrt(disc)) / gravity
    return v2z / gravity


def _sample_launch(rng, spec, net_height, gravity):
    """Draw launch parameters until the ball clears the net; ConfigError if
    the configured ranges make that impossible."""
    for _ in range(200):
        z0 = rng.uniform(*spec["z0"])
        y0 = rng.uniform(*spec["y0"])
        x0 = rng.uniform(*spec["x0"])
        vy = rng.uniform(*spec["vy"])
        vx = rng.uniform(*spec["vx"])
        vz = rng.uniform(*spec["vz"])
        t_b = (vz + math.sqrt(vz * vz + 2.0 * gravity * z0)) / gravity
        t_net = -y0 / vy
        if t_net >= t_b:  # would bounce on its own side
            continue
        z_net = z0 + vz * t_net - 0.5 * gravity * t_net * t_net
        if z_net <= net_height + 0.02:
            continue
        return x0, y0, z0, vx, vy, vz, t_b
    raise ConfigError("infeasible launch ranges: ball cannot clear the net")


def _time_grid(t_total, rate_hz, insert=None):
    dt = 1.0 / rate_hz
    ts = list(np.arange(0.0, t_total + dt / 2.0, dt))
    if ts[-1] > t_total:
        ts[-1] = t_total
    if insert is not None and 0.0 < insert < t_total:
        ts = [t for t in ts if abs(t - insert) > 1e-9]
        ts.append(insert)
    ts = sorted(set(ts))
    return np.array(ts)


def generate_shot(config, rng, shot_id):
    """One SynthShot; all randomness from ``rng``."""
    geom = config.geometry
    g = config.gravity

    type_w = np.asarray(config.shot_type_weights, dtype=float)
    shot_type = ("serve", "serve_return", "rally")[rng.choice(3, p=type_w / type_w.sum())]
    arche_w = np.asarray(config.archetype_weights, dtype=float)
    archetype = ARCHETYPES[rng.choice(2, p=arche_w / arche_w.sum())]
    is_volley = rng.random() < config.volley_fraction

    x0, y0, z0, vx, vy, vz, t_b = _sample_launch(
        rng, _LAUNCH[shot_type], geom.net_height_center, g
    )
    bx = x0 + vx * t_b
    by = y0 + vy * t_b
    v2z = config.restitution * (g * t_b - vz)  # upward speed out of the bounce

    t_gp = _true_good_position(v2z, g, config.good_position_height)
    gp = (bx + vx * t_gp, by + vy * t_gp)

    # Receiver stance and movement by archetype.
    if archetype == "deep_returner":
        r0 = (rng.normal(0.0, 0.6), rng.uniform(10.5, 12.5))
        arrive = t_b + t_gp
        v_r = ((gp[0] - r0[0]) / arrive, (gp[1] - r0[1]) / arrive)
        speed = math.hypot(*v_r)
        if speed > config.receiver_speed_cap:
            scale = config.receiver_speed_cap / speed
            v_r = (v_r[0] * scale, v_r[1] * scale)
    else:
        side = 1.0 if rng.random() < 0.5 else -1.0
        r0 = (side * rng.uniform(2.5, 4.0), rng.uniform(8.0, 9.5))
        v_r = (0.0, 0.0)

    # Shooter drifts gently back toward the center line.
    v_s = (max(-1.5, min(1.5, -x0 / 3.0)), rng.uniform(-0.5, 0.5))

    impact_speed = math.sqrt(vx * vx + vy * vy + vz * vz)
    dist_gp = math.hypot(r0[0] - gp[0], r0[1] - gp[1])
    features = {
        "impact_speed": impact_speed,
        "dist_good_position": dist_gp,
        "bounce_y": by,
        "abs_bounce_x": abs(bx),
    }

    legal = (
        in_service_boxes((bx, by), geom)
        if shot_type == "serve"
        else in_bounds((bx, by), "singles_court", geom)
    )

    if is_volley:
        # Receiver takes the ball out of the air well before the bounce,
        # with clearance above the bounce-detection threshold.
        t_safe = (vz + math.sqrt(vz * vz + 2.0 * g * (z0 - 0.35))) / g
        t_end = min(0.7 * t_b, 0.98 * t_safe)
        p = _sigmoid(_rule_index(config.volley_rule, features))
        label = "win" if rng.random() < p else "in_play"
        bounce_time = None
    else:
        apex_t = v2z / g
        t_end = t_b + 1.3 * apex_t
        if not legal:
            p = 0.0
            label = "error"
        else:
            p = _sigmoid(_rule_index(config.rule, features))
            label = "win" if rng.random() < p else "in_play"
        bounce_time = t_b

    ts = _time_grid(t_end, config.rate_hz, insert=bounce_time)

    ball_x = x0 + vx * ts
    ball_y = y0 + vy * ts
    if is_volley:
        ball_z = z0 + vz * ts - 0.5 * g * ts * ts
    else:
        ball_z = np.where(
            ts <= t_b,
            z0 + vz * ts - 0.5 * g * ts * ts,
            v2z * (ts - t_b) - 0.5 * g * (ts - t_b) ** 2,
        )

    sx = x0 + v_s[0] * ts
    sy = y0 + v_s[1] * ts
    rx = r0[0] + v_r[0] * ts
    ry = r0[1] + v_r[1] * ts

    if config.noise_sd > 0:
        ball_x = ball_x + rng.normal(0.0, config.noise_sd, ts.shape)
        ball_y = ball_y + rng.normal(0.0, config.noise_sd, ts.shape)
        ball_z = ball_z + rng.normal(0.0, config.noise_sd, ts.shape)
        sx = sx + rng.normal(0.0, config.noise_sd, ts.shape)
        sy = sy + rng.normal(0.0, config.noise_sd, ts.shape)
        rx = rx + rng.normal(0.0, config.noise_sd, ts.shape)
        ry = ry + rng.normal(0.0, config.noise_sd, ts.shape)
    ball_z = np.maximum(ball_z, -0.04)

    flip = -1.0 if (config.random_orientation and rng.random() < 0.5) else 1.0

    samples = []
    for i, t in enumerate(ts):
        samples.append(
            TrackingSample("ball", float(t), float(ball_x[i]), float(flip * ball_y[i]), float(ball_z[i]))
        )
    for i, t in enumerate(ts):
        samples.append(TrackingSample("shooter", float(t), float(sx[i]), float(flip * sy[i])))
    for i, t in enumerate(ts):
        samples.append(TrackingSample("receiver", float(t), float(rx[i]), float(flip * ry[i])))

    shooter_id = _SHOOTER_POOL[rng.choice(len(_SHOOTER_POOL))]
    record = ShotRecord(
        shot_id=shot_id,
        shot_type=shot_type,
        bounce_flag="no_bounce" if is_volley else "one_bounce",
        samples=tuple(samples),
        shooter_meta=PlayerMeta(shooter_id, "left" if rng.random() < 0.25 else "right"),
        receiver_meta=PlayerMeta(archetype, "left" if rng.random() < 0.25 else "right"),
        outcome=OutcomeLabel(label),
    )
    truth = {
        "shot_type": shot_type,
        "launch": (x0, y0, z0, vx, vy, vz),
        "t_bounce": t_b,
        "v2z": v2z,
        "t_good_position": t_gp,
        "good_position": gp,
        "receiver_start": r0,
        "receiver_velocity": v_r,
        "features": features,
        "legal": legal,
        "is_volley": is_volley,
        "t_end": t_end,
        "flipped": flip < 0,
    }
    return SynthShot(
        record=record,
        true_p=p,
        true_bounce=(bx, by),
        archetype=archetype,
        truth=truth,
    )


def generate_corpus(config, n, seed):
    """Deterministic list of n SynthShot; per-shot RNG substreams."""
    if n < 1:
        raise ValueError("n must be >= 1")
    shots = []
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        shots.append(generate_shot(config, rng, f"s{i:06d}"))
    return shots


def true_win_prob(config, shot):
    """Re-evaluate the configured rule on the shot's ground-truth features.

    Out-of-bounds true bounces are worth zero by the error rule. Matches the
    probability used at generation time exactly.
    """
    if shot.truth["is_volley"]:
        return _sigmoid(_rule_index(config.volley_rule, shot.truth["features"]))
    if not shot.truth["legal"]:
        return 0.0
    return _sigmoid(_rule_index(config.rule, shot.truth["features"]))


def write_corpus(shots, tracking_stream, metadata_stream, sidecar_stream=None):
    """Emit the tracking/metadata CSV pair plus the ground-truth sidecar."""
    from .tracking import serialize_tracking

    serialize_tracking([s.record for s in shots], tracking_stream, metadata_stream)
    if sidecar_stream is not None:
        sidecar_stream.write("shot_id,true_p,true_bounce_x,true_bounce_y,archetype\n")
        for s in shots:
            sidecar_stream.write(
                f"{s.record.shot_id},{s.true_p!r},{s.true_bounce[0]!r},"
                f"{s.true_bounce[1]!r},{s.archetype}\n"
            )
