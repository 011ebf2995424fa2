"""Shared test utilities: independent oracles and corpus builders."""

import numpy as np

from shotvalue.tracking import (
    OutcomeLabel,
    PlayerMeta,
    ShotRecord,
    TrackingSample,
)


def adjusted_rand_index(labels_true, labels_pred):
    """ARI from the contingency table (independent of any fit internals)."""
    labels_true = np.asarray(labels_true)
    labels_pred = np.asarray(labels_pred)
    t_vals = np.unique(labels_true)
    p_vals = np.unique(labels_pred)
    cont = np.array(
        [[np.sum((labels_true == a) & (labels_pred == b)) for b in p_vals] for a in t_vals]
    )

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(cont).sum()
    ai = comb2(cont.sum(axis=1)).sum()
    bj = comb2(cont.sum(axis=0)).sum()
    expected = ai * bj / comb2(cont.sum())
    return float((sum_ij - expected) / (0.5 * (ai + bj) - expected))


def make_ball_samples(ts, xs, ys, zs):
    return tuple(
        TrackingSample("ball", float(t), float(x), float(y), float(z))
        for t, x, y, z in zip(ts, xs, ys, zs)
    )


def make_player_samples(entity, ts, xs, ys):
    return tuple(
        TrackingSample(entity, float(t), float(x), float(y)) for t, x, y in zip(ts, xs, ys)
    )


def ballistic_record(
    shot_id="t000",
    shot_type="rally",
    x0=0.0,
    y0=-8.0,
    z0=1.0,
    vx=1.0,
    vy=18.0,
    vz=3.0,
    g=9.81,
    restitution=0.75,
    rate=100.0,
    shooter_v=(0.2, 0.0),
    receiver_start=(0.5, 10.0),
    receiver_v=(0.0, 0.0),
    outcome="in_play",
):
    """Noiseless one-bounce record from closed-form projectile physics.

    Returns (record, truth dict). The bounce instant is included in the
    sample grid so detection is exact.
    """
    t_b = (vz + np.sqrt(vz * vz + 2 * g * z0)) / g
    v2z = restitution * (g * t_b - vz)
    t_end = t_b + 1.3 * v2z / g
    dt = 1.0 / rate
    ts = np.arange(0.0, t_end, dt)
    ts = np.sort(np.unique(np.concatenate([ts, [t_b, t_end]])))
    bx = x0 + vx * ts
    by = y0 + vy * ts
    bz = np.where(
        ts <= t_b,
        z0 + vz * ts - 0.5 * g * ts**2,
        v2z * (ts - t_b) - 0.5 * g * (ts - t_b) ** 2,
    )
    bz = np.maximum(bz, 0.0)
    samples = list(make_ball_samples(ts, bx, by, bz))
    samples += list(
        make_player_samples("shooter", ts, x0 + shooter_v[0] * ts, y0 + shooter_v[1] * ts)
    )
    samples += list(
        make_player_samples(
            "receiver",
            ts,
            receiver_start[0] + receiver_v[0] * ts,
            receiver_start[1] + receiver_v[1] * ts,
        )
    )
    record = ShotRecord(
        shot_id=shot_id,
        shot_type=shot_type,
        bounce_flag="one_bounce",
        samples=tuple(samples),
        shooter_meta=PlayerMeta("sh1", "right"),
        receiver_meta=PlayerMeta("rc1", "right"),
        outcome=OutcomeLabel(outcome),
    )
    truth = {
        "t_bounce": float(t_b),
        "bounce": (float(x0 + vx * t_b), float(y0 + vy * t_b)),
        "v2z": float(v2z),
        "launch": (x0, y0, z0, vx, vy, vz),
        "t_end": float(ts[-1]),
    }
    return record, truth


def random_spd(rng, d, scale=1.0):
    a = rng.standard_normal((d, d))
    return scale * (a @ a.T + d * np.eye(d))
