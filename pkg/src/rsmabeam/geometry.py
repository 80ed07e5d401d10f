"""Beam layout and user drop for a GEO satellite service area.

Angular positions live in a flat chart: (x, y) offsets in degrees from the
sub-satellite (nadir) direction as seen from the satellite. Beam spacing is
defined in this chart, where the hexagonal geometry is exact; off-axis
angles and slant ranges are computed with full 3D spherical-Earth
trigonometry from the chart directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario

EARTH_RADIUS_M = 6371e3


@dataclass
class BeamLayout:
    centers_deg: np.ndarray   # (M, 2) chart offsets of the beam boresights
    spacing_deg: float        # nominal inter-beam spacing in the chart


@dataclass
class UserDrop:
    positions_deg: np.ndarray  # (K, 2) chart offsets
    distance_m: np.ndarray     # (K,) slant range to the satellite
    offaxis_deg: np.ndarray    # (K, Nt) angle between user and each boresight
    group_of: np.ndarray       # (K,) serving group == serving beam index


def hex_layout(s: Scenario) -> BeamLayout:
    """Beam boresights with chart spacing sqrt(3)*phi_3dB (adjacent beams
    cross near their 3 dB contour). M=1 is nadir only; M=7 is the canonical
    center-plus-ring pattern; other M fall back to a single ring sized so
    neighbours keep the same spacing."""
    m = s.n_groups
    spacing = np.sqrt(3.0) * s.angle_3db_deg
    if m == 1:
        centers = np.zeros((1, 2))
    elif m == 7:
        az = np.deg2rad(60.0 * np.arange(6))
        ring = spacing * np.column_stack([np.cos(az), np.sin(az)])
        centers = np.vstack([np.zeros((1, 2)), ring])
    else:
        radius = spacing / (2.0 * np.sin(np.pi / m))
        az = 2.0 * np.pi * np.arange(m) / m
        centers = radius * np.column_stack([np.cos(az), np.sin(az)])
    return BeamLayout(centers_deg=centers, spacing_deg=spacing)


def chart_separations(layout: BeamLayout) -> np.ndarray:
    """Pairwise chart distances between beam centers (degrees)."""
    d = layout.centers_deg[:, None, :] - layout.centers_deg[None, :, :]
    return np.hypot(d[..., 0], d[..., 1])


def _directions(chart_deg: np.ndarray) -> np.ndarray:
    """Unit direction vectors (from the satellite) for chart offsets.

    Nadir is -z; a chart point at polar radius alpha and azimuth t maps to a
    direction tilted by alpha toward azimuth t.
    """
    pts = np.atleast_2d(chart_deg)
    alpha = np.deg2rad(np.hypot(pts[:, 0], pts[:, 1]))
    azim = np.arctan2(pts[:, 1], pts[:, 0])
    sin_a = np.sin(alpha)
    return np.column_stack(
        [sin_a * np.cos(azim), sin_a * np.sin(azim), -np.cos(alpha)]
    )


def _slant_range(chart_deg: np.ndarray, altitude_m: float) -> np.ndarray:
    """Distance from the satellite to the Earth-surface point seen along each
    chart direction (near intersection of the ray with the sphere)."""
    dirs = _directions(chart_deg)
    r_sat = EARTH_RADIUS_M + altitude_m
    # |S + t*u| = R_E with S = (0,0,r_sat): t^2 + 2 t (S.u) + r_sat^2 - R_E^2 = 0
    su = r_sat * dirs[:, 2]
    disc = su * su - (r_sat * r_sat - EARTH_RADIUS_M * EARTH_RADIUS_M)
    if np.any(disc < 0):
        raise ValueError("chart direction misses the Earth disk")
    return -su - np.sqrt(disc)


def offaxis_matrix(chart_deg: np.ndarray, layout: BeamLayout) -> np.ndarray:
    """True angles (degrees) between each user direction and each boresight."""
    u = _directions(chart_deg)
    b = _directions(layout.centers_deg)
    cosang = np.clip(u @ b.T, -1.0, 1.0)
    return np.rad2deg(np.arccos(cosang))


def drop_users(s: Scenario, layout: BeamLayout, rng: np.random.Generator,
               max_tries: int = 10_000) -> UserDrop:
    """Place each user uniformly inside its serving beam's cell: the 3 dB disk
    around the boresight intersected with the beam's Voronoi region, so the
    serving beam is always the closest one."""
    group_of = np.asarray(s.group_map, dtype=int)
    centers = layout.centers_deg
    positions = np.empty((len(group_of), 2))
    for k, m in enumerate(group_of):
        for _ in range(max_tries):
            r = s.angle_3db_deg * np.sqrt(rng.uniform())
            t = rng.uniform(0.0, 2.0 * np.pi)
            cand = centers[m] + r * np.array([np.cos(t), np.sin(t)])
            off = offaxis_matrix(cand[None, :], layout)[0]
            if off[m] <= off.min() + 1e-15:
                positions[k] = cand
                break
        else:
            raise RuntimeError(f"could not place user {k} inside beam {m}'s cell")
    return UserDrop(
        positions_deg=positions,
        distance_m=_slant_range(positions, s.altitude_m),
        offaxis_deg=offaxis_matrix(positions, layout),
        group_of=group_of,
    )


# ---------------------------------------------------------------------------
# text export so a fixed geometry can be replayed across sweeps


def drop_to_text(drop: UserDrop) -> str:
    k, nt = drop.offaxis_deg.shape
    lines = ["# rsmabeam user drop", f"n_users = {k}", f"n_beams = {nt}"]
    for i in range(k):
        vals = [
            str(int(drop.group_of[i])),
            repr(float(drop.positions_deg[i, 0])),
            repr(float(drop.positions_deg[i, 1])),
            repr(float(drop.distance_m[i])),
        ] + [repr(float(v)) for v in drop.offaxis_deg[i]]
        lines.append(f"user{i} = " + ",".join(vals))
    return "\n".join(lines) + "\n"


def drop_from_text(text: str) -> UserDrop:
    header: dict[str, int] = {}
    rows: dict[int, list[str]] = {}
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key in ("n_users", "n_beams"):
            header[key] = int(raw)
        elif key.startswith("user"):
            rows[int(key[4:])] = raw.split(",")
        else:
            raise ValueError(f"unknown key '{key}' in user-drop text")
    k, nt = header["n_users"], header["n_beams"]
    group_of = np.empty(k, dtype=int)
    positions = np.empty((k, 2))
    distance = np.empty(k)
    offaxis = np.empty((k, nt))
    for i in range(k):
        vals = rows[i]
        group_of[i] = int(vals[0])
        positions[i] = [float(vals[1]), float(vals[2])]
        distance[i] = float(vals[3])
        offaxis[i] = [float(v) for v in vals[4:4 + nt]]
    return UserDrop(positions, distance, offaxis, group_of)


def save_drop(drop: UserDrop, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(drop_to_text(drop))


def load_drop(path) -> UserDrop:
    with open(path, "r", encoding="utf-8") as fh:
        return drop_from_text(fh.read())
