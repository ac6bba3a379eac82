#!/usr/bin/env python3
"""Writes data/toy_intersection.csv: three vehicles crossing a 16 m box at the origin.

Track 1 turns left from the south approach, track 2 drives straight through from
the east, track 3 turns right from the south approach. Only 1 and 2 conflict.
"""
import csv
import math
import sys

DT = 0.1
SPEED = 5.0
HALF = 8.0
LANE = 1.75
LEAD = 30.0


def south_path(maneuver):
    """Centerline samples (x, y, heading) for the south approach, 0.5 m apart."""
    step = SPEED * DT
    pts = []
    s = 0.0
    arc = {"left": (HALF + LANE) * math.pi / 2, "right": (HALF - LANE) * math.pi / 2,
           "through": 2 * HALF}[maneuver]
    total = (LEAD - HALF) + arc + LEAD
    while s <= total + 1e-9:
        if s < LEAD - HALF:
            pts.append((LANE, -LEAD + s, math.pi / 2))
        elif s < LEAD - HALF + arc:
            u = s - (LEAD - HALF)
            if maneuver == "through":
                pts.append((LANE, -HALF + u, math.pi / 2))
            elif maneuver == "left":
                r = HALF + LANE
                phi = u / r
                pts.append((-HALF + r * math.cos(phi), -HALF + r * math.sin(phi),
                            math.pi / 2 + phi))
            else:
                r = HALF - LANE
                phi = u / r
                pts.append((HALF - r * math.cos(phi), -HALF + r * math.sin(phi),
                            math.pi / 2 - phi))
        else:
            u = s - (LEAD - HALF) - arc
            if maneuver == "through":
                pts.append((LANE, HALF + u, math.pi / 2))
            elif maneuver == "left":
                pts.append((-HALF - u, LANE, math.pi))
            else:
                pts.append((HALF + u, -LANE, 0.0))
        s += step
    return pts


def rotate(pts, quarter_turns):
    out = []
    for x, y, h in pts:
        for _ in range(quarter_turns):
            x, y = -y, x
        out.append((x, y, math.atan2(math.sin(h + quarter_turns * math.pi / 2),
                                     math.cos(h + quarter_turns * math.pi / 2))))
    return out


def main(path):
    tracks = [
        (1, 0, south_path("left")),
        (2, 30, rotate(south_path("through"), 1)),
        (3, 10, south_path("right")),
    ]
    rows = []
    for tid, first, pts in tracks:
        for k, (x, y, h) in enumerate(pts):
            frame = first + k
            rows.append((tid, frame, frame * 100, "car", x, y, SPEED * math.cos(h),
                         SPEED * math.sin(h), h, 4.5, 1.8))
    rows.sort(key=lambda r: (r[1], r[0]))
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["track_id", "frame_id", "timestamp_ms", "agent_type", "x", "y", "vx",
                    "vy", "psi_rad", "length", "width"])
        for r in rows:
            w.writerow([r[0], r[1], r[2], r[3]] + [f"{v:.6f}" for v in r[4:]])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/toy_intersection.csv")
