#!/usr/bin/env python3
"""Writes configs/paper_sec6.cfg: the six-terminal MTDC test grid with
IEEE 14-bus swing-equation areas.

MTDC lines, capacitances and controller gains are the published values.
The AC area data are illustrative defaults (the published machine-level
parameters are not available): IEEE 14-bus topology, line weight 1/x at
flat voltage, inertia 2H on generator buses and 1.0 on load buses.
"""

import argparse
import json
from pathlib import Path

# (from, to, R, L, C), 0-based MTDC nodes
MTDC_LINES = [
    (0, 1, 0.0586, 0.2560e-3, 0.0085),
    (0, 2, 0.0586, 0.2560e-3, 0.0085),
    (1, 2, 0.0878, 0.3840e-3, 0.0127),
    (1, 3, 0.0586, 0.2560e-3, 0.0085),
    (1, 4, 0.0732, 0.3200e-3, 0.0106),
    (1, 5, 0.1464, 0.6400e-3, 0.0212),
    (2, 3, 0.0586, 0.2560e-3, 0.0085),
    (2, 4, 0.1464, 0.6400e-3, 0.0212),
    (3, 4, 0.0732, 0.3200e-3, 0.0106),
    (4, 5, 0.1464, 0.6400e-3, 0.0212),
]
CAP = 0.375e-3
ETA_PATH = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]

# IEEE 14-bus branches (1-based) with series reactance
IEEE14 = [
    (1, 2, 0.05917), (1, 5, 0.22304), (2, 3, 0.19797), (2, 4, 0.17632),
    (2, 5, 0.17388), (3, 4, 0.17103), (4, 5, 0.04211), (4, 7, 0.20912),
    (4, 9, 0.55618), (5, 6, 0.25202), (6, 11, 0.19890), (6, 12, 0.25581),
    (6, 13, 0.13027), (7, 8, 0.17615), (7, 9, 0.11001), (9, 10, 0.08450),
    (9, 14, 0.27038), (10, 11, 0.19207), (12, 13, 0.19988), (13, 14, 0.34802),
]
INERTIA = {1: 10.296, 2: 13.08, 3: 10.12, 6: 10.12, 8: 10.12}
CONVERTER_BUS = [1, 2, 4, 1, 5, 3]  # per area, 1-based IEEE numbering

K_OMEGA, K_V, K_DROOP, K_DROOP_I = 1501.0, 80.0, 9.0, 3.35


def area(converter_bus):
    order = [converter_bus] + [b for b in range(1, 15) if b != converter_bus]
    pos = {b: i for i, b in enumerate(order)}
    gens = [{"inertia": INERTIA.get(b, 1.0), "k_droop": K_DROOP, "k_droop_i": K_DROOP_I} for b in order]
    lines = [{"i": pos[a], "j": pos[b], "k": 1.0 / x} for a, b, x in IEEE14]
    return {"converter_bus": 0, "generators": gens, "ac_lines": lines}


def build():
    r = {(i, j): R for i, j, R, _, _ in MTDC_LINES}
    return {
        "plant": "resistive",
        "mtdc": {
            "v_nom": 1.0,
            "nodes": [{"cap": CAP, "v_ref": 1.0} for _ in range(6)],
            "lines": [{"i": i, "j": j, "r": R, "l": L, "c": C, "segments": 1} for i, j, R, L, C in MTDC_LINES],
        },
        "areas": [area(b) for b in CONVERTER_BUS],
        "controller": {
            "variant": "dist_gen_dist_conv",
            "k_omega": [K_OMEGA] * 6,
            "k_v": [K_V] * 6,
            "gamma": 0.0,
            "omega_ref": 1.0,
            # eta: dashed communication path, weight 5/R on the parallel MTDC line
            "comm_eta": [{"i": i, "j": j, "w": 5.0 / r[(i, j)]} for i, j in ETA_PATH],
            # phi: every MTDC line, weight 15/R, so L_phi = 15 L_R
            "comm_phi": [{"i": i, "j": j, "w": 15.0 / R} for i, j, R, _, _ in MTDC_LINES],
        },
        "scenario": {
            "t_end": 45.0,
            "dt": 1e-3,
            "mode": "linear",
            "integrator": "exact_zoh",
            "record_every": 10,
            "disturbances": [{"time": 1.0, "area": 0, "bus": 1, "magnitude": -0.2}],
        },
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "configs" / "paper_sec6.cfg"))
    args = ap.parse_args()
    Path(args.out).write_text(json.dumps(build(), indent=2) + "\n")


if __name__ == "__main__":
    main()
