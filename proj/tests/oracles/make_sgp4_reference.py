#!/usr/bin/env python3
"""Freeze reference SGP4 states for the near-Earth part of the published
verification set. Uses the python-sgp4 package (Vallado's implementation,
WGS-72, improved mode) as an implementation independent of ours.

    python3 make_sgp4_reference.py <SGP4-VER.TLE> <out-dir>
"""
import math
import os
import sys

from sgp4.api import Satrec, WGS72

MIN_PER_DAY = 1440.0


def main(src, out_dir):
    lines = [l.rstrip("\n") for l in open(src) if l[:1] in "12"]
    tle_out = open(os.path.join(out_dir, "sgp4_verification.tle"), "w")
    csv_out = open(os.path.join(out_dir, "sgp4_verification.csv"), "w")
    csv_out.write("norad_id,tsince_min,error,rx,ry,rz,vx,vy,vz\n")
    seen = set()
    for l1, l2 in zip(lines[0::2], lines[1::2]):
        line1, line2 = l1[:69], l2[:69]
        norad = int(line1[2:7])
        n_rev_day = float(line2[52:63])
        if MIN_PER_DAY / n_rev_day >= 225.0 or norad in seen:
            continue
        seen.add(norad)
        start, stop, step = (float(x) for x in l2[69:].split())
        sat = Satrec.twoline2rv(line1, line2, WGS72)
        tle_out.write(line1 + "\n" + line2 + "\n")
        times = [0.0, 360.0, 720.0, 1440.0]
        t = start
        while t <= stop + 1e-9:
            times.append(t)
            t += step
        for t in sorted(set(times)):
            e, r, v = sat.sgp4_tsince(t)
            if e != 0:
                csv_out.write(f"{norad},{t!r},{e},,,,,,\n")
                continue
            vals = ",".join(repr(x) for x in (*r, *v))
            csv_out.write(f"{norad},{t!r},0,{vals}\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
