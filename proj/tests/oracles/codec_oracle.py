"""Hand quantization of fixture labels under both codec profiles.

    python3 tests/oracles/codec_oracle.py > tests/fixtures/codec_oracle.json
"""

import json
import math
import sys

W, H = 672.0, 672.0
TWO_PI = 2 * math.pi

RANGES = {
    "pretrain": dict(xh=(0, W), yh=(0, H), z=(-4, 5), w=(0, 15), h=(0, 15), l=(0, 15),
                     r1=(0, TWO_PI), r2=(0, TWO_PI), r3=(0, TWO_PI)),
    "finetune": dict(xh=(0, W), yh=(0, H), z=(0, 140), w=(0, 15), h=(0, 15), l=(0, 15),
                     r1=(0, TWO_PI), r2=(0, TWO_PI), r3=(0, TWO_PI)),
}
BOX_FIELDS = {"pretrain": ["xh", "yh", "z", "w", "h", "l", "r1", "r2", "r3"],
              "finetune": ["xh", "yh", "z", "w", "h", "l", "r1"]}


def q(profile, field, v):
    lo, hi = RANGES[profile][field]
    t = math.log(v) if (field == "z" and profile == "pretrain") else v
    return min(999, max(0, math.floor(999 * (t - lo) / (hi - lo) + 0.5)))


def render(bins):
    return "[" + ",".join("%03d" % b for b in bins) + "]"


LABELS = [
    dict(kind="point2d", value=[14.1, 350.5]),
    dict(kind="box2d", value=[0, 0, 672, 672]),
    dict(kind="box2d", value=[101.3, 57.9, 333.3, 290.0]),
    dict(kind="point3d", value=[336.0, 300.0, 12.5]),
    dict(kind="depth", value=1.0),
    dict(kind="depth", value=37.25),
    dict(kind="box3d", value=dict(xh=402.7, yh=351.2, z=18.4, w=1.9, h=1.6, l=4.4,
                                  r1=0.7, r2=0.05, r3=6.2)),
    dict(kind="box3d", value=dict(xh=12.0, yh=660.0, z=2.3, w=0.6, h=1.8, l=0.5,
                                  r1=3.14159, r2=0.0, r3=0.0)),
]


def fields(profile, lab):
    k, v = lab["kind"], lab["value"]
    if k == "point2d":
        return [("xh", v[0]), ("yh", v[1])]
    if k == "box2d":
        return [("xh", v[0]), ("yh", v[1]), ("xh", v[2]), ("yh", v[3])]
    if k == "point3d":
        return [("xh", v[0]), ("yh", v[1]), ("z", v[2])]
    if k == "depth":
        return [("z", v)]
    return [(f, v[f]) for f in BOX_FIELDS[profile]]


def main():
    out = []
    for lab in LABELS:
        entry = dict(lab)
        for profile in ("pretrain", "finetune"):
            bins = [q(profile, f, v) for f, v in fields(profile, lab)]
            entry[profile] = dict(bins=bins, text=render(bins))
        out.append(entry)
    json.dump(dict(image=[W, H], labels=out), sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
