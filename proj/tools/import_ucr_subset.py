#!/usr/bin/env python3
"""Extract the UCR datasets bundled in an aeon wheel into UCR-2018 tsv layout.

Usage:
    pip download aeon==1.3.0 --no-deps -d /tmp/aeon
    python3 tools/import_ucr_subset.py /tmp/aeon/aeon-1.3.0-py3-none-any.whl data/ucr

Writes <out>/<Name>/<Name>_TRAIN.tsv and <Name>_TEST.tsv (label first, then
tab-separated values, "NaN" for missing).
"""
import sys
import zipfile
from pathlib import Path

# (name inside the wheel, name written to the archive)
DATASETS = [
    ("ArrowHead", "ArrowHead", "ArrowHead"),
    ("GunPoint", "GunPoint", "GunPoint"),
    ("ItalyPowerDemand", "ItalyPowerDemand", "ItalyPowerDemand"),
    ("OSULeaf", "OSULeaf", "OSULeaf"),
    ("PickupGestureWiimoteZ", "PickupGestureWiimoteZ_eq", "PickupGestureWiimoteZEq"),
]


def convert(text):
    rows = []
    in_data = False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not in_data:
            if line.lower() == "@data":
                in_data = True
            continue
        *values, label = line.split(":")
        if len(values) != 1:
            raise ValueError("multivariate record: " + line[:40])
        fields = ["NaN" if v in ("?", "NaN") else v for v in values[0].split(",")]
        rows.append(label + "\t" + "\t".join(fields))
    return "\n".join(rows) + "\n"


def main():
    wheel, out = sys.argv[1], Path(sys.argv[2])
    z = zipfile.ZipFile(wheel)
    for folder, stem, name in DATASETS:
        (out / name).mkdir(parents=True, exist_ok=True)
        for split in ("TRAIN", "TEST"):
            src = f"aeon/datasets/data/{folder}/{stem}_{split}.ts"
            dst = out / name / f"{name}_{split}.tsv"
            dst.write_text(convert(z.read(src).decode()))
            print(dst)


if __name__ == "__main__":
    main()
