#!/usr/bin/env python3
"""Download the ten benchmark datasets from OpenML as CSV.

Needs network access and scikit-learn. The label column is written as
"class". Inject errors afterwards with `priorclean inject`.

    python3 tools/fetch_openml.py --out data/openml
"""
import argparse
import pathlib

DATASETS = [
    ("hepatitis", 55),
    ("heart_statlog", 53),
    ("ionosphere", 59),
    ("blood_transfusion", 1464),
    ("diabetes", 37),
    ("credit_g", 31),
    ("kr_vs_kp", 3),
    ("phoneme", 1489),
    ("adult", 1590),
    ("bank_marketing", 1461),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/openml")
    ap.add_argument("--list", action="store_true", help="print ids and exit")
    args = ap.parse_args()
    if args.list:
        for name, did in DATASETS:
            print(f"{did}\t{name}")
        return
    from sklearn.datasets import fetch_openml

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, did in DATASETS:
        bunch = fetch_openml(data_id=did, as_frame=True, parser="auto")
        frame = bunch.frame.rename(columns={bunch.target.name: "class"})
        frame.to_csv(out / f"{name}.csv", index=False)
        print(f"{name}: {len(frame)} rows")


if __name__ == "__main__":
    main()
