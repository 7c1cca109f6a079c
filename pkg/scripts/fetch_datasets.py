#!/usr/bin/env python3
"""Download the benchmark datasets from the UCI repository into data/.

iris ships with the repo; this script fetches the other five and
normalizes each to a headered CSV with a trailing "label" column, the
format the bench command and the acceptance suite expect. Needs network
access; run it once on a connected machine and copy data/ over if the
test environment is offline.
"""

import csv
import sys
import urllib.request
from pathlib import Path

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def fetch(url: str) -> bytes:
    print(f"  {url}")
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read()


def write_rows(name: str, header: list[str], rows: list[list[str]]) -> None:
    out = DATA_DIR / f"{name}.csv"
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"  wrote {out} ({len(rows)} rows)")


def banknote() -> None:
    raw = fetch(f"{UCI}/00267/data_banknote_authentication.txt").decode()
    rows = [line.split(",") for line in raw.strip().splitlines()]
    write_rows("banknote", ["variance", "skewness", "curtosis", "entropy", "label"], rows)


def haberman() -> None:
    raw = fetch(f"{UCI}/haberman/haberman.data").decode()
    rows = [line.split(",") for line in raw.strip().splitlines()]
    write_rows("haberman", ["age", "year", "nodes", "label"], rows)


def pima() -> None:
    # UCI retired the original page; this mirror carries the canonical file
    url = "https://raw.githubusercontent.com/jbrownlee/Datasets/master/pima-indians-diabetes.csv"
    raw = fetch(url).decode()
    rows = [line.split(",") for line in raw.strip().splitlines()]
    header = ["pregnancies", "glucose", "pressure", "triceps", "insulin",
              "bmi", "pedigree", "age", "label"]
    write_rows("pima", header, rows)


def balance() -> None:
    raw = fetch(f"{UCI}/balance-scale/balance-scale.data").decode()
    rows = []
    for line in raw.strip().splitlines():
        vals = line.split(",")
        rows.append(vals[1:] + [vals[0]])  # class is the first column upstream
    write_rows("balance", ["left_weight", "left_distance", "right_weight",
                           "right_distance", "label"], rows)


def hayes_roth() -> None:
    raw = fetch(f"{UCI}/hayes-roth/hayes-roth.data").decode()
    rows = []
    for line in raw.strip().splitlines():
        vals = line.split(",")
        rows.append(vals[1:5] + [vals[5]])  # drop the name column, class is last
    write_rows("hayes-roth", ["hobby", "age", "education", "marital", "label"], rows)


def main() -> int:
    DATA_DIR.mkdir(exist_ok=True)
    jobs = {"banknote": banknote, "haberman": haberman, "pima": pima,
            "balance": balance, "hayes-roth": hayes_roth}
    failed = []
    for name, job in jobs.items():
        print(f"fetching {name} ...")
        try:
            job()
        except Exception as exc:
            failed.append(name)
            print(f"  FAILED: {exc}", file=sys.stderr)
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    print("all datasets fetched")
    return 0


if __name__ == "__main__":
    sys.exit(main())
