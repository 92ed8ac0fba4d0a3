"""Rebuild the benchmark CSVs under data/ from dataset packages on PyPI.

ODDS .mat files cannot be fetched from this environment, so the sets that
exist in their original UCI form inside PyPI packages are rebuilt here:

  breastw.csv    MASS::biopsy (rdatasets), rows with missing values dropped,
                 malignant = outlier. Matches ODDS BreastW (683 x 9, 239).
  pima.csv       KEEL/imbalanced_databases pima.dat, positive = outlier.
                 Matches ODDS Pima (768 x 8, 268).
  pendigits.csv  KEEL penbased.dat, first 7494 rows (close to, but not
                 exactly, the UCI training split), digit 0 downsampled to
                 156 points with a fixed seed. Follows the ODDS recipe; the
                 result is 6867 x 16 with 156 outliers versus ODDS 6870.

Usage:
    pip install rdatasets imbalanced-databases keel-ds
    python scripts/build_datasets.py [outdir]
"""

import csv
import sys
from importlib import resources
from pathlib import Path

import numpy as np


def _write(path: Path, header: list[str], rows: list[list[float]], labels: list[int]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header + ["label"])
        for row, lab in zip(rows, labels):
            w.writerow([_fmt(v) for v in row] + [lab])
    print(f"{path}: n={len(rows)} d={len(header)} o={sum(labels)}")


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _keel_rows(text: str) -> list[list[str]]:
    return [
        [c.strip() for c in line.split(",")]
        for line in text.splitlines()
        if line.strip() and not line.startswith("@")
    ]


def breastw(outdir: Path) -> None:
    import rdatasets

    df = rdatasets.data("MASS", "biopsy").dropna()
    cols = [f"V{i}" for i in range(1, 10)]
    rows = df[cols].astype(float).values.tolist()
    labels = (df["class"] == "malignant").astype(int).tolist()
    _write(outdir / "breastw.csv", cols, rows, labels)


def pima(outdir: Path) -> None:
    text = (resources.files("imbalanced_databases") / "data/pima/pima.dat").read_text()
    header = [
        line.split()[1]
        for line in text.splitlines()
        if line.startswith("@attribute") and "Class" not in line
    ]
    parsed = _keel_rows(text)
    rows = [[float(c) for c in r[:-1]] for r in parsed]
    labels = [int(r[-1] == "positive") for r in parsed]
    _write(outdir / "pima.csv", header, rows, labels)


def pendigits(outdir: Path, seed: int = 0) -> None:
    text = (resources.files("keel_ds") / "data/balanced/raw/penbased.dat").read_text()
    parsed = _keel_rows(text)[:7494]
    X = np.array([[float(c) for c in r[:-1]] for r in parsed])
    digit = np.array([int(r[-1]) for r in parsed])
    rng = np.random.default_rng(seed)
    zeros = np.flatnonzero(digit == 0)
    keep = np.sort(np.concatenate([np.flatnonzero(digit != 0), rng.choice(zeros, 156, replace=False)]))
    header = [f"A{i}" for i in range(1, 17)]
    _write(outdir / "pendigits.csv", header, X[keep].tolist(), (digit[keep] == 0).astype(int).tolist())


def main() -> None:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "data"
    outdir.mkdir(parents=True, exist_ok=True)
    breastw(outdir)
    pima(outdir)
    pendigits(outdir)


if __name__ == "__main__":
    main()
