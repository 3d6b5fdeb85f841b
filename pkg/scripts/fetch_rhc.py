"""Download the public RHC study file and write the analytic CSV used by the tests.

The source file (5735 rows) codes its variables as text.  This script keeps
the seven columns the analyses use and recodes them to numbers:

    death_d30  dth30 == "Yes"
    rhc        swang1 == "RHC"
    gender     sex == "Male"
    age        age
    edu        edu (years)
    race       white 0, black 1, other 2
    carcinoma  ca: No 0, Yes 1, Metastatic 2

Usage::

    python scripts/fetch_rhc.py                    # writes tests/data/rhc.csv
    python scripts/fetch_rhc.py --source rhc.csv   # recode a local copy
"""

import argparse
from pathlib import Path

import pandas as pd

DEFAULT_SOURCE = "https://hbiostat.org/data/repo/rhc.csv"
DEFAULT_OUTPUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "rhc.csv"

RACE = {"white": 0, "black": 1, "other": 2}
CANCER = {"No": 0, "Yes": 1, "Metastatic": 2}


def recode(raw: pd.DataFrame) -> pd.DataFrame:
    out = pd.DataFrame({
        "death_d30": (raw["dth30"] == "Yes").astype(int),
        "rhc": (raw["swang1"] == "RHC").astype(int),
        "gender": (raw["sex"] == "Male").astype(int),
        "age": raw["age"].astype(float),
        "edu": raw["edu"].astype(float),
        "race": raw["race"].map(RACE),
        "carcinoma": raw["ca"].map(CANCER),
    })
    unmapped = out[["race", "carcinoma"]].isna().any()
    if unmapped.any():
        raise SystemExit(f"unexpected category labels in {list(unmapped[unmapped].index)}")
    return out.astype({"race": int, "carcinoma": int})


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--source", default=DEFAULT_SOURCE, help="URL or path of the raw rhc.csv")
    parser.add_argument("--output", type=Path, default=DEFAULT_OUTPUT)
    args = parser.parse_args(argv)

    table = recode(pd.read_csv(args.source))
    args.output.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(args.output, index=False)
    treated = int(table["rhc"].sum())
    print(f"wrote {args.output}: {len(table)} rows, {treated} treated, {len(table) - treated} controls")


if __name__ == "__main__":
    main()
