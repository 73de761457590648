#!/usr/bin/env python3
"""Convert a CSV/TSV/JSONL annotation file into the dataset JSONL the toolkit reads.

One-shot helper for third-party layouts (ConMeC release, ReLocaR, SemEval,
hand-made lists). Column names are given on the command line; labels are
normalized to metonymic / non-metonymic.

    python3 scripts/to_jsonl.py conmec.csv data/conmec.jsonl \
        --sentence text --target noun --label label --category category

Rows whose target does not occur in the sentence are reported and dropped.
"""

import argparse
import csv
import json
import re
import sys

METONYMIC = {"metonymic", "met", "metonymy", "1", "yes", "y", "true", "m"}
LITERAL = {"non-metonymic", "nonmetonymic", "literal", "lit", "0", "no", "n", "false", "l"}
CATEGORIES = {"container", "producer", "product", "location", "causer", "possessed"}


def rows(path, delimiter):
    if path.endswith(".jsonl"):
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    yield json.loads(line)
        return
    if delimiter is None:
        delimiter = "\t" if path.endswith((".tsv", ".tab")) else ","
    with open(path, encoding="utf-8", newline="") as f:
        yield from csv.DictReader(f, delimiter=delimiter)


def label(value):
    if value is None or str(value).strip() == "":
        return None
    v = str(value).strip().lower()
    if v in METONYMIC:
        return "metonymic"
    if v in LITERAL:
        return "non-metonymic"
    raise ValueError(f"unknown label {value!r}")


def occurs(target, sentence):
    pattern = r"(?<![A-Za-z-])" + re.escape(target) + r"(?![A-Za-z-])"
    return re.search(pattern, sentence, re.IGNORECASE) is not None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input")
    ap.add_argument("output")
    ap.add_argument("--id", help="id column; row numbers are used when absent")
    ap.add_argument("--sentence", required=True)
    ap.add_argument("--target", required=True)
    ap.add_argument("--label")
    ap.add_argument("--category", help="category column")
    ap.add_argument("--fixed-category", choices=sorted(CATEGORIES), help="same category for every row")
    ap.add_argument("--occurrence", help="0-based occurrence column for repeated targets")
    ap.add_argument("--before", help="preceding-context column")
    ap.add_argument("--after", help="following-context column")
    ap.add_argument("--prefix", default="", help="prepended to every id")
    ap.add_argument("--delimiter")
    a = ap.parse_args()

    kept = dropped = 0
    seen = set()
    with open(a.output, "w", encoding="utf-8") as out:
        for n, r in enumerate(rows(a.input, a.delimiter), start=1):
            sentence, target = r[a.sentence].strip(), r[a.target].strip()
            if not occurs(target, sentence):
                print(f"row {n}: target {target!r} not in sentence, dropped", file=sys.stderr)
                dropped += 1
                continue
            rid = a.prefix + (str(r[a.id]) if a.id else str(n))
            if rid in seen:
                sys.exit(f"row {n}: duplicate id {rid!r}")
            seen.add(rid)
            category = a.fixed_category or (r[a.category].strip().lower() if a.category and r.get(a.category) else None)
            if category is not None and category not in CATEGORIES:
                sys.exit(f"row {n}: unknown category {category!r}")
            obj = {"id": rid, "sentence": sentence, "target": target, "category": category,
                   "label": label(r.get(a.label)) if a.label else None}
            if a.occurrence and str(r.get(a.occurrence, "")).strip():
                obj["target_index"] = int(r[a.occurrence])
            for key, col in (("context_before", a.before), ("context_after", a.after)):
                if col and r.get(col):
                    obj[key] = r[col]
            out.write(json.dumps(obj, ensure_ascii=False) + "\n")
            kept += 1
    print(f"{kept} rows written, {dropped} dropped", file=sys.stderr)


if __name__ == "__main__":
    main()
