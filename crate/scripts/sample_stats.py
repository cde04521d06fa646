#!/usr/bin/env python3
"""Count the bundled sample independently and write the expected stats JSON.

Usage: scripts/sample_stats.py [sample.csv] [out.json]
"""
import csv
import json
import sys
import unicodedata
from collections import Counter
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
src = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "crates/core/data/sample.csv"
dst = Path(sys.argv[2]) if len(sys.argv) > 2 else ROOT / "crates/core/data/sample_expected_stats.json"

rows = []
with open(src, encoding="utf-8", newline="") as f:
    for row in csv.DictReader(f):
        fa = unicodedata.normalize("NFC", row["persian"].strip())
        en = unicodedata.normalize("NFC", row["latin"].strip().lower())
        rows.append((fa, en, row["gender"].strip().lower()))

total = len(rows)
male = sum(1 for r in rows if r[2] == "male")


def ranked(counter):
    items = sorted(counter.items(), key=lambda kv: (-kv[1], ord(kv[0])))
    return [{"char": ch, "count": n} for ch, n in items]


def freq(gender, col):
    c = Counter()
    for r in rows:
        if r[2] == gender:
            c.update(r[col])
    return ranked(c)


def hist(col):
    h = Counter(len(r[col]) for r in rows)
    return {str(k): h[k] for k in sorted(h)}


stats = {
    "total": total,
    "male": male,
    "female": total - male,
    "male_fraction": male / total,
    "female_fraction": (total - male) / total,
    "persian_length_histogram": hist(0),
    "latin_length_histogram": hist(1),
    "persian_length_mean": sum(len(r[0]) for r in rows) / total,
    "latin_length_mean": sum(len(r[1]) for r in rows) / total,
    "char_frequency": {
        g: {"persian": freq(g, 0), "latin": freq(g, 1)} for g in ("male", "female")
    },
}

dst.write_text(json.dumps(stats, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
print(f"wrote {dst} ({total} records)")
