#!/usr/bin/env python3
"""Writes the default beat table and fill chain into crates/core/data.

Run once; the JSON files are committed and may be edited by hand afterwards.
"""
import json
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "data"


def groups(n, unit):
    if unit == 4:
        # pairs of quarters, a trailing three for odd counts
        parts = [2] * (n // 2)
        if n % 2:
            if parts:
                parts[-1] = 3
            else:
                parts = [n]
        return parts
    parts = {2: [2], 3: [3], 4: [2, 2], 5: [3, 2], 6: [3, 3],
             7: [2, 2, 3], 8: [3, 3, 2], 9: [3, 3, 3]}[n]
    return parts


def quarter_row(n):
    kick, snare = [], []
    for g, size in enumerate(groups(n, 4)):
        kick.append(0.95 if g == 0 else 0.8)
        snare.append(0.05)
        kick.append(0.1 if g == 0 else 0.15)
        snare.append(0.95)
        if size == 3:
            kick.append(0.2)
            snare.append(0.3)
    return kick, snare


def eighth_row(n):
    kick, snare = [], []
    for g, size in enumerate(groups(n, 8)):
        if g % 2 == 0:
            kick.append(0.95 if g == 0 else 0.85)
            snare.append(0.05)
        else:
            kick.append(0.15)
            snare.append(0.9)
        for _ in range(size - 1):
            kick.append(0.15)
            snare.append(0.05)
    return kick, snare


def beat_table():
    entries = []
    for unit in (4, 8):
        for beats in range(2, 10):
            kick, snare = (quarter_row if unit == 4 else eighth_row)(beats)
            assert len(kick) == beats == len(snare)
            entries.append({"beats": beats, "unit": unit, "kick": kick, "snare": snare})
    return {"version": 1, "entries": entries}


def state_name(i):
    return "".join("1" if i >> b & 1 else "0" for b in range(5))


def fill_chain():
    rows = []
    for s in range(32):
        top = max((b for b in range(5) if s >> b & 1), default=None)
        w = []
        for t in range(32):
            bits = [b for b in range(5) if t >> b & 1]
            if not bits:
                weight = 0.6
            elif len(bits) == 1:
                b = bits[0]
                if top is None:
                    weight = 1.0 + 0.5 * b
                elif b == top - 1:
                    weight = 4.0
                elif b == top:
                    weight = 2.0
                elif b < top:
                    weight = 1.0
                else:
                    weight = 0.3
            elif len(bits) == 2:
                weight = 0.15
            else:
                weight = 0.02
            w.append(weight)
        total = sum(w)
        row = [x / total for x in w]
        row[-1] = 1.0 - sum(row[:-1])
        rows.append(row)
    start = [0.0] * 32
    for b in range(5):
        start[1 << b] = 1.0 + b
    total = sum(start)
    start = [x / total for x in start]
    return {
        "version": 1,
        "states": [state_name(i) for i in range(32)],
        "start": start,
        "matrix": rows,
    }


def main():
    for name, doc in (("beat_table.json", beat_table()), ("fill_chain.json", fill_chain())):
        (DATA / name).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main()
