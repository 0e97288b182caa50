"""Fixed corpus of small pointed metric spaces (at most 4 points).

``tests/data/corpus.json`` is the frozen copy used by the tests; running this
file regenerates it from the same seed.
"""

from __future__ import annotations

import json
import random
from fractions import Fraction
from pathlib import Path

from lipfree.metric import PointedMetricSpace, validate

DATA = Path(__file__).parent / "data" / "corpus.json"


def _closure(d):
    n = len(d)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return d


def _named():
    yield "two", [[0, 1], [1, 0]]
    yield "two-third", [[0, Fraction(1, 3)], [Fraction(1, 3), 0]]
    yield "segment3", [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    yield "equilateral3", [[0, 1, 1], [1, 0, 1], [1, 1, 0]]
    yield "isosceles3", [[0, 2, 2], [2, 0, 1], [2, 1, 0]]
    yield "path4", [[0, 1, 2, 3], [1, 0, 1, 2], [2, 1, 0, 1], [3, 2, 1, 0]]
    yield "star4", [[0, 1, 1, 1], [1, 0, 2, 2], [1, 2, 0, 2], [1, 2, 2, 0]]
    yield "equilateral4", [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]]
    yield "square4", [[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]]
    yield "ultra4", [[0, 1, 2, 2], [1, 0, 2, 2], [2, 2, 0, 1], [2, 2, 1, 0]]
    yield "m0", [[0, 1, 2], [1, 0, 1], [2, 1, 0]]


def generate(count: int = 60, seed: int = 20240601) -> list[tuple[str, PointedMetricSpace]]:
    out = []
    for name, rows in _named():
        out.append((name, validate(rows)))
    rng = random.Random(seed)
    while len(out) < count:
        n = rng.randint(2, 4)
        d = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                d[i][j] = d[j][i] = Fraction(rng.randint(1, 12), rng.randint(1, 6))
        _closure(d)
        base = rng.randrange(n)
        out.append((f"random{len(out)}", validate(d, base=base)))
    return out


def write(path: Path = DATA) -> None:
    lines = [json.dumps({"name": name, "space": sp.to_doc()}, sort_keys=True) for name, sp in generate()]
    path.write_text("[\n" + ",\n".join(lines) + "\n]\n")


def load(path: Path = DATA) -> list[tuple[str, PointedMetricSpace]]:
    doc = json.loads(path.read_text())
    return [(e["name"], validate(PointedMetricSpace.from_doc(e["space"]))) for e in doc]


if __name__ == "__main__":
    write()
