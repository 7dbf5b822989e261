#!/usr/bin/env python3
# Toy conjecture generator for `odeen solve --mode external`.
# Reads one JSON request line, answers with counting rules over single properties,
# ranked by how many board observations they get right.
import json
import sys

# property -> token parts it requires; tokens look like "red_pyramid_up" or "_" for empty
PROPS = {
    "red": ["red"], "blue": ["blue"], "block": ["block"], "pyramid": ["pyramid"],
    "pyramid pointing_up": ["pyramid", "up"], "pyramid pointing_down": ["pyramid", "down"],
}
QUANTS = [("zero", None), ("at_least", 1), ("at_least", 2), ("at_most", 1), ("exactly", 1), ("exactly", 2)]


def count(structure, prop):
    return sum(1 for tok in structure.split() if all(part in tok.split("_") for part in PROPS[prop]))


def holds(q, n, c):
    return {"zero": c == 0, "at_least": c >= (n or 0), "at_most": c <= (n or 0), "exactly": c == n}[q]


def main():
    req = json.loads(sys.stdin.readline())
    board, budget = req["board"], req["budget"]
    scored = []
    for q, n in QUANTS:
        for p in PROPS:
            text = q if n is None else f"{q} {n}"
            hits = sum(holds(q, n, count(s, p)) == bool(t) for s, t in board)
            scored.append((-hits, f"{text} {p}"))
    for _, rule in sorted(scored)[:budget]:
        print(rule, flush=True)


if __name__ == "__main__":
    main()
