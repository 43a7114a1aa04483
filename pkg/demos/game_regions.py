"""
Mapping the employer's equilibrium regions
==========================================

The enrollment game: the employer picks a match level, then each employee
decides whether to enroll. Employees split into a share y who face a real
cost of enrolling (parameter delta) and a share 1-y who enroll regardless.
This script solves the game across the (delta, y) plane and prints the
regime map.
"""

from fractions import Fraction

import numpy as np

from retirelab import GameParams, spe, sweep
from retirelab.game import indifference_share

# Three instructive points first.
for delta, y in ((1.0, 0.4), (1.0, 0.2), (0.0, 0.5)):
    eq = spe(GameParams(delta=delta, y=y))
    extra = f", q in {eq.q_range}" if eq.q_range else ""
    print(f"delta={delta}, y={y}: employer plays {eq.employer} "
          f"(value {eq.employer_value:.2f}{extra})")

# The boundary is the share that leaves the employer indifferent between
# funding the high match and passing: y* = 1 / (delta + 2). Passing is a
# gamble that pays 2 on an always-enroller and -delta on a costly type, so
# it wins below y*; above y*, the high match's certain value of 1 wins.
print("\nindifference share y* by delta:")
for delta in (0.0, 1.0, 2.0, 6.0):
    print(f"  delta={delta}: y* = {indifference_share(delta):.4f}")

# Regime map over a grid. H = employer funds the high match, P = employer
# passes, M = exactly indifferent (only binary-exact grid points land here).
deltas = np.round(np.arange(0.0, 4.01, 0.25), 2)
ys = np.round(np.arange(0.05, 1.0, 0.05), 2)
rows = sweep(deltas, ys)
by_cell = {(r["delta"], r["y"]): r["employer"] for r in rows}
symbol = {"high": "H", "pass": "P", "mixed": "M"}

print("\n        delta " + " ".join(f"{d:4.2f}"[:4] for d in deltas))
for y in reversed(ys):
    line = "  ".join(symbol[by_cell[(float(d), float(y))]] for d in deltas)
    print(f"y = {y:4.2f}   {line}")

# Check the map against the boundary rule: high iff y * (delta + 2) > 1.
# The comparison must be exact, like the solver's: grid points that look
# like boundary points in decimal (y=0.4 at delta=0.5) usually are not in
# binary, and only exactly representable ones (y=0.25 at delta=2) land on M.
for r in rows:
    on_curve = Fraction(r["y"]) * (Fraction(r["delta"]) + 2)
    want = "mixed" if on_curve == 1 else ("high" if on_curve > 1 else "pass")
    assert r["employer"] == want, r
n_high = sum(r["employer"] == "high" for r in rows)
n_pass = sum(r["employer"] == "pass" for r in rows)
print(f"\n{len(rows)} cells: {n_high} high, {n_pass} pass, "
      f"{len(rows) - n_high - n_pass} mixed; all match the boundary rule")
