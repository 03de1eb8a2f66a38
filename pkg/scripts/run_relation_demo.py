#!/usr/bin/env python3
"""Assemble the quaternion-side counting function from matrix-side groups.

Usage: python scripts/run_relation_demo.py [P,Q ramified primes] [XMAX]
Example: python scripts/run_relation_demo.py 2,3 5000
"""

import sys

from geomatch.assembly import RamifiedLevelData, dpsi_relation, psi_relation

ram = tuple(int(s) for s in (sys.argv[1] if len(sys.argv) > 1 else "2,3").split(","))
xmax = float(sys.argv[2]) if len(sys.argv) > 2 else 5000.0

data = RamifiedLevelData(ram)
print(f"ramified at {data.ram}, all levels 0")

print("\nper-trace decomposition (first hyperbolic traces):")
for t in (3, 4, 5, 6, 7):
    rep = dpsi_relation(data, t)
    pieces = " + ".join(f"({term.coefficient})*{term.c_factor}*{term.dpsi:.4f}"
                        for term in rep.terms)
    check = "ok" if rep.exact_identity_ok and rep.matching_identity_ok else "FAIL"
    print(f"  t={t:>3}: c_D*dpsi_D = {float(rep.c_quaternion) * rep.dpsi_quaternion:.6f}"
          f" = {pieces}  [{check}]")

rep = psi_relation(data, xmax)
print(f"\nPsi decomposition at x = {xmax:g}:")
for term in rep.terms:
    print(f"  I={set(term.subset) or '{}'}: coeff {term.coefficient!s:>4}  "
          f"psi = {term.psi:>12.4f}  [{term.mode}]")
print(f"  Psi_D(x) = {rep.psi_quaternion:.4f}   error = {rep.error:+.4f}   "
      f"x^0.7 = {rep.bound_7_10:.2f}")
print(f"  note: {rep.note}")
