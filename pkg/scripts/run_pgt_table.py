#!/usr/bin/env python3
"""Print the prime-geodesic counting table for a principal congruence level.

Usage: python scripts/run_pgt_table.py [LEVEL] [XMAX]
"""

import sys

from geomatch.geodesics import pgt_report

level = int(sys.argv[1]) if len(sys.argv) > 1 else 1
xmax = float(sys.argv[2]) if len(sys.argv) > 2 else 10000.0

grid = [xmax / 10 ** k for k in range(3, -1, -1) if xmax / 10 ** k >= 10]
print(f"level N = {level}")
print(f"{'x':>10} {'psi':>14} {'psi-x':>12} {'x^0.7':>10} {'pi':>8} "
      f"{'li(x)':>12} {'pi-li':>10}")
for row in pgt_report(level, grid):
    print(f"{row.x:>10.1f} {row.psi:>14.4f} {row.psi_minus_x:>12.4f} "
          f"{row.x_pow_7_10:>10.2f} {row.pi:>8d} {row.li_x:>12.4f} "
          f"{row.pi_minus_li:>10.4f}")
