"""
A small sweep with bound checks
===============================

Compute m_q for every odd prime in a range, check 21/(200 q) < m_q < 5/sqrt(q)
on each row and write the per-decade plot data.  The same steps are available
as `lchi compute`, `lchi verify-bounds`, `lchi stats` and `lchi plotdata`.
"""

import sys
import tempfile
from pathlib import Path

from lchi.cli import plotdata, stats, verify_bounds
from lchi.sweep import read_csv, run_sweep

q_max = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
work = Path(tempfile.mkdtemp(prefix="lchi_demo_"))
out = work / f"mq_3_{q_max}.csv"



def progress(i, n, q):
    if i % 100 == 0 or i == n:
        print(f"{i}/{n} done, last q={q}")


manifest = run_sweep(3, q_max, out, progress=progress)
print(f"{len(manifest.status)} primes, status counts {manifest.counts()}")

rows = read_csv(out)
rep = verify_bounds(rows)
print(f"{rep.checked} rows checked, {len(rep.violations)} violations")
print(f"tightest lower margin m_q q (200/21) = {rep.lower_margin[0]:.6f} at q={rep.lower_margin[1]}")

s = stats(rows)
print(f"largest m_q {s.max_mq[0]!r} at q={s.max_mq[1]}; smallest m'_q {s.min_norm[0]!r} at q={s.min_norm[1]}")
print(f"minimum attained at an odd character for {100 * s.odd / s.rows:.1f}% of moduli")

files = plotdata(rows, work / "plots")
print(f"{len(files)} plot files in {work / 'plots'} (see docs/plot_mq.gp)")
