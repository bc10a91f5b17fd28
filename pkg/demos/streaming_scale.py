"""Selection over row-chunked binary files and how the cost splits up.

Writes a synthetic Y = XW + E pair to PSELMAT1 files, then selects
straight from disk. Only kernel assembly sees the samples, so its time
grows with m while the eigen step and the selection loop do not.

Run:  python3 demos/streaming_scale.py [m ...]      (default 20000 200000)
"""

import os
import sys
import tempfile
import time

from projsel.datagen import GenSpec, generate_files
from projsel.kselect import format_timings, select_streaming

sizes = [int(v) for v in sys.argv[1:]] or [20_000, 200_000]

with tempfile.TemporaryDirectory() as tmp:
    for m in sizes:
        xp, yp = os.path.join(tmp, "x.bin"), os.path.join(tmp, "y.bin")
        generate_files(GenSpec(m=m, n_x=100, n_y=100, seed=1), xp, yp)
        t0 = time.perf_counter()
        res = select_streaming(yp, xp, 10, chunk_rows=65536)
        total = time.perf_counter() - t0
        print(f"m = {m}: {total:.3f} s, picks {res.indices}")
        print("  " + format_timings(res).replace("\n", "\n  "))
