"""
Point removal versus block removal
==================================

Artefact rejection deletes whole sampling instants.  Point removal scatters
the deletions; block removal cuts contiguous runs whose widths are drawn
from a normal distribution (mean 20, sd 10 samples).
"""

import numpy as np

from gappy_bci import RemovalSpec, RetentionMask, block_removal, point_removal

total = 1000
point = point_removal(total, 0.5, seed=3)
block = block_removal(total, 0.5, seed=3)

for name, mask in (("point", point), ("block", block)):
    runs = mask.removed_run_lengths()
    print(f"{name:5s} removed={mask.removed_count}  runs={len(runs):3d}  "
          f"median run={np.median(runs):.1f}  longest={max(runs)}")

# A mask is easiest to eyeball as run-length text.
print(block.to_rle()[:120], "...")

# The text form replays exactly.
assert RetentionMask.from_rle(block.to_rle()) == block

# Exact counts hold for any total and level.
for p in (0.1, 0.45, 0.8):
    m = block_removal(777, p, RemovalSpec(mode="block"), seed=11)
    print(f"p={p}: removed {m.removed_count} of 777, round(p*total)={round(p * 777)}")

# A crude picture of the first 100 instants ('.' kept, '#' removed).
for name, mask in (("point", point), ("block", block)):
    print(f"{name:5s}", "".join("." if k else "#" for k in mask.kept[:100]))
