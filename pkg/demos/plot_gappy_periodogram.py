"""
Spectra of a signal with holes in it
====================================

A 3 Hz and a 6 Hz sine are mixed, 3 Hz with 1.5 times the amplitude.  We
delete more and more sampling instants at random and estimate the spectrum
from whatever survives, by fitting a sinusoid at each probe frequency.
"""

import numpy as np

from gappy_bci import (MIXTURE_GRID, MixtureSpec, TimeStampedSeries, generate_mixture,
                       normalize_by_retention, periodogram, point_removal)
from gappy_bci.plots import line_chart

signal = generate_mixture(MixtureSpec(), seed=1)
print("samples in the complete signal:", len(signal))

# The fit only needs time stamps, so a gappy series is just shorter arrays.
curves = []
for p in (0.0, 0.2, 0.4, 0.6, 0.8):
    kept = point_removal(len(signal), p, seed=7).kept
    gappy = TimeStampedSeries(signal.times[kept], signal.values[kept])
    spectrum = periodogram(gappy, MIXTURE_GRID)
    # Fewer samples means less total power; dividing by (1 - p) lines the curves up.
    shown = normalize_by_retention(spectrum, p)
    f = spectrum.frequencies
    p3 = spectrum.powers[f == 3.0][0]
    p6 = spectrum.powers[f == 6.0][0]
    print(f"p={p:.1f}  kept={kept.sum():4d}  peak={spectrum.argmax_frequency():.2f} Hz  "
          f"3Hz/6Hz power ratio={p3 / p6:.2f}")
    curves.append({"x": f, "y": shown.powers, "label": f"p={p:.1f}"})

# The ratio should hover near 1.5 ** 2 = 2.25 at every level.
with open("gappy_spectra.svg", "w") as fh:
    fh.write(line_chart(curves, "Two-tone spectrum under point removal", "frequency (Hz)",
                        "power / (1 - p)"))
print("wrote gappy_spectra.svg")
