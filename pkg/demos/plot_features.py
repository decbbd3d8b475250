"""
From a trial to feature vectors
===============================

A four second, 14 channel trial is cut into 25 one-second windows that
overlap by 87.5 %.  Each window becomes 56 numbers: the mean power in four
bands (8-12, 13-17, 18-22, 23-27 Hz) per channel, as log shares of the total.
"""

import numpy as np

from gappy_bci import (SegmentationSpec, SurrogateDatasetSpec, generate_surrogate_dataset,
                       point_removal, retained_fraction, segment_features, segment_trial)

data = generate_surrogate_dataset(SurrogateDatasetSpec(subjects=1, sessions=1, trials_per_session=2))
trial = data.trials[0]
print("trial shape (channels, samples):", trial.values.shape, " label:", trial.label)

segments = segment_trial(trial, SegmentationSpec())
print("windows:", len(segments), " starts:", [round(s.window_start, 3) for s in segments[:4]], "...")

features = segment_features(segments[0])
print("feature length:", len(features))
print("channel 1 bands:", np.round([features.at(0, b) for b in range(4)], 3))
# log shares, so the exponentials sum to one
print("sum of exp(features):", np.exp(features.values).sum())

# Removing 60 % of the instants leaves windows with fewer, unevenly spaced samples,
# but the features are still defined.
gappy = trial.with_mask(point_removal(trial.n_instants, 0.6, seed=5).kept)
print("retained fraction:", retained_fraction(gappy))
segs = segment_trial(gappy)
print("samples per window:", [len(s) for s in segs[:8]], "...")
f_gappy = segment_features(segs[0])
print("largest change in any feature vs complete data:",
      round(float(np.abs(f_gappy.values - features.values).max()), 3))

# Class 0 boosts alpha on channels 1-7, class 1 on channels 8-14.
alpha = np.array([features.at(ch, 0) for ch in range(14)])
print("alpha share, first half minus second half:", round(alpha[:7].mean() - alpha[7:].mean(), 3))
