"""Band-power decoding of gappy multichannel signals.

Least-squares periodograms turn unevenly sampled segments into subband
powers; a denoising-autoencoder-initialised network or an RBF SVM classifies
the resulting feature vectors.
"""
__version__ = "0.1.0"

from .signal_model import (Segment, SegmentationSpec, TimeStampedSeries, Trial,  # noqa: E402
                           retained_fraction, segment_trial)
from .spectral import (BAND_GRID, MIXTURE_GRID, FrequencyGrid, PowerSpectrum,  # noqa: E402
                       normalize_by_retention, periodogram, power_at)
from .features import (FeatureVector, SubbandSpec, assemble_features, band_powers,  # noqa: E402
                       segment_features)
from .corruption import RemovalSpec, RetentionMask, block_removal, point_removal  # noqa: E402
from .synthio import (Dataset, MixtureSpec, SurrogateDatasetSpec, generate_mixture,  # noqa: E402
                      generate_surrogate_dataset, load_dataset, save_dataset)

__all__ = [
    "Segment", "SegmentationSpec", "TimeStampedSeries", "Trial", "retained_fraction",
    "segment_trial", "BAND_GRID", "MIXTURE_GRID", "FrequencyGrid", "PowerSpectrum",
    "normalize_by_retention", "periodogram", "power_at", "FeatureVector", "SubbandSpec",
    "assemble_features", "band_powers", "segment_features", "RemovalSpec", "RetentionMask",
    "block_removal", "point_removal", "Dataset", "MixtureSpec", "SurrogateDatasetSpec",
    "generate_mixture", "generate_surrogate_dataset", "load_dataset", "save_dataset",
]
