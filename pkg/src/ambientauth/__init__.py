"""ambientauth: two-factor authentication whose second factor is the
proximity of the user's phone to the login computer, verified by comparing
ambient audio recorded by both devices.

Layout:

- audio, bands, correlate: the signal-processing core (WAV decode,
  one-third octave filterbank, lag-windowed normalized cross-correlation,
  the similarity score)
- decision: thresholds and the accept/reject rule
- timesync: clock-offset estimation and recording alignment
- crypto: hybrid sample encryption, verdict signatures, fallback codes
- server / token: the web service and the phone-side software token
- harness: FRR/FAR/EER evaluation over recorded or synthetic corpora
"""

from .audio import (AudioSample, CANONICAL_FS, DEFAULT_DB_OFFSET,
                    average_power_db, decode_wav, encode_wav, resample)
from .bands import BandSet, NOMINAL_CENTERS_HZ, band_edges, split_bands
from .correlate import (band_correlations, cross_correlation,
                        normalized_max_xcorr, normalized_xcorr_series,
                        similarity_score)
from .decision import (ScoringPolicy, Verdict, default_policy, evaluate,
                       policy_for_weighting)
from .timesync import (ClockOffset, SyncRound, adjust_timestamp, align,
                       estimate_offset)

__version__ = "0.1.0"

__all__ = [
    "AudioSample", "CANONICAL_FS", "DEFAULT_DB_OFFSET",
    "average_power_db", "decode_wav", "encode_wav", "resample",
    "BandSet", "NOMINAL_CENTERS_HZ", "band_edges", "split_bands",
    "band_correlations", "cross_correlation", "normalized_max_xcorr",
    "normalized_xcorr_series", "similarity_score",
    "ScoringPolicy", "Verdict", "default_policy", "evaluate",
    "policy_for_weighting",
    "ClockOffset", "SyncRound", "adjust_timestamp", "align",
    "estimate_offset",
    "__version__",
]
