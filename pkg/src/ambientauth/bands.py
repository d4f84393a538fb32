"""One-third octave band machinery: nominal centers, edge algebra and the
zero-phase band splitter.

A band centered at c spans [c * 2**(-1/6), c * 2**(+1/6)], so the edge
ratio is 2**(1/3). Splitting is done by masking FFT bins: bins inside the
edges pass, bins outside are zeroed, with a raised-cosine transition of
1/12 octave on each side of the band. Zero phase shift means every band
component stays time-aligned with the input, which the lag-windowed
cross-correlation depends on.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import FsTooLow

# The 32 standardized nominal one-third octave centers, 16 Hz .. 20 kHz.
NOMINAL_CENTERS_HZ = (
    16.0, 20.0, 25.0, 31.5, 40.0, 50.0, 63.0, 80.0, 100.0, 125.0, 160.0,
    200.0, 250.0, 315.0, 400.0, 500.0, 630.0, 800.0, 1000.0, 1250.0,
    1600.0, 2000.0, 2500.0, 3150.0, 4000.0, 5000.0, 6300.0, 8000.0,
    10000.0, 12500.0, 16000.0, 20000.0,
)

EDGE_FACTOR = 2.0 ** (1.0 / 6.0)
TRANSITION_OCTAVES = 1.0 / 12.0


def band_edges(center: float) -> tuple[float, float]:
    """Low and high edge frequencies of the band centered at `center`."""
    if center <= 0:
        raise ValueError("center frequency must be positive")
    return center / EDGE_FACTOR, center * EDGE_FACTOR


def centers_in_range(low_center: float, high_center: float) -> tuple[float, ...]:
    return tuple(c for c in NOMINAL_CENTERS_HZ if low_center <= c <= high_center)


@dataclass(frozen=True)
class BandSet:
    """A contiguous run of nominal one-third octave bands.

    Constructed from the lowest and highest center frequency; `centers`
    is derived from the standardized list.
    """

    low_center: float
    high_center: float
    centers: tuple[float, ...] = ()

    def __post_init__(self):
        centers = centers_in_range(self.low_center, self.high_center)
        if not centers:
            raise ValueError(
                f"no nominal one-third octave centers in "
                f"[{self.low_center}, {self.high_center}] Hz")
        object.__setattr__(self, "centers", centers)

    def __len__(self) -> int:
        return len(self.centers)

    def highest_edge_hz(self) -> float:
        return band_edges(self.centers[-1])[1]


@lru_cache(maxsize=8)
def _band_masks(n: int, fs: int, centers: tuple[float, ...]) -> np.ndarray:
    """Raised-cosine rFFT masks, one row per band, for length-n signals."""
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    with np.errstate(divide="ignore"):
        logf = np.log2(np.maximum(freqs, 1e-300))
    masks = np.zeros((len(centers), freqs.size))
    for i, center in enumerate(centers):
        low, high = band_edges(center)
        lo, hi = np.log2(low), np.log2(high)
        m = ((logf >= lo) & (logf <= hi)).astype(np.float64)
        rise = (logf > lo - TRANSITION_OCTAVES) & (logf < lo)
        m[rise] = 0.5 - 0.5 * np.cos(
            np.pi * (logf[rise] - (lo - TRANSITION_OCTAVES)) / TRANSITION_OCTAVES)
        fall = (logf > hi) & (logf < hi + TRANSITION_OCTAVES)
        m[fall] = 0.5 + 0.5 * np.cos(np.pi * (logf[fall] - hi) / TRANSITION_OCTAVES)
        masks[i] = m
    masks.setflags(write=False)
    return masks


def check_nyquist(fs: int, band_set: BandSet) -> None:
    top = band_set.highest_edge_hz()
    if fs / 2 <= top:
        raise FsTooLow(
            f"fs {fs} Hz cannot represent the {band_set.centers[-1]} Hz band "
            f"(upper edge {top:.1f} Hz)")


def split_bands(pcm: np.ndarray, fs: int, band_set: BandSet) -> np.ndarray:
    """Split a signal into per-band components, shape (n_bands, len(pcm)).

    Component i holds only energy within band i's edges (up to the
    raised-cosine transitions) and is time-aligned with the input.
    """
    check_nyquist(fs, band_set)
    pcm = np.asarray(pcm, dtype=np.float64)
    n = pcm.size
    masks = _band_masks(n, fs, band_set.centers)
    spectrum = np.fft.rfft(pcm)
    return np.fft.irfft(spectrum[None, :] * masks, n=n, axis=1)
