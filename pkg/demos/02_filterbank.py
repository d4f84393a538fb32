"""The one-third octave filterbank: edge algebra and energy routing.

Saves a figure of the band masks and a filtered-sine energy histogram to
demo_out/filterbank.png when matplotlib is available.
"""
from pathlib import Path

import numpy as np

from ambientauth import BandSet, NOMINAL_CENTERS_HZ, band_edges, split_bands

print("the 32 standardized bands (edge ratio 2^(1/3)):\n")
print(f"{'center':>8} | {'low edge':>9} | {'high edge':>9}")
print("-" * 32)
for center in NOMINAL_CENTERS_HZ:
    low, high = band_edges(center)
    print(f"{center:>8g} | {low:>9.1f} | {high:>9.1f}")

fs = 44100
bands = BandSet(50, 4000)
print(f"\nscoring band set (50 Hz - 4 kHz): {len(bands)} bands")

# a 1 kHz tone lands almost entirely in the 1000 Hz-centered band
t = np.arange(3 * fs) / fs
tone = 0.5 * np.sin(2 * np.pi * 1000 * t)
components = split_bands(tone, fs, bands)
energies = np.sum(components ** 2, axis=1)
share = energies / energies.sum()
print("\n1 kHz tone, energy share per band:")
for center, frac in zip(bands.centers, share):
    bar = "#" * int(frac * 60)
    print(f"{center:>8g} Hz | {frac:>6.1%} {bar}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(__file__).resolve().parent / "demo_out"
    out.mkdir(exist_ok=True)
    freqs = np.fft.rfftfreq(8 * fs, 1 / fs)
    fig, ax = plt.subplots(figsize=(9, 3.5))
    from ambientauth.bands import _band_masks
    masks = _band_masks(8 * fs, fs, bands.centers)
    for row in masks:
        ax.plot(freqs, row, linewidth=0.8)
    ax.set_xscale("log")
    ax.set_xlim(30, 6000)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("mask gain")
    ax.set_title("zero-phase one-third octave masks, 50 Hz - 4 kHz")
    fig.tight_layout()
    fig.savefig(out / "filterbank.png", dpi=120)
    print(f"\nwrote {out / 'filterbank.png'}")
except ImportError:
    print("\n(matplotlib not installed; skipping the figure)")
