"""Deterministic synthetic corpora.

The recorded corpus behind the published error rates is not available, so
the harness fabricates one: band-limited colored noise stands in for
ambient sound. Co-located pairs share one noise track, offset by a small
lag (the residual clock error two real devices would carry) and dressed
with independent per-device noise at a chosen SNR. Independent pairs use
disjoint tracks, which is what a remote attacker guessing the victim's
environment would produce.

Everything derives from one seeded generator: the same spec yields
byte-identical WAV files and manifest.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from ..audio import AudioSample, encode_wav
from .manifest import (ACTIVITIES, ENVIRONMENTS, PHONE_POSITIONS,
                       ManifestEntry, save_manifest)

# Synthetic ambience support: flat-to-pink spectrum, rolled off outside
# [~24 Hz, ~10.8 kHz] so every scoring band (50 Hz - 8 kHz) is fully fed.
_LOW_ROLLOFF_HZ = (24.0, 34.0)
_HIGH_ROLLOFF_HZ = (9600.0, 10800.0)
_PINK_KNEE_HZ = 300.0
_TARGET_RMS = 0.1

# Fixed epoch so generated corpora are reproducible byte-for-byte.
_BASE_EPOCH_MS = 1_700_000_000_000

DEFAULT_DURATION_MS = 3500


def _spectral_weight(freqs: np.ndarray) -> np.ndarray:
    w = np.ones_like(freqs)
    f = np.maximum(freqs, 1e-9)
    w *= np.sqrt(_PINK_KNEE_HZ / np.maximum(f, _PINK_KNEE_HZ))
    lo0, lo1 = _LOW_ROLLOFF_HZ
    hi0, hi1 = _HIGH_ROLLOFF_HZ
    w[f <= lo0] = 0.0
    ramp = (f > lo0) & (f < lo1)
    w[ramp] *= 0.5 - 0.5 * np.cos(np.pi * (f[ramp] - lo0) / (lo1 - lo0))
    w[f >= hi1] = 0.0
    ramp = (f > hi0) & (f < hi1)
    w[ramp] *= 0.5 + 0.5 * np.cos(np.pi * (f[ramp] - hi0) / (hi1 - hi0))
    return w


def ambient_track(rng: np.random.Generator, n: int, fs: int) -> np.ndarray:
    """One channel of synthetic ambience: unit-free, RMS-normalized."""
    nb = n // 2 + 1
    spectrum = (rng.standard_normal(nb) + 1j * rng.standard_normal(nb))
    spectrum *= _spectral_weight(np.fft.rfftfreq(n, 1.0 / fs))
    track = sfft.irfft(spectrum, n)
    rms = np.sqrt(np.mean(track * track))
    return track * (_TARGET_RMS / rms)


def _clip_guard(pcm: np.ndarray) -> np.ndarray:
    peak = np.max(np.abs(pcm))
    if peak > 0.97:
        pcm = pcm * (0.97 / peak)
    return pcm


@dataclass(frozen=True)
class SynthSpec:
    pairs: int
    snr_db: float = 10.0
    lag_ms: float = 50.0
    seed: int = 1
    kind: str = "colocated"  # or "independent"
    duration_ms: int = DEFAULT_DURATION_MS
    fs: int = 44100

    def __post_init__(self):
        if self.kind not in ("colocated", "independent"):
            raise ValueError("kind must be 'colocated' or 'independent'")
        if self.pairs < 1:
            raise ValueError("pairs must be >= 1")


def synth_generate(spec: SynthSpec, out_dir: str | Path) -> Path:
    """Generate WAV pairs plus their manifest; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    fs = spec.fs
    n = round(spec.duration_ms / 1000 * fs)
    margin = int(np.ceil(spec.lag_ms / 1000 * fs))
    noise_rms = _TARGET_RMS * 10.0 ** (-spec.snr_db / 20.0)

    entries = []
    for i in range(spec.pairs):
        if spec.kind == "colocated":
            track = ambient_track(rng, n + 2 * margin, fs)
            lag = int(rng.integers(-margin, margin + 1)) if margin else 0
            phone = track[margin:margin + n]
            computer = track[margin + lag:margin + lag + n]
        else:
            phone = ambient_track(rng, n, fs)
            computer = ambient_track(rng, n, fs)
        phone = _clip_guard(phone + noise_rms * rng.standard_normal(n))
        computer = _clip_guard(computer + noise_rms * rng.standard_normal(n))

        captured_at = _BASE_EPOCH_MS + i * 10_000
        phone_name = f"phone_{i:04d}.wav"
        computer_name = f"computer_{i:04d}.wav"
        (out / phone_name).write_bytes(encode_wav(AudioSample.from_pcm(
            phone, fs, captured_at=captured_at, device_id=f"phone-{i}")))
        (out / computer_name).write_bytes(encode_wav(AudioSample.from_pcm(
            computer, fs, captured_at=captured_at,
            device_id=f"computer-{i}")))
        entries.append(ManifestEntry(
            phone_wav=phone_name,
            computer_wav=computer_name,
            phone_captured_at=captured_at,
            computer_captured_at=captured_at,
            subject=f"s{i % 2:02d}",
            environment=ENVIRONMENTS[i % len(ENVIRONMENTS)],
            activity=ACTIVITIES[i % len(ACTIVITIES)],
            phone_position=PHONE_POSITIONS[i % len(PHONE_POSITIONS)],
            phone_model=("PhoneA", "PhoneB")[i % 2],
            computer_model=("LaptopA", "LaptopB")[(i // 2) % 2],
        ))
    return save_manifest(entries, out / "manifest.jsonl")


def media_track_wav(seed: int, duration_ms: int, fs: int = 44100) -> bytes:
    """A long non-repetitive broadcast stand-in for same-media attacks."""
    rng = np.random.default_rng(seed)
    n = round(duration_ms / 1000 * fs)
    pcm = _clip_guard(ambient_track(rng, n, fs))
    return encode_wav(AudioSample.from_pcm(pcm, fs))
