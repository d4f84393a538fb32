import numpy as np
import pytest

from ambientauth.audio import AudioSample
from ambientauth.harness.synth import ambient_track


def make_sample(pcm, fs=44100, captured_at=0, device_id="test"):
    return AudioSample.from_pcm(np.asarray(pcm, dtype=np.float64), fs,
                                captured_at=captured_at, device_id=device_id)


def gaussian_pcm(rng, n, rms=0.1):
    pcm = rng.standard_normal(n)
    return pcm * (rms / np.sqrt(np.mean(pcm * pcm)))


def ambient_pcm(rng, n, fs=44100, rms=0.1):
    pcm = ambient_track(rng, n, fs)
    return pcm * (rms / np.sqrt(np.mean(pcm * pcm)))


def colocated_pair(rng, n, fs=44100, snr_db=10.0, lag_samples=0, rms=0.1):
    """Two noisy views of one ambient track, the second shifted by
    lag_samples."""
    margin = abs(lag_samples)
    track = ambient_pcm(rng, n + 2 * margin, fs, rms=rms)
    a = track[margin:margin + n].copy()
    b = track[margin + lag_samples:margin + lag_samples + n].copy()
    noise = rms * 10.0 ** (-snr_db / 20.0)
    a += noise * rng.standard_normal(n)
    b += noise * rng.standard_normal(n)
    return a, b


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
