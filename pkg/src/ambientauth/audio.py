"""Audio sample container, WAV (RIFF linear PCM) decode/encode, resampling
and average-power measurement.

All scoring happens on mono float64 PCM normalized to [-1, +1] at the
canonical 44100 Hz rate; heterogeneous device rates are resampled on entry.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import resample_poly

from .errors import MalformedWav, UnsupportedEncoding

CANONICAL_FS = 44100

# dB calibration offset added to 10*log10(mean square of normalized PCM).
# Full-scale constant signal then reads 96 dB, roughly the dynamic range of
# 16-bit audio, which makes a 40 dB quiet gate meaningful on digital PCM.
DEFAULT_DB_OFFSET = 96.0

# Kaiser window shape for the polyphase band-limited resampler.
RESAMPLE_KAISER_BETA = 8.6


@dataclass(frozen=True, eq=False)
class AudioSample:
    """Timestamped mono recording.

    pcm          float64 amplitudes in [-1, +1]
    fs           sampling rate in Hz
    captured_at  capture-start time in ms on the server clock (after the
                 device's clock offset has been applied)
    duration_ms  integer ms; len(pcm) == round(duration_ms / 1000 * fs)
    device_id    opaque identifier of the recording device
    """

    pcm: np.ndarray
    fs: int
    captured_at: int = 0
    duration_ms: int = 0
    device_id: str = ""

    def __post_init__(self):
        pcm = np.asarray(self.pcm, dtype=np.float64)
        if pcm.ndim != 1:
            raise ValueError("pcm must be one-dimensional")
        if pcm.size and (np.max(pcm) > 1.0 or np.min(pcm) < -1.0):
            raise ValueError("pcm amplitudes must lie in [-1, +1]")
        if self.fs <= 0:
            raise ValueError("fs must be positive")
        expect = round(self.duration_ms / 1000 * self.fs)
        if pcm.size != expect:
            raise ValueError(
                f"pcm length {pcm.size} does not match duration "
                f"{self.duration_ms} ms at {self.fs} Hz (expected {expect})")
        pcm = pcm.copy()
        pcm.setflags(write=False)
        object.__setattr__(self, "pcm", pcm)

    @classmethod
    def from_pcm(cls, pcm, fs: int, captured_at: int = 0,
                 device_id: str = "") -> "AudioSample":
        """Build a sample from raw PCM, deriving a whole-ms duration.

        Sub-millisecond residue (at most one ms worth of samples) is trimmed
        from the tail so the length/duration invariant holds exactly.
        """
        pcm = np.asarray(pcm, dtype=np.float64)
        duration_ms = round(pcm.size * 1000 / fs)
        n = round(duration_ms / 1000 * fs)
        while n > pcm.size:
            duration_ms -= 1
            n = round(duration_ms / 1000 * fs)
        return cls(pcm=pcm[:n], fs=fs, captured_at=captured_at,
                   duration_ms=duration_ms, device_id=device_id)

    def with_captured_at(self, captured_at: int) -> "AudioSample":
        return replace(self, captured_at=captured_at)


def decode_wav(data: bytes, captured_at: int = 0,
               device_id: str = "") -> AudioSample:
    """Decode a RIFF/WAVE container holding 8/16/24-bit linear PCM.

    Stereo is averaged down to mono; integer amplitudes are scaled to
    [-1, +1] by the full-scale divisor of the bit depth.

    Raises MalformedWav for container damage and UnsupportedEncoding for
    non-PCM data or unsupported layouts.
    """
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWav("not a RIFF/WAVE container")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            if len(body) < 16:
                raise MalformedWav("truncated fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            if len(body) < size:
                raise MalformedWav("truncated data chunk")
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise MalformedWav("missing fmt or data chunk")

    audio_format, channels, fs, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise UnsupportedEncoding(f"WAV format tag {audio_format} is not PCM")
    if channels not in (1, 2):
        raise UnsupportedEncoding(f"{channels} channels (mono/stereo only)")
    if fs <= 0:
        raise MalformedWav("invalid sampling rate")

    if bits == 8:
        raw = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
        samples = (raw - 128.0) / 128.0
    elif bits == 16:
        usable = len(payload) - (len(payload) % 2)
        raw = np.frombuffer(payload[:usable], dtype="<i2").astype(np.float64)
        samples = raw / 32768.0
    elif bits == 24:
        usable = len(payload) - (len(payload) % 3)
        b = np.frombuffer(payload[:usable], dtype=np.uint8).reshape(-1, 3)
        v = (b[:, 0].astype(np.int32)
             | (b[:, 1].astype(np.int32) << 8)
             | (b[:, 2].astype(np.int32) << 16))
        v = np.where(v & 0x800000, v - (1 << 24), v)
        samples = v.astype(np.float64) / float(1 << 23)
    else:
        raise UnsupportedEncoding(f"{bits}-bit PCM not supported")

    if channels == 2:
        usable = samples.size - (samples.size % 2)
        samples = samples[:usable].reshape(-1, 2).mean(axis=1)

    return AudioSample.from_pcm(samples, fs, captured_at=captured_at,
                                device_id=device_id)


def encode_wav(sample: AudioSample) -> bytes:
    """Serialize a sample as a 16-bit mono RIFF/WAVE file."""
    ints = np.clip(np.rint(sample.pcm * 32768.0), -32768, 32767).astype("<i2")
    payload = ints.tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, sample.fs, sample.fs * 2, 2, 16)
    chunks = (b"WAVE"
              + b"fmt " + struct.pack("<I", len(fmt)) + fmt
              + b"data" + struct.pack("<I", len(payload)) + payload)
    return b"RIFF" + struct.pack("<I", len(chunks)) + chunks


def resample(sample: AudioSample, target_fs: int) -> AudioSample:
    """Resample to target_fs with a Kaiser-windowed sinc polyphase filter.

    Duration is preserved exactly: the output is trimmed/padded to
    round(duration_ms / 1000 * target_fs) samples. Identity when the rate
    already matches.
    """
    if sample.fs <= 0 or target_fs <= 0:
        raise ValueError("sampling rates must be positive")
    if target_fs == sample.fs:
        return sample
    g = math.gcd(int(target_fs), int(sample.fs))
    up, down = target_fs // g, sample.fs // g
    out = resample_poly(sample.pcm, up, down,
                        window=("kaiser", RESAMPLE_KAISER_BETA))
    n = round(sample.duration_ms / 1000 * target_fs)
    if out.size < n:
        out = np.concatenate([out, np.zeros(n - out.size)])
    out = np.clip(out[:n], -1.0, 1.0)  # sinc ringing may overshoot slightly
    return AudioSample(pcm=out, fs=target_fs, captured_at=sample.captured_at,
                       duration_ms=sample.duration_ms,
                       device_id=sample.device_id)


def average_power_db(sample: AudioSample,
                     db_offset: float = DEFAULT_DB_OFFSET) -> float:
    """Average power: 10*log10(mean square) + db_offset.

    Returns -inf for all-zero input, which sits below any finite gate.
    """
    if sample.pcm.size == 0:
        raise ValueError("pcm must be nonempty")
    ms = float(np.mean(sample.pcm * sample.pcm))
    if ms == 0.0:
        return float("-inf")
    return 10.0 * math.log10(ms) + db_offset
