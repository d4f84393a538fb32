"""Accept/reject rule for a phone/computer sample pair.

A login pair passes when both recordings carry enough acoustic energy
(average power above tau_db) and their band-averaged similarity score
exceeds tau_c. The default operating point uses the 50 Hz - 4 kHz bands
with tau_c = 0.13, tau_db = 40 dB and a 150 ms lag window; alternative
presets trade false rejections against false acceptances for operators
that weight usability and security differently.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .audio import AudioSample, average_power_db, DEFAULT_DB_OFFSET
from .bands import BandSet
from .correlate import similarity_score
from .errors import UntabulatedAlpha
from . import timesync

REASON_OK = "OK"
REASON_PHONE_TOO_QUIET = "PHONE_TOO_QUIET"
REASON_COMPUTER_TOO_QUIET = "COMPUTER_TOO_QUIET"
REASON_LOW_SIMILARITY = "LOW_SIMILARITY"

VERDICT_REASONS = (REASON_OK, REASON_PHONE_TOO_QUIET,
                   REASON_COMPUTER_TOO_QUIET, REASON_LOW_SIMILARITY)


@dataclass(frozen=True)
class ScoringPolicy:
    """The decision tuple: similarity threshold, power gate, lag bound and
    band set."""

    tau_c: float = 0.13
    tau_db: float = 40.0
    ell_max_ms: float = 150.0
    band_set: BandSet = field(default_factory=lambda: BandSet(50, 4000))

    def __post_init__(self):
        if not 0.0 <= self.tau_c <= 1.0:
            raise ValueError("tau_c must lie in [0, 1]")
        if self.ell_max_ms < 0:
            raise ValueError("ell_max_ms must be >= 0")

    def to_record(self) -> dict:
        """Flat key-value form used in config files."""
        return {
            "tau_c": self.tau_c,
            "tau_db": self.tau_db,
            "ell_max_ms": self.ell_max_ms,
            "band_low_hz": self.band_set.low_center,
            "band_high_hz": self.band_set.high_center,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ScoringPolicy":
        return cls(
            tau_c=float(record["tau_c"]),
            tau_db=float(record["tau_db"]),
            ell_max_ms=float(record["ell_max_ms"]),
            band_set=BandSet(float(record["band_low_hz"]),
                             float(record["band_high_hz"])),
        )


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str
    power_phone: float
    power_computer: float
    score: Optional[float] = None

    def __post_init__(self):
        if self.reason not in VERDICT_REASONS:
            raise ValueError(f"unknown verdict reason {self.reason!r}")
        if self.accepted != (self.reason == REASON_OK):
            raise ValueError("accepted must hold exactly when reason is OK")

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "reason": self.reason,
            "score": self.score,
            "power_phone": self.power_phone,
            "power_computer": self.power_computer,
        }


def default_policy() -> ScoringPolicy:
    """Operating point with the lowest equal error rate."""
    return ScoringPolicy()


# Preset (band set, tau_c) pairs minimizing alpha*FRR + (1-alpha)*FAR for
# alpha = 0.1 .. 0.9; higher alpha leans toward fewer false rejections.
_WEIGHTED_PRESETS = {
    1: ((80, 2500), 0.12),
    2: ((50, 2500), 0.14),
    3: ((50, 2500), 0.14),
    4: ((50, 800), 0.19),
    5: ((50, 800), 0.19),
    6: ((50, 800), 0.19),
    7: ((50, 1000), 0.20),
    8: ((50, 1000), 0.20),
    9: ((50, 1250), 0.21),
}


def policy_for_weighting(alpha: float) -> ScoringPolicy:
    """Preset policy for a usability/security weighting alpha in
    {0.1, ..., 0.9}."""
    key = round(alpha * 10)
    if abs(alpha * 10 - key) > 1e-9 or key not in _WEIGHTED_PRESETS:
        raise UntabulatedAlpha(f"no tabulated preset for alpha={alpha}")
    (low, high), tau_c = _WEIGHTED_PRESETS[key]
    return ScoringPolicy(tau_c=tau_c, band_set=BandSet(low, high))


def evaluate(phone: AudioSample, computer: AudioSample,
             policy: Optional[ScoringPolicy] = None,
             db_offset: float = DEFAULT_DB_OFFSET) -> Verdict:
    """Apply the acceptance rule to a sample pair.

    The power gates run first: a quiet recording is rejected before any
    similarity work is spent on it (quiet pairs carry no usable evidence
    either way). Otherwise the pair is trimmed to its common time window
    and accepted iff the similarity score strictly exceeds tau_c.

    Raises DurationMismatch when the common window is shorter than the
    scoring minimum, and FS_MISMATCH / FS_TOO_LOW from the scoring core.
    """
    policy = policy or default_policy()
    power_phone = average_power_db(phone, db_offset)
    if power_phone <= policy.tau_db:
        return Verdict(accepted=False, reason=REASON_PHONE_TOO_QUIET,
                       power_phone=power_phone,
                       power_computer=average_power_db(computer, db_offset))
    power_computer = average_power_db(computer, db_offset)
    if power_computer <= policy.tau_db:
        return Verdict(accepted=False, reason=REASON_COMPUTER_TOO_QUIET,
                       power_phone=power_phone, power_computer=power_computer)

    phone_t, computer_t = timesync.align(phone, computer)
    score = similarity_score(phone_t, computer_t, policy.band_set,
                             policy.ell_max_ms)
    if score > policy.tau_c:
        return Verdict(accepted=True, reason=REASON_OK, score=score,
                       power_phone=power_phone, power_computer=power_computer)
    return Verdict(accepted=False, reason=REASON_LOW_SIMILARITY, score=score,
                   power_phone=power_phone, power_computer=power_computer)
