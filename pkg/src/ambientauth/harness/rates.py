"""Error-rate measurement: FRR by group, cross-subject FAR, threshold
sweeps with EER, weighted band-set optimization and same-media attack
simulation.

Scoring follows the live decision path: power-gate both recordings, trim
to the common window, score, compare against the threshold. Pairs the
power gate rejects are excluded from rate denominators and reported
separately. All computations are deterministic for a fixed manifest and
seed; pairs are reduced in manifest order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..audio import (AudioSample, CANONICAL_FS, DEFAULT_DB_OFFSET,
                     average_power_db, decode_wav, resample)
from ..bands import BandSet, NOMINAL_CENTERS_HZ
from ..correlate import band_correlations
from ..decision import ScoringPolicy, default_policy
from ..errors import SingleSubject
from ..timesync import align
from .manifest import ManifestEntry, load_manifest, resolve_wav
from .report import GroupRate, RateReport

DEFAULT_TAU_GRID = np.round(np.arange(0.0, 1.0 + 1e-9, 0.005), 6)

# Exhaustive band-set search space: low centers 50-100 Hz crossed with
# high centers 630 Hz - 8 kHz.
OPTIMIZE_LOW_CENTERS = tuple(c for c in NOMINAL_CENTERS_HZ if 50 <= c <= 100)
OPTIMIZE_HIGH_CENTERS = tuple(c for c in NOMINAL_CENTERS_HZ
                              if 630 <= c <= 8000)


def enumerate_band_sets() -> list[tuple[float, float]]:
    return [(low, high) for low in OPTIMIZE_LOW_CENTERS
            for high in OPTIMIZE_HIGH_CENTERS]


@dataclass(frozen=True)
class PairOutcome:
    quiet: bool
    score: Optional[float]
    power_phone: float
    power_computer: float

    def accepted(self, tau_c: float) -> bool:
        return not self.quiet and self.score is not None \
            and self.score > tau_c


class PairScorer:
    """Loads, normalizes and scores WAV pairs with a small decode cache."""

    def __init__(self, manifest_path: str | Path, policy: ScoringPolicy,
                 db_offset: float = DEFAULT_DB_OFFSET):
        self.manifest_path = Path(manifest_path)
        self.policy = policy
        self.db_offset = db_offset
        self._cache: dict[str, AudioSample] = {}

    def load(self, wav: str) -> AudioSample:
        sample = self._cache.get(wav)
        if sample is None:
            data = resolve_wav(self.manifest_path, wav).read_bytes()
            sample = resample(decode_wav(data), CANONICAL_FS)
            self._cache[wav] = sample
        return sample

    def _gate(self, phone: AudioSample,
              computer: AudioSample) -> tuple[bool, float, float]:
        p_phone = average_power_db(phone, self.db_offset)
        p_computer = average_power_db(computer, self.db_offset)
        quiet = (p_phone <= self.policy.tau_db
                 or p_computer <= self.policy.tau_db)
        return quiet, p_phone, p_computer

    def _score(self, phone: AudioSample, computer: AudioSample,
               band_set: Optional[BandSet] = None) -> PairOutcome:
        quiet, p_phone, p_computer = self._gate(phone, computer)
        if quiet:
            return PairOutcome(True, None, p_phone, p_computer)
        phone_t, computer_t = align(phone, computer)
        values = band_correlations(phone_t, computer_t,
                                   band_set or self.policy.band_set,
                                   self.policy.ell_max_ms)
        return PairOutcome(False, float(np.mean(values)), p_phone,
                           p_computer)

    def score_entry(self, entry: ManifestEntry) -> PairOutcome:
        """Score a legitimate pair, aligned by its recorded timestamps."""
        phone = self.load(entry.phone_wav).with_captured_at(
            entry.phone_captured_at)
        computer = self.load(entry.computer_wav).with_captured_at(
            entry.computer_captured_at)
        return self._score(phone, computer)

    def score_attack(self, phone_wav: str, computer_wav: str) -> PairOutcome:
        """Score an attack pairing; the attacker forges timestamps, so the
        recordings are compared head-aligned."""
        phone = self.load(phone_wav).with_captured_at(0)
        computer = self.load(computer_wav).with_captured_at(0)
        return self._score(phone, computer)

    def band_matrix(self, pairs: Sequence[tuple[AudioSample, AudioSample]],
                    band_set: BandSet) -> np.ndarray:
        rows = []
        for phone, computer in pairs:
            phone_t, computer_t = align(phone, computer)
            rows.append(band_correlations(phone_t, computer_t, band_set,
                                          self.policy.ell_max_ms))
        return np.array(rows)


def _attack_pairings(entries: Sequence[ManifestEntry]):
    """Ordered cross-subject pairings: every victim phone sample against
    every other-subject computer sample, both role assignments."""
    subjects = sorted({e.subject for e in entries})
    if len(subjects) < 2:
        raise SingleSubject("cross-subject FAR needs at least two subjects")
    by_subject = {s: [e for e in entries if e.subject == s]
                  for s in subjects}
    for victim, attacker in itertools.permutations(subjects, 2):
        for v_entry in by_subject[victim]:
            for a_entry in by_subject[attacker]:
                yield v_entry, a_entry


def compute_frr(manifest_path: str | Path,
                policy: Optional[ScoringPolicy] = None,
                group_by: Optional[str] = None,
                db_offset: float = DEFAULT_DB_OFFSET) -> RateReport:
    """False rejection rate of legitimate pairs, optionally grouped by a
    manifest label. Power-gated pairs are excluded and counted."""
    policy = policy or default_policy()
    entries = load_manifest(manifest_path)
    scorer = PairScorer(manifest_path, policy, db_offset)
    counts: dict[str, list[int]] = {}  # label -> [rejects, scored, excluded]
    for entry in entries:
        label = entry.label(group_by) if group_by else "all"
        bucket = counts.setdefault(label, [0, 0, 0])
        outcome = scorer.score_entry(entry)
        if outcome.quiet:
            bucket[2] += 1
            continue
        bucket[1] += 1
        if not outcome.accepted(policy.tau_c):
            bucket[0] += 1
    groups = [GroupRate(label=label, numerator=c[0], denominator=c[1],
                        excluded=c[2])
              for label, c in sorted(counts.items())]
    return RateReport(kind="frr", groups=groups,
                      meta={"policy": policy.to_record(),
                            "group_by": group_by or "all",
                            "entries": len(entries)})


def compute_far(manifest_path: str | Path,
                policy: Optional[ScoringPolicy] = None,
                group_by: str = "environment",
                db_offset: float = DEFAULT_DB_OFFSET) -> RateReport:
    """Cross-subject false acceptance rate: victim phone recordings paired
    with every other subject's computer recordings, in both directions."""
    policy = policy or default_policy()
    entries = load_manifest(manifest_path)
    scorer = PairScorer(manifest_path, policy, db_offset)
    counts: dict[str, list[int]] = {}
    total = 0
    for v_entry, a_entry in _attack_pairings(entries):
        label = v_entry.label(group_by) if group_by else "all"
        bucket = counts.setdefault(label, [0, 0, 0])
        outcome = scorer.score_attack(v_entry.phone_wav, a_entry.computer_wav)
        total += 1
        if outcome.quiet:
            bucket[2] += 1
            continue
        bucket[1] += 1
        if outcome.accepted(policy.tau_c):
            bucket[0] += 1
    groups = [GroupRate(label=label, numerator=c[0], denominator=c[1],
                        excluded=c[2])
              for label, c in sorted(counts.items())]
    return RateReport(kind="far", groups=groups,
                      meta={"policy": policy.to_record(),
                            "group_by": group_by or "all",
                            "attack_pairs": total})


def compute_entry_far(manifest_path: str | Path,
                      policy: Optional[ScoringPolicy] = None,
                      db_offset: float = DEFAULT_DB_OFFSET) -> RateReport:
    """FAR over a manifest whose entries already ARE attack pairs (e.g. a
    disjoint-source synthetic corpus)."""
    policy = policy or default_policy()
    entries = load_manifest(manifest_path)
    scorer = PairScorer(manifest_path, policy, db_offset)
    accepted = scored = excluded = 0
    for entry in entries:
        outcome = scorer.score_attack(entry.phone_wav, entry.computer_wav)
        if outcome.quiet:
            excluded += 1
            continue
        scored += 1
        if outcome.accepted(policy.tau_c):
            accepted += 1
    return RateReport(kind="far",
                      groups=[GroupRate("all", accepted, scored,
                                        excluded=excluded)],
                      meta={"policy": policy.to_record(),
                            "pairing": "entries",
                            "entries": len(entries)})


def _rates_over_grid(legit: np.ndarray, attack: np.ndarray,
                     tau_grid: np.ndarray):
    """FRR/FAR curves over thresholds. Accept iff score > tau, so FRR
    counts legit scores <= tau and is nondecreasing; FAR counts attack
    scores > tau and is nonincreasing."""
    curve = []
    for tau in tau_grid:
        frr = float(np.mean(legit <= tau)) if legit.size else 0.0
        far = float(np.mean(attack > tau)) if attack.size else 0.0
        curve.append((float(tau), frr, far))
    return curve


def _interpolate_eer(curve) -> dict:
    """EER at the FRR/FAR crossing, linear between grid points."""
    for i, (tau, frr, far) in enumerate(curve):
        if frr >= far:
            if i == 0 or frr == far:
                return {"eer": (frr + far) / 2, "tau": tau}
            t0, frr0, far0 = curve[i - 1]
            # solve frr0+(frr-frr0)u == far0+(far-far0)u on [0,1]
            denom = (frr - frr0) - (far - far0)
            u = 0.0 if denom == 0 else (far0 - frr0) / denom
            u = min(max(u, 0.0), 1.0)
            return {"eer": frr0 + (frr - frr0) * u,
                    "tau": t0 + (tau - t0) * u}
    tau, frr, far = curve[-1]
    return {"eer": (frr + far) / 2, "tau": tau}


def sweep_eer(manifest_path: str | Path,
              band_set: Optional[BandSet] = None,
              tau_grid: Optional[np.ndarray] = None,
              policy: Optional[ScoringPolicy] = None,
              db_offset: float = DEFAULT_DB_OFFSET) -> RateReport:
    """Threshold sweep: legitimate pairs from the manifest entries, attack
    pairs from cross-subject pairings of the same corpus."""
    policy = policy or default_policy()
    if band_set is not None:
        policy = ScoringPolicy(tau_c=policy.tau_c, tau_db=policy.tau_db,
                               ell_max_ms=policy.ell_max_ms,
                               band_set=band_set)
    tau_grid = DEFAULT_TAU_GRID if tau_grid is None else np.asarray(tau_grid)
    if np.any(np.diff(tau_grid) <= 0):
        raise ValueError("tau grid must be strictly ascending")
    entries = load_manifest(manifest_path)
    scorer = PairScorer(manifest_path, policy, db_offset)

    legit = [scorer.score_entry(e) for e in entries]
    attack = [scorer.score_attack(v.phone_wav, a.computer_wav)
              for v, a in _attack_pairings(entries)]
    legit_scores = np.array([o.score for o in legit if not o.quiet])
    attack_scores = np.array([o.score for o in attack if not o.quiet])

    curve = _rates_over_grid(legit_scores, attack_scores, tau_grid)
    eer = _interpolate_eer(curve)
    groups = [
        GroupRate("legitimate", int(np.sum(legit_scores <= policy.tau_c)),
                  legit_scores.size,
                  excluded=len(legit) - legit_scores.size),
        GroupRate("attack", int(np.sum(attack_scores > policy.tau_c)),
                  attack_scores.size,
                  excluded=len(attack) - attack_scores.size),
    ]
    return RateReport(kind="eer", groups=groups, curve=curve, eer=eer,
                      meta={"policy": policy.to_record(),
                            "tau_grid_size": int(tau_grid.size)})


def optimize_bands(manifest_path: str | Path, alpha: float,
                   tau_grid: Optional[np.ndarray] = None,
                   db_offset: float = DEFAULT_DB_OFFSET,
                   policy: Optional[ScoringPolicy] = None) -> RateReport:
    """Exhaustive search for the band set and threshold minimizing
    f = alpha*FRR + (1-alpha)*FAR.

    Per-band correlations are computed once over the 50 Hz - 8 kHz
    superset; every candidate band set's score is the mean of its slice.
    Ties prefer narrower band sets, then lower thresholds.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    policy = policy or default_policy()
    tau_grid = DEFAULT_TAU_GRID if tau_grid is None else np.asarray(tau_grid)
    entries = load_manifest(manifest_path)
    scorer = PairScorer(manifest_path, policy, db_offset)
    superset = BandSet(OPTIMIZE_LOW_CENTERS[0], OPTIMIZE_HIGH_CENTERS[-1])

    def loud_pairs(outcome_pairs):
        kept = []
        for phone_wav, computer_wav, legit, entry_pair in outcome_pairs:
            phone = scorer.load(phone_wav)
            computer = scorer.load(computer_wav)
            if legit:
                phone = phone.with_captured_at(entry_pair[0])
                computer = computer.with_captured_at(entry_pair[1])
            else:
                phone = phone.with_captured_at(0)
                computer = computer.with_captured_at(0)
            if (average_power_db(phone, db_offset) > policy.tau_db
                    and average_power_db(computer, db_offset) > policy.tau_db):
                kept.append((phone, computer))
        return kept

    legit_pairs = loud_pairs(
        [(e.phone_wav, e.computer_wav, True,
          (e.phone_captured_at, e.computer_captured_at)) for e in entries])
    attack_pairs = loud_pairs(
        [(v.phone_wav, a.computer_wav, False, None)
         for v, a in _attack_pairings(entries)])

    legit_matrix = scorer.band_matrix(legit_pairs, superset)
    attack_matrix = scorer.band_matrix(attack_pairs, superset)
    centers = superset.centers

    candidates = enumerate_band_sets()
    best = None
    for low, high in candidates:
        idx = [i for i, c in enumerate(centers) if low <= c <= high]
        legit_scores = legit_matrix[:, idx].mean(axis=1)
        attack_scores = attack_matrix[:, idx].mean(axis=1)
        for tau in tau_grid:
            frr = float(np.mean(legit_scores <= tau))
            far = float(np.mean(attack_scores > tau))
            f = alpha * frr + (1 - alpha) * far
            key = (f, len(idx), float(tau))
            if best is None or key < best[0]:
                best = (key, (low, high, float(tau), frr, far))

    (f, _, _), (low, high, tau, frr, far) = best
    return RateReport(
        kind="optimize-bands",
        groups=[GroupRate("legitimate", int(round(frr * len(legit_pairs))),
                          len(legit_pairs)),
                GroupRate("attack", int(round(far * len(attack_pairs))),
                          len(attack_pairs))],
        meta={"alpha": alpha, "band_low_hz": low, "band_high_hz": high,
              "tau_c": tau, "objective": f, "frr": frr, "far": far,
              "search_space": len(candidates)})


def simulate_same_media(source_wav: str | Path,
                        delay_ms: float | tuple[float, float],
                        trials: int,
                        policy: Optional[ScoringPolicy] = None,
                        duration_ms: int = 3500,
                        seed: int = 1,
                        db_offset: float = DEFAULT_DB_OFFSET) -> RateReport:
    """Same-media attack: victim and attacker sample the same source,
    offset by a provider delay. Reports FAR over the trials.

    delay_ms may be a constant or a (low, high) uniform range.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    policy = policy or default_policy()
    source = resample(decode_wav(Path(source_wav).read_bytes()),
                      CANONICAL_FS)
    rng = np.random.default_rng(seed)
    fs = source.fs
    n = round(duration_ms / 1000 * fs)

    def draw_delay() -> float:
        if isinstance(delay_ms, (tuple, list)):
            return float(rng.uniform(delay_ms[0], delay_ms[1]))
        return float(delay_ms)

    accepted = scored = excluded = 0
    for _ in range(trials):
        delay = draw_delay()
        shift = round(delay / 1000 * fs)
        latest = source.pcm.size - n - shift
        if latest < 0:
            raise ValueError("source too short for this delay and duration")
        start = int(rng.integers(0, latest + 1))
        victim = AudioSample.from_pcm(source.pcm[start:start + n], fs)
        attacker = AudioSample.from_pcm(
            source.pcm[start + shift:start + shift + n], fs)
        quiet = (average_power_db(victim, db_offset) <= policy.tau_db
                 or average_power_db(attacker, db_offset) <= policy.tau_db)
        if quiet:
            excluded += 1
            continue
        scored += 1
        values = band_correlations(victim, attacker, policy.band_set,
                                   policy.ell_max_ms)
        if float(np.mean(values)) > policy.tau_c:
            accepted += 1
    return RateReport(
        kind="same-media",
        groups=[GroupRate("all", accepted, scored, excluded=excluded)],
        meta={"policy": policy.to_record(), "trials": trials,
              "delay_ms": list(delay_ms) if isinstance(delay_ms, (tuple, list))
              else delay_ms,
              "duration_ms": duration_ms, "seed": seed})
