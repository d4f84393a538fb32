"""Evaluation harness: synthetic corpora, FRR/FAR/EER measurement, band-set
optimization and same-media attack simulation."""

from .manifest import ManifestEntry, load_manifest, save_manifest
from .rates import (compute_frr, compute_far, compute_entry_far, sweep_eer,
                    optimize_bands, simulate_same_media)
from .report import GroupRate, RateReport, write_report
from .synth import SynthSpec, synth_generate, ambient_track

__all__ = [
    "ManifestEntry", "load_manifest", "save_manifest",
    "compute_frr", "compute_far", "compute_entry_far", "sweep_eer",
    "optimize_bands", "simulate_same_media",
    "GroupRate", "RateReport", "write_report",
    "SynthSpec", "synth_generate", "ambient_track",
]
