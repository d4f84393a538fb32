import json
from pathlib import Path

import numpy as np
import pytest

from ambientauth.audio import AudioSample, CANONICAL_FS, encode_wav
from ambientauth.decision import default_policy
from ambientauth.errors import SingleSubject
from ambientauth.harness import (GroupRate, RateReport, compute_entry_far,
                                 compute_far, compute_frr, load_manifest,
                                 optimize_bands, save_manifest,
                                 simulate_same_media, sweep_eer,
                                 synth_generate, SynthSpec)
from ambientauth.harness.manifest import ManifestEntry
from ambientauth.harness.rates import enumerate_band_sets
from ambientauth.harness.report import (write_curve_csv, write_rate_csv,
                                        write_report)
from ambientauth.harness.synth import media_track_wav
from ambientauth.harness.cli import main as cli_main

from conftest import colocated_pair, ambient_pcm

FS = CANONICAL_FS


def write_pair_corpus(root: Path, pairs) -> Path:
    """pairs: list of (phone_pcm, computer_pcm, subject, environment)."""
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, (phone, computer, subject, environment) in enumerate(pairs):
        pw, cw = f"p{i:03d}.wav", f"c{i:03d}.wav"
        at = 1_700_000_000_000 + i * 10_000
        (root / pw).write_bytes(encode_wav(AudioSample.from_pcm(phone, FS)))
        (root / cw).write_bytes(encode_wav(
            AudioSample.from_pcm(computer, FS)))
        entries.append(ManifestEntry(
            phone_wav=pw, computer_wav=cw, phone_captured_at=at,
            computer_captured_at=at, subject=subject,
            environment=environment))
    return save_manifest(entries, root / "manifest.jsonl")


class TestSynth:
    def test_deterministic_bytes(self, tmp_path):
        spec = SynthSpec(pairs=2, seed=7, duration_ms=3000)
        m1 = synth_generate(spec, tmp_path / "a")
        m2 = synth_generate(spec, tmp_path / "b")
        assert m1.read_bytes() == m2.read_bytes()
        for name in ("phone_0000.wav", "computer_0001.wav"):
            assert (tmp_path / "a" / name).read_bytes() \
                == (tmp_path / "b" / name).read_bytes()

    def test_different_seed_differs(self, tmp_path):
        m1 = synth_generate(SynthSpec(pairs=1, seed=1, duration_ms=3000),
                            tmp_path / "a")
        m2 = synth_generate(SynthSpec(pairs=1, seed=2, duration_ms=3000),
                            tmp_path / "b")
        assert (tmp_path / "a" / "phone_0000.wav").read_bytes() \
            != (tmp_path / "b" / "phone_0000.wav").read_bytes()

    def test_manifest_loads_and_validates(self, tmp_path):
        manifest = synth_generate(SynthSpec(pairs=3, duration_ms=3000),
                                  tmp_path)
        entries = load_manifest(manifest)
        assert len(entries) == 3
        assert {e.subject for e in entries} == {"s00", "s01"}

    def test_missing_wav_detected(self, tmp_path):
        manifest = synth_generate(SynthSpec(pairs=1, duration_ms=3000),
                                  tmp_path)
        (tmp_path / "phone_0000.wav").unlink()
        with pytest.raises(FileNotFoundError):
            load_manifest(manifest)


class TestComputeFrr:
    def test_identical_pairs_never_rejected(self, tmp_path, rng):
        pairs = []
        for i in range(3):
            pcm = ambient_pcm(rng, 3 * FS)
            pairs.append((pcm, pcm, "s00", "Office"))
        manifest = write_pair_corpus(tmp_path, pairs)
        report = compute_frr(manifest)
        g = report.group("all")
        assert (g.numerator, g.denominator, g.excluded) == (0, 3, 0)
        assert g.rate == 0.0

    def test_quiet_pairs_excluded_not_counted(self, tmp_path, rng):
        loud = ambient_pcm(rng, 3 * FS, rms=0.1)
        quiet = ambient_pcm(rng, 3 * FS, rms=1e-4)  # ~16 dB, under the gate
        manifest = write_pair_corpus(tmp_path, [
            (loud, loud, "s00", "Office"),
            (quiet, quiet, "s00", "Library"),
        ])
        report = compute_frr(manifest, group_by="environment")
        office = report.group("Office")
        library = report.group("Library")
        assert office.rate == 0.0
        assert library.denominator == 0 and library.excluded == 1
        assert library.rate is None  # absent, not zero

    def test_grouping_by_label(self, tmp_path, rng):
        pairs = []
        for env in ("Office", "Cafe", "Office"):
            a, b = colocated_pair(rng, 3 * FS, snr_db=20, lag_samples=500)
            pairs.append((a, b, "s00", env))
        manifest = write_pair_corpus(tmp_path, pairs)
        report = compute_frr(manifest, group_by="environment")
        assert report.group("Office").denominator == 2
        assert report.group("Cafe").denominator == 1


class TestComputeFar:
    def _corpus(self, tmp_path, rng, per_subject=2):
        pairs = []
        for s in ("s00", "s01"):
            for _ in range(per_subject):
                a, b = colocated_pair(rng, 3 * FS, snr_db=10,
                                      lag_samples=400)
                pairs.append((a, b, s, "Office"))
        return write_pair_corpus(tmp_path, pairs)

    def test_pair_count_formula(self, tmp_path, rng):
        manifest = self._corpus(tmp_path, rng, per_subject=2)
        report = compute_far(manifest)
        # 2 subjects x (2 phone x 2 computer) per direction
        assert report.meta["attack_pairs"] == 8

    def test_single_subject_rejected(self, tmp_path, rng):
        a, b = colocated_pair(rng, 3 * FS)
        manifest = write_pair_corpus(tmp_path, [(a, b, "s00", "Office")])
        with pytest.raises(SingleSubject):
            compute_far(manifest)

    def test_degenerate_colocated_attack_accepted(self, tmp_path, rng):
        # the attacker somehow captures the victim's own environment:
        # identical content must be accepted (the known co-location limit)
        pcm = ambient_pcm(rng, 3 * FS)
        manifest = write_pair_corpus(tmp_path, [
            (pcm, pcm, "victim", "Office"),
            (pcm, pcm, "attacker", "Office"),
        ])
        report = compute_far(manifest)
        g = report.group("Office")
        assert g.numerator == g.denominator  # every crossing accepted

    def test_independent_subjects_low_far(self, tmp_path, rng):
        pairs = []
        for s in ("s00", "s01"):
            for _ in range(2):
                pairs.append((ambient_pcm(rng, round(3.5 * FS)),
                              ambient_pcm(rng, round(3.5 * FS)),
                              s, "Office"))
        manifest = write_pair_corpus(tmp_path, pairs)
        report = compute_far(manifest)
        g = report.group("Office")
        assert g.denominator == 8
        assert g.rate <= 0.05


@pytest.fixture(scope="module")
def separable_manifest(tmp_path_factory):
    rng = np.random.default_rng(99)
    root = tmp_path_factory.mktemp("eer")
    pairs = []
    for s in ("s00", "s01", "s00", "s01"):
        a, b = colocated_pair(rng, 3 * FS, snr_db=10, lag_samples=900)
        pairs.append((a, b, s, "Office"))
    return write_pair_corpus(root, pairs)


class TestSweepEer:
    def test_monotone_curves_and_extremes(self, separable_manifest):
        report = sweep_eer(separable_manifest,
                           tau_grid=np.arange(0, 1.0001, 0.01))
        taus = [p[0] for p in report.curve]
        frrs = [p[1] for p in report.curve]
        fars = [p[2] for p in report.curve]
        assert taus == sorted(taus)
        assert all(b >= a for a, b in zip(frrs, frrs[1:]))
        assert all(b <= a for a, b in zip(fars, fars[1:]))
        assert frrs[0] == 0.0  # no legitimate pair scores exactly zero
        assert fars[-1] == 0.0  # nothing exceeds tau = 1

    def test_separable_corpus_has_zero_eer(self, separable_manifest):
        report = sweep_eer(separable_manifest)
        assert report.eer["eer"] == 0.0
        # crossing sits between the attack ceiling and the legit floor
        assert 0.13 < report.eer["tau"] < 0.9

    def test_extreme_grid(self, separable_manifest):
        report = sweep_eer(separable_manifest,
                           tau_grid=np.array([0.0, 1.0]))
        (t0, frr0, far0), (t1, frr1, far1) = report.curve
        assert frr0 == 0.0 and far1 == 0.0


class TestOptimizeBands:
    def test_search_space_enumeration(self):
        sets = enumerate_band_sets()
        assert len(sets) == 48
        lows = {low for low, _ in sets}
        highs = {high for _, high in sets}
        assert lows == {50, 63, 80, 100}
        assert min(highs) == 630 and max(highs) == 8000

    def test_low_band_corpus_selects_low_bands(self, tmp_path, rng):
        # legitimate correlation only below ~800 Hz: the shared track is
        # lowpassed; everything above is per-device noise
        from scipy import fft as sfft
        pairs = []
        n = 3 * FS
        for s in ("s00", "s01", "s00", "s01"):
            track = ambient_pcm(rng, n)
            spec = sfft.rfft(track)
            freqs = np.fft.rfftfreq(n, 1 / FS)
            spec[freqs > 800] = 0
            shared = sfft.irfft(spec, n)
            a = shared + 0.02 * rng.standard_normal(n)
            b = shared + 0.02 * rng.standard_normal(n)
            peak = max(np.abs(a).max(), np.abs(b).max())
            pairs.append((a / peak * 0.8, b / peak * 0.8, s, "Office"))
        manifest = write_pair_corpus(tmp_path, pairs)
        report = optimize_bands(manifest, alpha=0.5)
        assert report.meta["search_space"] == 48
        # ties break toward narrower band sets, so the winner is some
        # contiguous run inside the correlated 50-800 Hz region
        assert report.meta["band_low_hz"] >= 50
        assert report.meta["band_high_hz"] <= 800
        assert report.meta["objective"] == 0.0

    def test_optimum_beats_default_policy(self, tmp_path, rng):
        pairs = []
        for s in ("s00", "s01"):
            for _ in range(2):
                a, b = colocated_pair(rng, 3 * FS, snr_db=10,
                                      lag_samples=700)
                pairs.append((a, b, s, "Office"))
        manifest = write_pair_corpus(tmp_path, pairs)
        report = optimize_bands(manifest, alpha=0.4)
        # argmin over a space containing the default cannot be worse
        default = default_policy()
        sweep = sweep_eer(manifest, band_set=default.band_set,
                          tau_grid=np.array([default.tau_c]))
        _, frr, far = sweep.curve[0]
        f_default = 0.4 * frr + 0.6 * far
        assert report.meta["objective"] <= f_default + 1e-12

    def test_alpha_validation(self, tmp_path, rng):
        a, b = colocated_pair(rng, 3 * FS)
        manifest = write_pair_corpus(tmp_path, [(a, b, "s00", "Office")])
        with pytest.raises(ValueError):
            optimize_bands(manifest, alpha=0.0)


@pytest.fixture(scope="module")
def source_wav(tmp_path_factory):
    path = tmp_path_factory.mktemp("media") / "broadcast.wav"
    path.write_bytes(media_track_wav(seed=5, duration_ms=16_000))
    return path


class TestSameMedia:
    def test_zero_delay_always_accepted(self, source_wav):
        report = simulate_same_media(source_wav, delay_ms=0.0, trials=8,
                                     duration_ms=3000, seed=3)
        assert report.group("all").rate == 1.0

    def test_delay_within_lag_window_accepted(self, source_wav):
        report = simulate_same_media(source_wav, delay_ms=(0.0, 150.0),
                                     trials=8, duration_ms=3000, seed=4)
        assert report.group("all").rate == 1.0

    def test_large_delay_fails(self, source_wav):
        report = simulate_same_media(source_wav, delay_ms=10_000.0,
                                     trials=8, duration_ms=3500, seed=5)
        assert report.group("all").rate < 0.05

    def test_source_too_short(self, source_wav):
        with pytest.raises(ValueError):
            simulate_same_media(source_wav, delay_ms=20_000.0, trials=1)


class TestReports:
    def test_group_csv_row_format(self, tmp_path):
        report = RateReport(kind="frr", groups=[GroupRate("Office", 1, 310)])
        path = write_rate_csv(report, tmp_path / "rates.csv")
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "group,numerator,denominator,rate"
        assert lines[1] == "Office,1,310,0.003226"

    def test_empty_report_is_header_only(self, tmp_path):
        paths = write_report([], tmp_path)
        assert paths == []
        path = write_rate_csv(RateReport(kind="frr"), tmp_path / "empty.csv")
        assert path.read_text() == "group,numerator,denominator,rate\n"

    def test_absent_rate_is_empty_cell(self, tmp_path):
        report = RateReport(kind="frr",
                            groups=[GroupRate("Quiet", 0, 0, excluded=4)])
        path = write_rate_csv(report, tmp_path / "rates.csv")
        assert path.read_text().strip().split("\n")[1] == "Quiet,0,0,"

    def test_curve_rows_ascending(self, tmp_path):
        report = RateReport(kind="eer",
                            curve=[(0.0, 0.0, 1.0), (0.5, 0.2, 0.1),
                                   (1.0, 1.0, 0.0)])
        path = write_curve_csv(report, tmp_path / "curve.csv")
        lines = path.read_text().strip().split("\n")[1:]
        taus = [float(line.split(",")[0]) for line in lines]
        assert taus == sorted(taus)

    def test_json_round_trip(self):
        report = RateReport(kind="far",
                            groups=[GroupRate("Office", 2, 100, excluded=1)],
                            curve=[(0.1, 0.0, 0.5)],
                            eer={"eer": 0.25, "tau": 0.3},
                            meta={"seed": 1})
        back = RateReport.from_json(report.to_json())
        assert back.kind == report.kind
        assert back.groups == report.groups
        assert back.curve == report.curve
        assert back.eer == report.eer
        assert back.meta == report.meta


class TestCli:
    def test_synth_then_frr(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        assert cli_main(["synth", "--out-dir", str(corpus), "--pairs", "2",
                         "--duration-ms", "3000", "--seed", "11"]) == 0
        out_dir = tmp_path / "out"
        assert cli_main(["frr", "--manifest", str(corpus / "manifest.jsonl"),
                         "--group-by", "environment",
                         "--out-dir", str(out_dir)]) == 0
        captured = capsys.readouterr().out
        assert '"kind": "frr"' in captured
        assert (out_dir / "frr.json").is_file()
        assert (out_dir / "frr_00_rates.csv").is_file()

    def test_same_media_cli(self, tmp_path, capsys):
        source = tmp_path / "src.wav"
        source.write_bytes(media_track_wav(seed=2, duration_ms=8000))
        assert cli_main(["same-media", "--source", str(source),
                         "--delay-ms", "0", "--trials", "3",
                         "--duration-ms", "3000"]) == 0
        assert '"kind": "same-media"' in capsys.readouterr().out

    def test_report_subcommand(self, tmp_path):
        report = RateReport(kind="frr",
                            groups=[GroupRate("Office", 1, 310)])
        src = tmp_path / "r.json"
        src.write_text(report.to_json())
        out = tmp_path / "csvs"
        assert cli_main(["report", "--in", str(src),
                         "--out-dir", str(out)]) == 0
        assert (out / "frr_00_rates.csv").is_file()

    def test_tau_grid_parsing(self, tmp_path, capsys):
        corpus = tmp_path / "corpus"
        cli_main(["synth", "--out-dir", str(corpus), "--pairs", "4",
                  "--duration-ms", "3000", "--seed", "3"])
        assert cli_main(["eer", "--manifest",
                         str(corpus / "manifest.jsonl"),
                         "--tau-grid", "0:1:0.25"]) == 0
        out = capsys.readouterr().out
        assert '"tau_grid_size": 5' in out
