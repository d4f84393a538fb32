"""The accept/reject rule: power gates first, then the similarity
threshold; plus the preset table for operators that weight usability and
security differently."""
import numpy as np

from ambientauth import default_policy, evaluate, policy_for_weighting
from ambientauth.audio import AudioSample, CANONICAL_FS
from ambientauth.harness.synth import ambient_track

p = default_policy()
print("default operating point:")
for key, value in p.to_record().items():
    print(f"  {key:>12} = {value}")

print("\nweighted presets (alpha weighs false rejections, 1-alpha false "
      "accepts):")
print(f"{'alpha':>6} | {'band set':>16} | tau_c")
for tenth in range(1, 10):
    alpha = tenth / 10
    preset = policy_for_weighting(alpha)
    label = (f"[{preset.band_set.low_center:g}Hz-"
             f"{preset.band_set.high_center:g}Hz]")
    print(f"{alpha:>6.1f} | {label:>16} | {preset.tau_c}")

# the gate rejects quiet recordings before similarity is even computed
rng = np.random.default_rng(3)
fs = CANONICAL_FS
n = round(3.5 * fs)
track = ambient_track(rng, n, fs)


def at_db(pcm, db):
    rms = 10 ** ((db - 96) / 20)
    return AudioSample.from_pcm(pcm * rms / np.sqrt(np.mean(pcm ** 2)), fs)


print("\nverdicts for one shared recording at different loudness:")
for phone_db, computer_db in ((55, 60), (30, 60), (55, 35)):
    verdict = evaluate(at_db(track, phone_db), at_db(track, computer_db))
    score = "-" if verdict.score is None else f"{verdict.score:.3f}"
    print(f"  phone {phone_db} dB, computer {computer_db} dB -> "
          f"{verdict.reason:<20} score={score}")
