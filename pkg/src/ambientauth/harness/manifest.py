"""Labeled audio-pair corpus manifests (line-delimited JSON).

Each entry names one phone/computer recording pair plus the collection
labels used for grouped rate breakdowns. WAV paths are stored relative to
the manifest file.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

# Default label vocabularies; corpora may extend them with new labels.
ENVIRONMENTS = ("Office", "Music", "TV", "Lecture", "TrainStation", "Cafe")
ACTIVITIES = ("silent", "talking", "coughing", "whistling")
PHONE_POSITIONS = ("table", "pocket", "purse")

GROUP_FIELDS = ("subject", "environment", "activity", "phone_position",
                "phone_model", "computer_model")


@dataclass(frozen=True)
class ManifestEntry:
    phone_wav: str
    computer_wav: str
    phone_captured_at: int
    computer_captured_at: int
    subject: str
    environment: str
    activity: str = ""
    phone_position: str = ""
    phone_model: str = ""
    computer_model: str = ""

    def label(self, group_by: str) -> str:
        if group_by not in GROUP_FIELDS:
            raise ValueError(f"cannot group by {group_by!r}; "
                             f"choose one of {GROUP_FIELDS}")
        return getattr(self, group_by)


def save_manifest(entries: list[ManifestEntry], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(asdict(entry), sort_keys=True) + "\n")
    return path


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    """Load and validate a manifest; WAV paths are resolved against the
    manifest's directory and must exist."""
    path = Path(path)
    base = path.parent
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            entry = ManifestEntry(**obj)
            for wav in (entry.phone_wav, entry.computer_wav):
                if not (base / wav).is_file():
                    raise FileNotFoundError(
                        f"{path}:{line_no}: missing WAV {wav}")
            entries.append(entry)
    return entries


def resolve_wav(manifest_path: str | Path, wav: str) -> Path:
    return Path(manifest_path).parent / wav
