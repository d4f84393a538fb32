"""Rate reports and their CSV/JSON serialization."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional


@dataclass(frozen=True)
class GroupRate:
    """Numerator/denominator pair for one label group.

    `denominator` counts pairs that actually went through scoring;
    `excluded` counts pairs dropped by the power gate (reported, never
    silently discarded). An empty group has rate None, not zero.
    """

    label: str
    numerator: int
    denominator: int
    excluded: int = 0

    @property
    def rate(self) -> Optional[float]:
        if self.denominator == 0:
            return None
        return self.numerator / self.denominator


@dataclass
class RateReport:
    kind: str  # frr | far | eer | same-media | optimize-bands
    groups: list[GroupRate] = field(default_factory=list)
    curve: list[tuple[float, float, float]] = field(default_factory=list)
    eer: Optional[dict] = None
    meta: dict = field(default_factory=dict)

    def group(self, label: str) -> GroupRate:
        for g in self.groups:
            if g.label == label:
                return g
        raise KeyError(label)

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "groups": [asdict(g) for g in self.groups],
            "curve": [list(point) for point in self.curve],
            "eer": self.eer,
            "meta": self.meta,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RateReport":
        obj = json.loads(text)
        return cls(kind=obj["kind"],
                   groups=[GroupRate(**g) for g in obj.get("groups", [])],
                   curve=[tuple(p) for p in obj.get("curve", [])],
                   eer=obj.get("eer"),
                   meta=obj.get("meta", {}))


def _format_rate(rate: Optional[float]) -> str:
    return "" if rate is None else f"{rate:.6f}"


def write_rate_csv(report: RateReport, path: str | Path) -> Path:
    path = Path(path)
    lines = ["group,numerator,denominator,rate"]
    for g in report.groups:
        lines.append(f"{g.label},{g.numerator},{g.denominator},"
                     f"{_format_rate(g.rate)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_excluded_csv(report: RateReport, path: str | Path) -> Path:
    path = Path(path)
    lines = ["group,excluded"]
    for g in report.groups:
        lines.append(f"{g.label},{g.excluded}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_curve_csv(report: RateReport, path: str | Path) -> Path:
    path = Path(path)
    lines = ["tau,frr,far"]
    for tau, frr, far in report.curve:
        lines.append(f"{tau:.6f},{frr:.6f},{far:.6f}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_report(reports: list[RateReport], out_dir: str | Path,
                 fmt: str = "csv") -> list[Path]:
    """Emit group CSVs (and curve CSVs where present) for each report."""
    if fmt != "csv":
        raise ValueError(f"unsupported report format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, report in enumerate(reports):
        stem = f"{report.kind}_{i:02d}"
        written.append(write_rate_csv(report, out / f"{stem}_rates.csv"))
        if any(g.excluded for g in report.groups):
            written.append(write_excluded_csv(
                report, out / f"{stem}_excluded.csv"))
        if report.curve:
            written.append(write_curve_csv(report, out / f"{stem}_curve.csv"))
    return written
