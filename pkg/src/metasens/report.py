"""Container for Sobol' index estimates and its CSV form."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("subset", "kind", "estimate", "std", "estimator", "N", "m", "seed", "mc_se", "flag")


@dataclass(frozen=True)
class SobolEntry:
    subset: tuple          # 0-based variable indices
    kind: str              # "first", "total" or "subset"
    estimate: float
    estimator: str         # pce_analytic | pick_freeze_first | pick_freeze_total | gp_realizations
    std: float = math.nan  # across GP realizations
    N: int = 0
    m: int = 0
    seed: object = None
    mc_se: float = math.nan
    flag: str = ""         # "out_of_range" for raw estimates outside [0, 1]


@dataclass
class SobolReport:
    names: tuple
    entries: list = field(default_factory=list)
    # per-realization estimates for gp_realizations entries, keyed by (subset, kind)
    samples: dict = field(default_factory=dict)

    def add(self, entry: SobolEntry) -> None:
        self.entries.append(entry)

    def get(self, subset, kind=None) -> SobolEntry:
        subset = tuple(sorted(subset))
        for e in self.entries:
            if e.subset == subset and (kind is None or e.kind == kind):
                return e
        raise KeyError(subset)

    def estimate(self, subset, kind=None) -> float:
        return self.get(subset, kind).estimate

    def vector(self, kind: str = "first") -> np.ndarray:
        """Per-variable estimates of the given kind (NaN where absent)."""
        out = np.full(len(self.names), np.nan)
        for e in self.entries:
            if e.kind == kind and len(e.subset) == 1:
                out[e.subset[0]] = e.estimate
        return out

    def label(self, subset) -> str:
        return "+".join(self.names[i] for i in subset)

    def rows(self):
        for e in self.entries:
            yield {
                "subset": self.label(e.subset),
                "kind": e.kind,
                "estimate": repr(float(e.estimate)),
                "std": repr(float(e.std)),
                "estimator": e.estimator,
                "N": e.N,
                "m": e.m,
                "seed": "" if e.seed is None else e.seed,
                "mc_se": repr(float(e.mc_se)),
                "flag": e.flag,
            }

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerows(self.rows())

    @classmethod
    def from_csv(cls, path, names) -> "SobolReport":
        names = tuple(names)
        rep = cls(names)
        with open(Path(path), newline="") as fh:
            for row in csv.DictReader(fh):
                subset = tuple(sorted(names.index(s) for s in row["subset"].split("+")))
                rep.add(
                    SobolEntry(
                        subset,
                        row["kind"],
                        float(row["estimate"]),
                        row["estimator"],
                        float(row["std"]),
                        int(row["N"]),
                        int(row["m"]),
                        row["seed"] or None,
                        float(row["mc_se"]),
                        row["flag"],
                    )
                )
        return rep


def range_flag(value: float) -> str:
    return "" if 0.0 <= value <= 1.0 else "out_of_range"
