"""Eight-number summaries used by most feature extractors."""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

STAT_NAMES = ("min", "max", "mean", "median", "sd", "var", "skew", "kurtosis")


@dataclass(frozen=True)
class StatSummary:
    """Summary of a sample.

    ``var``/``sd`` use the n-1 denominator. ``skew`` is m3 / sd**3 and
    ``kurtosis`` is m4 / sd**4 - 3 (excess), with central moments m_k taken
    over n. Constant samples get zero spread, skew and kurtosis; an empty
    sample summarizes to all zeros.
    """

    min: float = 0.0
    max: float = 0.0
    mean: float = 0.0
    median: float = 0.0
    sd: float = 0.0
    var: float = 0.0
    skew: float = 0.0
    kurtosis: float = 0.0

    @classmethod
    def of(cls, values) -> "StatSummary":
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            return cls()
        mean = float(x.mean())
        dev = x - mean
        var = float(dev @ dev / (x.size - 1)) if x.size > 1 else 0.0
        if var <= 0.0 or np.ptp(x) == 0.0:
            var, skew, kurt = 0.0, 0.0, 0.0
        else:
            m3 = float(np.mean(dev**3))
            m4 = float(np.mean(dev**4))
            skew = m3 / var**1.5
            kurt = m4 / var**2 - 3.0
        return cls(
            min=float(x.min()),
            max=float(x.max()),
            mean=mean,
            median=float(np.median(x)),
            sd=float(np.sqrt(var)),
            var=var,
            skew=skew,
            kurtosis=kurt,
        )

    def as_features(self, prefix: str) -> dict[str, float]:
        return {f"{prefix}_{f.name}": v for f, v in zip(fields(self), astuple(self))}


def summary_names(prefix: str) -> list[str]:
    return [f"{prefix}_{s}" for s in STAT_NAMES]
