"""PRELIM: outlier bounding, power transform and standardization."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats
from scipy.special import boxcox as _boxcox

from ..performance import label_good

log = logging.getLogger(__name__)


class ConstantColumn(ValueError):
    pass


@dataclass(frozen=True)
class PrelimConfig:
    """``normalized`` is the toolkit's phi_nrm flag: the data already went
    through a normalization, so no transform is fitted. ``prenormalized``
    says the same thing about a specific input file and also skips it.
    """

    epsilon: float = 0.15
    maximize: bool = False
    bound: bool = False
    normalized: bool = False
    prenormalized: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def transform(self) -> bool:
        return not (self.normalized or self.prenormalized)


@dataclass(frozen=True)
class ColumnTransform:
    """Per-column map fitted by PRELIM, reusable on unseen instances.

    clip to [lower, upper] -> Box-Cox(x + shift, lam) if lam is set -> (x - mean) / sd
    """

    lower: float = -math.inf
    upper: float = math.inf
    shift: float = 0.0
    lam: float | None = None
    mean: float = 0.0
    sd: float = 1.0

    def apply(self, x):
        x = np.clip(np.asarray(x, dtype=float), self.lower, self.upper)
        if self.lam is not None:
            shifted = x + self.shift
            if np.any(shifted <= 0):
                log.warning("value below the fitted Box-Cox support; clamped")
                shifted = np.maximum(shifted, np.finfo(float).tiny ** 0.25)
            x = _boxcox(shifted, self.lam)
        return (x - self.mean) / self.sd

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("lower", "upper"):
            if math.isinf(d[k]):
                d[k] = None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ColumnTransform":
        d = dict(d)
        d["lower"] = -math.inf if d.get("lower") is None else float(d["lower"])
        d["upper"] = math.inf if d.get("upper") is None else float(d["upper"])
        return cls(**d)


def iqr_bounds(x: np.ndarray) -> tuple[float, float]:
    q1, med, q3 = np.percentile(x, [25, 50, 75])
    return float(med - 5 * (q3 - q1)), float(med + 5 * (q3 - q1))


def fit_column(x: np.ndarray, bound: bool, transform: bool) -> ColumnTransform:
    """Fit the PRELIM map of one column. Raises ConstantColumn when it cannot be standardized."""
    x = np.asarray(x, dtype=float)
    lower, upper = iqr_bounds(x) if bound else (-math.inf, math.inf)
    x = np.clip(x, lower, upper)
    if np.ptp(x) == 0:
        raise ConstantColumn("constant column")
    if not transform:
        return ColumnTransform(lower, upper)
    shift = 1.0 - float(x.min())
    lam = None
    try:
        xt, lam = stats.boxcox(x + shift)
        lam = float(lam)
        if not np.isfinite(xt).all() or np.ptp(xt) == 0:
            raise FloatingPointError
    except (ValueError, FloatingPointError):
        lam, xt = None, x
    sd = float(np.std(xt, ddof=1))
    if not sd > 0:
        raise ConstantColumn("constant after transform")
    return ColumnTransform(lower, upper, shift if lam is not None else 0.0, lam, float(np.mean(xt)), sd)


@dataclass
class PrelimResult:
    F: np.ndarray
    Y: np.ndarray
    good: np.ndarray
    kept: list[int]
    dropped: list[int]
    feature_transforms: list[ColumnTransform]
    performance_transforms: list[ColumnTransform | None]


def prelim(F, Y, config: PrelimConfig = PrelimConfig(), feature_names=None) -> PrelimResult:
    """Prepare F and Y for SIFTED and PILOT.

    With ``config.transform`` off and no bounding, F and Y pass through unchanged.
    Constant feature columns are dropped with a warning. Labels come from the
    untransformed Y.
    """
    F = np.asarray(F, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(len(F), -1)
    good = label_good(Y, config.epsilon, config.maximize)
    names = feature_names or [f"f{j}" for j in range(F.shape[1])]

    kept, dropped, ftrans, cols = [], [], [], []
    for j in range(F.shape[1]):
        if not config.transform and not config.bound:
            kept.append(j)
            ftrans.append(ColumnTransform())
            cols.append(F[:, j])
            continue
        try:
            t = fit_column(F[:, j], config.bound, config.transform)
        except ConstantColumn:
            log.warning("dropping constant feature %s", names[j])
            dropped.append(j)
            continue
        kept.append(j)
        ftrans.append(t)
        cols.append(t.apply(F[:, j]))
    Ft = np.column_stack(cols) if cols else np.zeros((len(F), 0))

    ptrans: list[ColumnTransform | None] = []
    ycols = []
    for j in range(Y.shape[1]):
        if not config.transform and not config.bound:
            ptrans.append(ColumnTransform())
            ycols.append(Y[:, j])
            continue
        try:
            t = fit_column(Y[:, j], config.bound, config.transform)
        except ConstantColumn:
            log.warning("performance column %d is constant; centred only", j)
            ptrans.append(None)
            ycols.append(Y[:, j] - Y[:, j].mean())
            continue
        ptrans.append(t)
        ycols.append(t.apply(Y[:, j]))
    Yt = np.column_stack(ycols) if ycols else np.zeros((len(F), 0))
    return PrelimResult(Ft, Yt, good, kept, dropped, ftrans, ptrans)
