"""Per-epoch path classification and clock-correction logic.

For each path the detector assembles one *self* residual -- the path's
reported offset minus the predicted frequency contribution -- and N-1
*cross* residuals against every other path's report.  Differencing two
paths cancels the shared clock terms, so a bias on either path shows up
in the difference; the self residual catches the case where every path
is biased the same way it is.  Each residual becomes an attack/normal
mass through its channel's calibration and the masses are fused with
Dempster's rule.  A path is flagged when the fused attack mass strictly
exceeds one half.

The steering correction is the negated mean of the unflagged reports;
when everything is flagged the clock coasts on the frequency estimate
alone (holdover).  The frequency estimate itself is a least-squares
slope over a sliding window of an accumulated-offset series maintained
by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from ._util import ols_slope
from .clocksim import NoiseConfig
from .evidence import (
    Calibration,
    DEFAULT_STEEPNESS_LOG_ODDS,
    MassPair,
    bpa_from_residual,
    calibrate,
    combine_all,
)

__all__ = [
    "CalibrationSet",
    "EpochRecord",
    "FrequencyEstimate",
    "Verdict",
    "build_calibration_set",
    "classify_paths",
    "compute_update",
    "estimate_frequency",
    "residual_sigmas",
    "residuals_for_path",
]


@dataclass(frozen=True)
class Verdict:
    """Fused assessment of one path at one epoch."""

    path_id: int
    epoch: int
    fused: MassPair
    flagged: bool


@dataclass(frozen=True)
class FrequencyEstimate:
    """Estimated fractional frequency offset (s/s) and the number of points used."""

    drift: float
    window: int


@dataclass(frozen=True)
class EpochRecord:
    """Everything the harness keeps from one epoch of a run."""

    epoch: int
    true_offset: float
    observations: tuple
    verdicts: tuple
    correction: float
    method: str

    def __post_init__(self) -> None:
        if len(self.observations) != len(self.verdicts):
            raise ValueError("need exactly one verdict per observation")


@dataclass(frozen=True)
class CalibrationSet:
    """Calibrations for every residual channel of an N-path detector.

    ``self_cal[i]`` covers path i's self residual; ``cross_cal`` maps the
    unordered pair ``(min(i, j), max(i, j))`` to the calibration of the
    i-vs-j cross residual.
    """

    self_cal: tuple
    cross_cal: Mapping

    def for_pair(self, i: int, j: int) -> Calibration:
        return self.cross_cal[(i, j) if i < j else (j, i)]


def residual_sigmas(noise: NoiseConfig) -> tuple:
    """Attack-free standard deviations of the self and cross residuals.

    A cross residual differences two reports, so the shared clock terms
    cancel and only the two paths' link+measurement noises remain.  The
    self residual keeps the path's own noise plus the clock terms that
    survive steering: the phase-walk increment and the residual error of
    the previous mean-of-N correction.

    Returns ``(self_sigmas, cross_sigmas)`` where ``self_sigmas`` is a
    per-path tuple and ``cross_sigmas`` maps unordered index pairs.
    """
    per_path = [
        sd * sd + sm * sm for sd, sm in zip(noise.sigma_link, noise.sigma_meas)
    ]
    mean_corr_var = sum(per_path) / noise.n_paths**2
    self_sigmas = tuple(
        math.sqrt(v + noise.sigma_offset**2 + mean_corr_var) for v in per_path
    )
    cross_sigmas = {
        (i, j): math.sqrt(per_path[i] + per_path[j])
        for i in range(noise.n_paths)
        for j in range(i + 1, noise.n_paths)
    }
    return self_sigmas, cross_sigmas


def build_calibration_set(
    noise: NoiseConfig,
    p_false_alarm: float,
    p_missed: float,
    mass_ceiling: float = 0.9,
    mass_floor: float = 0.1,
    steepness_log_odds: float = DEFAULT_STEEPNESS_LOG_ODDS,
    two_sided: bool = False,
) -> CalibrationSet:
    """Calibrate every residual channel of an N-path detector from its noise model."""
    self_sigmas, cross_sigmas = residual_sigmas(noise)

    def _cal(sigma: float) -> Calibration:
        return calibrate(
            sigma,
            p_false_alarm,
            p_missed,
            mass_ceiling=mass_ceiling,
            mass_floor=mass_floor,
            steepness_log_odds=steepness_log_odds,
            two_sided=two_sided,
        )

    return CalibrationSet(
        self_cal=tuple(_cal(s) for s in self_sigmas),
        cross_cal={pair: _cal(s) for pair, s in sorted(cross_sigmas.items())},
    )


def residuals_for_path(
    path_id: int, offsets: Sequence[float], drift: float, tau: float
) -> list:
    """Ordered residual magnitudes for one path: self first, then cross vs. each other path.

    Cross residuals follow ascending partner index.
    """
    n = len(offsets)
    if n < 2:
        raise ValueError("need at least two paths")
    if not 0 <= path_id < n:
        raise ValueError(f"path_id {path_id} outside 0..{n - 1}")
    own = offsets[path_id]
    residuals = [abs(own - drift * tau)]
    residuals.extend(abs(own - offsets[j]) for j in range(n) if j != path_id)
    return residuals


def classify_paths(
    offsets: Sequence[float],
    calibrations: CalibrationSet,
    drift: float,
    tau: float,
    variant: str = "DS2",
    epoch: int = 0,
) -> list:
    """Fuse per-path evidence and flag paths whose attack mass exceeds one half.

    Flagging uses a strict comparison, so an exactly balanced fused mass
    does not flag.  Verdict order follows path order.
    """
    n = len(offsets)
    verdicts = []
    for i in range(n):
        residuals = residuals_for_path(i, offsets, drift, tau)
        masses = [bpa_from_residual(residuals[0], calibrations.self_cal[i], variant)]
        k = 1
        for j in range(n):
            if j == i:
                continue
            masses.append(
                bpa_from_residual(residuals[k], calibrations.for_pair(i, j), variant)
            )
            k += 1
        fused = combine_all(masses)
        verdicts.append(Verdict(i, epoch, fused, fused.attack > 0.5))
    return verdicts


def compute_update(
    offsets: Sequence[float],
    verdicts: Sequence[Verdict],
    drift: float,
    tau: float,
    quarantined: Sequence[int] = (),
) -> float:
    """Steering correction: negated mean of trusted reports, or holdover.

    Flagged paths and any explicitly quarantined paths are excluded; if
    nothing remains the clock coasts on the frequency estimate
    (``-drift * tau``).
    """
    if len(offsets) != len(verdicts):
        raise ValueError("need exactly one verdict per offset")
    banned = set(quarantined)
    kept = [
        o
        for o, v in zip(offsets, verdicts)
        if not v.flagged and v.path_id not in banned
    ]
    if not kept:
        return -drift * tau
    return -sum(kept) / len(kept)


def estimate_frequency(
    history: Sequence[float], tau: float, window: int = 30
) -> FrequencyEstimate:
    """Least-squares slope of the most recent ``window`` points of ``history``.

    ``history`` is a consecutive per-epoch series (one value per ``tau``).
    With fewer than two points there is nothing to fit and the estimate
    is zero with a reported window of 0.
    """
    if window < 2:
        raise ValueError("window must be at least 2")
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    points = list(history[-window:])
    if len(points) < 2:
        return FrequencyEstimate(0.0, 0)
    ts = [k * tau for k in range(len(points))]
    return FrequencyEstimate(ols_slope(ts, points), len(points))
