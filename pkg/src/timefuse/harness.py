"""Scenario configuration, the end-to-end simulation loop, presets and file output.

A :class:`Scenario` pins everything a run needs -- clock and path noise,
the event schedule rules, the steering method, detector calibration
inputs and the seed -- so that a run is a pure function of the scenario.
``run_scenario`` executes the epoch loop and returns a :class:`RunResult`
with the per-epoch ledger and the derived metrics; ``emit`` writes the
result as CSV (one row per epoch), a human-readable summary table, or
(tau, tdev) plot data.  Emitted CSVs carry enough metadata in a comment
preamble to recompute every metric from the file alone, which is what
``parse_run_csv`` plus ``parsed_stats`` do.

All offsets are held in seconds internally; files report picoseconds
with three decimals.  Path indices are 0-based in code and 1-based in
file headers and tables.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .baselines import fta_update, make_single_state, single_update
from .clocksim import (
    ClockState,
    EventSchedule,
    NoiseConfig,
    PeriodicAttackRule,
    PeriodicJumpRule,
    RngStreams,
    build_schedule,
    observe_path,
    step_clock,
)
from .evidence import DEFAULT_STEEPNESS_LOG_ODDS, VACUOUS, VARIANTS
from .fusion import (
    CalibrationSet,
    EpochRecord,
    Verdict,
    build_calibration_set,
    classify_paths,
    compute_update,
    estimate_frequency,
)
from .metrics import DetectionCounts, TdevCurve, per_path_counts, precision_recall, tdev_curve

__all__ = [
    "METHODS",
    "PRESET_NAMES",
    "ParsedRun",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "emit",
    "format_sweep_table",
    "parse_run_csv",
    "parsed_stats",
    "preset",
    "run_csv_text",
    "run_scenario",
    "scenario_from_dict",
    "scenario_from_json",
    "scenario_to_json",
    "summarize_parsed",
    "summarize_run",
    "sweep",
    "write_run_csv",
]

#: Steering methods a scenario may select.
METHODS = VARIANTS + ("FTA", "Single")

#: Built-in scenario names, in sweep order.
PRESET_NAMES = ("fig3", "fig4", "fig5a", "fig5b", "fig5c", "fig5d", "exp3")

_NAME_RE = re.compile(r"^[A-Za-z0-9._-]{1,64}$")


class ScenarioError(ValueError):
    """A scenario field failed validation; the message names the field."""


def _canon_method(method: str) -> str:
    for m in METHODS:
        if method.upper() == m.upper():
            return m
    raise ScenarioError(f"method: unknown {method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class Scenario:
    """Complete, validated configuration of one simulation run.

    Noise defaults are the standard bench values: 10 ps phase walk,
    1 ps/s frequency walk, 10 ps link noise and 25 ps measurement noise
    per path, at a 1 s epoch.  ``sigma_link``/``sigma_meas`` accept a
    scalar (applied to every path) or one value per path.
    """

    name: str
    n_paths: int
    n_epochs: int
    method: str = "DS2"
    seed: int = 1
    tau: float = 1.0
    sigma_offset: float = 10e-12
    sigma_drift: float = 1e-12
    sigma_link: float | tuple = 10e-12
    sigma_meas: float | tuple = 25e-12
    attack_rules: tuple = ()
    jump_rules: tuple = ()
    p_false_alarm: float = 1e-6
    p_missed: float = 1e-6
    mass_ceiling: float = 0.74
    mass_floor: float = 0.26
    steepness_log_odds: float = DEFAULT_STEEPNESS_LOG_ODDS
    two_sided: bool = False
    window: int = 30
    quarantine: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not _NAME_RE.match(self.name):
            raise ScenarioError(
                "name: must be 1-64 characters of letters, digits, '.', '_' or '-'"
            )
        for fname in ("n_paths", "n_epochs", "seed", "window", "quarantine"):
            v = getattr(self, fname)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ScenarioError(f"{fname}: must be an integer")
        if self.n_paths < 2:
            raise ScenarioError("n_paths: need at least 2")
        if self.n_epochs < 1:
            raise ScenarioError("n_epochs: need at least 1")
        if self.seed < 0:
            raise ScenarioError("seed: must be non-negative")
        if self.window < 2:
            raise ScenarioError("window: need at least 2 epochs")
        if self.quarantine < 0:
            raise ScenarioError("quarantine: must be non-negative")
        object.__setattr__(self, "method", _canon_method(self.method))
        if self.method == "FTA" and self.n_paths < 3:
            raise ScenarioError("n_paths: FTA needs at least 3 paths")
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise ScenarioError("tau: must be positive")
        for fname in ("sigma_offset", "sigma_drift"):
            v = getattr(self, fname)
            if not (isinstance(v, float) and math.isfinite(v) and v >= 0.0):
                raise ScenarioError(f"{fname}: must be a non-negative number")
        for fname in ("sigma_link", "sigma_meas"):
            v = getattr(self, fname)
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                v = float(v)
            else:
                try:
                    v = tuple(float(s) for s in v)
                except (TypeError, ValueError):
                    raise ScenarioError(
                        f"{fname}: must be a number or one number per path"
                    ) from None
                if len(v) != self.n_paths:
                    raise ScenarioError(
                        f"{fname}: got {len(v)} values for {self.n_paths} paths"
                    )
            scalars = (v,) if isinstance(v, float) else v
            if any(not (math.isfinite(s) and s >= 0.0) for s in scalars):
                raise ScenarioError(f"{fname}: values must be non-negative")
            object.__setattr__(self, fname, v)
        for fname in ("p_false_alarm", "p_missed"):
            v = getattr(self, fname)
            if not 0.0 < v < 0.5:
                raise ScenarioError(f"{fname}: must lie in (0, 0.5)")
        if not 0.0 <= self.mass_floor < 0.5 < self.mass_ceiling <= 1.0:
            raise ScenarioError(
                "mass_floor/mass_ceiling: need 0 <= floor < 0.5 < ceiling <= 1"
            )
        if not (math.isfinite(self.steepness_log_odds) and self.steepness_log_odds > 0.0):
            raise ScenarioError("steepness_log_odds: must be positive")
        object.__setattr__(self, "attack_rules", tuple(self.attack_rules))
        object.__setattr__(self, "jump_rules", tuple(self.jump_rules))
        for rule in self.attack_rules:
            if not rule.paths:
                raise ScenarioError("attack_rules: rule with no paths")
            bad = [p for p in rule.paths if not 0 <= p < self.n_paths]
            if bad:
                raise ScenarioError(f"attack_rules: paths {bad} outside 0..{self.n_paths - 1}")
            if rule.duration_epochs < 1:
                raise ScenarioError("attack_rules: duration_epochs must be >= 1")
            if not (math.isfinite(rule.magnitude_s) and rule.magnitude_s != 0.0):
                raise ScenarioError("attack_rules: magnitude_s must be non-zero")
        for rule in self.jump_rules:
            if not (math.isfinite(rule.magnitude_s) and rule.magnitude_s != 0.0):
                raise ScenarioError("jump_rules: magnitude_s must be non-zero")

    @property
    def warmup(self) -> int:
        """Epochs excluded from scoring while the frequency estimate converges."""
        return min(self.window, self.n_epochs)

    def noise(self) -> NoiseConfig:
        def spread(v):
            return (v,) * self.n_paths if isinstance(v, float) else v

        return NoiseConfig(
            sigma_offset=self.sigma_offset,
            sigma_drift=self.sigma_drift,
            sigma_link=spread(self.sigma_link),
            sigma_meas=spread(self.sigma_meas),
            tau=self.tau,
        )

    def schedule(self) -> EventSchedule:
        try:
            return build_schedule(
                self.attack_rules, self.jump_rules, self.n_epochs, self.tau
            )
        except ValueError as exc:
            raise ScenarioError(f"event rules: {exc}") from exc

    def calibrations(self) -> CalibrationSet:
        return build_calibration_set(
            self.noise(),
            self.p_false_alarm,
            self.p_missed,
            mass_ceiling=self.mass_ceiling,
            mass_floor=self.mass_floor,
            steepness_log_odds=self.steepness_log_odds,
            two_sided=self.two_sided,
        )

    def to_dict(self) -> dict:
        """Nested plain-data form, the inverse of :func:`scenario_from_dict`."""
        return {
            "name": self.name,
            "method": self.method,
            "seed": self.seed,
            "n_paths": self.n_paths,
            "n_epochs": self.n_epochs,
            "tau_s": self.tau,
            "noise": {
                "sigma_offset_s": self.sigma_offset,
                "sigma_drift_ss": self.sigma_drift,
                "sigma_link_s": list(self.sigma_link)
                if isinstance(self.sigma_link, tuple)
                else self.sigma_link,
                "sigma_meas_s": list(self.sigma_meas)
                if isinstance(self.sigma_meas, tuple)
                else self.sigma_meas,
            },
            "detector": {
                "p_false_alarm": self.p_false_alarm,
                "p_missed": self.p_missed,
                "mass_ceiling": self.mass_ceiling,
                "mass_floor": self.mass_floor,
                "steepness_log_odds": self.steepness_log_odds,
                "two_sided": self.two_sided,
                "window_epochs": self.window,
                "quarantine_epochs": self.quarantine,
            },
            "attacks": [
                {
                    "paths": list(r.paths),
                    "period_s": r.period_s,
                    "phase_s": r.phase_s,
                    "magnitude_s": r.magnitude_s,
                    "duration_epochs": r.duration_epochs,
                }
                for r in self.attack_rules
            ],
            "jumps": [
                {
                    "period_s": r.period_s,
                    "phase_s": r.phase_s,
                    "magnitude_s": r.magnitude_s,
                }
                for r in self.jump_rules
            ],
        }


def _reject_unknown(d: dict, allowed: Iterable[str], context: str) -> None:
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ScenarioError(f"{context}: unknown keys {unknown}")


def _as_int(value, context: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{context}: must be an integer")
    if isinstance(value, float):
        if not value.is_integer():
            raise ScenarioError(f"{context}: must be an integer")
        value = int(value)
    return value


def _as_float(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{context}: must be a number")
    return float(value)


def scenario_from_dict(data: dict) -> Scenario:
    """Build a :class:`Scenario` from its nested plain-data form.

    Unknown keys anywhere in the structure are rejected so that typos in
    scenario files fail loudly instead of silently using a default.
    """
    if not isinstance(data, dict):
        raise ScenarioError("scenario: expected a mapping at the top level")
    _reject_unknown(
        data,
        ("name", "method", "seed", "n_paths", "n_epochs", "tau_s", "noise", "detector", "attacks", "jumps"),
        "scenario",
    )
    for key in ("name", "n_paths", "n_epochs"):
        if key not in data:
            raise ScenarioError(f"scenario: missing required key {key!r}")
    noise = data.get("noise", {})
    if not isinstance(noise, dict):
        raise ScenarioError("noise: expected a mapping")
    _reject_unknown(
        noise, ("sigma_offset_s", "sigma_drift_ss", "sigma_link_s", "sigma_meas_s"), "noise"
    )
    det = data.get("detector", {})
    if not isinstance(det, dict):
        raise ScenarioError("detector: expected a mapping")
    _reject_unknown(
        det,
        (
            "p_false_alarm",
            "p_missed",
            "mass_ceiling",
            "mass_floor",
            "steepness_log_odds",
            "two_sided",
            "window_epochs",
            "quarantine_epochs",
        ),
        "detector",
    )

    def per_path_sigma(value, context):
        if isinstance(value, (list, tuple)):
            return tuple(_as_float(v, context) for v in value)
        return _as_float(value, context)

    attacks = []
    for k, entry in enumerate(data.get("attacks", [])):
        ctx = f"attacks[{k}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{ctx}: expected a mapping")
        _reject_unknown(
            entry, ("paths", "period_s", "phase_s", "magnitude_s", "duration_epochs"), ctx
        )
        try:
            paths = tuple(_as_int(p, f"{ctx}.paths") for p in entry["paths"])
            attacks.append(
                PeriodicAttackRule(
                    paths=paths,
                    period_s=_as_float(entry["period_s"], f"{ctx}.period_s"),
                    phase_s=_as_float(entry["phase_s"], f"{ctx}.phase_s"),
                    magnitude_s=_as_float(entry["magnitude_s"], f"{ctx}.magnitude_s"),
                    duration_epochs=_as_int(
                        entry.get("duration_epochs", 1), f"{ctx}.duration_epochs"
                    ),
                )
            )
        except KeyError as exc:
            raise ScenarioError(f"{ctx}: missing key {exc.args[0]!r}") from None
    jumps = []
    for k, entry in enumerate(data.get("jumps", [])):
        ctx = f"jumps[{k}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{ctx}: expected a mapping")
        _reject_unknown(entry, ("period_s", "phase_s", "magnitude_s"), ctx)
        try:
            jumps.append(
                PeriodicJumpRule(
                    period_s=_as_float(entry["period_s"], f"{ctx}.period_s"),
                    phase_s=_as_float(entry["phase_s"], f"{ctx}.phase_s"),
                    magnitude_s=_as_float(entry["magnitude_s"], f"{ctx}.magnitude_s"),
                )
            )
        except KeyError as exc:
            raise ScenarioError(f"{ctx}: missing key {exc.args[0]!r}") from None

    kwargs: dict = {
        "name": data["name"],
        "n_paths": _as_int(data["n_paths"], "n_paths"),
        "n_epochs": _as_int(data["n_epochs"], "n_epochs"),
        "attack_rules": tuple(attacks),
        "jump_rules": tuple(jumps),
    }
    if "method" in data:
        if not isinstance(data["method"], str):
            raise ScenarioError("method: must be a string")
        kwargs["method"] = data["method"]
    if "seed" in data:
        kwargs["seed"] = _as_int(data["seed"], "seed")
    if "tau_s" in data:
        kwargs["tau"] = _as_float(data["tau_s"], "tau_s")
    if "sigma_offset_s" in noise:
        kwargs["sigma_offset"] = _as_float(noise["sigma_offset_s"], "noise.sigma_offset_s")
    if "sigma_drift_ss" in noise:
        kwargs["sigma_drift"] = _as_float(noise["sigma_drift_ss"], "noise.sigma_drift_ss")
    if "sigma_link_s" in noise:
        kwargs["sigma_link"] = per_path_sigma(noise["sigma_link_s"], "noise.sigma_link_s")
    if "sigma_meas_s" in noise:
        kwargs["sigma_meas"] = per_path_sigma(noise["sigma_meas_s"], "noise.sigma_meas_s")
    if "p_false_alarm" in det:
        kwargs["p_false_alarm"] = _as_float(det["p_false_alarm"], "detector.p_false_alarm")
    if "p_missed" in det:
        kwargs["p_missed"] = _as_float(det["p_missed"], "detector.p_missed")
    if "mass_ceiling" in det:
        kwargs["mass_ceiling"] = _as_float(det["mass_ceiling"], "detector.mass_ceiling")
    if "mass_floor" in det:
        kwargs["mass_floor"] = _as_float(det["mass_floor"], "detector.mass_floor")
    if "steepness_log_odds" in det:
        kwargs["steepness_log_odds"] = _as_float(
            det["steepness_log_odds"], "detector.steepness_log_odds"
        )
    if "two_sided" in det:
        if not isinstance(det["two_sided"], bool):
            raise ScenarioError("detector.two_sided: must be true or false")
        kwargs["two_sided"] = det["two_sided"]
    if "window_epochs" in det:
        kwargs["window"] = _as_int(det["window_epochs"], "detector.window_epochs")
    if "quarantine_epochs" in det:
        kwargs["quarantine"] = _as_int(det["quarantine_epochs"], "detector.quarantine_epochs")
    return Scenario(**kwargs)


def scenario_to_json(scenario: Scenario) -> str:
    return json.dumps(scenario.to_dict(), indent=2) + "\n"


def scenario_from_json(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file is not valid JSON: {exc}") from exc
    return scenario_from_dict(data)


def preset(name: str, method: str = "DS2", seed: int = 1) -> Scenario:
    """One of the built-in scenarios; see :data:`PRESET_NAMES`.

    ``fig3``/``fig4`` are the staggered and simultaneous 10 ns bias
    scenarios on 5 paths over 2000 epochs (40 attacks per path).
    ``fig5a``-``fig5d`` are the four 3000-epoch conditions: clean, two
    paths biased together every 50 s, 1 ns clock jumps every 30 s, and
    both at once (colliding jumps shift one epoch late).  ``exp3`` is the
    3-path bench analogue: 1.25 ns biases on path 1 every 50 s plus 1 ns
    jumps every 30 s.
    """
    common = {"method": method, "seed": seed}
    if name == "fig3":
        return Scenario(
            name=name,
            n_paths=5,
            n_epochs=2000,
            attack_rules=tuple(
                PeriodicAttackRule(paths=(i,), period_s=50.0, phase_s=10.0 * i, magnitude_s=10e-9)
                for i in range(5)
            ),
            **common,
        )
    if name == "fig4":
        return Scenario(
            name=name,
            n_paths=5,
            n_epochs=2000,
            attack_rules=(
                PeriodicAttackRule(paths=(0, 1), period_s=50.0, phase_s=0.0, magnitude_s=10e-9),
                PeriodicAttackRule(paths=(2, 3), period_s=50.0, phase_s=20.0, magnitude_s=10e-9),
                PeriodicAttackRule(paths=(4,), period_s=50.0, phase_s=40.0, magnitude_s=10e-9),
            ),
            **common,
        )
    if name in ("fig5a", "fig5b", "fig5c", "fig5d"):
        attacks = (
            PeriodicAttackRule(paths=(0, 1), period_s=50.0, phase_s=50.0, magnitude_s=10e-9),
        )
        jumps = (PeriodicJumpRule(period_s=30.0, phase_s=30.0, magnitude_s=1e-9),)
        return Scenario(
            name=name,
            n_paths=5,
            n_epochs=3000,
            attack_rules=attacks if name in ("fig5b", "fig5d") else (),
            jump_rules=jumps if name in ("fig5c", "fig5d") else (),
            **common,
        )
    if name == "exp3":
        return Scenario(
            name=name,
            n_paths=3,
            n_epochs=3000,
            attack_rules=(
                PeriodicAttackRule(paths=(0,), period_s=50.0, phase_s=50.0, magnitude_s=1.25e-9),
            ),
            jump_rules=(PeriodicJumpRule(period_s=30.0, phase_s=30.0, magnitude_s=1e-9),),
            **common,
        )
    raise ScenarioError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


@dataclass(frozen=True)
class RunResult:
    """Everything produced by one run: the epoch ledger plus derived metrics.

    ``sync_errors`` is the steered clock's residual time error per epoch
    (true offset plus the correction applied for that epoch); ``tdev`` is
    its time deviation over the post-warm-up stretch, or ``None`` when
    the run is too short.  Counts exclude warm-up epochs.
    """

    scenario: Scenario
    records: tuple
    sync_errors: tuple
    tdev: TdevCurve | None
    counts: DetectionCounts
    path_counts: tuple

    def __post_init__(self) -> None:
        if len(self.records) != self.scenario.n_epochs:
            raise ValueError("need exactly one record per epoch")
        if len(self.sync_errors) != len(self.records):
            raise ValueError("need exactly one sync error per epoch")
        if len(self.path_counts) != self.scenario.n_paths:
            raise ValueError("need exactly one count set per path")


def run_scenario(scenario: Scenario) -> RunResult:
    """Execute the epoch loop for ``scenario``; deterministic in (scenario, seed).

    Per epoch: advance the true clock with the previous correction and
    any scheduled jump, draw every path's report, classify the paths
    (method-dependent), and compute the next correction.  The frequency
    estimate feeding the fused detector is fit over a window of the
    accumulated steered offsets from strictly earlier epochs.
    """
    noise = scenario.noise()
    schedule = scenario.schedule()
    rngs = RngStreams(scenario.seed, scenario.n_paths)
    n = scenario.n_paths
    tau = scenario.tau
    method = scenario.method
    calibs = scenario.calibrations() if method in VARIANTS else None
    single = (
        make_single_state(noise, scenario.p_false_alarm, scenario.two_sided, scenario.window)
        if method == "Single"
        else None
    )

    state = ClockState(0.0, 0.0)
    correction = 0.0
    cum_correction = 0.0
    z_history: list = []
    quarantine_left = [0] * n
    records = []
    sync_errors = []

    for epoch in range(scenario.n_epochs):
        state = step_clock(state, correction, noise, rngs.clock, jump=schedule.jump_on(epoch))
        observations = tuple(
            observe_path(state.offset, i, epoch, noise, schedule, rngs.path(i))
            for i in range(n)
        )
        offsets = [o.measured_offset for o in observations]

        if calibs is not None:
            freq = estimate_frequency(z_history, tau, scenario.window)
            verdicts = tuple(
                classify_paths(offsets, calibs, freq.drift, tau, method, epoch)
            )
            quarantined = [i for i in range(n) if quarantine_left[i] > 0]
            correction = compute_update(offsets, verdicts, freq.drift, tau, quarantined)
            for i, v in enumerate(verdicts):
                if v.flagged:
                    quarantine_left[i] = scenario.quarantine
                elif quarantine_left[i]:
                    quarantine_left[i] -= 1
        elif method == "FTA":
            correction = fta_update(offsets)
            verdicts = tuple(Verdict(i, epoch, VACUOUS, False) for i in range(n))
        else:
            correction, flagged, single = single_update(offsets[0], single, tau)
            verdicts = (Verdict(0, epoch, VACUOUS, flagged),) + tuple(
                Verdict(i, epoch, VACUOUS, False) for i in range(1, n)
            )

        z_history.append(-correction - cum_correction)
        cum_correction += correction
        sync_errors.append(state.offset + correction)
        records.append(
            EpochRecord(epoch, state.offset, observations, verdicts, correction, method)
        )

    flags = [[v.flagged for v in r.verdicts] for r in records]
    attacks = [[o.attack_truth for o in r.observations] for r in records]
    warm = scenario.warmup
    post = sync_errors[warm:]
    return RunResult(
        scenario=scenario,
        records=tuple(records),
        sync_errors=tuple(sync_errors),
        tdev=tdev_curve(post, tau) if len(post) >= 4 else None,
        counts=precision_recall(flags, attacks, warm),
        path_counts=per_path_counts(flags, attacks, warm),
    )


# ---------------------------------------------------------------------------
# file output and round-tripping

_PS = 1e12


def run_csv_text(scenario: Scenario, records: Sequence[EpochRecord]) -> str:
    """The CSV wire form: a ``# key=value`` preamble, a header row, one row per epoch.

    Offsets are picoseconds with three decimals; flags are 0/1.  The
    trailing per-path attack columns carry the injected truth so the file
    alone suffices to recompute precision, recall and time deviation.
    """
    n = scenario.n_paths
    out = io.StringIO()
    for key, value in (
        ("name", scenario.name),
        ("method", scenario.method),
        ("seed", scenario.seed),
        ("tau_s", repr(scenario.tau)),
        ("window_epochs", scenario.window),
        ("n_paths", n),
    ):
        out.write(f"# {key}={value}\n")
    header = (
        ["epoch", "true_theta_ps"]
        + [f"theta_m_{i + 1}_ps" for i in range(n)]
        + [f"flag_{i + 1}" for i in range(n)]
        + ["u_theta_ps"]
        + [f"attack_{i + 1}_ps" for i in range(n)]
    )
    out.write(",".join(header) + "\n")
    for r in records:
        cells = [str(r.epoch), f"{r.true_offset * _PS:.3f}"]
        cells += [f"{o.measured_offset * _PS:.3f}" for o in r.observations]
        cells += ["1" if v.flagged else "0" for v in r.verdicts]
        cells.append(f"{r.correction * _PS:.3f}")
        cells += [f"{o.attack_truth * _PS:.3f}" for o in r.observations]
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def write_run_csv(result: RunResult, path) -> Path:
    path = Path(path)
    path.write_text(run_csv_text(result.scenario, result.records), encoding="utf-8", newline="\n")
    return path


@dataclass(frozen=True)
class ParsedRun:
    """A run read back from its CSV; offsets converted back to seconds."""

    name: str
    method: str
    seed: int
    tau: float
    window: int
    n_paths: int
    epochs: tuple
    true_offsets: tuple
    measured: tuple
    flags: tuple
    corrections: tuple
    attacks: tuple

    @property
    def sync_errors(self) -> tuple:
        return tuple(t + u for t, u in zip(self.true_offsets, self.corrections))

    @property
    def warmup(self) -> int:
        return min(self.window, len(self.epochs))


def parse_run_csv(path) -> ParsedRun:
    """Read a file produced by :func:`write_run_csv` back into memory.

    Raises :class:`ValueError` on malformed content (the message includes
    the file name) and propagates I/O errors unchanged.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    meta: dict = {}
    lines = text.splitlines()
    body_start = 0
    for line in lines:
        if not line.startswith("#"):
            break
        body_start += 1
        key, sep, value = line.lstrip("# ").partition("=")
        if sep:
            meta[key.strip()] = value.strip()

    def fail(msg: str):
        raise ValueError(f"{path}: {msg}")

    for key in ("name", "method", "seed", "tau_s", "window_epochs", "n_paths"):
        if key not in meta:
            fail(f"missing '# {key}=...' in the preamble")
    try:
        n = int(meta["n_paths"])
        seed = int(meta["seed"])
        window = int(meta["window_epochs"])
        tau = float(meta["tau_s"])
    except ValueError:
        fail("non-numeric preamble value")
    rows = list(csv.reader(lines[body_start:]))
    if not rows:
        fail("missing header row")
    expected = (
        ["epoch", "true_theta_ps"]
        + [f"theta_m_{i + 1}_ps" for i in range(n)]
        + [f"flag_{i + 1}" for i in range(n)]
        + ["u_theta_ps"]
        + [f"attack_{i + 1}_ps" for i in range(n)]
    )
    if rows[0] != expected:
        fail("unexpected header row")
    epochs, true_offsets, measured, flags, corrections, attacks = [], [], [], [], [], []
    for k, row in enumerate(rows[1:]):
        if len(row) != len(expected):
            fail(f"row {k} has {len(row)} cells, expected {len(expected)}")
        try:
            epochs.append(int(row[0]))
            true_offsets.append(float(row[1]) / _PS)
            measured.append(tuple(float(c) / _PS for c in row[2 : 2 + n]))
            flag_cells = row[2 + n : 2 + 2 * n]
            if any(c not in ("0", "1") for c in flag_cells):
                fail(f"row {k} has a flag cell that is not 0/1")
            flags.append(tuple(c == "1" for c in flag_cells))
            corrections.append(float(row[2 + 2 * n]) / _PS)
            attacks.append(tuple(float(c) / _PS for c in row[3 + 2 * n :]))
        except ValueError as exc:
            if str(exc).startswith(str(path)):
                raise
            fail(f"row {k}: {exc}")
    return ParsedRun(
        name=meta["name"],
        method=meta["method"],
        seed=seed,
        tau=tau,
        window=window,
        n_paths=n,
        epochs=tuple(epochs),
        true_offsets=tuple(true_offsets),
        measured=tuple(measured),
        flags=tuple(flags),
        corrections=tuple(corrections),
        attacks=tuple(attacks),
    )


def parsed_stats(parsed: ParsedRun) -> tuple:
    """Recompute ``(counts, path_counts, tdev_curve)`` from a parsed CSV."""
    warm = parsed.warmup
    counts = precision_recall(parsed.flags, parsed.attacks, warm)
    paths = per_path_counts(parsed.flags, parsed.attacks, warm)
    post = parsed.sync_errors[warm:]
    curve = tdev_curve(post, parsed.tau) if len(post) >= 4 else None
    return counts, paths, curve


# ---------------------------------------------------------------------------
# human-readable summaries and plot data

#: Averaging factors reported in summary tables (times tau).
SUMMARY_FACTORS = (1, 10, 100)


def _format_summary(
    header: dict,
    counts: DetectionCounts,
    path_counts: Sequence[DetectionCounts],
    curve: TdevCurve | None,
    post_errors: Sequence[float],
    tau: float,
) -> str:
    out = io.StringIO()
    out.write(
        "run {name}  method={method}  seed={seed}  paths={n_paths}  "
        "epochs={n_epochs}  tau_s={tau:g}  warmup_epochs={warmup}\n\n".format(**header, tau=tau)
    )
    out.write("path  precision     recall  flagged  attacked\n")

    def row(label: str, c: DetectionCounts) -> str:
        return (
            f"{label:>4}  {c.precision * 100:8.3f}%  {c.recall * 100:8.3f}%"
            f"  {c.true_positives + c.false_positives:7d}"
            f"  {c.true_positives + c.false_negatives:8d}\n"
        )

    for i, c in enumerate(path_counts):
        out.write(row(str(i + 1), c))
    out.write(row("all", counts))
    out.write("\ntime deviation of the steered clock:\n")
    if curve is None:
        out.write("  (run too short)\n")
    else:
        out.write("    tau_s    tdev_ps\n")
        for factor in SUMMARY_FACTORS:
            try:
                dev = curve.at(factor * tau)
            except KeyError:
                continue
            out.write(f"  {factor * tau:7g}  {dev * _PS:9.3f}\n")
    if post_errors:
        rms = math.sqrt(math.fsum(e * e for e in post_errors) / len(post_errors))
        peak = max(abs(e) for e in post_errors)
        out.write(
            f"\nsync error after warmup: rms={rms * _PS:.3f} ps"
            f"  max|e|={peak * _PS:.3f} ps  ({len(post_errors)} epochs)\n"
        )
    return out.getvalue()


def summarize_run(result: RunResult) -> str:
    s = result.scenario
    header = {
        "name": s.name,
        "method": s.method,
        "seed": s.seed,
        "n_paths": s.n_paths,
        "n_epochs": s.n_epochs,
        "warmup": s.warmup,
    }
    return _format_summary(
        header,
        result.counts,
        result.path_counts,
        result.tdev,
        result.sync_errors[s.warmup :],
        s.tau,
    )


def summarize_parsed(parsed: ParsedRun) -> str:
    counts, paths, curve = parsed_stats(parsed)
    header = {
        "name": parsed.name,
        "method": parsed.method,
        "seed": parsed.seed,
        "n_paths": parsed.n_paths,
        "n_epochs": len(parsed.epochs),
        "warmup": parsed.warmup,
    }
    return _format_summary(
        header, counts, paths, curve, parsed.sync_errors[parsed.warmup :], parsed.tau
    )


def plotdata_text(curve: TdevCurve | None) -> str:
    """``tau_s,tdev_ps`` rows for log-log plotting."""
    out = ["tau_s,tdev_ps"]
    if curve is not None:
        out += [f"{t:g},{d * _PS:.3f}" for t, d in zip(curve.taus, curve.deviations)]
    return "\n".join(out) + "\n"


EMIT_FORMATS = ("csv", "summary", "plotdata")


def emit(result: RunResult, out_dir, formats: Sequence[str] = EMIT_FORMATS) -> list:
    """Write the selected artifact files for ``result`` into ``out_dir``.

    File stems are ``<name>_<method>_seed<seed>`` so sweeps over methods
    and seeds never collide.  Returns the written paths in ``formats``
    order.
    """
    bad = [f for f in formats if f not in EMIT_FORMATS]
    if bad:
        raise ValueError(f"unknown emit formats {bad}; expected ones of {EMIT_FORMATS}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    s = result.scenario
    stem = f"{s.name}_{s.method}_seed{s.seed}"
    written = []
    for fmt in formats:
        if fmt == "csv":
            path = out_dir / f"{stem}.csv"
            text = run_csv_text(s, result.records)
        elif fmt == "summary":
            path = out_dir / f"{stem}_summary.txt"
            text = summarize_run(result)
        else:
            path = out_dir / f"{stem}_tdev.csv"
            text = plotdata_text(result.tdev)
        path.write_text(text, encoding="utf-8", newline="\n")
        written.append(path)
    return written


# ---------------------------------------------------------------------------
# multi-run comparison

def sweep(
    preset_names: Sequence[str],
    methods: Sequence[str],
    seeds: Sequence[int],
) -> list:
    """Run every (preset, method) pair over ``seeds`` and aggregate medians.

    Returns one row per pair: median precision/recall over seeds and the
    median time deviation at the summary averaging times.
    """
    if not seeds:
        raise ValueError("need at least one seed")
    rows = []
    for name in preset_names:
        for method in methods:
            results = [run_scenario(preset(name, method=method, seed=s)) for s in seeds]
            devs = {}
            for factor in SUMMARY_FACTORS:
                values = []
                for r in results:
                    if r.tdev is None:
                        continue
                    try:
                        values.append(r.tdev.at(factor * r.scenario.tau))
                    except KeyError:
                        pass
                devs[factor] = statistics.median(values) if values else None
            rows.append(
                {
                    "preset": name,
                    "method": method,
                    "seeds": len(seeds),
                    "precision": statistics.median(r.counts.precision for r in results),
                    "recall": statistics.median(r.counts.recall for r in results),
                    "tdev_ps": {f: (None if d is None else d * _PS) for f, d in devs.items()},
                }
            )
    return rows


def format_sweep_table(rows: Sequence[dict]) -> str:
    out = io.StringIO()
    out.write(
        f"{'preset':<8}{'method':<8}{'seeds':>5}{'precision':>11}{'recall':>9}"
        f"{'tdev@1s':>10}{'tdev@10s':>10}{'tdev@100s':>11}\n"
    )
    for r in rows:
        devs = r["tdev_ps"]

        def cell(f):
            return "-" if devs.get(f) is None else f"{devs[f]:.3f}"

        out.write(
            f"{r['preset']:<8}{r['method']:<8}{r['seeds']:>5}"
            f"{r['precision'] * 100:>10.3f}%{r['recall'] * 100:>8.3f}%"
            f"{cell(1):>10}{cell(10):>10}{cell(100):>11}\n"
        )
    return out.getvalue()
