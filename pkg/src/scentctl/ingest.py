"""Physiological stream ingestion and sliding-window feature extraction.

Raw inter-beat (RR) and heart-rate (HR) streams arrive as line-oriented
CSV, are artifact-filtered, and are reduced to windowed time-domain
features (RMSSD, SDNN, mean HR) expressed as baseline-normalized
deviations, together with the contextual flags the classifier needs.

All timestamps are integer milliseconds since session start. Everything
here is a pure function over immutable samples, safe from any thread.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

# Physiologically plausible inter-beat interval range, ms.
RR_MIN_MS = 300.0
RR_MAX_MS = 2000.0
# A sample differing from the last retained one by more than this
# fraction is treated as an artifact.
RR_MAX_REL_CHANGE = 0.20

# Heart-rate plausibility range, bpm.
HR_MIN_BPM = 20.0
HR_MAX_BPM = 250.0

# Normalization denominators never fall below these floors so a flat
# calibration phase cannot blow the z-values up.
HR_SCALE_FLOOR = 3.0
RMSSD_SCALE_FLOOR = 5.0
SDNN_SCALE_FLOOR = 5.0

# RMSSD is unstable below ~60 s of data; 120 s balances latency against
# stability given that actuation operates on a minutes scale anyway.
DEFAULT_WINDOW_LEN_S = 120.0
DEFAULT_STRIDE_S = 60.0
DEFAULT_CALIBRATION_MINUTES = 5.0


class StreamFormatError(ValueError):
    """A sample stream could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientDataError(ValueError):
    """An operation received fewer samples than it needs."""


class ActivityState(str, Enum):
    SEDENTARY = "sedentary"
    ACTIVE = "active"


@dataclass(frozen=True, slots=True)
class RRSample:
    timestamp: int
    rr: float  # inter-beat interval, ms


@dataclass(frozen=True, slots=True)
class HRSample:
    timestamp: int
    hr: float  # beats per minute


@dataclass(frozen=True, slots=True)
class ContextSample:
    """One row of the context stream; flags hold until the next row."""

    timestamp: int
    session_active: bool
    activity_state: ActivityState


@dataclass(frozen=True, slots=True)
class ContextFlags:
    """Contextual state in effect at one instant."""

    work_minutes_continuous: float = 0.0
    activity_state: ActivityState = ActivityState.SEDENTARY
    session_active: bool = True


@dataclass(frozen=True, slots=True)
class Baseline:
    """Individual reference state established during quiet calibration."""

    mean_hr: float
    mean_rmssd: float
    mean_sdnn: float
    hr_scale: float
    rmssd_scale: float
    sdnn_scale: float

    def __post_init__(self) -> None:
        for name in ("mean_hr", "mean_rmssd", "mean_sdnn",
                     "hr_scale", "rmssd_scale", "sdnn_scale"):
            if not getattr(self, name) > 0:
                raise ValueError(f"baseline {name} must be strictly positive")

    @classmethod
    def provisional(cls) -> "Baseline":
        """Unit placeholder used to bootstrap calibration windows.

        The z-values it produces are finite but meaningless; callers use
        it only to obtain raw window statistics for `compute_baseline`.
        """
        return cls(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)


@dataclass(frozen=True, slots=True)
class FeatureWindow:
    window_start: int
    window_end: int
    rmssd: float
    sdnn: float
    mean_hr: float
    z_hr: float
    z_rmssd: float
    z_sdnn: float
    context: ContextFlags


_TRUE_WORDS = {"1", "true", "yes"}
_FALSE_WORDS = {"0", "false", "no"}


def _parse_bool(text: str, line_no: int) -> bool:
    word = text.lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise StreamFormatError(f"expected boolean, got {text!r}", line_no)


def _looks_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_samples(stream: str, schema: str = "rr") -> list:
    """Parse a line-oriented CSV sample stream.

    Schemas: ``rr`` (`timestamp_ms,rr_ms`), ``hr`` (`timestamp_ms,hr_bpm`),
    ``context`` (`timestamp_ms,session_active,activity_state`). A header
    line is optional and detected by a non-numeric first field.

    Timestamps must be non-decreasing; rows sharing a timestamp collapse
    to the last value. Raises StreamFormatError (with the offending line
    number) on malformed rows or decreasing timestamps, and on an empty
    stream.
    """
    if schema not in ("rr", "hr", "context"):
        raise ValueError(f"unknown stream schema {schema!r}")
    n_fields = 3 if schema == "context" else 2

    samples: list = []
    prev_ts: int | None = None
    seen_data = False
    for line_no, raw in enumerate(stream.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if not seen_data and not _looks_numeric(fields[0]):
            continue  # optional header
        if len(fields) != n_fields:
            raise StreamFormatError(
                f"expected {n_fields} fields, got {len(fields)}", line_no)
        try:
            ts = int(fields[0])
        except ValueError:
            raise StreamFormatError(
                f"bad timestamp {fields[0]!r}", line_no) from None
        if ts < 0:
            raise StreamFormatError("negative timestamp", line_no)

        if schema == "rr":
            try:
                value = float(fields[1])
            except ValueError:
                raise StreamFormatError(
                    f"bad rr value {fields[1]!r}", line_no) from None
            if not value > 0:
                raise StreamFormatError("rr must be positive", line_no)
            sample: object = RRSample(ts, value)
        elif schema == "hr":
            try:
                value = float(fields[1])
            except ValueError:
                raise StreamFormatError(
                    f"bad hr value {fields[1]!r}", line_no) from None
            if not value > 0:
                raise StreamFormatError("hr must be positive", line_no)
            sample = HRSample(ts, value)
        else:
            active = _parse_bool(fields[1], line_no)
            try:
                activity = ActivityState(fields[2].lower())
            except ValueError:
                raise StreamFormatError(
                    f"bad activity state {fields[2]!r}", line_no) from None
            sample = ContextSample(ts, active, activity)

        if prev_ts is not None and ts < prev_ts:
            raise StreamFormatError(
                f"non-monotonic timestamp {ts} after {prev_ts}", line_no)
        if prev_ts is not None and ts == prev_ts:
            samples[-1] = sample  # duplicate timestamp: last value wins
        else:
            samples.append(sample)
        prev_ts = ts
        seen_data = True

    if not samples:
        raise StreamFormatError("empty stream")
    return samples


def parse_rr_stream(stream: str) -> list[RRSample]:
    return parse_samples(stream, "rr")


def parse_hr_stream(stream: str) -> list[HRSample]:
    return parse_samples(stream, "hr")


def parse_context_stream(stream: str) -> list[ContextSample]:
    return parse_samples(stream, "context")


def render_rr_csv(samples: Sequence[RRSample]) -> str:
    lines = ["timestamp_ms,rr_ms"]
    lines += [f"{s.timestamp},{s.rr:.3f}" for s in samples]
    return "\n".join(lines) + "\n"


def render_hr_csv(samples: Sequence[HRSample]) -> str:
    lines = ["timestamp_ms,hr_bpm"]
    lines += [f"{s.timestamp},{s.hr:.3f}" for s in samples]
    return "\n".join(lines) + "\n"


def render_context_csv(samples: Sequence[ContextSample]) -> str:
    lines = ["timestamp_ms,session_active,activity_state"]
    lines += [f"{s.timestamp},{1 if s.session_active else 0},{s.activity_state.value}"
              for s in samples]
    return "\n".join(lines) + "\n"


def reject_artifacts(samples: Sequence[RRSample]) -> list[RRSample]:
    """Drop implausible inter-beat intervals, preserving order.

    A sample is rejected when its value falls outside [300, 2000] ms or
    differs from the previously retained value by more than 20%. The
    filter is idempotent; an empty result is a signal to the caller, not
    an error.
    """
    kept: list[RRSample] = []
    for s in samples:
        if not (RR_MIN_MS <= s.rr <= RR_MAX_MS):
            continue
        if kept and abs(s.rr - kept[-1].rr) > RR_MAX_REL_CHANGE * kept[-1].rr:
            continue
        kept.append(s)
    return kept


def clean_hr(samples: Sequence[HRSample]) -> list[HRSample]:
    """Drop heart-rate samples outside the [20, 250] bpm plausibility range."""
    return [s for s in samples if HR_MIN_BPM <= s.hr <= HR_MAX_BPM]


def compute_rmssd(rr: Sequence[float]) -> float:
    """Root mean square of successive differences over an RR sequence, ms."""
    if len(rr) < 2:
        raise InsufficientDataError(
            f"RMSSD needs at least 2 intervals, got {len(rr)}")
    diffs = np.diff(np.asarray(rr, dtype=float))
    return float(np.sqrt(np.mean(diffs * diffs)))


def compute_sdnn(rr: Sequence[float]) -> float:
    """Population standard deviation of an RR sequence, ms.

    Population form (divisor n) keeps the constant-series case exactly
    zero; the statistic is descriptive over a fixed window.
    """
    if len(rr) < 2:
        raise InsufficientDataError(
            f"SDNN needs at least 2 intervals, got {len(rr)}")
    return float(np.std(np.asarray(rr, dtype=float)))


def compute_baseline(calibration: Sequence[FeatureWindow]) -> Baseline:
    """Derive the individual reference state from calibration windows.

    Means are taken over the calibration windows; scales are the sample
    standard deviation of each statistic, floored so that unnaturally
    flat calibration cannot inflate later deviations.
    """
    if len(calibration) < 3:
        raise InsufficientDataError(
            f"baseline calibration needs at least 3 windows, got {len(calibration)}")
    hr = np.array([w.mean_hr for w in calibration])
    rmssd = np.array([w.rmssd for w in calibration])
    sdnn = np.array([w.sdnn for w in calibration])
    return Baseline(
        mean_hr=float(np.mean(hr)),
        mean_rmssd=float(np.mean(rmssd)),
        mean_sdnn=float(np.mean(sdnn)),
        hr_scale=max(float(np.std(hr, ddof=1)), HR_SCALE_FLOOR),
        rmssd_scale=max(float(np.std(rmssd, ddof=1)), RMSSD_SCALE_FLOOR),
        sdnn_scale=max(float(np.std(sdnn, ddof=1)), SDNN_SCALE_FLOOR),
    )


def context_at(samples: Sequence[ContextSample], t: int) -> ContextFlags:
    """Contextual flags in effect at time ``t``.

    Continuous work minutes accumulate from the start of the current
    unbroken ``session_active`` run and reset to zero whenever the
    session is inactive. With no context stream the session is assumed
    active (continuous desk work) from time zero; state before the first
    record extends the first record backwards.
    """
    if not samples:
        return ContextFlags(work_minutes_continuous=t / 60000.0,
                            activity_state=ActivityState.SEDENTARY,
                            session_active=True)
    timestamps = [s.timestamp for s in samples]
    idx = bisect.bisect_right(timestamps, t) - 1
    if idx < 0:
        first = samples[0]
        if first.session_active:
            return ContextFlags(t / 60000.0, first.activity_state, True)
        return ContextFlags(0.0, first.activity_state, False)
    current = samples[idx]
    if not current.session_active:
        return ContextFlags(0.0, current.activity_state, False)
    j = idx
    while j > 0 and samples[j - 1].session_active:
        j -= 1
    run_start = 0 if j == 0 else samples[j].timestamp
    return ContextFlags((t - run_start) / 60000.0, current.activity_state, True)


def window_features(
    rr: Sequence[RRSample],
    hr: Sequence[HRSample],
    context: Sequence[ContextSample],
    baseline: Baseline,
    window_len_s: float = DEFAULT_WINDOW_LEN_S,
    stride_s: float = DEFAULT_STRIDE_S,
) -> list[FeatureWindow]:
    """Slide a window over cleaned streams and emit normalized features.

    One window is produced per stride step whose end lies within the
    trace; windows holding fewer than two RR samples are skipped, not an
    error. Mean HR comes from the HR samples inside the window when any
    exist, otherwise it is derived from the window's mean RR interval.
    """
    if window_len_s < 60:
        raise ValueError("window_len_s must be at least 60 s")
    if stride_s <= 0:
        raise ValueError("stride_s must be positive")

    rr_ts = np.array([s.timestamp for s in rr], dtype=np.int64)
    rr_v = np.array([s.rr for s in rr], dtype=float)
    hr_ts = np.array([s.timestamp for s in hr], dtype=np.int64)
    hr_v = np.array([s.hr for s in hr], dtype=float)

    ends = [int(a[-1]) for a in (rr_ts, hr_ts) if len(a)]
    if not ends:
        return []
    trace_end = max(ends)

    window_ms = round(window_len_s * 1000)
    stride_ms = round(stride_s * 1000)

    windows: list[FeatureWindow] = []
    start = 0
    while start + window_ms <= trace_end:
        end = start + window_ms
        i0 = int(np.searchsorted(rr_ts, start, side="left"))
        i1 = int(np.searchsorted(rr_ts, end, side="left"))
        if i1 - i0 >= 2:
            seg = rr_v[i0:i1]
            rmssd = compute_rmssd(seg)
            sdnn = compute_sdnn(seg)
            j0 = int(np.searchsorted(hr_ts, start, side="left"))
            j1 = int(np.searchsorted(hr_ts, end, side="left"))
            if j1 > j0:
                mean_hr = float(np.mean(hr_v[j0:j1]))
            else:
                mean_hr = 60000.0 / float(np.mean(seg))
            windows.append(FeatureWindow(
                window_start=start,
                window_end=end,
                rmssd=rmssd,
                sdnn=sdnn,
                mean_hr=mean_hr,
                z_hr=(mean_hr - baseline.mean_hr) / baseline.hr_scale,
                z_rmssd=(rmssd - baseline.mean_rmssd) / baseline.rmssd_scale,
                z_sdnn=(sdnn - baseline.mean_sdnn) / baseline.sdnn_scale,
                context=context_at(context, end),
            ))
        start += stride_ms
    return windows
