"""Sample generation, CSV ingestion and follow-up quantiles.

Random numbers come from numpy's PCG64 bit generator seeded with a 64-bit
integer. Replication ``i`` of a study uses seed ``base_seed + i``, so each
replication owns an independent, reproducible stream whatever worker runs it.
All four laws are sampled by inverse CDF.
"""
from __future__ import annotations

import logging
import math
import re
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import integrate, optimize

from .exceptions import DataError, EmptySampleError, ConfigurationError
from .models import CensoredSample, ScenarioSpec

logger = logging.getLogger(__name__)

QUANTILE_TOLERANCE = 1e-10
HEADER = ("time", "event")


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def generate(spec: ScenarioSpec) -> CensoredSample:
    rng = make_rng(spec.seed)
    # events first, then censoring: one fixed draw order per seed
    x = spec.event_law.ppf(rng.random(spec.n))
    c = spec.censor_law.ppf(rng.random(spec.n))
    sample = CensoredSample.from_arrays(np.minimum(x, c), x <= c)
    logger.debug("generated n=%d seed=%d censored=%.3f", spec.n, spec.seed, sample.censored_fraction)
    return sample


def censoring_fraction(spec: ScenarioSpec) -> float:
    """P(C < X) = ∫ g(c) (1 - F(c)) dc over the censoring support."""
    law = spec.censor_law
    lo, hi = (float(v) for v in law.distribution.support())
    value, _ = integrate.quad(lambda c: law.pdf(c) * spec.event_law.sf(c), lo, hi, limit=200)
    return float(value)


def quantile(spec: ScenarioSpec, p: float) -> float:
    """H^{-1}(p) for the follow-up law H = 1 - (1-F)(1-G), by bisection."""
    if not 0 < p < 1:
        raise ConfigurationError(f"quantile level must lie in (0, 1), got {p}")
    hi = spec.follow_up_upper
    if not math.isfinite(hi):
        hi = 1.0
        while spec.follow_up_cdf(hi) < p:
            hi *= 2.0
    return float(optimize.bisect(lambda t: spec.follow_up_cdf(t) - p, 0.0, hi, xtol=QUANTILE_TOLERANCE))


def truncation_point(sample: CensoredSample, level: float, spec: ScenarioSpec | None = None) -> float:
    """Last observed time not exceeding the level-quantile of H.

    The true H is used when the generating scenario is known, the empirical
    follow-up distribution otherwise.
    """
    if spec is not None:
        q = quantile(spec, level)
    else:
        q = float(np.quantile(sample.times, level, method="inverted_cdf"))
    idx = np.searchsorted(sample.times, q, side="right") - 1
    if idx < 0:
        raise DataError(f"no observation at or before the {level:g}-quantile {q:.6g}")
    return float(sample.times[idx])


def _has_header(path: Path) -> bool:
    with path.open(encoding="utf-8-sig") as handle:
        first = handle.readline()
    return tuple(cell.strip().lower() for cell in first.split(",")) == HEADER


def _numeric(column: pd.Series) -> pd.Series:
    if pd.api.types.is_numeric_dtype(column):
        return column.astype(float)
    return pd.to_numeric(column.astype(str).str.strip(), errors="coerce")


def read_csv(path) -> CensoredSample:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    header = _has_header(path)
    try:
        frame = pd.read_csv(
            path,
            header=None,
            skiprows=int(header),
            encoding="utf-8-sig",
            float_precision="round_trip",
            skip_blank_lines=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise EmptySampleError()
    except pd.errors.ParserError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise DataError("expected two columns time,event", row=int(match.group(1)) if match else None)
    # index by line number in the file
    frame.index = frame.index + 1 + int(header)
    frame = frame.dropna(how="all")
    if frame.empty:
        raise EmptySampleError()
    if frame.shape[1] != 2:
        raise DataError("expected two columns time,event", row=int(frame.index[0]))

    raw_time, raw_event = frame.columns
    times = _numeric(frame[raw_time])
    events = _numeric(frame[raw_event])

    bad_time = times[times.isna() | ~np.isfinite(times)]
    if not bad_time.empty:
        row = int(bad_time.index[0])
        raise DataError(f"time {frame.loc[row, raw_time]!r} is not a finite number", row=row)
    negative = times[times < 0]
    if not negative.empty:
        raise DataError(f"negative time {negative.iloc[0]:g}", row=int(negative.index[0]))
    bad_event = events[~events.isin([0, 1])]
    if not bad_event.empty:
        row = int(bad_event.index[0])
        raise DataError(f"event must be 0 or 1, got {frame.loc[row, raw_event]!r}", row=row)

    sample = CensoredSample.from_arrays(times.to_numpy(), events.to_numpy().astype(int) == 1)
    logger.debug("read %d observations from %s", sample.n, path)
    return sample


def write_csv(sample: CensoredSample, path, header: bool = True) -> None:
    frame = pd.DataFrame({"time": sample.times, "event": sample.events.astype(int)})
    frame.to_csv(path, index=False, header=header, float_format="%.17g", lineterminator="\n")
