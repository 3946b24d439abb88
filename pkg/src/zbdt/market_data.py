"""Daily constant-maturity yield series and rolling log-return volatility."""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

__all__ = [
    "CalibrationEntry",
    "CalibrationInput",
    "CsvFormat",
    "DataError",
    "ValidationError",
    "YieldSeries",
    "build_calibration_input",
    "parse_tenor",
    "format_tenor",
    "parse_yield_csv",
    "rolling_volatility",
    "serialize_yield_csv",
]

MISSING_TOKENS = frozenset({"", ".", "NA", "N/A", "ND", "NaN", "nan"})


class DataError(ValueError):
    """Malformed or insufficient market data."""


class ValidationError(ValueError):
    """A domain object violates one of its invariants."""


_TENOR_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([MY])\s*$", re.IGNORECASE)


def parse_tenor(label: str) -> float:
    """'6M' -> 0.5, '5Y' -> 5.0."""
    m = _TENOR_RE.match(label)
    if not m:
        raise DataError(f"unrecognised tenor column {label!r}")
    n = float(m.group(1))
    return n / 12.0 if m.group(2).upper() == "M" else n


def format_tenor(years: float) -> str:
    if float(years).is_integer():
        return f"{int(years)}Y"
    months = years * 12.0
    if abs(months - round(months)) > 1e-9:
        raise ValueError(f"tenor {years} is not a whole number of months")
    return f"{int(round(months))}M"


@dataclass(frozen=True)
class YieldSeries:
    maturity: float
    dates: tuple[dt.date, ...]
    yields: np.ndarray

    def __post_init__(self):
        y = np.array(self.yields, dtype=float)
        if len(self.dates) != y.shape[0]:
            raise ValidationError("dates and yields differ in length")
        if len(self.dates) == 0:
            raise ValidationError(f"empty series for tenor {format_tenor(self.maturity)}")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise ValidationError(f"dates not strictly increasing at {b}")
        if np.any(~(y > 0)):
            bad = self.dates[int(np.argmax(~(y > 0)))]
            raise ValidationError(f"non-positive yield on {bad}")
        y.setflags(write=False)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "yields", y)

    def __len__(self):
        return len(self.dates)

    @property
    def label(self) -> str:
        return format_tenor(self.maturity)

    def index_of(self, date: dt.date) -> int:
        # dates are sorted, so bisect
        import bisect

        i = bisect.bisect_left(self.dates, date)
        if i == len(self.dates) or self.dates[i] != date:
            raise DataError(f"{date} is not an observation date of the {self.label} series")
        return i

    def truncated(self, until: dt.date) -> "YieldSeries":
        i = self.index_of(until)
        return YieldSeries(self.maturity, self.dates[: i + 1], self.yields[: i + 1])

    def __eq__(self, other):
        if not isinstance(other, YieldSeries):
            return NotImplemented
        return (
            self.maturity == other.maturity
            and self.dates == other.dates
            and np.array_equal(self.yields, other.yields)
        )

    __hash__ = None


@dataclass(frozen=True)
class CsvFormat:
    """Column layout of a yield file."""

    date_column: str = "DATE"
    yields_in: Literal["percent", "decimal"] = "percent"
    delimiter: str = ","

    def __post_init__(self):
        if self.yields_in not in ("percent", "decimal"):
            raise ValueError("yields_in must be 'percent' or 'decimal'")


def _parse_date(text: str, row: int) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise DataError(f"row {row}: malformed date {text!r}") from None


def parse_yield_csv(raw: str | Iterable[str], fmt: CsvFormat = CsvFormat()) -> list[YieldSeries]:
    """Parse a wide CSV (date column + one column per tenor) into series.

    Rows may appear in any order; blank cells skip that tenor for that row.
    Row numbers in error messages count the header as row 1.
    """
    if isinstance(raw, str):
        raw = io.StringIO(raw)
    reader = csv.reader(raw, delimiter=fmt.delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty file") from None
    try:
        date_idx = header.index(fmt.date_column)
    except ValueError:
        raise DataError(f"no {fmt.date_column!r} column in header {header}") from None
    tenor_cols = [(i, parse_tenor(h)) for i, h in enumerate(header) if i != date_idx and h]
    if not tenor_cols:
        raise DataError("header names no tenor columns")

    scale = 0.01 if fmt.yields_in == "percent" else 1.0
    points: dict[float, dict[dt.date, float]] = {t: {} for _, t in tenor_cols}
    seen: set[dt.date] = set()
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        date = _parse_date(row[date_idx], rownum)
        if date in seen:
            raise DataError(f"row {rownum}: duplicate date {date}")
        seen.add(date)
        for i, tenor in tenor_cols:
            cell = row[i].strip() if i < len(row) else ""
            if cell in MISSING_TOKENS:
                continue
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"row {rownum}: non-numeric yield {cell!r} for {format_tenor(tenor)}") from None
            if not value > 0:
                raise DataError(f"row {rownum}: non-positive yield {cell} for {format_tenor(tenor)}")
            points[tenor][date] = value * scale

    out = []
    for _, tenor in tenor_cols:
        obs = points[tenor]
        if not obs:
            raise DataError(f"no observations for tenor {format_tenor(tenor)}")
        dates = sorted(obs)
        out.append(YieldSeries(tenor, tuple(dates), np.array([obs[d] for d in dates])))
    return out


def serialize_yield_csv(series: Sequence[YieldSeries], fmt: CsvFormat = CsvFormat()) -> str:
    """Inverse of :func:`parse_yield_csv` (full precision, ``repr`` floats)."""
    scale = 100.0 if fmt.yields_in == "percent" else 1.0
    all_dates = sorted({d for s in series for d in s.dates})
    lookup = [dict(zip(s.dates, s.yields)) for s in series]
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=fmt.delimiter, lineterminator="\n")
    w.writerow([fmt.date_column] + [s.label for s in series])
    for d in all_dates:
        w.writerow([d.isoformat()] + [repr(float(m[d] * scale)) if d in m else "" for m in lookup])
    return buf.getvalue()


def rolling_volatility(
    series: YieldSeries,
    t: dt.date,
    window: int = 252,
    normalization: Literal["paper_sum", "sample"] = "paper_sum",
) -> float:
    """Volatility of daily log yield changes over the ``window`` returns ending at ``t``.

    ``paper_sum`` returns sqrt(sum((l_i - mean)^2)) with no averaging factor,
    which approximates an annualised figure for a 252-day window. ``sample``
    divides the sum by ``window - 1``.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    i = series.index_of(t)
    if i < window:
        if len(series) > window:
            earliest = series.dates[window]
            raise DataError(
                f"{series.label}: {window} returns need {window + 1} observations up to {t}; "
                f"earliest usable date is {earliest}"
            )
        raise DataError(f"{series.label}: series has {len(series)} observations, needs {window + 1}")
    y = series.yields[i - window : i + 1]
    # ratios first: scaling the series by a power of two leaves them bit-identical
    rets = np.log(y[1:] / y[:-1])
    dev = rets - rets.mean()
    ss = float(np.dot(dev, dev))
    if normalization == "paper_sum":
        return math.sqrt(ss)
    if normalization == "sample":
        if window < 2:
            raise ValueError("sample normalization needs window >= 2")
        return math.sqrt(ss / (window - 1))
    raise ValueError(f"unknown normalization {normalization!r}")


@dataclass(frozen=True)
class CalibrationEntry:
    k: int
    y: float
    beta: float | None = None


@dataclass(frozen=True)
class CalibrationInput:
    """Yield curve y(k) and yield volatilities beta(k), k = 1..n.

    beta(1) may be carried along but is never used by calibration.
    """

    entries: tuple[CalibrationEntry, ...]
    as_of: dt.date | None = None
    window: int | None = None

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValidationError("calibration input needs at least y(1)")
        for expected, e in enumerate(entries, start=1):
            if e.k != expected:
                raise ValidationError(f"maturities must be 1..n contiguous, got k={e.k} at position {expected}")
            if not (e.y > 0 and math.isfinite(e.y)):
                raise ValidationError(f"y({e.k}) must be positive, got {e.y}")
            if e.k >= 2 and not (e.beta is not None and e.beta > 0 and math.isfinite(e.beta)):
                raise ValidationError(f"beta({e.k}) must be positive, got {e.beta}")

    @classmethod
    def from_arrays(cls, yields: Sequence[float], betas: Sequence[float | None], **kw) -> "CalibrationInput":
        """``betas`` is aligned with ``yields``; its first element is beta(1) (may be None)."""
        if len(betas) != len(yields):
            raise ValueError("yields and betas must have the same length")
        return cls(tuple(CalibrationEntry(k, float(y), None if b is None else float(b))
                         for k, (y, b) in enumerate(zip(yields, betas), start=1)), **kw)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def yields(self) -> np.ndarray:
        return np.array([e.y for e in self.entries])

    @property
    def betas(self) -> np.ndarray:
        """beta(k) for k = 1..n; NaN where absent."""
        return np.array([np.nan if e.beta is None else e.beta for e in self.entries])

    def y(self, k: int) -> float:
        return self.entries[k - 1].y

    def beta(self, k: int) -> float:
        if k < 2:
            raise ValueError("beta(1) is not used by calibration")
        return self.entries[k - 1].beta

    def discount_price(self, k: int, face: float = 100.0) -> float:
        return face / (1.0 + self.y(k)) ** k

    def to_dict(self) -> dict:
        return {
            "as_of": self.as_of.isoformat() if self.as_of else None,
            "window": self.window,
            "entries": [{"k": e.k, "y": e.y, "beta": e.beta} for e in self.entries],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationInput":
        as_of = d.get("as_of")
        return cls(
            tuple(CalibrationEntry(int(e["k"]), float(e["y"]), None if e.get("beta") is None else float(e["beta"]))
                  for e in d["entries"]),
            as_of=dt.date.fromisoformat(as_of) if as_of else None,
            window=d.get("window"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CalibrationInput":
        return cls.from_dict(json.loads(text))


def build_calibration_input(
    all_series: Sequence[YieldSeries],
    as_of: dt.date,
    maturities: Sequence[int] = (1, 2, 3, 4, 5),
    window: int = 252,
    normalization: Literal["paper_sum", "sample"] = "paper_sum",
) -> CalibrationInput:
    """Assemble y(k) observed on ``as_of`` and beta(k) from the trailing window.

    Only integer-year tenors take part; a 6M series is ignored unless asked for,
    and then rejected because the lattice steps are annual.
    """
    by_tenor = {s.maturity: s for s in all_series}
    entries = []
    for k in sorted(maturities):
        if float(k) != int(k):
            raise ValueError(f"maturity {k} is not a whole number of years")
        s = by_tenor.get(float(k))
        if s is None:
            raise DataError(f"no series for tenor {k}Y")
        y = float(s.yields[s.index_of(as_of)])
        beta = rolling_volatility(s, as_of, window, normalization)
        entries.append(CalibrationEntry(int(k), y, beta))
    return CalibrationInput(tuple(entries), as_of=as_of, window=window)
