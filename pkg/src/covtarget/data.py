"""CSV panel loading, log returns, and whole-sample moments.

Two file layouts are supported:

* price panels:   header ``date,TICKER1,...``; one ISO date plus strictly
  positive prices per row;
* return panels:  a ``#returns`` sentinel on line 1, then the same layout
  with returns instead of prices (this is the format ``simulate`` writes).

Rows with any missing or unparseable cell are rejected loudly; nothing is
imputed.
"""
from __future__ import annotations

import csv
import datetime as dt
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataError,
    DegenerateSeriesError,
    InsufficientDataError,
    ParseError,
)

RETURNS_SENTINEL = "#returns"

_EPOCH = dt.date(1970, 1, 1)


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def _check_labels(labels: tuple[str, ...]) -> None:
    if len(labels) == 0:
        raise DataError("panel has no series columns")
    if any(not lab for lab in labels):
        raise DataError("empty series label in header")
    if len(set(labels)) != len(labels):
        raise DataError("duplicate series labels in header")


@dataclass(frozen=True)
class PricePanel:
    """Date-sorted price panel; prices strictly positive, dates strictly
    increasing."""

    dates: tuple[dt.date, ...]
    labels: tuple[str, ...]
    prices: np.ndarray  # (T, N)

    def __post_init__(self):
        _check_labels(self.labels)
        p = _readonly(self.prices)
        if p.ndim != 2 or p.shape != (len(self.dates), len(self.labels)):
            raise DataError(
                f"price array shape {p.shape} does not match "
                f"{len(self.dates)} dates x {len(self.labels)} labels"
            )
        if not np.all(np.isfinite(p)):
            raise DataError("prices contain non-finite values")
        if np.any(p <= 0.0):
            t, j = map(int, np.argwhere(p <= 0.0)[0])
            raise DataError(
                f"non-positive price for {self.labels[j]} on {self.dates[t]}"
            )
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise DataError(f"dates not strictly increasing at {b}")
        object.__setattr__(self, "prices", p)

    @property
    def n(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class ReturnPanel:
    """Return panel with finite entries; ``mean`` is the per-series sample
    mean, computed once at construction. Dates, when present, are metadata."""

    labels: tuple[str, ...]
    returns: np.ndarray  # (T, N)
    dates: tuple[dt.date, ...] | None = None
    mean: np.ndarray = field(init=False)

    def __post_init__(self):
        _check_labels(self.labels)
        r = _readonly(self.returns)
        if r.ndim != 2 or r.shape[1] != len(self.labels):
            raise DataError(
                f"return array shape {r.shape} does not match {len(self.labels)} labels"
            )
        if r.shape[0] < 1:
            raise InsufficientDataError("return panel has no rows")
        if not np.all(np.isfinite(r)):
            raise DataError("returns contain non-finite values")
        if self.dates is not None and len(self.dates) != r.shape[0]:
            raise DataError(
                f"{len(self.dates)} dates for {r.shape[0]} return rows"
            )
        object.__setattr__(self, "returns", r)
        object.__setattr__(self, "mean", _readonly(r.mean(axis=0)))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def t_len(self) -> int:
        return self.returns.shape[0]

    def demeaned(self) -> np.ndarray:
        return self.returns - self.mean


@dataclass(frozen=True)
class SampleMoments:
    """Whole-sample covariance, correlation, and diagonal scale of a panel.

    Invariant: cov == gamma @ corr @ gamma with gamma = diag(std); corr has a
    unit diagonal and entries in [-1, 1].
    """

    labels: tuple[str, ...]
    cov: np.ndarray
    corr: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cov", _readonly(self.cov))
        object.__setattr__(self, "corr", _readonly(self.corr))
        object.__setattr__(self, "gamma", _readonly(self.gamma))

    @property
    def n(self) -> int:
        return len(self.labels)


def _parse_header(row: list[str], path: str) -> tuple[str, ...]:
    if not row or row[0].strip().lower() != "date":
        raise ParseError(f"{path}: first header column must be 'date'")
    labels = tuple(c.strip() for c in row[1:])
    _check_labels(labels)
    return labels


def _parse_rows(
    reader, labels: tuple[str, ...], path: str, line0: int
) -> tuple[list[dt.date], np.ndarray]:
    dates: list[dt.date] = []
    values: list[list[float]] = []
    for k, row in enumerate(reader):
        line = line0 + k
        if not row or all(not c.strip() for c in row):
            continue  # ignore blank lines
        if len(row) != len(labels) + 1:
            raise ParseError(
                f"{path}:{line}: expected {len(labels) + 1} cells, got {len(row)}"
            )
        try:
            date = dt.date.fromisoformat(row[0].strip())
        except ValueError:
            raise ParseError(f"{path}:{line}: bad date {row[0]!r}") from None
        vals = []
        for j, cell in enumerate(row[1:]):
            text = cell.strip()
            if not text:
                raise DataError(
                    f"{path}:{line}: missing value for {labels[j]}"
                )
            try:
                vals.append(float(text))
            except ValueError:
                raise ParseError(
                    f"{path}:{line}: bad number {cell!r} for {labels[j]}"
                ) from None
        dates.append(date)
        values.append(vals)
    if not dates:
        raise InsufficientDataError(f"{path}: no data rows")
    return dates, np.asarray(values, dtype=float)


def _sorted_by_date(
    dates: list[dt.date], values: np.ndarray, path: str
) -> tuple[tuple[dt.date, ...], np.ndarray]:
    order = sorted(range(len(dates)), key=lambda i: dates[i])
    dates = [dates[i] for i in order]
    for a, b in zip(dates, dates[1:]):
        if a == b:
            raise DataError(f"{path}: duplicate date {a}")
    return tuple(dates), values[order]


def load_prices(path: str | Path) -> PricePanel:
    """Load a price CSV (header ``date,T1,...``), sorted by date."""
    path = str(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if first and first[0].strip() == RETURNS_SENTINEL:
            raise ParseError(
                f"{path}: file is a returns panel ('{RETURNS_SENTINEL}' sentinel); "
                "use load_returns"
            )
        labels = _parse_header(first, path)
        dates, values = _parse_rows(reader, labels, path, line0=2)
    dates, values = _sorted_by_date(dates, values, path)
    return PricePanel(dates=dates, labels=labels, prices=values)


def load_returns(path: str | Path) -> ReturnPanel:
    """Load a returns CSV: ``#returns`` sentinel line, then the price layout."""
    path = str(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if not first or first[0].strip() != RETURNS_SENTINEL:
            raise ParseError(
                f"{path}: missing '{RETURNS_SENTINEL}' sentinel on line 1"
            )
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: missing header after sentinel") from None
        labels = _parse_header(header, path)
        dates, values = _parse_rows(reader, labels, path, line0=3)
    dates, values = _sorted_by_date(dates, values, path)
    return ReturnPanel(labels=labels, returns=values, dates=dates)


def load_panel(path: str | Path) -> ReturnPanel:
    """Load either file layout and return a ReturnPanel.

    Price files are converted with log_returns; returns files are loaded
    as-is (dispatch on the sentinel line).
    """
    with open(str(path), newline="") as fh:
        first = fh.readline()
    if first.split(",")[0].strip() == RETURNS_SENTINEL:
        return load_returns(path)
    return log_returns(load_prices(path))


def log_returns(panel: PricePanel) -> ReturnPanel:
    """Log returns r_t = log(p_t / p_{t-1}); needs at least two price rows."""
    if panel.prices.shape[0] < 2:
        raise InsufficientDataError(
            "need at least two price rows to form returns"
        )
    r = np.log(panel.prices[1:] / panel.prices[:-1])
    return ReturnPanel(labels=panel.labels, returns=r, dates=panel.dates[1:])


def correlation_from_series(x: np.ndarray) -> np.ndarray:
    """Sample correlation of the columns of ``x`` (T-1 divisor), with an
    exact unit diagonal and entries clipped to [-1, 1]."""
    x = np.asarray(x, dtype=float)
    s = x.std(axis=0, ddof=1)
    if np.any(s == 0.0):
        j = int(np.flatnonzero(s == 0.0)[0])
        raise DegenerateSeriesError(f"series {j} has zero variance")
    c = np.cov(x, rowvar=False, ddof=1)
    c = np.atleast_2d(c)
    corr = c / np.outer(s, s)
    corr = 0.5 * (corr + corr.T)
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


def sample_moments(panel: ReturnPanel) -> SampleMoments:
    """Whole-sample covariance/correlation/scale of a return panel."""
    if panel.t_len < 2:
        raise InsufficientDataError("need at least two return rows for moments")
    r = panel.returns
    s = r.std(axis=0, ddof=1)
    if np.any(s == 0.0):
        j = int(np.flatnonzero(s == 0.0)[0])
        raise DegenerateSeriesError(
            f"series {panel.labels[j]} has zero variance"
        )
    cov = np.atleast_2d(np.cov(r, rowvar=False, ddof=1))
    cov = 0.5 * (cov + cov.T)
    corr = correlation_from_series(r)
    gamma = np.diag(s)
    return SampleMoments(labels=panel.labels, cov=cov, corr=corr, gamma=gamma)


def synth_dates(t_len: int) -> tuple[dt.date, ...]:
    """Synthetic daily dates for simulated panels, starting 1970-01-02."""
    return tuple(_EPOCH + dt.timedelta(days=t + 1) for t in range(t_len))


def write_returns_csv(panel: ReturnPanel, path: str | Path) -> None:
    """Write a ReturnPanel in the sentinel format, atomically."""
    dates = panel.dates if panel.dates is not None else synth_dates(panel.t_len)
    lines = [RETURNS_SENTINEL, "date," + ",".join(panel.labels)]
    for date, row in zip(dates, panel.returns):
        lines.append(date.isoformat() + "," + ",".join(repr(float(v)) for v in row))
    write_text_atomic(path, "\n".join(lines) + "\n")


def write_text_atomic(path: str | Path, text: str) -> None:
    """Write text via a temp file + rename so readers never see partial
    output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, str(path))
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
