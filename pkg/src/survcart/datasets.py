"""Right-censored survival data containers.

A dataset holds one observed time per subject, the event indicator
(True = event observed, False = right censored), and any number of
partitioning covariates, each declared categorical or continuous.
Continuous columns are float arrays with NaN marking a missing value;
categorical columns are object arrays of labels with None missing.
Missing covariate values are legal, missing times or indicators are not.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDatasetError, SchemaMismatchError, UnknownVariableError

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class CovariateSpec:
    """Name and kind of one partitioning variable."""

    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, CONTINUOUS):
            raise SchemaMismatchError(
                f"covariate {self.name!r}: kind must be "
                f"{CATEGORICAL!r} or {CONTINUOUS!r}, got {self.kind!r}"
            )


@dataclass(frozen=True)
class SurvivalRecord:
    """One subject: observed time, event indicator, covariate values."""

    time: float
    event: bool
    covariates: dict
    subject_id: object = None


class SurvivalDataset:
    """Column-oriented survival sample with a fixed covariate schema."""

    def __init__(self, times, events, meta=(), columns=None, subject_ids=None):
        times = np.asarray(times, dtype=float)
        events = np.asarray(events, dtype=bool)
        if times.ndim != 1:
            raise SchemaMismatchError("times must be one-dimensional")
        if times.shape != events.shape:
            raise SchemaMismatchError("times and events must have equal length")
        if times.size == 0:
            raise EmptyDatasetError("dataset has no subjects")
        if not np.all(np.isfinite(times)):
            raise SchemaMismatchError("times must be finite")
        self.times = times
        self.events = events
        self.meta = tuple(meta)
        columns = {} if columns is None else dict(columns)
        names = [m.name for m in self.meta]
        if len(set(names)) != len(names):
            raise SchemaMismatchError("duplicate covariate names in schema")
        if set(columns) != set(names):
            raise SchemaMismatchError(
                f"columns {sorted(columns)} do not match schema {sorted(names)}"
            )
        self.columns = {}
        for m in self.meta:
            col = columns[m.name]
            if m.kind == CONTINUOUS:
                col = np.asarray(col, dtype=float)
            else:
                col = np.asarray(col, dtype=object)
            if col.shape != times.shape:
                raise SchemaMismatchError(f"column {m.name!r} has wrong length")
            self.columns[m.name] = col
        if subject_ids is None:
            subject_ids = np.arange(times.size)
        self.subject_ids = np.asarray(subject_ids)
        if self.subject_ids.shape != times.shape:
            raise SchemaMismatchError("subject_ids has wrong length")

    @classmethod
    def from_records(cls, records, meta, subject_ids=None):
        records = list(records)
        times = [r.time for r in records]
        events = [r.event for r in records]
        columns = {m.name: [r.covariates.get(m.name) for r in records] for m in meta}
        for m in meta:
            if m.kind == CONTINUOUS:
                columns[m.name] = [
                    np.nan if v is None else float(v) for v in columns[m.name]
                ]
        if subject_ids is None and records and records[0].subject_id is not None:
            subject_ids = [r.subject_id for r in records]
        return cls(times, events, meta, columns, subject_ids)

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def n_events(self) -> int:
        return int(np.count_nonzero(self.events))

    def spec_for(self, name: str) -> CovariateSpec:
        for m in self.meta:
            if m.name == name:
                return m
        raise UnknownVariableError(f"no partitioning variable named {name!r}")

    def covariate(self, name: str) -> np.ndarray:
        self.spec_for(name)
        return self.columns[name]

    def missing_mask(self, name: str) -> np.ndarray:
        """Boolean mask, True where the covariate value is missing."""
        spec = self.spec_for(name)
        col = self.columns[name]
        if spec.kind == CONTINUOUS:
            return np.isnan(col)
        return np.fromiter((v is None for v in col), dtype=bool, count=col.size)

    def subset(self, index) -> "SurvivalDataset":
        index = np.asarray(index)
        return SurvivalDataset(
            self.times[index],
            self.events[index],
            self.meta,
            {name: col[index] for name, col in self.columns.items()},
            self.subject_ids[index],
        )
