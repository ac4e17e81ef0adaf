"""
Ground contact analysis.

Given when every satellite is in contact with a ground station and at what
downlink rate, this module measures how long satellites wait between
contacts and what share of the data generated since the previous contact a
contact can bring down.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import InvalidTrace, TooFewContacts
from .logging_config import get_logger
from .validation import DataValidator

logger = get_logger(__name__)

TRACE_COLUMNS = ['sat_id', 'start_s', 'end_s', 'rate_bps']


class Contact(NamedTuple):
    sat_id: int
    start: float
    end: float
    rate_bps: float

    @property
    def duration(self) -> float:
        return self.end - self.start


class CdfPoint(NamedTuple):
    interval: float
    fraction: float


class ContactRatio(NamedTuple):
    sat_id: int
    start: float
    previous_interval: float
    ratio: float


@dataclass(frozen=True)
class ContactTrace:
    """
    Contact windows of a constellation, sorted by satellite then start time.

    Attributes:
        contacts: Contact windows
        horizon: Observation length in seconds, when known
    """
    contacts: Tuple[Contact, ...]
    horizon: Optional[float] = None

    def __post_init__(self) -> None:
        # Raw values; the schema coerces them
        raw = pd.DataFrame([tuple(c) for c in self.contacts], columns=TRACE_COLUMNS)
        frame = DataValidator().validate_contact_trace(raw)
        ordered = tuple(
            Contact(int(r.sat_id), float(r.start_s), float(r.end_s), float(r.rate_bps))
            for r in frame.sort_values(['sat_id', 'start_s']).itertuples(index=False)
        )
        object.__setattr__(self, 'contacts', ordered)
        if self.horizon is not None and ordered and self.horizon < max(c.end for c in ordered):
            raise InvalidTrace(f"horizon {self.horizon} ends before the last contact")

    @classmethod
    def from_frame(cls, df: pd.DataFrame, horizon: Optional[float] = None) -> "ContactTrace":
        unknown = sorted(set(df.columns) - set(TRACE_COLUMNS))
        if unknown:
            raise InvalidTrace(f"unexpected contact trace columns {unknown}")
        rows = df.reindex(columns=TRACE_COLUMNS).itertuples(index=False, name=None)
        return cls(tuple(Contact(*row) for row in rows), horizon)

    @property
    def satellites(self) -> List[int]:
        return sorted({c.sat_id for c in self.contacts})

    def of(self, sat_id: int) -> List[Contact]:
        return [c for c in self.contacts if c.sat_id == sat_id]

    def to_frame(self) -> pd.DataFrame:
        return _to_frame(self.contacts)


def _to_frame(contacts: Sequence[Contact]) -> pd.DataFrame:
    return pd.DataFrame([tuple(c) for c in contacts], columns=TRACE_COLUMNS).astype(
        {'sat_id': 'int64', 'start_s': float, 'end_s': float, 'rate_bps': float}
    )


def load_contact_trace(path: Union[str, Path], horizon: Optional[float] = None) -> ContactTrace:
    """
    Read a contact trace CSV with columns sat_id, start_s, end_s, rate_bps.

    Lines starting with ``#`` are ignored.

    Raises:
        InvalidTrace: the file violates the trace schema
    """
    try:
        df = pd.read_csv(path, comment='#')
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise InvalidTrace(f"Cannot parse contact trace {path}: {e}") from e
    missing = [c for c in TRACE_COLUMNS if c not in df.columns]
    if missing:
        raise InvalidTrace(f"Contact trace {path} lacks columns {missing}")
    logger.debug("Loaded %d contacts from %s", len(df), path)
    return ContactTrace.from_frame(df, horizon)


def _intervals(trace: ContactTrace) -> List[Tuple[Contact, float]]:
    # (contact, gap since the previous contact of the same satellite)
    pairs = []
    for sat_id in trace.satellites:
        contacts = trace.of(sat_id)
        if len(contacts) < 2:
            logger.warning("Satellite %d has fewer than 2 contacts and is skipped", sat_id)
            continue
        for previous, current in zip(contacts, contacts[1:]):
            pairs.append((current, current.start - previous.end))
    if not pairs:
        raise TooFewContacts("no satellite in the trace has two contacts")
    return pairs


def contact_interval_cdf(trace: ContactTrace) -> List[CdfPoint]:
    """
    Empirical CDF of the waiting time between consecutive contacts.

    Gaps of all satellites are pooled. Every distinct gap length yields one
    point holding the fraction of gaps no longer than it.

    Raises:
        TooFewContacts: no satellite has two contacts
    """
    gaps = np.sort(np.array([gap for _, gap in _intervals(trace)]))
    values = np.unique(gaps)
    fractions = np.searchsorted(gaps, values, side='right') / gaps.size
    return [CdfPoint(float(v), float(f)) for v, f in zip(values, fractions)]


def evaluate_cdf(cdf: Sequence[CdfPoint], interval: float) -> float:
    """Fraction of gaps no longer than ``interval``."""
    values = np.array([p.interval for p in cdf])
    idx = int(np.searchsorted(values, interval, side='right'))
    return 0.0 if idx == 0 else float(cdf[idx - 1].fraction)


def downlinkable_ratio(trace: ContactTrace, data_gen_rate: float,
                       filter_fraction: float = 0.0) -> List[ContactRatio]:
    """
    Share of the data gathered since the previous contact that a contact can downlink.

    Args:
        trace: Contact windows
        data_gen_rate: Bytes a satellite generates per second
        filter_fraction: Fraction of the data discarded onboard before downlink

    Returns:
        One ratio in [0, 1] per contact that has a previous contact; the
        first contact of every satellite is omitted

    Raises:
        TooFewContacts: no satellite has two contacts
    """
    if data_gen_rate <= 0:
        raise ValueError(f"data_gen_rate must be positive, got {data_gen_rate}")
    if not 0 <= filter_fraction <= 1:
        raise ValueError(f"filter_fraction must lie in [0, 1], got {filter_fraction}")

    ratios = []
    for contact, gap in _intervals(trace):
        backlog = (1 - filter_fraction) * data_gen_rate * gap
        downlink = contact.duration * contact.rate_bps / 8
        ratio = 1.0 if backlog <= 0 else min(1.0, downlink / backlog)
        ratios.append(ContactRatio(contact.sat_id, contact.start, gap, ratio))
    return ratios


def fully_downlinkable(ratios: Sequence[ContactRatio]) -> bool:
    """True when every contact can bring down its whole backlog."""
    return all(r.ratio >= 1.0 for r in ratios)


def cdf_frame(cdf: Sequence[CdfPoint]) -> pd.DataFrame:
    return pd.DataFrame(cdf, columns=['interval_s', 'fraction'])


def ratios_frame(ratios: Sequence[ContactRatio]) -> pd.DataFrame:
    return pd.DataFrame(ratios, columns=['sat_id', 'start_s', 'previous_interval_s', 'ratio'])
