"""Wi-Fi link budget: path loss, SNR over distance, MCS capacity and coverage distance."""

from __future__ import annotations

import io
import logging
import math
import pathlib
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from .errors import LinkBudgetError, ValidationError
from .resources import DEFAULT_MCS_TABLE, load_data_text

LOGGER = logging.getLogger(__name__)

# 20*log10(4*pi/c) with d in m and f in MHz
FSPL_CONSTANT_DB = -27.55

MCS_COLUMNS = ("mcs", "min_snr_db", "rate_mbps")


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float = 20.0
    noise_dbm: float = -85.0
    snr_margin_db: float = 1.0
    frequency_mhz: float = 5250.0
    standard: str = "802.11ac"
    channel_bandwidth_mhz: float = 160.0
    guard_interval_ns: float = 800.0
    # 2.0 is free space; other values give a log-distance model.
    path_loss_exponent: float = 2.0
    # Below this distance the far-field model is not trusted.
    min_distance_m: float = 1.0

    def __post_init__(self):
        if self.frequency_mhz <= 0:
            raise ValidationError(f"link.frequency_mhz must be positive, got {self.frequency_mhz}")
        if self.snr_margin_db < 0:
            raise ValidationError(f"link.snr_margin_db must be non-negative, got {self.snr_margin_db}")
        if self.path_loss_exponent <= 0:
            raise ValidationError(
                f"link.path_loss_exponent must be positive, got {self.path_loss_exponent}"
            )
        if self.min_distance_m < 0:
            raise ValidationError(f"link.min_distance_m must be non-negative, got {self.min_distance_m}")

    @property
    def budget_db(self) -> float:
        """Path loss at which the SNR drops to 0 dB."""
        return self.tx_power_dbm - self.noise_dbm


@dataclass(frozen=True)
class McsEntry:
    mcs: int
    min_snr_db: float
    rate_mbps: float


@dataclass(frozen=True)
class McsTable:
    """MCS entries ordered by index, with strictly increasing thresholds and rates."""

    entries: Tuple[McsEntry, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValidationError("MCS table must contain at least one entry")
        for prev, cur in zip(self.entries, self.entries[1:]):
            if cur.mcs <= prev.mcs:
                raise ValidationError(f"MCS indices must increase (MCS{prev.mcs} then MCS{cur.mcs})")
            if cur.min_snr_db <= prev.min_snr_db:
                raise ValidationError(f"MCS{cur.mcs} min_snr_db must exceed MCS{prev.mcs}'s")
            if cur.rate_mbps <= prev.rate_mbps:
                raise ValidationError(f"MCS{cur.mcs} rate_mbps must exceed MCS{prev.mcs}'s")
        if self.entries[0].rate_mbps <= 0:
            raise ValidationError("MCS rates must be positive")

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> McsEntry:
        return self.entries[index]

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([e.min_snr_db for e in self.entries])

    @property
    def rates(self) -> np.ndarray:
        return np.array([e.rate_mbps for e in self.entries])

    @property
    def top_rate(self) -> float:
        return self.entries[-1].rate_mbps

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, source: str = "<table>") -> "McsTable":
        missing = [c for c in MCS_COLUMNS if c not in frame.columns]
        if missing:
            raise ValidationError(f"MCS table {source} is missing columns: {', '.join(missing)}")
        frame = frame.sort_values("mcs")
        entries = tuple(
            McsEntry(int(row.mcs), float(row.min_snr_db), float(row.rate_mbps))
            for row in frame.itertuples(index=False)
        )
        return cls(entries)


def load_mcs_table(path: Optional[Union[str, pathlib.Path]] = None) -> McsTable:
    """Load an MCS table CSV (``mcs,min_snr_db,rate_mbps``); ``None`` loads the embedded table."""
    if path is None:
        frame = pd.read_csv(io.StringIO(load_data_text(DEFAULT_MCS_TABLE)))
        return McsTable.from_frame(frame, DEFAULT_MCS_TABLE)
    path = pathlib.Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ValidationError(f"cannot read MCS table {path}: {exc}") from exc
    LOGGER.debug("loaded MCS table from %s", path)
    return McsTable.from_frame(frame, str(path))


def path_loss(d: Union[float, np.ndarray], frequency_mhz: float, exponent: float = 2.0):
    """Path loss in dB at distance ``d`` (m) and frequency (MHz); free space when exponent is 2."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(~np.isfinite(d_arr)) or np.any(d_arr <= 0):
        raise ValidationError(f"distance must be positive and finite, got {d!r}")
    loss = 10 * exponent * np.log10(d_arr) + 20 * math.log10(frequency_mhz) + FSPL_CONSTANT_DB
    return float(loss) if np.ndim(loss) == 0 else loss


def snr_at(d: Union[float, np.ndarray], budget: LinkBudget):
    """SNR in dB of a link of length ``d`` (m); antenna gains are 0 dBi."""
    return budget.budget_db - path_loss(d, budget.frequency_mhz, budget.path_loss_exponent)


def capacity_for_snr(snr: float, table: McsTable) -> float:
    """Data rate (Mbit/s) of the highest MCS whose threshold is met, 0 below MCS0."""
    if not math.isfinite(snr):
        raise ValidationError(f"SNR must be finite, got {snr!r}")
    rate = 0.0
    for entry in table.entries:
        if entry.min_snr_db <= snr:
            rate = entry.rate_mbps
        else:
            break
    return rate


def rates_for_snr(snr: np.ndarray, table: McsTable) -> np.ndarray:
    """Vectorised :func:`capacity_for_snr`."""
    idx = np.searchsorted(table.thresholds, np.asarray(snr, dtype=float), side="right")
    rates = np.concatenate(([0.0], table.rates))
    return rates[idx]


def max_distance_for_snr(target_snr: float, budget: LinkBudget) -> float:
    """Largest distance (m) at which the link still offers ``target_snr`` plus the margin.

    Raises:
        LinkBudgetError: the distance falls below the model's minimum valid distance.
    """
    if not math.isfinite(target_snr):
        raise ValidationError(f"target SNR must be finite, got {target_snr!r}")
    allowed_loss = budget.budget_db - (target_snr + budget.snr_margin_db)
    exponent_db = allowed_loss - 20 * math.log10(budget.frequency_mhz) - FSPL_CONSTANT_DB
    distance = 10 ** (exponent_db / (10 * budget.path_loss_exponent))
    if distance < budget.min_distance_m:
        raise LinkBudgetError(
            f"target SNR {target_snr:.2f} dB (+{budget.snr_margin_db:.2f} dB margin) needs a link "
            f"shorter than {budget.min_distance_m} m"
        )
    return distance


def min_mcs_for_rate(required_rate: float, table: McsTable) -> Optional[McsEntry]:
    """Smallest MCS whose rate is at least ``required_rate``; ``None`` when none is."""
    for entry in table.entries:
        if entry.rate_mbps >= required_rate:
            return entry
    return None

