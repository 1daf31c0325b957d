"""
CSV input and output.

Samples are read from files with the columns ``stress``, ``log_time`` and
``status`` (``failed`` or ``censored``).  Numeric output uses 17 significant
digits so that values read back are bit-identical.
"""

import csv
import logging
import math
from collections import OrderedDict
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .distributions import CensoredSample, Status, StressGroup
from .errors import InputError

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ["stress", "log_time", "status"]
NUMBER_FORMAT = ".17g"


def format_value(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), NUMBER_FORMAT)
    return str(value)


def read_sample_csv(filepath, censor_time: Optional[float] = None) -> CensoredSample:
    """
    Load a censored sample.

    Without ``censor_time`` the censoring time is taken from the censored
    rows, which must agree; a file without censored rows is censored at its
    largest failure time.
    """
    try:
        csvfile = open(filepath, newline="", encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {filepath}: {e}") from e
    with csvfile:
        reader = csv.DictReader(csvfile)
        headers = reader.fieldnames
        if not headers:
            raise InputError("CSV file is missing headers")
        for col in REQUIRED_COLUMNS:
            if col not in headers:
                raise InputError(f"Missing required column: {col}")

        groups = OrderedDict()
        for line, row in enumerate(reader, start=2):
            # Ignore empty rows
            if all(not (row.get(col) or "").strip() for col in REQUIRED_COLUMNS):
                continue
            try:
                stress = float(row["stress"])
                log_time = float(row["log_time"])
                status = Status(row["status"].strip().lower())
            except (TypeError, ValueError) as e:
                raise InputError(f"{filepath}, line {line}: {e}") from e
            if not math.isfinite(log_time):
                raise InputError(f"{filepath}, line {line}: log_time must be finite")
            groups.setdefault(stress, []).append((log_time, status is Status.FAILED))

    if not groups:
        raise InputError(f"{filepath} holds no observations")

    censored_times = [t for obs in groups.values() for t, failed in obs if not failed]
    if censor_time is None:
        if censored_times:
            ln_tau = censored_times[0]
            if any(abs(t - ln_tau) > 1e-9 for t in censored_times):
                raise InputError("censored rows disagree on the censoring time")
        else:
            ln_tau = max(t for obs in groups.values() for t, _ in obs)
        censor_time = math.exp(ln_tau)

    sample = CensoredSample(
        tuple(
            StressGroup(
                stress,
                np.array([t for t, _ in obs]),
                np.array([failed for _, failed in obs]),
            )
            for stress, obs in sorted(groups.items())
        ),
        censor_time,
    )
    logger.info(
        "read %d units at %d stresses from %s",
        sample.size,
        len(sample.groups),
        filepath,
    )
    return sample


def write_sample_csv(sample: CensoredSample, filepath) -> None:
    write_rows_csv(
        filepath,
        REQUIRED_COLUMNS,
        [(s, t, status.value) for s, t, status in sample.rows()],
    )


def write_rows_csv(filepath, header: Sequence[str], rows: Iterable[Sequence]) -> int:
    count = 0
    with open(filepath, "w", newline="", encoding="utf-8") as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    return count


def write_param_csv(filepath, params: Iterable[Sequence]) -> int:
    """``param,value`` table."""
    return write_rows_csv(filepath, ["param", "value"], params)


def read_rows_csv(filepath) -> List[dict]:
    with open(filepath, newline="", encoding="utf-8") as csvfile:
        return list(csv.DictReader(csvfile))
