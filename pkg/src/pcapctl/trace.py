"""Trace records and their CSV persistence.

One record per sampling period.  CSV schema (header row included)::

    time_s,pcap_requested_w,power_measured_w,progress_hz,stale_flag,energy_j,iterations
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

CSV_HEADER = [
    "time_s",
    "pcap_requested_w",
    "power_measured_w",
    "progress_hz",
    "stale_flag",
    "energy_j",
    "iterations",
]


@dataclass(frozen=True)
class TraceRecord:
    time_s: float
    pcap_requested_w: float
    power_measured_w: float
    progress_hz: float
    stale_flag: bool = False
    energy_j: float = 0.0
    iterations: float = 0.0


def write_trace(trace: list[TraceRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in trace:
            writer.writerow([
                repr(rec.time_s),
                repr(rec.pcap_requested_w),
                repr(rec.power_measured_w),
                repr(rec.progress_hz),
                int(rec.stale_flag),
                repr(rec.energy_j),
                repr(rec.iterations),
            ])


def read_trace(path: str | Path) -> list[TraceRecord]:
    out: list[TraceRecord] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected trace CSV header in {path}: {reader.fieldnames}")
        for row in reader:
            out.append(TraceRecord(
                time_s=float(row["time_s"]),
                pcap_requested_w=float(row["pcap_requested_w"]),
                power_measured_w=float(row["power_measured_w"]),
                progress_hz=float(row["progress_hz"]),
                stale_flag=bool(int(row["stale_flag"])),
                energy_j=float(row["energy_j"]),
                iterations=float(row["iterations"]),
            ))
    return out
