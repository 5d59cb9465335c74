"""CSV persistence and run manifests."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from trappedset import __version__
from trappedset.errors import ConfigurationError
from trappedset.orbits import LengthSpectrum, Model, OrbitCode, PeriodicOrbit

ORBIT_HEADER = (
    "model",
    "code",
    "length",
    "primitive_length",
    "repetition",
    "unstable_exponent",
    "log_abs_det_one_minus_P",
)
SPECTRUM_HEADER = ("T", "count", "witness_found", "left_gap", "right_gap", "cluster_span")
PRESSURE_HEADER = ("T", "window_sum", "log_window_sum")
BOWEN_HEADER = ("t_u", "d_H", "bracket_lo", "bracket_hi")
TRACE_HEADER = ("T", "lambda", "re", "im", "truncation_bound", "n_orbits")
PAIR_HEADER = ("T", "lambda", "re", "im", "truncation_bound", "n_resonances")
COUNT_HEADER = ("r", "count")


def fmt(x) -> str:
    """17 significant digits for floats, plain text otherwise."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if x is None:
        return ""
    try:
        v = float(x)
    except (TypeError, ValueError):
        return str(x)
    if math.isnan(v):
        return "nan"
    return f"{v:.17g}"


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` (``-`` or ``None`` means standard output)."""
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def orbit_rows(spectrum: LengthSpectrum):
    for o in spectrum:
        yield (
            o.code.model.value,
            str(o.code),
            o.length,
            o.primitive_length,
            o.repetition,
            o.unstable_exponent,
            o.log_stability_det,
        )


def orbits_csv(spectrum: LengthSpectrum) -> str:
    return csv_text(ORBIT_HEADER, orbit_rows(spectrum))


def read_orbits(path, horizon: float, complete: bool = True, oriented: bool = False) -> LengthSpectrum:
    """Load an orbit CSV back into a spectrum of the given horizon."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != ORBIT_HEADER:
        raise ConfigurationError(f"{path}: header must be {','.join(ORBIT_HEADER)}")
    orbits = []
    descriptor = ""
    for i, row in enumerate(rows[1:], start=2):
        try:
            model = Model(row[0])
            orbits.append(
                PeriodicOrbit(
                    code=OrbitCode.parse(model, row[1]),
                    length=float(row[2]),
                    primitive_length=float(row[3]),
                    repetition=int(row[4]),
                    unstable_exponent=float(row[5]),
                    log_stability_det=float(row[6]),
                )
            )
        except (ValueError, IndexError) as exc:
            raise ConfigurationError(f"{path}:{i}: {exc}") from exc
    return LengthSpectrum(tuple(orbits), horizon, descriptor, complete, oriented)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: list
    config_hash: str
    model_descriptor: str
    code_version: str = __version__
    seeds: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    orbit_count: int | None = None
    results: dict = field(default_factory=dict)
    started: float = field(default_factory=time.time, repr=False)

    def record_output(self, path) -> None:
        if path not in (None, "-"):
            self.outputs[os.path.abspath(path)] = sha256_file(path)

    def finish(self) -> None:
        self.wall_clock = time.time() - self.started

    def to_json(self) -> str:
        data = asdict(self)
        data.pop("started")
        return json.dumps(data, indent=2, sort_keys=True, default=str) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def read(cls, path) -> "RunManifest":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(**data)
