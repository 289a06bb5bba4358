"""Per-tick telemetry buffer and its delimited on-disk form.

One row per control tick. Floats are serialized with Python's shortest
round-trip repr so that a parsed log reproduces bit-identical values; metric
files re-derived from a parsed log therefore match the originals byte for
byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

COLUMNS = [
    "t",
    "mode",
    "stage",
    "S_f",
    "S_e",
    "u_c",
    "aperture_pct",
    "L",
    "nu_envelope",
    "led",
    "airborne",
    "broken",
    "event",
]

MODE_NAMES = {0: "nofeedback", 1: "feedback", 2: "manual", 3: "armed", 4: "auto"}
MODE_CODES = {v: k for k, v in MODE_NAMES.items()}


@dataclass
class Telemetry:
    """Column-oriented tick log; build with :meth:`append`, then freeze."""

    dt: float
    t: list = field(default_factory=list)
    mode: list = field(default_factory=list)
    stage: list = field(default_factory=list)
    s_f: list = field(default_factory=list)
    s_e: list = field(default_factory=list)
    u_c: list = field(default_factory=list)
    aperture_pct: list = field(default_factory=list)
    load: list = field(default_factory=list)
    nu: list = field(default_factory=list)
    led: list = field(default_factory=list)
    airborne: list = field(default_factory=list)
    broken: list = field(default_factory=list)
    events: dict = field(default_factory=dict)  # tick index -> "a;b" event names

    def append(self, t, mode, stage, s_f, s_e, u_c, aperture_pct, load, nu,
               led, airborne, broken, event=""):
        self.t.append(t)
        self.mode.append(mode)
        self.stage.append(stage)
        self.s_f.append(s_f)
        self.s_e.append(s_e)
        self.u_c.append(u_c)
        self.aperture_pct.append(aperture_pct)
        self.load.append(load)
        self.nu.append(nu)
        self.led.append(led)
        self.airborne.append(airborne)
        self.broken.append(broken)
        if event:
            self.events[len(self.t) - 1] = event

    def __len__(self) -> int:
        return len(self.t)

    def arrays(self) -> dict[str, np.ndarray]:
        """Numeric columns as numpy arrays (bools as bool arrays)."""
        return {
            "t": np.asarray(self.t, dtype=float),
            "mode": np.asarray(self.mode, dtype=np.int8),
            "stage": np.asarray(self.stage, dtype=np.int8),
            "s_f": np.asarray(self.s_f, dtype=float),
            "s_e": np.asarray(self.s_e, dtype=float),
            "u_c": np.asarray(self.u_c, dtype=float),
            "aperture_pct": np.asarray(self.aperture_pct, dtype=float),
            "load": np.asarray(self.load, dtype=float),
            "nu": np.asarray(self.nu, dtype=float),
            "led": np.asarray(self.led, dtype=bool),
            "airborne": np.asarray(self.airborne, dtype=bool),
            "broken": np.asarray(self.broken, dtype=bool),
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(COLUMNS)
            events = self.events
            for i in range(len(self.t)):
                w.writerow(
                    (
                        repr(self.t[i]),
                        MODE_NAMES[self.mode[i]],
                        self.stage[i],
                        repr(self.s_f[i]),
                        repr(self.s_e[i]),
                        repr(self.u_c[i]),
                        repr(self.aperture_pct[i]),
                        repr(self.load[i]),
                        repr(self.nu[i]),
                        int(self.led[i]),
                        int(self.airborne[i]),
                        int(self.broken[i]),
                        events.get(i, ""),
                    )
                )

    @classmethod
    def from_csv(cls, path, dt: float | None = None) -> "Telemetry":
        tel = cls(dt=dt if dt is not None else 0.0)
        with open(path, "r", newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header != COLUMNS:
                raise ValueError(f"unexpected telemetry header in {path}")
            for row in r:
                tel.append(
                    float(row[0]),
                    MODE_CODES[row[1]],
                    int(row[2]),
                    float(row[3]),
                    float(row[4]),
                    float(row[5]),
                    float(row[6]),
                    float(row[7]),
                    float(row[8]),
                    row[9] == "1",
                    row[10] == "1",
                    row[11] == "1",
                    row[12],
                )
        if dt is None and len(tel.t) >= 2:
            tel.dt = tel.t[1] - tel.t[0]
        return tel
