"""Optical brain-signal post-processing and the neural-efficiency metric.

Raw two-wavelength light intensities per prefrontal region are low-pass
filtered with a linear-phase windowed-sinc FIR (Hamming window, 0.1 Hz
cutoff by default), converted to hemoglobin concentration changes with the
modified Beer-Lambert law, and summed into total hemoglobin (HbT), the
cognitive-load proxy. Neural efficiency combines per-trial lift counts and
HbT as (z(lifts) - z(HbT)) / sqrt(2): performance achieved per unit mental
effort.
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

REGIONS = ("left_lateral", "left_medial", "right_medial", "right_lateral")

SQRT2 = math.sqrt(2.0)


def design_fir(order: int = 40, cutoff: float = 0.1, sample_rate: float = 2.0) -> np.ndarray:
    """Windowed-sinc low-pass FIR: ``order + 1`` symmetric taps, unit DC gain.

    Hamming window; ``order`` must be even so the filter has an integer
    group delay of order/2 samples.
    """
    if order <= 0 or order % 2 != 0:
        raise ValueError("order must be a positive even integer")
    if not (0.0 < cutoff < sample_rate / 2.0):
        raise ValueError("cutoff must lie in (0, sample_rate/2)")
    m = order // 2
    fc = cutoff / sample_rate
    half = np.empty(m + 1)
    for k in range(m + 1):
        x = k - m  # offset from center, <= 0
        half[k] = 2.0 * fc * np.sinc(2.0 * fc * x) * (0.54 - 0.46 * math.cos(2.0 * math.pi * k / order))
    taps = np.concatenate([half, half[-2::-1]])  # mirror: exact symmetry
    return taps / taps.sum()


def fir_response(taps: np.ndarray, freq: float, sample_rate: float) -> complex:
    """Complex frequency response of an FIR at one frequency."""
    k = np.arange(taps.size)
    return complex(np.sum(taps * np.exp(-2j * math.pi * freq / sample_rate * k)))


def apply_fir(taps: np.ndarray, series: np.ndarray) -> np.ndarray:
    """Filter a series, trimming the group delay so output aligns with input.

    Output sample i corresponds to input sample i + order/2; the result is
    ``len(series) - order`` samples long (both edge transients dropped).
    """
    x = np.asarray(series, dtype=float)
    order = taps.size - 1
    if x.size <= order:
        raise ValueError(f"series must be longer than the filter order ({order})")
    return np.convolve(x, taps, mode="valid")


@dataclass(frozen=True)
class MbllParams:
    """Modified Beer-Lambert constants.

    ``extinction`` is the 2x2 matrix of extinction coefficients in
    1/(mM*cm), rows = wavelengths, columns = (HbO, HbR). ``dpf`` is the
    differential pathlength factor per wavelength and ``distance`` the
    source-detector separation in cm. Defaults are documented literature
    values for a 730/850 nm forehead sensor pair.
    """

    extinction: tuple = ((0.390, 1.1022), (1.058, 0.6916))
    dpf: tuple = (6.0, 6.0)
    distance: float = 2.5

    def __post_init__(self):
        e = np.asarray(self.extinction, dtype=float)
        if e.shape != (2, 2):
            raise ValueError("extinction must be 2x2")
        if abs(np.linalg.det(e)) < 1e-12:
            raise ValueError("extinction matrix is singular")
        if any(d <= 0 for d in self.dpf) or self.distance <= 0:
            raise ValueError("dpf and distance must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.extinction, dtype=float)


@dataclass
class OpticalSeries:
    """Raw intensities per region: arrays of shape (n, 2), one column per wavelength."""

    sample_rate: float
    intensities: dict[str, np.ndarray]
    baselines: dict[str, np.ndarray]
    time: np.ndarray | None = None

    def __post_init__(self):
        lengths = {v.shape[0] for v in self.intensities.values()}
        if len(lengths) > 1:
            raise ValueError("all regions must have equal length")
        for region, arr in self.intensities.items():
            if arr.ndim != 2 or arr.shape[1] != 2:
                raise ValueError(f"region {region}: intensities must be (n, 2)")
            if np.any(arr <= 0):
                raise ValueError(f"region {region}: intensities must be positive")
        for region, base in self.baselines.items():
            if np.any(np.asarray(base) <= 0):
                raise ValueError(f"region {region}: baselines must be positive")


@dataclass
class HemoSeries:
    """Hemoglobin concentration changes (micromolar) per region; HbT = HbO + HbR."""

    sample_rate: float
    hbo: dict[str, np.ndarray] = field(default_factory=dict)
    hbr: dict[str, np.ndarray] = field(default_factory=dict)
    time: np.ndarray | None = None

    @property
    def hbt(self) -> dict[str, np.ndarray]:
        return {r: self.hbo[r] + self.hbr[r] for r in self.hbo}


def mbll(optical: OpticalSeries, params: MbllParams | None = None) -> HemoSeries:
    """Convert intensity series to concentration changes per region.

    dOD = -log10(I / I0) per wavelength; concentrations solve
    E @ c = dOD / (distance * dpf). Output is micromolar.
    """
    params = params or MbllParams()
    e = params.matrix
    scale = params.distance * np.asarray(params.dpf, dtype=float)
    hemo = HemoSeries(sample_rate=optical.sample_rate, time=optical.time)
    for region, intens in optical.intensities.items():
        i0 = np.asarray(optical.baselines[region], dtype=float)
        dod = -np.log10(intens / i0)
        rhs = dod / scale  # (n, 2), per wavelength
        conc_mM = np.linalg.solve(e, rhs.T)  # rows: (HbO, HbR)
        hemo.hbo[region] = conc_mM[0] * 1000.0
        hemo.hbr[region] = conc_mM[1] * 1000.0
    return hemo


def forward_intensity(
    hbo_uM: np.ndarray,
    hbr_uM: np.ndarray,
    baseline: np.ndarray,
    params: MbllParams | None = None,
) -> np.ndarray:
    """Forward Beer-Lambert model: intensities that mbll() inverts exactly.

    Used as the independent round-trip oracle and for synthesizing test data.
    """
    params = params or MbllParams()
    conc_mM = np.vstack([np.asarray(hbo_uM, dtype=float), np.asarray(hbr_uM, dtype=float)]) / 1000.0
    dod = (params.matrix @ conc_mM).T * (params.distance * np.asarray(params.dpf, dtype=float))
    return np.asarray(baseline, dtype=float) * np.power(10.0, -dod)


def zscore(x: np.ndarray) -> np.ndarray:
    """Standardize with the sample (n-1) deviation; zero-variance input warns
    and returns all zeros."""
    arr = np.asarray(x, dtype=float)
    if arr.size < 2:
        raise ValueError("zscore needs at least 2 samples")
    sd = float(np.std(arr, ddof=1))
    if sd == 0.0:
        warnings.warn("zscore of a constant series: returning zeros", RuntimeWarning)
        return np.zeros_like(arr)
    return (arr - arr.mean()) / sd


def neural_efficiency(lifts: np.ndarray, hbt: np.ndarray) -> np.ndarray:
    """Elementwise (z(lifts) - z(hbt)) / sqrt(2) over aligned series."""
    a = np.asarray(lifts, dtype=float)
    b = np.asarray(hbt, dtype=float)
    if a.shape != b.shape:
        raise ValueError("lifts and hbt must have equal length")
    return (zscore(a) - zscore(b)) / SQRT2


# -- CSV pipeline ------------------------------------------------------------


def read_optical_csv(path: str, sample_rate: float) -> OpticalSeries:
    """Load the optical input format: time_s, region, wl1_intensity, wl2_intensity.

    Rows with negative time form the baseline block; their per-channel means
    become I0. Without such rows, the first sample of each region is used.
    """
    times: dict[str, list] = {}
    vals: dict[str, list] = {}
    base: dict[str, list] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        need = {"time_s", "region", "wl1_intensity", "wl2_intensity"}
        if r.fieldnames is None or not need.issubset(r.fieldnames):
            raise ValueError(f"optical CSV must have columns {sorted(need)}")
        for row in r:
            region = row["region"]
            ts = float(row["time_s"])
            pair = (float(row["wl1_intensity"]), float(row["wl2_intensity"]))
            if ts < 0:
                base.setdefault(region, []).append(pair)
            else:
                times.setdefault(region, []).append(ts)
                vals.setdefault(region, []).append(pair)
    if not vals:
        raise ValueError(f"no samples in {path}")
    intensities = {r: np.asarray(v, dtype=float) for r, v in vals.items()}
    baselines = {}
    for region, arr in intensities.items():
        if region in base:
            baselines[region] = np.asarray(base[region], dtype=float).mean(axis=0)
        else:
            baselines[region] = arr[0].copy()
    any_region = next(iter(times))
    return OpticalSeries(
        sample_rate=sample_rate,
        intensities=intensities,
        baselines=baselines,
        time=np.asarray(times[any_region], dtype=float),
    )


def process_optical(
    optical: OpticalSeries,
    mbll_params: MbllParams | None = None,
    fir_order: int = 40,
    cutoff: float = 0.1,
) -> HemoSeries:
    """Run the full chain: FIR low-pass on raw intensities, then Beer-Lambert."""
    taps = design_fir(fir_order, cutoff, optical.sample_rate)
    filtered = {}
    for region, arr in optical.intensities.items():
        filtered[region] = np.column_stack(
            [apply_fir(taps, arr[:, 0]), apply_fir(taps, arr[:, 1])]
        )
    trimmed_time = None
    if optical.time is not None:
        half = fir_order // 2
        trimmed_time = optical.time[half : optical.time.size - half]
    clipped = OpticalSeries(
        sample_rate=optical.sample_rate,
        intensities=filtered,
        baselines=optical.baselines,
        time=trimmed_time,
    )
    return mbll(clipped, mbll_params)


def write_hemo_csv(path: str, hemo: HemoSeries) -> None:
    """Output format: time_s, region, hbo, hbr, hbt."""
    hbt = hemo.hbt
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "region", "hbo", "hbr", "hbt"])
        regions = sorted(hemo.hbo)
        n = len(next(iter(hemo.hbo.values())))
        time = hemo.time if hemo.time is not None else np.arange(n) / hemo.sample_rate
        for region in regions:
            for i in range(n):
                w.writerow(
                    [repr(float(time[i])), region, repr(float(hemo.hbo[region][i])),
                     repr(float(hemo.hbr[region][i])), repr(float(hbt[region][i]))]
                )


def trial_means(hemo: HemoSeries, trial_s: float = 60.0, break_s: float = 30.0,
                trials: int = 7) -> dict[str, np.ndarray]:
    """Mean HbT per trial window per region; NaN for windows with no samples."""
    if hemo.time is None:
        n = len(next(iter(hemo.hbo.values())))
        time = np.arange(n) / hemo.sample_rate
    else:
        time = hemo.time
    hbt = hemo.hbt
    out = {}
    for region, series in hbt.items():
        means = np.full(trials, np.nan)
        for k in range(trials):
            start = k * (trial_s + break_s)
            mask = (time >= start) & (time < start + trial_s)
            if mask.any():
                means[k] = float(series[mask].mean())
        out[region] = means
    return out


def read_lifts_csv(path: str, session_id: str | None = None) -> tuple[str, np.ndarray]:
    """Pull per-trial lift counts for one session from a trials CSV."""
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        for row in r:
            rows.append(row)
    if not rows:
        raise ValueError(f"no rows in {path}")
    sessions = sorted({row["session_id"] for row in rows})
    if session_id is None:
        if len(sessions) > 1:
            raise ValueError(
                f"trials CSV holds {len(sessions)} sessions; pass session_id"
            )
        session_id = sessions[0]
    trial_lifts = {int(r["trial"]): float(r["lifts"]) for r in rows if r["session_id"] == session_id}
    if not trial_lifts:
        raise ValueError(f"session {session_id!r} not in {path}")
    ordered = [trial_lifts[k] for k in sorted(trial_lifts)]
    return session_id, np.asarray(ordered, dtype=float)


def write_efficiency_csv(path: str, session_id: str, lifts: np.ndarray,
                         means: dict[str, np.ndarray]) -> None:
    """Metrics output: session_id, trial, region, mean_hbt, lifts, neural_efficiency.

    z-scores run across the trial axis within this session, matching the
    per-trial efficiency figures.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["session_id", "trial", "region", "mean_hbt", "lifts", "neural_efficiency"])
        for region in sorted(means):
            hbt = means[region]
            if np.any(np.isnan(hbt)):
                raise ValueError(f"region {region}: trial windows without samples")
            eff = neural_efficiency(lifts, hbt)
            for k in range(lifts.size):
                w.writerow(
                    [session_id, k + 1, region, repr(float(hbt[k])),
                     repr(float(lifts[k])), repr(float(eff[k]))]
                )


def analyze_files(
    optical_path: str,
    lifts_path: str,
    out_dir: str,
    sample_rate: float = 2.0,
    session_id: str | None = None,
    mbll_params: MbllParams | None = None,
    fir_order: int = 40,
    cutoff: float = 0.1,
    trial_s: float = 60.0,
    break_s: float = 30.0,
) -> dict[str, str]:
    """End-to-end: optical CSV -> hemoglobin CSV + neural-efficiency CSV."""
    os.makedirs(out_dir, exist_ok=True)
    optical = read_optical_csv(optical_path, sample_rate)
    hemo = process_optical(optical, mbll_params, fir_order, cutoff)
    session_id, lifts = read_lifts_csv(lifts_path, session_id)
    means = trial_means(hemo, trial_s, break_s, trials=lifts.size)
    paths = {
        "hemoglobin": os.path.join(out_dir, "hemoglobin.csv"),
        "neural_efficiency": os.path.join(out_dir, "neural_efficiency.csv"),
    }
    write_hemo_csv(paths["hemoglobin"], hemo)
    write_efficiency_csv(paths["neural_efficiency"], session_id, lifts, means)
    return paths
