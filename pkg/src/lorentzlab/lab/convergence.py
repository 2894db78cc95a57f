"""Convergence studies over epsilon (and ripple wavelength) sequences."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..solver import Status
from .config import Scenario, member
from .runner import RunResult, run_scenario

_ERROR_COLUMN = {"radial": "hausdorff", "front": "hausdorff", "exact": "interface_error", "graph": "graph_linf"}

METRICS = ("interface_error", "equipartition", "projection_trace", "stationarity", "energy_drift")


def fitted_order(eps, values) -> float:
    """Least-squares slope of ``log value`` against ``log eps`` (NaN if < 2 usable points)."""
    e = np.asarray(eps, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = np.isfinite(v) & (v > 0)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(e[ok]), np.log(v[ok]), 1)[0])


def inverse_log_fit(eps, values) -> tuple[float, float]:
    """Best ``C`` in ``value ~ C / |log eps|`` and the largest relative misfit."""
    L = np.abs(np.log(np.asarray(eps, dtype=float)))
    v = np.asarray(values, dtype=float)
    C = float(np.sum(v / L) / np.sum(1.0 / L ** 2))
    fit = C / L
    return C, float(np.max(np.abs(v - fit) / fit))


def decreasing(eps, values) -> bool:
    """True when values strictly decrease as epsilon decreases."""
    order = np.argsort(eps)[::-1]
    v = np.asarray(values, dtype=float)[order]
    return bool(np.all(np.isfinite(v)) and np.all(np.diff(v) < 0))


@dataclass
class ConvergenceReport:
    epsilon_list: list[float]
    status: list[str]
    metrics: dict[str, list[float]]
    orders: dict[str, float]
    monotone: dict[str, bool]
    log_fit: tuple[float, float] | None = None
    results: list[RunResult] = field(default_factory=list, repr=False)

    def rows(self) -> list[list]:
        out = []
        for i, e in enumerate(self.epsilon_list):
            out.append([e, self.status[i], *(self.metrics[m][i] for m in METRICS)])
        return out

    def write(self, out: Path) -> None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "convergence.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["epsilon", "status", *METRICS])
            for r in self.rows():
                w.writerow([repr(float(r[0])), r[1], *(repr(float(v)) for v in r[2:])])
        (out / "report.txt").write_text(self.text())

    def text(self) -> str:
        lines = ["convergence study", "", f"{'epsilon':>10} {'status':>10} " + " ".join(f"{m:>17}" for m in METRICS)]
        for r in self.rows():
            lines.append(f"{r[0]:>10.4g} {r[1]:>10} " + " ".join(f"{v:>17.6g}" for v in r[2:]))
        lines.append("")
        lines.append("fitted order in epsilon (slope of log metric vs log eps):")
        for m in METRICS:
            lines.append(f"  {m:<17} {self.orders[m]:8.3f}   decreasing with eps: {self.monotone[m]}")
        if self.log_fit is not None:
            C, mis = self.log_fit
            lines.append(f"equipartition ~ C/|log eps|: C = {C:.6g}, max relative misfit = {mis:.3g}")
        return "\n".join(lines) + "\n"


def _member_metrics(s: Scenario, r: RunResult) -> dict[str, float]:
    out = dict.fromkeys(METRICS, math.nan)
    col = _ERROR_COLUMN.get(s.reference)
    if col and r.reference:
        vals = np.array([row[col] for row in r.reference], dtype=float)
        if np.isfinite(vals).any():
            out["interface_error"] = float(np.nanmax(vals))
    eq = r.column("equipartition")
    eq = eq[np.isfinite(eq)]
    if eq.size:
        out["equipartition"] = float(eq[-1])
    traces = [p["trace"] for p in r.projections if "trace" in p]
    if traces:
        out["projection_trace"] = float(traces[-1])
    if r.stationarity is not None:
        out["stationarity"] = float(np.max(np.abs(r.stationarity)))
    drift = r.column("energy_drift")
    if drift.size:
        out["energy_drift"] = float(np.nanmax(np.abs(drift)))
    return out


def convergence_study(s: Scenario) -> ConvergenceReport:
    """Run every epsilon of ``s`` and summarise the trends.

    Members run one after another; a diverged member is marked in the
    report and the others still run.
    """
    if not s.is_convergence:
        raise ValueError("scenario has no epsilon list")
    eps = [float(e) for e in s.epsilon_list]
    metrics = {m: [] for m in METRICS}
    status, results = [], []
    for e in eps:
        r = run_scenario(member(s, e))
        results.append(r)
        status.append(r.status.value)
        mm = _member_metrics(r.scenario, r)
        for m in METRICS:
            metrics[m].append(mm[m] if r.status is Status.COMPLETED or m == "energy_drift" else math.nan)
    orders = {m: fitted_order(eps, metrics[m]) for m in METRICS}
    mono = {m: decreasing(eps, metrics[m]) for m in METRICS}
    log_fit = None
    if s.k == 2 and all(np.isfinite(metrics["equipartition"])):
        log_fit = inverse_log_fit(eps, metrics["equipartition"])
    rep = ConvergenceReport(eps, status, metrics, orders, mono, log_fit, results)
    rep.write(s.output_dir)
    return rep


# --- ripples --------------------------------------------------------------


@dataclass
class RippleReport:
    """Deviation of the rippled interface from the smooth circle, per wavelength."""

    rows: list[dict]
    results: list[RunResult] = field(default_factory=list, repr=False)

    columns = ("wavelength", "amplitude", "epsilon", "cells", "modes", "status", "mean_dev_max", "mean_dev_avg",
               "mean_dev_final", "hausdorff_max", "energy_drift")

    def write(self, out: Path) -> None:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "ripples.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([r[c] if isinstance(r[c], str) else repr(r[c]) for c in self.columns])
        lines = ["ripples: deviation of the mean interface radius from the smooth collapsing circle", ""]
        lines.append(" ".join(f"{c:>14}" for c in self.columns))
        for r in self.rows:
            lines.append(" ".join(f"{r[c]:>14}" if isinstance(r[c], str) else f"{r[c]:>14.6g}"
                                  for c in self.columns))
        devs = [abs(r["mean_dev_avg"]) for r in self.rows]
        trend = "does not vanish" if devs and min(devs) > 0.25 * max(devs) else "shrinks"
        lines += ["", f"mean deviation {trend} as the wavelength decreases "
                      f"(|avg| from {devs[0]:.4g} to {devs[-1]:.4g})" if devs else ""]
        (out / "ripples_report.txt").write_text("\n".join(lines) + "\n")


def ripple_study(s: Scenario) -> RippleReport:
    """One run per (epsilon, wavelength) pair at fixed amplitude/wavelength ratio."""
    from ..exact import ripple_radius

    lams = s["ripples.wavelength_list"]
    ratio = s["ripples.ratio"]
    cells = s["grid.cells_list"] or (s["grid.cells"],) * len(lams)
    rows, results = [], []
    for e, lam, c in zip(s.epsilon_list, lams, cells):
        m = member(s, e, f"lambda_{lam:g}", initial__wavelength=float(lam), initial__amplitude=ratio * lam,
                   grid__cells=int(c))
        r = run_scenario(m)
        results.append(r)
        dev = np.array([row["mean_deviation"] for row in r.reference], dtype=float)
        hd = np.array([row["hausdorff"] for row in r.reference], dtype=float)
        t = np.array([row["t"] for row in r.reference], dtype=float)
        ok = np.isfinite(dev)
        avg = float(np.trapezoid(dev[ok], t[ok]) / (t[ok][-1] - t[ok][0])) if ok.sum() > 1 else math.nan
        rows.append({
            "wavelength": float(lam), "amplitude": ratio * lam, "epsilon": float(e), "cells": int(c),
            "modes": ripple_radius(s["initial.r0"], ratio * lam, lam)[1], "status": r.status.value,
            "mean_dev_max": float(np.nanmax(np.abs(dev))) if ok.any() else math.nan,
            "mean_dev_avg": avg,
            "mean_dev_final": float(dev[ok][-1]) if ok.any() else math.nan,
            "hausdorff_max": float(np.nanmax(hd)) if np.isfinite(hd).any() else math.nan,
            "energy_drift": float(np.nanmax(np.abs(r.column("energy_drift")))),
        })
    rep = RippleReport(rows, results)
    rep.write(s.output_dir)
    return rep


__all__ = ["convergence_study", "ripple_study", "ConvergenceReport", "RippleReport", "fitted_order",
           "inverse_log_fit", "decreasing"]
