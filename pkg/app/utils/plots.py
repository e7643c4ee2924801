"""
Static SVG plots: mass curve, rescaled profile against the soliton, orbital distance.

Figures are built on matplotlib.figure.Figure (no pyplot state), with a fixed
SVG hash salt and no date metadata so identical inputs give identical files.
"""
import io
from pathlib import Path
from typing import List, Optional

import matplotlib

matplotlib.use("Agg")
import numpy as np
from matplotlib.figure import Figure

from app.data import EvolutionTrace, MassCurve, Profile, SolitonRef, SolutionRoot, Stability
from app.utils.csv_io import atomic_write_text

matplotlib.rcParams["svg.hashsalt"] = "annulus-nls"

_STABILITY_COLORS = {
    Stability.STABLE: "tab:green",
    Stability.UNSTABLE: "tab:red",
    Stability.MARGINAL: "tab:orange",
}


def _save(figure: Figure, path: Path) -> Path:
    buffer = io.StringIO()
    figure.savefig(buffer, format="svg", metadata={"Date": None})
    return atomic_write_text(path, buffer.getvalue())


def plot_mass_curve(
    curve: MassCurve,
    path: Path,
    solutions: Optional[List[SolutionRoot]] = None,
    eta: Optional[float] = None,
) -> Path:
    """d(lambda) with increasing segments green and decreasing segments red."""
    figure = Figure(figsize=(6.4, 4.0))
    axes = figure.add_subplot(1, 1, 1)
    lambdas, masses, slopes = curve.lambdas, curve.masses, curve.slopes
    for k in range(len(lambdas) - 1):
        rising = slopes[k] + slopes[k + 1] > 0.0
        axes.plot(
            lambdas[k:k + 2], masses[k:k + 2],
            color=_STABILITY_COLORS[Stability.STABLE if rising else Stability.UNSTABLE],
            linewidth=1.5,
        )
    if eta is not None:
        axes.axhline(eta, color="0.5", linestyle="--", linewidth=0.8, label="threshold")
    for root in solutions or []:
        axes.plot(root.lam, root.mass, "o", color=_STABILITY_COLORS[root.stability])
    if np.all(lambdas > 0.0):
        axes.set_xscale("log")
    axes.set_xlabel("lambda")
    axes.set_ylabel("mass d(lambda)")
    axes.set_title(f"N = {curve.dim}, p = {curve.p:g}")
    return _save(figure, path)


def plot_rescaled_profile(profile: Profile, rescaled, path: Path, half_width: float = 5.0) -> Path:
    """Rescaled profile omega against the soliton W on |rho| <= half_width."""
    rho = np.linspace(-half_width, half_width, 801)
    figure = Figure(figsize=(6.4, 4.0))
    axes = figure.add_subplot(1, 1, 1)
    axes.plot(rho, rescaled(rho), label="omega")
    axes.plot(rho, SolitonRef(profile.spec.p)(rho), linestyle="--", label="W")
    axes.set_xlabel("rho")
    axes.legend()
    axes.set_title(f"lambda = {profile.lam:g}")
    return _save(figure, path)


def plot_orbital_distance(trace: EvolutionTrace, path: Path) -> Path:
    figure = Figure(figsize=(6.4, 4.0))
    axes = figure.add_subplot(1, 1, 1)
    distances = np.maximum(np.asarray(trace.orbital_distance_series), 1e-300)
    axes.semilogy(trace.times, distances)
    if trace.blowup_time is not None:
        axes.axvline(trace.blowup_time, color="tab:red", linestyle=":")
    axes.set_xlabel("t")
    axes.set_ylabel("orbital distance")
    return _save(figure, path)
