"""
CSV and JSON file formats for profiles, mass curves, evolution traces and reports.

Floats are written with 17 significant digits, which round-trips binary64
exactly. Every file is written to a temporary name in the target directory
and renamed into place.
"""
import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, List, Sequence

import numpy as np

from app.data import CurvePoint, EvolutionTrace, MassCurve, Mesh, ProblemSpec, Profile
from app.exceptions import ParameterError

PROFILE_HEADER = ["r", "u"]
CURVE_HEADER = ["lambda", "mass", "dmass_dlambda", "umax", "rbar", "sslope"]
TRACE_HEADER = ["t", "mass", "energy", "orbital_distance", "phase"]


def format_float(value: float) -> str:
    """Decimal form with 17 significant digits."""
    return f"{float(value):.17g}"


def atomic_write_text(path: Path, text: str) -> Path:
    """Write text next to path and rename over it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(temporary, path)
    except OSError as exc:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise OSError(f"failed to write {path}: {exc}") from exc
    return path


def _render_rows(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(value) for value in row])
    return buffer.getvalue()


def generate_profile_csv(profile: Profile) -> str:
    return _render_rows(PROFILE_HEADER, zip(profile.mesh.nodes, profile.u))


def generate_curve_csv(curve: MassCurve) -> str:
    rows = (
        (point.lam, point.mass, point.mass_slope, point.u_max, point.r_bar, point.s_slope)
        for point in curve.points
    )
    return _render_rows(CURVE_HEADER, rows)


def generate_trace_csv(trace: EvolutionTrace) -> str:
    rows = zip(
        trace.times,
        trace.mass_series,
        trace.energy_series,
        trace.orbital_distance_series,
        trace.phase_series,
    )
    return _render_rows(TRACE_HEADER, rows)


def _read_rows(path: Path, header: List[str]) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as stream:
        reader = csv.reader(stream)
        found = next(reader, None)
        if found != header:
            raise ParameterError(f"{path}: expected header {','.join(header)}, found {found}")
        rows = [[float(value) for value in row] for row in reader if row]
    return np.array(rows, dtype=float).reshape(-1, len(header))


def read_profile_csv(path: Path, spec: ProblemSpec) -> Profile:
    """
    Rebuild a Profile from ``r,u`` rows.

    Peak data and the boundary slope are recomputed from the samples; the
    residual is recomputed by GroundStateService.residual.
    """
    from app.services.ground_state_service import (
        GroundStateService,
        boundary_slope,
        parabolic_peak,
    )

    data = _read_rows(Path(path), PROFILE_HEADER)
    mesh = Mesh(data[:, 0])
    u = np.ascontiguousarray(data[:, 1])
    u.setflags(write=False)
    u_max, r_bar = parabolic_peak(mesh.nodes, u)
    profile = Profile(
        spec=spec, mesh=mesh, u=u, s_slope=boundary_slope(mesh.nodes, u),
        u_max=u_max, r_bar=r_bar, residual_inf=float("nan"),
    )
    profile.residual_inf = GroundStateService.residual(profile)
    return profile


def read_curve_csv(path: Path, dim: int, p: float) -> MassCurve:
    data = _read_rows(Path(path), CURVE_HEADER)
    points = [CurvePoint(*map(float, row)) for row in data]
    lambdas = [point.lam for point in points]
    return MassCurve(
        dim=dim,
        p=p,
        points=points,
        lambda_min=min(lambdas) if lambdas else math.nan,
        lambda_max=max(lambdas) if lambdas else math.nan,
    )


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def generate_report_json(document: dict) -> str:
    """Sorted-key JSON; non-finite floats become null."""
    return json.dumps(_json_safe(document), indent=2, sort_keys=True, allow_nan=False) + "\n"
