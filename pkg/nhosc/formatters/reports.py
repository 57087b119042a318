"""
Report writers - CSV tables with JSON sidecars.

Every number goes through format_float, so identical runs produce
byte-identical files.
"""

import csv
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from nhosc.core.auxiliary import CSV_COLUMNS, AuxiliarySolution, TimeReparametrization
from nhosc.core.numeric import NormHistory, SpatialGrid, WavefunctionGrid
from nhosc.core.observables import EnergyReport
from nhosc.core.serialization import dumps, format_float, loads
from nhosc.shared.exceptions import GridMismatch

WAVEFUNCTION_COLUMNS = ("x", "re_psi", "im_psi", "abs2_psi")
ENERGY_COLUMNS = ("t", "n", "re_E", "im_E", "E_closed_paper", "E_closed_derived")
NORM_COLUMNS = ("t", "norm", "first_moment")


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format_float(float(value))


def write_table(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a header line and formatted rows."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_table(path: Path) -> Tuple[List[str], np.ndarray]:
    """Header and float matrix of a table written by write_table (blank cells become NaN)."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(v) if v != "" else np.nan for v in row] for row in reader]
    return header, np.array(rows, dtype=float).reshape(-1, len(header))


def write_json(path: Path, obj: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj, indent=True) + "\n")
    return path


def read_json(path: Path) -> Any:
    return loads(path.read_text())


def sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


# Wavefunctions

def write_wavefunction(path: Path, psi: WavefunctionGrid, n: Optional[int], param_hash: str) -> Path:
    """
    Dump ψ as x, re_psi, im_psi, abs2_psi plus a JSON sidecar.

    Args:
        path: CSV destination
        psi: State to write (never renormalized)
        n: Eigenmode index the state started from, if any
        param_hash: parameter_hash of the generating ParameterSet

    Returns:
        Path of the CSV file
    """
    v = psi.values
    rows = zip(psi.grid.x, v.real, v.imag, np.abs(v) ** 2)
    write_table(path, WAVEFUNCTION_COLUMNS, rows)
    write_json(sidecar(path), {
        "t": psi.t,
        "n": n,
        "parameter_hash": param_hash,
        "grid": {"x_min": psi.grid.x_min, "x_max": psi.grid.x_max, "n_points": psi.grid.n_points},
    })
    return path


def read_wavefunction(path: Path) -> Tuple[WavefunctionGrid, Dict[str, Any]]:
    """
    Load a wavefunction dump and its sidecar.

    Raises:
        GridMismatch: If the x column disagrees with the recorded grid
    """
    header, data = read_table(path)
    if tuple(header) != WAVEFUNCTION_COLUMNS:
        raise GridMismatch(f"{path} is not a wavefunction dump (columns {header})")
    meta = read_json(sidecar(path)) if sidecar(path).exists() else {}
    x = data[:, 0]
    spec = meta.get("grid") or {"x_min": float(x[0]), "x_max": float(x[-1]), "n_points": int(x.size)}
    grid = SpatialGrid(float(spec["x_min"]), float(spec["x_max"]), int(spec["n_points"]))
    if grid.n_points != x.size or not np.array_equal(grid.x, x):
        raise GridMismatch(f"{path}: x column does not match grid {grid}")
    psi = WavefunctionGrid(grid, data[:, 1] + 1j * data[:, 2], float(meta.get("t", 0.0)))
    return psi, meta


# Auxiliary tables

def write_aux_table(path: Path, aux: AuxiliarySolution) -> Path:
    """CSV in CSV_COLUMNS order plus the JSON header (m0, omega0, init, tolerances)."""
    write_table(path, CSV_COLUMNS, aux.table())
    write_json(sidecar(path), aux.header())
    return path


def read_aux_table(path: Path) -> AuxiliarySolution:
    """
    Rebuild an AuxiliarySolution from its CSV table and header.

    Second derivatives and the phase integrand are not stored; they are
    recovered from cubic splines of the stored first derivatives.
    """
    header, data = read_table(path)
    meta = read_json(sidecar(path))
    cols = {name: data[:, header.index(name)] for name in CSV_COLUMNS}
    t = cols["t"]

    def slope(values: np.ndarray) -> np.ndarray:
        return CubicSpline(t, values)(t, 1)

    m0 = float(meta["m0"])
    s, s_dot = cols["s"], cols["s_dot"]
    mu = cols["mu"]
    return AuxiliarySolution(
        reparam=TimeReparametrization(t, cols["tau"], mu),
        s_values=s,
        s_dot_values=s_dot,
        s_ddot_values=slope(s_dot),
        eta_values=cols["eta"],
        eta_dot_values=cols["eta_dot"],
        eta_ddot_values=slope(cols["eta_dot"]),
        mu_dot_values=slope(mu),
        f_tau_log=0.5 * np.log(s),
        f_tau_integral=cols["f_tau_integral"],
        f_tau_integrand=slope(cols["f_tau_integral"]),
        Omega_sq_values=cols["Omega_sq"],
        m0=m0,
        omega0=float(meta["omega0"]),
        unit_scale=bool(meta.get("unit_scale", False)),
        init=dict(meta.get("init", {})),
        tolerances=dict(meta.get("tolerances", {})),
    )


# Energy and norm reports

def write_energy_report(path: Path, report: EnergyReport) -> Path:
    """energy CSV (t, n, re_E, im_E, E_closed_paper, E_closed_derived) + JSON summary."""
    write_table(path, ENERGY_COLUMNS, report.rows())
    write_json(sidecar(path), report.summary())
    return path


def write_norm_history(path: Path, history: NormHistory) -> Path:
    return write_table(path, NORM_COLUMNS, zip(history.times, history.norms, history.first_moments))
