"""Report containers and their CSV / JSON / gnuplot emitters.

Floats are written with ``repr`` so every emitted value parses back to the
identical double.
"""

import csv
from dataclasses import dataclass, field
import io
import json
import math
import os
from typing import Dict, List, Optional, Sequence

from ..errors import FitError
from ..fitting import LineFit, fit_slope

RATE_COLUMNS = ("n", "N", "sup_error", "l2_error", "mc_error", "wall_ms")
OOS_COLUMNS = ("n", "N", "manifold_error", "tube_error", "ratio", "wall_ms")


def fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def fmt_ms(v) -> str:
    return f"{float(v):.3f}"


def parse(v: str):
    try:
        return int(v)
    except ValueError:
        return float(v)


def loglog(xs: Sequence[float], ys: Sequence[float], min_points: int = 2) -> Optional[LineFit]:
    """Fit on positive finite pairs; ``None`` when too few remain or x is constant."""
    pts = [(math.log(x), math.log(y)) for x, y in zip(xs, ys)
           if x > 0 and y > 0 and math.isfinite(x) and math.isfinite(y)]
    if len(pts) < max(2, min_points):
        return None
    try:
        return fit_slope(pts)
    except FitError:
        return None


def fit_dict(fit: Optional[LineFit]) -> Optional[dict]:
    return None if fit is None else {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2}


def _csv(columns, rows, ms_column="wall_ms") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt_ms(row[c]) if c == ms_column else fmt(row[c]) for c in columns])
    return buf.getvalue()


def read_csv(text: str) -> List[Dict[str, float]]:
    rows = list(csv.reader(io.StringIO(text)))
    head = rows[0]
    return [{k: parse(v) for k, v in zip(head, r)} for r in rows[1:]]


def strip_column(text: str, column: str = "wall_ms") -> str:
    """CSV text without one column (used for byte comparisons)."""
    rows = list(csv.reader(io.StringIO(text)))
    j = rows[0].index(column)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r[:j] + r[j + 1:])
    return buf.getvalue()


def _dat(columns, rows) -> str:
    lines = ["# " + " ".join(columns)]
    lines += [" ".join(fmt(row[c]) for c in columns) for row in rows]
    return "\n".join(lines) + "\n"


@dataclass
class StudyReport:
    """Rows plus fitted slopes of one sweep experiment."""

    kind: str
    columns: Sequence[str]
    rows: List[dict]
    fits: Dict[str, Optional[dict]]
    seed: int
    predicted_exponent: Optional[float] = None
    failures: List[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def fit(self, name: str) -> Optional[LineFit]:
        d = self.fits.get(name)
        return None if d is None else LineFit(d["slope"], d["intercept"], d["r2"])

    @property
    def slope(self) -> Optional[float]:
        d = self.fits.get("sup_error")
        return None if d is None else d["slope"]

    def column(self, name: str) -> List[float]:
        return [r[name] for r in self.rows]

    def to_csv(self) -> str:
        return _csv(self.columns, self.rows)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "columns": list(self.columns),
            "rows": self.rows,
            "fits": self.fits,
            "predicted_exponent": self.predicted_exponent,
            "failures": self.failures,
            **self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, allow_nan=True)

    def plot_script(self, stem: str) -> str:
        """Gnuplot script plotting every error column against N."""
        cols = [c for c in self.columns if c not in ("n", "N", "wall_ms", "ratio")]
        idx = {c: i + 1 for i, c in enumerate(self.columns)}
        series = ", \\\n     ".join(
            f"'{stem}.dat' using {idx['N']}:{idx[c]} with linespoints title '{c}'" for c in cols)
        fit = self.fits.get("sup_error")
        lines = [
            "set terminal pngcairo size 800,600",
            f"set output '{stem}.png'",
            "set logscale xy",
            "set xlabel 'N'",
            "set ylabel 'error'",
            "set key top right",
        ]
        if fit is not None:
            lines.append(f"fit_line(x) = exp({fit['intercept']!r}) * x**({fit['slope']!r})")
            series += f", \\\n     fit_line(x) title 'slope {fit['slope']:.3f}'"
        lines.append("plot " + series)
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str, stem: Optional[str] = None) -> Dict[str, str]:
        stem = stem or self.kind
        os.makedirs(out_dir, exist_ok=True)
        paths = {ext: os.path.join(out_dir, f"{stem}.{ext}") for ext in ("csv", "json", "dat", "plt")}
        payload = {"csv": self.to_csv(), "json": self.to_json() + "\n",
                   "dat": _dat(self.columns, self.rows), "plt": self.plot_script(stem)}
        for ext, path in paths.items():
            with open(path, "w") as fh:
                fh.write(payload[ext])
        return paths
