"""Figure renderers: deterministic SVG/PNG from experiment CSVs."""
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import schema, theory

FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5")

# fixed style so identical inputs give identical bytes
_STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "svg.hashsalt": "fermiplots",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.markersize": 5,
    "legend.fontsize": 8,
}

_MARKERS = ("o", "s", "^", "d", "v", "p", "*", "x")


@dataclass(frozen=True)
class FigureSpec:
    figure: str
    inputs: Tuple[str, ...]
    output: str
    units: str = "nats"

    def __post_init__(self):
        if self.figure not in FIGURE_IDS:
            raise ValueError(f"unknown figure {self.figure!r}; "
                             f"expected one of {', '.join(FIGURE_IDS)}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.units not in ("nats", "log2"):
            raise ValueError(f"unknown units {self.units!r}")
        ext = os.path.splitext(self.output)[1].lower()
        if ext not in (".svg", ".png"):
            raise ValueError(f"unsupported output format {ext!r}; "
                             "use .svg or .png")


def _save(fig, path: str) -> None:
    # strip the writer's volatile metadata (dates, tool versions)
    if path.lower().endswith(".svg"):
        meta = {"Date": None}
    else:
        meta = {"Software": None}
    fig.savefig(path, metadata=meta)
    plt.close(fig)


def _entropy(row: Dict[str, str], units: str) -> float:
    col = "entropy_nats" if units == "nats" else "entropy_log2_units"
    return float(row[col])


def _unit_scale(units: str) -> float:
    return 1.0 if units == "nats" else 1.0 / theory.LOG2


def _ylabel(units: str) -> str:
    return "entropy [nats]" if units == "nats" else "entropy / log 2"


def _concat_rows(paths: Sequence[str], expected) -> List[Dict[str, str]]:
    rows: List[Dict[str, str]] = []
    for p in paths:
        rows += schema.read_rows(p, expected)
    return rows


def _render_fig2(spec: FigureSpec):
    rows = _concat_rows(spec.inputs, schema.EE_SWEEP)
    left = [r for r in rows if r["mode"] == "left"]
    right = [r for r in rows if r["mode"] == "right"]
    if not left:
        raise schema.EmptyDataError("no rows with mode 'left'")
    if not right:
        raise schema.EmptyDataError("no rows with mode 'right'")
    scale = _unit_scale(spec.units)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7.2, 3.0))
    for k, state in enumerate(sorted({r["state"] for r in left})):
        pts = sorted((float(r["L"]), _entropy(r, spec.units))
                     for r in left if r["state"] == state)
        ax1.plot([p[0] for p in pts], [p[1] for p in pts],
                 _MARKERS[k % len(_MARKERS)], linestyle="none", label=state)
    Ls = np.array(sorted({float(r["L"]) for r in left}))
    ref = ax1.plot(Ls, [theory.half_measurement_entropy(L) * scale for L in Ls],
                   "k--", linewidth=1)[0]
    ref.set_gid("theory-left")
    ax1.set_xlabel("L")
    ax1.set_ylabel(_ylabel(spec.units))
    ax1.set_title("half measurement")
    ax1.legend()

    groups = sorted({(float(r["L"]), r["state"]) for r in right})
    for k, (L, state) in enumerate(groups):
        pts = sorted((float(r["n_m"]), _entropy(r, spec.units))
                     for r in right if float(r["L"]) == L and r["state"] == state)
        ax2.plot([p[0] for p in pts], [p[1] for p in pts],
                 _MARKERS[k % len(_MARKERS)], linestyle="none",
                 label=f"{state}, L={L:g}")
    n_ms = np.array(sorted({float(r["n_m"]) for r in right}))
    ref = ax2.plot(n_ms, [theory.counting_entropy(n) * scale for n in n_ms],
                   "k--", linewidth=1)[0]
    ref.set_gid("theory-right")
    ax2.set_xlabel("measured rungs")
    ax2.set_title("fixed L")
    ax2.legend()
    fig.tight_layout()
    return fig


def _render_fig3(spec: FigureSpec):
    rows = _concat_rows(spec.inputs, schema.IMPERFECT_BELL)
    scale = _unit_scale(spec.units)
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    n_ms = sorted({float(r["n_m"]) for r in rows})
    eps_grid = np.linspace(-0.99, 0.99, 199)
    for k, n_m in enumerate(n_ms):
        pts = sorted((float(r["epsilon"]), float(r["entropy_nats"]) * scale)
                     for r in rows if float(r["n_m"]) == n_m)
        ax.plot([p[0] for p in pts], [p[1] for p in pts],
                _MARKERS[k % len(_MARKERS)], linestyle="none",
                label=f"$N_m$={n_m:g}")
        curve = ax.plot(eps_grid,
                        [n_m * theory.rung_entropy(e) * scale for e in eps_grid],
                        "-", linewidth=0.8, alpha=0.7)[0]
        curve.set_gid(f"theory-nm-{n_m:g}")
    ax.set_xlabel("projector tilt")
    ax.set_ylabel(_ylabel(spec.units))
    ax.legend()
    fig.tight_layout()
    return fig


def _render_fig4(spec: FigureSpec):
    rows = _concat_rows(spec.inputs, schema.IMPERFECT_COPY)
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    for k, L in enumerate(sorted({float(r["L"]) for r in rows})):
        pts = sorted((float(r["dm"]), float(r["fidelity"]))
                     for r in rows if float(r["L"]) == L)
        ax.semilogy([p[0] for p in pts], [max(p[1], 1e-300) for p in pts],
                    _MARKERS[k % len(_MARKERS)] + "-", label=f"L={L:g}")
    m0s = sorted({r["m0"] for r in rows})
    ax.set_xlabel("mass mismatch")
    ax.set_ylabel("swap fidelity")
    ax.set_title("m0 = " + ", ".join(m0s))
    ax.legend()
    fig.tight_layout()
    return fig


def _split_fig5_inputs(paths: Sequence[str]):
    """Sort the fig5 inputs into the data CSV and the fit-block CSV."""
    data_paths, fit_paths = [], []
    for p in paths:
        header = set(schema.read_header(p))
        if header == set(schema.PROB_SCALING):
            data_paths.append(p)
        elif header == set(schema.PROB_SCALING_FITS):
            fit_paths.append(p)
        else:
            raise schema.SchemaMismatch(
                f"{p}: {schema.column_diff(schema.PROB_SCALING, sorted(header))}")
    if len(data_paths) != 1 or len(fit_paths) != 1:
        raise ValueError("fig5 needs exactly one scaling CSV and one fits CSV "
                         f"(got {len(data_paths)} and {len(fit_paths)})")
    return data_paths[0], fit_paths[0]


def _render_fig5(spec: FigureSpec):
    data_path, fit_path = _split_fig5_inputs(spec.inputs)
    rows = schema.read_rows(data_path, schema.PROB_SCALING)
    fits = schema.read_rows(fit_path, schema.PROB_SCALING_FITS)
    fit_by_m0 = {f["m0"]: f for f in fits}

    fig, ax = plt.subplots(figsize=(4.4, 3.4))
    m0s = sorted({r["m0"] for r in rows}, key=float)
    for k, m0 in enumerate(m0s):
        pts = sorted((float(r["L"]) ** 2, float(r["log_P_minor"]))
                     for r in rows if r["m0"] == m0)
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        ax.plot(x, y, _MARKERS[k % len(_MARKERS)], linestyle="none",
                label=f"$m_0$={m0}")
        fit = fit_by_m0.get(m0)
        if fit is not None:
            # slope/intercept/R^2 are copied from the fit block, never refit
            slope = float(fit["slope"])
            intercept = float(fit["intercept"])
            grid = np.linspace(x.min(), x.max(), 50)
            line = ax.plot(grid, slope * grid + intercept, "-", linewidth=0.8,
                           label=(f"slope {slope:.4f}, "
                                  f"$R^2$ {float(fit['r_squared']):.5f}"))[0]
            line.set_gid(f"fit-m0-{m0}")
    ax.set_xlabel("$L^2$")
    ax.set_ylabel("log P")
    ax.legend()
    fig.tight_layout()
    return fig


_RENDERERS = {
    "fig2": _render_fig2,
    "fig3": _render_fig3,
    "fig4": _render_fig4,
    "fig5": _render_fig5,
}


def render(spec: FigureSpec) -> str:
    """Render the figure and return the output path."""
    with plt.rc_context(_STYLE):
        fig = _RENDERERS[spec.figure](spec)
        _save(fig, spec.output)
    return spec.output
