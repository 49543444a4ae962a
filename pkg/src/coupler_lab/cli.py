"""coupler-lab command line: config parsing, sweeps, CSV and SVG output.

Config files are flat `key = value` lines with dotted sections, e.g.

    base.f_q1 = 5.0
    axis1.param = f_c
    axis1.start = 5.6
    axis1.stop = 6.4
    axis1.points = 81
    quantities = zz_numeric, zz_analytic_dispersive

Exit codes: 0 success, 2 configuration error, 3 numeric or contract error.
"""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from . import analytics as an
from . import errormodel as em
from . import fidelity as fd
from . import lindblad as lb
from .errors import ConfigError, ContractError, CouplerLabError, NoBracketError, RegimeWarning
from .hamiltonian import CircuitParams, TWO_PI, build, build_eff2, build_lab, to_ghz
from .hilbert import FockSpace
from .spectral import geff_numeric, label_spectrum, zz_numeric, zz_point, zz_sweep


# ---------------------------------------------------------------- config

QUANTITIES = ("zz_numeric", "zz_analytic_dispersive", "zz_analytic_general", "zz_resonant_q",
              "zz_resonant_c", "g_eff_numeric", "g_eff_analytic", "gate_error_numeric",
              "gate_error_analytic", "zz_ablation")
SOURCES = ("lab", "eff1", "eff2")
PARAM_KEYS = CircuitParams.field_names()
AXIS_EXTRA = ("t_g",)


@dataclass(frozen=True)
class Axis:
    param: str
    start: float
    stop: float
    points: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class SweepConfig:
    base: CircuitParams
    axes: tuple = ()
    quantities: tuple = ("zz_numeric",)
    hamiltonian_source: str = "lab"
    levels: int = 5
    seed: int = 0
    N: int = fd.DEFAULT_N
    T1_list: tuple = ()
    bracket: tuple | None = None
    coupler_bracket: tuple | None = None
    lambda_t_g: float = 100.0
    lambda_T1: float = 100.0
    eff1_last_line: bool = True

    @property
    def space(self) -> FockSpace:
        return FockSpace.uniform(self.levels)

    def serialize(self) -> str:
        out = []
        for k in PARAM_KEYS:
            out.append(f"base.{k} = {_fmt(getattr(self.base, k))}")
        if self.base.allow_negative_g12:
            out.append("base.allow_negative_g12 = true")
        for i, ax in enumerate(self.axes, 1):
            out += [f"axis{i}.param = {ax.param}", f"axis{i}.start = {_fmt(ax.start)}",
                    f"axis{i}.stop = {_fmt(ax.stop)}", f"axis{i}.points = {ax.points}"]
        out.append("quantities = " + ", ".join(self.quantities))
        out.append(f"hamiltonian_source = {self.hamiltonian_source}")
        out += [f"levels = {self.levels}", f"seed = {self.seed}", f"N = {self.N}"]
        if self.T1_list:
            out.append("gate.T1 = " + ", ".join(_fmt(x) for x in self.T1_list))
        if self.coupler_bracket:
            out.append("gate.coupler_bracket = " + ", ".join(_fmt(x) for x in self.coupler_bracket))
        if self.bracket:
            out.append("zero_zz.bracket = " + ", ".join(_fmt(x) for x in self.bracket))
        out.append(f"lambda.t_g = {_fmt(self.lambda_t_g)}")
        out.append(f"lambda.T1 = {_fmt(self.lambda_T1)}")
        out.append(f"eff1.last_line = {'true' if self.eff1_last_line else 'false'}")
        return "\n".join(out) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _float(value: str, where: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {value!r}") from None


def _int(value: str, where: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got {value!r}") from None


def _bool(value: str, where: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where}: expected true/false, got {value!r}")


def _floats(value: str, where: str) -> tuple:
    items = [s for s in (x.strip() for x in value.split(",")) if s]
    if not items:
        raise ConfigError(f"{where}: empty list")
    return tuple(_float(s, where) for s in items)


def parse_config(text: str, name: str = "<config>") -> SweepConfig:
    """Parse the flat dotted key=value format; diagnostics carry line numbers."""
    seen: dict[str, tuple[str, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{name}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{where}: empty key")
        if key in seen:
            raise ConfigError(f"{where}: duplicate key {key!r} (first at {seen[key][1]})")
        seen[key] = (value, where)

    def take(key, default=None):
        item = seen.pop(key, None)
        return (default, None) if item is None else item

    base = {}
    for k in PARAM_KEYS:
        v, where = take(f"base.{k}")
        if v is not None:
            base[k] = _float(v, where)
    v, where = take("base.T1")
    if v is not None:
        t1 = _float(v, where)
        for k in ("T1_q1", "T1_q2", "T1_c"):
            base.setdefault(k, t1)
    v, where = take("base.allow_negative_g12")
    if v is not None:
        base["allow_negative_g12"] = _bool(v, where)
    missing = [k for k in PARAM_KEYS[:8] if k not in base]
    if missing:
        raise ConfigError(f"{name}: missing base parameters {', '.join('base.' + m for m in missing)}")
    try:
        params = CircuitParams(**base)
    except ContractError as exc:
        raise ConfigError(f"{name}: invalid base parameters: {exc}") from None

    axes = []
    for i in (1, 2):
        keys = [f"axis{i}.{f}" for f in ("param", "start", "stop", "points")]
        present = [k for k in keys if k in seen]
        if not present:
            continue
        if len(present) != 4:
            raise ConfigError(f"{name}: axis{i} needs param, start, stop and points")
        (pv, pw), (sv, sw), (ev, ew), (nv, nw) = (take(k) for k in keys)
        if pv not in PARAM_KEYS + AXIS_EXTRA:
            raise ConfigError(f"{pw}: unknown axis parameter {pv!r}")
        ax = Axis(pv, _float(sv, sw), _float(ev, ew), _int(nv, nw))
        if ax.points < 2:
            raise ConfigError(f"{nw}: axis{i}.points must be >= 2")
        if ax.start == ax.stop:
            raise ConfigError(f"{sw}: axis{i}.start equals stop")
        axes.append(ax)
    if "axis2.param" in [k for k in seen] and not axes:
        raise ConfigError(f"{name}: axis2 given without axis1")

    kw = {}
    v, where = take("quantities")
    if v is not None:
        q = tuple(s.strip() for s in v.split(",") if s.strip())
        bad = [x for x in q if x not in QUANTITIES]
        if bad or not q:
            raise ConfigError(f"{where}: unknown quantities {bad}; allowed {list(QUANTITIES)}")
        kw["quantities"] = q
    v, where = take("hamiltonian_source")
    if v is not None:
        if v not in SOURCES:
            raise ConfigError(f"{where}: hamiltonian_source must be one of {SOURCES}")
        kw["hamiltonian_source"] = v
    for key, conv, attr in (("levels", _int, "levels"), ("seed", _int, "seed"), ("N", _int, "N"),
                            ("lambda.t_g", _float, "lambda_t_g"), ("lambda.T1", _float, "lambda_T1")):
        v, where = take(key)
        if v is not None:
            kw[attr] = conv(v, where)
    v, where = take("gate.T1")
    if v is not None:
        kw["T1_list"] = _floats(v, where)
    for key, attr in (("zero_zz.bracket", "bracket"), ("gate.coupler_bracket", "coupler_bracket")):
        v, where = take(key)
        if v is not None:
            b = _floats(v, where)
            if len(b) != 2 or b[0] == b[1]:
                raise ConfigError(f"{where}: bracket needs two distinct numbers")
            kw[attr] = b
    v, where = take("eff1.last_line")
    if v is not None:
        kw["eff1_last_line"] = _bool(v, where)
    if seen:
        key, (_, where) = next(iter(seen.items()))
        raise ConfigError(f"{where}: unknown key {key!r}")
    cfg = SweepConfig(params, tuple(axes), **kw)
    if cfg.levels < 3:
        raise ConfigError(f"{name}: levels must be >= 3")
    if cfg.N < 1:
        raise ConfigError(f"{name}: N must be >= 1")
    return cfg


def load_config(path: str) -> SweepConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config(text, path)


# ---------------------------------------------------------------- results

@dataclass
class SweepResult:
    columns: list  # (name, unit)
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def header(self) -> list[str]:
        return [f"{n}[{u}]" for n, u in self.columns]

    def add(self, row: list):
        if len(row) != len(self.columns):
            raise ContractError(f"row length {len(row)} != header length {len(self.columns)}")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        k = [n for n, _ in self.columns].index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.metadata.items():
            buf.write(f"# {k}: {v}\n")
        buf.write(",".join(self.header) + "\n")
        for r in self.rows:
            buf.write(",".join(_cell(x) for x in r) + "\n")
        return buf.getvalue()


def _cell(x) -> str:
    if isinstance(x, str):
        if any(c in x for c in ',"\n'):
            return '"' + x.replace('"', '""') + '"'
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    """Header and string cells of an emitted CSV, skipping '#' metadata lines."""
    import csv

    lines = [ln for ln in text.split("\n") if ln and not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def write_svg(result: SweepResult, path: str, x: str | None = None, ys: list | None = None, title: str = ""):
    """Minimal line chart: first column on x, every finite numeric column as a polyline."""
    names = [n for n, _ in result.columns]
    units = dict(result.columns)
    x = x or names[0]
    xs = result.column(x)
    if ys is None:
        ys = [n for n, u in result.columns if n != x and u not in ("flag", "text")]
    series = []
    for n in ys:
        try:
            v = result.column(n)
        except ValueError:
            continue
        if np.isfinite(v).any():
            series.append((n, v))
    W, H, m = 720, 440, 60
    colors = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
    fin = np.concatenate([v[np.isfinite(v)] for _, v in series]) if series else np.array([0.0, 1.0])
    y0, y1 = float(fin.min()), float(fin.max())
    if y0 == y1:
        y0, y1 = y0 - 1, y1 + 1
    x0, x1 = float(np.nanmin(xs)), float(np.nanmax(xs))
    if x0 == x1:
        x0, x1 = x0 - 1, x1 + 1
    sx = lambda v: m + (v - x0) / (x1 - x0) * (W - 2 * m)
    sy = lambda v: H - m - (v - y0) / (y1 - y0) * (H - 2 * m)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<rect x="{m}" y="{m}" width="{W - 2 * m}" height="{H - 2 * m}" fill="none" stroke="black"/>',
           f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle" font-size="13">{x} [{units[x]}]</text>',
           f'<text x="{m}" y="{m - 8}" font-size="11">{y1:.4g}</text>',
           f'<text x="{m}" y="{H - m + 16}" font-size="11">{y0:.4g}</text>',
           f'<text x="{W - m}" y="{H - m + 16}" text-anchor="end" font-size="11">{x1:.4g}</text>']
    if title:
        out.append(f'<text x="{W / 2}" y="22" text-anchor="middle" font-size="14">{title}</text>')
    for k, (n, v) in enumerate(series):
        c = colors[k % len(colors)]
        seg, segs = [], []
        for xv, yv in zip(xs, v):
            if np.isfinite(yv):
                seg.append(f"{sx(xv):.2f},{sy(yv):.2f}")
            elif seg:
                segs.append(seg)
                seg = []
        if seg:
            segs.append(seg)
        for s in segs:
            out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{" ".join(s)}"/>')
        out.append(f'<text x="{W - m + 4}" y="{m + 14 * (k + 1)}" font-size="11" fill="{c}">{n}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


# ---------------------------------------------------------------- helpers

def threads() -> int:
    v = os.environ.get("COUPLER_LAB_THREADS")
    if v:
        try:
            n = int(v)
        except ValueError:
            raise ConfigError(f"COUPLER_LAB_THREADS must be an integer, got {v!r}") from None
        return max(1, n)
    return max(1, os.cpu_count() or 1)


def pmap(fn, items):
    items = list(items)
    n = min(threads(), len(items)) or 1
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _point_params(cfg: SweepConfig, values: dict) -> CircuitParams:
    try:
        return cfg.base.with_(**values)
    except ContractError as exc:
        raise ConfigError(f"sweep point {values} gives invalid parameters: {exc}") from None


def _grid(cfg: SweepConfig, max_axes: int = 2):
    if not cfg.axes:
        raise ConfigError("this command needs axis1")
    if len(cfg.axes) > max_axes:
        raise ConfigError(f"this command accepts at most {max_axes} axis")
    for ax in cfg.axes:
        if ax.param in AXIS_EXTRA:
            raise ConfigError(f"axis parameter {ax.param!r} is only valid for gate-error")
    outer = cfg.axes[0].values()
    inner = cfg.axes[1].values() if len(cfg.axes) > 1 else [None]
    lines = []
    for u in outer:
        line = []
        for v in inner:
            vals = {cfg.axes[0].param: float(u)}
            if v is not None:
                vals[cfg.axes[1].param] = float(v)
            line.append((vals, _point_params(cfg, vals)))
        lines.append(line)
    return lines


def _metadata(cfg: SweepConfig, command: str, **extra) -> dict:
    md = {"command": command, "version": __version__, "levels": cfg.levels,
          "config": cfg.serialize().strip().replace("\n", "; ")}
    md.update(extra)
    return md


def _axis_columns(cfg):
    return [(ax.param, _unit(ax.param)) for ax in cfg.axes]


def _unit(param: str) -> str:
    if param.startswith("T1"):
        return "us"
    if param == "t_g":
        return "ns"
    return "GHz"


def _safe(fn, *args, **kw):
    """(value, reason) with contract violations mapped to NaN plus a reason string."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RegimeWarning)
        try:
            v = fn(*args, **kw)
        except ContractError as exc:
            return math.nan, f"{fn.__name__}: {exc}"
    reason = "; ".join(f"{fn.__name__}: {w.message}" for w in caught if issubclass(w.category, RegimeWarning))
    return v, reason


def _builder_kw(cfg: SweepConfig, source: str) -> dict:
    return {"last_line": cfg.eff1_last_line} if source == "eff1" else {}


# ---------------------------------------------------------------- commands

SPECTRUM_LABELS = [(n1, nc, n2) for n1 in range(3) for nc in range(3) for n2 in range(3) if n1 + nc + n2 <= 2]


def cmd_spectrum(cfg: SweepConfig) -> SweepResult:
    """Labeled energies of every state with at most two excitations."""
    lines = _grid(cfg, max_axes=1)
    space = cfg.space
    cols = _axis_columns(cfg)
    for lab in SPECTRUM_LABELS:
        tag = "".join(map(str, lab))
        cols += [(f"E_{tag}", "GHz"), (f"overlap_{tag}", "1")]
    cols += [("n_ambiguous", "1"), ("reason", "text")]
    res = SweepResult(cols, metadata=_metadata(cfg, "spectrum", source=cfg.hamiltonian_source))

    def run(item):
        vals, p = item
        H = build(cfg.hamiltonian_source, p, space, **_builder_kw(cfg, cfg.hamiltonian_source))
        spec = label_spectrum(H, space)
        row = [vals[ax.param] for ax in cfg.axes]
        amb = []
        for lab in SPECTRUM_LABELS:
            row += [to_ghz(spec.energy(lab, allow_ambiguous=True)), spec.overlap(lab)]
            if spec.is_ambiguous(lab):
                amb.append("".join(map(str, lab)))
        row += [len(amb), ("ambiguous: " + " ".join(amb)) if amb else ""]
        return row

    for row in pmap(run, [ln[0] for ln in lines]):
        res.add(row)
    return res


def _law(seed: int, N: int, t_g: float, T1: float, p: CircuitParams | None) -> em.ErrorLawParams:
    return em.calibrate_lambdas(t_g, T1, fd.haar_ensemble(fd.point_seed(seed, 10**9), N), p)


def cmd_zz_sweep(cfg: SweepConfig) -> SweepResult:
    """One row per grid point with the requested ZZ and coupling columns."""
    lines = _grid(cfg)
    space = cfg.space
    q = cfg.quantities
    cols = _axis_columns(cfg)
    if "zz_numeric" in q:
        cols += [("zz_numeric", "GHz"), ("overlap_101", "1"), ("zz_rule_branch", "flag")]
    for name in SCALAR_QUANTITIES:
        if name in q:
            cols.append((name, "GHz"))
    if "zz_ablation" in q:
        cols += [("zz_eff2", "GHz"), ("zz_eff2_no_g200_g002", "GHz"), ("zz_eff2_no_g020", "GHz"),
                 ("zz_eff2_no_cross_kerr", "GHz")]
    if "gate_error_numeric" in q or "gate_error_analytic" in q:
        cols.append(("t_g", "ns"))
    if "gate_error_numeric" in q:
        cols.append(("gate_error_numeric", "1"))
    if "gate_error_analytic" in q:
        cols.append(("gate_error_analytic", "1"))
    cols += [("regime_violation", "flag"), ("reason", "text")]
    md = _metadata(cfg, "zz-sweep", source=cfg.hamiltonian_source)
    law = None
    if "gate_error_analytic" in q:
        law = _law(cfg.seed, cfg.N, cfg.lambda_t_g, cfg.lambda_T1, None)
        md["lambda"] = f"decay={law.lambda_decay!r} zz={law.lambda_zz!r} ensemble={law.ensemble}"
    res = SweepResult(cols, metadata=md)

    def run_line(arg):
        li, line = arg
        src = cfg.hamiltonian_source
        pts = None
        if "zz_numeric" in q:
            pts = zz_sweep((build(src, p, space, **_builder_kw(cfg, src)) for _, p in line), space)
        out = []
        for k, (vals, p) in enumerate(line):
            row = [vals[ax.param] for ax in cfg.axes]
            reasons = []
            if pts is not None:
                pt = pts[k]
                row += [to_ghz(pt.zeta), pt.overlap_101, pt.rule == "branch"]
                if pt.ambiguous:
                    reasons.append(f"|101> overlap {pt.overlap_101:.3f} below floor ({pt.rule} rule)")
            for name, fn in SCALAR_QUANTITIES.items():
                if name in q:
                    v, why = _safe(fn, p, space)
                    row.append(v)
                    if why:
                        reasons.append(why)
            if "zz_ablation" in q:
                for drop in ((), ("g200", "g002"), ("g020",), ("cross_kerr",)):
                    v, why = _safe(_zz_eff2, p, space, drop)
                    row.append(v)
                    if why:
                        reasons.append(why)
            if "gate_error_numeric" in q or "gate_error_analytic" in q:
                tg, why = _safe(_tg_for, p, space)
                row.append(tg)
                if why:
                    reasons.append(why)
                if "gate_error_numeric" in q:
                    seed = fd.point_seed(cfg.seed, li * 100003 + k)
                    v, why = _safe(_gate_error_at, p, space, tg, fd.haar_ensemble(seed, cfg.N))
                    row.append(v)
                    if why:
                        reasons.append(why)
                if "gate_error_analytic" in q:
                    v, why = _safe(_analytic_at, p, tg, law)
                    row.append(v)
                    if why:
                        reasons.append(why)
            try:
                viol = not an.in_dispersive_regime(p)
            except ContractError:
                viol = True
            row += [viol, "; ".join(reasons)]
            out.append(row)
        return out

    for rows in pmap(run_line, list(enumerate(lines))):
        for r in rows:
            res.add(r)
    return res


def _geff_num(p: CircuitParams, space: FockSpace) -> float:
    return to_ghz(geff_numeric(build_lab(p, space), space, p))


def _analytic(fn):
    def wrapped(p, space):
        return fn(p)
    wrapped.__name__ = fn.__name__
    return wrapped


# closed-form and single-point numeric columns, in output order
SCALAR_QUANTITIES = {
    "zz_analytic_dispersive": _analytic(an.zz_dispersive),
    "zz_analytic_general": _analytic(an.zz_general),
    "zz_resonant_q": _analytic(an.zz_resonant_qubits),
    "zz_resonant_c": _analytic(an.zz_resonant_coupler),
    "g_eff_numeric": _geff_num,
    "g_eff_analytic": _analytic(an.g_eff),
}


def _zz_eff2(p, space, drop):
    return to_ghz(zz_numeric(build_eff2(p, space, drop=drop), space, allow_ambiguous=True))


def _tg_for(p, space):
    return fd.gate_time(TWO_PI * _geff_num(p, space))


def _t1_of(p):
    return p.T1_q1


def _gate_error_at(p, space, t_g, ens):
    if math.isnan(t_g):
        raise ContractError("no gate time available")
    g, z = lb.reduced_couplings(p, "numeric", space)
    F = fd.average_fidelity(lb.reduced_generator(p, g_eff=g, zeta=z), fd.ideal_generator(g), t_g, ens)
    return 1 - F


def _analytic_at(p, t_g, law):
    if math.isnan(t_g):
        raise ContractError("no gate time available")
    return em.analytic_error(p, t_g, _t1_of(p), law)


def cmd_validate_swt(cfg: SweepConfig) -> SweepResult:
    """zeta from the lab and both effective Hamiltonians, with deviations."""
    lines = _grid(cfg, max_axes=1)
    space = cfg.space
    cols = _axis_columns(cfg) + [("zz_lab", "GHz"), ("zz_eff1", "GHz"), ("zz_eff2", "GHz"),
                                 ("dev_eff1", "GHz"), ("dev_eff2", "GHz"), ("eff2_better", "flag"),
                                 ("ambiguous", "flag"), ("reason", "text")]
    res = SweepResult(cols, metadata=_metadata(cfg, "validate-swt", eff1_last_line=cfg.eff1_last_line))
    pts = [p for _, p in (ln[0] for ln in lines)]
    srcs = {"lab": {}, "eff1": {"last_line": cfg.eff1_last_line}, "eff2": {}}
    sweeps = pmap(lambda s: zz_sweep((build(s, p, space, **srcs[s]) for p in pts), space), list(srcs))
    zl, z1, z2 = ([to_ghz(pt.zeta) for pt in sw] for sw in sweeps)
    for k, (vals, _) in enumerate(ln[0] for ln in lines):
        d1, d2 = abs(z1[k] - zl[k]), abs(z2[k] - zl[k])
        amb = [s for s, sw in zip(srcs, sweeps) if sw[k].ambiguous]
        why = ("|101> hybridized in " + ",".join(amb) + " (branch-followed)") if amb else ""
        res.add([vals[cfg.axes[0].param], zl[k], z1[k], z2[k], d1, d2, d2 < d1, bool(amb), why])
    return res


def zero_zz_root(p: CircuitParams, bracket, space: FockSpace | None = None, tol_ghz: float = 1e-9,
                 max_iter: int = 60) -> dict:
    """Bisection on the signed numeric zeta over coupler frequency."""
    space = space or FockSpace()
    lo, hi = sorted(bracket)

    def z(fc):
        pt = zz_point(build_lab(p.with_(f_c=fc), space), space, allow_ambiguous=True)
        return to_ghz(pt.zeta), pt.ambiguous

    zlo, alo = z(lo)
    zhi, ahi = z(hi)
    if zlo == 0:
        return {"f_c": lo, "residual": 0.0, "iterations": 0, "ambiguous": alo}
    if zhi == 0:
        return {"f_c": hi, "residual": 0.0, "iterations": 0, "ambiguous": ahi}
    if zlo * zhi > 0:
        raise NoBracketError(f"zeta has the same sign at f_c = {lo} and {hi} GHz ({zlo:.3e}, {zhi:.3e})")
    mid, zm, am = lo, zlo, alo
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        zm, am = z(mid)
        if abs(zm) < tol_ghz:
            break
        if zm * zlo < 0:
            hi = mid
        else:
            lo, zlo = mid, zm
    else:
        raise ContractError(f"bisection did not reach |zeta| < {tol_ghz} GHz in {max_iter} iterations")
    return {"f_c": mid, "residual": zm, "iterations": it, "ambiguous": am}


def cmd_zero_zz(cfg: SweepConfig, bracket=None) -> SweepResult:
    bracket = bracket or cfg.bracket
    if bracket is None:
        raise ConfigError("zero-zz needs zero_zz.bracket = lo, hi (or --bracket LO HI)")
    r = zero_zz_root(cfg.base, bracket, cfg.space)
    res = SweepResult([("f_c_root", "GHz"), ("residual", "GHz"), ("iterations", "1"), ("ambiguous", "flag")],
                      metadata=_metadata(cfg, "zero-zz", bracket=f"{bracket[0]!r}, {bracket[1]!r}"))
    res.add([r["f_c"], r["residual"], r["iterations"], r["ambiguous"]])
    return res


def cmd_gate_error(cfg: SweepConfig) -> SweepResult:
    """Gate error versus t_g with the coupler retuned at each point."""
    if len(cfg.axes) != 1 or cfg.axes[0].param != "t_g":
        raise ConfigError("gate-error needs exactly one axis with axis1.param = t_g")
    if not cfg.T1_list:
        raise ConfigError("gate-error needs gate.T1 = list of T1 values (us)")
    space = cfg.space
    tgs = cfg.axes[0].values()
    if np.any(tgs <= 0):
        raise ConfigError("gate times must be positive")
    ops = pmap(lambda t: fd.operating_point(cfg.base, float(t), space, cfg.coupler_bracket), tgs)
    mid = len(tgs) // 2
    laws = {}
    for T1 in cfg.T1_list:
        ens = fd.haar_ensemble(fd.point_seed(cfg.seed, 10**9), cfg.N)
        laws[T1] = em.calibrate_lambdas(float(np.median(tgs)), T1, ens, ops[mid][0])
    ends = [em.calibrate_lambdas(float(tgs[k]), cfg.T1_list[0], fd.haar_ensemble(fd.point_seed(cfg.seed, 10**9), cfg.N),
                                 ops[k][0]).lambda_decay for k in (0, -1)]
    law0 = laws[cfg.T1_list[0]]
    md = _metadata(cfg, "gate-error", ensemble=law0.ensemble,
                   lambda_decay=repr(law0.lambda_decay), lambda_zz=repr(law0.lambda_zz),
                   lambda_decay_endpoints=f"{ends[0]!r}, {ends[1]!r}")
    cols = [("t_g", "ns"), ("T1", "us"), ("f_c", "GHz"), ("g_eff", "GHz"), ("zz", "GHz"),
            ("eps_numeric", "1"), ("eps_numeric_stderr", "1"), ("eps_analytic", "1"), ("eps_zz_off", "1")]
    res = SweepResult(cols, metadata=md)

    def run(k):
        q, g, z = ops[k]
        t = float(tgs[k])
        ens = fd.haar_ensemble(fd.point_seed(cfg.seed, k), cfg.N)
        rows = []
        for T1 in cfg.T1_list:
            eps, se = fd.gate_error_point(q, g, z, t, T1, ens)
            off, _ = fd.gate_error_point(q, g, z, t, T1, ens, zz_off=True)
            ea = em.analytic_error(q, t, T1, laws[T1])
            rows.append([t, T1, q.f_c, to_ghz(g), to_ghz(z), eps, se, ea, off])
        return rows

    for rows in pmap(run, range(len(tgs))):
        for r in rows:
            res.add(r)
    return res


def cmd_lambda_calib(cfg: SweepConfig) -> SweepResult:
    if cfg.N < 1000:
        raise ConfigError("lambda-calib needs N >= 1000")
    ens = fd.haar_ensemble(cfg.seed, cfg.N)
    law = em.calibrate_lambdas(cfg.lambda_t_g, cfg.lambda_T1, ens)
    direct = em.lambda_zz_direct(ens)
    md = {"command": "lambda-calib", "version": __version__, "ensemble": law.ensemble,
          "t_g_ns": repr(cfg.lambda_t_g), "T1_us": repr(cfg.lambda_T1),
          "compare_lambda_decay": f"measured {law.lambda_decay:.4f} +- {law.stderr_decay:.4f} vs reference {em.REFERENCE_LAMBDA_DECAY}",
          "compare_lambda_zz": f"measured {law.lambda_zz:.4f} +- {law.stderr_zz:.4f} vs reference {em.REFERENCE_LAMBDA_ZZ}"}
    res = SweepResult([("lambda_decay", "1"), ("lambda_decay_stderr", "1"), ("lambda_zz", "1"),
                       ("lambda_zz_stderr", "1"), ("lambda_zz_direct", "1"), ("reference_lambda_decay", "1"),
                       ("reference_lambda_zz", "1"), ("N", "1"), ("seed", "1")], metadata=md)
    res.add([law.lambda_decay, law.stderr_decay, law.lambda_zz, law.stderr_zz, direct,
             em.REFERENCE_LAMBDA_DECAY, em.REFERENCE_LAMBDA_ZZ, cfg.N, cfg.seed])
    return res


COMMANDS = {
    "spectrum": cmd_spectrum,
    "zz-sweep": cmd_zz_sweep,
    "zero-zz": cmd_zero_zz,
    "gate-error": cmd_gate_error,
    "validate-swt": cmd_validate_swt,
    "lambda-calib": cmd_lambda_calib,
}


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coupler-lab", description="Tunable-coupler ZZ and gate-error studies.")
    ap.add_argument("--version", action="version", version=f"coupler-lab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="flat key=value config file")
        sp.add_argument("--out", help="CSV output path (default: stdout)")
        sp.add_argument("--svg", help="optional SVG line chart path")
        if name == "zero-zz":
            sp.add_argument("--bracket", nargs=2, type=float, metavar=("LO", "HI"),
                            help="coupler frequency bracket in GHz")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        fn = COMMANDS[args.command]
        res = fn(cfg, tuple(args.bracket)) if args.command == "zero-zz" and args.bracket else fn(cfg)
        text = res.to_csv()
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if args.svg:
            write_svg(res, args.svg, title=args.command)
    except ConfigError as exc:
        print(f"coupler-lab: config error: {exc}", file=sys.stderr)
        return 2
    except CouplerLabError as exc:
        print(f"coupler-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (FloatingPointError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        print(f"coupler-lab: numeric error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
