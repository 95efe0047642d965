"""Command-line front end: experiment configs, fixture management, CSV/JSON
reports and static SVG plots.

Configs are flat INI files, one experiment per file; unknown sections or
keys are rejected so fixtures stay diff-friendly.  Exit codes: 0 all
verdicts acceptable, 2 config error, 3 degenerate experiment, 4 violated.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .grid import Domain, GridFunction, Interval
from .harness import (
    DecayCurve,
    VerificationReport,
    calderon_bundle,
    coifman_fefferman_experiment,
    environment,
    fefferman_stein_experiment,
    fit_exponent,
    hilbert_bundle,
    local_decay_experiment,
    mixed_weak_experiment,
    model_values,
    modular_experiment,
    sharpness_experiment,
)
from .maximal import MaximalVariant, maximal
from .operators import stein_square_function
from .orlicz import exp_power, llog, power
from .weights import (
    DimensionalConstants,
    Weight,
    ainfty_constants,
    ap_constant,
    write_constants_csv,
)


class ConfigError(ValueError):
    pass


KINDS = ("decay", "cf", "mixed", "fs", "modular", "constants", "sharpness")

SCHEMA = {
    "experiment": {"kind", "l", "seed", "slack"},
    "operator": {"kind", "m", "alpha", "pv_cutoff"},
    "symbols": {"b"},
    "functions": {"bank", "seed"},
    "weights": {"w", "v"},
    "params": {
        "p", "ps", "q", "r", "t", "comparator", "t_lo", "t_hi", "t_points",
        "bounded_symbol",
    },
    "bank": {"weights", "p_grid"},
    "output": {"dir"},
}


def parse_config(path) -> dict:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config {path}")
    out: dict = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        body = {}
        for key, value in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            body[key] = value
        out[section] = body
    exp = out.get("experiment", {})
    if exp.get("kind") not in KINDS:
        raise ConfigError(f"experiment kind must be one of {KINDS}")
    return out


# -- named generators --------------------------------------------------------

def make_weight(spec: str, dom: Domain) -> Weight:
    spec = spec.strip()
    if spec == "one":
        return Weight(GridFunction.constant(dom, 1.0), "one")
    if spec.startswith("power:"):
        a = float(spec.split(":", 1)[1])
        return Weight(
            GridFunction.from_callable(dom, lambda x: np.abs(x - 0.5) ** a), spec
        )
    if spec == "exp":
        return Weight(GridFunction.from_callable(dom, lambda x: np.exp(x)), spec)
    if spec == "step":
        g = GridFunction.indicator(dom, Interval(dom.left, dom.left + dom.length / 2))
        return Weight(GridFunction(dom, 1.0 + 3.0 * g.samples), spec)
    if spec == "spike":
        s = np.ones(dom.n_cells)
        s[dom.n_cells // 2] += 1e3
        return Weight(GridFunction(dom, s), spec)
    raise ConfigError(f"unknown weight spec {spec!r}")


def make_symbol(spec: str, dom: Domain) -> GridFunction:
    spec = spec.strip()
    if spec == "log":
        return GridFunction.from_callable(dom, lambda x: np.log(x - dom.left))
    if spec == "logmid":
        return GridFunction.from_callable(dom, lambda x: np.log(np.abs(x - 0.5)))
    if spec == "sin":
        return GridFunction.from_callable(dom, lambda x: np.sin(2 * math.pi * x))
    if spec == "x":
        return GridFunction.from_callable(dom, lambda x: x)
    if spec.startswith("steps:"):
        rng = np.random.default_rng(int(spec.split(":", 1)[1]))
        blocks = rng.uniform(-1.0, 1.0, 16)
        return GridFunction(dom, np.repeat(blocks, dom.n_cells // 16))
    raise ConfigError(f"unknown symbol spec {spec!r}")


def make_function(spec: str, dom: Domain, seed: int) -> GridFunction:
    spec = spec.strip()
    if spec == "indicator":
        return GridFunction.constant(dom, 1.0)
    if spec == "bump":
        return GridFunction.from_callable(
            dom, lambda x: np.exp(-120.0 * (x - 0.5) ** 2)
        )
    if spec == "steps":
        rng = np.random.default_rng(seed)
        blocks = rng.uniform(0.1, 1.0, 32)
        return GridFunction(dom, np.repeat(blocks, dom.n_cells // 32))
    if spec.startswith("wave:"):
        k = int(spec.split(":", 1)[1])
        return GridFunction.from_callable(dom, lambda x: np.sin(2 * math.pi * k * x))
    if spec == "random":
        rng = np.random.default_rng(seed)
        return GridFunction(dom, rng.uniform(-1.0, 1.0, dom.n_cells))
    raise ConfigError(f"unknown function spec {spec!r}")


def make_phi(spec: str):
    spec = spec.strip()
    if spec.startswith("power:"):
        return power(float(spec.split(":", 1)[1]))
    if spec.startswith("llog:"):
        return llog(float(spec.split(":", 1)[1]))
    if spec.startswith("exp:"):
        return exp_power(float(spec.split(":", 1)[1]))
    raise ConfigError(f"unknown growth function spec {spec!r}")


# -- experiment dispatch -----------------------------------------------------

def _resolve_seed(cfg: dict) -> int:
    env = os.environ.get("SPARSE_HARMONICS_SEED")
    if env is not None:
        return int(env)
    return int(cfg.get("experiment", {}).get("seed", "0"))


def _build_bundle(cfg: dict, dom: Domain):
    op = cfg.get("operator", {})
    kind = op.get("kind", "hilbert")
    pv = int(op.get("pv_cutoff", "1"))
    bs = [
        make_symbol(s, dom)
        for s in cfg.get("symbols", {}).get("b", "").split(",")
        if s.strip()
    ]
    if kind == "hilbert":
        return hilbert_bundle(bs, pv_cutoff=pv)
    if kind == "calderon":
        m = int(op.get("m", "1"))
        slots = tuple(range(len(bs)))
        return calderon_bundle(m, bs, slots, pv_cutoff=pv)
    if kind == "stein":
        alpha = float(op.get("alpha", "1.0"))
        if alpha <= 0.5:
            raise ConfigError("stein operator needs alpha > 1/2")
        return ("stein", alpha)
    raise ConfigError(f"unknown operator kind {kind!r}")


def _functions(cfg: dict, dom: Domain, seed: int, m: int) -> list[GridFunction]:
    bank = cfg.get("functions", {}).get("bank", "indicator")
    specs = [s for s in bank.split(",") if s.strip()]
    if len(specs) == 1:
        specs = specs * m
    if len(specs) != m:
        raise ConfigError(f"need {m} function specs, got {len(specs)}")
    fseed = int(cfg.get("functions", {}).get("seed", str(seed)))
    return [make_function(s, dom, fseed + i) for i, s in enumerate(specs)]


def run_experiment(cfg: dict, out_dir: Path) -> list[VerificationReport]:
    exp = cfg.get("experiment", {})
    kind = exp["kind"]
    L = int(exp.get("l", "10"))
    seed = _resolve_seed(cfg)
    slack = float(exp.get("slack", "10"))
    dom = Domain(0.0, 1.0, L)
    params = cfg.get("params", {})
    reports: list[VerificationReport] = []
    curve: DecayCurve | None = None

    if kind == "sharpness":
        bounded = params.get("bounded_symbol", "no") == "yes"
        curve, rep = sharpness_experiment(
            L=L, bounded_symbol=bounded, slack=slack, seed=seed
        )
        reports.append(rep)
    elif kind == "decay":
        bundle = _build_bundle(cfg, dom)
        t_lo = float(params.get("t_lo", "0.5"))
        t_hi = float(params.get("t_hi", "50"))
        t_pts = int(params.get("t_points", "24"))
        comparator = params.get("comparator", "mixed-min")
        wspec = cfg.get("weights", {}).get("w", "")
        w = make_weight(wspec, dom) if wspec.strip() else None
        if isinstance(bundle, tuple):
            # square function route: decay of G_alpha f against M f
            _, alpha = bundle
            f = _functions(cfg, dom, seed, 1)[0]
            g = stein_square_function(f, alpha)
            comp = maximal(f, MaximalVariant("iterated", k=1))
            ts = np.logspace(math.log10(t_lo), math.log10(t_hi), t_pts)
            good = comp.samples > 0
            if not np.all(good):
                raise ConfigError("comparator vanishes on the grid")
            meas = np.array([
                float(np.mean(np.abs(g.samples) > t * comp.samples)) for t in ts
            ])
            fit = fit_exponent(ts, meas)
            curve = DecayCurve(ts, meas, model_values(fit, ts), fit)
            verdict = "degenerate" if fit["degenerate"] else (
                "holds" if fit["r2"] >= 0.9 and fit["alpha"] > 0 else "holds-with-margin"
            )
            reports.append(VerificationReport(
                "stein-decay", {"alpha": alpha}, float(meas[0]), float(meas[-1]),
                {}, fit.get("p", math.nan), fit, verdict,
                environment(dom, DimensionalConstants(), seed),
            ))
        else:
            fs = _functions(cfg, dom, seed, bundle.m)
            from .harness import _root_cube, default_t_grid

            bprod = bundle.symbol_norm_product()
            scale = bprod if bprod > 0 else 1.0
            ts = np.logspace(math.log10(t_lo), math.log10(t_hi), t_pts) * scale
            curve, rep = local_decay_experiment(
                bundle, fs, _root_cube(dom), ts, comparator=comparator,
                w=w, slack=slack, seed=seed,
            )
            reports.append(rep)
    elif kind == "cf":
        bundle = _build_bundle(cfg, dom)
        fs = _functions(cfg, dom, seed, bundle.m)
        w = make_weight(cfg.get("weights", {}).get("w", "one"), dom)
        p = float(params.get("p", "2"))
        reports.append(coifman_fefferman_experiment(bundle, fs, p, w, slack, seed))
    elif kind == "mixed":
        bundle = _build_bundle(cfg, dom)
        fs = _functions(cfg, dom, seed, bundle.m)
        wspecs = cfg.get("weights", {}).get("w", "one").split(",")
        ws = [make_weight(s, dom) for s in wspecs]
        if len(ws) == 1:
            ws = ws * bundle.m
        v = make_weight(cfg.get("weights", {}).get("v", "one"), dom)
        t = float(params.get("t", "2"))
        reports.append(mixed_weak_experiment(bundle, fs, ws, v, t, slack, seed))
    elif kind == "fs":
        bundle = _build_bundle(cfg, dom)
        fs = _functions(cfg, dom, seed, bundle.m)
        ps = [float(s) for s in params.get("ps", "1").split(",")]
        if len(ps) == 1:
            ps = ps * bundle.m
        wspecs = cfg.get("weights", {}).get("w", "one").split(",")
        ws = [make_weight(s, dom) for s in wspecs]
        if len(ws) == 1:
            ws = ws * bundle.m
        reports.append(fefferman_stein_experiment(bundle, fs, ps, ws, slack, seed))
    elif kind == "modular":
        bundle = _build_bundle(cfg, dom)
        fs = _functions(cfg, dom, seed, bundle.m)
        phi = make_phi(params.get("p", "power:2"))
        q = float(params.get("q", "1.2"))
        r = float(params.get("r", "1.5"))
        w = make_weight(cfg.get("weights", {}).get("w", "one"), dom)
        reports.append(modular_experiment(bundle, fs, phi, q, r, w, slack, seed))
    elif kind == "constants":
        rows = constants_rows(cfg, dom)
        write_constants_csv(out_dir / "constants.csv", rows)
    else:  # pragma: no cover - guarded by parse_config
        raise ConfigError(f"unknown kind {kind!r}")

    if reports:
        _write_report(out_dir / "report.json", cfg, reports)
    if curve is not None:
        curve.write_csv(out_dir / "curves.csv")
        write_svg_plot(out_dir / "plot.svg", curve)
    return reports


def constants_rows(cfg: dict, dom: Domain) -> list[dict]:
    bank = cfg.get("bank", {})
    specs = [s for s in bank.get("weights", "one").split(",") if s.strip()]
    p_grid = [float(s) for s in bank.get("p_grid", "1.5,2,4").split(",")]
    rows = []
    for spec in specs:
        w = make_weight(spec, dom)
        fw, weak = ainfty_constants(w)
        for p in p_grid:
            rows.append({
                "weight": w.name,
                "p": p,
                "ap": ap_constant(w, p),
                "a1": ap_constant(w, 1.0),
                "ainfty_fw": fw,
                "ainfty_weak": weak,
            })
    return rows


def _write_report(path: Path, cfg: dict, reports: list[VerificationReport]) -> None:
    payload = {
        "config": cfg,
        "reports": [r.to_dict() for r in reports],
    }
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


# -- svg ---------------------------------------------------------------------

def write_svg_plot(path: Path, curve: DecayCurve, width=640, height=420) -> None:
    """Self-contained log-linear decay plot with the fitted model overlaid."""
    t = np.asarray(curve.t_grid, dtype=float)
    m = np.asarray(curve.measures, dtype=float)
    mo = np.asarray(curve.model, dtype=float)
    keep = np.isfinite(m) & (m > 0)
    pad = 50
    if not np.any(keep):
        path.write_text(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}"><text x="20" y="30">degenerate curve</text></svg>\n'
        )
        return
    tmin, tmax = t.min(), t.max()
    ymin = math.log10(m[keep].min())
    ymax = math.log10(max(m[keep].max(), 1e-12))
    if ymax <= ymin:
        ymax = ymin + 1.0

    def sx(v):
        return pad + (v - tmin) / (tmax - tmin) * (width - 2 * pad)

    def sy(v):
        return height - pad - (math.log10(v) - ymin) / (ymax - ymin) * (height - 2 * pad)

    def poly(ts, ys, color, dash=""):
        pts = " ".join(
            f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(ts, ys) if b > 0 and math.isfinite(b)
        )
        return (f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                f'{dash} points="{pts}"/>')

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        poly(t[keep], m[keep], "#1f77b4"),
    ]
    mok = np.isfinite(mo) & (mo > 0)
    if np.any(mok):
        parts.append(poly(t[mok], mo[mok], "#d62728", 'stroke-dasharray="4 3"'))
    fit = curve.fit
    if not fit.get("degenerate"):
        parts.append(
            f'<text x="{pad + 8}" y="{pad - 8}" font-size="12">'
            f'fit: p={fit["p"]:.3f}, alpha={fit["alpha"]:.3f}, R2={fit["r2"]:.4f}</text>'
        )
    parts.append(
        f'<text x="{width // 2 - 10}" y="{height - 12}" font-size="12">t</text>'
    )
    parts.append(
        f'<text x="8" y="{height // 2}" font-size="12">log10 measure</text>'
    )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


# -- fixtures ----------------------------------------------------------------

def fixtures_dir() -> Path:
    return Path(resources.files("sparse_harmonics") / "fixtures")


def list_fixtures() -> list[str]:
    d = fixtures_dir()
    if not d.is_dir():
        return []
    return sorted(p.name for p in d.iterdir() if p.is_file())


def _num(x):
    try:
        return float(x)
    except (TypeError, ValueError):
        return None


def _diff_values(path, a, b, tol, diffs):
    na, nb = _num(a), _num(b)
    if na is not None and nb is not None:
        if math.isnan(na) and math.isnan(nb):
            return
        scale = max(abs(na), abs(nb), 1.0)
        if abs(na - nb) > tol * scale:
            diffs.append(f"{path}: {a!r} != {b!r}")
        return
    if a != b:
        diffs.append(f"{path}: {a!r} != {b!r}")


def _diff_json(path, a, b, tol, diffs):
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                diffs.append(f"{path}.{k}: missing on one side")
            else:
                _diff_json(f"{path}.{k}", a[k], b[k], tol, diffs)
    elif isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            diffs.append(f"{path}: length {len(a)} != {len(b)}")
            return
        for i, (x, y) in enumerate(zip(a, b)):
            _diff_json(f"{path}[{i}]", x, y, tol, diffs)
    else:
        _diff_values(path, a, b, tol, diffs)


def diff_fixture_file(golden: Path, candidate: Path, tol: float = 1e-9) -> list[str]:
    diffs: list[str] = []
    if golden.suffix == ".json":
        _diff_json(golden.name, json.loads(golden.read_text()),
                   json.loads(candidate.read_text()), tol, diffs)
    elif golden.suffix == ".csv":
        ga = list(csv.reader(golden.read_text().splitlines()))
        cb = list(csv.reader(candidate.read_text().splitlines()))
        if len(ga) != len(cb):
            diffs.append(f"{golden.name}: row count {len(ga)} != {len(cb)}")
        for i, (ra, rb) in enumerate(zip(ga, cb)):
            if len(ra) != len(rb):
                diffs.append(f"{golden.name}:{i}: column count differs")
                continue
            for j, (a, b) in enumerate(zip(ra, rb)):
                _diff_values(f"{golden.name}:{i}:{j}", a, b, tol, diffs)
    else:
        if golden.read_bytes() != candidate.read_bytes():
            diffs.append(f"{golden.name}: binary contents differ")
    return diffs


# -- entry point -------------------------------------------------------------

def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="sparse-harmonics")
    sub = ap.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--out", default=None, help="override output directory")
    p_const = sub.add_parser("constants", help="weight constants table")
    p_const.add_argument("bank")
    p_const.add_argument("--out", default=None)
    sub.add_parser("list-fixtures", help="list shipped golden files")
    p_diff = sub.add_parser("diff-fixtures", help="diff a run dir against goldens")
    p_diff.add_argument("dir")
    args = ap.parse_args(argv)

    if args.command == "list-fixtures":
        for name in list_fixtures():
            print(name)
        return 0

    if args.command == "diff-fixtures":
        cand_dir = Path(args.dir)
        golden_dir = fixtures_dir()
        names = [n for n in list_fixtures() if n.endswith((".json", ".csv"))]
        if not names:
            print("no fixtures shipped", file=sys.stderr)
            return 2
        all_diffs: list[str] = []
        for name in names:
            cand = cand_dir / name
            if not cand.is_file():
                print(f"missing fixture counterpart: {name}", file=sys.stderr)
                return 2
            all_diffs.extend(diff_fixture_file(golden_dir / name, cand))
        for d in all_diffs:
            print(d)
        print(f"{len(all_diffs)} diffs")
        return 0 if not all_diffs else 1

    try:
        cfg = parse_config(args.config if args.command == "run" else args.bank)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    out_dir = Path(args.out or cfg.get("output", {}).get("dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.command == "constants":
        L = int(cfg.get("experiment", {}).get("l", "9"))
        if cfg.get("experiment", {}).get("kind", "constants") != "constants":
            print("config error: constants command needs kind = constants",
                  file=sys.stderr)
            return 2
        dom = Domain(0.0, 1.0, L)
        try:
            rows = constants_rows(cfg, dom)
        except ConfigError as e:
            print(f"config error: {e}", file=sys.stderr)
            return 2
        write_constants_csv(out_dir / "constants.csv", rows)
        print(out_dir / "constants.csv")
        return 0

    try:
        reports = run_experiment(cfg, out_dir)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    verdicts = [r.verdict for r in reports]
    for r in reports:
        print(f"{r.id}: {r.verdict} (ratio {r.ratio:.6g})")
    if any(v == "violated" for v in verdicts):
        return 4
    if any(v == "degenerate" for v in verdicts):
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
