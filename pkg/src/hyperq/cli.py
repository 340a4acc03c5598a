"""Command line front-end: ``hyperq {moments,scan,verify,report}``.

Every key can come from a flat ``key = value`` file (``--config``) and be
overridden by the same-named flag. Outputs go to ``--out``, else
``$HYPERQ_OUT``, else the config's ``out``, else ``./hyperq_out``.

Exit codes: 0 success, 1 invariant failure, 2 configuration error,
3 divergence where finite values were requested.
"""
from __future__ import annotations

import argparse
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, HyperqError, NonDecayingTail
from .evolve import PdeStepper, PdeStepperConfig, PropagationRoute, hs_identity_residual, propagate_spectral
from .model import CoherentPacket, LogNormalPacket, PhysicalParams, packet_norm
from .numerics import QuadratureSpec
from .observe import (
    DivergenceCriteria, MomentSeries, moment_rotation, moment_series, moment_spectral, moment_pde,
    profiles_to_csv, scan_singularities, total_x2,
)
from .outputs import read_config_file, resolve_out_dir, svg_line_chart, write_json, write_manifest, write_text
from .report import ReportConfig, comparison_report, render_text, report_json
from .spectral import EigenNormConstant, LogGrid, delta_sequence_slope, expand, read_field, reduce_packet, \
    synthesize, write_field

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_DIVERGENCE = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# configuration

def _parse_bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_floats(s):
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    return [float(v) for v in str(s).replace(" ", "").split(",") if v]


def _parse_times(s):
    """'0.01,0.02' or 'start:stop:step' (stop included)."""
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    s = str(s).strip()
    if ":" in s:
        parts = [float(v) for v in s.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise ValueError("time range must be start:stop:step with step > 0 and stop >= start")
        n = int(round((parts[1] - parts[0]) / parts[2]))
        return [round(parts[0] + k * parts[2], 12) for k in range(n + 1)]
    return _parse_floats(s)


def _parse_routes(s):
    if isinstance(s, (list, tuple)):
        names = list(s)
    else:
        names = [v for v in str(s).replace(" ", "").split(",") if v]
    return [PropagationRoute(v).value for v in names]


COMMON = {
    "hbar": (float, 1.0), "omega": (float, 0.0), "mu": (float, 1.0),
    "packet": (str, "coherent"), "alpha": (complex, 0j), "a": (float, 1.0),
    "u_min": (float, -16.0), "u_max": (float, 16.0), "n_points": (int, 2**14),
    "dt": (float, 1e-5), "richardson": (_parse_bool, True),
    "rel_tol": (float, 1e-10), "abs_tol": (float, 1e-14),
    "out": (str, ""),
}
COMMANDS = {
    "moments": {"n": (int, 2), "t": (_parse_times, [0.0]), "route": (_parse_routes, ["rotation"]),
                "x0": (float, 0.0)},
    "scan": {"t_start": (float, 0.0), "t_stop": (float, 0.12), "t_step": (float, 0.002),
             "ladder": (_parse_floats, [4.0, 8.0, 16.0, 32.0]), "route": (str, "saddle"),
             "diverge_ratio": (float, 4.0), "converge_tol": (float, 1e-6), "min_rungs": (int, 4)},
    "verify": {"quick": (_parse_bool, False), "ns": (float, 4 * math.pi)},
    "report": {"include_pde": (_parse_bool, True), "audit_alpha": (complex, 0.5 + 0.25j)},
}
FLAG_HELP = {
    "packet": "coherent or lognormal", "alpha": "coherent amplitude, e.g. 0.5+0.25j", "a": "log-normal width",
    "t": "times: comma list or start:stop:step", "route": "rotation, saddle, spectral, pde (comma list)",
    "x0": "saddle-region cutoff (0 = none)", "ladder": "comma list of cutoffs x0",
    "ns": "eigenfunction normalisation N_s used by the delta-sequence check",
    "quick": "skip the time-stepping checks", "out": "output directory",
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyperq", description="Quantum dynamics near a hyperbolic saddle point.")
    ap.add_argument("--version", action="version", version=f"hyperq {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd, keys in COMMANDS.items():
        sp = sub.add_parser(cmd, argument_default=argparse.SUPPRESS)
        sp.add_argument("--config", help="key = value configuration file")
        for key, (conv, default) in {**COMMON, **keys}.items():
            flag = "--" + key.replace("_", "-")
            if conv is _parse_bool:
                sp.add_argument(flag, nargs="?", const="true", help=FLAG_HELP.get(key))
            else:
                sp.add_argument(flag, help=FLAG_HELP.get(key, f"default {default}"))
        if cmd == "report":
            sp.add_argument("--no-pde", dest="include_pde", action="store_const", const="false")
    return ap


def resolve_config(command: str, cli: dict) -> dict:
    """Defaults, then the config file, then flags; values converted and validated."""
    schema = {**COMMON, **COMMANDS[command]}
    raw = {k: d for k, (_, d) in schema.items()}
    cfg_path = cli.pop("config", None)
    if cfg_path:
        for k, v in read_config_file(cfg_path).items():
            if k not in schema:
                raise ConfigError(f"unknown configuration key {k!r} for '{command}'")
            raw[k] = v
    raw.update(cli)
    out = {}
    for k, (conv, _) in schema.items():
        v = raw[k]
        try:
            out[k] = conv(v) if isinstance(v, str) or conv in (_parse_times, _parse_floats, _parse_routes) else v
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid value for {k}: {v!r} ({exc})") from None
    if out["packet"] not in ("coherent", "lognormal"):
        raise ConfigError("packet must be 'coherent' or 'lognormal'")
    if cfg_path:
        out["config_file"] = str(cfg_path)
    return out


def _json_config(cfg: dict) -> dict:
    res = {}
    for k, v in cfg.items():
        if isinstance(v, complex):
            v = repr(v)
        res[k] = v
    return res


def _params(cfg):
    return PhysicalParams(cfg["hbar"], cfg["omega"], cfg["mu"])


def _packet(cfg):
    if cfg["packet"] == "coherent":
        return CoherentPacket(cfg["alpha"], cfg["hbar"])
    return LogNormalPacket(cfg["a"])


def _grid(cfg):
    return LogGrid(cfg["u_min"], cfg["u_max"], cfg["n_points"])


def _pde(cfg):
    return PdeStepperConfig(dt=cfg["dt"], grid=_grid(cfg), richardson=cfg["richardson"])


def _quad(cfg):
    return QuadratureSpec(rel_tol=cfg["rel_tol"], abs_tol=cfg["abs_tol"])


# ---------------------------------------------------------------------------
# commands

def cmd_moments(cfg: dict, out: Path):
    p, w = _params(cfg), _packet(cfg)
    n, times = cfg["n"], cfg["t"]
    x0 = cfg["x0"] if cfg["x0"] > 0 else None
    series = MomentSeries()
    diverged = []
    for route in cfg["route"]:
        r = PropagationRoute(route)
        if r is PropagationRoute.SADDLE and x0 is None:
            raise ConfigError("the saddle route needs a cutoff --x0")
        if r is PropagationRoute.FREE:
            raise ConfigError("the free-window route is not a moment route")
        if r is PropagationRoute.PDE:
            try:
                series.entries += moment_series(n, times, w, p, r, x0, _grid(cfg), _pde(cfg)).entries
            except NonDecayingTail as exc:
                diverged.append({"route": route, "t": None, "message": str(exc)})
            continue
        for t in times:
            try:
                series.entries += moment_series(n, [t], w, p, r, x0, _grid(cfg), _pde(cfg), _quad(cfg)).entries
            except NonDecayingTail as exc:
                diverged.append({"route": route, "t": t, "message": str(exc).splitlines()[0]})
    write_text(out / "moments.csv", series.to_csv())
    lines = []
    for route in cfg["route"]:
        es = [e for e in series if e.route.value == route]
        lines.append((route, [e.t for e in es], [e.value for e in es]))
    write_text(out / "moments.svg", svg_line_chart(lines, f"<x^{n}(t)>", "t", f"<x^{n}>"))
    checks = {"entries": len(series), "diverged": diverged}
    return (EXIT_DIVERGENCE if diverged else EXIT_OK), checks


def cmd_scan(cfg: dict, out: Path):
    p, w = _params(cfg), _packet(cfg)
    if cfg["t_step"] <= 0 or cfg["t_stop"] < cfg["t_start"]:
        raise ConfigError("scan grid needs t_step > 0 and t_stop >= t_start")
    grid = _parse_times(f"{cfg['t_start']}:{cfg['t_stop']}:{cfg['t_step']}")
    crit = DivergenceCriteria(cfg["diverge_ratio"], cfg["converge_tol"], cfg["min_rungs"])
    res = scan_singularities(grid, w, p, cfg["ladder"], cfg["route"], crit, _quad(cfg))
    summary = res.summary(p if p.mu != 0 else None)
    write_text(out / "scan.csv", profiles_to_csv(res.profiles))
    write_json(out / "scan_clusters.json", summary)
    lines = []
    for k, x0 in enumerate(cfg["ladder"]):
        ys = []
        for pr in res.profiles:
            v = pr.ladder[k][1]
            ys.append(v.log10_abs if hasattr(v, "log10_abs") else
                      (math.log10(abs(v)) if v != 0 else -math.inf))
        lines.append((f"x0 = {x0:g}", [pr.t for pr in res.profiles], ys))
    write_text(out / "scan.svg", svg_line_chart(lines, "truncated <x^2> along the ladder", "t", "log10 |I_s|"))
    return EXIT_OK, {"clusters": summary["clusters"], "n_flagged": len(summary["flagged"])}


def _check(name, value, tol, passed=None, **extra):
    ok = bool(value <= tol) if passed is None else bool(passed)
    return {"name": name, "value": float(value), "tolerance": float(tol), "passed": ok, **extra}


def run_checks(cfg: dict) -> list:
    """The invariant suite behind ``hyperq verify``."""
    quick = cfg["quick"]
    checks = []
    alphas = [0, 0.5, -0.7 + 0.2j, 1 + 1j, 2j]
    checks.append(_check("norm: coherent packets", max(abs(packet_norm(CoherentPacket(a)) - 1) for a in alphas), 1e-10))
    checks.append(_check("norm: log-normal packet", abs(packet_norm(LogNormalPacket(1.0)) - math.sqrt(2) / 2), 1e-10))

    g = LogGrid()
    f = reduce_packet(CoherentPacket(0.3 + 0.1j), g, apodize=True)
    s = expand(f)
    p1 = PhysicalParams(1.0, 0.2, 1.0)
    st = propagate_spectral(s, 0.05, p1)
    checks.append(_check("unitarity: spectral |q| per node", float(np.max(np.abs(np.abs(st.weights) - np.abs(s.weights)))),
                         1e-12))
    back = synthesize(s, g)
    checks.append(_check("roundtrip: expand then synthesize (max-node relative)",
                         float(np.max(np.abs(back.values - f.values)) / np.max(np.abs(f.values))), 1e-10))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "field.txt"
        write_field(path, f)
        again = read_field(path)
    checks.append(_check("roundtrip: field file", float(np.max(np.abs(again.values - f.values))), 0.0))

    hs_pts = [(e, b) for e in (0.0, 1.0, 2.0) for b in (0.05, 0.1)]
    if quick:
        hs_pts = hs_pts[::3]
    hs = max(hs_identity_residual(e, 4 * b, sg) for e, b in hs_pts for sg in (1, -1))
    checks.append(_check("Fresnel identity residual", hs, 1e-8))

    slope = delta_sequence_slope(n=EigenNormConstant(cfg["ns"]))
    checks.append(_check("delta-sequence slope (relative to 1/pi)", abs(slope * math.pi - 1), 0.01, slope=slope))

    w = CoherentPacket(0j)
    p = PhysicalParams()
    checks.append(_check("window partition at t = 0", max(abs(total_x2(0.0, x0, w, p)[0] - 0.5) for x0 in (0.5, 1, 3)),
                         1e-8 * 0.5))
    worst = 0.0
    for t in (0.01, 0.02):
        exact = 0.5 * math.cos(16 * t) ** -1.5
        vals = [moment_rotation(2, t, w, p)[0], moment_spectral(2, t, w, p)[0]]
        worst = max(worst, max(abs(v / exact - 1) for v in vals))
    if not quick:
        for t, v in zip((0.01, 0.02), moment_series(2, (0.01, 0.02), w, p, "pde").values):
            worst = max(worst, abs(v / (0.5 * math.cos(16 * t) ** -1.5) - 1))
        st = PdeStepper(reduce_packet(w, LogGrid(n_points=2**12), apodize=True), p,
                        PdeStepperConfig(dt=1e-5, grid=LogGrid(n_points=2**12), drift_tol=1.0))
        st.advance_to(1000 * 1e-5)
        checks.append(_check("unitarity: pde norm drift per 1000 steps", st.max_drift, 1e-8))
    checks.append(_check("route equivalence <x^2>", worst, 1e-5))
    return checks


def cmd_verify(cfg: dict, out: Path):
    checks = run_checks(cfg)
    ok = all(c["passed"] for c in checks)
    write_json(out / "verify.json", {"passed": ok, "checks": checks})
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['value']:.3e} (tol {c['tolerance']:.1e})")
    return (EXIT_OK if ok else EXIT_INVARIANT), {c["name"]: c["passed"] for c in checks}


def cmd_report(cfg: dict, out: Path):
    rc = ReportConfig(params=_params(cfg), alpha=cfg["audit_alpha"], a=cfg["a"], grid=_grid(cfg),
                      pde=_pde(cfg), include_pde=cfg["include_pde"])
    doc = comparison_report(rc)
    write_text(out / "report.json", report_json(doc))
    write_text(out / "report.txt", render_text(doc))
    return EXIT_OK, {"sections": list(doc)}


HANDLERS = {"moments": cmd_moments, "scan": cmd_scan, "verify": cmd_verify, "report": cmd_report}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    args = vars(ns)
    command = args.pop("command")
    tic = time.perf_counter()
    cfg, out = None, None
    try:
        cfg = resolve_config(command, args)
        out = resolve_out_dir(args.get("out"), cfg.get("out") or None)
        out.mkdir(parents=True, exist_ok=True)
        code, checks = HANDLERS[command](cfg, out)
    except ConfigError as exc:
        print(f"hyperq: configuration error: {exc}", file=sys.stderr)
        code, checks = EXIT_CONFIG, {"error": f"ConfigError: {exc}"}
    except NonDecayingTail as exc:
        print(f"hyperq: divergence: {exc}", file=sys.stderr)
        code, checks = EXIT_DIVERGENCE, {"error": f"NonDecayingTail: {exc}"}
    except HyperqError as exc:
        print(f"hyperq: {type(exc).__name__}: {exc}", file=sys.stderr)
        code, checks = EXIT_INVARIANT, {"error": f"{type(exc).__name__}: {exc}"}
    if out is not None:
        # an invalid configuration before the output directory is known leaves no manifest
        write_manifest(out, {"command": command, **_json_config(cfg)}, __version__, checks,
                       time.perf_counter() - tic, {"exit_code": code})
    return code

if __name__ == "__main__":
    sys.exit(main())
