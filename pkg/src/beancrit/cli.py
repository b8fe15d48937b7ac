"""Command line driver: config in, delimited files and figures out.

Every run writes a manifest.json recording the command, the echoed config,
the seed, and the full numerical-parameter registry, so results can be
reproduced from the output directory alone.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from . import __version__, evolution as ev, gridio, plots, power_law as pl, step as st
from . import tolerances as tol
from .boundary import DomainBoundary
from .convex import ConvexBody
from .distance import Workspace
from .errors import BeancritError, ConfigError
from .grid import ScalarGrid

log = logging.getLogger(__name__)


# ── config handling ──────────────────────────────────────────────────────────


def _section(cfg: dict, name: str) -> dict:
    if name not in cfg:
        raise ConfigError(f"missing section [{name}]")
    return cfg[name]


def _require(sec: dict, section: str, key: str):
    if key not in sec:
        raise ConfigError(f"missing key '{key}' in section [{section}]")
    return sec[key]


def load_config(path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"config file {path} is not valid TOML: {e}") from None


def build_omega(cfg: dict) -> DomainBoundary:
    sec = _section(cfg, "omega")
    kind = _require(sec, "omega", "kind")
    if kind == "disk":
        return DomainBoundary.disk(float(_require(sec, "omega", "radius")))
    if kind == "ellipse":
        return DomainBoundary.ellipse(float(_require(sec, "omega", "a")),
                                      float(_require(sec, "omega", "b")))
    if kind == "cassini":
        return DomainBoundary.cassini(float(_require(sec, "omega", "a")),
                                      float(_require(sec, "omega", "c")))
    if kind == "perturbed_disk":
        return DomainBoundary.perturbed_disk(
            float(sec.get("radius", 1.0)),
            amplitudes=tuple(sec.get("amplitudes", (0.15,))),
            modes=tuple(sec.get("modes", (5,))),
            phases=tuple(sec["phases"]) if "phases" in sec else None,
        )
    raise ConfigError(f"unknown domain kind '{kind}' in section [omega]")


def build_body(cfg: dict) -> ConvexBody:
    sec = _section(cfg, "K")
    kind = _require(sec, "K", "kind")
    center = tuple(sec.get("center", (0.0, 0.0)))
    if kind == "disk":
        return ConvexBody.disk(float(_require(sec, "K", "radius")), center=center)
    if kind == "ellipse":
        return ConvexBody.ellipse(float(_require(sec, "K", "a")),
                                  float(_require(sec, "K", "b")), center=center)
    if kind == "polygon":
        pts = np.asarray(_require(sec, "K", "points"), dtype=float)
        return ConvexBody.from_boundary_points(pts)
    raise ConfigError(f"unknown body kind '{kind}' in section [K]")


def grid_sizes(cfg: dict) -> tuple[int, int]:
    sec = _section(cfg, "grid")
    n = int(_require(sec, "grid", "resolution"))
    if n < tol.RESOLUTION_MIN or n > tol.RESOLUTION_MAX or (n & (n - 1)) != 0:
        raise ConfigError(
            f"key 'resolution' in section [grid] must be a power of two in "
            f"[{tol.RESOLUTION_MIN}, {tol.RESOLUTION_MAX}], got {n}")
    fan = int(sec.get("fan", tol.FAN_RAYS))
    if fan < 64:
        raise ConfigError(f"key 'fan' in section [grid] must be at least 64, got {fan}")
    return n, fan


def build_drive(cfg: dict) -> ev.DriveProfile:
    sec = _section(cfg, "drive")
    if "points" in sec:
        pts = np.asarray(sec["points"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ConfigError("key 'points' in section [drive] must be a list of [t, H] pairs")
        return ev.DriveProfile.from_points(pts[:, 0], pts[:, 1])
    kind = _require(sec, "drive", "kind")
    if kind == "ramp":
        return ev.DriveProfile.ramp(float(_require(sec, "drive", "rate")),
                                    float(_require(sec, "drive", "duration")))
    if kind == "triangle":
        return ev.DriveProfile.triangle(float(_require(sec, "drive", "peak")),
                                        float(_require(sec, "drive", "duration")))
    raise ConfigError(f"unknown drive kind '{kind}' in section [drive]")


def build_initial(ws: Workspace, cfg: dict) -> ScalarGrid:
    sec = _section(cfg, "initial")
    kind = _require(sec, "initial", "kind")
    g = ws.template
    if kind == "zero":
        return g.like(np.zeros(g.shape))
    if kind == "constant":
        return g.like(np.full(g.shape, float(_require(sec, "initial", "value"))))
    if kind == "csv":
        return gridio.read_grid_csv(_require(sec, "initial", "path"), g)
    raise ConfigError(f"unknown initial kind '{kind}' in section [initial]")


def _out_options(cfg: dict) -> dict:
    sec = cfg.get("output", {})
    return {
        "figures": bool(sec.get("figures", True)),
        "snapshots": int(sec.get("snapshots", 0)) or None,
        "front_level": sec.get("front_level"),
    }


# ── subcommands ──────────────────────────────────────────────────────────────


def _write_manifest(out: Path, command: str, cfg: dict, seed: int) -> None:
    doc = {
        "command": command,
        "config": cfg,
        "seed": seed,
        "version": __version__,
        "tolerances": tol.registry(),
    }
    with open(out / "manifest.json", "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def cmd_distance(ws: Workspace, cfg: dict, out: Path, opts: dict) -> None:
    gridio.write_grid_csv(out / "d.csv", ws.d)
    gridio.write_grid_csv(out / "d_minus.csv", ws.d_minus)
    gridio.write_fan_csv(out / "fan.csv", ws)
    if opts["figures"]:
        plots.save_field_contour(out / "d.png", ws.d, ws.omega, "distance to the boundary")
        plots.save_field_contour(out / "d_minus.png", ws.d_minus, ws.omega,
                                 "reflected-gauge distance")
        plots.save_field_surface(out / "d_surface.png", ws.d, "distance surface")
    print(f"distance fields on {ws.n_grid}x{ws.n_grid} cells, {ws.n_fan} rays "
          f"({ws.build_seconds:.2f} s)")


def cmd_step(ws: Workspace, cfg: dict, out: Path, opts: dict) -> None:
    ubar = build_initial(ws, cfg)
    result = st.solve_step(ws, ubar)
    report = st.mk_residual(ws, result.u, result.v, ubar)
    gridio.write_grid_csv(out / "u.csv", result.u)
    gridio.write_grid_csv(out / "v.csv", result.v)
    gridio.write_grid_csv(out / "labels.csv", ubar.like(result.labels.astype(float)))
    gridio.write_clip_csv(out / "clip.csv", ws.fan.thetas, result.lam, result.lam_minus)
    summary = {
        "weak_residual": report.weak_residual,
        "feasibility_excess": report.feasibility_excess,
        "singular_zeroed": result.singular_zeroed,
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    if opts["figures"]:
        plots.save_field_contour(out / "u.png", result.u, ws.omega, "constrained projection u")
        plots.save_field_contour(out / "v.png", result.v, ws.omega, "dual field v")
    print(f"step solved: weak residual {report.weak_residual:.3g}, "
          f"gradient excess {report.feasibility_excess:.3g}, "
          f"{result.singular_zeroed} singular cells zeroed")


def cmd_evolve(ws: Workspace, cfg: dict, out: Path, opts: dict) -> None:
    profile = build_drive(cfg)
    h0 = build_initial(ws, cfg)
    ev.validate_initial(ws, h0, float(profile.value(profile.t0)))
    per_piece = opts["snapshots"] or tol.SNAPSHOTS_PER_PIECE
    loop = ev.hysteresis_loop(ws, profile, h0, snapshots_per_piece=per_piece)
    for k, (t, field) in enumerate(loop.snapshots):
        gridio.write_grid_csv(out / f"h_{k:04d}.csv", field)
        if opts["figures"]:
            plots.save_field_contour(out / f"h_{k:04d}.png", field, ws.omega,
                                     f"field at t={t:.4g}")
    gridio.write_grid_csv(out / "h_final.csv", loop.terminal)
    tau = ev.full_penetration_time(ws, profile, h0)
    if opts["front_level"] is not None:
        first = profile.pieces[0]
        h_start = h0.like(ev.admissible_projection(ws, h0.values, float(first.value(first.t0))))
        comps = ev.penetration_front(ws, h_start, float(opts["front_level"]),
                                     increasing=first.increasing)
        gridio.write_front_csv(out / "front.csv", comps)
        if opts["figures"]:
            plots.save_front(out / "front.png", comps, ws.omega)
    last = profile.pieces[-1]
    h_last_start = ev.closed_form_field(ws, profile, h0, last.t0)
    w, zeroed = ev.dissipation_rate(ws, h_last_start, float(last.value(last.t1)),
                                    float(last.rate(last.t1)))
    gridio.write_grid_csv(out / "w_final.csv", w)
    if opts["figures"]:
        plots.save_field_contour(out / "h_final.png", loop.terminal, ws.omega, "terminal field")
        plots.save_field_contour(out / "w_final.png", w, ws.omega, "dissipation rate")
    summary = {
        "full_penetration_time": tau,
        "snapshots": len(loop.snapshots),
        "singular_zeroed_dissipation": zeroed,
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    msg = f"evolved over [{profile.t0:.4g}, {profile.t1:.4g}], {len(loop.snapshots)} snapshots"
    if tau is not None:
        msg += f", full penetration at t={tau:.6g}"
    print(msg)


def cmd_hysteresis(ws: Workspace, cfg: dict, out: Path, opts: dict) -> None:
    profile = build_drive(cfg)
    h0 = build_initial(ws, cfg)
    ev.validate_initial(ws, h0, float(profile.value(profile.t0)))
    per_piece = opts["snapshots"] or 3
    loop = ev.hysteresis_loop(ws, profile, h0, snapshots_per_piece=per_piece)
    gridio.write_loop_csv(out / "loop.csv", loop)
    gridio.write_grid_csv(out / "terminal.csv", loop.terminal)
    for k, (t, field) in enumerate(loop.snapshots):
        gridio.write_grid_csv(out / f"h_{k:04d}.csv", field)
        if opts["figures"]:
            plots.save_field_contour(out / f"h_{k:04d}.png", field, ws.omega,
                                     f"field at t={t:.4g}")
    if opts["figures"]:
        plots.save_loop(out / "loop.png", loop)
        plots.save_field_contour(out / "terminal.png", loop.terminal, ws.omega, "terminal field")
    print(f"loop with {len(loop.times)} samples, "
          f"remanent moment {loop.magnetization[-1]:.6g}")


def cmd_gamma(ws: Workspace, cfg: dict, out: Path, opts: dict) -> None:
    ubar = build_initial(ws, cfg)
    exps = cfg.get("gamma", {}).get("exponents", list(tol.POWER_EXPONENTS))
    if any(float(p) < tol.POWER_MIN_EXPONENT for p in exps):
        raise ConfigError(f"key 'exponents' in section [gamma] must all be at least "
                          f"{tol.POWER_MIN_EXPONENT}")
    rows = pl.gamma_report(ws, ubar, exponents=[float(p) for p in exps])
    gridio.write_ladder_csv(out / "report.csv", rows)
    if opts["figures"]:
        plots.save_ladder(out / "gap.png", rows)
    for r in rows:
        print(f"p={r.p:6.1f}  gap={r.gap_l2:.6g}  Jp={r.objective:.6g}  "
              f"iters={r.iterations}  max_rho={r.max_rho:.4f}")


_COMMANDS = {
    "distance": cmd_distance,
    "step": cmd_step,
    "evolve": cmd_evolve,
    "hysteresis": cmd_hysteresis,
    "gamma": cmd_gamma,
}


# ── entry point ──────────────────────────────────────────────────────────────


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="beancrit",
                                 description="critical-state fields on 2D cross sections")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("distance", "distance fields, ray fan, cut lengths and curvatures"),
        ("step", "one quasistatic step: clamp solution and dual field"),
        ("evolve", "drive the field along a profile, snapshots and fronts"),
        ("hysteresis", "magnetization loop along a closed drive"),
        ("gamma", "power-law approximations along an exponent ladder"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML configuration file")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=0, help="seed recorded in the manifest")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        n, fan = grid_sizes(cfg)
        omega = build_omega(cfg)
        body = build_body(cfg)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_manifest(out, args.command, cfg, args.seed)
        ws = Workspace(omega, body, n, fan)
        _COMMANDS[args.command](ws, cfg, out, _out_options(cfg))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except BeancritError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
