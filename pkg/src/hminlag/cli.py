"""Config-driven command line: solve curves, analyze closedness, build
immersions, run verification suites, and export data.

Commands: `curve solve|analyze`, `build`, `verify`, `export`.  Options come
from a JSON file (--config) and/or flags; flags override the file, unknown
config fields are rejected.  Every error path emits machine-readable JSON
on stderr with a documented exit code:

    0  success / all verdicts pass
    1  runtime failure (integration, quadrature) or failed verdicts
    2  configuration / validation error
    3  verification finished with inconclusive verdicts only
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import geoverify as gv
from . import immersion_factory as fac
from . import legendre_curves as lc
from .errors import DomainError, GeometryError, SingularPointError

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3


def _fail(code: int, kind: str, message: str, **details) -> int:
    payload = {"error": {"code": kind, "message": message}}
    if details:
        payload["error"]["details"] = details
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def _dump_json(obj, path: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        cfg = json.load(f)
    if not isinstance(cfg, dict):
        raise DomainError("config file must contain a JSON object")
    return cfg


def _merged(cfg: dict, allowed: set[str], overrides: dict) -> dict:
    unknown = set(cfg) - allowed
    if unknown:
        raise DomainError(f"unknown config field(s): {sorted(unknown)}")
    out = dict(cfg)
    for k, v in overrides.items():
        if v is not None:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# curve solve
# ---------------------------------------------------------------------------

_CURVE_FIELDS = {"ambient", "n1", "n2", "mu", "theta", "rho", "t_end", "step",
                 "out_csv", "out_json"}


def _curve_spec_from(cfg: dict) -> lc.CurveSpec:
    ambient = cfg.get("ambient", "sphere")
    n1, n2 = int(cfg.get("n1", 1)), int(cfg.get("n2", 1))
    mu = float(cfg.get("mu", 0.0))
    if ambient == "sphere":
        theta = cfg.get("theta")
        if theta is None:
            raise DomainError("sphere curves need theta")
        theta = float(theta)
        if not 0.0 < theta < math.pi / 2:
            raise DomainError("theta out of (0, pi/2)")
        return lc.CurveSpec.sphere(n1, n2, mu, theta)
    if ambient == "ads":
        rho = cfg.get("rho")
        if rho is None:
            raise DomainError("ads curves need rho")
        rho = float(rho)
        if rho <= 0.0:
            raise DomainError("rho must be positive")
        return lc.CurveSpec.ads(n1, n2, mu, rho)
    raise DomainError("ambient must be 'sphere' or 'ads'")


def cmd_curve_solve(args) -> int:
    try:
        cfg = _merged(_load_config(args.config), _CURVE_FIELDS, {
            "ambient": args.ambient, "n1": args.n1, "n2": args.n2, "mu": args.mu,
            "theta": args.theta, "rho": args.rho, "t_end": args.t_end,
            "step": args.step, "out_csv": args.out_csv, "out_json": args.out_json,
        })
        spec = _curve_spec_from(cfg)
        t_end = float(cfg.get("t_end", 10.0))
        step = float(cfg.get("step", 1e-3))
    except (DomainError, ValueError, json.JSONDecodeError) as e:
        return _fail(EXIT_CONFIG, "invalid_config", str(e))
    try:
        traj = lc.integrate(spec, t_end, step)
    except GeometryError as e:
        return _fail(EXIT_RUNTIME, "integration_failure", str(e))
    fi = traj.first_integral()
    summary = {
        "ambient": "sphere" if spec.is_sphere else "ads",
        "n1": spec.n1, "n2": spec.n2, "mu": spec.mu,
        "init": [spec.init[0].real, spec.init[0].imag, spec.init[1].real, spec.init[1].imag],
        "t_end": t_end, "step": step, "n_nodes": int(len(traj.ts)),
        "drifts": {
            "quadric": traj.quadric_drift(),
            "legendre": traj.legendre_residual(),
            "gauge": traj.gauge_residual(),
            "richardson": traj.richardson_error,
        },
    }
    if spec.mu == 0.0:
        summary["drifts"]["first_integral"] = float(np.max(np.abs(fi - fi[0])))
    if cfg.get("out_csv"):
        traj.to_csv(cfg["out_csv"])
        summary["csv"] = cfg["out_csv"]
    _dump_json(summary, cfg.get("out_json"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# curve analyze
# ---------------------------------------------------------------------------

_ANALYZE_FIELDS = {"n1", "n2", "theta", "theta_grid", "t_end", "step",
                   "q_max", "cert_tol", "out_json", "out_csv"}


def _analyze_one(payload: tuple) -> dict:
    n1, n2, theta, t_end, step, q_max, cert_tol = payload
    row = {"theta": theta}
    try:
        spec = lc.CurveSpec.sphere(n1, n2, 0.0, theta)
        traj = lc.integrate(spec, t_end, step, richardson=False)
        rep = lc.closedness_report(traj, q_max, cert_tol)
        row.update(rep.to_dict())
        proj = gv.projected_periodicity(traj, rep, q_max, cert_tol)
        row["m"] = proj.m
        row["projected_period"] = proj.period
        row["status"] = "ok"
    except GeometryError as e:
        row["status"] = "inconclusive"
        row["message"] = str(e)
    return row


_SWEEP_COLUMNS = ["theta", "status", "degenerate", "T", "rot1", "rot2", "gamma_rot",
                  "closed_curve", "projected_periodic", "m", "projected_period"]


def cmd_curve_analyze(args) -> int:
    try:
        cfg = _merged(_load_config(args.config), _ANALYZE_FIELDS, {
            "n1": args.n1, "n2": args.n2, "theta": args.theta,
            "theta_grid": args.theta_grid, "t_end": args.t_end, "step": args.step,
            "q_max": args.q_max, "cert_tol": args.cert_tol,
            "out_json": args.out_json, "out_csv": args.out_csv,
        })
        n1, n2 = int(cfg.get("n1", 1)), int(cfg.get("n2", 1))
        t_end = float(cfg.get("t_end", 60.0))
        step = float(cfg.get("step", 2e-3))
        q_max = int(cfg.get("q_max", 64))
        cert_tol = float(cfg.get("cert_tol", 1e-7))
        grid_expr = cfg.get("theta_grid")
        if grid_expr is None and cfg.get("theta") is None:
            raise DomainError("need theta or theta_grid")
        thetas = None
        if grid_expr is not None:
            a, b, c = (float(x) for x in str(grid_expr).split(":"))
            if c <= 0 or b <= a:
                raise DomainError("theta grid must be start:stop:step with step > 0")
            thetas = list(np.arange(a, b + 1e-12, c))
        else:
            theta = float(cfg["theta"])
            if not 0.0 < theta < math.pi / 2:
                raise DomainError("theta out of (0, pi/2)")
    except (DomainError, ValueError, json.JSONDecodeError) as e:
        return _fail(EXIT_CONFIG, "invalid_config", str(e))

    if thetas is None:
        row = _analyze_one((n1, n2, theta, t_end, step, q_max, cert_tol))
        if row["status"] != "ok":
            return _fail(EXIT_RUNTIME, "analysis_inconclusive", row.get("message", ""))
        _dump_json(row, cfg.get("out_json"))
        return EXIT_OK

    payloads = [(n1, n2, float(t), t_end, step, q_max, cert_tol) for t in thetas]
    jobs = max(1, int(args.jobs or 1))
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_analyze_one, payloads))
    else:
        rows = [_analyze_one(p) for p in payloads]
    lines = [",".join(_SWEEP_COLUMNS)]
    for row in rows:
        cells = []
        for col in _SWEEP_COLUMNS:
            v = row.get(col)
            if v is None:
                cells.append("")
            elif isinstance(v, bool):
                cells.append(str(v).lower())
            elif isinstance(v, float):
                cells.append(f"{v:.17g}")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if cfg.get("out_csv"):
        Path(cfg["out_csv"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------

_BUILD_FIELDS = {"immersion", "grid", "out_dir"}


def _grid_from_cfg(imm, grid_cfg: dict) -> np.ndarray:
    allowed = {"counts", "center", "half_widths"}
    unknown = set(grid_cfg) - allowed
    if unknown:
        raise DomainError(f"unknown grid field(s): {sorted(unknown)}")
    counts = grid_cfg.get("counts", [3] * imm.chart_dim)
    return gv.grid_box(imm, counts, grid_cfg.get("center"), grid_cfg.get("half_widths"))


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (int, float, str, bool)) or x is None:
        return x
    return str(x)


def _samples_csv(imm, grid: np.ndarray, path: str) -> None:
    d, m = imm.chart_dim, imm.signature.dim_complex
    header = [f"u{i}" for i in range(d)] + [x for j in range(m) for x in (f"re{j}", f"im{j}")]
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(header) + "\n")
        for u in grid:
            z = imm.value(u)
            row = list(u) + [x for zj in z for x in (zj.real, zj.imag)]
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")


def cmd_build(args) -> int:
    try:
        cfg = _merged(_load_config(args.config), _BUILD_FIELDS, {"out_dir": args.out_dir})
        imm_cfg = cfg.get("immersion")
        if imm_cfg is None:
            raise DomainError("build config needs an 'immersion' object")
        out_dir = Path(cfg.get("out_dir", "."))
        imm = fac.build_from_config(imm_cfg)
        grid = _grid_from_cfg(imm, cfg.get("grid", {}))
    except SingularPointError as e:
        return _fail(EXIT_CONFIG, "singular_grid", str(e), factor=e.factor)
    except (DomainError, ValueError, json.JSONDecodeError) as e:
        return _fail(EXIT_CONFIG, "invalid_config", str(e))
    except GeometryError as e:
        return _fail(EXIT_RUNTIME, "build_failure", str(e))
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "samples.csv"
    _samples_csv(imm, grid, str(csv_path))
    descriptor = {
        "immersion": imm_cfg,
        "kind": imm.kind.value,
        "chart_dim": imm.chart_dim,
        "dim_complex": imm.signature.dim_complex,
        "level": imm.level,
        "claims": gv.immersion_claims(imm),
        "metadata": _json_safe({k: v for k, v in imm.metadata.items() if k != "config"}),
        "grid": _json_safe(cfg.get("grid", {})),
        "samples_csv": csv_path.name,
        "n_samples": int(len(grid)),
    }
    _dump_json(descriptor, str(out_dir / "descriptor.json"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

_VERIFY_FIELDS = {"immersion", "bundle", "checks", "grid", "h", "samples",
                  "seed", "tolerances", "out_json"}


def _verify_chunk(payload: tuple) -> dict:
    imm_cfg_json, chunk, h, checks = payload
    imm = fac.build_from_config(json.loads(imm_cfg_json))
    grid = np.asarray(chunk, dtype=float)
    stats = gv.residual_suite(imm, grid, h, checks)
    return {k: (v.max, v.mean, v.n_points, v.h) for k, v in stats.items()}


def cmd_verify(args) -> int:
    try:
        cfg = _merged(_load_config(args.config), _VERIFY_FIELDS, {
            "h": args.h, "samples": args.samples, "seed": args.seed,
            "out_json": args.out_json,
        })
        imm_cfg = cfg.get("immersion")
        if imm_cfg is None and cfg.get("bundle"):
            with open(cfg["bundle"], "r", encoding="utf-8") as f:
                imm_cfg = json.load(f)["immersion"]
        if imm_cfg is None:
            raise DomainError("verify config needs 'immersion' or 'bundle'")
        checks = tuple(cfg.get("checks", list(gv.DEFAULT_CHECKS)))
        known = set(gv.DEFAULT_CHECKS) | {"quotient"}
        if not set(checks) <= known:
            raise DomainError(f"unknown check(s): {sorted(set(checks) - known)}")
        h = float(cfg.get("h", 1e-3))
        imm = fac.build_from_config(imm_cfg)
        grid = _grid_from_cfg(imm, cfg.get("grid", {}))
    except (DomainError, ValueError, json.JSONDecodeError, OSError) as e:
        return _fail(EXIT_CONFIG, "invalid_config", str(e))
    except GeometryError as e:
        return _fail(EXIT_RUNTIME, "build_failure", str(e))

    try:
        jobs = max(1, int(args.jobs or 1))
        residual_checks = tuple(c for c in checks if c != "quotient")
        if jobs > 1 and len(grid) >= 2 * jobs and residual_checks:
            chunks = np.array_split(np.asarray(grid), jobs)
            payload = json.dumps(imm_cfg, sort_keys=True)
            with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
                partials = list(pool.map(
                    _verify_chunk,
                    [(payload, c.tolist(), h, residual_checks) for c in chunks if len(c)],
                ))
            merged: dict[str, gv.ResidualStat] = {}
            for name in partials[0]:
                merged[name] = gv.merge_stats(
                    [gv.ResidualStat(*p[name]) for p in partials if name in p]
                )
            report = gv.run_suite(
                imm, checks=checks, h=h, precomputed=merged,
                samples=int(cfg.get("samples", 1000)), seed=int(cfg.get("seed", 0)),
                tolerances=cfg.get("tolerances"),
            )
        else:
            report = gv.run_suite(
                imm, checks=checks, grid=grid, h=h,
                samples=int(cfg.get("samples", 1000)), seed=int(cfg.get("seed", 0)),
                tolerances=cfg.get("tolerances"),
            )
    except GeometryError as e:
        return _fail(EXIT_RUNTIME, "verification_failure", str(e))

    _dump_json(report.to_dict(), cfg.get("out_json"))
    verdicts = set(report.verdicts.values())
    if "fail" in verdicts:
        return EXIT_RUNTIME
    if "inconclusive" in verdicts:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

_EXPORT_FIELDS = {"immersion", "bundle", "trajectory", "format", "slice",
                  "projection", "out"}


def _export_obj(imm, slice_cfg: dict, projection, path: str) -> None:
    allowed = {"dims", "counts", "center", "half_widths", "wrap"}
    unknown = set(slice_cfg) - allowed
    if unknown:
        raise DomainError(f"unknown slice field(s): {sorted(unknown)}")
    dims = slice_cfg.get("dims")
    if dims is None or len(dims) != 2:
        raise DomainError("OBJ requires a 2-dimensional slice")
    i, j = (int(x) for x in dims)
    counts = slice_cfg.get("counts", [24, 24])
    ni, nj = int(counts[0]), int(counts[1])
    if ni < 2 or nj < 2:
        raise DomainError("slice counts must be >= 2")
    if projection is None or len(projection) != 3:
        raise DomainError("OBJ export needs a projection of 3 real coordinate indices")
    proj = [int(p) for p in projection]
    m = imm.signature.dim_complex
    if any(not 0 <= p < 2 * m for p in proj):
        raise DomainError(f"projection indices must lie in [0, {2*m})")

    center, half = gv.default_patch(imm)
    if slice_cfg.get("center") is not None:
        center = np.asarray(slice_cfg["center"], dtype=float)
    if slice_cfg.get("half_widths") is not None:
        half = np.asarray(slice_cfg["half_widths"], dtype=float)

    wrap_i = bool(slice_cfg.get("wrap", [False, False])[0])
    wrap_j = bool(slice_cfg.get("wrap", [False, False])[1])
    # the circle factor of projected kinds closes over its stated period
    if imm.is_product_like and "circle_period" in imm.metadata:
        if i == 0:
            wrap_i = True
        if j == 0:
            wrap_j = True

    def axis(idx, n, do_wrap):
        if do_wrap and idx == 0:
            return np.linspace(0.0, imm.metadata["circle_period"], n, endpoint=False)
        return np.linspace(center[idx] - half[idx], center[idx] + half[idx], n)

    ui = axis(i, ni, wrap_i)
    uj = axis(j, nj, wrap_j)
    verts = []
    for a in range(ni):
        for b in range(nj):
            u = center.copy()
            u[i], u[j] = ui[a], uj[b]
            imm.check_regular(u)
            z = imm.value(u)
            reals = [x for zj in z for x in (zj.real, zj.imag)]
            verts.append([reals[p] for p in proj])

    def vid(a, b):
        return (a % ni) * nj + (b % nj) + 1

    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in verts]
    amax = ni if wrap_i else ni - 1
    bmax = nj if wrap_j else nj - 1
    for a in range(amax):
        for b in range(bmax):
            q = (vid(a, b), vid(a + 1, b), vid(a + 1, b + 1), vid(a, b + 1))
            lines.append(f"f {q[0]} {q[1]} {q[2]}")
            lines.append(f"f {q[0]} {q[2]} {q[3]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_export(args) -> int:
    try:
        cfg = _merged(_load_config(args.config), _EXPORT_FIELDS, {"out": args.out})
        out = cfg.get("out")
        if not out:
            raise DomainError("export needs an 'out' path")
        if cfg.get("trajectory") is not None:
            tr_cfg = dict(cfg["trajectory"])
            unknown = set(tr_cfg) - (_CURVE_FIELDS - {"out_csv", "out_json"})
            if unknown:
                raise DomainError(f"unknown trajectory field(s): {sorted(unknown)}")
            spec = _curve_spec_from(tr_cfg)
            traj = lc.integrate(spec, float(tr_cfg.get("t_end", 10.0)), float(tr_cfg.get("step", 1e-3)))
            traj.to_csv(out)
            return EXIT_OK
        imm_cfg = cfg.get("immersion")
        if imm_cfg is None and cfg.get("bundle"):
            with open(cfg["bundle"], "r", encoding="utf-8") as f:
                imm_cfg = json.load(f)["immersion"]
        if imm_cfg is None:
            raise DomainError("export needs 'immersion', 'bundle', or 'trajectory'")
        imm = fac.build_from_config(imm_cfg)
        fmt = cfg.get("format", "csv")
        if fmt == "obj":
            _export_obj(imm, cfg.get("slice", {}), cfg.get("projection"), out)
        elif fmt == "csv":
            grid = _grid_from_cfg(imm, cfg.get("slice", {}) and {
                k: v for k, v in cfg["slice"].items() if k in ("counts", "center", "half_widths")
            } or {})
            _samples_csv(imm, grid, out)
        else:
            raise DomainError("format must be 'obj' or 'csv'")
    except SingularPointError as e:
        return _fail(EXIT_CONFIG, "singular_slice", str(e), factor=e.factor)
    except (DomainError, ValueError, json.JSONDecodeError, OSError) as e:
        return _fail(EXIT_CONFIG, "invalid_config", str(e))
    except GeometryError as e:
        return _fail(EXIT_RUNTIME, "export_failure", str(e))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hminlag", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    curve = sub.add_parser("curve", help="Legendre curve operations")
    csub = curve.add_subparsers(dest="subcommand", required=True)

    solve = csub.add_parser("solve", help="integrate a curve IVP and export it")
    solve.add_argument("--config")
    solve.add_argument("--ambient", choices=["sphere", "ads"])
    solve.add_argument("--n1", type=int)
    solve.add_argument("--n2", type=int)
    solve.add_argument("--mu", type=float)
    solve.add_argument("--theta", type=float)
    solve.add_argument("--rho", type=float)
    solve.add_argument("--t-end", dest="t_end", type=float)
    solve.add_argument("--step", type=float)
    solve.add_argument("--out-csv", dest="out_csv")
    solve.add_argument("--out-json", dest="out_json")
    solve.set_defaults(func=cmd_curve_solve)

    ana = csub.add_parser("analyze", help="periods, rotation numbers, closedness certificates")
    ana.add_argument("--config")
    ana.add_argument("--n1", type=int)
    ana.add_argument("--n2", type=int)
    ana.add_argument("--theta", type=float)
    ana.add_argument("--theta-grid", dest="theta_grid")
    ana.add_argument("--t-end", dest="t_end", type=float)
    ana.add_argument("--step", type=float)
    ana.add_argument("--q-max", dest="q_max", type=int)
    ana.add_argument("--cert-tol", dest="cert_tol", type=float)
    ana.add_argument("--jobs", type=int, default=1)
    ana.add_argument("--out-json", dest="out_json")
    ana.add_argument("--out-csv", dest="out_csv")
    ana.set_defaults(func=cmd_curve_analyze)

    build = sub.add_parser("build", help="assemble an immersion bundle")
    build.add_argument("--config", required=True)
    build.add_argument("--out-dir", dest="out_dir")
    build.set_defaults(func=cmd_build)

    verify = sub.add_parser("verify", help="run the finite-difference verification suite")
    verify.add_argument("--config", required=True)
    verify.add_argument("--h", type=float)
    verify.add_argument("--samples", type=int)
    verify.add_argument("--seed", type=int)
    verify.add_argument("--jobs", type=int, default=1)
    verify.add_argument("--out-json", dest="out_json")
    verify.set_defaults(func=cmd_verify)

    exp = sub.add_parser("export", help="export OBJ meshes or CSV samples")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out")
    exp.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
