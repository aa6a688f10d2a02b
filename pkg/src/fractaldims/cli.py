"""Command-line drivers and result manifests.

    fractal-dims <dims|poles|tube|heat|explicit|render> --config file.json
                 [--out DIR] [--set key=value ...]

Each run reads one JSON config document (flags override file values),
writes its outputs plus a manifest.json into the output directory, and
is keyed by the SHA-256 of the canonical config.  With FRACTAL_DIMS_CACHE
set, heavy stages are reused from the cache byte-for-byte.  All commands
are deterministic: identical configs produce identical CSV bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cache import ResultCache, canonical_json, config_hash, sha256_file
from .explicit import (build_terms, compare_explicit, evaluate_sum,
                       remainder_term)
from .heat import (HeatProblem, decomposition_remainder, heat_exponent_fit,
                   solve_heat_content, verify_heat_scaling)
from .mellin import sfe_zeta_residue
from .sampled import SampledFunction, antiderivative, geometric_grid
from .tubes import distance_field, minkowski_fit, tube_function, verify_gkf_sfe
from .vonkoch import (GKCParams, polyline_to_svg_path, prefractal,
                      sector_region, snowflake)
from .zeta import (ComplexDimensionSet, DirichletPoly, RatioMultiset,
                   detect_lattice, lattice_poles, lower_similarity_dimension,
                   nonlattice_poles, similarity_dimension)


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue().encode()


def _ratios_from_config(cfg) -> RatioMultiset:
    if "ratios" in cfg:
        return RatioMultiset.from_pairs((float(r), int(m))
                                        for r, m in cfg["ratios"])
    params = GKCParams(int(cfg["n"]), float(cfg["r"]))
    return RatioMultiset.from_pairs(((params.ell, 2),
                                     (params.r, params.n - 1)))


def _poles_csv(dims: ComplexDimensionSet) -> bytes:
    rows = [(p.omega.real, p.omega.imag, p.residue.real, p.residue.imag,
             p.multiplicity) for p in dims.poles]
    return _csv_bytes(["re", "im", "res_re", "res_im", "mult"], rows)


def _poles_svg(dims: ComplexDimensionSet, width: int = 640,
               height: int = 640) -> bytes:
    re_min, re_max, im_max = dims.window
    span_re = max(re_max - re_min, 1e-9)
    pad = 0.15 * span_re
    x0, x1 = re_min - pad, re_max + pad
    y0, y1 = -im_max * 1.05, im_max * 1.05

    def sx(x):
        return (x - x0) / (x1 - x0) * width

    def sy(y):
        return height - (y - y0) / (y1 - y0) * height

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<line x1="{sx(x0):.2f}" y1="{sy(0):.2f}" x2="{sx(x1):.2f}" '
             f'y2="{sy(0):.2f}" stroke="#999" stroke-width="1"/>']
    for p in dims.poles:
        parts.append(f'<circle cx="{sx(p.omega.real):.2f}" '
                     f'cy="{sy(p.omega.imag):.2f}" r="3" fill="#1f4e9c"/>')
    parts.append("</svg>")
    return "\n".join(parts).encode()


def _locate_poles(ratios: RatioMultiset, im_max: float,
                  max_denominator: int = 64) -> ComplexDimensionSet:
    lattice = detect_lattice(ratios, max_denominator)
    if lattice is not None:
        return lattice_poles(lattice, im_max)
    poly = DirichletPoly(ratios)
    d_up = similarity_dimension(ratios)
    d_lo = lower_similarity_dimension(ratios)
    return nonlattice_poles(poly, (d_lo, d_up), im_max)


# ---------------------------------------------------------------------------
# commands; each returns {filename: bytes} plus a checks list


def cmd_dims(cfg):
    ratios = _ratios_from_config(cfg)
    d_up = similarity_dimension(ratios)
    d_lo = lower_similarity_dimension(ratios)
    lattice = detect_lattice(ratios, int(cfg.get("max_denominator", 64)))
    doc = {
        "similarity_dimension": d_up,
        "lower_similarity_dimension": d_lo,
        "lattice": None if lattice is None else {
            "generator": lattice.generator,
            "exponents": [list(e) for e in lattice.exponents],
        },
        "ratios": [[r, m] for r, m in ratios.entries],
    }
    files = {
        "dims.json": (json.dumps(doc, indent=2, sort_keys=True) + "\n"
                      ).encode(),
        "dims.csv": _csv_bytes(
            ["quantity", "value"],
            [("similarity_dimension", d_up),
             ("lower_similarity_dimension", d_lo),
             ("lattice", "yes" if lattice else "no")]),
    }
    return files, [{"name": "moran_root", "passed": True,
                    "detail": f"D={d_up:.12g}"}]


def cmd_poles(cfg):
    ratios = _ratios_from_config(cfg)
    dims = _locate_poles(ratios, float(cfg.get("im_max", 60.0)),
                         int(cfg.get("max_denominator", 64)))
    files = {
        "poles.csv": _poles_csv(dims),
        "poles.svg": _poles_svg(dims),
        "poles.json": (dims.to_json() + "\n").encode(),
    }
    verdict = "lattice" if dims.lattice is not None else "nonlattice"
    return files, [{"name": "pole_search", "passed": True,
                    "detail": f"{len(dims.poles)} poles, {verdict}"}]


def _compute_tube(cfg):
    params = GKCParams(int(cfg["n"]), float(cfg["r"]))
    level = int(cfg.get("level", 5))
    h = float(cfg.get("h", 1e-3))
    region = snowflake(params, level)
    sector = sector_region(region, int(cfg.get("sector", 0)))
    fld = distance_field(region.boundary, sector, h,
                         meta={"level": level, "n": params.n, "r": params.r})
    t_min = float(cfg.get("t_min", max(10 * h, 1e-3)))
    t_max = float(cfg.get("t_max", 0.3))
    per_decade = int(cfg.get("points_per_decade", 48))
    ts = geometric_grid(t_min, t_max, per_decade)
    tube = tube_function(fld, ts)
    return params, level, fld, tube


def cmd_tube(cfg):
    params, level, fld, tube = _compute_tube(cfg)
    h = fld.h
    sfe_ts = np.geomspace(float(cfg.get("sfe_t_min", max(0.01, 5 * h))),
                          float(cfg.get("sfe_t_max", 0.05)),
                          int(cfg.get("sfe_points", 9)))
    report = verify_gkf_sfe(params, level, sfe_ts, h, fld=fld)
    window = (float(cfg.get("fit_t_min", tube.ts[0])),
              float(cfg.get("fit_t_max", tube.ts[-1])))
    d_est, c_est = minkowski_fit(tube, window)
    doc = {
        "sfe_passed": report.passed,
        "sfe_rho": [float(x) for x in report.rho],
        "sfe_bound": [float(x) for x in report.bound],
        "sfe_budget": [float(x) for x in report.budget],
        "prefractal_gap": report.gap,
        "sector_area": report.sector_area,
        "minkowski_dimension_fit": d_est,
        "minkowski_prefactor": c_est,
    }
    files = {
        "tube.csv": tube.to_csv().encode(),
        "tube_meta.json": (tube.meta_json() + "\n").encode(),
        "sfe_report.json": (json.dumps(doc, indent=2, sort_keys=True)
                            + "\n").encode(),
    }
    checks = [{"name": "sfe_residual", "passed": bool(report.passed),
               "detail": f"max rho {float(np.max(report.rho)):.3e}"},
              {"name": "minkowski_fit", "passed": True,
               "detail": f"D_est={d_est:.6g}"}]
    return files, checks


def cmd_heat(cfg):
    params = GKCParams(int(cfg["n"]), float(cfg["r"]))
    level = int(cfg.get("level", 4))
    h = float(cfg.get("h", 2e-3))
    diffusivity = float(cfg.get("diffusivity", 1.0))
    t_min = float(cfg.get("t_min", 3e-4))
    t_max = float(cfg.get("t_max", 3e-3))
    ts = geometric_grid(t_min, t_max, int(cfg.get("points_per_decade", 24)))
    region = snowflake(params, level)
    problem = HeatProblem(region=region.boundary)
    # diffusivity C rescales time: E_C(t) = E_1(C t)
    content = solve_heat_content(problem, h, diffusivity * ts)
    content = SampledFunction(ts, content.vals,
                              meta={**content.meta,
                                    "diffusivity": diffusivity})
    exponent = heat_exponent_fit(content, (ts[0], ts[-1]))
    checks = [{"name": "exponent_fit", "passed": True,
               "detail": f"p={exponent:.4f}"}]
    files = {
        "heat.csv": content.to_csv().encode(),
        "heat_meta.json": (content.meta_json() + "\n").encode(),
    }
    if cfg.get("remainder", False):
        rem = decomposition_remainder(params, level, diffusivity * ts, h)
        files["remainder.csv"] = rem.to_csv().encode()
        checks.append({"name": "decomposition_remainder", "passed": True,
                       "detail":
                       f"max|R|/t={rem.meta['linear_bound_fit']:.4g}"})
    if cfg.get("scaling_lambda"):
        lam = float(cfg["scaling_lambda"])
        rep = verify_heat_scaling(problem, lam, diffusivity * ts, h)
        checks.append({"name": "heat_scaling", "passed": bool(rep.passed),
                       "detail": f"max rel dev {rep.max_rel_dev:.4g}"})
    doc = {"exponent_fit": exponent,
           "checks": checks}
    files["heat_report.json"] = (json.dumps(doc, indent=2, sort_keys=True)
                                 + "\n").encode()
    return files, checks


def cmd_explicit(cfg):
    source = cfg.get("source", "tube")
    params = GKCParams(int(cfg["n"]), float(cfg["r"]))
    k = int(cfg.get("k", 2))
    im_max = float(cfg.get("im_max", 80.0))
    cutoffs = tuple(float(c) for c in cfg.get("cutoffs",
                                              (10, 20, 40, 80)))
    cutoffs = tuple(c for c in cutoffs if c <= im_max) or (im_max,)
    ratios = _ratios_from_config({"n": params.n, "r": params.r})
    if source == "tube":
        alpha, beta = 1.0, 2.0
        _, level, fld, tube = _compute_tube(cfg)
        norm = tube.transform_vals(lambda t, v: v / t ** 2)
        ell, r, n = params.ell, params.r, params.n
        vv = np.interp
        rem_vals = (tube.vals
                    - 2 * ell ** 2 * vv(tube.ts / ell, tube.ts, tube.vals)
                    - (n - 1) * r ** 2 * vv(tube.ts / r, tube.ts, tube.vals))
        sel = tube.ts <= tube.ts[-1] * min(ell, r)
        remainder = SampledFunction(tube.ts[sel],
                                    rem_vals[sel] / tube.ts[sel] ** 2)
        area = fld.region_area
        direct_raw = tube
    else:
        alpha, beta = 2.0, 2.0
        level = int(cfg.get("level", 4))
        h = float(cfg.get("h", 2e-3))
        region = snowflake(params, level)
        ts = geometric_grid(float(cfg.get("t_min", 25 * h * h * 1.05)),
                            float(cfg.get("t_max", 3e-3)),
                            int(cfg.get("points_per_decade", 24)))
        content = solve_heat_content(HeatProblem(region=region.boundary),
                                     h, ts)
        norm = content.transform_vals(lambda t, v: v / t)
        rem = decomposition_remainder(params, level, ts, h)
        remainder = rem.transform_vals(lambda t, v: v / t)
        area = abs(region.area)
        direct_raw = content
    # default truncation: largest t with data below 90% of saturation
    delta = cfg.get("delta")
    if delta is None:
        below = direct_raw.ts[direct_raw.vals <= 0.9 * area]
        delta = float(below[-1]) if len(below) else float(direct_raw.ts[-1])
    lam_min = float(np.min(ratios.ratios)) ** alpha
    delta = min(delta, float(norm.ts[-1]) * lam_min * 0.999)
    dims = _locate_poles(ratios, im_max)
    residues = [sfe_zeta_residue(ratios, norm, remainder, p.omega, delta,
                                 alpha=alpha)
                for p in dims.poles]
    built = build_terms(dims, residues, beta=beta, alpha=alpha, k=k)
    terms = list(built.terms)
    extra = remainder_term(ratios, remainder, beta=beta, alpha=alpha, k=k)
    if extra is not None:
        terms.append(extra)
    t_grid = geometric_grid(float(cfg.get("eval_t_min", norm.ts[0] * 5)),
                            float(cfg.get("eval_t_max", delta * 0.8)), 24)
    series = evaluate_sum(terms, t_grid, im_cutoffs=cutoffs)
    direct = antiderivative(direct_raw, k)
    expected = beta / alpha - 0.0 + k  # remainder order sigma0 = 0
    comp = compare_explicit(
        SampledFunction(direct.ts, direct.vals), series,
        expected_remainder_exp=expected - 0.05)
    term_rows = [(tm.omega.real, tm.omega.imag, tm.coeff.real, tm.coeff.imag,
                  tm.exponent.real, tm.exponent.imag) for tm in terms]
    series_rows = [(float(t),) + tuple(float(sv[i])
                                       for sv in series.sums)
                   for i, t in enumerate(series.t_grid)]
    doc = {
        "k": k, "alpha": alpha, "beta": beta, "delta": delta,
        "poles": len(dims.poles), "skipped_non_simple": len(built.skipped),
        "max_rel_dev": comp.max_rel_dev,
        "fitted_slope": comp.fitted_slope,
        "at_floor": comp.at_floor,
        "imag_leakage": list(series.imag_leakage),
    }
    files = {
        "terms.csv": _csv_bytes(
            ["omega_re", "omega_im", "coeff_re", "coeff_im",
             "exp_re", "exp_im"], term_rows),
        "series.csv": _csv_bytes(
            ["t"] + [f"sum_T{c:g}" for c in series.im_cutoffs], series_rows),
        "explicit_report.json": (json.dumps(doc, indent=2, sort_keys=True)
                                 + "\n").encode(),
    }
    checks = [{"name": "explicit_formula",
               "passed": bool(comp.passed),
               "detail": f"max rel dev {comp.max_rel_dev:.3e}"}]
    return files, checks


def cmd_render(cfg):
    params = GKCParams(int(cfg["n"]), float(cfg["r"]))
    level = int(cfg.get("level", 4))
    kind = cfg.get("kind", "snowflake")
    if kind == "curve":
        verts = prefractal(params, level).vertices
        closed = False
    else:
        region = snowflake(params, level)
        verts = np.vstack([region.boundary, region.boundary[:1]])
        closed = True
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    width = int(cfg.get("width", 800))
    span = max(hi[0] - lo[0], hi[1] - lo[1])
    height = int(width * (hi[1] - lo[1]) / max(hi[0] - lo[0], 1e-9))
    scale = (width * 0.94) / span
    pts = (verts - lo) * scale + 0.03 * width
    pts[:, 1] = height - pts[:, 1] + 0.0
    path = polyline_to_svg_path(pts)
    svg = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}"><path d="{path}{" Z" if closed else ""}" '
           'fill="none" stroke="#123" stroke-width="1"/></svg>')
    files = {
        "render.svg": svg.encode(),
        "vertices.csv": _csv_bytes(["x", "y"],
                                   [(float(x), float(y)) for x, y in verts]),
    }
    return files, [{"name": "render", "passed": True,
                    "detail": f"{len(verts)} vertices"}]


COMMANDS = {
    "dims": cmd_dims,
    "poles": cmd_poles,
    "tube": cmd_tube,
    "heat": cmd_heat,
    "explicit": cmd_explicit,
    "render": cmd_render,
}

#: commands worth caching (heavy numerical stages)
CACHED_COMMANDS = {"tube", "heat", "explicit"}


def _parse_override(text: str):
    if "=" not in text:
        raise SystemExit(f"override '{text}' is not key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def run_command(command: str, config: dict, out_dir: Path,
                config_path: Path | None = None) -> Path:
    """Execute one command, write outputs + manifest, return the out dir."""
    started = time.time()
    key = config_hash(command, config)
    cache = ResultCache()
    from_cache = False
    files = None
    checks = []
    if command in CACHED_COMMANDS:
        cached = cache.load_all(key)
        if cached is not None:
            files = {k: v for k, v in cached.items()
                     if k != "checks.json"}
            checks = json.loads(cached.get("checks.json", b"[]"))
            from_cache = True
    if files is None:
        files, checks = COMMANDS[command](config)
        if command in CACHED_COMMANDS:
            cache.store(key, {**files,
                              "checks.json": json.dumps(checks).encode()})
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, blob in files.items():
        tmp = out_dir / (name + ".tmp")
        tmp.write_bytes(blob)
        tmp.replace(out_dir / name)
    manifest = {
        "command": command,
        "config": config,
        "config_hash": key,
        "version": __version__,
        "inputs": ({str(config_path): sha256_file(config_path)}
                   if config_path and config_path.exists() else {}),
        "outputs": {name: sha256_file(out_dir / name) for name in files},
        "from_cache": from_cache,
        "timing_s": round(time.time() - started, 6),
        "checks": checks,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out_dir


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fractal-dims",
        description="dimensions, complex dimensions, tube volumes, and "
                    "heat content of self-similar fractals")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON config document")
    parser.add_argument("--out", type=Path, default=None,
                        help="output directory")
    parser.add_argument("--set", action="append", default=[],
                        metavar="KEY=VALUE", dest="overrides",
                        help="override a config value (JSON-parsed)")
    args = parser.parse_args(argv)
    config = {}
    if args.config is not None:
        config = json.loads(args.config.read_text())
    for item in args.overrides:
        key, value = _parse_override(item)
        config[key] = value
    out = args.out or Path("runs") / (
        args.command + "-" + config_hash(args.command, config)[:8])
    run_command(args.command, config, out, config_path=args.config)
    manifest = json.loads((out / "manifest.json").read_text())
    for check in manifest["checks"]:
        mark = "PASS" if check["passed"] else "FAIL"
        print(f"[{mark}] {check['name']}: {check['detail']}")
    print(f"outputs in {out}")
    return 0 if all(c["passed"] for c in manifest["checks"]) else 1


if __name__ == "__main__":
    sys.exit(main())
