"""contmatch command line.

Subcommands: surface, match, cover, holder, verify, scaling, embed.
Every run writes a CSV or JSON report that embeds its full configuration
and the tool version, plus (unless --no-plot) a PNG figure next to it.
Identical configuration and seed produce byte-identical outputs.

Exit codes: 0 ok, 2 configuration error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from typing import List, Optional

import numpy as np

from . import __version__
from .errors import ConfigError, NumericalError
from .families import (
    SubspaceFamily,
    TabulatedFamily,
    default_grid,
    gabor_family,
    gaussian_pulse_family,
    load_tabulated,
    lot_family,
    square_pulse_family,
)
from .geometry import covering_profile, delta_constant, family_regularity, fit_regularity, holder_fit
from .lattice import Lattice, parse_lattice_spec
from .matching import SearchPlan, approximation_gap, match_compressed, match_direct, energy_surface
from .reporting import config_comments, plain, write_csv, write_json
from .signal import SampleGrid, load_signal, raised_cosine_pulse
from .sketch import make_sketch
from .verify import check_gap_bound_many, derive_seed, pairwise_distortion, scaling_experiment


# ---------------------------------------------------------------------------
# Argument handling


def _parse_pair(spec: str, flag: str) -> tuple:
    for sep in (":", ","):
        if sep in str(spec):
            lo, hi = str(spec).split(sep, 1)
            try:
                return float(lo), float(hi)
            except ValueError:
                break
    raise ConfigError(f"{flag} expects LO:HI, got {spec!r}")


def _parse_int_list(spec: str, flag: str) -> List[int]:
    try:
        return [int(p) for p in str(spec).split(",") if p != ""]
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated integers, got {spec!r}") from exc


def _parse_float_list(spec: str, flag: str) -> List[float]:
    try:
        return [float(p) for p in str(spec).split(",") if p != ""]
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated numbers, got {spec!r}") from exc


def _require(args, name: str, context: str):
    value = getattr(args, name.replace("-", "_"), None)
    if value is None:
        raise ConfigError(f"missing --{name} for {context}")
    return value


def _build_family(args):
    if args.family == "tabulated" or args.tabulated:
        path = _require(args, "tabulated", "a tabulated family")
        return load_tabulated(path)
    if args.family is None:
        raise ConfigError("missing --family")
    kind = args.family
    sigma = float(_require(args, "sigma", f"family {kind!r}"))
    lo, hi = _parse_pair(_require(args, "range", f"family {kind!r}"), "--range")
    count = int(args.grid_count)
    if args.t_range is not None:
        g_lo, g_hi = _parse_pair(args.t_range, "--t-range")
        grid = SampleGrid.over(g_lo, g_hi, count)
    else:
        grid = default_grid(kind, sigma, lo, hi, count)
    if kind == "gaussian":
        return gaussian_pulse_family(sigma, (lo, hi), grid)
    if kind == "square":
        return square_pulse_family(sigma, (lo, hi), grid)
    if kind == "gabor":
        w_lo, w_hi = _parse_pair(
            _require(args, "omega-range", "family 'gabor'"), "--omega-range"
        )
        return gabor_family(sigma, (lo, hi), (w_lo, w_hi), grid)
    if kind == "lot":
        k = int(_require(args, "k", "family 'lot'"))
        return lot_family(sigma, k, (lo, hi), grid)
    raise ConfigError(f"unknown family {kind!r}")


def _build_signal(args, family) -> np.ndarray:
    spec = args.signal
    if spec is None:
        spec = "raised-cosine" if getattr(family, "kind", "") == "gabor" else "atom"
    if isinstance(family, TabulatedFamily):
        if spec.startswith("atom"):
            idx = 0
            if ":" in spec:
                idx = int(spec.split(":", 1)[1])
            if not (0 <= idx < len(family.bases)):
                raise ConfigError(f"atom index {idx} out of range")
            return family.bases[idx][:, 0].copy()
        raise ConfigError("tabulated families accept --signal atom[:index] or a file path")
    if spec == "raised-cosine":
        return raised_cosine_pulse(family.ambient).values.copy()
    if spec.startswith("atom"):
        if ":" in spec:
            coords = _parse_float_list(spec.split(":", 1)[1], "--signal atom")
            theta = np.asarray(coords, dtype=float)
        else:
            theta = family.domain.midpoint
        return family.basis(theta)[:, 0].copy()
    if os.path.exists(spec):
        sig = load_signal(spec)
        if sig.grid.count != family.ambient.count:
            raise ConfigError(
                f"signal length {sig.grid.count} does not match family grid "
                f"{family.ambient.count}"
            )
        return sig.values.copy()
    raise ConfigError(f"bad --signal spec {spec!r} (not a builtin and not a file)")


def _resolve_lattice(args, family, default: str) -> Optional[Lattice]:
    if isinstance(family, TabulatedFamily):
        return None
    spec = args.lattice or default
    return Lattice.from_box(family.domain, parse_lattice_spec(spec))


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, int(args.threads))
    env = os.environ.get("CONTMATCH_THREADS")
    return max(1, int(env)) if env else 1


def _family_config(family) -> dict:
    if isinstance(family, TabulatedFamily):
        return {
            "kind": "tabulated",
            "name": family.name,
            "points": int(family.theta_grid.shape[0]),
            "ambient_dim": family.ambient_dim,
            "subspace_dim": family.subspace_dim,
        }
    return {
        "kind": family.kind,
        "params": plain(family.params),
        "grid": {
            "t_start": family.ambient.t_start,
            "spacing": family.ambient.spacing,
            "count": family.ambient.count,
        },
    }


def _run_config(args, family, extra: dict) -> dict:
    cfg = {
        "command": args.command,
        "family": _family_config(family),
        "format": args.format,
        "out": args.out,
        "threads": _threads(args),
        "version": __version__,
    }
    cfg.update(extra)
    return cfg


def _out_paths(args) -> tuple:
    out = args.out
    if out is None:
        out = f"{args.command}_report.{args.format}"
    stem, _ = os.path.splitext(out)
    return out, stem + ".png"


def _emit(args, config, columns, rows, json_payload, figure_fn=None):
    out, fig_path = _out_paths(args)
    directory = os.path.dirname(out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    if args.format == "json":
        write_json(out, {"config": config, "results": json_payload})
    else:
        write_csv(out, columns, rows, config_comments(__version__, config))
    if figure_fn is not None and not args.no_plot:
        figure_fn(fig_path)
    return out


def _timing(args, started: float):
    return (time.perf_counter() - started) if args.timing else None


# ---------------------------------------------------------------------------
# Commands


def cmd_surface(args) -> int:
    started = time.perf_counter()
    family = _build_family(args)
    if isinstance(family, TabulatedFamily):
        raise ConfigError("surface needs a parameterized family; use match for tabulated ones")
    h0 = _build_signal(args, family)
    lattice = _resolve_lattice(args, family, "128")
    threads = _threads(args)
    surfaces = [energy_surface(family, "direct", lattice, h0=h0, threads=threads)]
    markers = [(surfaces[0].argmin_theta(), "direct min")]
    config_extra = {"signal": args.signal or "default", "lattice": lattice.describe()}
    if args.m is not None:
        m = _parse_int_list(args.m, "--m")
        if len(m) != 1:
            raise ConfigError("surface takes a single --m")
        phi = make_sketch(m[0], family.ambient_dim, args.seed)
        y = phi.apply(h0)
        surfaces.append(
            energy_surface(family, "compressed", lattice, phi=phi, y=y, threads=threads)
        )
        markers.append((surfaces[1].argmin_theta(), "compressed min"))
        config_extra["sketch"] = {"rows": m[0], "seed": args.seed}
    config = _run_config(args, family, config_extra)

    pts = lattice.points()
    columns = [f"theta{d}" for d in range(lattice.dim)] + [s.kind for s in surfaces]
    flat = [s.values.reshape(-1) for s in surfaces]
    rows = [list(pts[i]) + [f[i] for f in flat] for i in range(pts.shape[0])]
    payload = {
        "axes": [a for a in lattice.axes],
        "surfaces": {s.kind: s.values for s in surfaces},
        "minimizers": {
            s.kind: {"theta": s.argmin_theta(), "objective": float(s.values.min())}
            for s in surfaces
        },
        "timing_s": _timing(args, started),
    }

    def fig(path):
        from .figures import surface_figure

        surface_figure(surfaces, markers, path)

    _emit(args, config, columns, rows, payload, fig)
    return 0


def cmd_match(args) -> int:
    started = time.perf_counter()
    family = _build_family(args)
    h0 = _build_signal(args, family)
    threads = _threads(args)
    resolution = parse_lattice_spec(args.lattice or "128")
    plan = SearchPlan(
        grid_resolution=resolution if len(resolution) > 1 else resolution[0],
        refinement_rounds=args.refine,
    )
    keep = not isinstance(family, TabulatedFamily)
    direct = match_direct(family, h0, plan, keep_surface=keep, threads=threads)
    results = {"direct": direct}
    gap = None
    if args.m is not None:
        m = _parse_int_list(args.m, "--m")
        if len(m) != 1:
            raise ConfigError("match takes a single --m")
        phi = make_sketch(m[0], family.ambient_dim if not isinstance(family, TabulatedFamily) else family.ambient_dim, args.seed)
        y = phi.apply(h0)
        compressed = match_compressed(family, phi, y, plan, threads=threads)
        results["compressed"] = compressed
        gap = approximation_gap(family, h0, direct.theta_star, compressed.theta_star)
    config = _run_config(
        args,
        family,
        {
            "signal": args.signal or "default",
            "plan": {
                "grid_resolution": list(resolution),
                "refinement_rounds": plan.refinement_rounds,
                "shrink_factor": plan.shrink_factor,
            },
            "sketch": None if args.m is None else {"rows": _parse_int_list(args.m, "--m")[0], "seed": args.seed},
        },
    )
    columns = ["kind"] + [f"theta{d}" for d in range(len(direct.theta_star))] + [
        "objective",
        "relative_error_sq",
        "raw_norm",
    ]
    rows = [
        ["direct"] + list(direct.theta_star) + [direct.objective, direct.relative_error_sq, direct.raw_norm]
    ]
    payload = {
        "direct": {
            "theta": direct.theta_star,
            "objective": direct.objective,
            "relative_error_sq": direct.relative_error_sq,
            "raw_norm": direct.raw_norm,
        },
        "timing_s": _timing(args, started),
    }
    if "compressed" in results:
        c = results["compressed"]
        rows.append(
            ["compressed"] + list(c.theta_star) + [c.objective, c.relative_error_sq, c.raw_norm]
        )
        payload["compressed"] = {
            "theta": c.theta_star,
            "objective": c.objective,
            "relative_error_sq": c.relative_error_sq,
            "raw_norm": c.raw_norm,
            "seed": args.seed,
        }
        payload["gap"] = gap

    def fig(path):
        if direct.surface is None:
            return
        from .figures import surface_figure

        markers = [(direct.theta_star, "direct min")]
        if "compressed" in results:
            markers.append((results["compressed"].theta_star, "compressed min"))
        surface_figure([direct.surface], markers, path)

    _emit(args, config, columns, rows, payload, fig)
    return 0


def _auto_probe(family) -> Lattice:
    """Sample-aligned probe lattice at full grid density (1-D shift families)."""
    d = family.ambient.spacing
    lo, hi = family.domain.lower[0], family.domain.upper[0]
    count = int(np.floor((hi - lo) / d + 1e-9)) + 1
    return Lattice((lo + d * np.arange(count),))


def cmd_cover(args) -> int:
    started = time.perf_counter()
    family = _build_family(args)
    epsilons = _parse_float_list(args.epsilon_list or "0.5,0.25,0.125", "--epsilon-list")
    if isinstance(family, TabulatedFamily):
        probe = None
    elif args.lattice:
        probe = Lattice.from_box(family.domain, parse_lattice_spec(args.lattice))
    elif family.shift_invariant and family.param_dim == 1:
        probe = _auto_probe(family)
    else:
        raise ConfigError("missing --lattice (probe resolution) for this family")
    counts = covering_profile(family, epsilons, probe)
    n0, alpha = fit_regularity(epsilons, counts)
    delta = delta_constant(n0, alpha)
    analytic = None
    if isinstance(family, SubspaceFamily) and family.kind in ("gaussian", "square", "gabor", "lot"):
        analytic = family_regularity(family)
    config = _run_config(
        args,
        family,
        {
            "epsilons": epsilons,
            "probe": None if probe is None else probe.describe(),
            "notes": list(analytic.notes) if analytic else [],
        },
    )
    columns = ["epsilon", "count", "analytic_bound"]
    rows = []
    for e, c in zip(epsilons, counts):
        bound = analytic.n0 * e ** (-analytic.alpha) if analytic else ""
        rows.append([e, c, bound])
    payload = {
        "epsilons": epsilons,
        "counts": counts,
        "fitted": {"n0": n0, "alpha": alpha, "delta": delta},
        "analytic": None
        if analytic is None
        else {
            "n0": analytic.n0,
            "alpha": analytic.alpha,
            "delta": analytic.delta,
            "notes": list(analytic.notes),
        },
        "timing_s": _timing(args, started),
    }

    def fig(path):
        from .figures import cover_figure

        bounds = None
        if analytic is not None:
            bounds = [analytic.n0 * e ** (-analytic.alpha) for e in epsilons]
        cover_figure(epsilons, counts, bounds, path)

    _emit(args, config, columns, rows, payload, fig)
    return 0


def cmd_holder(args) -> int:
    started = time.perf_counter()
    family = _build_family(args)
    if isinstance(family, TabulatedFamily):
        raise ConfigError("holder needs a parameterized family")
    span = float(np.min(family.domain.upper - family.domain.lower))
    max_sep = args.max_separation if args.max_separation is not None else 0.25 * span
    fits = holder_fit(family, args.pairs, max_sep, seed=args.seed)
    config = _run_config(
        args,
        family,
        {"pairs": args.pairs, "max_separation": max_sep, "seed": args.seed},
    )
    columns = [
        "coordinate",
        "rho",
        "beta",
        "slope",
        "n_pairs",
        "binding_separation",
        "binding_distance",
    ]
    fit_rows = [
        {
            "coordinate": f.coordinate,
            "rho": f.rho,
            "beta": f.beta,
            "slope": f.slope,
            "n_pairs": f.n_pairs,
            "binding_separation": f.binding_separation,
            "binding_distance": f.binding_distance,
        }
        for f in fits
    ]
    rows = [[r[c] for c in columns] for r in fit_rows]
    payload = {"fits": fit_rows, "timing_s": _timing(args, started)}

    def fig(path):
        from .figures import holder_figure

        holder_figure(fit_rows, path)

    _emit(args, config, columns, rows, payload, fig)
    return 0


def cmd_verify(args) -> int:
    started = time.perf_counter()
    family = _build_family(args)
    m_list = _parse_int_list(_require(args, "m", "verify"), "--m")
    if len(m_list) != 1:
        raise ConfigError("verify takes a single --m")
    m = m_list[0]
    if m < family.subspace_dim:
        raise ConfigError(
            f"--m {m} is below the subspace dimension {family.subspace_dim}"
        )
    h0 = _build_signal(args, family)
    lattice = _resolve_lattice(args, family, "64x64" if getattr(family, "param_dim", 1) == 2 else "64")
    threads = _threads(args)
    seeds = [derive_seed(args.seed, m, i) for i in range(args.trials)]
    phis = [make_sketch(m, family.ambient_dim, s) for s in seeds]
    reports = check_gap_bound_many(family, phis, h0, lattice, threads)
    config = _run_config(
        args,
        family,
        {
            "signal": args.signal or "default",
            "sketch": {"rows": m, "base_seed": args.seed, "trials": args.trials},
            "lattice": lattice.describe() if lattice else None,
        },
    )
    columns = ["trial", "seed", "delta1", "delta2", "bound", "sup_gap", "holds", "vacuous"]
    rows = []
    payload_rows = []
    for t, rep in enumerate(reports):
        rows.append(
            [
                t,
                rep.seed,
                rep.delta1,
                rep.delta2,
                "" if rep.bound is None else rep.bound,
                rep.sup_gap,
                "" if rep.holds is None else rep.holds,
                rep.vacuous,
            ]
        )
        payload_rows.append(
            {
                "trial": t,
                "seed": rep.seed,
                "delta1": rep.delta1,
                "delta2": rep.delta2,
                "bound": rep.bound,
                "sup_gap": rep.sup_gap,
                "sup_gap_theta": rep.sup_gap_theta,
                "holds": rep.holds,
                "vacuous": rep.vacuous,
            }
        )
    payload = {"rows": payload_rows, "timing_s": _timing(args, started)}

    def fig(path):
        from .figures import verify_figure

        verify_figure(seeds, [r.sup_gap for r in reports], [r.bound for r in reports], path)

    _emit(args, config, columns, rows, payload, fig)
    return 0


def cmd_scaling(args) -> int:
    started = time.perf_counter()
    family = _build_family(args)
    m_list = _parse_int_list(_require(args, "m", "scaling"), "--m")
    h0 = _build_signal(args, family)
    lattice = _resolve_lattice(args, family, "64x64" if getattr(family, "param_dim", 1) == 2 else "64")
    result = scaling_experiment(
        family, h0, m_list, args.trials, args.seed, lattice, threads=_threads(args)
    )
    config = _run_config(
        args,
        family,
        {
            "signal": args.signal or "default",
            "m_list": m_list,
            "trials": args.trials,
            "base_seed": args.seed,
            "lattice": lattice.describe() if lattice else None,
        },
    )
    columns = ["m", "trials", "median_gap", "median_sup_gap", "q10_sup_gap", "q90_sup_gap", "seeds"]
    rows = []
    for row in result.rows:
        trial_seeds = [t.seed for t in result.trials if t.m == row.m]
        rows.append(
            [
                row.m,
                row.trials,
                row.median_gap,
                row.median_sup_gap,
                row.quantiles[0],
                row.quantiles[1],
                ";".join(str(s) for s in trial_seeds),
            ]
        )
    payload = {
        "rows": [
            {
                "m": r.m,
                "trials": r.trials,
                "median_gap": r.median_gap,
                "median_sup_gap": r.median_sup_gap,
                "q10_sup_gap": r.quantiles[0],
                "q90_sup_gap": r.quantiles[1],
            }
            for r in result.rows
        ],
        "trials": [
            {
                "m": t.m,
                "trial": t.trial,
                "seed": t.seed,
                "gap": t.gap,
                "sup_gap": t.sup_gap,
                "theta_hat": t.theta_hat,
            }
            for t in result.trials
        ],
        "theta_bar": result.theta_bar,
        "direct_error_sq": result.direct_error_sq,
        "timing_s": _timing(args, started),
    }

    def fig(path):
        from .figures import scaling_figure

        scaling_figure(
            [r.m for r in result.rows],
            [r.median_sup_gap for r in result.rows],
            [r.quantiles[0] for r in result.rows],
            [r.quantiles[1] for r in result.rows],
            path,
        )

    _emit(args, config, columns, rows, payload, fig)
    return 0


def cmd_embed(args) -> int:
    started = time.perf_counter()
    family = _build_family(args)
    m_list = _parse_int_list(_require(args, "m", "embed"), "--m")
    records = []
    for m in m_list:
        for t in range(args.trials):
            seed = derive_seed(args.seed, m, t)
            phi = make_sketch(m, family.ambient_dim, seed)
            ratio = pairwise_distortion(family, phi, args.pairs, seed=seed)
            records.append({"m": m, "trial": t, "seed": seed, "max_ratio": ratio})
    config = _run_config(
        args,
        family,
        {"m_list": m_list, "trials": args.trials, "pairs": args.pairs, "base_seed": args.seed},
    )
    columns = ["m", "trial", "seed", "max_ratio"]
    rows = [[r[c] for c in columns] for r in records]
    payload = {"rows": records, "timing_s": _timing(args, started)}

    def fig(path):
        from .figures import embed_figure

        embed_figure(records, path)

    _emit(args, config, columns, rows, payload, fig)
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contmatch",
        description="Subspace matching over continuously parameterized collections, "
        "directly and from Gaussian random sketches.",
    )
    parser.add_argument("--version", action="version", version=f"contmatch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "surface": cmd_surface,
        "match": cmd_match,
        "cover": cmd_cover,
        "holder": cmd_holder,
        "verify": cmd_verify,
        "scaling": cmd_scaling,
        "embed": cmd_embed,
    }
    for name, fn in specs.items():
        p = sub.add_parser(name)
        p.set_defaults(fn=fn)
        p.add_argument("--family", choices=["gaussian", "square", "gabor", "lot", "tabulated"])
        p.add_argument("--sigma", type=float, help="pulse width")
        p.add_argument("--range", help="shift range LO:HI")
        p.add_argument("--omega-range", dest="omega_range", help="modulation band LO:HI")
        p.add_argument("--k", type=int, help="subspace dimension (lot family)")
        p.add_argument("--tabulated", help="path to a tabulated family JSON")
        p.add_argument("--grid-count", dest="grid_count", type=int, default=2048)
        p.add_argument("--t-range", dest="t_range", help="ambient window LO:HI")
        p.add_argument("--signal", help="raised-cosine | atom[:coords] | file path")
        p.add_argument("--m", help="sketch rows (comma list where applicable)")
        p.add_argument("--rows", dest="m", help="alias for --m")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default={"scaling": 25, "embed": 1}.get(name, 20))
        p.add_argument("--lattice", help="evaluation lattice, e.g. 128 or 64x64")
        p.add_argument("--epsilon-list", dest="epsilon_list", help="e.g. 0.5,0.25,0.125")
        p.add_argument("--pairs", type=int, default=200)
        p.add_argument("--max-separation", dest="max_separation", type=float)
        p.add_argument("--refine", type=int, default=2, help="refinement rounds")
        p.add_argument("--out", help="output path (default <command>_report.<format>)")
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        p.add_argument("--threads", type=int, help="parallelism cap (env CONTMATCH_THREADS)")
        p.add_argument("--no-plot", dest="no_plot", action="store_true")
        p.add_argument("--timing", action="store_true", help="include wall time in outputs")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"contmatch: configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"contmatch: numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
