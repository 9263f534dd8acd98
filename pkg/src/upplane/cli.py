"""Command-line front end: ``upplane <command> [options]``.

Exit codes are 0 on success, 1 on data or runtime failures and 2 on usage
errors. Option values resolve as command-line flag, then the JSON config
file (flat keys, optionally overridden by a section named after the
command), then the built-in default.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
import scipy

from . import __version__, bounds, gaussianlab, imageval, svgplot
from .bounds import DivergenceKind, PlaneContext, UpPoint
from .errors import DeskScale, DomainError, UpPlaneError
from .estimators import KdeConfig, KnnConfig, hellinger_from_renyi_half, kde_renyi_half, knn_entropy
from .numstats import entropy_power, gaussian_entropy, sample_covariance
from .sampleio import read_samples

log = logging.getLogger("upplane")

ENV_OUT_DIR = "UPPLANE_OUT_DIR"
DEFAULT_OUT_DIR = "upplane-out"
MAX_DESK_DIM = 8
VERIFY_TOL = 1e-3

GLOBAL_DEFAULTS = {"seed": 0, "out_dir": None, "divergence": "renyi-half", "no_timestamp": False}


class UsageError(UpPlaneError):
    """Invalid combination of arguments; maps to exit code 2."""


@dataclass
class RunConfig:
    command: str
    seed: int
    out_dir: Path
    divergence: DivergenceKind
    timestamp: bool
    params: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Run metadata written into every JSON output (no wall-clock fields)."""
        return {
            "command": self.command,
            "seed": self.seed,
            "divergence": self.divergence.value,
            "params": {k: _jsonable(v) for k, v in sorted(self.params.items())},
            "versions": {"upplane": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        }


# --------------------------------------------------------------------------
# output helpers


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, np.integer)):
        return _jsonable(v.item())
    if isinstance(v, Path):
        return str(v)
    return v


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    path.write_text(buf.getvalue())


def _timestamp(cfg: RunConfig) -> Optional[str]:
    if not cfg.timestamp:
        return None
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


# --------------------------------------------------------------------------
# argument parsing


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


class _Options:
    """Records defaults per command so the config file can slot in between."""

    def __init__(self):
        self.defaults: dict[str, dict[str, Any]] = {}

    def add(self, parser, command: str, *flags, default=None, **kw):
        dest = kw.pop("dest", None) or flags[0].lstrip("-").replace("-", "_")
        self.defaults.setdefault(command, {})[dest] = default
        if default is not None and "help" in kw:
            kw["help"] += f" (default: {default})"
        parser.add_argument(*flags, dest=dest, default=argparse.SUPPRESS, **kw)


def _global_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default: 0)")
    g.add_argument("--out-dir", dest="out_dir", default=argparse.SUPPRESS,
                   help=f"output directory (default: ${ENV_OUT_DIR} or ./{DEFAULT_OUT_DIR})")
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    g.add_argument("--divergence", choices=[k.value for k in DivergenceKind], default=argparse.SUPPRESS,
                   help="perception axis (default: renyi-half)")
    g.add_argument("--no-timestamp", dest="no_timestamp", action="store_true", default=argparse.SUPPRESS,
                   help="omit the generation timestamp from SVG output")
    g.add_argument("-v", "--verbose", action="store_true", default=False, help="log progress to stderr")
    return p


def build_parser() -> tuple[argparse.ArgumentParser, _Options]:
    opts = _Options()
    parent = _global_parent()
    parser = argparse.ArgumentParser(prog="upplane", parents=[parent],
                                     description="Uncertainty-perception bounds, verification and evaluation.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("bounds", parents=[parent], help="export eta curves and the UP plane")
    opts.add(p, "bounds", "--dims", type=_int_list, default=[1], help="dimensions, comma separated")
    opts.add(p, "bounds", "--p-min", type=float, default=0.0, help="smallest perception value")
    opts.add(p, "bounds", "--p-max", type=float, default=5.0, help="largest perception value")
    opts.add(p, "bounds", "--num", type=int, default=101, help="grid points")
    opts.add(p, "bounds", "--n-xy", type=float, default=1.0, help="inherent uncertainty N(X|Y)")
    opts.add(p, "bounds", "--n-xgy", type=float, help="Gaussian envelope N(X_G|Y) (default: n-xy)")

    p = sub.add_parser("verify-gaussian", parents=[parent],
                       help="solve the Gaussian UP problem numerically and compare with eta")
    opts.add(p, "verify-gaussian", "--dims", type=_int_list, default=[1, 2, 4], help="dimensions")
    opts.add(p, "verify-gaussian", "--p-grid", type=_float_list,
             default=[0.0, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0], help="perception values")
    opts.add(p, "verify-gaussian", "--num-seeds", type=int, default=1,
             help="random problems per dimension (seeds seed, seed+1, ...)")

    p = sub.add_parser("verify-example1", parents=[parent],
                       help="compare the scalar denoising closed form with a grid search")
    opts.add(p, "verify-example1", "--p-grid", type=_float_list, default=[0.0, 0.1, 0.5, 1.0, 2.0, 5.0],
             help="perception values")
    opts.add(p, "verify-example1", "--sigma2", type=_float_list, default=[0.25, 1.0, 4.0],
             help="noise variances")
    opts.add(p, "verify-example1", "--grid", type=int, default=300_000, help="oracle grid size")

    p = sub.add_parser("entropy", parents=[parent],
                       help="kNN entropy of a sample file, or a Gaussian self-test without one")
    p.add_argument("samples", nargs="?", help="sample file (.f32 with sidecar, or .csv)")
    opts.add(p, "entropy", "--k", type=int, default=3, help="neighbour order")
    opts.add(p, "entropy", "--dim", type=int, default=2, help="self-test dimension")
    opts.add(p, "entropy", "--n", type=int, default=10_000, help="self-test sample count")

    p = sub.add_parser("divergence", parents=[parent],
                       help="KDE divergence between two sample files, or a Gaussian self-test")
    p.add_argument("p_samples", nargs="?", help="samples from p")
    p.add_argument("q_samples", nargs="?", help="samples from q")
    opts.add(p, "divergence", "--bandwidth", default="silverman", help="silverman, scott or a number")
    opts.add(p, "divergence", "--mu", type=float, default=1.0, help="self-test mean shift")
    opts.add(p, "divergence", "--n", type=int, default=10_000, help="self-test sample count")

    p = sub.add_parser("evaluate", parents=[parent],
                       help="place restoration algorithms on the UP plane")
    p.add_argument("manifests", nargs="+", help="algorithm directories or manifest.json files")
    opts.add(p, "evaluate", "--patch-size", type=int, default=imageval.DEFAULT_PATCH, help="patch side")
    opts.add(p, "evaluate", "--stride", type=int, default=imageval.DEFAULT_STRIDE, help="patch stride")
    opts.add(p, "evaluate", "--ridge", type=float, default=imageval.DEFAULT_RIDGE, help="covariance ridge")
    opts.add(p, "evaluate", "--bandwidth", default="silverman", help="KDE bandwidth rule or value")
    opts.add(p, "evaluate", "--n-xy", dest="inherent_uncertainty", type=float,
             help="inherent uncertainty used to classify points")
    opts.add(p, "evaluate", "--n-xgy", dest="gaussian_envelope", type=float,
             help="Gaussian envelope used to classify points (default: n-xy)")
    opts.add(p, "evaluate", "--tolerance", type=float, default=bounds.DEFAULT_REGION_TOL,
             help="relative region tolerance")

    p = sub.add_parser("make-fixture", parents=[parent],
                       help="write the synthetic posterior-mean / posterior-sample dataset")
    p.add_argument("dest", help="directory to create")
    opts.add(p, "make-fixture", "--images", type=int, default=64, help="image count")
    opts.add(p, "make-fixture", "--size", type=int, default=32, help="image side")
    opts.add(p, "make-fixture", "--sigma-x", type=float, default=0.1, help="pixel prior std")
    opts.add(p, "make-fixture", "--snr-ratio", type=float, default=0.01,
             help="sigma_x^2 / (sigma_x^2 + sigma_w^2)")
    return parser, opts


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except ValueError as exc:
        raise UsageError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {p} must hold a JSON object")
    return data


def resolve(args: argparse.Namespace, opts: _Options) -> RunConfig:
    """Merge defaults, config file and flags into a :class:`RunConfig`."""
    given = vars(args)
    command = given["command"]
    file_cfg = _load_config(given.get("config"))
    section = file_cfg.get(command, {})
    if not isinstance(section, dict):
        raise UsageError(f"config section {command!r} must be an object")
    merged: dict[str, Any] = dict(GLOBAL_DEFAULTS)
    merged.update(opts.defaults.get(command, {}))
    known = set(merged)
    for layer in (file_cfg, section):
        merged.update({k.replace("-", "_"): v for k, v in layer.items()
                       if k.replace("-", "_") in known})
    merged.update({k: v for k, v in given.items() if k in known})
    out_dir = merged.pop("out_dir") or os.environ.get(ENV_OUT_DIR) or DEFAULT_OUT_DIR
    seed = merged.pop("seed")
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise UsageError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    try:
        divergence = DivergenceKind(merged.pop("divergence"))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    timestamp = not merged.pop("no_timestamp")
    for k in ("samples", "p_samples", "q_samples", "manifests", "dest"):
        if k in given:
            merged[k] = given[k]
    return RunConfig(command, seed, Path(out_dir), divergence, timestamp, merged)


def _prepare_out_dir(cfg: RunConfig) -> Path:
    try:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {cfg.out_dir}: {exc}") from exc
    return cfg.out_dir


def _bandwidth(value) -> KdeConfig:
    if isinstance(value, (int, float)):
        return KdeConfig(bandwidth=float(value))
    try:
        return KdeConfig(bandwidth=float(value))
    except ValueError:
        return KdeConfig(bandwidth=str(value))


# --------------------------------------------------------------------------
# commands


def _plane_curve(ctx: PlaneContext, grid: Sequence[float], label: str = "") -> svgplot.PlaneCurve:
    rows = bounds.curve_rows(ctx, grid)
    return svgplot.PlaneCurve([r[0] for r in rows], [r[2] for r in rows], [r[3] for r in rows], label)


def cmd_bounds(cfg: RunConfig) -> int:
    p = cfg.params
    try:
        grid = bounds.linear_grid(p["p_min"], p["p_max"], p["num"])
        if cfg.divergence is DivergenceKind.HELLINGER and p["p_max"] > 1:
            raise DomainError("Hellinger perception grid must lie in [0, 1]")
        n_xgy = p["n_xgy"] if p["n_xgy"] is not None else p["n_xy"]
        contexts = [PlaneContext(d, p["n_xy"], n_xgy, cfg.divergence) for d in p["dims"]]
    except UpPlaneError as exc:
        raise UsageError(str(exc)) from exc
    out = _prepare_out_dir(cfg)
    (out / "bounds.csv").write_text(bounds.curves_csv(contexts, grid))
    x_label = f"perception P ({cfg.divergence.value})"
    for ctx in contexts:
        svg = svgplot.plane_svg([_plane_curve(ctx, grid, f"d={ctx.d}")], title=f"UP plane, d={ctx.d}",
                                x_label=x_label, timestamp=_timestamp(cfg))
        (out / f"plane_d{ctx.d}.svg").write_text(svg)
    _write_json(out / "bounds.json", {"run": cfg.echo(), "files": ["bounds.csv"] +
                                      [f"plane_d{c.d}.svg" for c in contexts]})
    print(f"wrote {len(contexts) * len(grid)} rows to {out / 'bounds.csv'}")
    return 0


def cmd_verify_gaussian(cfg: RunConfig) -> int:
    p = cfg.params
    if cfg.divergence is not DivergenceKind.RENYI_HALF:
        raise UsageError("verify-gaussian solves the Renyi-1/2 problem only")
    dims, grid = p["dims"], p["p_grid"]
    if any(d > MAX_DESK_DIM for d in dims):
        raise DeskScale(f"dimensions above {MAX_DESK_DIM} are not desk scale: {dims}")
    if any(d < 1 for d in dims) or any(P < 0 for P in grid) or p["num_seeds"] < 1:
        raise UsageError("dims and num-seeds must be positive and P values nonnegative")
    out = _prepare_out_dir(cfg)
    rows = []
    for d in dims:
        for seed in range(cfg.seed, cfg.seed + p["num_seeds"]):
            problem = gaussianlab.random_problem(np.random.default_rng(seed), d)
            rows.extend(gaussianlab.sweep(problem, grid, seed))
    (out / "verify_gaussian.csv").write_text(gaussianlab.sweep_csv(rows))
    failures = [r for r in rows if not (r.converged and r.rel_error <= VERIFY_TOL)]
    summary = {
        "run": cfg.echo(),
        "tolerance": VERIFY_TOL,
        "rows": len(rows),
        "failures": len(failures),
        "max_rel_error": max(r.rel_error for r in rows),
        "max_constraint_activity": max(r.constraint_activity for r in rows if r.P > 0) if any(
            r.P > 0 for r in rows) else 0.0,
        "passed": not failures,
    }
    _write_json(out / "verify_gaussian.json", summary)
    for r in failures:
        print(f"FAIL d={r.d} seed={r.seed} P={r.P}: rel error {r.rel_error:.3e}, converged={r.converged}",
              file=sys.stderr)
    print(f"{len(rows) - len(failures)}/{len(rows)} rows within {VERIFY_TOL:g}; "
          f"max relative error {summary['max_rel_error']:.2e}")
    return 0 if not failures else 1


def cmd_verify_example1(cfg: RunConfig) -> int:
    p = cfg.params
    if any(P < 0 for P in p["p_grid"]) or any(s <= 0 for s in p["sigma2"]) or p["grid"] < 1000:
        raise UsageError("need P >= 0, sigma2 > 0 and grid >= 1000")
    out = _prepare_out_dir(cfg)
    rows, failures = [], 0
    for s2 in p["sigma2"]:
        for P in p["p_grid"]:
            closed, sz = bounds.example1_up(P, s2)
            oracle = gaussianlab.example1_oracle(P, s2, p["grid"])
            err = abs(closed - oracle)
            ok = err <= 1e-4
            failures += not ok
            rows.append((s2, P, closed, oracle, sz, err, int(ok)))
    _write_csv(out / "example1.csv", ["sigma2", "P", "U_closed", "U_oracle", "sigma_z_star", "abs_error", "pass"],
               rows)
    _write_json(out / "example1.json", {"run": cfg.echo(), "rows": len(rows), "failures": failures,
                                        "passed": failures == 0})
    print(f"{len(rows) - failures}/{len(rows)} points within 1e-4 of the grid oracle")
    return 0 if failures == 0 else 1


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input file not found: {p}")
    return p


def cmd_entropy(cfg: RunConfig) -> int:
    p = cfg.params
    knn = KnnConfig(k=p["k"])
    if p.get("samples"):
        x = read_samples(_require_file(p["samples"]))
        source = {"file": p["samples"]}
    else:
        if p["dim"] < 1 or p["n"] < knn.k + 1:
            raise UsageError("self-test needs dim >= 1 and n > k")
        x = np.random.default_rng(cfg.seed).standard_normal((p["n"], p["dim"]))
        source = {"self_test": "standard normal", "n": p["n"], "d": p["dim"]}
    out = _prepare_out_dir(cfg)
    n, d = x.shape
    h = knn_entropy(x, knn)
    result = {"n": n, "d": d, "k": knn.k, "entropy": h, "entropy_power": entropy_power(h, d)}
    if n >= 2:
        cov = sample_covariance(x)
        result["gaussian_entropy"] = gaussian_entropy(cov)
        result["gaussian_entropy_power"] = cov.det_root()
    if "self_test" in source:
        result["closed_form_entropy"] = 0.5 * d * math.log(2 * math.pi * math.e)
    _write_json(out / "entropy.json", {"run": cfg.echo(), "source": source, "result": result})
    print(f"entropy {h:.6f} nats, entropy power {result['entropy_power']:.6g} (n={n}, d={d})")
    return 0


def cmd_divergence(cfg: RunConfig) -> int:
    p = cfg.params
    kde = _bandwidth(p["bandwidth"])
    if p.get("p_samples") or p.get("q_samples"):
        if not (p.get("p_samples") and p.get("q_samples")):
            raise UsageError("give both sample files or neither")
        x = read_samples(_require_file(p["p_samples"]))
        y = read_samples(_require_file(p["q_samples"]))
        source = {"p": p["p_samples"], "q": p["q_samples"]}
    else:
        rng = np.random.default_rng(cfg.seed)
        x = rng.standard_normal((p["n"], 1))
        y = p["mu"] + rng.standard_normal((p["n"], 1))
        source = {"self_test": "N(0,1) vs N(mu,1)", "mu": p["mu"], "n": p["n"],
                  "closed_form": p["mu"] ** 2 / 4.0}
    out = _prepare_out_dir(cfg)
    d_half = kde_renyi_half(x, y, kde)
    result = {"renyi_half": d_half, "hellinger": hellinger_from_renyi_half(d_half)}
    result["value"] = result["hellinger" if cfg.divergence is DivergenceKind.HELLINGER else "renyi_half"]
    _write_json(out / "divergence.json", {"run": cfg.echo(), "source": source, "result": result})
    print(f"{cfg.divergence.value} divergence {result['value']:.6g}")
    return 0


POOLING_NOTE = ("Perception and uncertainty use pooled (unconditional) patch statistics; "
                "the uncertainty is the Gaussian upper bound det(error covariance)^(1/d).")
NOISE_NOTE = ("Points within the tolerance band of the lower bound are estimator noise, "
              "not evidence of beating the bound.")


def cmd_evaluate(cfg: RunConfig) -> int:
    p = cfg.params
    try:
        config = imageval.EvalConfig(patch_size=p["patch_size"], stride=p["stride"], ridge=p["ridge"],
                                     kde=_bandwidth(p["bandwidth"]), divergence_kind=cfg.divergence)
    except UpPlaneError as exc:
        raise UsageError(str(exc)) from exc
    # validate every manifest before any heavy work
    for m in p["manifests"]:
        imageval.read_manifest(m)
    out = _prepare_out_dir(cfg)
    records = [imageval.evaluate_algorithm(m, config) for m in p["manifests"]]

    ctx = None
    if p["inherent_uncertainty"] is not None:
        env = p["gaussian_envelope"] if p["gaussian_envelope"] is not None else p["inherent_uncertainty"]
        d = config.patch_size ** 2 * _channels(p["manifests"][0])
        ctx = PlaneContext(d, p["inherent_uncertainty"], env, cfg.divergence)
    entries = []
    for r in records:
        e = r.as_dict()
        if ctx is not None:
            v = bounds.classify_point(UpPoint(r.perception, r.uncertainty, r.algorithm, cfg.divergence),
                                      ctx, p["tolerance"])
            e.update(region=v.region.value, lower=v.lower, upper=v.upper, slack=v.slack,
                     near_lower_bound=bool(v.region is bounds.Region.OPTIMAL and v.slack < 0))
        else:
            e.update(region="unclassified")
        entries.append(e)
    _write_json(out / "evaluation.json", {
        "run": cfg.echo(),
        "context": None if ctx is None else {"d": ctx.d, "n_xy": ctx.n_xy, "n_xgy": ctx.n_xgy,
                                             "tolerance": p["tolerance"]},
        "notes": [POOLING_NOTE, NOISE_NOTE],
        "records": entries,
    })
    cols = ["algorithm", "perception", "divergence_kind", "uncertainty", "mse", "psnr", "ssim",
            "n_images", "n_patches", "n_skipped", "region"]
    _write_csv(out / "evaluation.csv", cols, [[e[c] for c in cols] for e in entries])
    (out / "plane.svg").write_text(_evaluation_svg(entries, ctx, cfg))
    for e in entries:
        print(f"{e['algorithm']}: P={e['perception']:.4g} U={e['uncertainty']:.4g} "
              f"PSNR={e['psnr']:.2f} SSIM={e['ssim']:.4f} region={e['region']}")
    return 0


def _channels(manifest) -> int:
    first = imageval.read_manifest(manifest)[0]
    return imageval.load_image(first.truth).channels


def _evaluation_svg(entries, ctx: Optional[PlaneContext], cfg: RunConfig) -> str:
    finite = [e["perception"] for e in entries if math.isfinite(e["perception"])]
    if cfg.divergence is DivergenceKind.HELLINGER:
        p_max = 1.0
    else:
        # beyond this the band is within half a percent of its limit
        d = ctx.d if ctx else 1
        cap = d * math.log(1.0 / (4.0 * 0.005)) / 2.0
        p_max = max(1.0, min(max(finite, default=1.0) * 1.05, cap))
    grid = bounds.linear_grid(0.0, p_max, 201)
    n_xy = ctx.n_xy if ctx else min(e["uncertainty"] for e in entries)
    plot_ctx = ctx or PlaneContext(1, n_xy, n_xy, cfg.divergence)
    label = f"d={plot_ctx.d}" if ctx else "reference d=1 (no context given)"
    points = [svgplot.PlanePoint(e["perception"], e["uncertainty"], e["algorithm"],
                                 e["region"] if ctx else None) for e in entries]
    return svgplot.plane_svg([_plane_curve(plot_ctx, grid, label)], points, title="Evaluated algorithms",
                             x_label=f"perception P ({cfg.divergence.value})", timestamp=_timestamp(cfg))


def cmd_make_fixture(cfg: RunConfig) -> int:
    p = cfg.params
    info = imageval.make_gaussian_fixture(p["dest"], p["images"], p["size"], p["sigma_x"], p["snr_ratio"],
                                          cfg.seed)
    print(f"fixture in {info.root}: algorithms {', '.join(info.algorithms)}; "
          f"analytic N(X|Y) = {info.posterior_var:.6g}")
    return 0


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "bounds": cmd_bounds,
    "verify-gaussian": cmd_verify_gaussian,
    "verify-example1": cmd_verify_example1,
    "entropy": cmd_entropy,
    "divergence": cmd_divergence,
    "evaluate": cmd_evaluate,
    "make-fixture": cmd_make_fixture,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser, opts = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args, opts)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, DeskScale) as exc:
        print(f"upplane: usage error: {exc}", file=sys.stderr)
        return 2
    except (UpPlaneError, OSError, ValueError) as exc:
        print(f"upplane: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
