"""Command-line workflow: extract | density | fit | select | test.

Exit codes: 0 success, 2 parse/configuration error, 3 numerical failure.
The worker-thread count for per-specimen and per-family fan-out comes
from the SVDSHAPE_WORKERS environment variable (default 1).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import io as sio
from .densities import IsotropicModel, disk_density_isotropic, disk_density_kotz_explicit, disk_density_gaussian_explicit
from .errors import ConfigError, ParseError, ShapeAnalysisError
from .generators import KotzParams
from .inference import (
    FAMILIES,
    ModelSpec,
    OptimizerConfig,
    fit_mle,
    grade_evidence,
    lrt_equal_mean_shape,
)
from .polyalg import SeriesControl
from .shape import ShapeDecomposition, ShapeSample, WhitenConfig, svd_shape

_CLI_FAMILIES = {
    "gaussian": "gaussian",
    "kotz-t2": "kotz_t2",
    "kotz-t3": "kotz_t3",
}


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("SVDSHAPE_WORKERS", "1")))
    except ValueError:
        return 1


def _series_control(args) -> SeriesControl:
    try:
        return SeriesControl(max_degree=args.max_degree, tail_rel_tol=args.tail_tol)
    except ShapeAnalysisError as exc:
        raise ConfigError(str(exc)) from exc


def _load_theta(args, K: int):
    if args.theta is None:
        return WhitenConfig()
    cfg = WhitenConfig(sio.parse_theta(args.theta, K))
    cfg.root_inverse(K)  # validate SPD at parse time
    return cfg


def _extract_payload(args):
    ds = sio.parse_dataset(args.input)
    N, K = ds.dims
    cfg = _load_theta(args, K)
    ids = list(ds.specimens)

    def one(sid):
        try:
            return sid, svd_shape(ds.specimens[sid], cfg), None
        except ShapeAnalysisError as exc:
            return sid, None, str(exc)

    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, ids))
    else:
        results = [one(sid) for sid in ids]
    specimens = []
    errors = []
    for sid, sd, err in results:
        if err is not None:
            errors.append({"id": sid, "error": err})
            continue
        specimens.append(
            {
                "id": sid,
                "group": ds.groups[sid],
                "r": sd.r,
                "D": list(map(float, sd.D)),
                "W": list(map(float, sd.W)),
                "u": list(map(float, sd.u)),
                "flags": sd.flags,
            }
        )
    return {
        "kind": "shapes",
        "dims": {"N": N, "K": K},
        "specimens": specimens,
        "errors": errors,
    }


def cmd_extract(args) -> int:
    payload = _extract_payload(args)
    sio.write_report(payload, args.out, timestamp=not args.no_timestamp)
    return 0


def _sample_from_shapes_payload(payload) -> ShapeSample:
    dims = (payload["dims"]["N"], payload["dims"]["K"])
    shapes = []
    labels = []
    ids = []
    for spec in payload["specimens"]:
        shapes.append(
            ShapeDecomposition(
                D=np.asarray(spec["D"], dtype=float),
                r=float(spec["r"]),
                W=np.asarray(spec["W"], dtype=float),
                u=np.asarray(spec["u"], dtype=float),
                dims=dims,
                flags=dict(spec.get("flags", {})),
            )
        )
        labels.append(spec["group"])
        ids.append(spec["id"])
    return ShapeSample(shapes=tuple(shapes), dims=dims, labels=tuple(labels), ids=tuple(ids))


def _load_sample(args) -> ShapeSample:
    """Accept a landmark CSV or a previously extracted shapes JSON."""
    path = str(args.input)
    if path.endswith(".json"):
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read shapes file: {exc}", path=path) from exc
        if payload.get("kind") != "shapes":
            raise ParseError("not a shapes file (kind != 'shapes')", path=path)
        return _sample_from_shapes_payload(payload)
    payload = _extract_payload(args)
    if payload["errors"]:
        first = payload["errors"][0]
        raise ShapeAnalysisError(
            f"{len(payload['errors'])} specimens failed extraction, first: "
            f"{first['id']}: {first['error']}"
        )
    return _sample_from_shapes_payload(payload)


def _groups_of(sample: ShapeSample) -> list:
    seen = []
    for g in sample.labels:
        if g not in seen:
            seen.append(g)
    return seen or ["all"]


def _group_sample(sample: ShapeSample, name: str) -> ShapeSample:
    if name == "all" and not sample.labels:
        return sample
    sub = sample.subset(name)
    if len(sub) == 0:
        raise ConfigError(f"no specimens in group {name!r}")
    return sub


def _fit_groups(sample, families, groups, ctl, opt) -> dict:
    """{group: {family: FitReport}} with deterministic ordering."""
    jobs = [(g, f) for g in groups for f in families]

    def one(job):
        g, f = job
        spec = ModelSpec(f, sample.dims[0], sample.dims[1])
        return job, fit_mle(_group_sample(sample, g), spec, opt, ctl)

    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]
    out: dict = {g: {} for g in groups}
    for (g, f), rep in results:
        out[g][f] = rep
    return out


def cmd_fit(args) -> int:
    sample = _load_sample(args)
    ctl = _series_control(args)
    family = _CLI_FAMILIES[args.family]
    groups = args.group or _groups_of(sample)
    fits = _fit_groups(sample, [family], groups, ctl, OptimizerConfig())
    payload = {
        "kind": "fit",
        "family": family,
        "control": {"max_degree": ctl.max_degree, "tail_rel_tol": ctl.tail_rel_tol},
        "seed": args.seed,
        "groups": {g: fits[g][family].to_dict() for g in groups},
    }
    sio.write_report(payload, args.out, timestamp=not args.no_timestamp)
    return 0


def cmd_select(args) -> int:
    sample = _load_sample(args)
    ctl = _series_control(args)
    families = [_CLI_FAMILIES[f] for f in (args.family or list(_CLI_FAMILIES))]
    groups = args.group or _groups_of(sample)
    fits = _fit_groups(sample, families, groups, ctl, OptimizerConfig())
    out_groups = {}
    for g in groups:
        per = fits[g]
        ranking = sorted(families, key=lambda f: per[f].bic_star)
        pairs = []
        for i, fa in enumerate(families):
            for fb in families[i + 1 :]:
                ev = grade_evidence(per[fa].bic_star, per[fb].bic_star)
                pairs.append({"a": fa, "b": fb, "delta": ev.delta, "grade": ev.grade})
        out_groups[g] = {
            "fits": {f: per[f].to_dict() for f in families},
            "ranking": ranking,
            "best": ranking[0],
            "evidence": pairs,
        }
    payload = {
        "kind": "select",
        "families": families,
        "control": {"max_degree": ctl.max_degree, "tail_rel_tol": ctl.tail_rel_tol},
        "seed": args.seed,
        "groups": out_groups,
    }
    sio.write_report(payload, args.out, timestamp=not args.no_timestamp)
    return 0


def cmd_test(args) -> int:
    sample = _load_sample(args)
    ctl = _series_control(args)
    ga = _group_sample(sample, args.group_a)
    gb = _group_sample(sample, args.group_b)
    opt = OptimizerConfig()
    if args.family == "auto":
        families = list(_CLI_FAMILIES.values())
        fits = _fit_groups(sample, families, _groups_of(sample), ctl, opt)
        totals = {f: sum(fits[g][f].bic_star for g in fits) for f in families}
        family = min(totals, key=totals.get)
    else:
        family = _CLI_FAMILIES[args.family]
    spec = ModelSpec(family, sample.dims[0], sample.dims[1])
    res = lrt_equal_mean_shape(ga, gb, spec, ctl, opt)
    payload = {
        "kind": "test",
        "family": family,
        "group_a": args.group_a,
        "group_b": args.group_b,
        "seed": args.seed,
        "control": {"max_degree": ctl.max_degree, "tail_rel_tol": ctl.tail_rel_tol},
        **res.to_dict(),
    }
    sio.write_report(payload, args.out, timestamp=not args.no_timestamp)
    return 0


def _density_model(args, family: str):
    """Build the isotropic model either from a fit report or from
    --omega/--sigma2 values (mean built as a diagonal representative)."""
    if args.fit_report:
        try:
            with open(args.fit_report) as fh:
                rep = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read fit report: {exc}", path=args.fit_report) from exc
        groups = rep.get("groups", {})
        if args.fit_group is None and len(groups) == 1:
            args.fit_group = next(iter(groups))
        if args.fit_group not in groups:
            raise ConfigError(
                f"group {args.fit_group!r} not in fit report (has {sorted(groups)})"
            )
        gr = groups[args.fit_group]
        mu = np.asarray(gr["mu_hat"], dtype=float)
        sigma2 = float(gr["sigma2_hat"])
        N = mu.shape[0] + 1
        K = mu.shape[1]
    else:
        if args.omega is None or args.n_landmarks is None or args.k_dims is None:
            raise ConfigError(
                "density needs either --fit-report or --omega with --n-landmarks/--k-dims"
            )
        omega = [float(x) for x in args.omega.split(",") if x.strip()]
        N, K = args.n_landmarks, args.k_dims
        sigma2 = args.sigma2
        n = min(N - 1, K)
        if len(omega) > n or any(w < 0 for w in omega):
            raise ConfigError(f"--omega takes up to {n} nonnegative eigenvalues")
        mu = np.zeros((N - 1, K))
        for i, w in enumerate(omega):
            mu[i, i] = (w * sigma2) ** 0.5
    gen = {"gaussian": KotzParams.gaussian, "kotz_t2": lambda M: KotzParams(T=2, R=0.5, M=M),
           "kotz_t3": lambda M: KotzParams(T=3, R=0.5, M=M)}[family](K * (N - 1))
    return IsotropicModel(mu=mu, sigma2=sigma2, gen=gen, N=N, K=K)


def cmd_density(args) -> int:
    ctl = _series_control(args)
    families = [_CLI_FAMILIES[f] for f in (args.family or ["gaussian"])]
    models = {f: _density_model(args, f) for f in families}
    dims0 = models[families[0]].dims
    if dims0.m != 1:
        raise ConfigError(
            f"density grids are emitted for one shape angle (n=2); got n={dims0.n}"
        )
    grid = np.linspace(args.grid_start, args.grid_stop, args.grid_points)
    evaluators = {
        "gaussian": disk_density_gaussian_explicit,
        "kotz_t2": lambda u, m, c: disk_density_kotz_explicit(u, m, c, T=2),
        "kotz_t3": lambda u, m, c: disk_density_kotz_explicit(u, m, c, T=3),
    }
    rows = []
    skipped = 0
    for th in grid:
        row = [repr(float(th))]
        try:
            for f in families:
                dv = evaluators[f]([th], models[f], ctl)
                row.extend(
                    [repr(float(dv.value)), str(dv.truncation_degree_used), repr(float(dv.tail_estimate))]
                )
        except ShapeAnalysisError:
            skipped += 1
            continue
        rows.append(",".join(row))
    if len(families) == 1:
        header = "theta_1,density,trunc_degree,tail"
    else:
        header = "theta_1," + ",".join(
            f"density_{f},trunc_degree_{f},tail_{f}" for f in families
        )
    with open(args.out, "w") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(r + "\n")
    if skipped:
        print(f"skipped {skipped} out-of-region grid points", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="svdshape",
        description="SVD shape analysis under elliptical landmark models",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", required=True, help="landmark CSV or shapes JSON")
            p.add_argument("--theta", default=None, help="K x K whitening matrix CSV")
        p.add_argument("--max-degree", type=int, default=40)
        p.add_argument("--tail-tol", type=float, default=1e-10)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True)
        p.add_argument("--no-timestamp", action="store_true", help="omit the meta block")

    p = sub.add_parser("extract", help="landmark CSV -> shape coordinates JSON")
    common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("fit", help="maximum likelihood fit per group")
    common(p)
    p.add_argument("--family", choices=sorted(_CLI_FAMILIES), default="gaussian")
    p.add_argument("--group", action="append", help="restrict to these groups")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="fit several families and rank by the information criterion")
    common(p)
    p.add_argument("--family", action="append", choices=sorted(_CLI_FAMILIES))
    p.add_argument("--group", action="append")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("test", help="likelihood ratio test of equal mean shape")
    common(p)
    p.add_argument("--group-a", required=True)
    p.add_argument("--group-b", required=True)
    p.add_argument("--family", choices=sorted(_CLI_FAMILIES) + ["auto"], default="auto")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("density", help="evaluate a disk density on an angle grid")
    common(p, needs_input=False)
    p.add_argument("--family", action="append", choices=sorted(_CLI_FAMILIES))
    p.add_argument("--fit-report", default=None, help="take parameters from a fit JSON")
    p.add_argument("--fit-group", default=None)
    p.add_argument("--omega", default=None, help="comma-separated noncentrality eigenvalues")
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--n-landmarks", type=int, default=None)
    p.add_argument("--k-dims", type=int, default=None)
    p.add_argument("--grid-start", type=float, default=0.0)
    p.add_argument("--grid-stop", type=float, default=0.7853981633974483)
    p.add_argument("--grid-points", type=int, default=64)
    p.set_defaults(func=cmd_density)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ShapeAnalysisError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
