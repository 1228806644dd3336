"""Reproducible command-line front end.

Subcommands: triple build, defect eval, anneal run, analytic family,
analytic optimal-c, estimate, report.  Every data-producing command writes a
run manifest (resolved config, seed, kappa, content hashes of all outputs,
headline numbers).  Manifests are append-only: a rerun in the same directory
writes manifest-2.json and so on; data files are never overwritten without
--force.

Output directory resolution: --out flag, else $NCGLAB_OUT, else the [global]
out entry of a --config TOML file, else the current directory.

Exit codes: 0 success, 2 usage or validation error, 1 internal error.
"""

import argparse
import csv
import datetime
import hashlib
import json
import os
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__, analytic, anneal, heisenberg, linalg, spectral, triples

CSV_KW = {"lineterminator": "\n"}


class CliError(Exception):
    """Validation failure; mapped to exit code 2."""


# -- plumbing ---------------------------------------------------------------

def _load_config(path):
    if path is None:
        return {}
    if not os.path.exists(path):
        raise CliError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _global(cfg, key, default=None):
    return cfg.get("global", {}).get(key, default)


def _resolve_out(args, cfg):
    out = getattr(args, "out", None)
    if out is None:
        out = os.environ.get("NCGLAB_OUT") or _global(cfg, "out")
    if out is None:
        out = "."
    os.makedirs(out, exist_ok=True)
    return out


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class OutputSet:
    """Collision-guarded output directory with manifest bookkeeping."""

    def __init__(self, outdir, force):
        self.outdir = outdir
        self.force = force
        self.files = []

    def path(self, name):
        p = os.path.join(self.outdir, name)
        if os.path.exists(p) and not self.force:
            raise CliError(f"refusing to overwrite {p} (use --force)")
        self.files.append(name)
        return p

    def write_manifest(self, argv, config, headline, seed=None, kappa=None):
        name = "manifest.json"
        k = 2
        while os.path.exists(os.path.join(self.outdir, name)):
            name = f"manifest-{k}.json"
            k += 1
        manifest = {
            "tool": "ncglab",
            "version": __version__,
            "command": list(argv),
            "config": config,
            "seed": seed,
            "kappa": kappa,
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "outputs": {f: _sha256(os.path.join(self.outdir, f))
                        for f in self.files},
            "headline": headline,
        }
        with open(os.path.join(self.outdir, name), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return name


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, **CSV_KW)
        w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    return repr(float(x))


# -- triple build -----------------------------------------------------------

def _cmd_triple_build(args, cfg, argv):
    out = OutputSet(_resolve_out(args, cfg), args.force)
    if args.model == "circle":
        t = triples.build_circle(args.cutoff)
        linalg.save_matrix(t.D, out.path("D.json"))
        linalg.save_matrix(t.U, out.path("U.json"))
        basis = {"model": "circle", "cutoff": t.cutoff,
                 "labels": list(t.modes)}
    else:
        t = triples.build_sphere(args.cutoff)
        for name, m in (("D", t.D), ("a", t.a), ("b", t.b), ("gamma", t.gamma)):
            linalg.save_matrix(m, out.path(f"{name}.json"))
        basis = {"model": "sphere", "cutoff": t.cutoff,
                 "labels": [list(lab) for lab in t.basis]}
    _write_json(out.path("basis.json"), basis)
    out.write_manifest(argv, {"model": args.model, "cutoff": args.cutoff},
                       {"dim": t.dim})
    return 0


def _load_triple(dirpath):
    basis_path = os.path.join(dirpath, "basis.json")
    if not os.path.exists(basis_path):
        raise CliError(f"not a triple directory (missing basis.json): {dirpath}")
    with open(basis_path) as fh:
        basis = json.load(fh)
    model, cutoff = basis["model"], int(basis["cutoff"])
    t = triples.build_circle(cutoff) if model == "circle" \
        else triples.build_sphere(cutoff)
    stored = linalg.load_matrix(os.path.join(dirpath, "D.json"))
    if stored.shape[0] != t.dim or np.max(np.abs(stored - t.D)) > 1e-12:
        raise CliError(f"stored D in {dirpath} does not match a {model} "
                       f"triple at cutoff {cutoff}")
    return model, t


# -- defect eval ------------------------------------------------------------

def _cmd_defect_eval(args, cfg, argv):
    model, t = _load_triple(args.triple)
    if not os.path.exists(args.dirac):
        raise CliError(f"Dirac candidate file not found: {args.dirac}")
    d = linalg.load_matrix(args.dirac)
    kappa = args.kappa if args.kappa is not None \
        else _global(cfg, "kappa", heisenberg.DEFAULT_KAPPA)
    if args.first_order is not None:
        if model != "sphere":
            raise CliError("--first-order applies to sphere triples only")
        i, j = args.first_order
        rep = heisenberg.first_order_defect(t, d, i, j)
    elif model == "circle":
        rep = heisenberg.circle_defect(t, d, adjoint=not args.non_adjoint)
    else:
        rep = heisenberg.sphere_defect(t, d, kappa)

    out = OutputSet(_resolve_out(args, cfg), args.force)
    report = {
        "model": rep.model,
        "cutoff": rep.cutoff,
        "constraint": rep.constraint,
        "norms": rep.norms,
        "kappa": rep.kappa,
        "meta": rep.meta,
    }
    _write_json(out.path(args.report_name), report)
    heisenberg.export_heatmap(rep, out.path("heatmap.csv"))
    out.write_manifest(argv, {"triple": args.triple, "dirac": args.dirac,
                              "first_order": args.first_order,
                              "non_adjoint": args.non_adjoint},
                       {"constraint": rep.constraint, "norms": rep.norms},
                       kappa=rep.kappa)
    return 0


# -- anneal run -------------------------------------------------------------

_PARAM_KIND = {"circle-real": "circle-real",
               "block-p": "sphere-block-p",
               "block-rs": "sphere-block-rs"}


def _anneal_config(args, cfg, model):
    if args.from_manifest:
        with open(args.from_manifest) as fh:
            stored = json.load(fh)["config"]
        return anneal.AnnealConfig(**stored["anneal"]), stored["param"]
    n_measure = args.n_measure
    if n_measure is None:
        n_measure = 500 if model == "circle" else 150
    acfg = anneal.AnnealConfig(
        c_speed=args.c_speed,
        t_final=args.t_final,
        proposal_sigma=args.sigma,
        n_measure=n_measure,
        measure_stride=args.measure_stride,
        max_steps=args.max_steps,
        seed=args.seed if args.seed is not None
        else int(_global(cfg, "seed", 0)),
        schedule=args.schedule,
        refine_iters=args.refine_iters,
    )
    return acfg, args.param


def _exact_reference_spectrum(model, t):
    if model == "circle":
        return np.array(t.modes, dtype=float)
    member = analytic.family_member(t, analytic.optimal_c(t.cutoff))
    return np.linalg.eigvalsh(member.D)


def _cmd_anneal_run(args, cfg, argv):
    if args.cutoff < 1:
        raise CliError("cutoff must be a positive integer")
    model = args.model
    acfg, param = _anneal_config(args, cfg, model)
    if _PARAM_KIND.get(param) is None:
        raise CliError(f"unknown parametrization {param!r}")
    kind = _PARAM_KIND[param]
    if (model == "circle") != (kind == "circle-real"):
        raise CliError(f"parametrization {param!r} does not fit model {model!r}")
    t = triples.build_circle(args.cutoff) if model == "circle" \
        else triples.build_sphere(args.cutoff)
    kappa = args.kappa if args.kappa is not None \
        else float(_global(cfg, "kappa", heisenberg.DEFAULT_KAPPA))
    problem = anneal.AnnealProblem(t, kind, kappa)
    result = anneal.run(problem, acfg)

    out = OutputSet(_resolve_out(args, cfg), args.force)
    linalg.save_matrix(result.best_D, out.path("best.json"))
    linalg.save_matrix(result.average_D, out.path("average.json"))
    _write_csv(out.path("trace.csv"), ["step", "T", "E"],
               [[s, _fmt(T), _fmt(E)] for s, T, E in result.trace])
    exact = _exact_reference_spectrum(model, t)
    rows = []
    for source, spec in (("best", np.linalg.eigvalsh(result.best_D)),
                         ("average", np.linalg.eigvalsh(result.average_D)),
                         ("exact", exact)):
        rows += [[i, _fmt(v), source] for i, v in enumerate(spec)]
    _write_csv(out.path("spectrum.csv"), ["index", "eigenvalue", "source"], rows)
    config = {"model": model, "cutoff": args.cutoff, "param": param,
              "anneal": vars(acfg)}
    out.write_manifest(argv, config,
                       {"best_constraint": result.best_constraint,
                        "complete": result.complete,
                        "initial_temperature": result.initial_temperature,
                        "final_temperature": result.final_temperature},
                       seed=acfg.seed, kappa=kappa)
    return 0


# -- analytic ---------------------------------------------------------------

def _cmd_analytic_family(args, cfg, argv):
    t = triples.build_sphere(args.cutoff)
    c = args.c if args.c is not None else analytic.optimal_c(args.cutoff)
    member = analytic.family_member(t, c)
    out = OutputSet(_resolve_out(args, cfg), args.force)
    linalg.save_matrix(member.D, out.path("D.json"))
    spec = np.linalg.eigvalsh(member.D)
    _write_csv(out.path("spectrum.csv"), ["index", "eigenvalue"],
               [[i, _fmt(v)] for i, v in enumerate(spec)])
    bc = analytic.family_boundary_coefficient(args.cutoff, c)
    norm = analytic.family_defect_norm(t, c)
    _write_json(out.path("family.json"),
                {"cutoff": args.cutoff, "c": c,
                 "mu": list(member.mu),
                 "boundary_coefficient": bc,
                 "defect_norm": norm})
    out.write_manifest(argv, {"cutoff": args.cutoff, "c": c},
                       {"boundary_coefficient": bc, "defect_norm": norm})
    return 0


def _cmd_analytic_optimal_c(args, cfg, argv):
    print(_fmt(analytic.optimal_c(args.cutoff)))
    return 0


# -- estimate ---------------------------------------------------------------

def _read_spectrum_csv(path, source):
    if not os.path.exists(path):
        raise CliError(f"spectrum file not found: {path}")
    with open(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "eigenvalue" not in reader.fieldnames:
            raise CliError(f"{path} lacks an 'eigenvalue' column")
        has_source = "source" in reader.fieldnames
        vals = [float(row["eigenvalue"]) for row in reader
                if not has_source or row["source"] == source]
    if not vals:
        raise CliError(f"no eigenvalues for source {source!r} in {path}")
    return np.array(vals)


def _cmd_estimate(args, cfg, argv):
    s = _read_spectrum_csv(args.spectrum, args.source)
    window = tuple(args.window) if args.window else None
    report = {"what": args.what, "n_eigenvalues": len(s)}
    if args.what == "dimension":
        report["dimension"] = spectral.dimension_estimate(s, window)
    elif args.what == "volume":
        d = args.dim if args.dim is not None \
            else max(round(spectral.dimension_estimate(s, window)), 1)
        report["dim_used"] = d
        report["volume"] = spectral.volume_estimate(s, d, window)
    else:
        alpha, beta = spectral.heat_trace_fit(s)
        report["heat_leading"] = alpha
        report["heat_subleading"] = beta
    out = OutputSet(_resolve_out(args, cfg), args.force)
    _write_json(out.path(args.report_name), report)
    out.write_manifest(argv, {"spectrum": args.spectrum, "what": args.what,
                              "window": args.window}, report)
    return 0


# -- report pipelines -------------------------------------------------------

def _pipeline_circle(args, cfg, out):
    cutoff = (args.cutoffs or [10])[0]
    seed = (args.seeds or [1])[0]
    t = triples.build_circle(cutoff)
    acfg = anneal.AnnealConfig(seed=seed)
    result = anneal.run(anneal.AnnealProblem(t, "circle-real"), acfg)
    best = np.linalg.eigvalsh(result.best_D)
    avg = np.linalg.eigvalsh(result.average_D)
    exact = np.array(t.modes, dtype=float)
    rows = []
    for source, spec in (("best", best), ("average", avg), ("exact", exact)):
        rows += [[i, _fmt(v), source] for i, v in enumerate(spec)]
    _write_csv(out.path("spectrum.csv"), ["index", "eigenvalue", "source"], rows)
    _write_csv(out.path("difference.csv"), ["index", "difference"],
               [[i, _fmt(b - e)] for i, (b, e) in enumerate(zip(best, exact))])
    _write_csv(out.path("trace.csv"), ["step", "T", "E"],
               [[s, _fmt(T), _fmt(E)] for s, T, E in result.trace])
    rep = heisenberg.circle_defect(t, t.D)
    heisenberg.export_heatmap(rep, out.path("heatmap.csv"))
    return {"best_constraint": result.best_constraint,
            "max_abs_difference": float(np.max(np.abs(best - exact)))}, seed


def _pipeline_sphere_anneal(args, cfg, out):
    cutoff = (args.cutoffs or [3])[0]
    seeds = args.seeds or [1]
    t = triples.build_sphere(cutoff)
    exact = _exact_reference_spectrum("sphere", t)
    rows, bests = [], {}
    trace_rows = []
    for seed in seeds:
        acfg = anneal.AnnealConfig(seed=seed)
        result = anneal.run(anneal.AnnealProblem(t, "sphere-block-p"), acfg)
        bests[seed] = result.best_constraint
        for source, spec in (("best", np.linalg.eigvalsh(result.best_D)),
                             ("average", np.linalg.eigvalsh(result.average_D))):
            rows += [[seed, i, _fmt(v), source] for i, v in enumerate(spec)]
        trace_rows += [[seed, s, _fmt(T), _fmt(E)] for s, T, E in result.trace]
        rep = heisenberg.sphere_defect(t, result.best_D)
        heisenberg.export_heatmap(rep, out.path(f"heatmap_seed{seed}.csv"))
    rows += [[0, i, _fmt(v), "exact"] for i, v in enumerate(exact)]
    _write_csv(out.path("spectrum.csv"),
               ["seed", "index", "eigenvalue", "source"], rows)
    _write_csv(out.path("trace.csv"), ["seed", "step", "T", "E"], trace_rows)
    return {"best_constraints": bests}, seeds[0]


def _pipeline_analytic_vs_sphere(args, cfg, out):
    cutoffs = args.cutoffs or [1, 2, 3, 4]
    spec_rows, bound_rows = [], []
    for cutoff in cutoffs:
        t = triples.build_sphere(cutoff)
        c = analytic.optimal_c(cutoff)
        member = analytic.family_member(t, c)
        for op, m in (("sphere", t.D), ("family", member.D)):
            for i, v in enumerate(np.linalg.eigvalsh(m)):
                spec_rows.append([cutoff, i, _fmt(v), op])
        bound_rows.append([cutoff, _fmt(c),
                           _fmt(analytic.family_boundary_coefficient(cutoff, c)),
                           _fmt(analytic.family_defect_norm(t, c))])
    _write_csv(out.path("family_spectra.csv"),
               ["cutoff", "index", "eigenvalue", "operator"], spec_rows)
    _write_csv(out.path("boundary.csv"),
               ["cutoff", "c", "boundary_coefficient", "defect_norm"],
               bound_rows)
    return {"cutoffs": cutoffs}, None


def _pipeline_asymptotics(args, cfg, out):
    cutoffs = args.cutoffs or [10, 15, 20]
    rows = []
    headline = {}
    for cutoff in cutoffs:
        for op in ("sphere", "family"):
            if op == "sphere":
                s = np.concatenate([[lam] * (2 * lam) + [-lam] * (2 * lam)
                                    for lam in range(1, cutoff + 1)])
            else:
                c = analytic.optimal_c(cutoff)
                mu = analytic.family_mu(cutoff, c)
                s = np.concatenate([[m] * (2 * lam) + [-m] * (2 * lam)
                                    for lam, m in enumerate(mu, start=1)])
            s = np.asarray(s, dtype=float)
            dim = spectral.dimension_estimate(s)
            vol = spectral.volume_estimate(s, 2)
            _, beta = spectral.heat_trace_fit(s)
            rows.append([cutoff, op, _fmt(dim), _fmt(vol), _fmt(beta)])
            if cutoff == max(cutoffs):
                headline[f"dimension_{op}"] = dim
                headline[f"volume_{op}"] = vol
                headline[f"beta_{op}"] = beta
    _write_csv(out.path("estimates.csv"),
               ["cutoff", "operator", "dimension", "volume", "beta"], rows)
    return headline, None


_PIPELINES = {
    "circle": _pipeline_circle,
    "sphere-anneal": _pipeline_sphere_anneal,
    "analytic-vs-sphere": _pipeline_analytic_vs_sphere,
    "asymptotics": _pipeline_asymptotics,
}


def _cmd_report(args, cfg, argv):
    out = OutputSet(_resolve_out(args, cfg), args.force)
    headline, seed = _PIPELINES[args.experiment](args, cfg, out)
    out.write_manifest(argv, {"experiment": args.experiment,
                              "cutoffs": args.cutoffs, "seeds": args.seeds},
                       headline, seed=seed)
    return 0


# -- argument parsing -------------------------------------------------------

def _add_common(p):
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="TOML config file with a [global] section")
    p.add_argument("--force", action="store_true",
                   help="allow overwriting existing output files")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ncglab",
        description="truncated Dirac geometry laboratory")
    parser.add_argument("--version", action="version",
                        version=f"ncglab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_triple = sub.add_parser("triple", help="triple construction")
    sub_t = p_triple.add_subparsers(dest="subcommand", required=True)
    p = sub_t.add_parser("build", help="build and serialize a triple")
    p.add_argument("--model", required=True, choices=["circle", "sphere"])
    p.add_argument("--cutoff", required=True, type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_triple_build)

    p_defect = sub.add_parser("defect", help="defect evaluation")
    sub_d = p_defect.add_subparsers(dest="subcommand", required=True)
    p = sub_d.add_parser("eval", help="evaluate a defect report")
    p.add_argument("--triple", required=True, help="triple directory")
    p.add_argument("--dirac", required=True, help="Dirac candidate matrix file")
    p.add_argument("--kappa", type=float)
    p.add_argument("--first-order", nargs=2, type=int, metavar=("I", "J"))
    p.add_argument("--non-adjoint", action="store_true",
                   help="circle: evaluate U[d,U]-1 instead of U*[d,U]-1")
    p.add_argument("--report-name", default="report.json")
    _add_common(p)
    p.set_defaults(func=_cmd_defect_eval)

    p_anneal = sub.add_parser("anneal", help="thermal annealing")
    sub_a = p_anneal.add_subparsers(dest="subcommand", required=True)
    p = sub_a.add_parser("run", help="run one annealing chain")
    p.add_argument("--model", required=True, choices=["circle", "sphere"])
    p.add_argument("--cutoff", required=True, type=int)
    p.add_argument("--param", default=None,
                   choices=list(_PARAM_KIND))
    p.add_argument("--seed", type=int)
    p.add_argument("--c-speed", type=float, default=0.05)
    p.add_argument("--t-final", type=float, default=0.001)
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--n-measure", type=int)
    p.add_argument("--measure-stride", type=int, default=10)
    p.add_argument("--max-steps", type=int, default=4_000_000)
    p.add_argument("--schedule", default="entropy",
                   choices=["entropy", "geometric"])
    p.add_argument("--refine-iters", type=int, default=80)
    p.add_argument("--kappa", type=float)
    p.add_argument("--from-manifest",
                   help="replay the resolved config of a previous manifest")
    _add_common(p)
    p.set_defaults(func=_cmd_anneal_run)

    p_analytic = sub.add_parser("analytic", help="exact solution family")
    sub_n = p_analytic.add_subparsers(dest="subcommand", required=True)
    p = sub_n.add_parser("family", help="emit a family member")
    p.add_argument("--cutoff", required=True, type=int)
    p.add_argument("--c", type=float)
    _add_common(p)
    p.set_defaults(func=_cmd_analytic_family)
    p = sub_n.add_parser("optimal-c", help="print the defect-free c")
    p.add_argument("--cutoff", required=True, type=int)
    p.set_defaults(func=_cmd_analytic_optimal_c, out=None, config=None,
                   force=False)

    p = sub.add_parser("estimate", help="spectral asymptotics estimators")
    p.add_argument("--spectrum", required=True, help="spectrum CSV file")
    p.add_argument("--what", required=True,
                   choices=["dimension", "volume", "heat"])
    p.add_argument("--window", nargs=2, type=float, metavar=("A", "B"))
    p.add_argument("--dim", type=float, help="dimension for the volume fit")
    p.add_argument("--source", default="best",
                   help="row filter when the CSV has a source column")
    p.add_argument("--report-name", default="report.json")
    _add_common(p)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("report", help="end-to-end experiment pipelines")
    p.add_argument("--experiment", required=True, choices=list(_PIPELINES))
    p.add_argument("--cutoffs", nargs="+", type=int)
    p.add_argument("--seeds", nargs="+", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_report)

    return parser


def run_command(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        cfg = _load_config(args.config)
        if getattr(args, "param", "x") is None:
            args.param = "circle-real" if args.model == "circle" else "block-p"
        return args.func(args, cfg, argv)
    except (CliError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
