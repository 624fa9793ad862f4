"""Command-line surface.

Subcommands: dist {make,check,perturb}, feasibility scan, test run,
witness build, hermite moment, fourier spectrum.  Rationals cross the
boundary as "a/b" strings; a single --seed reproduces a whole run via
per-component seed derivation.

Exit status: 0 success, 1 validation error, 2 computation failure.
"""

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import cube, distributions, hermite, lintest, witness
from .errors import ComputationError, ValidationError
from .rational import as_rational, format_rational


def _load_config(args):
    """Merge a JSON config file under explicit flags (flags win)."""
    if not getattr(args, "config", None):
        return args
    with open(args.config) as fh:
        cfg = json.load(fh)
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) is None:
            setattr(args, attr, value)
    return args


def _write_output(args, text):
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _read_distribution(path):
    with open(path) as fh:
        return distributions.BiasedDistribution.from_json_dict(json.load(fh))


# -- dist --------------------------------------------------------------


def cmd_dist_make(args):
    k = args.k
    p = as_rational(args.p, "p") if args.p is not None else None
    family = args.family
    if family == "uniform":
        d = distributions.make_uniform_even_weight(k)
    elif family == "case":
        d = distributions.make_case_distribution(k, p)
    elif family == "composed":
        d = distributions.make_composed_distribution(k, p)
    elif family == "dfh19":
        p1 = as_rational(args.p1, "p1") if args.p1 is not None else None
        d = distributions.make_dfh19(p, p1)
    elif family == "blr":
        d = distributions.make_uniform_even_weight(3)
    elif family == "auto":
        d = distributions.make_distribution(k, p)
    else:
        raise ValidationError(f"unknown family {family!r}")
    _write_output(args, d.to_json(indent=2))
    return 0


def cmd_dist_check(args):
    d = _read_distribution(args.dist)
    blr = distributions.contains_blr(d, up_to_permutation=args.permutations)
    report = {
        "k": d.k,
        "p": format_rational(d.p),
        "support_size": len(d.probs),
        "full_even_weight_support": d.has_full_even_weight_support(),
        "hamming_symmetric": d.is_hamming_symmetric(),
        "marginals": [format_rational(d.marginal(i)) for i in range(d.k)],
        "pairwise_independent": sorted(
            distributions.pairwise_independent_coordinates(d)
        ),
        "eta": format_rational(distributions.eta(d)),
        "contains_blr": (
            {"b": blr.b, "z": list(blr.z), "coordinates": list(blr.coordinates)}
            if blr
            else None
        ),
    }
    _write_output(args, json.dumps(report, indent=2))
    return 0


def cmd_dist_perturb(args):
    d = _read_distribution(args.dist)
    out = distributions.make_full_support_perturbation(d)
    _write_output(args, out.to_json(indent=2))
    return 0


# -- feasibility -------------------------------------------------------


def _parse_grid(spec):
    """'1/20:19/20:1/20' range or comma-separated rational list."""
    if ":" in spec:
        start, stop, step = (as_rational(v, "grid") for v in spec.split(":"))
        vals = []
        v = start
        while v <= stop:
            vals.append(v)
            v += step
        return vals
    return [as_rational(v, "grid") for v in spec.split(",")]


def cmd_feasibility(args):
    ks = [int(v) for v in args.k_range.split(",")] if "," in args.k_range else None
    if ks is None:
        if ".." in args.k_range:
            lo, hi = args.k_range.split("..")
            ks = list(range(int(lo), int(hi) + 1))
        else:
            ks = [int(args.k_range)]
    grid = _parse_grid(args.p_grid)
    rows = []
    for k in ks:
        for p in grid:
            cert = distributions.feasibility_search(k, p)
            rows.append(
                {
                    "k": k,
                    "p": format_rational(p),
                    "feasible": cert.feasible,
                    "analytic_bound": cert.bound_check,
                    "q": (
                        " ".join(format_rational(v) for v in cert.witness.q)
                        if cert.witness is not None and cert.witness.q is not None
                        else ""
                    ),
                }
            )
    if args.format == "json":
        _write_output(args, json.dumps(rows, indent=2))
    else:
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf, fieldnames=["k", "p", "feasible", "analytic_bound", "q"]
        )
        writer.writeheader()
        writer.writerows(rows)
        _write_output(args, buf.getvalue())
    return 0


# -- test --------------------------------------------------------------


def _builtin_function(spec, n):
    """chi:S, neg-chi:S (times (-1)^|S|), random:seed, or a JSON table path."""
    if spec.startswith("chi:"):
        return cube.character(int(spec[4:], 0), n)
    if spec.startswith("neg-chi:"):
        S = int(spec[8:], 0)
        base = cube.character(S, n)
        sign = (-1.0) ** bin(S).count("1")
        return cube.DenseFunction(n, sign * base.values, range_tag=cube.RANGE_SIGNS)
    if spec.startswith("random:"):
        rng = np.random.default_rng(int(spec[7:]))
        vals = rng.choice([-1.0, 1.0], size=2**n)
        return cube.DenseFunction(n, vals, range_tag=cube.RANGE_SIGNS)
    with open(spec) as fh:
        return cube.DenseFunction.from_json_dict(json.load(fh))


def cmd_test(args):
    d = _read_distribution(args.dist)
    n = args.n if args.n is not None else 3
    f = _builtin_function(args.fn, n)
    samples = args.samples
    seed = args.seed if args.seed is not None else 0
    if args.negated:
        mode = lintest.MODE_EXACT if args.exact else lintest.MODE_MC
        report = lintest.negated_test(f, d, n, mode=mode, samples=samples, seed=seed)
    elif args.exact:
        report = lintest.product_expectation_exact(f, d, n)
    else:
        if samples is None:
            raise ValidationError("MC mode needs --samples")
        report = lintest.product_expectation_mc(f, d, n, samples, seed)
    _write_output(args, report.to_json(indent=2))
    return 0


# -- witness -----------------------------------------------------------


def cmd_witness(args):
    d = _read_distribution(args.dist)
    pic = distributions.pairwise_independent_coordinates(d)
    if pic:
        raise ValidationError(
            f"distribution has pairwise independent coordinates {sorted(pic)}; "
            "the counterexample construction does not apply"
        )
    n = args.n if args.n is not None else 2000
    samples = args.samples if args.samples is not None else 100_000
    seed = args.seed if args.seed is not None else 0
    ce = witness.build_counterexample(d, n=n, samples=samples, seed=seed, d_max=args.d_max)
    product = lintest.product_expectation_mc(
        ce.f, d, n, samples, witness.derive_seed(seed, "verify-product")
    )
    probes = witness.correlation_probes(
        ce.f, d.p, n, samples, witness.derive_seed(seed, "verify-probes")
    )
    rounded = lintest.product_expectation_mc(
        ce.g, d, n, samples, witness.derive_seed(seed, "verify-rounded")
    )
    report = {
        "witness": ce.to_json_dict(),
        "alpha_const": ce.alpha_const,
        "gaussian_estimate": ce.gaussian_estimate,
        "product_expectation": product.to_json_dict(),
        "correlation_probes": probes,
        "rounded_product_expectation": rounded.to_json_dict(),
        "eta": format_rational(distributions.eta(d)),
    }
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(ce.to_json(indent=2))
    _write_output(
        argparse.Namespace(out=args.report), json.dumps(report, indent=2)
    )
    return 0


# -- hermite -----------------------------------------------------------


def cmd_hermite(args):
    s = tuple(int(v) for v in args.s.split(","))
    if args.sigma:
        with open(args.sigma) as fh:
            data = json.load(fh)
        entries = tuple(
            tuple(as_rational(v, "Sigma") for v in row) for row in data["entries"]
        )
        sigma = hermite.CovarianceMatrix(k=len(entries), entries=entries)
    else:
        rho = as_rational(args.rho if args.rho is not None else "0", "rho")
        sigma = hermite.CovarianceMatrix.from_offdiagonal(len(s), rho)
    exact = hermite.hermite_product_expectation(s, sigma)
    report = {"s": list(s), "moment": format_rational(exact)}
    if args.mc:
        samples = args.samples if args.samples is not None else 1_000_000
        seed = args.seed if args.seed is not None else 0
        est, se = hermite.gaussian_mc_moment(s, sigma, samples, seed)
        report["mc_estimate"] = est
        report["mc_stderr"] = se
    _write_output(args, json.dumps(report, indent=2))
    return 0


# -- fourier -----------------------------------------------------------


def cmd_fourier(args):
    with open(args.fn) as fh:
        f = cube.DenseFunction.from_json_dict(json.load(fh))
    p = as_rational(args.p, "p")
    spec = cube.biased_spectrum(f, p)
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["S", "correlation"])
        for S, v in enumerate(spec):
            writer.writerow([S, repr(float(v))])
        _write_output(args, buf.getvalue())
    else:
        _write_output(args, json.dumps({"n": f.n, "spectrum": spec.tolist()}, indent=2))
    return 0


# -- parser ------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="biaslin", description="Biased linearity testing toolkit"
    )
    parser.add_argument("--config", help="JSON config file mirroring the flags")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=["json", "csv"], default="json")

    dist = sub.add_parser("dist", help="construct / check / perturb distributions")
    dist_sub = dist.add_subparsers(dest="dist_command", required=True)

    mk = dist_sub.add_parser("make")
    mk.add_argument(
        "--family",
        choices=["uniform", "case", "composed", "dfh19", "blr", "auto"],
        required=True,
    )
    mk.add_argument("--k", type=int, default=4)
    mk.add_argument("--p", default=None, help="bias as a rational string, e.g. 2/5")
    mk.add_argument("--p1", default=None)
    add_common(mk)
    mk.set_defaults(func=cmd_dist_make)

    ck = dist_sub.add_parser("check")
    ck.add_argument("dist", help="distribution JSON file")
    ck.add_argument("--permutations", action="store_true")
    add_common(ck)
    ck.set_defaults(func=cmd_dist_check)

    pt = dist_sub.add_parser("perturb")
    pt.add_argument("dist", help="distribution JSON file")
    add_common(pt)
    pt.set_defaults(func=cmd_dist_perturb)

    feas = sub.add_parser("feasibility", help="scan the queries-vs-bias frontier")
    feas_sub = feas.add_subparsers(dest="feas_command", required=True)
    scan = feas_sub.add_parser("scan")
    scan.add_argument("--k-range", required=True, help="e.g. 2..6 or 3,4,5")
    scan.add_argument("--p-grid", required=True, help="e.g. 1/20:19/20:1/20")
    add_common(scan)
    scan.set_defaults(func=cmd_feasibility)

    test = sub.add_parser("test", help="run the product test")
    test_sub = test.add_subparsers(dest="test_command", required=True)
    run = test_sub.add_parser("run")
    run.add_argument("--dist", required=True)
    run.add_argument("--fn", required=True, help="chi:S | neg-chi:S | random:seed | file")
    run.add_argument("--exact", action="store_true")
    run.add_argument("--negated", action="store_true")
    add_common(run)
    run.set_defaults(func=cmd_test)

    wit = sub.add_parser("witness", help="build and verify a counterexample")
    wit_sub = wit.add_subparsers(dest="witness_command", required=True)
    build = wit_sub.add_parser("build")
    build.add_argument("--dist", required=True)
    build.add_argument("--d-max", type=int, default=12)
    build.add_argument("--report", default=None, help="verification report path")
    add_common(build)
    build.set_defaults(func=cmd_witness)

    herm = sub.add_parser("hermite", help="exact Hermite product moments")
    herm_sub = herm.add_subparsers(dest="hermite_command", required=True)
    mom = herm_sub.add_parser("moment")
    mom.add_argument("--s", required=True, help="degree vector, e.g. 1,1,2")
    mom.add_argument("--rho", default=None, help="common off-diagonal correlation")
    mom.add_argument("--sigma", default=None, help="covariance JSON file")
    mom.add_argument("--mc", action="store_true", help="add an MC cross-check")
    add_common(mom)
    mom.set_defaults(func=cmd_hermite)

    four = sub.add_parser("fourier", help="biased Fourier spectra")
    four_sub = four.add_subparsers(dest="fourier_command", required=True)
    spect = four_sub.add_parser("spectrum")
    spect.add_argument("--fn", required=True, help="dense function JSON file")
    spect.add_argument("--p", required=True)
    add_common(spect)
    spect.set_defaults(func=cmd_fourier)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _load_config(args)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ComputationError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
