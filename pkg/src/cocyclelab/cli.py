"""Command-line front door.

Subcommands: walk, compress, markov, eta, moduli, renorm, gap,
harmonize, ode.  Every run writes its CSV/JSON artifacts plus a
manifest.json that records the effective parameters, so outputs are
self-describing and replayable.  Exit codes: 0 success, 1 validation
error, 2 numerical refusal (e.g. no spectral gap).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import banachmoduli as bm
from . import compression as comp
from . import groups, radialode, repcoc, spectralgap

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_REFUSAL = 2


class ValidationError(ValueError):
    pass


def parse_group(text):
    kind, _, rank = text.partition(":")
    if kind == "free":
        return groups.GroupDescriptor(groups.FREE, int(rank or 2))
    if kind in ("abelian", "free_abelian"):
        return groups.GroupDescriptor(groups.FREE_ABELIAN, int(rank or 1))
    if kind == "lamplighter":
        return groups.GroupDescriptor(groups.LAMPLIGHTER)
    raise ValidationError(f"unknown group {text!r} (use free:k, abelian:d, lamplighter)")


def parse_cocycle(name, desc):
    if name == "haagerup":
        if desc.kind != groups.FREE:
            raise ValidationError("haagerup cocycle requires a free group")
        return repcoc.CocycleSpec(
            repcoc.RepSpec(repcoc.TREE_PERMUTATION, desc), repcoc.HAAGERUP_TREE
        )
    if name == "homomorphism":
        if desc.kind != groups.FREE_ABELIAN:
            raise ValidationError("homomorphism cocycle requires an abelian group")
        rep = repcoc.trivial_rep(desc, desc.rank)
        values = {
            i + 1: repcoc.SparseVector({i: 1.0}) for i in range(desc.rank)
        }
        return repcoc.CocycleSpec(rep, repcoc.HOMOMORPHISM, values=values)
    if name.endswith(".json"):
        return repcoc.load_cocycle(name)
    raise ValidationError(f"unknown cocycle {name!r}")


def parse_forcing(text):
    if text.startswith("const:"):
        return radialode.ForcingProfile.constant(float(text.split(":", 1)[1]))
    if text.startswith("band:"):
        _, rest = text.split(":", 1)
        band, _, period = rest.partition(":")
        lo, hi = (float(x) for x in band.split(","))
        return radialode.ForcingProfile.banded_sinusoid(lo, hi, float(period or 10.0))
    path = Path(text)
    if path.exists():
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        return radialode.ForcingProfile.from_samples(data[:, 0], data[:, 1], label=text)
    raise ValidationError(f"cannot parse forcing {text!r}")


def positive_int(name, value, minimum=1):
    value = int(value)
    if value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}")
    return value


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return path


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


class Run:
    """Output directory plus manifest bookkeeping for one invocation."""

    def __init__(self, args, params):
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.args = args
        self.params = params
        self.outputs = []
        self.t0 = time.monotonic()

    def path(self, name):
        p = self.out / name
        self.outputs.append(name)
        return p

    def finish(self):
        manifest = {
            "subcommand": self.args.command,
            "parameters": self.params,
            "seed": self.args.seed,
            "threads": self.args.threads,
            "artifact_version": __version__,
            "outputs": self.outputs,
            "wall_clock_s": round(time.monotonic() - self.t0, 3),
        }
        _write_json(self.out / "manifest.json", manifest)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_walk(args):
    desc = parse_group(args.group)
    n = positive_int("--n", args.n, 0)
    walks = positive_int("--walks", args.walks)
    run = Run(args, {"group": args.group, "n": n, "walks": walks})
    traj = groups.sample_walk(desc, n, args.seed)
    _write_csv(
        run.path("walk.csv"), "step,distance",
        ((i, int(d)) for i, d in enumerate(traj.distances)),
    )
    if walks >= 2 and n >= 100:
        dist = groups.sample_distance_matrix(desc, n, walks, args.seed)
        rate, ci = groups.escape_rate_from_distances(dist)
    else:
        rate, ci = (float(traj.distances[-1]) / n if n else 0.0), None
    _write_json(
        run.path("summary.json"),
        {"group": args.group, "n": n, "seeds": walks, "escape_rate": rate, "ci": ci},
    )
    if args.plot:
        from . import reporting

        reporting.plot_walk(traj.distances, run.path("walk.png"))
    run.finish()
    return EXIT_OK


def cmd_compress(args):
    desc = parse_group(args.group)
    c = parse_cocycle(args.cocycle, desc)
    n = positive_int("--samples", args.samples, 100)
    p = float(args.p)
    if not 1 < p <= 2:
        raise ValidationError("--p must lie in (1, 2]")
    run = Run(
        args,
        {"group": args.group, "cocycle": args.cocycle, "samples": n,
         "rmin": args.rmin, "rmax": args.rmax, "p": p},
    )
    samples = comp.compression_samples(c, n, args.rmin, args.rmax, seed=args.seed)
    report = comp.estimate_compression(samples, fit_window=(args.rmin, args.rmax))
    nonamenable = desc.kind == groups.FREE and desc.rank >= 2
    verdict = comp.amenability_verdict(
        report.alpha_envelope, report.stderr_envelope, p, nonamenable
    )
    _write_csv(
        run.path("compress.csv"), "radius,count,min_norm,gmean_norm", report.buckets
    )
    _write_csv(
        run.path("lengths.csv"), "word_length,cocycle_norm",
        zip(samples[0][:1000], samples[1][:1000]),
    )
    _write_json(
        run.path("verdict.json"),
        {
            "alpha_envelope": report.alpha_envelope,
            "stderr": report.stderr_envelope,
            "p": p,
            "verdict": verdict,
            **report.to_json(),
        },
    )
    if args.plot:
        from . import reporting

        reporting.plot_compression(report, run.path("compress.png"))
    run.finish()
    return EXIT_OK


def cmd_markov(args):
    desc = parse_group(args.group)
    c = parse_cocycle(args.cocycle, desc)
    n_max = positive_int("--nmax", args.nmax)
    n_samples = positive_int("--samples", args.samples, 2)
    p = float(args.p)
    run = Run(
        args,
        {"group": args.group, "cocycle": args.cocycle, "p": p,
         "nmax": n_max, "samples": n_samples},
    )
    report = comp.markov_type_ratio(c, p, n_max, n_samples, seed=args.seed)
    exact = report.exact_ratio if report.exact_ratio is not None else [""] * n_max
    _write_csv(
        run.path("markov.csv"), "n,ratio,stderr,exact_ratio",
        zip(report.n, report.ratio, report.stderr, exact),
    )
    if args.plot:
        from . import reporting

        reporting.plot_markov(report, run.path("markov.png"))
    run.finish()
    return EXIT_OK


_ETA_FORMS = {
    "sqrt": lambda r: np.sqrt(r),
    "linear": lambda r: float(r),
    "log": lambda r: np.log(1.0 + r),
}


def _eta_form(text):
    if text in _ETA_FORMS:
        return _ETA_FORMS[text]
    if text.startswith("pow:"):
        a = float(text.split(":", 1)[1])
        return lambda r: float(r) ** a
    if text.startswith("const:"):
        v = float(text.split(":", 1)[1])
        return lambda r: v
    raise ValidationError(f"unknown eta form {text!r}")


def cmd_eta(args):
    desc = parse_group(args.group)
    f_fn = _eta_form(args.f)
    h_fn = _eta_form(args.h)
    n = positive_int("--samples", args.samples)
    run = Run(args, {"group": args.group, "f": args.f, "h": args.h, "samples": n})
    rng = groups._rng(args.seed, 5)
    f_samples, h_samples = {}, {}
    lengths = np.exp(rng.uniform(0, np.log(args.rmax), size=n)).astype(int)
    for length in lengths:
        if desc.kind == groups.FREE:
            g = comp.element_from_codes(
                desc, comp.random_reduced_word(desc.rank, int(length), rng)
            )
        elif desc.kind == groups.FREE_ABELIAN:
            vec = [0] * desc.rank
            vec[int(rng.integers(desc.rank))] = int(length)
            g = groups.GroupElement(desc, vector=tuple(vec))
        else:
            raise ValidationError("eta sampling covers free and abelian groups")
        r = groups.word_length(g)
        f_samples[g] = f_fn(r)
        h_samples[g] = h_fn(r)
    witness = comp.build_eta(f_samples, h_samples)
    _write_csv(run.path("eta.csv"), "radius,eta", zip(witness.breakpoints, witness.values))
    _write_json(
        run.path("eta.json"),
        {"diverges": witness.diverges, "slope": witness.slope,
         "n_breakpoints": len(witness.breakpoints)},
    )
    if args.plot:
        from . import reporting

        reporting.plot_eta(witness, run.path("eta.png"))
    run.finish()
    return EXIT_OK


def cmd_moduli(args):
    p = float(args.p)
    dim = positive_int("--dim", args.dim, 2)
    n_grid = positive_int("--grid", args.grid, 5)
    spec = bm.NormSpec(p, dim)
    run = Run(args, {"p": p, "dim": dim, "grid": n_grid})
    eps_grid = np.linspace(2.0 / n_grid, 2.0, n_grid)
    tau_grid = np.linspace(1.0 / n_grid, 1.0, n_grid)
    delta = bm.modulus_convexity(spec, eps_grid, seed=args.seed)
    rho = bm.modulus_smoothness(spec, tau_grid, seed=args.seed)
    dual = spec.dual()
    residual = None
    if np.isfinite(dual.p):
        delta_dual = bm.modulus_convexity(dual, eps_grid, seed=args.seed)
        predicted = bm.lindenstrauss_dual(delta_dual, tau_grid)
        residual = bm.duality_residual(predicted, rho)
    rows = [("convexity", p, dim, a, v) for a, v in zip(delta.args, delta.values)]
    rows += [("smoothness", p, dim, a, v) for a, v in zip(rho.args, rho.values)]
    _write_csv(run.path("moduli.csv"), "kind,p,dim,arg,value", rows)
    q = spec.dual_exponent
    smooth_target = min(p, 2.0)
    convex_target = max(q, 2.0) if np.isfinite(q) else None
    doc = {
        "K": bm.fit_power_constants(rho, smooth_target) if smooth_target > 1 else None,
        "c": bm.fit_power_constants(delta, convex_target) if convex_target else None,
        "p": p,
        "q": q if np.isfinite(q) else "inf",
        "residual_duality": residual,
    }
    _write_json(run.path("moduli.json"), doc)
    if args.plot:
        from . import reporting

        reporting.plot_moduli(
            [("convexity", delta), ("smoothness", rho)], run.path("moduli.png")
        )
    run.finish()
    return EXIT_OK


def rotation(theta):
    return np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    )


def cmd_renorm(args):
    diag = np.array([float(x) for x in args.diag.split(",")])
    order = positive_int("--order", args.order, 2)
    run = Run(args, {"diag": args.diag, "order": order})
    d = np.diag(diag)
    gen = d @ rotation(2 * np.pi / order) @ np.linalg.inv(d)
    norm = bm.orbit_norm([gen])
    rng = np.random.default_rng(args.seed)
    vectors = rng.standard_normal((256, len(diag)))
    residual = bm.invariance_residual(norm, [gen], vectors)
    ratios = [norm(v) / np.linalg.norm(v) for v in vectors]
    _write_json(
        run.path("renorm.json"),
        {
            "group_order": norm.group_order,
            "invariance_residual": residual,
            "equivalence_lower": float(min(ratios)),
            "equivalence_upper": float(max(ratios)),
            "uniform_bound": float(diag.max() / diag.min()),
        },
    )
    run.finish()
    return EXIT_OK


def builtin_gallery():
    """Named matrix representations with measures and Kazhdan sets."""
    z = groups.GroupDescriptor(groups.FREE_ABELIAN, 1)
    cycle = np.roll(np.eye(3), 1, axis=0)  # order-3 permutation matrix
    z3_rep = repcoc.RepSpec(repcoc.MATRIX, z, {1: cycle})
    g = z.generator(1)
    z3_mu = spectralgap.FiniteMeasure.uniform([g, g.inverse()])

    f2 = groups.GroupDescriptor(groups.FREE, 2)
    rng = np.random.default_rng(42)
    def random_orthogonal(n):
        q, r = np.linalg.qr(rng.standard_normal((n, n)))
        return q * np.sign(np.diag(r))
    f2_rep = repcoc.RepSpec(
        repcoc.MATRIX, f2, {1: random_orthogonal(6), 2: random_orthogonal(6)}
    )
    f2_mu = spectralgap.FiniteMeasure.uniform(f2.generators())
    return [
        {"name": "z3_regular", "rep": z3_rep, "measure": z3_mu,
         "kazhdan_set": [g, g.inverse()]},
        {"name": "f2_orthogonal_6d", "rep": f2_rep, "measure": f2_mu,
         "kazhdan_set": f2.generators()},
    ]


def element_to_json(g):
    if g.descriptor.kind == groups.FREE:
        return {"word": list(g.word)}
    if g.descriptor.kind == groups.FREE_ABELIAN:
        return {"vector": list(g.vector)}
    return {"position": g.position, "lamps": sorted(g.lamps)}


def element_from_json(desc, doc):
    if "word" in doc:
        return groups.GroupElement(desc, word=tuple(doc["word"]))
    if "vector" in doc:
        return groups.GroupElement(desc, vector=tuple(doc["vector"]))
    return groups.GroupElement(
        desc, position=doc["position"], lamps=frozenset(doc["lamps"])
    )


def load_gallery(path):
    with open(path) as fh:
        doc = json.load(fh)
    gallery = []
    for entry in doc["examples"]:
        rep = repcoc.rep_from_json(entry["rep"])
        support = [element_from_json(rep.group, e) for e in entry["measure"]["support"]]
        mu = spectralgap.FiniteMeasure(support, np.array(entry["measure"]["weights"]))
        kaz = [element_from_json(rep.group, e) for e in entry.get("kazhdan_set", [])]
        gallery.append(
            {"name": entry["name"], "rep": rep, "measure": mu, "kazhdan_set": kaz or None}
        )
    return gallery


def cmd_gap(args):
    gallery = load_gallery(args.gallery) if args.gallery else builtin_gallery()
    run = Run(args, {"gallery": args.gallery or "builtin"})
    reports = {}
    for entry in gallery:
        report = spectralgap.gap_norm(
            entry["rep"], entry["measure"], kazhdan_set=entry.get("kazhdan_set")
        )
        reports[entry["name"]] = report.to_json()
    _write_json(run.path("gap_report.json"), reports)
    run.finish()
    return EXIT_OK


def cmd_harmonize(args):
    gallery = {e["name"]: e for e in builtin_gallery()}
    if args.example not in gallery and args.example != "gapless":
        raise ValidationError(
            f"unknown example {args.example!r}; choose from "
            f"{sorted(gallery) + ['gapless']}"
        )
    run = Run(args, {"example": args.example})
    if args.example == "gapless":
        # identity representation: pi(mu) = I on everything, no gap
        z = groups.GroupDescriptor(groups.FREE_ABELIAN, 1)
        rep = repcoc.trivial_rep(z, 2)
        c = repcoc.CocycleSpec(
            rep, repcoc.HOMOMORPHISM, values={1: repcoc.SparseVector({0: 1.0})}
        )
        mu = spectralgap.FiniteMeasure([z.generator(1)], np.array([1.0]))
    else:
        entry = gallery[args.example]
        rep = entry["rep"]
        mu = entry["measure"]
        rng = np.random.default_rng(args.seed)
        values = {
            i: repcoc.SparseVector.from_dense(rng.standard_normal(rep.dim))
            for i in range(1, rep.group.rank + 1)
        }
        c = repcoc.CocycleSpec(rep, repcoc.GENERATOR_VALUES, values=values)
    x1, b_k = spectralgap.harmonize(c, mu)
    residual = float(np.linalg.norm(spectralgap.cocycle_on_measure(b_k, mu)))
    _write_json(
        run.path("harmonize.json"),
        {"example": args.example, "x1": list(map(float, x1)), "residual": residual},
    )
    run.finish()
    return EXIT_OK


def cmd_ode(args):
    space = radialode.RankOneSpace(args.field, positive_int("--n", args.n, 2))
    forcing = parse_forcing(args.forcing)
    r_max = float(args.rmax)
    step = float(args.step)
    if r_max <= 0:
        raise ValidationError("--rmax must be positive")
    if step <= 0:
        raise ValidationError("--step must be positive")
    run = Run(
        args,
        {"field": args.field, "n": args.n, "forcing": args.forcing,
         "rmax": r_max, "step": step},
    )
    sol = radialode.solve_psi(space, forcing, r_max, step)
    _write_csv(run.path("ode.csv"), "r,psi,phi", zip(sol.r, sol.psi, sol.phi))
    slope = None
    if r_max >= 50:
        try:
            slope = radialode.growth_exponent(sol)
        except radialode.OdeError:
            slope = None
    _write_json(
        run.path("ode.json"),
        {
            "field": args.field,
            "n": args.n,
            "m1": space.m1,
            "m2": space.m2,
            "psi_at_rmax": sol.psi_at_rmax,
            "predicted_limit": sol.predicted_limit,
            "growth_slope": slope,
        },
    )
    if args.plot:
        from . import reporting

        reporting.plot_ode(sol, run.path("ode.png"))
    run.finish()
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and dispatch
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="cocyclelab")
    parser.add_argument("--config", help="flat key=value file merged under flags")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", default="out")
        sp.add_argument("--plot", action="store_true", help="render PNG figures")

    sp = sub.add_parser("walk", help="sample random walks, estimate the escape rate")
    sp.add_argument("--group", default="free:2")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--walks", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_walk)

    sp = sub.add_parser("compress", help="fit the compression exponent")
    sp.add_argument("--group", default="free:2")
    sp.add_argument("--cocycle", default="haagerup")
    sp.add_argument("--samples", type=int, default=50000)
    sp.add_argument("--rmin", type=int, default=10)
    sp.add_argument("--rmax", type=int, default=10**4)
    sp.add_argument("--p", type=float, default=2.0)
    common(sp)
    sp.set_defaults(func=cmd_compress)

    sp = sub.add_parser("markov", help="Markov-type ratio test")
    sp.add_argument("--group", default="free:2")
    sp.add_argument("--cocycle", default="haagerup")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--nmax", type=int, default=100)
    sp.add_argument("--samples", type=int, default=2000)
    common(sp)
    sp.set_defaults(func=cmd_markov)

    sp = sub.add_parser("eta", help="build the eta comparison witness")
    sp.add_argument("--group", default="free:2")
    sp.add_argument("--f", default="sqrt")
    sp.add_argument("--h", default="linear")
    sp.add_argument("--samples", type=int, default=5000)
    sp.add_argument("--rmax", type=int, default=1000)
    common(sp)
    sp.set_defaults(func=cmd_eta)

    sp = sub.add_parser("moduli", help="moduli of convexity and smoothness")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--grid", type=int, default=40)
    common(sp)
    sp.set_defaults(func=cmd_moduli)

    sp = sub.add_parser("renorm", help="invariant orbit-sup renorming demo")
    sp.add_argument("--diag", default="2,1")
    sp.add_argument("--order", type=int, default=8)
    common(sp)
    sp.set_defaults(func=cmd_renorm)

    sp = sub.add_parser("gap", help="spectral-gap gallery reports")
    sp.add_argument("--gallery", help="JSON gallery path (default: builtin)")
    common(sp)
    sp.set_defaults(func=cmd_gap)

    sp = sub.add_parser("harmonize", help="harmonize a cocycle against a measure")
    sp.add_argument("--example", default="f2_orthogonal_6d")
    common(sp)
    sp.set_defaults(func=cmd_harmonize)

    sp = sub.add_parser("ode", help="solve the radial equation")
    sp.add_argument("--field", default="H")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--forcing", default="const:1")
    sp.add_argument("--rmax", type=float, default=20.0)
    sp.add_argument("--step", type=float, default=1e-3)
    common(sp)
    sp.set_defaults(func=cmd_ode)

    return parser


def _merge_config(parser, args, argv):
    """Apply key=value config entries to arguments not set on the command
    line (explicit flags win)."""
    if not args.config:
        return args
    explicit = {a.split("=", 1)[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    with open(args.config) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key in explicit or not hasattr(args, key):
                continue
            current = getattr(args, key)
            if isinstance(current, bool):
                setattr(args, key, value.strip().lower() in ("1", "true", "yes"))
            elif isinstance(current, int):
                setattr(args, key, int(value))
            elif isinstance(current, float):
                setattr(args, key, float(value))
            else:
                setattr(args, key, value.strip())
    return args


def run(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _merge_config(parser, args, argv)
        return args.func(args)
    except (
        ValidationError,
        groups.GroupError,
        repcoc.RepError,
        comp.CompressionError,
        bm.ModuliError,
        spectralgap.GapError,
        radialode.OdeError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except spectralgap.NoSpectralGap as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSAL


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
