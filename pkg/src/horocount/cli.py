"""Command-line front end: reproducible experiments with persisted reports.

Subcommands: ``constant`` (asymptotic counting constant), ``count``
(lift enumeration), ``volume`` (diagonal-measure quadrature), ``classify``
(limit-measure classifier) and ``selftest``.  Every run that writes an
output file also writes a JSON manifest holding the full parameter set,
seed, version and timestamps; rerunning a manifest reproduces every
deterministic output byte for byte.

Exit codes: 0 success, 2 validation error, 3 resource/consistency error,
64 unknown subcommand.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys
from dataclasses import asdict, dataclass, field

from . import __version__
from .partitions import make_partition

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3
EXIT_UNKNOWN = 64

_SUBCOMMANDS = ("constant", "count", "volume", "classify", "selftest")


def _fmt17(x: float) -> str:
    return f"{x:.17g}"


def _render_json(obj, indent: int = 0) -> str:
    """JSON with floats printed at 17 significant digits."""
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {_render_json(v, indent + 1)}'
            for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(f"{pad}  {_render_json(v, indent + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt17(obj)
    return json.dumps(obj)


@dataclass
class RunManifest:
    subcommand: str
    params: dict
    seed: int | None
    version: str
    started: str
    finished: str = ""
    outputs: list = field(default_factory=list)

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(_render_json(asdict(self)))
            fh.write("\n")


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("HOROCOUNT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _parse_blocks(text: str) -> list[int]:
    try:
        sizes = [int(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"cannot parse block sizes {text!r}") from exc
    return sizes


def _partition_from(args):
    return make_partition(args.n, _parse_blocks(args.blocks))


def _write_manifest_for(out_path: str, manifest: RunManifest) -> None:
    manifest.write(out_path + ".manifest.json")


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_constant(args) -> int:
    from . import constants as C

    part = _partition_from(args)
    cc = C.counting_constant(part)
    haar = C.c7(part)
    payload = {
        "n": part.n,
        "blocks": list(part.sizes),
        "p": float(cc.poly_exponent),
        "q": cc.exp_rate,
        "c": cc.coefficient,
        "components": {
            "C7": haar.c7,
            "C4": haar.c4,
            "C6": haar.c6,
            "volK": haar.vol_k,
            "volKBlocks": haar.vol_k_blocks,
            "volSL": C.vol_sl_mod(part.n),
            "volHor": C.vol_hor_quotient_slz(part),
            "pi0": C.pi0_stabilizer(part),
            "P_N": C.p_norm(part.n),
        },
    }
    text = _render_json(payload)
    if args.json:
        print(text)
    else:
        print(f"count(R) ~ c * R^p * exp(q R) for blocks {list(part.sizes)}:")
        print(f"  p = {_fmt17(float(cc.poly_exponent))}")
        print(f"  q = {_fmt17(cc.exp_rate)}")
        print(f"  c = {_fmt17(cc.coefficient)}")
    if args.out:
        manifest = RunManifest("constant", _args_dict(args), None, __version__, _now())
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        manifest.finished = _now()
        manifest.outputs = [args.out]
        _write_manifest_for(args.out, manifest)
    return EXIT_OK


def _cmd_count(args) -> int:
    from . import cosets as CS
    from .constants import asymptotic_count, counting_constant

    part = _partition_from(args)
    cc = counting_constant(part)
    started = _now()
    reports = []
    if args.method in ("bfs", "both"):
        reports.append(CS.enumerate_bfs(
            part, args.radius, margin=args.margin,
            max_depth=args.max_depth, max_states=args.max_states,
        ))
    if args.method in ("brute", "both"):
        reports.append(CS.enumerate_brute(
            part, args.radius, entry_bound=args.entry_bound,
            stabilize=args.stabilize,
        ))
    if args.method == "both":
        CS.check_brute_covers(reports[0], reports[1])
        if not CS.coset_sets_equal(reports[0], reports[1]):
            raise CS.InconsistencyError(
                "graph search and exhaustive scan disagree on the coset set"
            )
    rows = []
    for rep in reports:
        asym = asymptotic_count(cc, args.radius)
        rows.append({
            "R": args.radius,
            "count": rep.count,
            "asymptotic": asym,
            "ratio": rep.count / asym if asym > 0 else "",
            "method": rep.method,
            "margin": args.margin if rep.method == "bfs" else "",
            "depth": rep.params.get("max_depth", "") if rep.method == "bfs" else "",
            "seconds": rep.wall_time,
        })
        print(f"method={rep.method} R={_fmt17(args.radius)} count={rep.count} "
              f"({rep.wall_time:.2f}s)")
    if args.csv:
        _write_csv(args.csv, rows,
                   ["R", "count", "asymptotic", "ratio", "method", "margin",
                    "depth", "seconds"])
        manifest = RunManifest("count", _args_dict(args), None, __version__, started)
        manifest.finished = _now()
        manifest.outputs = [args.csv]
        _write_manifest_for(args.csv, manifest)
    return EXIT_OK


def _cmd_volume(args) -> int:
    from . import measure as M

    part = _partition_from(args)
    region = {"b+": "b+", "bc+": "bc+", "annulus": "annulus"}[args.region]
    method = "grid" if args.grid is not None else ("plain" if args.plain else "mc")
    started = _now()
    kwargs = dict(offset=args.offset, eps=args.eps, seed=args.seed,
                  threads=_threads(args))
    if method == "grid":
        kwargs["grid_step"] = args.grid
    res = M.mu_A_ball(part, args.radius, region, method,
                      budget=args.mc, **kwargs)
    print(f"region={res.region} method={res.method} estimate={_fmt17(res.estimate)} "
          f"error={_fmt17(res.standard_error)} samples={res.samples}")
    if args.csv:
        rows = [{
            "R": args.radius, "region": res.region, "method": res.method,
            "estimate": res.estimate, "error": res.standard_error,
            "samples": res.samples, "seed": args.seed,
        }]
        _write_csv(args.csv, rows,
                   ["R", "region", "method", "estimate", "error", "samples", "seed"])
        manifest = RunManifest("volume", _args_dict(args), args.seed,
                               __version__, started)
        manifest.finished = _now()
        manifest.outputs = [args.csv]
        _write_manifest_for(args.csv, manifest)
    return EXIT_OK


def _cmd_classify(args) -> int:
    from . import dynamics as D

    part = _partition_from(args)
    a_map = {"id": D.A_IDENTITY, "identity": D.A_IDENTITY,
             "inf": D.A_UNBOUNDED, "unbounded": D.A_UNBOUNDED}
    b_map = {"inf": D.B_TO_INFINITY, "infinity": D.B_TO_INFINITY,
             "to_infinity": D.B_TO_INFINITY,
             "one": D.B_CONSTANT_ONE, "constant_one": D.B_CONSTANT_ONE,
             "zero": D.B_TO_ZERO, "to_zero": D.B_TO_ZERO}
    if args.a_behavior:
        tokens = [t.strip() for t in args.a_behavior.split(",")]
    else:
        tokens = ["id"] * part.k0
    try:
        a_beh = tuple(a_map[t] for t in tokens)
    except KeyError as exc:
        raise ValueError(f"unknown a-behavior token {exc.args[0]!r}") from exc
    if args.b_behavior:
        btokens = [t.strip() for t in args.b_behavior.split(",")]
    else:
        btokens = ["one"] * (part.k0 - 1)
    if len(btokens) == part.k0 - 1:
        btokens.append("one")
    try:
        b_beh = tuple(b_map[t] for t in btokens)
    except KeyError as exc:
        raise ValueError(f"unknown b-behavior token {exc.args[0]!r}") from exc
    spec = D.CleanSequenceSpec(part, a_beh, b_beh)
    result = D.classify_limit(spec)
    print(_render_json(result.to_dict()))
    return EXIT_OK


def _cmd_selftest(args) -> int:
    failures = run_selftest(verbose=True)
    return EXIT_OK if failures == 0 else 1


def run_selftest(verbose: bool = True) -> int:
    """Smallest-scale pass over the acceptance checks; returns failure count."""
    import math

    import numpy as np

    from . import constants as C
    from . import cosets as CS
    from . import dynamics as D
    from . import measure as M
    from .decompose import height
    from .partitions import p_norm_squared

    checks = []

    def check(name, fn):
        try:
            ok = bool(fn())
        except Exception as exc:  # deliberate: report, do not crash the suite
            ok = False
            name = f"{name} [{type(exc).__name__}: {exc}]"
        checks.append((name, ok))

    p2 = make_partition(2, [1, 1])
    p3 = make_partition(3, [1, 1, 1])
    p21 = make_partition(3, [2, 1])

    def example_constants():
        for part in (p3, p21, p2):
            a = C.counting_constant(part).coefficient
            b = C.hardcoded_example_constant(part)
            if abs(a / b - 1.0) > 1e-12:
                return False
        return True

    check("example constants (dual path, 1e-12)", example_constants)
    check("P_N identity (N=1..50)", lambda: all(
        p_norm_squared(n) * 3 == n * (n - 1) * (n + 1) for n in range(1, 51)))
    check("Vol(SO_n) recursion vs product (n=1..12)", lambda: all(
        abs(C.vol_so(n) / C.vol_so_recursive(n) - 1.0) < 1e-12 for n in range(1, 13)))
    check("xi identity (N=2..8, 1e-9)", lambda: all(
        C.xi_identity_check(n) <= 1e-9 for n in range(2, 9)))

    def quick_decomposition():
        rng = np.random.default_rng(7)
        for _ in range(100):
            g = rng.normal(size=(3, 3))
            g /= abs(np.linalg.det(g)) ** (1 / 3)
            if np.linalg.det(g) < 0:
                g[:, 0] *= -1
            _, frame = height(g, p21)
            if np.abs(frame.reconstruct() - g).max() > 1e-9 * np.abs(g).max():
                return False
        h, _ = height(np.array([[1.0, 0.0], [1.0, 1.0]]), p2)
        return abs(h - math.log(2.0) / math.sqrt(2.0)) < 1e-9

    check("decomposition reconstruction + hand height", quick_decomposition)

    def quick_enumeration():
        bfs = CS.enumerate_bfs(p2, 1.5)
        brute = CS.enumerate_brute(p2, 1.5)
        return CS.coset_sets_equal(bfs, brute)

    check("enumeration oracle equivalence (N=2, R=1.5)", quick_enumeration)

    def quick_volume():
        res = M.mu_A_ball(p2, 3.0, "b+", "grid", grid_step=0.05)
        return abs(res.estimate / M.mu_n2_closed_form(3.0) - 1.0) < 1e-3

    check("volume quadrature (N=2 closed form, 0.1%)", quick_volume)

    def quick_classifier():
        full = D.classify_limit(D.CleanSequenceSpec(
            p2, (D.A_IDENTITY, D.A_IDENTITY), (D.B_TO_INFINITY, D.B_CONSTANT_ONE)))
        dead = D.classify_limit(D.CleanSequenceSpec(
            p2, (D.A_IDENTITY, D.A_IDENTITY), (D.B_TO_ZERO, D.B_CONSTANT_ONE)))
        return (full.nondivergent and full.block_roles == ("M",)
                and not dead.nondivergent)

    check("classifier (N=2 limit cases)", quick_classifier)

    def seed_stability():
        a = M.mu_A_ball(p2, 2.0, "b+", "mc", budget=50_000, seed=123)
        b = M.mu_A_ball(p2, 2.0, "b+", "mc", budget=50_000, seed=123)
        return a.estimate == b.estimate

    check("seed-pinned quadrature repeats bit-for-bit", seed_stability)

    failures = 0
    for name, ok in checks:
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}: {name}")
        failures += 0 if ok else 1
    if verbose:
        print(f"{len(checks) - failures}/{len(checks)} selftest checks passed")
    return failures


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _args_dict(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _write_csv(path: str, rows: list[dict], fieldnames: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({
                k: (_fmt17(v) if isinstance(v, float) else v)
                for k, v in row.items()
            })


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="horocount",
        description="Asymptotic constants and exact counts for horocycle lifts",
    )
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: HOROCOUNT_THREADS or CPU count)")
    sub = parser.add_subparsers(dest="subcommand")

    p = sub.add_parser("constant", help="asymptotic counting constant")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--blocks", type=str, required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_constant)

    p = sub.add_parser("count", help="enumerate lift cosets of height <= R")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--blocks", type=str, required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--method", choices=["bfs", "brute", "both"], default="bfs")
    p.add_argument("--margin", type=float, default=2.0)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--max-states", type=int, default=2_000_000)
    p.add_argument("--entry-bound", type=int, default=None)
    p.add_argument("--stabilize", action="store_true",
                   help="rerun the scan at doubled bounds until the count stabilizes")
    p.add_argument("--csv", type=str, default=None)
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("volume", help="quadrature of the diagonal measure")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--blocks", type=str, required=True)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--region", choices=["b+", "bc+", "annulus"], default="b+")
    p.add_argument("--mc", type=int, default=1_000_000,
                   help="Monte Carlo sample budget")
    p.add_argument("--grid", type=float, default=None,
                   help="grid step (switches to the trapezoid rule)")
    p.add_argument("--plain", action="store_true",
                   help="plain rejection sampling (slow oracle, small R)")
    p.add_argument("--offset", type=float, default=0.0, help="cone offset C for bc+")
    p.add_argument("--eps", type=float, default=None, help="annulus inner fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", type=str, default=None)
    p.set_defaults(func=_cmd_volume)

    p = sub.add_parser("classify", help="limit classification of a clean sequence")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--blocks", type=str, required=True)
    p.add_argument("--a-behavior", type=str, default=None,
                   help="comma list per block: id|inf")
    p.add_argument("--b-behavior", type=str, default=None,
                   help="comma list per proper prefix: inf|one|zero")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("selftest", help="run the acceptance checks at small scale")
    p.set_defaults(func=_cmd_selftest)

    return parser


def dispatch(argv: list[str]) -> int:
    """Parse and run; maps error classes to the documented exit codes."""
    from .cosets import InconsistencyError, ResourceLimitError

    tokens = [a for a in argv if not a.startswith("-")]
    if tokens and tokens[0] not in _SUBCOMMANDS:
        print(f"unknown subcommand: {tokens[0]}", file=sys.stderr)
        return EXIT_UNKNOWN
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0,) else EXIT_OK
    if not getattr(args, "subcommand", None):
        parser.print_help()
        return EXIT_VALIDATION
    try:
        return args.func(args)
    except (ResourceLimitError, InconsistencyError, MemoryError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, KeyError, NotImplementedError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def rerun_manifest(path: str) -> int:
    """Re-execute a run from its manifest; deterministic outputs reproduce."""
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    sub = manifest["subcommand"]
    params = manifest["params"]
    argv = [sub]
    for key, value in params.items():
        if key in ("subcommand",) or value in (None, False):
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    return dispatch(argv)


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
