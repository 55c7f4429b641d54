"""Command-line interface: generate, attack, verify, simulate, experiment.

Exit codes: 0 success (attack found a secret, verify accepted), 1 attack
failed or verify rejected, 2 usage, I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import attacks as atk
from . import experiments as exp
from . import formats as fmt
from . import scheme, sim, stats
from .qrc import InvalidPrime, QrcParams, build_qrc_instance

log = logging.getLogger("iqpsecret")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=exp._json_default) + "\n"


# generate --------------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.family == "stabilizer":
        if len(args.params) != 3:
            raise CliError("stabilizer needs N M G")
        n, m, g = args.params
        inst = scheme.generate_stabilizer(n, m, g, seed=args.seed, redundancy_mode=args.redundancy_mode)
    else:
        if len(args.params) not in (1, 2):
            raise CliError("qrc needs Q [N]")
        q = args.params[0]
        n = args.params[1] if len(args.params) == 2 else None
        inst = build_qrc_instance(QrcParams(q, n), seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fmt.write_matrix(out / "H.txt", inst.H)
    fmt.write_secret(out / "secret.txt", inst.secret)
    meta = dict(family=inst.family.value, seed=args.seed, params=inst.params.as_dict(),
                redundancy_mode=inst.construction.redundancy_mode)
    fmt.atomic_write_text(out / "meta.json", _dump(meta))
    print(f"wrote {inst.H.rows}x{inst.H.cols} instance to {out}")
    return EXIT_OK


# attack ----------------------------------------------------------------------


def _load_meta(args) -> dict | None:
    path = Path(args.meta) if args.meta else Path(args.matrix).with_name("meta.json")
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: {exc}") from None


def _config(args) -> atk.AttackConfig:
    return atk.AttackConfig(ambition=args.ambition, endurance=args.endurance,
                            g_th=args.gth if args.gth is not None else 1,
                            k=args.k, p=args.p, seed=args.seed)


def cmd_attack(args) -> int:
    H = fmt.read_any_matrix(args.matrix, bremner=args.import_bremner)
    cfg = _config(args)
    rng = np.random.default_rng(args.seed)
    name = args.attack
    meta = _load_meta(args)
    if name == "radical":
        rep = atk.radical_attack(H, g_max=args.gth)
    elif name == "radical-de":
        rep = atk.radical_attack_doubly_even(H, g_max=args.gth)
    elif name == "lazy-linearity":
        rep = atk.lazy_linearity_attack(H, cfg, rng)
    elif name == "double-meyer":
        seeds = atk.radical_seeds(H) if args.seeded else None
        rep = atk.double_meyer(H, cfg, rng, seeds=seeds)
    elif name == "hamming-razor":
        if meta is not None:
            params = scheme.InstanceParams(**{k: meta["params"][k] for k in ("n", "m", "g", "m1", "d")})
            try:
                lo, hi = atk.suggest_p(params)
                if not lo < args.p < hi:
                    log.warning("p=%.3f lies outside the suggested interval (%.4f, %.4f)", args.p, lo, hi)
            except atk.EmptyInterval as exc:
                log.warning("%s", exc)
        rep = atk.hamming_razor(H, cfg, rng, g_max=args.gth)
    elif name == "singleton-razor":
        trimmed, idx = atk.singleton_razor(H)
        print(_dump(dict(attack=name, singletons=idx.tolist(), rows_left=trimmed.rows)), end="")
        return EXIT_OK
    else:  # argparse restricts the choices
        raise CliError(f"unknown attack {name}")
    report = rep.to_dict()
    text = _dump(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        fmt.atomic_write_text(out / "report.json", text)
        if rep.found:
            fmt.write_secret(out / "secret.txt", rep.secret)
    sys.stdout.write(text)
    return EXIT_OK if rep.found else EXIT_FAIL


# verify / simulate -----------------------------------------------------------


def cmd_verify(args) -> int:
    secret = fmt.read_secret(args.secret)
    samples = fmt.read_samples(args.samples)
    if samples.shape[1] != secret.len:
        raise CliError(f"samples have n={samples.shape[1]}, secret has n={secret.len}")
    s = secret.to_array().astype(np.int64)
    zero = int(np.sum((samples.astype(np.int64) @ s) % 2 == 0))
    N = samples.shape[0]
    p0 = scheme.bias(args.g)
    lo, hi = stats.umpu_binomial_region(N, p0, args.alpha)
    ok = lo <= zero <= hi
    print(f"samples={N} orthogonal={zero} fraction={zero / N:.6f} expected={p0:.6f} "
          f"region=[{lo},{hi}] verdict={'accept' if ok else 'reject'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    H = fmt.read_any_matrix(args.matrix, bremner=args.import_bremner)
    dist = sim.simulate(H)
    idx = sim.sample_indices(dist, args.count, args.seed)
    text = fmt.emit_samples(sim.samples_to_array(idx, H.cols))
    if args.out:
        fmt.atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# experiment ------------------------------------------------------------------


def cmd_experiment(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p = args.params
    if args.name == "sigmoid":
        n, m, g = p if p else (300, 360, 4)
        trials = args.trials or (100_000 if args.full else 1000)
        w_values = [int(x) for x in args.w_values.split(",")] if args.w_values else None
        recs = exp.run_sigmoid_experiment(n, m, g, trials, args.seed, args.redundancy_mode,
                                          w_values=w_values)
        summary = [dict(w=b.w, count=b.count, successes=b.successes, rate=b.rate, theory=b.theory,
                        region_lo=b.region[0], region_hi=b.region[1], accepted=b.accepted)
                   for b in exp.summarize_by_w(recs)]
        exp.write_csv(out / "records.csv", recs)
        exp.write_jsonl(out / "records.jsonl", recs)
    elif args.name == "qrc-sweep":
        q = p[0] if p else 103
        per_point = args.trials or (100 if args.full else 20)
        attacks = tuple(args.attacks.split(",")) if args.attacks else exp.QRC_ATTACKS
        cfg = _config(args)
        recs = exp.run_qrc_sweep(q, None, attacks, per_point, args.seed, cfg, union=args.union)
        summary = exp.summarize_sweep(recs)
        exp.write_csv(out / "records.csv", recs)
        exp.write_jsonl(out / "records.jsonl", recs)
    elif args.name == "kernel-stats":
        q = p[0] if p else 103
        rows = exp.run_kernel_stats(q, probes=args.probes, seed=args.seed,
                                    instances=args.trials or 5)
        fits = exp.summarize_kernel_stats(rows)
        summary = fits["per_n"]
        fmt.atomic_write_text(out / "fits.json", _dump({k: v for k, v in fits.items() if k != "per_n"}))
        exp.write_csv(out / "records.csv", rows)
        exp.write_jsonl(out / "records.jsonl", rows)
    else:
        raise CliError(f"unknown experiment {args.name!r}")
    exp.write_csv(out / "summary.csv", summary)
    print(f"wrote {out / 'records.csv'} and {out / 'summary.csv'}")
    return EXIT_OK


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iqpsecret", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--ambition", type=int, default=8, help="kernel dimension threshold A")
        p.add_argument("--endurance", type=int, default=1000, help="round budget E")
        p.add_argument("--gth", type=int, default=None,
                       help="codimension threshold (probe attacks default to 1, others unbounded)")
        p.add_argument("--k", type=int, default=6, help="stacked probes per round")
        p.add_argument("--p", type=float, default=0.25, help="row deletion probability (razor)")
        p.add_argument("--redundancy-mode", default="randomized",
                       choices=[m.value for m in scheme.RedundancyMode])

    g = sub.add_parser("generate", help="generate an instance")
    g.add_argument("family", choices=["stabilizer", "qrc"])
    g.add_argument("params", type=int, nargs="+", help="N M G for stabilizer, Q [N] for qrc")
    g.add_argument("--out", required=True, help="output directory")
    common(g)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("attack", help="run an attack on a matrix file")
    a.add_argument("attack", choices=["radical", "radical-de", "lazy-linearity", "double-meyer",
                                      "hamming-razor", "singleton-razor"])
    a.add_argument("matrix")
    a.add_argument("--out", help="directory for report.json and secret.txt")
    a.add_argument("--meta", help="instance metadata JSON (default: meta.json next to the matrix)")
    a.add_argument("--seeded", action="store_true", help="double-meyer: add radical seeds")
    a.add_argument("--import-bremner", action="store_true",
                   help=f"read a header-less 0/1 table (compatibility parser v{fmt.BREMNER_FORMAT_VERSION})")
    common(a)
    a.set_defaults(func=cmd_attack)

    v = sub.add_parser("verify", help="test samples against a secret")
    v.add_argument("samples")
    v.add_argument("secret")
    v.add_argument("--g", type=int, required=True)
    v.add_argument("--alpha", type=float, default=0.05)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="sample a small circuit exactly")
    s.add_argument("matrix")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--import-bremner", action="store_true")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("experiment", help="run a Monte-Carlo experiment")
    e.add_argument("name", choices=["sigmoid", "qrc-sweep", "kernel-stats"])
    e.add_argument("params", type=int, nargs="*")
    e.add_argument("--trials", type=int, default=None)
    e.add_argument("--full", action="store_true", help="paper-scale sample sizes (hours)")
    e.add_argument("--out", required=True)
    e.add_argument("--w-values", help="sigmoid: comma-separated excess widths to stratify on")
    e.add_argument("--attacks", help="qrc-sweep: comma-separated attack names")
    e.add_argument("--union", action="store_true", help="qrc-sweep: stop at the first success")
    e.add_argument("--probes", type=int, default=20)
    common(e)
    e.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (fmt.FormatError, CliError, OSError, InvalidPrime, ValueError,
            scheme.ParameterExhaustion, scheme.SamplingExhaustion, sim.TooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
