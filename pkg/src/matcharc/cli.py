"""Command-line drivers.

Subcommands: ``evolve`` (monitored-circuit ensembles), ``page`` (late-time
cut-entropy profiles vs doping), ``mastereq`` (arc-length steady state),
``collapse`` (finite-size scaling fit), ``gates selftest``, and ``oracle``
(analytic tables).  Every CSV starts with '#' comment lines that embed the
manifest hash; the hash covers only the deterministic inputs (command,
resolved flags, seed), so reruns are byte-identical regardless of worker
count or wall-clock.

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence,
4 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__, analytic, gates, stats
from .engine import CircuitConfig, default_workers, run_ensemble


def _manifest(command: str, params: dict, seed: int) -> dict:
    det = {"command": command, "params": params, "seed": seed,
           "version": __version__}
    blob = json.dumps(det, sort_keys=True).encode()
    det["hash"] = hashlib.sha256(blob).hexdigest()[:16]
    return det


def _write_csv(path, comments, header, rows, manifest):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# manifest_hash=%s\n" % manifest["hash"])
        for c in comments:
            fh.write("# %s\n" % c)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_manifest(path, manifest, metrics):
    out = dict(manifest)
    out["metrics"] = metrics
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_commented_csv(path):
    """Returns (comments dict, list of row dicts) of a '#'-headed CSV."""
    comments = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    comments[k.strip()] = v.strip()
                continue
            parts = line.split(",")
            if header is None:
                header = parts
            else:
                rows.append(dict(zip(header, parts)))
    return comments, rows


_SUBPARSERS: dict = {}


def _apply_config_file(args, parser):
    """Fill flags still at their parser default from a key=value file."""
    if not getattr(args, "config", None):
        return args
    parser = _SUBPARSERS.get(args.command, parser)
    overrides = {}
    with open(args.config, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                k, v = line.split("=", 1)
            else:
                k, v = line.split(None, 1)
            overrides[k.strip().replace("-", "_")] = v.strip()
    for key, raw in overrides.items():
        if not hasattr(args, key):
            raise ValueError("unknown config key %r" % key)
        if getattr(args, key) != parser.get_default(key):
            continue  # explicit flag wins
        default = parser.get_default(key)
        if isinstance(default, bool):
            val = raw.lower() in ("1", "true", "yes")
        elif isinstance(default, int):
            val = int(raw)
        elif isinstance(default, float):
            val = float(raw)
        elif isinstance(default, list):
            val = [float(x) for x in raw.split(",")]
        else:
            val = raw
        setattr(args, key, val)
    return args


# ---------------------------------------------------------------------------


def cmd_evolve(args) -> int:
    cfg = CircuitConfig(
        n=args.n, depth=args.depth, p=args.p, eta=args.eta, beta=args.beta,
        backend=args.backend, cuts=args.cuts,
        record=args.record_every if args.record_every else "auto")
    params = {"n": args.n, "depth": args.depth, "p": args.p, "eta": args.eta,
              "beta": args.beta, "backend": args.backend, "cuts": args.cuts,
              "shots": args.shots, "record_every": args.record_every,
              "config_fingerprint": cfg.fingerprint()}
    man = _manifest("evolve", params, args.seed)
    t0 = time.time()
    series = run_ensemble(cfg, args.seed, args.shots, workers=args.workers)
    wall = time.time() - t0
    mean, std, err = series.mean, series.std, series.stderr
    nng = series.mean_nng
    rows = []
    for ti, t in enumerate(series.times):
        for ci, cut in enumerate(series.cuts):
            rows.append([int(t), int(cut),
                         repr(float(mean[ti, ci])), repr(float(std[ti, ci])),
                         repr(float(err[ti, ci])), series.count,
                         repr(float(nng[ti]))])
    comments = ["n=%d" % args.n, "p=%s" % repr(args.p),
                "eta=%s" % repr(args.eta), "beta=%s" % repr(args.beta),
                "backend=%s" % args.backend, "seed=%d" % args.seed]
    _write_csv(args.out, comments,
               ["t", "cut", "mean_S", "std_S", "stderr_S", "shots",
                "n_ng_mean"], rows, man)
    gates_total = cfg.total_gates * args.shots
    _write_manifest(args.out + ".manifest.json", man, {
        "wall_s": wall, "gates_per_s": gates_total / max(wall, 1e-9),
        "meas_per_s": cfg.depth * cfg.n * cfg.p * args.shots / max(wall, 1e-9),
        "workers": args.workers if args.workers else default_workers()})
    print("evolve: wrote %s (%d rows, %.1fs)" % (args.out, len(rows), wall))
    return 0


def cmd_page(args) -> int:
    n = args.n
    depth = args.depth_multiple * n
    etas = args.eta
    params = {"n": n, "etas": etas, "beta": args.beta,
              "depth_multiple": args.depth_multiple, "shots": args.shots}
    man = _manifest("page", params, args.seed)
    t0 = time.time()
    analytic_pc = [float(x) for x in analytic.page_curve_cg(n)]

    def final_profile(eta, beta):
        cfg = CircuitConfig(n=n, depth=depth, p=0.0, eta=eta, beta=beta,
                            cuts="all", record=(depth - 1,))
        s = run_ensemble(cfg, args.seed, args.shots, workers=args.workers)
        return s.mean[-1], s.stderr[-1]

    # empirical fully generic (q = 1) reference
    ref_mean, _ = final_profile(1.0, 0.0)
    rows = []
    for eta in etas:
        m, e = final_profile(eta, args.beta)
        for i in range(1, n):
            rows.append([i, repr(float(eta)), repr(float(m[i - 1])),
                         repr(float(e[i - 1])), repr(analytic_pc[i]),
                         repr(float(ref_mean[i - 1]))])
    comments = ["n=%d" % n, "beta=%s" % repr(args.beta),
                "depth=%d" % depth, "seed=%d" % args.seed,
                "clifford_ref=empirical q=1 run, same shots"]
    _write_csv(args.out, comments,
               ["i", "eta", "mean_S", "stderr_S", "page_cg", "clifford_ref"],
               rows, man)
    _write_manifest(args.out + ".manifest.json", man,
                    {"wall_s": time.time() - t0})
    print("page: wrote %s" % args.out)
    return 0


def cmd_mastereq(args) -> int:
    params = {"p": args.p, "L": args.L, "tol": args.tol,
              "max_iter": args.max_iter}
    man = _manifest("mastereq", params, 0)
    t0 = time.time()
    dist = analytic.steady_state(args.p, M=args.L, tol=args.tol,
                                 max_iter=args.max_iter)
    k = 2 * np.pi * np.arange(args.L // 2 + 1) / args.L
    closed = analytic.steady_state_momentum(args.p, k)
    iterated_k = np.fft.rfft(dist.P)
    sup = float(np.max(np.abs(iterated_k - closed)))
    tail = analytic.tail_coefficient(dist)
    rows = []
    for l in range(args.L):
        rows.append(["length", l, repr(float(dist.P[l])), ""])
    for j in range(len(k)):
        rows.append(["momentum", repr(float(k[j])),
                     repr(float(closed[j])),
                     repr(float(iterated_k[j].real))])
    for n in (64, 128, 256, 512, 1024):
        if 2 * n <= args.L:
            rows.append(["entropy", n,
                         repr(analytic.entropy_from_lengths(dist, n)), ""])
    comments = ["p=%s" % repr(args.p), "L=%d" % args.L,
                "iterations=%d" % dist.iterations,
                "supnorm_iterated_vs_closed=%s" % repr(sup),
                "tail_coefficient=%s" % repr(tail),
                "tail_predicted=%s" % repr(
                    analytic.expected_tail_coefficient(args.p))]
    _write_csv(args.out, comments, ["kind", "x", "value", "value2"],
               rows, man)
    _write_manifest(args.out + ".manifest.json", man,
                    {"wall_s": time.time() - t0,
                     "iterations": dist.iterations})
    print("mastereq: p=%g tail=%.4f (predicted %.4f) supnorm=%.3g"
          % (args.p, tail, analytic.expected_tail_coefficient(args.p), sup))
    return 0


def cmd_collapse(args) -> int:
    ps, ns, ss, errs = [], [], [], []
    for path in args.input:
        comments, rows = _read_commented_csv(path)
        n = int(comments["n"])
        p = float(comments["p"])
        final_t = max(int(r["t"]) for r in rows)
        half = [r for r in rows
                if int(r["t"]) == final_t and int(r["cut"]) == n // 2]
        if len(half) != 1:
            raise ValueError("no unique final half-cut row in %s" % path)
        ps.append(p)
        ns.append(n)
        ss.append(float(half[0]["mean_S"]))
        errs.append(float(half[0]["stderr_S"]))
    man = _manifest("collapse", {"inputs": sorted(args.input),
                                 "pc_grid": args.pc_grid,
                                 "nu_grid": args.nu_grid,
                                 "bootstrap": args.bootstrap}, 0)
    pc_grid = np.arange(args.pc_grid[0], args.pc_grid[1] + 1e-12,
                        args.pc_grid[2])
    nu_grid = np.arange(args.nu_grid[0], args.nu_grid[1] + 1e-12,
                        args.nu_grid[2])
    res = stats.scaling_collapse(ps, ns, ss, errs, pc_grid, nu_grid,
                                 n_boot=args.bootstrap)
    out = {"pc": res.pc, "nu": res.nu, "a": res.a, "cost": res.cost,
           "pc_ci": list(res.pc_ci), "nu_ci": list(res.nu_ci),
           "locally_optimal": res.locally_optimal, "meta": res.meta,
           "hyperparameters": {"pc_grid": args.pc_grid,
                               "nu_grid": args.nu_grid,
                               "bootstrap": args.bootstrap},
           "manifest_hash": man["hash"]}
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    xs = (np.array(ps) - res.pc) * np.array(ns, dtype=float) ** (1 / res.nu)
    ys = np.array(ss) - res.a * np.log(ns)
    rows = [[repr(float(x)), repr(float(y)), repr(float(p)), int(n)]
            for x, y, p, n in sorted(zip(xs, ys, ps, ns))]
    _write_csv(args.out + ".coords.csv", [],
               ["x", "y", "p", "n"], rows, man)
    print("collapse: p_c=%.4f nu=%.3f a=%.3f cost=%.3g" %
          (res.pc, res.nu, res.a, res.cost))
    return 0


def cmd_gates(args) -> int:
    if args.action != "selftest":
        raise ValueError("unknown gates action %r" % args.action)
    report = gates.selftest(np.random.default_rng(args.seed),
                            n_uniform=args.samples)
    ok = True
    for key, val in sorted(report.items()):
        if isinstance(val, bool):
            print("%-32s %s" % (key, "pass" if val else "FAIL"))
            ok = ok and val
        else:
            print("%-32s %s" % (key, val))
    if not ok:
        raise AssertionError("gate selftest failed")
    return 0


def cmd_oracle(args) -> int:
    man = _manifest("oracle-" + args.table, vars_without(args, "func"), 0)
    if args.table == "page":
        pc = analytic.page_curve_cg(args.n)
        rows = [[i, str(pc[i]), repr(float(pc[i]))]
                for i in range(args.n + 1)]
        _write_csv(args.out, ["n=%d" % args.n],
                   ["i", "mean_S_exact", "mean_S_float"], rows, man)
    elif args.table == "growth":
        rows = [[t, repr(float(analytic.mean_entropy_unitary(t)))]
                for t in range(1, args.tmax + 1)]
        _write_csv(args.out, [], ["t", "mean_S_halfchain"], rows, man)
    elif args.table == "mastereq":
        k = np.linspace(0, np.pi, args.points)
        vals = analytic.steady_state_momentum(args.p, k[1:])
        rows = [[repr(0.0), repr(1.0)]] + [
            [repr(float(ki)), repr(float(v))] for ki, v in zip(k[1:], vals)]
        _write_csv(args.out, ["p=%s" % repr(args.p)], ["k", "P_k"], rows, man)
    print("oracle %s: wrote %s" % (args.table, args.out))
    return 0


def vars_without(args, *skip):
    skip = set(skip) | {"config"}
    return {k: v for k, v in vars(args).items()
            if k not in skip and not k.startswith("_") and not callable(v)}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="matcharc")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value file; flags override")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", default="out.csv")

    p = sub.add_parser("evolve", help="monitored-circuit entropy time series")
    _SUBPARSERS["evolve"] = p
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--shots", type=int, default=100)
    p.add_argument("--backend", choices=["tableau", "arc"],
                   default="tableau")
    p.add_argument("--cuts", default="half")
    p.add_argument("--record-every", type=int, default=0,
                   help="record every k-th layer (0 = automatic)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("page", help="late-time cut-entropy profile vs doping")
    _SUBPARSERS["page"] = p
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eta", type=float, nargs="+", required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--depth-multiple", type=int, default=5)
    p.add_argument("--shots", type=int, default=100)
    p.set_defaults(func=cmd_page)

    p = sub.add_parser("mastereq", help="arc-length steady state")
    _SUBPARSERS["mastereq"] = p
    common(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--L", type=int, default=4096)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200000)
    p.set_defaults(func=cmd_mastereq)

    p = sub.add_parser("collapse", help="finite-size scaling collapse")
    _SUBPARSERS["collapse"] = p
    common(p)
    p.add_argument("--input", nargs="+", required=True,
                   help="evolve CSVs, one per (p, N)")
    p.add_argument("--pc-grid", type=float, nargs=3,
                   metavar=("LO", "HI", "STEP"), default=[0.1, 0.5, 0.01])
    p.add_argument("--nu-grid", type=float, nargs=3,
                   metavar=("LO", "HI", "STEP"), default=[0.6, 2.5, 0.1])
    p.add_argument("--bootstrap", type=int, default=50)
    p.set_defaults(func=cmd_collapse)

    p = sub.add_parser("gates", help="gate-ensemble self-tests")
    p.add_argument("action", choices=["selftest"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=200000)
    p.set_defaults(func=cmd_gates, config=None)

    p = sub.add_parser("oracle", help="analytic tables as CSV")
    po = p.add_subparsers(dest="table", required=True)
    q = po.add_parser("page")
    q.add_argument("--n", type=int, default=64)
    q.add_argument("--out", default="oracle_page.csv")
    q.set_defaults(func=cmd_oracle, config=None)
    q = po.add_parser("growth")
    q.add_argument("--tmax", type=int, default=400)
    q.add_argument("--out", default="oracle_growth.csv")
    q.set_defaults(func=cmd_oracle, config=None)
    q = po.add_parser("mastereq")
    q.add_argument("--p", type=float, default=0.1)
    q.add_argument("--points", type=int, default=256)
    q.add_argument("--out", default="oracle_mastereq.csv")
    q.set_defaults(func=cmd_oracle, config=None)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        args = _apply_config_file(args, ap)
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print("non-convergence: %s" % exc, file=sys.stderr)
        return 3
    except AssertionError as exc:
        print("invariant violation: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
