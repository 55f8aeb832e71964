"""Command-line front end.

Subcommands: ``place``, ``deliver``, ``verify``, ``rate``, ``sweep``และ
``optimize-nr``.  System parameters come from a plain-text config file of
``key = value`` lines (keys: K, N, t, M, gamma, N_r, scheme; M may be an
exact fraction like ``12/7``) and can be overridden on the command line.
Rate-style commands emit CSV with the fixed header below.  Exit status is
0 on success and 2 when verification fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from fractions import Fraction

from .analysis import (
    SCHEMES,
    average_rate,
    best_tiered_rate,
    monte_carlo_average,
    optimize_uncached,
    zipf,
)
from .delivery import build_schedule
from .general import (
    enumerate_decomposable,
    pool_capacity,
    solve_decompositions_exact,
    solve_decompositions_greedy,
    assemble_schedule,
)
from .oracle import conventional_schedule, simulate_and_decode
from .placement import LibraryConfig, build_placement, classify_demand, export_placement

CSV_HEADER = "scheme,K,N,t,M,gamma,N_r,avg_rate_num,avg_rate_den,avg_rate_float,runtime_ms"

_CONFIG_KEYS = {"K": int, "N": int, "t": int, "M": Fraction, "gamma": float,
                "N_r": int, "scheme": str}


def read_config(path: str) -> dict:
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, _, val = line.partition("=")
            elif ":" in line:
                key, _, val = line.partition(":")
            else:
                raise ValueError(f"cannot parse config line: {raw.rstrip()}")
            key, val = key.strip(), val.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = _CONFIG_KEYS[key](val)
    return values


def _settings(args: argparse.Namespace) -> dict:
    values = read_config(args.config) if args.config else {}
    for key in _CONFIG_KEYS:
        arg = getattr(args, key, None)
        if arg is not None:
            values[key] = _CONFIG_KEYS[key](arg)
    values.setdefault("N_r", 0)
    values.setdefault("gamma", 0.0)
    values.setdefault("t", 2)
    for key in ("K", "N", "M"):
        if key not in values:
            raise SystemExit(f"missing required setting {key!r} (config file or flag)")
    return values


def _placement(values: dict) -> "LibraryConfig":
    cfg = LibraryConfig.fit(values["K"], values["N"], values["t"], values["M"],
                            values["N_r"], values["gamma"])
    return build_placement(cfg)


def _parse_demand(text: str, K: int) -> list[int]:
    demand = [int(x) for x in text.split(",")]
    if len(demand) != K:
        raise SystemExit(f"demand must list {K} file ids")
    return demand


def _build(values: dict, placement, demand: list[int], scheme: str):
    cls = classify_demand(demand, placement)
    if scheme == "cl210" or scheme == "cl21":
        return build_schedule(placement, cls)
    if scheme == "conventional":
        return conventional_schedule(placement, cls)
    if scheme in ("cl_t_exact", "cl_t_greedy"):
        dec = enumerate_decomposable(cls, values["K"], values["t"])
        cap = pool_capacity(values["K"], values["t"])
        solve = (solve_decompositions_exact if scheme == "cl_t_exact"
                 else solve_decompositions_greedy)
        return assemble_schedule(placement, cls, solve(dec, cls, cap))
    raise SystemExit(f"scheme {scheme!r} does not build explicit schedules")


def _default_scheme(values: dict) -> str:
    return values.get("scheme") or ("cl210" if values["t"] == 2 else "cl_t_exact")


def _csv_row(report) -> str:
    p = report.params
    return (f"{report.scheme},{p['K']},{p['N']},{p['t']},{p['M']},{p['gamma']},"
            f"{p['N_r']},{report.average.numerator},{report.average.denominator},"
            f"{float(report.average):.10g},{report.runtime_ms:.3f}")


def cmd_place(args: argparse.Namespace) -> int:
    values = _settings(args)
    placement = _placement(values)
    text = export_placement(placement)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_deliver(args: argparse.Namespace) -> int:
    values = _settings(args)
    placement = _placement(values)
    demand = _parse_demand(args.demand, values["K"])
    scheme = _default_scheme(values)
    schedule = _build(values, placement, demand, scheme)
    sys.stdout.write(schedule.dump())
    print(f"# scheme={scheme} messages={len(schedule.messages)} "
          f"zero_files={schedule.zero_level_unicasts} "
          f"rate={schedule.rate.numerator}/{schedule.rate.denominator}", file=sys.stderr)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    values = _settings(args)
    placement = _placement(values)
    scheme = _default_scheme(values)
    lo, _, hi = args.seeds.partition("..")
    seeds = range(int(lo), int(hi or lo) + 1)
    demands: list[list[int]] = []
    if args.demand:
        demands.append(_parse_demand(args.demand, values["K"]))
    if args.random_demands:
        import random as _random

        rng = _random.Random(args.random_seed)
        for _ in range(args.random_demands):
            demands.append([rng.randint(1, values["N"]) for _ in range(values["K"])])
    if not demands:
        raise SystemExit("verify needs --demand and/or --random-demands")
    failed = 0
    for demand in demands:
        schedule = _build(values, placement, demand, scheme)
        for seed in seeds:
            verdict = simulate_and_decode(placement, schedule, demand, seed)
            status = "ok" if verdict.ok else "FAIL"
            print(f"demand={','.join(map(str, demand))} seed={seed} {status}")
            if not verdict.ok:
                failed += 1
                sys.stderr.write(verdict.report())
    return 2 if failed else 0


def cmd_rate(args: argparse.Namespace) -> int:
    values = _settings(args)
    scheme = values.get("scheme")
    if not scheme:
        raise SystemExit("rate needs scheme (config key or --scheme)")
    report = average_rate(scheme, K=values["K"], N=values["N"], M=values["M"],
                          gamma=values["gamma"], t=values["t"], N_r=values["N_r"])
    print(CSV_HEADER)
    print(_csv_row(report))
    if args.monte_carlo:
        estimate = monte_carlo_average(scheme, K=values["K"], N=values["N"],
                                       M=values["M"], gamma=values["gamma"],
                                       t=values["t"], N_r=values["N_r"],
                                       samples=args.monte_carlo)
        exact = float(report.average)
        print(f"# monte-carlo estimate over {args.monte_carlo} samples: "
              f"{estimate:.6f} (analytic {exact:.6f})", file=sys.stderr)
        if abs(estimate - exact) > max(0.05 * exact, 0.05):
            sys.stderr.write("# monte-carlo cross-check FAILED\n")
            return 2
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    values = _settings(args)
    gammas = ([float(x) for x in args.gamma_list.split(",")]
              if args.gamma_list else [values["gamma"]])
    if args.M_range:
        lo, hi, step = (Fraction(x) for x in args.M_range.split(":"))
        caches = []
        m = lo
        while m <= hi:
            caches.append(m)
            m += step
    else:
        caches = [values["M"]]
    schemes = args.schemes.split(",") if args.schemes else ["cl210", "naive_ms",
                                                            "naive_ms_removal"]
    print(CSV_HEADER)
    for gamma in gammas:
        model = zipf(values["N"], gamma)
        for M in caches:
            for scheme in schemes:
                start = time.perf_counter()
                if scheme == "clcd_best":
                    t_best, n_r, report = best_tiered_rate(
                        K=values["K"], N=values["N"], M=M, gamma=gamma, model=model)
                    report.params.update({"t": t_best, "N_r": n_r})
                elif scheme in ("cl210", "cl_t_exact", "cl_t_greedy", "conventional"):
                    n_r, report = optimize_uncached(
                        K=values["K"], N=values["N"], t=values["t"], M=M,
                        gamma=gamma, scheme=scheme, model=model)
                else:
                    report = average_rate(scheme, K=values["K"], N=values["N"], M=M,
                                          gamma=gamma, t=values["t"],
                                          N_r=values["N_r"], model=model)
                report = dataclasses.replace(
                    report, runtime_ms=(time.perf_counter() - start) * 1e3)
                print(_csv_row(report), flush=True)
    return 0


def cmd_optimize_nr(args: argparse.Namespace) -> int:
    values = _settings(args)
    scheme = values.get("scheme") or ("cl210" if values["t"] == 2 else "cl_t_exact")
    n_r, report = optimize_uncached(K=values["K"], N=values["N"], t=values["t"],
                                    M=values["M"], gamma=values["gamma"], scheme=scheme)
    print(CSV_HEADER)
    print(_csv_row(report))
    return 0


def _add_common(parser: argparse.ArgumentParser, with_gamma: bool = True) -> None:
    parser.add_argument("--config", help="config file of key = value lines")
    parser.add_argument("--K", type=int)
    parser.add_argument("--N", type=int)
    parser.add_argument("--t", type=int)
    parser.add_argument("--M", type=str, help="cache size in file units, e.g. 12/7")
    if with_gamma:
        parser.add_argument("--gamma", type=float)
    parser.add_argument("--N-r", dest="N_r", type=int)
    parser.add_argument("--scheme", choices=SCHEMES + ("clcd_best",))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xorcast",
                                     description="tiered cache placement and XOR "
                                                 "multicast delivery analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("place", help="build a placement and print its records")
    _add_common(p)
    p.add_argument("--out", help="write records to a file instead of stdout")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("deliver", help="build and dump a delivery schedule")
    _add_common(p)
    p.add_argument("--demand", required=True, help="comma-separated file ids, one per user")
    p.set_defaults(func=cmd_deliver)

    p = sub.add_parser("verify", help="replay schedules through the decoder")
    _add_common(p)
    p.add_argument("--demand")
    p.add_argument("--random-demands", type=int, default=0)
    p.add_argument("--random-seed", type=int, default=0)
    p.add_argument("--seeds", default="0..2", help="payload seed range a..b")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rate", help="average delivery rate of one scheme")
    _add_common(p)
    p.add_argument("--monte-carlo", type=int, default=0,
                   help="also cross-check by sampling this many demand vectors")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("sweep", help="rate table over gamma and cache-size grids")
    _add_common(p, with_gamma=False)
    p.add_argument("--gamma", help="comma-separated gamma values", dest="gamma_list")
    p.add_argument("--M-range", dest="M_range", help="lo:hi:step cache sizes")
    p.add_argument("--schemes", help="comma-separated scheme list")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize-nr", help="best uncached-tier size for a config")
    _add_common(p)
    p.set_defaults(func=cmd_optimize_nr)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
