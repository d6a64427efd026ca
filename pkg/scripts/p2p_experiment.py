"""Peer-to-peer download: expected number of block transmissions.

Runs SMC on the full-size instance and, for small N and K, prints the exact
expectation next to a short SMC estimate.
"""

import argparse
import json
import time

from pebc.checker import check_model, with_constants
from pebc.exact import analyse, show_decimal
from pebc.parser import load_model
from pebc.queries import make_query
from pebc.smc import SmcConfig, default_jobs, estimate, histogram, write_samples_csv

from _paths import model_path


def instance(n, k):
    return check_model(with_constants(load_model(model_path("p2p.peb")), {"N": n, "K": k}))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--k", type=int, default=30)
    ap.add_argument("--runs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=default_jobs())
    ap.add_argument("--samples", help="CSV of per-run values")
    ap.add_argument("--histogram", help="two-column histogram file")
    ap.add_argument("--small", action="store_true", help="also tabulate exact values for small instances")
    args = ap.parse_args()

    cm = instance(args.n, args.k)
    q = make_query(cm, "transmissions")
    samples = []
    cfg = SmcConfig(seed=args.seed, max_runs=args.runs, batch=args.runs, jobs=args.jobs)
    est = estimate(cm, q, cfg, samples_out=samples)
    print(json.dumps(est.to_json()))
    print(f"transmissions per block: {est.mean / (args.n * args.k):.3f}")
    if args.samples:
        write_samples_csv(args.samples, samples)
    if args.histogram:
        with open(args.histogram, "w") as fh:
            fh.write(histogram(samples, 30))
    if args.small:
        print("N K states exact smc")
        for n, k in [(1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2), (3, 3)]:
            small = instance(n, k)
            qs = make_query(small, "transmissions")
            t0 = time.perf_counter()
            value, dtmc = analyse(small, qs)
            e = estimate(small, qs, SmcConfig(seed=args.seed, delta=0.05))
            print(
                f"{n} {k} {dtmc.n_states} {value} ~ {show_decimal(value)} "
                f"{e.mean:.3f}+-{e.half_width:.3f} ({time.perf_counter() - t0:.1f}s)"
            )


if __name__ == "__main__":
    main()
