"""Landing-gear figures: door and gear status at the end of the maneuver.

Prints the SMC estimates, the exact value of P(gear = retracted) and, with
--calibrate N, how often the exact value falls inside N independent intervals.
"""

import argparse
import json
import time

from pebc.checker import load_checked
from pebc.exact import analyse, show_decimal
from pebc.queries import make_query
from pebc.smc import SmcConfig, default_jobs, estimate

from _paths import model_path


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--delta", type=float, default=0.01)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--calibrate", type=int, default=0, metavar="N", help="master seeds 0..N-1")
    ap.add_argument("--jobs", type=int, default=default_jobs())
    args = ap.parse_args()

    cm = load_checked(model_path("gear.peb"))
    cfg = dict(alpha=args.alpha, delta=args.delta, jobs=args.jobs)
    for name in ("door_open", "gear_retracted"):
        est = estimate(cm, make_query(cm, name), SmcConfig(seed=args.seed, **cfg))
        print(json.dumps(est.to_json()))
    q = make_query(cm, "gear_retracted")
    exact, dtmc = analyse(cm, q)
    print(f"exact P(gear = retracted) = {exact} ~ {show_decimal(exact)} ({dtmc.n_states} states)")
    if args.calibrate:
        t0 = time.perf_counter()
        hits = sum(estimate(cm, q, SmcConfig(seed=s, **cfg)).contains(exact) for s in range(args.calibrate))
        print(f"coverage {hits}/{args.calibrate} at level {1 - args.alpha} ({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()
