"""Exact values against plain forward-simulation averages.

For each small bundled instance, averages the query over --runs simulated
runs and reports the distance to the exact value in standard errors
(expected to stay within 3).
"""

import argparse
import math
import time

from pebc.checker import check_model, with_constants
from pebc.exact import analyse
from pebc.parser import load_model
from pebc.queries import make_query
from pebc.smc import SmcConfig, default_jobs, estimate

from _paths import model_path

CASES = [
    ("gear.peb", {}, "gear_retracted"),
    ("gear.peb", {}, "door_open"),
    ("gear.peb", {}, "cmd"),
    ("p2p.peb", {"N": 1, "K": 1}, "transmissions"),
    ("p2p.peb", {"N": 2, "K": 2}, "transmissions"),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--jobs", type=int, default=default_jobs())
    args = ap.parse_args()
    worst = 0.0
    for file, consts, query in CASES:
        model = load_model(model_path(file))
        cm = check_model(with_constants(model, consts) if consts else model)
        q = make_query(cm, query)
        exact, _ = analyse(cm, q)
        t0 = time.perf_counter()
        cfg = SmcConfig(seed=args.seed, max_runs=args.runs, batch=args.runs, delta=1e-12, jobs=args.jobs)
        samples = []
        est = estimate(cm, q, cfg, samples_out=samples)
        n = len(samples)
        sd = math.sqrt(math.fsum((x - est.mean) ** 2 for x in samples) / (n - 1))
        se = sd / math.sqrt(n)
        z = abs(est.mean - float(exact)) / se if se else (0.0 if est.mean == exact else math.inf)
        worst = max(worst, z)
        print(
            f"{file} {consts or ''} {query}: exact {float(exact):.6f} sim {est.mean:.6f} "
            f"se {se:.2e} z {z:.2f} ({time.perf_counter() - t0:.0f}s)"
        )
    print(f"largest z = {worst:.2f} ({'ok' if worst <= 3 else 'outside 3 standard errors'})")


if __name__ == "__main__":
    main()
