"""Statistical model checking: Monte-Carlo estimates with Student-t intervals.

Runs are simulated in batches.  Run ``i`` uses the seed
``run_seed(master, i)``, so the sample of every run is fixed by the master
seed alone and aggregation by run index makes results independent of the
number of worker processes.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from scipy import stats

from pebc.checker import CheckedModel, check_model
from pebc.queries import ExpectedAtEnd, ProbAtEnd, ProbReachWithin, QueryEvaluator, describe
from pebc.rng import ALGORITHM, run_seed
from pebc.simulator import DEADLOCK, STEP_BOUND, RunConfig, Simulator, Trace


@dataclass
class SmcConfig:
    alpha: float = 0.05
    delta: float = 0.01
    seed: int = 0
    max_runs: int = 100_000
    batch: int = 500
    jobs: int = 1
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.batch < 2:
            raise ValueError("batch must be at least 2")
        if self.max_runs < 2:
            raise ValueError("max_runs must be at least 2")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")


@dataclass
class Estimate:
    query: str
    mean: float
    half_width: float
    confidence: float
    runs: int
    seed: int
    wall_time: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def interval(self) -> tuple:
        return (self.mean - self.half_width, self.mean + self.half_width)

    def contains(self, x) -> bool:
        lo, hi = self.interval
        return lo <= float(x) <= hi

    def to_json(self, timing: bool = True) -> dict:
        d = {
            "query": self.query,
            "mean": self.mean,
            "half_width": self.half_width,
            "confidence": self.confidence,
            "runs": self.runs,
            "seed": self.seed,
            "wall_time": self.wall_time if timing else 0.0,
            "metadata": self.metadata,
        }
        return d


def eval_query(cm: CheckedModel, trace: Trace, q, evaluator: Optional[QueryEvaluator] = None) -> float:
    """Value of ``q`` on a finished, recorded trace."""
    qe = evaluator or QueryEvaluator(cm, q)
    if isinstance(q, ProbReachWithin):
        for i, s in enumerate(trace.states()):
            if i > q.k:
                break
            if qe.holds(s):
                return 1.0
        return 0.0
    if isinstance(q, ProbAtEnd):
        return 1.0 if qe.holds(trace.final) else 0.0
    return float(qe.number(trace.final))


class _Runner:
    """Simulates single runs and returns ``(value, truncated, steps)``."""

    def __init__(self, cm: CheckedModel, q, master: int, max_steps: int):
        self.cm = cm
        self.q = q
        self.master = master
        self.max_steps = max_steps
        self.sim = Simulator(cm)
        self.qe = QueryEvaluator(cm, q)

    def __call__(self, index: int):
        seed = run_seed(self.master, index)
        q = self.q
        if isinstance(q, ProbReachWithin):
            if self.qe.holds(self.cm.initial):
                return 1.0, False, 0
            if q.k == 0:
                return 0.0, False, 0
            hit = []

            def seen(i, s):
                if i > 0 and self.qe.holds(s):
                    hit.append(i)
                    return True
                return False

            tr = self.sim.run(RunConfig(seed=seed, max_steps=q.k, record=False), observer=seen)
            return (1.0 if hit else 0.0), False, tr.length
        tr = self.sim.run(RunConfig(seed=seed, max_steps=self.max_steps, record=False))
        final = tr.final
        v = 1.0 if (isinstance(q, ProbAtEnd) and self.qe.holds(final)) else (
            0.0 if isinstance(q, ProbAtEnd) else float(self.qe.number(final))
        )
        return v, tr.reason == STEP_BOUND, tr.length

    def many(self, indices):
        return [self(i) for i in indices]


# worker-process state, set by the pool initialiser
_WORKER: Optional[_Runner] = None


def _init_worker(model, q, master, max_steps):
    global _WORKER
    _WORKER = _Runner(check_model(model), q, master, max_steps)


def _work(indices):
    return _WORKER.many(indices)


def t_half_width(samples, alpha: float) -> float:
    n = len(samples)
    if n < 2:
        return math.inf
    mean = math.fsum(samples) / n
    var = math.fsum((x - mean) ** 2 for x in samples) / (n - 1)
    if var == 0:
        return 0.0
    return float(stats.t.ppf(1 - alpha / 2, n - 1)) * math.sqrt(var / n)


def estimate(cm: CheckedModel, q, config: SmcConfig = SmcConfig(), samples_out: Optional[list] = None) -> Estimate:
    """Estimate ``q`` until the half-width reaches ``delta`` or ``max_runs`` runs.

    The interval is recomputed after each batch of ``config.batch`` runs.
    """
    t0 = time.perf_counter()
    samples: list = []
    truncated = 0
    steps = 0
    jobs = config.jobs
    pool = None
    runner = None
    if jobs > 1:
        pool = ProcessPoolExecutor(
            max_workers=jobs,
            initializer=_init_worker,
            initargs=(cm.model, q, config.seed, config.max_steps),
        )
    else:
        runner = _Runner(cm, q, config.seed, config.max_steps)
    try:
        half = math.inf
        while len(samples) < config.max_runs:
            start = len(samples)
            stop = min(start + config.batch, config.max_runs)
            idx = list(range(start, stop))
            if pool is None:
                results = runner.many(idx)
            else:
                size = max(1, math.ceil(len(idx) / (jobs * 4)))
                chunks = [idx[i : i + size] for i in range(0, len(idx), size)]
                results = [r for part in pool.map(_work, chunks) for r in part]
            for v, trunc, n in results:
                samples.append(v)
                truncated += trunc
                steps += n
            half = t_half_width(samples, config.alpha)
            if half <= config.delta:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    n = len(samples)
    mean = math.fsum(samples) / n
    if samples_out is not None:
        samples_out.extend(samples)
    return Estimate(
        query=describe(q),
        mean=mean,
        half_width=half,
        confidence=1 - config.alpha,
        runs=n,
        seed=config.seed,
        wall_time=time.perf_counter() - t0,
        metadata={
            "alpha": config.alpha,
            "delta": config.delta,
            "batch": config.batch,
            "max_runs": config.max_runs,
            "max_steps": config.max_steps,
            "truncated_runs": truncated,
            "mean_steps": steps / n,
            "rng": ALGORITHM,
            "converged": half <= config.delta,
        },
    )


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("PEBC_JOBS", "1")))
    except ValueError:
        return 1


def write_samples_csv(path, samples) -> None:
    with open(path, "w") as fh:
        fh.write("run,value\n")
        for i, v in enumerate(samples):
            fh.write(f"{i},{v!r}\n")


def histogram(samples, bins: int = 20) -> str:
    """Two-column ``bin-centre count`` text, readable by gnuplot."""
    lo, hi = min(samples), max(samples)
    if lo == hi:
        return f"{lo!r} {len(samples)}\n"
    width = (hi - lo) / bins
    counts = [0] * bins
    for x in samples:
        counts[min(int((x - lo) / width), bins - 1)] += 1
    return "".join(f"{lo + (i + 0.5) * width!r} {c}\n" for i, c in enumerate(counts))


__all__ = [
    "SmcConfig",
    "Estimate",
    "estimate",
    "eval_query",
    "ExpectedAtEnd",
    "ProbAtEnd",
    "ProbReachWithin",
    "DEADLOCK",
]
