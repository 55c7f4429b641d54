"""Monte-Carlo harness: success-rate sweeps and kernel statistics.

Instance i of a run with master seed S is generated from the integer seed
derived from SeedSequence(S, spawn_key=(i,)), so every record can be rebuilt
on its own from (family, params, master seed, index).
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import attacks as atk
from . import stats
from .qrc import QrcParams, build_qrc_instance
from .scheme import (IqpInstance, RedundancyMode, assemble_instance, generate_stabilizer,
                     sample_d_given_w)

DEFAULT_QRC_GRID = tuple(int(round(x)) for x in np.linspace(52, 155, 8))


def instance_seed(master: int, index: int) -> int:
    state = np.random.SeedSequence(master, spawn_key=(index,)).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("IQP_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable, jobs: Sequence, workers: int | None = None) -> list:
    """Order-preserving map over a process pool capped by IQP_THREADS."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


@dataclass
class ExperimentRecord:
    family: str
    n: int
    m: int
    g: int
    q: int | None
    m1: int
    d: int
    w: int
    attack: str
    cfg: dict
    outcome: str
    correct: bool
    iterations: int
    kernel_dim_min: int | None
    candidates_tested: int
    master_seed: int
    index: int
    instance_seed: int
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    FIELDS = ("family", "n", "m", "g", "q", "m1", "d", "w", "attack", "cfg", "outcome", "correct",
              "iterations", "kernel_dim_min", "candidates_tested", "master_seed", "index",
              "instance_seed", "wall_time", "extra")

    def as_row(self) -> dict:
        row = dataclasses.asdict(self)
        row["cfg"] = json.dumps(self.cfg, sort_keys=True)
        row["extra"] = json.dumps(self.extra, sort_keys=True)
        return row


def _record(inst: IqpInstance, rep: atk.AttackReport | None, attack: str, cfg: dict,
            master: int, index: int, seed: int, q=None) -> ExperimentRecord:
    p = inst.params
    if rep is None:
        outcome, correct, its, kmin, cand, wt = "skipped", False, 0, None, 0, 0.0
    else:
        outcome = rep.outcome
        correct = bool(rep.found and rep.secret == inst.secret)
        its, cand, wt = rep.iterations_used, rep.candidates_tested, rep.wall_time
        kmin = min(rep.kernel_dims) if rep.kernel_dims else None
    return ExperimentRecord(family=inst.family.value, n=p.n, m=p.m, g=p.g, q=q, m1=p.m1, d=p.d, w=p.w,
                            attack=attack, cfg=cfg, outcome=outcome, correct=correct, iterations=its,
                            kernel_dim_min=kmin, candidates_tested=cand, master_seed=master,
                            index=index, instance_seed=seed, wall_time=wt)


# sigmoid ---------------------------------------------------------------------


def _sigmoid_job(job):
    n, m, g, master, i, mode, attack, w = job
    seed = instance_seed(master, i)
    if w is None:
        inst = generate_stabilizer(n, m, g, seed=seed, redundancy_mode=mode)
    else:
        rng = np.random.default_rng(seed)
        m1, d = sample_d_given_w(n, m, g, w, rng)
        inst = assemble_instance(n, m, g, rng, mode, m1=m1, d=d, seed=seed)
    fn = atk.radical_attack if attack == "radical" else atk.radical_attack_doubly_even
    # g is public, so candidates of larger codimension are rejected
    rep = fn(inst.H, g_max=g)
    return _record(inst, rep, attack, {}, master, i, seed)


def run_sigmoid_experiment(n: int = 300, m: int = 360, g: int = 4, trials: int = 1000, seed: int = 0,
                           redundancy_mode=RedundancyMode.RANDOMIZED, attack: str = "radical",
                           w_values: Sequence[int] | None = None,
                           workers: int | None = None) -> list[ExperimentRecord]:
    """Radical Attack on fresh stabilizer instances, one record per instance.

    By default parameters follow the generator's own distribution.  With
    ``w_values`` the run is stratified instead: ``trials`` instances per listed
    excess width, with d drawn conditionally on m1 = w + g + m - n.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    mode = RedundancyMode(redundancy_mode).value
    if w_values is None:
        jobs = [(n, m, g, seed, i, mode, attack, None) for i in range(trials)]
    else:
        jobs = [(n, m, g, seed, a * trials + i, mode, attack, int(w))
                for a, w in enumerate(w_values) for i in range(trials)]
    return parallel_map(_sigmoid_job, jobs, workers)


def transition_w(bins: Sequence["BinSummary"]) -> float | None:
    """Excess width where the empirical success rate first crosses 1/2 (linear interpolation)."""
    for a, b in zip(bins, bins[1:]):
        if a.rate < 0.5 <= b.rate:
            return a.w + (0.5 - a.rate) * (b.w - a.w) / (b.rate - a.rate)
    return None


@dataclass
class BinSummary:
    w: int
    count: int
    successes: int
    rate: float
    theory: float
    region: tuple[int, int]
    accepted: bool


def summarize_by_w(records: Iterable[ExperimentRecord], alpha: float = 0.05) -> list[BinSummary]:
    """Success counts per excess width, tested against the simplified sigmoid."""
    by_w: dict[int, list[ExperimentRecord]] = {}
    for r in records:
        by_w.setdefault(r.w, []).append(r)
    out = []
    for w in sorted(by_w):
        rs = by_w[w]
        k = sum(r.correct for r in rs)
        r0 = rs[0]
        p0 = stats.success_theory_simple(w, r0.n, r0.m, r0.g)
        lo, hi = stats.umpu_binomial_region(len(rs), p0, alpha)
        out.append(BinSummary(w=w, count=len(rs), successes=k, rate=k / len(rs), theory=p0,
                              region=(lo, hi), accepted=lo <= k <= hi))
    return out


# QRC sweeps ------------------------------------------------------------------


QRC_ATTACKS = ("radical", "lazy-linearity", "double-meyer")


def _qrc_job(job):
    q, n, master, i, attacks, cfg_dict, union = job
    seed = instance_seed(master, i)
    inst = build_qrc_instance(QrcParams(q, n), seed=seed)
    cfg = atk.AttackConfig(**cfg_dict)
    recs = []
    solved = False
    for j, name in enumerate(attacks):
        if union and solved:
            recs.append(_record(inst, None, name, cfg_dict, master, i, seed, q))
            continue
        rng = np.random.default_rng([seed, j])
        if name == "radical":
            rep = atk.radical_attack(inst.H, g_max=inst.params.g)
        elif name == "radical-de":
            rep = atk.radical_attack_doubly_even(inst.H, g_max=inst.params.g)
        elif name == "lazy-linearity":
            rep = atk.lazy_linearity_attack(inst.H, cfg, rng)
        elif name == "double-meyer":
            rep = atk.double_meyer(inst.H, cfg, rng)
        elif name == "double-meyer-seeded":
            rep = atk.double_meyer(inst.H, cfg, rng, seeds=atk.radical_seeds(inst.H))
        else:
            raise ValueError(f"unknown attack {name!r}")
        rec = _record(inst, rep, name, cfg_dict, master, i, seed, q)
        solved = solved or rec.correct
        recs.append(rec)
    return recs


def run_qrc_sweep(q: int = 103, n_grid: Sequence[int] | None = None, attacks: Sequence[str] = QRC_ATTACKS,
                  per_point: int = 20, seed: int = 0, cfg: atk.AttackConfig | None = None,
                  union: bool = False, workers: int | None = None) -> list[ExperimentRecord]:
    """Run the selected attacks on fresh QRC instances at each width.

    With ``union`` an attack runs only when every earlier one failed, which is
    enough to decide whether the instance is covered by at least one of them.
    """
    if n_grid is None:
        p = QrcParams(q)
        n_grid = [int(round(x)) for x in np.linspace(p.r, p.q + p.r, 8)]
    cfg = cfg or atk.AttackConfig()
    cfg_dict = {k: v for k, v in dataclasses.asdict(cfg).items() if k != "seed"}
    jobs = []
    for a, n in enumerate(n_grid):
        for i in range(per_point):
            # distinct instance index per grid point
            jobs.append((q, int(n), seed, a * per_point + i, tuple(attacks), cfg_dict, union))
    return [r for recs in parallel_map(_qrc_job, jobs, workers) for r in recs]


def summarize_sweep(records: Iterable[ExperimentRecord]) -> list[dict]:
    """Per-width success rate of each attack plus the union over attacks."""
    table: dict[int, dict] = {}
    solved: dict[tuple[int, int], bool] = {}
    for r in records:
        row = table.setdefault(r.n, {"n": r.n, "q": r.q})
        if r.outcome != "skipped":
            ok, tot = row.get(r.attack, (0, 0))
            row[r.attack] = (ok + r.correct, tot + 1)
        solved[(r.n, r.index)] = solved.get((r.n, r.index), False) or r.correct
    out = []
    for n in sorted(table):
        row = table[n]
        flat = {"n": n, "q": row["q"]}
        for k, v in row.items():
            if isinstance(v, tuple):
                flat[f"{k}_success"] = v[0]
                flat[f"{k}_runs"] = v[1]
        keys = [key for key in solved if key[0] == n]
        flat["union_success"] = sum(solved[k] for k in keys)
        flat["instances"] = len(keys)
        out.append(flat)
    return out


# kernel statistics -----------------------------------------------------------


def _kernel_job(job):
    q, n, master, i, k_values, probes = job
    seed = instance_seed(master, i)
    inst = build_qrc_instance(QrcParams(q, n), seed=seed)
    dense = atk._Dense(inst.H)
    rng = np.random.default_rng([seed, 1])
    rows = []
    for t in range(probes):
        d = rng.integers(0, 2, size=n, dtype=np.uint8)
        kg = atk.stacked_probe_kernel(dense, d[None, :]).cols
        kh = dense.kernel_dim_H_d(d)
        row = dict(q=q, n=n, m=2 * q, index=i, probe=t, instance_seed=seed, master_seed=master,
                   dim_ker_G=kg, dim_ker_H=kh, diff=kg - kh)
        for k in k_values:
            P = rng.integers(0, 2, size=(k, n), dtype=np.uint8)
            row[f"stacked_k{k}"] = atk.stacked_probe_kernel(dense, P).cols
        rows.append(row)
    return rows


def run_kernel_stats(q: int = 103, n_grid: Sequence[int] | None = None, k_values=(2, 3, 4),
                     probes: int = 20, seed: int = 0, instances: int = 5,
                     workers: int | None = None) -> list[dict]:
    """Probe-kernel dimensions on QRC instances; one row per (instance, probe)."""
    if n_grid is None:
        p = QrcParams(q)
        n_grid = [int(round(x)) for x in np.linspace(q + 8, p.q + p.r, 6)]
    jobs = [(q, int(n), seed, a * instances + i, tuple(k_values), probes)
            for a, n in enumerate(n_grid) for i in range(instances)]
    return [r for rows in parallel_map(_kernel_job, jobs, workers) for r in rows]


def summarize_kernel_stats(rows: Sequence[dict], k_values=(2, 3, 4)) -> dict:
    """Per-width means plus fits against n - m/2."""
    ns = sorted({r["n"] for r in rows})
    per_n = []
    for n in ns:
        rs = [r for r in rows if r["n"] == n]
        entry = dict(n=n, excess=n - rs[0]["m"] / 2,
                     dim_ker_G=float(np.mean([r["dim_ker_G"] for r in rs])),
                     dim_ker_H=float(np.mean([r["dim_ker_H"] for r in rs])),
                     diff=float(np.mean([r["diff"] for r in rs])))
        for k in k_values:
            key = f"stacked_k{k}"
            if key in rs[0]:
                entry[key] = float(np.mean([r[key] for r in rs]))
                entry[f"predicted_k{k}"] = 2.0 ** (-k + 1) * entry["excess"]
        per_n.append(entry)
    x = [e["excess"] for e in per_n]
    out = dict(per_n=per_n)
    if len(per_n) >= 2:
        out["slope_G"], out["intercept_G"] = stats.linear_fit(x, [e["dim_ker_G"] for e in per_n])
        out["slope_diff"], _ = stats.linear_fit(x, [e["diff"] for e in per_n])
    return out


# output ----------------------------------------------------------------------


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def rows_to_csv(rows: Sequence[dict], fields: Sequence[str] | None = None) -> str:
    buf = io.StringIO()
    if fields is None:
        fields = []
        for r in rows:
            fields += [k for k in r if k not in fields]
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in fields})
    return buf.getvalue()


def records_to_csv(records: Sequence[ExperimentRecord]) -> str:
    return rows_to_csv([r.as_row() for r in records], ExperimentRecord.FIELDS)


def write_csv(path, rows: Sequence[dict] | Sequence[ExperimentRecord]) -> None:
    if rows and isinstance(rows[0], ExperimentRecord):
        _atomic_write(path, records_to_csv(rows))
    else:
        _atomic_write(path, rows_to_csv(list(rows)))


def write_jsonl(path, rows) -> None:
    lines = []
    for r in rows:
        d = dataclasses.asdict(r) if isinstance(r, ExperimentRecord) else r
        lines.append(json.dumps(d, sort_keys=True, default=_json_default))
    _atomic_write(path, "".join(line + "\n" for line in lines))


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o))


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
