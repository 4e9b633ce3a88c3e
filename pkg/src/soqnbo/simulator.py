"""Discrete-event simulation of the backordering network.

Every clock is exponential, so the next event is drawn from the race of all
active clocks: one draw for the holding time and one for which clock fired.
At FCFS nodes the head of the line completes; at processor-sharing nodes a
uniformly chosen resident completes, which for nu(n) = mu n is exactly the
infinite-server dynamics. Resources are tracked individually so per-task
delays can be measured directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import UnknownNode
from .netmodel import CONSTANT, FCFS, SoqnModel, check_routing

DAY = 86_400.0


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    warmup: float | None = None
    replications: int = 1
    seed: int = 0
    metrics: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.warmup is None:
            object.__setattr__(self, "warmup", 0.1 * self.horizon)
        if not self.horizon > self.warmup >= 0:
            raise ValueError("need horizon > warmup >= 0")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass
class SimEstimate:
    mean: dict[str, float]
    std: dict[str, float]
    replications: int
    per_replication: list[dict[str, float]] = field(default_factory=list)
    conservation: list[dict[str, int]] = field(default_factory=list)

    def stderr(self, metric: str) -> float:
        return self.std[metric] / math.sqrt(self.replications)

    def __getitem__(self, metric: str) -> float:
        return self.mean[metric]


@numba.njit(cache=True)
def _push(q, head, cnt, j, cap, res):
    q[j, (head[j] + cnt[j]) % cap] = res
    cnt[j] += 1


@numba.njit(cache=True)
def _pop_at(q, head, cnt, j, cap, pos):
    a = (head[j] + pos) % cap
    h = head[j]
    res = q[j, a]
    q[j, a] = q[j, h]
    head[j] = (h + 1) % cap
    cnt[j] -= 1
    return res


@numba.njit(cache=True)
def _sample_row(cum_route, i, k):
    v = np.random.random()
    dst = 0
    while dst < k - 1 and v >= cum_route[i, dst]:
        dst += 1
    return dst


@numba.njit(cache=True)
def _run(seed, lam, n_res, cum_route, rate_tab, is_fcfs, tag_mask, horizon, warmup):
    np.random.seed(seed)
    k = rate_tab.shape[0]  # nodes 0..J
    cap = max(n_res, 1)
    q = np.zeros((k, cap), dtype=np.int64)
    head = np.zeros(k, dtype=np.int64)
    cnt = np.zeros(k, dtype=np.int64)
    for res in range(n_res):
        _push(q, head, cnt, 0, cap, res)

    task_arr = np.zeros(cap)
    node_arr = np.zeros(cap)
    tagged = np.zeros(cap, dtype=np.bool_)

    ext = np.zeros(1024)
    ext_head = 0
    ext_cnt = 0

    area_ex = 0.0
    area_n = np.zeros(k)
    area_busy = np.zeros(k)
    deps = np.zeros(k)
    wait_sum = np.zeros(k)
    wait_cnt = np.zeros(k)
    wex_sum = 0.0
    wex_cnt = 0.0
    to_sum = 0.0
    to_cnt = 0.0
    arrivals = 0
    completed = 0
    violations = 0
    rates = np.zeros(k)

    t = 0.0
    while True:
        total = lam
        for j in range(1, k):
            rates[j] = rate_tab[j, cnt[j]]
            total += rates[j]
        if total <= 0.0:
            t_next = horizon
        else:
            t_next = t - math.log(1.0 - np.random.random()) / total
        stop = t_next >= horizon
        if stop:
            t_next = horizon
        lo = t if t > warmup else warmup
        if t_next > lo:
            dt = t_next - lo
            area_ex += dt * ext_cnt
            for j in range(k):
                area_n[j] += dt * cnt[j]
                if cnt[j] > 0:
                    area_busy[j] += dt
        t = t_next
        if stop:
            break
        counting = t >= warmup

        moving = -1
        target = 0
        u = np.random.random() * total
        if u < lam:
            arrivals += 1
            if cnt[0] > 0:
                moving = _pop_at(q, head, cnt, 0, cap, 0)
                task_arr[moving] = t
                tagged[moving] = False
                target = _sample_row(cum_route, 0, k)
                if counting:
                    deps[0] += 1
                    wex_cnt += 1
            else:
                if ext_cnt == ext.shape[0]:
                    grown = np.zeros(2 * ext.shape[0])
                    for i in range(ext_cnt):
                        grown[i] = ext[(ext_head + i) % ext.shape[0]]
                    ext = grown
                    ext_head = 0
                ext[(ext_head + ext_cnt) % ext.shape[0]] = t
                ext_cnt += 1
        else:
            u -= lam
            src = k - 1
            for j in range(1, k):
                if u < rates[j]:
                    src = j
                    break
                u -= rates[j]
            if is_fcfs[src]:
                res = _pop_at(q, head, cnt, src, cap, 0)
                if cnt[src] > 0:
                    # next in line starts service now
                    nxt = q[src, head[src]]
                    if counting:
                        wait_sum[src] += t - node_arr[nxt]
                        wait_cnt[src] += 1
                    if tag_mask[src] and not tagged[nxt]:
                        tagged[nxt] = True
                        if counting:
                            to_sum += t - task_arr[nxt]
                            to_cnt += 1
            else:
                pos = int(np.random.random() * cnt[src])
                if pos >= cnt[src]:
                    pos = cnt[src] - 1
                res = _pop_at(q, head, cnt, src, cap, pos)
            if counting:
                deps[src] += 1
            dst = _sample_row(cum_route, src, k)
            if dst != 0:
                moving = res
                target = dst
            else:
                completed += 1
                if ext_cnt > 0:
                    a = ext[ext_head]
                    ext_head = (ext_head + 1) % ext.shape[0]
                    ext_cnt -= 1
                    task_arr[res] = a
                    tagged[res] = False
                    if counting:
                        deps[0] += 1
                        wex_sum += t - a
                        wex_cnt += 1
                    moving = res
                    target = _sample_row(cum_route, 0, k)
                else:
                    _push(q, head, cnt, 0, cap, res)

        if moving >= 0:
            _push(q, head, cnt, target, cap, moving)
            node_arr[moving] = t
            if (not is_fcfs[target]) or cnt[target] == 1:
                if counting:
                    wait_cnt[target] += 1
                if tag_mask[target] and not tagged[moving]:
                    tagged[moving] = True
                    if counting:
                        to_cnt += 1
                        to_sum += t - task_arr[moving]

        total_res = 0
        for j in range(k):
            total_res += cnt[j]
        if total_res != n_res:
            violations += 1

    return (area_ex, area_n, area_busy, deps, wait_sum, wait_cnt, wex_sum, wex_cnt,
            to_sum, to_cnt, arrivals, completed, ext_cnt, cnt[0], violations)


def _kernel_inputs(model: SoqnModel):
    r = check_routing(model.routing)
    k = model.J + 1
    cum = np.cumsum(r, axis=1)
    for i in range(k):
        last = int(np.flatnonzero(r[i] > 0)[-1])
        cum[i, last:] = 1.0
    rate_tab = np.zeros((k, model.N + 1))
    if model.N > 0:
        rate_tab[1:, 1:] = model.rate_table()
    is_fcfs = np.array([False] + [nd.discipline == FCFS for nd in model.nodes])
    return cum, rate_tab, is_fcfs


def _seeds(seed: int, reps: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(reps)
    return [int(c.generate_state(1)[0]) for c in children]


def _replication_metrics(model: SoqnModel, raw, span: float) -> dict[str, float]:
    (area_ex, area_n, area_busy, deps, wait_sum, wait_cnt, wex_sum, wex_cnt,
     to_sum, to_cnt, *_rest) = raw
    lam = model.arrival_rate
    out = {
        "l_ex": area_ex / span,
        "w_ex": wex_sum / wex_cnt if wex_cnt else math.nan,
        "to_task": to_sum / to_cnt if to_cnt else math.nan,
    }
    out["w_ex_little"] = out["l_ex"] / lam if lam > 0 else math.nan
    for j, name in enumerate(model.names):
        th = deps[j] / span
        out[f"th_{name}"] = th
        out[f"l_{name}"] = area_n[j] / span
        out[f"idle_{name}"] = 1.0 - area_busy[j] / span
        out[f"w_{name}"] = area_n[j] / span / th if th > 0 else math.nan
        if j > 0:
            out[f"wait_{name}"] = wait_sum[j] / wait_cnt[j] if wait_cnt[j] else math.nan
    return out


def _tag_mask(model: SoqnModel, tag_nodes) -> np.ndarray:
    mask = np.zeros(model.J + 1, dtype=np.bool_)
    for node in tag_nodes:
        try:
            j = model.index(node)
        except ValueError:
            raise UnknownNode(node) from None
        if not 1 <= j <= model.J:
            raise UnknownNode(node)
        mask[j] = True
    return mask


def _simulate(model: SoqnModel, cfg: SimConfig, tag_nodes=()) -> SimEstimate:
    cum, rate_tab, is_fcfs = _kernel_inputs(model)
    mask = _tag_mask(model, tag_nodes)
    span = cfg.horizon - cfg.warmup
    per_rep, cons = [], []
    for s in _seeds(cfg.seed, cfg.replications):
        raw = _run(s, float(model.arrival_rate), int(model.N), cum, rate_tab, is_fcfs, mask,
                   float(cfg.horizon), float(cfg.warmup))
        metrics = _replication_metrics(model, raw, span)
        if cfg.metrics is not None:
            metrics = {m: metrics[m] for m in cfg.metrics}
        per_rep.append(metrics)
        arrivals, completed, ext_left, pool_left, violations = raw[10:]
        in_system = int(ext_left) + int(model.N - pool_left)
        cons.append({
            "arrivals": int(arrivals),
            "completed": int(completed),
            "in_system": in_system,
            "resource_violations": int(violations),
        })
    est = SimEstimate(mean={}, std={}, replications=cfg.replications,
                      per_replication=per_rep, conservation=cons)
    _summarise(est)
    return est


def simulate(model: SoqnModel, cfg: SimConfig) -> SimEstimate:
    """Replicated simulation; unstable models are simulated, not rejected."""
    return _simulate(model, cfg)


def simulate_turnover(model: SoqnModel, cfg: SimConfig, picking_nodes, service_rates=None) -> SimEstimate:
    """Simulation with every task tagged from arrival until its picking starts.

    ``to_task`` is the mean of that delay, ``wait_<node>`` the mean queueing
    delay in front of each station. When ``service_rates`` maps picking nodes
    to their rates, ``pick_wait_<node>`` = sojourn - 1/rate is added as a
    second, Little's-law based estimate of the picker wait.
    """
    picks = []
    for node in picking_nodes:
        try:
            j = model.index(node)
        except ValueError:
            raise UnknownNode(node) from None
        if not 1 <= j <= model.J:
            raise UnknownNode(node)
        nd = model.nodes[j - 1]
        if nd.rate.kind != CONSTANT or nd.discipline != FCFS:
            raise ValueError(f"picking node {node!r} must be a constant-rate FCFS station")
        picks.append(j)
    est = _simulate(model, SimConfig(cfg.horizon, cfg.warmup, cfg.replications, cfg.seed), picks)
    if service_rates:
        for node, rate in service_rates.items():
            name = model.names[model.index(node)]
            for rep in est.per_replication:
                rep[f"pick_wait_{name}"] = rep[f"w_{name}"] - 1.0 / rate
    if cfg.metrics is not None:
        est.per_replication = [{m: rep[m] for m in cfg.metrics} for rep in est.per_replication]
    _summarise(est)
    return est


def _summarise(est: SimEstimate) -> None:
    est.mean.clear()
    est.std.clear()
    for key in est.per_replication[0]:
        vals = np.array([rep[key] for rep in est.per_replication], dtype=float)
        est.mean[key] = float(np.mean(vals))
        est.std[key] = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
