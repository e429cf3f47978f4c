"""Independent oracles: Poisson closed forms for one particle, an exact
uniformized Markov chain on a truncated state space, and Monte Carlo for TASEP
on the integers and on a ring."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.stats import poisson

from .errors import InvalidInput, Unsupported
from .multipoint import ObservationSet
from .symfunc import ParticleConfig

MAX_STATES = 5_000_000


def poisson_joint(b: Sequence[int], t: Sequence[float]) -> float:
    """P(Po(t_1) >= b_1, ..., Po(t_m) >= b_m) for one unit-rate Poisson process."""
    if any(t2 < t1 for t1, t2 in zip(t, t[1:])):
        raise InvalidInput("times must be sorted")
    if all(x <= 0 for x in b):
        return 1.0
    tmax = max(t)
    K = int(tmax + 12 * math.sqrt(tmax + 1) + 40)
    dist = np.zeros(K)
    dist[0] = 1.0
    prev = 0.0
    for bb, tt in zip(b, t):
        inc = poisson.pmf(np.arange(K), tt - prev)
        dist = np.convolve(dist, inc)[:K]
        dist[: max(bb, 0)] = 0.0
        prev = tt
    return float(math.fsum(dist))


def poisson_tail(b: int, t: float) -> float:
    """P(Po(t) >= b)."""
    return 1.0 if b <= 0 else float(poisson.sf(b - 1, t))


# exact chain ----------------------------------------------------------------------

@dataclass
class TruncationCertificate:
    K: int
    tail_bound: float
    rate: float
    steps: int
    series_tail: float

    @property
    def total(self) -> float:
        return self.tail_bound + self.series_tail

    def to_dict(self) -> dict:
        return {"K": self.K, "tail_bound": self.tail_bound, "rate": self.rate,
                "steps": self.steps, "series_tail": self.series_tail, "total": self.total}


def _enumerate_states(Y: ParticleConfig, K: int, L: int | None) -> list[tuple[int, ...]]:
    ys = Y.positions
    N = len(ys)
    states = []

    def rec(i, upper, cur):
        if i == N:
            if L is None or cur[0] - cur[-1] <= L - 1:
                states.append(tuple(cur))
            return
        for x in range(ys[i], upper + 1):
            rec(i + 1, x - 1, cur + [x])
        return

    # particle i never passes particle i-1, and particle 1 stays below y_1 + K
    rec(0, ys[0] + K, [])
    return states


def _generator(states, L: int | None):
    index = {s: n for n, s in enumerate(states)}
    rows, cols = [], []
    out_rate = np.zeros(len(states))
    for n, s in enumerate(states):
        N = len(s)
        for i in range(N):
            nxt = s[i] + 1
            if i > 0 and nxt == s[i - 1]:
                continue
            if i == 0 and L is not None and nxt == s[-1] + L:
                continue
            out_rate[n] += 1.0
            new = s[:i] + (nxt,) + s[i + 1:]
            target = index.get(new)
            if target is not None:
                rows.append(target)
                cols.append(n)
    return rows, cols, out_rate


def ctmc_exact(Y: ParticleConfig, obs: ObservationSet, tol: float = 1e-10,
               L: int | None = None, K: int | None = None,
               return_certificate: bool = False):
    """Joint probability by uniformization on {x_1 <= y_1 + K}.

    The distribution is propagated to t_1, states violating event 1 are
    removed, then propagated to t_2, and so on.  Mass leaving the truncated
    space is lost, which the certificate bounds by P(Po(t_max) > K).
    """
    if Y.N > 4:
        raise Unsupported("exact chain limited to N <= 4")
    if tol < 1e-14:
        raise InvalidInput("tol too small for double precision")
    obs.check(Y)
    tmax = max(obs.t)
    if K is None:
        K = 1
        while poisson.sf(K, tmax) > tol / 2:
            K += 1
    states = _enumerate_states(Y, K, L)
    if len(states) > MAX_STATES:
        raise Unsupported(f"state space of {len(states)} exceeds {MAX_STATES}")
    rows, cols, out_rate = _generator(states, L)
    lam = float(Y.N)
    n = len(states)
    # uniformized transition matrix acting on column distributions
    P = sparse.csr_matrix((np.full(len(rows), 1.0 / lam), (rows, cols)), shape=(n, n))
    P = P + sparse.diags(1.0 - out_rate / lam)
    p = np.zeros(n)
    p[states.index(Y.positions)] = 1.0
    arr = np.array(states)
    prev = 0.0
    steps = 0
    series_tail = 0.0
    for k, a, t in obs.triples():
        dt = t - prev
        if dt > 0:
            mu = lam * dt
            nmax = int(mu + 12 * math.sqrt(mu) + 30)
            weights = poisson.pmf(np.arange(nmax + 1), mu)
            series_tail += float(poisson.sf(nmax, mu))
            acc = weights[0] * p
            cur = p
            for j in range(1, nmax + 1):
                cur = P @ cur
                acc = acc + weights[j] * cur
            p = acc
            steps += nmax
        p = np.where(arr[:, k - 1] >= a, p, 0.0)
        prev = t
    cert = TruncationCertificate(K, float(poisson.sf(K, tmax)), lam, steps, series_tail)
    val = float(math.fsum(p))
    return (val, cert) if return_certificate else val


# Monte Carlo --------------------------------------------------------------------------

def _mc_chunk(Y, obs, rng, size, L):
    N = Y.N
    X = np.tile(np.array(Y.positions, dtype=np.int64), (size, 1))
    T = np.zeros(size)
    ok = np.ones(size, dtype=bool)
    tmax = obs.t[-1]
    recorded = np.zeros((len(obs.t), size), dtype=bool)
    active = np.arange(size)
    while active.size:
        Tn = T[active] + rng.exponential(1.0 / N, active.size)
        for l, (k, a, t) in enumerate(obs.triples()):
            hit = (T[active] <= t) & (t < Tn)
            idx = active[hit]
            ok[idx] &= X[idx, k - 1] >= a
            recorded[l, idx] = True
        T[active] = Tn
        live = Tn <= tmax
        act = active[live]
        pick = rng.integers(0, N, act.size)
        pos = X[act, pick]
        target = pos + 1
        ahead = np.where(pick > 0, X[act, np.maximum(pick - 1, 0)], np.iinfo(np.int64).max)
        if L is not None:
            ahead = np.where(pick == 0, X[act, N - 1] + L, ahead)
        move = target != ahead
        X[act[move], pick[move]] = target[move]
        active = act
    assert recorded.all()
    return ok


def mc_joint(Y: ParticleConfig, obs: ObservationSet, seed: int = 0, samples: int = 10**6,
             L: int | None = None, chunk: int = 2**17) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of the joint event.

    Global exponential clock at rate N, uniform particle choice, blocked jumps
    rejected.  Each chunk of samples draws from its own spawned substream, so the
    estimate depends only on (seed, samples, chunk).
    """
    obs.check(Y)
    if L is not None and Y.positions[0] - Y.positions[-1] > L - 1:
        raise InvalidInput("initial configuration does not fit on the ring")
    seqs = np.random.SeedSequence(seed).spawn((samples + chunk - 1) // chunk)
    hits = 0
    done = 0
    for ss in seqs:
        size = min(chunk, samples - done)
        hits += int(np.count_nonzero(_mc_chunk(Y, obs, np.random.default_rng(ss), size, L)))
        done += size
    p = hits / samples
    return p, math.sqrt(max(p * (1 - p), 1e-300) / samples)
