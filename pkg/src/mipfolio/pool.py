"""Shared solution pool: feasible incumbents, partial candidates and LP snapshots.

Each section is an immutable tuple swapped under that section's lock, so
readers grab the current tuple without locking and never see a half-written
entry. Writers only contend with writers of the same section.
"""

from __future__ import annotations

import hashlib
import logging
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .lp import LpSnapshot
from .metrics import IncumbentTrace
from .model import FEAS_TOL, ProblemInstance, validate_solution, violation

logger = logging.getLogger(__name__)

FEASIBLE_CAPACITY = 20
PARTIAL_CAPACITY = 50
LP_CAPACITY = 4
KEY_DIGITS = 9

FEASIBLE, PARTIAL, LP = "feasible", "partial", "lp"


def cutoff_delta(z: float) -> float:
    return 1e-6 * max(1.0, abs(z))


def dedup_key(x) -> bytes:
    """Hash of the point rounded to ``1e-9``."""
    r = np.round(np.asarray(x, dtype=np.float64), KEY_DIGITS) + 0.0
    return hashlib.blake2b(r.tobytes(), digest_size=16).digest()


@dataclass(frozen=True)
class PoolEntry:
    kind: str
    point: np.ndarray
    objective: float | None = None
    violation: float | None = None
    source: str = ""
    timestamp: float = field(default_factory=time.time)
    key: bytes = b""
    snapshot: LpSnapshot | None = field(default=None, repr=False)

    def rank(self):
        if self.kind == FEASIBLE:
            return (self.objective, self.key)
        return (self.violation, self.key)


@dataclass(frozen=True)
class Admission:
    accepted: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.accepted


ACCEPTED = Admission(True)


class SolutionPool:
    """Thread-safe store shared by every worker of a solve.

    Objectives are kept in the instance's internal minimization sense.
    ``trace`` records every new best incumbent in the user's sense.
    """

    def __init__(self, inst: ProblemInstance, feas_tol: float = FEAS_TOL, feasible_capacity: int = FEASIBLE_CAPACITY,
                 partial_capacity: int = PARTIAL_CAPACITY, lp_capacity: int = LP_CAPACITY, clock=None):
        self.inst = inst
        self.feas_tol = feas_tol
        self.capacity = {FEASIBLE: feasible_capacity, PARTIAL: partial_capacity, LP: lp_capacity}
        self._sections: dict[str, tuple[PoolEntry, ...]] = {FEASIBLE: (), PARTIAL: (), LP: ()}
        self._locks = {k: threading.Lock() for k in self._sections}
        self._seen: dict[str, set[bytes]] = {FEASIBLE: set(), PARTIAL: set()}
        self._cutoff: float | None = None
        self._closed = False
        self.lp_version = 0
        self.trace = IncumbentTrace()
        self.wins: dict[str, int] = {}
        self._start = time.monotonic()
        self._clock = clock if clock is not None else (lambda: time.monotonic() - self._start)

    # -- writers ---------------------------------------------------------

    def submit(self, entry: PoolEntry) -> Admission:
        if self._closed:
            return Admission(False, "closed")
        if entry.kind == LP:
            return self._submit_lp(entry)
        if entry.kind not in (FEASIBLE, PARTIAL):
            raise ValueError(f"unknown entry kind {entry.kind!r}")
        if entry.kind == FEASIBLE and not validate_solution(self.inst, entry.point, self.feas_tol):
            return Admission(False, "infeasible-claimed-feasible")
        with self._locks[entry.kind]:
            if self._closed:
                return Admission(False, "closed")
            seen = self._seen[entry.kind]
            if entry.key in seen:
                return Admission(False, "duplicate")
            cur = self._sections[entry.kind]
            cap = self.capacity[entry.kind]
            if len(cur) >= cap and entry.rank() >= cur[-1].rank():
                return Admission(False, "worse-than-capacity-floor")
            seen.add(entry.key)
            new = sorted(cur + (entry,), key=PoolEntry.rank)[:cap]
            if entry.kind == FEASIBLE and (not cur or entry.objective < cur[0].objective):
                self._cutoff = entry.objective - cutoff_delta(entry.objective)
                self.trace.append(self._clock(), self.inst.to_user(entry.objective), entry.source)
                self.wins[entry.source] = self.wins.get(entry.source, 0) + 1
            self._sections[entry.kind] = tuple(new)
        return ACCEPTED

    def _submit_lp(self, entry: PoolEntry) -> Admission:
        with self._locks[LP]:
            if self._closed:
                return Admission(False, "closed")
            self._sections[LP] = (self._sections[LP] + (entry,))[-self.capacity[LP]:]
            self.lp_version += 1
        return ACCEPTED

    def add_feasible(self, x, source: str = "") -> Admission:
        x = np.array(x, dtype=np.float64)
        return self.submit(PoolEntry(FEASIBLE, x, objective=self.inst.objective(x), source=source,
                                     key=dedup_key(x)))

    def add_partial(self, x, source: str = "", viol: float | None = None) -> Admission:
        x = np.array(x, dtype=np.float64)
        if viol is None:
            viol = violation(self.inst, x)
        return self.submit(PoolEntry(PARTIAL, x, objective=self.inst.objective(x), violation=float(viol),
                                     source=source, key=dedup_key(x)))

    def add_lp(self, snapshot: LpSnapshot, source: str = "lp") -> Admission:
        return self.submit(PoolEntry(LP, snapshot.primal, objective=snapshot.objective, source=source,
                                     key=dedup_key(snapshot.primal), snapshot=snapshot))

    def take_partial(self) -> PoolEntry | None:
        """Remove and return the least-violated partial entry."""
        with self._locks[PARTIAL]:
            cur = self._sections[PARTIAL]
            if not cur:
                return None
            self._sections[PARTIAL] = cur[1:]
            return cur[0]

    def close(self) -> None:
        """Refuse every later submission."""
        self._closed = True
        for lock in self._locks.values():
            with lock:
                pass

    # -- readers ---------------------------------------------------------

    @property
    def closed(self) -> bool:
        return self._closed

    def best_incumbent(self) -> tuple[np.ndarray, float] | None:
        cur = self._sections[FEASIBLE]
        if not cur:
            return None
        return cur[0].point.copy(), cur[0].objective

    def cutoff(self) -> float | None:
        return self._cutoff

    def latest_lp(self) -> LpSnapshot | None:
        cur = self._sections[LP]
        return cur[-1].snapshot if cur else None

    def entries(self, kind: str) -> tuple[PoolEntry, ...]:
        return self._sections[kind]

    def best_partial(self) -> PoolEntry | None:
        cur = self._sections[PARTIAL]
        return cur[0] if cur else None
