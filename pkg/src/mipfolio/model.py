"""MPS ingestion, normalization to ``A x <= b`` form, and solution checks.

Every downstream module works on :class:`ProblemInstance`, which stores the
constraint matrix twice: row-ordered (CSR) for residual sweeps and batched
flip scoring, column-ordered (CSC) for per-variable breakpoint generation
and incremental residual updates.
"""

from __future__ import annotations

import gzip
import io
import logging
import math
import sys
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import IO, Iterable

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

INF = math.inf
FEAS_TOL = 1e-6
INT_TOL = 1e-6


class MpsParseError(ValueError):
    """Malformed MPS input. Carries the offending 1-based line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class InfeasibleModelError(ValueError):
    """The model is infeasible by inspection (crossed bounds, empty row with negative rhs)."""


@dataclass
class RawInstance:
    """An MPS model as written, before any sense or row-type normalization."""

    name: str = ""
    var_names: list[str] = field(default_factory=list)
    maximize: bool = False
    c: list[float] = field(default_factory=list)
    obj_offset: float = 0.0
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    integer: list[bool] = field(default_factory=list)
    row_names: list[str] = field(default_factory=list)
    row_senses: list[str] = field(default_factory=list)  # "L", "G", "E"
    rhs: list[float] = field(default_factory=list)
    ranges: dict[int, float] = field(default_factory=dict)
    entries: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.var_names)

    @property
    def m(self) -> int:
        return len(self.row_names)


# ---------------------------------------------------------------------------
# MPS parsing
# ---------------------------------------------------------------------------

# fixed-format field columns (0-based start, end)
_FIXED_FIELDS = ((1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61))


def _split_fixed(line: str) -> list[str]:
    out = []
    for start, end in _FIXED_FIELDS:
        tok = line[start:end].strip()
        if tok:
            out.append(tok)
        elif start >= 14 and len(line) > start:
            out.append("")
    while out and out[-1] == "":
        out.pop()
    return out


def _to_float(tok: str, lineno: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise MpsParseError(f"expected a number, got {tok!r}", lineno) from None
    return v


def parse_mps(source: str | bytes | IO | Iterable[str], fixed: bool = False) -> RawInstance:
    """Parse MPS text into a :class:`RawInstance`.

    ``source`` may be the file content (str or bytes), an open text/binary
    stream, or any iterable of lines. Free format (whitespace separated) is
    the default; pass ``fixed=True`` for column-positioned files whose names
    contain blanks.
    """
    if isinstance(source, bytes):
        source = source.decode("ascii", errors="replace")
    if isinstance(source, str):
        lines: Iterable[str] = io.StringIO(source)
    else:
        lines = source

    raw = RawInstance()
    row_index: dict[str, int] = {}
    col_index: dict[str, int] = {}
    free_rows: set[str] = set()
    obj_row: str | None = None
    section: str | None = None
    in_int_block = False
    bounds_seen: set[int] = set()
    seen_endata = False

    for lineno, line in enumerate(lines, start=1):
        if isinstance(line, bytes):
            line = line.decode("ascii", errors="replace")
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("*"):
            continue

        if not line[0].isspace():
            tokens = line.split()
            head = tokens[0].upper()
            if head == "NAME":
                section = "NAME"
                raw.name = " ".join(tokens[1:])
            elif head == "OBJSENSE":
                section = "OBJSENSE"
                if len(tokens) > 1:
                    raw.maximize = tokens[1].upper() in ("MAX", "MAXIMIZE")
            elif head in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                section = head
            elif head == "ENDATA":
                seen_endata = True
                break
            elif head == "OBJNAME":
                section = head
                if len(tokens) > 1:
                    obj_row = tokens[1]
            else:
                raise MpsParseError(f"unknown section header {tokens[0]!r}", lineno)
            continue

        if section is None:
            raise MpsParseError("data line before any section header", lineno)

        tokens = _split_fixed(line) if fixed and "MARKER" not in line else line.split()

        if section == "OBJSENSE":
            raw.maximize = tokens[0].upper() in ("MAX", "MAXIMIZE")
        elif section == "OBJNAME":
            obj_row = tokens[0]
        elif section == "ROWS":
            if len(tokens) != 2:
                raise MpsParseError("ROWS entry needs a type and a name", lineno)
            kind, name = tokens[0].upper(), tokens[1]
            if name in row_index or name in free_rows or (name == obj_row and kind != "N"):
                raise MpsParseError(f"duplicate row {name!r}", lineno)
            if kind == "N":
                if obj_row is None:
                    obj_row = name
                elif name == obj_row:
                    raise MpsParseError(f"duplicate objective row {name!r}", lineno)
                else:
                    logger.warning("dropping free row %s", name)
                    free_rows.add(name)
            elif kind in ("L", "G", "E"):
                row_index[name] = len(raw.row_names)
                raw.row_names.append(name)
                raw.row_senses.append(kind)
                raw.rhs.append(0.0)
            else:
                raise MpsParseError(f"unknown row type {kind!r}", lineno)
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1].strip("'\"").upper() == "MARKER":
                marker = tokens[2].strip("'\"").upper()
                if marker == "INTORG":
                    in_int_block = True
                elif marker == "INTEND":
                    in_int_block = False
                else:
                    raise MpsParseError(f"unknown marker {marker!r}", lineno)
                continue
            if len(tokens) not in (3, 5):
                raise MpsParseError("COLUMNS entry needs name and one or two (row, value) pairs", lineno)
            cname = tokens[0]
            j = col_index.get(cname)
            if j is None:
                j = col_index[cname] = len(raw.var_names)
                raw.var_names.append(cname)
                raw.c.append(0.0)
                raw.integer.append(in_int_block)
                raw.lb.append(0.0)
                raw.ub.append(INF)
            for k in range(1, len(tokens), 2):
                rname, val = tokens[k], _to_float(tokens[k + 1], lineno)
                if rname == obj_row:
                    raw.c[j] += val
                elif rname in free_rows:
                    continue
                elif rname in row_index:
                    raw.entries.append((row_index[rname], j, val))
                else:
                    raise MpsParseError(f"reference to undeclared row {rname!r}", lineno)
        elif section in ("RHS", "RANGES"):
            # the set name is optional in free format
            if len(tokens) % 2 == 1:
                tokens = tokens[1:]
            for k in range(0, len(tokens), 2):
                rname, val = tokens[k], _to_float(tokens[k + 1], lineno)
                if section == "RHS":
                    if rname == obj_row:
                        raw.obj_offset = -val
                    elif rname in free_rows:
                        continue
                    elif rname in row_index:
                        raw.rhs[row_index[rname]] = val
                    else:
                        raise MpsParseError(f"reference to undeclared row {rname!r}", lineno)
                else:
                    if rname not in row_index:
                        raise MpsParseError(f"reference to undeclared row {rname!r}", lineno)
                    raw.ranges[row_index[rname]] = val
        elif section == "BOUNDS":
            if not tokens:
                continue
            btype = tokens[0].upper()
            needs_value = btype not in ("FR", "MI", "PL", "BV")
            if needs_value:
                if len(tokens) == 4:
                    cname, val = tokens[2], _to_float(tokens[3], lineno)
                elif len(tokens) == 3:
                    cname, val = tokens[1], _to_float(tokens[2], lineno)
                else:
                    raise MpsParseError(f"bound {btype} needs a value", lineno)
            else:
                if len(tokens) >= 3:
                    cname = tokens[2]
                elif len(tokens) == 2:
                    cname = tokens[1]
                else:
                    raise MpsParseError(f"bound {btype} needs a column", lineno)
                val = 0.0
            j = col_index.get(cname)
            if j is None:
                raise MpsParseError(f"reference to undeclared column {cname!r}", lineno)
            if btype == "UP":
                raw.ub[j] = val
                if val < 0 and raw.lb[j] == 0.0 and j not in bounds_seen:
                    logger.warning("negative upper bound on %s with default lower bound; setting lb=-inf", cname)
                    raw.lb[j] = -INF
            elif btype == "LO":
                raw.lb[j] = val
            elif btype == "FX":
                raw.lb[j] = raw.ub[j] = val
            elif btype == "FR":
                raw.lb[j], raw.ub[j] = -INF, INF
            elif btype == "MI":
                raw.lb[j] = -INF
            elif btype == "PL":
                raw.ub[j] = INF
            elif btype == "BV":
                raw.integer[j] = True
                raw.lb[j], raw.ub[j] = 0.0, 1.0
            elif btype == "LI":
                raw.integer[j] = True
                raw.lb[j] = val
            elif btype == "UI":
                raw.integer[j] = True
                raw.ub[j] = val
            else:
                raise MpsParseError(f"unsupported bound type {btype!r}", lineno)
            bounds_seen.add(j)

    if not seen_endata:
        raise MpsParseError("missing ENDATA")
    return raw


def read_mps(path: str | Path) -> RawInstance:
    """Read an MPS file from disk (``.gz`` transparently) or ``-`` for stdin."""
    if str(path) == "-":
        return parse_mps(sys.stdin)
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rt") as fh:
        return parse_mps(fh)


# ---------------------------------------------------------------------------
# Normalized instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A minimization MIP with every row in ``sum_j a_ij x_j <= b_i`` form.

    ``A`` (CSR) and ``At`` (CSC of the same matrix) hold identical triples.
    ``sense`` is +1 for models that were minimizations and -1 for
    maximizations; :meth:`user_objective` maps back to the user's sense.
    """

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    is_int: np.ndarray
    var_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()
    sense: int = 1
    obj_offset: float = 0.0
    name: str = ""

    def __post_init__(self):
        for arr in (self.c, self.b, self.lb, self.ub, self.is_int):
            arr.setflags(write=False)
        for arr in (self.A.data, self.A.indices, self.A.indptr):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @cached_property
    def Ac(self) -> sp.csc_matrix:
        """Column-ordered copy of ``A``."""
        Ac = self.A.tocsc()
        Ac.sort_indices()
        for arr in (Ac.data, Ac.indices, Ac.indptr):
            arr.setflags(write=False)
        return Ac

    @cached_property
    def row_of_nnz(self) -> np.ndarray:
        """Row index of every CSR nonzero."""
        out = np.repeat(np.arange(self.m), np.diff(self.A.indptr))
        out.setflags(write=False)
        return out

    @cached_property
    def binaries(self) -> np.ndarray:
        idx = np.flatnonzero(self.is_int & (self.lb == 0.0) & (self.ub == 1.0))
        idx.setflags(write=False)
        return idx

    @cached_property
    def is_binary(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[self.binaries] = True
        mask.setflags(write=False)
        return mask

    @cached_property
    def binary_pos(self) -> np.ndarray:
        """Position of each column inside the packed binary bitset, -1 if not binary."""
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[self.binaries] = np.arange(len(self.binaries))
        pos.setflags(write=False)
        return pos

    @cached_property
    def general_ints(self) -> np.ndarray:
        idx = np.flatnonzero(self.is_int & ~self.is_binary)
        idx.setflags(write=False)
        return idx

    @cached_property
    def continuous(self) -> np.ndarray:
        idx = np.flatnonzero(~self.is_int)
        idx.setflags(write=False)
        return idx

    def row_tol(self, feas_tol: float = FEAS_TOL) -> np.ndarray:
        return feas_tol * np.maximum(1.0, np.abs(self.b))

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and coefficients of column ``j``."""
        Ac = self.Ac
        s, e = Ac.indptr[j], Ac.indptr[j + 1]
        return Ac.indices[s:e], Ac.data[s:e]

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        A = self.A
        s, e = A.indptr[i], A.indptr[i + 1]
        return A.indices[s:e], A.data[s:e]

    def activity(self, x: np.ndarray, layout: str = "row") -> np.ndarray:
        if layout == "row":
            return self.A @ x
        return self.Ac @ x

    def objective(self, x: np.ndarray) -> float:
        """Objective in the internal minimization sense."""
        return float(self.c @ x)

    def user_objective(self, x: np.ndarray) -> float:
        """Objective in the sense the model was written in, offset included."""
        return self.to_user(self.objective(x))

    def to_user(self, z: float) -> float:
        return self.sense * z + self.obj_offset

    def triples(self, layout: str = "row") -> list[tuple[int, int, float]]:
        M = self.A.tocoo() if layout == "row" else self.Ac.tocoo()
        return sorted(zip(M.row.tolist(), M.col.tolist(), M.data.tolist()))

    def layout_checksum(self, layout: str = "row") -> float:
        """Order-independent fingerprint of the stored nonzeros."""
        M = self.A if layout == "row" else self.Ac
        coo = M.tocoo()
        w = (coo.row.astype(np.float64) * 1.000003 + 1.0) * (coo.col.astype(np.float64) * 0.999989 + 2.0)
        return math.fsum((w * coo.data).tolist())

    def with_cutoff(self, z: float) -> "ProblemInstance":
        """Copy with an extra objective row ``c x <= z`` appended."""
        row = sp.csr_matrix(self.c.reshape(1, -1))
        row.eliminate_zeros()
        A = sp.vstack([self.A, row], format="csr")
        A.sort_indices()
        return ProblemInstance(
            c=self.c.copy(), A=A, b=np.append(self.b, z), lb=self.lb.copy(), ub=self.ub.copy(),
            is_int=self.is_int.copy(), var_names=self.var_names, row_names=self.row_names + ("__cutoff",),
            sense=self.sense, obj_offset=self.obj_offset, name=self.name,
        )

    def with_bounds(self, lb: np.ndarray, ub: np.ndarray) -> "ProblemInstance":
        return ProblemInstance(
            c=self.c.copy(), A=self.A, b=self.b.copy(), lb=np.asarray(lb, float).copy(),
            ub=np.asarray(ub, float).copy(), is_int=self.is_int.copy(), var_names=self.var_names,
            row_names=self.row_names, sense=self.sense, obj_offset=self.obj_offset, name=self.name,
        )


def build_instance(c, A, b, lb, ub, is_int, var_names=None, row_names=None, sense=1,
                   obj_offset=0.0, name="") -> ProblemInstance:
    """Assemble a :class:`ProblemInstance` from arrays already in ``<=`` form."""
    A = sp.csr_matrix(A, dtype=np.float64)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    m, n = A.shape
    c = np.asarray(c, dtype=np.float64).reshape(n)
    b = np.asarray(b, dtype=np.float64).reshape(m)
    lb = np.asarray(lb, dtype=np.float64).reshape(n).copy()
    ub = np.asarray(ub, dtype=np.float64).reshape(n).copy()
    is_int = np.asarray(is_int, dtype=bool).reshape(n)
    # integer bounds are rounded inward
    lb[is_int] = np.ceil(lb[is_int] - INT_TOL) + 0.0
    ub[is_int] = np.floor(ub[is_int] + INT_TOL) + 0.0
    bad = np.flatnonzero(lb > ub)
    if bad.size:
        raise InfeasibleModelError(f"variable {int(bad[0])} has lb > ub")
    if var_names is None:
        var_names = [f"x{j + 1}" for j in range(n)]
    if row_names is None:
        row_names = [f"r{i + 1}" for i in range(m)]
    return ProblemInstance(c=c, A=A, b=b, lb=lb, ub=ub, is_int=is_int, var_names=tuple(var_names),
                           row_names=tuple(row_names), sense=sense, obj_offset=obj_offset, name=name)


def normalize(raw: RawInstance) -> ProblemInstance:
    """Turn a raw model into a minimization with ``<=`` rows only.

    ``G`` rows are negated, ``E`` and ranged rows are split into two rows,
    maximization is turned into minimization by negating ``c``. Empty rows
    are dropped when trivially satisfied and reported as infeasible otherwise.
    """
    n = raw.n
    for j in range(n):
        if raw.lb[j] > raw.ub[j]:
            raise InfeasibleModelError(f"variable {raw.var_names[j]} has lb {raw.lb[j]} > ub {raw.ub[j]}")

    by_row: list[list[tuple[int, float]]] = [[] for _ in range(raw.m)]
    for i, j, v in raw.entries:
        if not (0 <= i < raw.m and 0 <= j < n):
            raise ValueError(f"coefficient ({i}, {j}) outside the declared model")
        by_row[i].append((j, v))

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    rhs: list[float] = []
    names: list[str] = []

    def emit(entries, sign, bound, name):
        nonzero = [(j, v) for j, v in entries if v != 0.0]
        if not nonzero:
            if sign * bound < 0:
                raise InfeasibleModelError(f"empty row {name} requires 0 <= {sign * bound}")
            logger.warning("dropping empty row %s", name)
            return
        i = len(rhs)
        for j, v in nonzero:
            rows.append(i)
            cols.append(j)
            vals.append(sign * v)
        rhs.append(sign * bound)
        names.append(name)

    for i in range(raw.m):
        sense, b, name = raw.row_senses[i], raw.rhs[i], raw.row_names[i]
        lo, hi = -INF, INF
        if sense == "L":
            hi = b
        elif sense == "G":
            lo = b
        else:
            lo = hi = b
        if i in raw.ranges:
            r = raw.ranges[i]
            if sense == "L":
                lo = b - abs(r)
            elif sense == "G":
                hi = b + abs(r)
            elif r >= 0:
                hi = b + r
            else:
                lo = b + r
        if hi < INF:
            emit(by_row[i], 1.0, hi, name if lo == -INF else f"{name}_le")
        if lo > -INF:
            emit(by_row[i], -1.0, lo, name if hi == INF else f"{name}_ge")

    m = len(rhs)
    A = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
    sense = -1 if raw.maximize else 1
    c = np.asarray(raw.c, dtype=np.float64) * sense
    return build_instance(
        c=c, A=A, b=rhs, lb=raw.lb, ub=raw.ub, is_int=raw.integer, var_names=raw.var_names,
        row_names=names, sense=sense, obj_offset=raw.obj_offset, name=raw.name,
    )


def load(path: str | Path) -> ProblemInstance:
    return normalize(read_mps(path))


# ---------------------------------------------------------------------------
# Solution checking and output
# ---------------------------------------------------------------------------


@dataclass
class Validation:
    feasible: bool
    violated_rows: list[tuple[int, float]] = field(default_factory=list)
    integrality_violations: list[int] = field(default_factory=list)
    bound_violations: list[int] = field(default_factory=list)
    max_violation: float = 0.0

    def __bool__(self) -> bool:
        return self.feasible


def validate_solution(inst: ProblemInstance, x, feas_tol: float = FEAS_TOL,
                      int_tol: float = INT_TOL) -> Validation:
    """Check rows, bounds and integrality of ``x`` against ``inst``.

    Row ``i`` counts as satisfied when ``a_i x - b_i <= feas_tol * max(1, |b_i|)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (inst.n,):
        raise ValueError(f"point has shape {x.shape}, expected ({inst.n},)")
    if not np.all(np.isfinite(x)):
        return Validation(False, bound_violations=np.flatnonzero(~np.isfinite(x)).tolist(), max_violation=INF)
    r = inst.A @ x - inst.b
    bad_rows = np.flatnonzero(r > inst.row_tol(feas_tol))
    frac = np.abs(x - np.round(x))
    bad_int = np.flatnonzero(inst.is_int & (frac > int_tol))
    btol = feas_tol * np.maximum(1.0, np.abs(x))
    bad_bounds = np.flatnonzero((x < inst.lb - btol) | (x > inst.ub + btol))
    feasible = not (bad_rows.size or bad_int.size or bad_bounds.size)
    return Validation(
        feasible=feasible,
        violated_rows=[(int(i), float(r[i])) for i in bad_rows],
        integrality_violations=bad_int.tolist(),
        bound_violations=bad_bounds.tolist(),
        max_violation=float(max(0.0, r.max())) if r.size else 0.0,
    )


def violation(inst: ProblemInstance, x) -> float:
    """Total row violation ``sum_i max(0, r_i)`` recomputed from scratch."""
    r = inst.A @ np.asarray(x, dtype=np.float64) - inst.b
    return math.fsum(np.maximum(r, 0.0).tolist())


def format_sol(inst: ProblemInstance, x) -> str:
    x = np.asarray(x, dtype=np.float64)
    lines = [f"=obj= {inst.user_objective(x):.17g}"]
    for name, v in zip(inst.var_names, x):
        if v != 0.0:
            lines.append(f"{name} {v:.17g}")
    return "\n".join(lines) + "\n"


def write_sol(path: str | Path, inst: ProblemInstance, x) -> None:
    Path(path).write_text(format_sol(inst, x))


def read_sol(path: str | Path, inst: ProblemInstance) -> tuple[np.ndarray, float | None]:
    """Parse a ``.sol`` file back into a dense point and its recorded objective."""
    index = {name: j for j, name in enumerate(inst.var_names)}
    x = np.zeros(inst.n)
    obj = None
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "=obj=":
            obj = float(parts[1])
        elif parts[0] in index:
            x[index[parts[0]]] = float(parts[1])
    return x, obj
