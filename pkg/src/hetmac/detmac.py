"""GF(2) model of the layered multiple access channel.

Each entry of a binary column vector stands for one power level ("bit
pipe"); the channel drops the levels below the noise floor by a down
shift.  Achievable TIN rates reduce to rank identities, so everything
here is small dense GF(2) linear algebra with bit-packed rows.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import InfeasibleAllocationError


@dataclass(frozen=True)
class F2Matrix:
    """Dense GF(2) matrix; bits[i] packs row i with bit j = column j."""

    rows: int
    cols: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ValueError("negative dimensions")
        if len(self.bits) != self.rows:
            raise ValueError("bits must hold one word per row")
        mask = (1 << self.cols) - 1
        if any(b & ~mask for b in self.bits):
            raise ValueError("row word has bits beyond the column count")

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "F2Matrix":
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def identity(cls, n: int) -> "F2Matrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> "F2Matrix":
        if cols is None:
            cols = len(rows[0]) if rows else 0
        words = []
        for r in rows:
            if len(r) != cols:
                raise ValueError("ragged rows")
            words.append(sum((int(v) & 1) << j for j, v in enumerate(r)))
        return cls(len(rows), cols, tuple(words))

    def get(self, i: int, j: int) -> int:
        return (self.bits[i] >> j) & 1

    def to_rows(self) -> list[list[int]]:
        return [[(w >> j) & 1 for j in range(self.cols)] for w in self.bits]

    def vstack(self, other: "F2Matrix") -> "F2Matrix":
        if self.cols != other.cols:
            raise ValueError("column mismatch in vstack")
        return F2Matrix(self.rows + other.rows, self.cols, self.bits + other.bits)

    def hstack(self, other: "F2Matrix") -> "F2Matrix":
        if self.rows != other.rows:
            raise ValueError("row mismatch in hstack")
        shift = self.cols
        merged = tuple(a | (b << shift) for a, b in zip(self.bits, other.bits))
        return F2Matrix(self.rows, self.cols + other.cols, merged)

    def matmul(self, other: "F2Matrix") -> "F2Matrix":
        """GF(2) product self @ other."""
        if self.cols != other.rows:
            raise ValueError("inner dimension mismatch")
        out = []
        for w in self.bits:
            acc = 0
            j = 0
            while w:
                if w & 1:
                    acc ^= other.bits[j]
                w >>= 1
                j += 1
            out.append(acc)
        return F2Matrix(self.rows, other.cols, tuple(out))

    def shifted_down(self, s: int) -> "F2Matrix":
        """Rows moved down by s; the bottom s rows are truncated."""
        if not 0 <= s <= self.rows:
            raise ValueError("shift outside [0, rows]")
        return F2Matrix(self.rows, self.cols, (0,) * s + self.bits[: self.rows - s])


def rank_f2(m: F2Matrix) -> int:
    """Rank over GF(2) by column-pivoted Gaussian elimination."""
    work = list(m.bits)
    rank = 0
    row = 0
    for col in range(m.cols):
        pivot = None
        for r in range(row, len(work)):
            if (work[r] >> col) & 1:
                pivot = r
                break
        if pivot is None:
            continue
        work[row], work[pivot] = work[pivot], work[row]
        for r in range(len(work)):
            if r != row and (work[r] >> col) & 1:
                work[r] ^= work[row]
        rank += 1
        row += 1
        if row == len(work):
            break
    return rank


def shift_matrix(q: int, s: int) -> F2Matrix:
    """q x q down-shift: left-multiplying moves a column vector down s levels."""
    if not 0 <= s <= q:
        raise ValueError("shift must satisfy 0 <= s <= q")
    return F2Matrix(q, q, tuple((1 << (i - s)) if i >= s else 0 for i in range(q)))


def random_full_rank(n: int, rng: random.Random) -> F2Matrix:
    """Uniform invertible n x n GF(2) matrix via rejection sampling."""
    if n == 0:
        return F2Matrix(0, 0, ())
    while True:
        m = F2Matrix(n, n, tuple(rng.getrandbits(n) for _ in range(n)))
        if rank_f2(m) == n:
            return m


def hconcat(mats: Iterable[F2Matrix]) -> F2Matrix:
    mats = list(mats)
    if not mats:
        raise ValueError("nothing to concatenate")
    out = mats[0]
    for m in mats[1:]:
        out = out.hstack(m)
    return out


@dataclass(frozen=True)
class DetConfig:
    """Per-user bit levels n and the per-component bit allocation table m.

    Users are 0-indexed and sorted so that n is nonincreasing; m[k] has
    k+1 entries, one per component the user participates in.  q[k] is
    the largest level among users k..K-1, which equals n[k] under the
    sorted ordering.  Infeasible tables are allowed here: feasibility is
    a property to verify, not a construction invariant.
    """

    n: tuple[int, ...]
    m: tuple[tuple[int, ...], ...]
    q: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if any(v < 0 for v in self.n):
            raise ValueError("bit levels must be nonnegative")
        if any(self.n[i] < self.n[i + 1] for i in range(len(self.n) - 1)):
            raise ValueError("bit levels must be sorted nonincreasing")
        if len(self.m) != len(self.n):
            raise ValueError("allocation table must have one row per user")
        for k, row in enumerate(self.m):
            if len(row) != k + 1:
                raise ValueError(f"allocation row {k} must have {k + 1} entries")
            if any(v < 0 for v in row):
                raise ValueError("allocation entries must be nonnegative")
        object.__setattr__(self, "q", tuple(self.n))

    @property
    def users(self) -> int:
        return len(self.n)

    def component_load(self, component: int, first_user: int | None = None) -> int:
        """Sum of m[k][component] over users k >= first_user (default: the component)."""
        lo = component if first_user is None else first_user
        return sum(self.m[k][component] for k in range(lo, self.users))


@dataclass(frozen=True)
class ComponentFeasibility:
    component: int
    load: int
    capacity: int

    @property
    def slack(self) -> int:
        return self.capacity - self.load

    @property
    def feasible(self) -> bool:
        return self.slack >= 0


def verify_region(cfg: DetConfig) -> tuple[ComponentFeasibility, ...]:
    """Per-component load vs capacity check with slack."""
    return tuple(
        ComponentFeasibility(l, cfg.component_load(l), cfg.n[l])
        for l in range(cfg.users)
    )


def allocation_feasible(cfg: DetConfig) -> bool:
    """Full region membership: every tail-sum constraint in every component.

    Within component l, users k >= l must satisfy sum_{i>=k} m[i][l] <= n[k];
    the component capacity check alone (k = l) is not sufficient for the
    layered constructions below to exist.
    """
    for l in range(cfg.users):
        for k in range(l, cfg.users):
            if cfg.component_load(l, k) > cfg.n[k]:
                return False
    return True


def component_layout(
    n: Sequence[int], m_col: Sequence[int], component: int, scheme_type: int
) -> dict[int, list[tuple[int, int]]]:
    """Depth windows (start, end] occupied by each user's bits in one component.

    Depths count down from the top of the component's level range
    (depth 0 = strongest level, n[component] = noise floor); user k's
    bits must all lie below its own ceiling depth n[component] - n[k].

    scheme_type 1 stacks the blocks bottom-anchored by suffix sums, so
    the occupied depths are the deepest ones.  scheme_type 2 anchors
    each user at its own ceiling: a block that fits the exclusive slot
    between the user's ceiling and the next user's sits flush at the
    slot's bottom edge; overflow spills into the shallowest depths the
    weaker users have left free.  Both rules keep all windows disjoint
    for every allocation meeting the tail-sum constraints.
    """
    K = len(n)
    nl = n[component]
    if len(m_col) != K - component:
        raise ValueError("m_col must cover users component..K-1")
    mm = {k: m_col[k - component] for k in range(component, K)}
    out: dict[int, list[tuple[int, int]]] = {}

    if scheme_type == 1:
        tail = 0
        for k in range(K - 1, component - 1, -1):
            m = mm[k]
            start = nl - tail - m
            if start < nl - n[k]:
                raise InfeasibleAllocationError(
                    f"component {component}: user {k} window rises above its level"
                )
            out[k] = [(start, nl - tail)] if m else []
            tail += m
        return out

    if scheme_type != 2:
        raise ValueError("scheme_type must be 1 or 2")
    taken = [False] * (nl + 1)  # taken[d] marks depth d in 1..nl
    for k in range(K - 1, component - 1, -1):
        m = mm[k]
        if m == 0:
            out[k] = []
            continue
        ceiling = nl - n[k]
        fragments: list[tuple[int, int]] = []
        if k == K - 1:
            slot_end = min(ceiling + m, nl)
            a = slot_end - ceiling
        else:
            slot_end = nl - n[k + 1]
            a = min(m, slot_end - ceiling)
        if a > 0:
            for d in range(slot_end - a + 1, slot_end + 1):
                taken[d] = True
            fragments.append((slot_end - a, slot_end))
        rest = m - a
        run_start = None
        d = slot_end + 1
        while rest > 0 and d <= nl:
            if not taken[d]:
                taken[d] = True
                if run_start is None:
                    run_start = d - 1
                rest -= 1
                if rest == 0:
                    fragments.append((run_start, d))
            elif run_start is not None:
                fragments.append((run_start, d - 1))
                run_start = None
            d += 1
        if rest > 0:
            raise InfeasibleAllocationError(
                f"component {component}: no room for user {k}'s {mm[k]} bits"
            )
        out[k] = sorted(fragments)
    return out


def _f_block(f_block: F2Matrix | None, size: int) -> F2Matrix:
    if f_block is None:
        return F2Matrix.identity(size)
    if f_block.rows != size or f_block.cols != size:
        raise ValueError(f"F block must be {size}x{size}")
    return f_block


def _generator_from_layout(
    cfg: DetConfig, k: int, component: int, scheme_type: int, f_block: F2Matrix | None
) -> F2Matrix:
    if not 0 <= component <= k < cfg.users:
        raise ValueError("need component <= user < K")
    m_col = [cfg.m[i][component] for i in range(component, cfg.users)]
    fragments = component_layout(cfg.n, m_col, component, scheme_type)[k]
    mk = cfg.m[k][component]
    f = _f_block(f_block, mk)
    shift = cfg.n[component] - cfg.n[k]
    rows = [0] * cfg.n[component]
    used = 0
    for start, end in fragments:
        for depth in range(start + 1, end + 1):
            rows[depth - 1 - shift] = f.bits[used]
            used += 1
    return F2Matrix(cfg.n[component], mk, tuple(rows))


def build_generator_type1(
    cfg: DetConfig, k: int, component: int, f_block: F2Matrix | None = None
) -> F2Matrix:
    """Suffix-anchored generator: [zeros; F; zeros; zeros], the full-rank
    block sitting directly above the weaker users' windows.  f_block
    defaults to the identity (the simplest full-rank witness)."""
    return _generator_from_layout(cfg, k, component, 1, f_block)


def build_generator_type2(
    cfg: DetConfig, k: int, component: int, f_block: F2Matrix | None = None
) -> F2Matrix:
    """Ceiling-anchored generator: the block fills the user's exclusive
    level slot (flush at the slot's bottom edge) and any overflow is
    split off below the weaker users' windows."""
    return _generator_from_layout(cfg, k, component, 2, f_block)


def component_generators(
    cfg: DetConfig,
    component: int,
    scheme_type: int = 1,
    f_blocks: Mapping[int, F2Matrix] | None = None,
) -> dict[int, F2Matrix]:
    """Generators for every user active in the given component."""
    build = {1: build_generator_type1, 2: build_generator_type2}[scheme_type]
    out = {}
    for k in range(component, cfg.users):
        f = f_blocks.get(k) if f_blocks is not None else None
        out[k] = build(cfg, k, component, f)
    return out


def det_mutual_info(
    cfg: DetConfig, generators: Mapping[int, F2Matrix], k: int, component: int
) -> int:
    """TIN rate of user k in one component: rank(all) - rank(interferers)."""
    if k not in generators:
        raise ValueError(f"no generator for user {k}")
    shifted = {}
    for user, g in generators.items():
        if g.rows != cfg.n[component]:
            raise ValueError(
                f"generator for user {user} has {g.rows} rows, expected {cfg.n[component]}"
            )
        shifted[user] = g.shifted_down(cfg.n[component] - cfg.n[user])
    everyone = hconcat(shifted[u] for u in sorted(shifted))
    others = [shifted[u] for u in sorted(shifted) if u != k]
    if not others:
        return rank_f2(shifted[k])
    return rank_f2(everyone) - rank_f2(hconcat(others))


def achieved_rates(
    cfg: DetConfig,
    scheme_type: int = 1,
    f_blocks: Mapping[tuple[int, int], F2Matrix] | None = None,
) -> dict[tuple[int, int], int]:
    """TIN rate of every (user, component) pair under the chosen scheme."""
    rates = {}
    for l in range(cfg.users):
        per_user = None
        if f_blocks is not None:
            per_user = {k: f for (k, fl), f in f_blocks.items() if fl == l}
        gens = component_generators(cfg, l, scheme_type, per_user)
        for k in range(l, cfg.users):
            rates[(k, l)] = det_mutual_info(cfg, gens, k, l)
    return rates


def achievability_holds(
    cfg: DetConfig,
    scheme_type: int = 1,
    f_blocks: Mapping[tuple[int, int], F2Matrix] | None = None,
) -> bool:
    """True when every pair attains exactly its allocated bit count."""
    rates = achieved_rates(cfg, scheme_type, f_blocks)
    return all(rates[(k, l)] == cfg.m[k][l] for (k, l) in rates)
