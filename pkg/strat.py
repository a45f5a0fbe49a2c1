"""Bundle stratification of regular pencils.

A bundle keeps the Segre characteristic of every eigenvalue but not the
eigenvalues themselves. The two covering moves (minimum leftward and
horizontal cut) act on one characteristic at a time, and the interaction
count between two characteristics bounds how far a kernel dimension can drop
under either move.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional


@dataclass(frozen=True)
class Segre:
    """Weakly decreasing block sizes d1 >= d2 >= ... >= dm, all positive."""

    parts: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        parts = tuple(int(d) for d in self.parts)
        if any(d < 1 for d in parts):
            raise ValueError(f"Segre parts must be positive, got {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"Segre parts must be weakly decreasing, got {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def from_sizes(cls, sizes: Iterable[int]) -> "Segre":
        """Sort and drop zero sizes."""
        return cls(tuple(sorted((int(d) for d in sizes if d), reverse=True)))

    @property
    def total(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def render(self) -> str:
        return "{" + ",".join(str(d) for d in self.parts) + "}"


@dataclass(frozen=True)
class RegularBundle:
    """One Segre characteristic per unspecified finite eigenvalue, plus the infinite one."""

    eigen_partitions: tuple[Segre, ...] = ()
    infinite_partition: Segre = field(default_factory=Segre)

    @classmethod
    def of(cls, partitions: Iterable[Segre], infinite: Optional[Segre] = None) -> "RegularBundle":
        ordered = tuple(sorted((p for p in partitions if len(p)), key=lambda p: p.parts, reverse=True))
        return cls(ordered, infinite if infinite is not None else Segre())

    @property
    def size(self) -> int:
        return sum(p.total for p in self.eigen_partitions) + self.infinite_partition.total

    def render(self) -> str:
        return render_bundle(self)


@dataclass
class MlwLemmaReport:
    T: int
    T_tilde: int
    strict_expected: bool

    @property
    def monotone(self) -> bool:
        return self.T_tilde <= self.T

    @property
    def strict_holds(self) -> bool:
        """Strict drop exactly when some e_j lies in [d_q, d_p]."""
        return (self.T_tilde < self.T) == self.strict_expected

    @property
    def holds(self) -> bool:
        return self.monotone and self.strict_holds


@dataclass
class HcLemmaReport:
    T: int
    T_tilde: int
    swapped: bool

    @property
    def holds(self) -> bool:
        return self.T_tilde <= self.T


class MlwResult(NamedTuple):
    """An MLW move keeps the eigenvalue; drops_block is set when block q shrank to nothing (q = m, d_q = 1)."""
    segre: Segre
    drops_block: bool


def _replace(partitions: tuple[Segre, ...], index: int, *new: Segre) -> list[Segre]:
    return list(partitions[:index]) + list(new) + list(partitions[index + 1:])


def is_mlw_site(s: Segre, p: int, q: int) -> bool:
    """1-based p < q with d_p = ... = d_(q-1) >= d_q."""
    d = s.parts
    if not (1 <= p < q <= len(d)):
        return False
    return all(d[k] == d[p - 1] for k in range(p - 1, q - 1)) and d[q - 2] >= d[q - 1]


def mlw_sites(s: Segre) -> list[tuple[int, int]]:
    return [(p, q) for p in range(1, len(s) + 1) for q in range(p + 1, len(s) + 1) if is_mlw_site(s, p, q)]


def mlw_move(s: Segre, p: int, q: int) -> MlwResult:
    """Grow block p by one and shrink block q by one."""
    if not is_mlw_site(s, p, q):
        raise ValueError(f"({p}, {q}) is not a valid MLW site of {s.parts}")
    d = list(s.parts)
    d[p - 1] += 1
    d[q - 1] -= 1
    return MlwResult(Segre.from_sizes(d), d[q - 1] == 0)


def hc_move(s: Segre, cut: int) -> tuple[Segre, Segre]:
    """Split at cut C: b_j = min(d_j, C), c_j = d_j - b_j."""
    if not len(s) or not (1 <= cut < s.parts[0]):
        raise ValueError(f"cut {cut} is out of range for {s.parts}")
    beta = [min(d, cut) for d in s.parts]
    gamma = [d - b for d, b in zip(s.parts, beta)]
    return Segre.from_sizes(beta), Segre.from_sizes(gamma)


def t_alpha(d: Segre, e: Segre) -> int:
    return sum(min(a, b) for a in d.parts for b in e.parts)


def check_mlw_lemma(d: Segre, e: Segre, p: int, q: int) -> MlwLemmaReport:
    moved = mlw_move(d, p, q).segre
    d_p, d_q = d.parts[p - 1], d.parts[q - 1]
    strict = any(d_q <= e_j <= d_p for e_j in e.parts)
    return MlwLemmaReport(T=t_alpha(d, e), T_tilde=t_alpha(moved, e), strict_expected=strict)


def check_hc_lemma(d: Segre, e: Segre, cut_d: int, cut_e: int) -> HcLemmaReport:
    """Both characteristics split at the same pair of eigenvalues; the better of the two pairings counts."""
    beta_d, gamma_d = hc_move(d, cut_d)
    beta_e, gamma_e = hc_move(e, cut_e)
    straight = t_alpha(beta_d, beta_e) + t_alpha(gamma_d, gamma_e)
    swapped = t_alpha(beta_d, gamma_e) + t_alpha(gamma_d, beta_e)
    return HcLemmaReport(T=t_alpha(d, e), T_tilde=max(straight, swapped), swapped=swapped > straight)


def enumerate_covers(b: RegularBundle) -> list[RegularBundle]:
    """
    Every bundle one MLW or HC move away. Infinite eigenvalues may turn finite,
    finite ones never turn infinite.
    """
    finite = b.eigen_partitions
    infinite = b.infinite_partition
    covers: list[RegularBundle] = []

    for index, s in enumerate(finite):
        for p, q in mlw_sites(s):
            moved = mlw_move(s, p, q).segre
            covers.append(RegularBundle.of(_replace(finite, index, moved), infinite))
        for cut in range(1, s.parts[0]):
            beta, gamma = hc_move(s, cut)
            covers.append(RegularBundle.of(_replace(finite, index, beta, gamma), infinite))

    if len(infinite):
        covers.append(RegularBundle.of(list(finite) + [infinite]))
        for p, q in mlw_sites(infinite):
            moved = mlw_move(infinite, p, q).segre
            covers.append(RegularBundle.of(finite, moved))
            covers.append(RegularBundle.of(list(finite) + [moved]))
        for cut in range(1, infinite.parts[0]):
            beta, gamma = hc_move(infinite, cut)
            covers.append(RegularBundle.of(list(finite) + [gamma], beta))
            covers.append(RegularBundle.of(list(finite) + [beta], gamma))
            covers.append(RegularBundle.of(list(finite) + [beta, gamma]))

    unique = {render_bundle(c): c for c in covers if c != b}
    return [unique[key] for key in sorted(unique)]


# ── Bundle strings ─────────────────────────────────────────────────
_PART_RE = re.compile(r"^(inf:)?\{(\d+(?:,\d+)*)?\}$")


def render_bundle(b: RegularBundle) -> str:
    """e.g. "{2,2}|{1}|inf:{1}"."""
    items = [p.render() for p in b.eigen_partitions]
    if len(b.infinite_partition):
        items.append("inf:" + b.infinite_partition.render())
    return "|".join(items)


def parse_bundle(text: str) -> RegularBundle:
    text = "".join(text.split())
    if not text:
        raise ValueError("empty bundle string")
    finite: list[Segre] = []
    infinite: Optional[Segre] = None
    for item in text.split("|"):
        match = _PART_RE.match(item)
        if not match:
            raise ValueError(f"invalid bundle item {item!r}")
        sizes = [int(d) for d in match.group(2).split(",")] if match.group(2) else []
        if any(d < 1 for d in sizes):
            raise ValueError(f"block sizes must be positive in {item!r}")
        if match.group(1):
            if infinite is not None:
                raise ValueError("more than one infinite partition")
            infinite = Segre.from_sizes(sizes)
        elif not sizes:
            raise ValueError("finite partitions must not be empty")
        else:
            finite.append(Segre.from_sizes(sizes))
    return RegularBundle.of(finite, infinite)
