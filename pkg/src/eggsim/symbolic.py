"""Noncommutative term algebra for the four-body momentum recursion.

The angular-momentum chain (shell, outer gimbal, inner gimbal, gyro) is
defined by two recursions: one for the total angular momentum L and one for
its time derivative.  This module expands both recursions into flat sums of
ordered atom products, compares them structurally against golden reference
listings, and evaluates them numerically so the recursive implementations in
:mod:`eggsim.dynamics` can be cross-validated term by term.

Atoms are opaque symbols; products never commute and no simplification
beyond distribution is performed.  A term is an ordered factor list whose
trailing factor is the only vector atom.

Token grammar (one term per line, atoms space separated)::

    R2 R3 R4      relative rotations of frames 2..4
    R2- R3- R4-   their inverses
    dR2 ... dR4-  time derivatives of the above
    Th1 .. Th4    diagonal inertia tensors (constant in their own frame)
    w, dw         shell angular velocity and its derivative
    w2r .. w4r    relative joint rate vectors, dw2r .. dw4r their derivatives
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from .errors import MissingBindingError

_MATRIX_KINDS = frozenset({"rot", "rot_inv", "inertia"})
_VECTOR_KINDS = frozenset({"omega", "rel_rate"})


@dataclass(frozen=True, order=True)
class Atom:
    """One factor of a term: a rotation, inertia tensor, or rate vector."""

    kind: str
    index: int | None = None
    dotted: bool = False

    def __post_init__(self):
        if self.kind not in _MATRIX_KINDS | _VECTOR_KINDS:
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if self.kind == "inertia" and self.dotted:
            raise ValueError("inertia tensors are constant; no dotted form exists")
        if self.kind in ("rot", "rot_inv", "rel_rate") and self.index not in (2, 3, 4):
            raise ValueError(f"{self.kind} atoms exist for frames 2..4 only, got {self.index}")
        if self.kind == "inertia" and self.index not in (1, 2, 3, 4):
            raise ValueError(f"inertia index must be 1..4, got {self.index}")
        if self.kind == "omega" and self.index is not None:
            raise ValueError("omega carries no frame index")

    @property
    def is_vector(self) -> bool:
        return self.kind in _VECTOR_KINDS

    @property
    def token(self) -> str:
        d = "d" if self.dotted else ""
        if self.kind == "rot":
            return f"{d}R{self.index}"
        if self.kind == "rot_inv":
            return f"{d}R{self.index}-"
        if self.kind == "inertia":
            return f"Th{self.index}"
        if self.kind == "omega":
            return f"{d}w"
        return f"{d}w{self.index}r"

    @classmethod
    def from_token(cls, token: str) -> "Atom":
        t = token
        dotted = t.startswith("d")
        if dotted:
            t = t[1:]
        if t.startswith("Th") and not dotted:
            return cls("inertia", int(t[2:]))
        if t.startswith("R"):
            inv = t.endswith("-")
            idx = int(t[1:-1] if inv else t[1:])
            return cls("rot_inv" if inv else "rot", idx, dotted)
        if t == "w":
            return cls("omega", None, dotted)
        if t.startswith("w") and t.endswith("r"):
            return cls("rel_rate", int(t[1:-1]), dotted)
        raise ValueError(f"unparseable atom token {token!r}")

    def differentiate(self) -> "Atom | None":
        """d/dt of this atom, or None if it is constant in time."""
        if self.kind == "inertia":
            return None
        if self.dotted:
            raise ValueError(f"second derivative of {self.token} is outside the algebra")
        return Atom(self.kind, self.index, dotted=True)


Term = tuple[Atom, ...]


def _check_term(term: Term) -> Term:
    if not term or not term[-1].is_vector:
        raise ValueError("a term must end in a vector atom")
    if any(a.is_vector for a in term[:-1]):
        raise ValueError("only the trailing factor may be a vector atom")
    return term


class SymbolicSum:
    """Multiset of terms, kept in canonical (lexicographic) order."""

    def __init__(self, terms: Iterable[Term]):
        self.terms: tuple[Term, ...] = tuple(
            sorted((_check_term(tuple(t)) for t in terms),
                   key=lambda t: tuple(a.token for a in t)))

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolicSum):
            return NotImplemented
        return Counter(self.terms) == Counter(other.terms)

    def __contains__(self, term: Term) -> bool:
        return tuple(term) in set(self.terms)

    def canonicalize(self) -> "SymbolicSum":
        """Idempotent: construction already sorts terms."""
        return SymbolicSum(self.terms)

    def format(self) -> str:
        return "\n".join(" ".join(a.token for a in t) for t in self.terms)

    @classmethod
    def parse(cls, text: str) -> "SymbolicSum":
        terms = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            terms.append(tuple(Atom.from_token(tok) for tok in line.split()))
        return cls(terms)


def _omega_chain() -> dict[int, list[Term]]:
    """Symbolic frame angular velocities omega_1..omega_4 as term lists."""
    omegas: dict[int, list[Term]] = {1: [(Atom("omega"),)]}
    for n in (2, 3, 4):
        rot = Atom("rot", n)
        own = (Atom("rel_rate", n),)
        omegas[n] = [own] + [(rot,) + t for t in omegas[n - 1]]
    return omegas


def expand_L() -> SymbolicSum:
    """Fully distributed expansion of the total angular momentum recursion."""
    omegas = _omega_chain()
    level: list[Term] = [(Atom("inertia", 4),) + t for t in omegas[4]]
    for n in (4, 3, 2):
        level = [(Atom("rot_inv", n),) + t for t in level] \
            + [(Atom("inertia", n - 1),) + t for t in omegas[n - 1]]
    return SymbolicSum(level)


def _d_dt(term: Term) -> list[Term]:
    """Product rule over one term; constant factors contribute nothing."""
    out = []
    for i, atom in enumerate(term):
        da = atom.differentiate()
        if da is not None:
            out.append(term[:i] + (da,) + term[i + 1:])
    return out


def expand_Tmec() -> SymbolicSum:
    """d/dt of every expanded momentum term: the full mechanical torque."""
    terms = []
    for t in expand_L():
        terms.extend(_d_dt(t))
    return SymbolicSum(terms)


def expand_B() -> SymbolicSum:
    """Mechanical-torque terms that survive setting the shell acceleration to zero."""
    dotted_omega = Atom("omega", dotted=True)
    return SymbolicSum(t for t in expand_Tmec() if dotted_omega not in t)


def expand(target: str) -> SymbolicSum:
    """Expansion by CLI target name: 'L', 'B' or 'Tmec'."""
    try:
        return {"L": expand_L, "B": expand_B, "Tmec": expand_Tmec}[target]()
    except KeyError:
        raise ValueError(f"unknown expansion target {target!r}") from None


def evaluate(sum_: SymbolicSum, bindings: Mapping[str, np.ndarray]) -> np.ndarray:
    """Numeric value of a sum: ordered matrix chains applied to trailing vectors.

    Args:
        bindings: token -> ndarray; (3, 3) for matrix atoms, (3,) for vectors.

    Raises:
        MissingBindingError: naming the first atom lacking a binding.
    """
    total = np.zeros(3)
    for term in sum_:
        try:
            value = np.asarray(bindings[term[-1].token], dtype=float)
        except KeyError:
            raise MissingBindingError(term[-1].token) from None
        for atom in reversed(term[:-1]):
            try:
                value = bindings[atom.token] @ value
            except KeyError:
                raise MissingBindingError(atom.token) from None
        total = total + value
    return total


_G_X = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
_G_Z = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])


def standard_bindings(phi: float, psi: float, rho: float,
                      phi_rate: float, psi_rate: float, rho_rate: float,
                      phi_accel: float, psi_accel: float, rho_accel: float,
                      inertias: Iterable[np.ndarray],
                      omega: np.ndarray,
                      omega_dot: np.ndarray) -> dict[str, np.ndarray]:
    """Numeric bindings for the standard chain: R2 = R_z(phi), R3 = R_x(psi), R4 = R_z(rho).

    Rotation derivatives are exact: dR = rate * G_axis @ R, and the inverse
    derivatives are the transposes of those.
    """
    from .geometry import rot_x, rot_z

    r2, r3, r4 = rot_z(phi), rot_x(psi), rot_z(rho)
    dr2 = phi_rate * (_G_Z @ r2)
    dr3 = psi_rate * (_G_X @ r3)
    dr4 = rho_rate * (_G_Z @ r4)
    th1, th2, th3, th4 = (np.asarray(m, dtype=float) for m in inertias)

    return {
        "R2": r2, "R3": r3, "R4": r4,
        "R2-": r2.T, "R3-": r3.T, "R4-": r4.T,
        "dR2": dr2, "dR3": dr3, "dR4": dr4,
        "dR2-": dr2.T, "dR3-": dr3.T, "dR4-": dr4.T,
        "Th1": th1, "Th2": th2, "Th3": th3, "Th4": th4,
        "w": np.asarray(omega, dtype=float),
        "dw": np.asarray(omega_dot, dtype=float),
        "w2r": np.array([0.0, 0.0, phi_rate]),
        "w3r": np.array([psi_rate, 0.0, 0.0]),
        "w4r": np.array([0.0, 0.0, rho_rate]),
        "dw2r": np.array([0.0, 0.0, phi_accel]),
        "dw3r": np.array([psi_accel, 0.0, 0.0]),
        "dw4r": np.array([0.0, 0.0, rho_accel]),
    }


def load_golden(name: str) -> SymbolicSum:
    """Golden expansion shipped with the package ('L' or 'B')."""
    path = resources.files("eggsim.golden").joinpath(f"{name}_terms.txt")
    return SymbolicSum.parse(path.read_text(encoding="utf-8"))


def load_golden_file(path) -> SymbolicSum:
    """Golden expansion from an explicit file path (validator override)."""
    with open(path, "r", encoding="utf-8") as f:
        return SymbolicSum.parse(f.read())
