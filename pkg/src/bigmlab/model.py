"""Linear bilevel instance data model.

An instance is stored as

    upper:  opt_x  a.x + b.y      s.t.  C x + D y <= e
    lower:  opt_y  p.x + q.y      s.t.  R x + S y <= t   (multipliers lambda)

with independent senses for each level.  Solvers work on the
minimize/minimize canonical form produced by :func:`normalize_sense` and
map objective values back to the declared senses when reporting.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

SENSES = ("min", "max")


class InstanceError(ValueError):
    """Raised when an instance is unusable for the requested operation."""


def _vec(v, size=None):
    arr = np.array(v, dtype=float).reshape(-1)
    if size is not None and arr.size == 0 and size > 0:
        return np.zeros(size)
    return arr


def _mat(v, cols):
    arr = np.array(v, dtype=float)
    if arr.size == 0:
        return np.zeros((0, cols))
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr


@dataclass(frozen=True, eq=False)
class LbpInstance:
    """Coefficients of a linear bilevel program.

    ``upper_sense``/``lower_sense`` describe the stored coefficients.
    ``declared_upper``/``declared_lower`` remember what the user wrote
    before normalization so that reported objective values keep the
    declared meaning.  ``allow_coupled`` is the override that lets upper
    rows involve ``y``.
    """

    n: int
    m: int
    a: np.ndarray
    b: np.ndarray
    C: np.ndarray
    d: np.ndarray
    e: np.ndarray
    p: np.ndarray
    q: np.ndarray
    R: np.ndarray
    S: np.ndarray
    t: np.ndarray
    upper_sense: str = "min"
    lower_sense: str = "min"
    name: str = "instance"
    declared_upper: str | None = None
    declared_lower: str | None = None
    allow_coupled: bool = False

    def __post_init__(self):
        for key in ("a", "b", "e", "p", "q", "t"):
            object.__setattr__(self, key, _vec(getattr(self, key)))
        object.__setattr__(self, "C", _mat(self.C, self.n))
        object.__setattr__(self, "R", _mat(self.R, self.n))
        object.__setattr__(self, "S", _mat(self.S, self.m))
        K = self.C.shape[0]
        d = np.array(self.d, dtype=float)
        if d.size == 0:
            d = np.zeros((K, self.m))
        elif d.ndim == 1:
            d = d.reshape(1, -1)
        object.__setattr__(self, "d", d)
        for key in ("a", "b", "C", "d", "e", "p", "q", "R", "S", "t"):
            getattr(self, key).setflags(write=False)
        if self.declared_upper is None:
            object.__setattr__(self, "declared_upper", self.upper_sense)
        if self.declared_lower is None:
            object.__setattr__(self, "declared_lower", self.lower_sense)

    @property
    def K(self) -> int:
        return self.C.shape[0]

    @property
    def J(self) -> int:
        return self.R.shape[0]

    @property
    def upper_sign(self) -> float:
        """Factor mapping the stored upper objective to the declared one."""
        return 1.0 if self.upper_sense == self.declared_upper else -1.0

    @property
    def lower_sign(self) -> float:
        return 1.0 if self.lower_sense == self.declared_lower else -1.0

    def upper_value(self, x, y) -> float:
        """Upper objective at (x, y) in the declared sense."""
        return self.upper_sign * float(self.a @ x + self.b @ y)

    def lower_value(self, x, y) -> float:
        return self.lower_sign * float(self.p @ x + self.q @ y)

    def lower_slack(self, x, y) -> np.ndarray:
        return self.t - self.R @ x - self.S @ y

    def upper_slack(self, x, y) -> np.ndarray:
        return self.e - self.C @ x - self.d @ y


@dataclass(frozen=True, eq=False)
class BilevelSolution:
    """A bilevel point with its lower-level multipliers.

    ``status`` is one of ``optimal``, ``infeasible``, ``unbounded`` or
    ``accepted_unverified``; objective values are in the declared senses.
    """

    x: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    z_upper: float
    z_lower: float
    status: str

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "x": [float(v) for v in self.x],
            "y": [float(v) for v in self.y],
            "lambda": [float(v) for v in self.lam],
            "z_upper": float(self.z_upper),
            "z_lower": float(self.z_lower),
        }


def make_solution(inst: LbpInstance, x, y, lam, status: str) -> BilevelSolution:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return BilevelSolution(
        x=x, y=y, lam=np.asarray(lam, dtype=float),
        z_upper=inst.upper_value(x, y), z_lower=inst.lower_value(x, y),
        status=status,
    )


@dataclass
class ValidationReport:
    usable: bool = True
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def error(self, msg):
        self.usable = False
        self.errors.append(msg)


def validate(inst: LbpInstance) -> ValidationReport:
    """Check dimensions, finiteness and the uncoupled-upper-rows rule."""
    rep = ValidationReport()
    n, m, K, J = inst.n, inst.m, inst.K, inst.J
    if n < 0 or m < 0:
        rep.error("dimension error: negative variable count")
        return rep
    shapes = {
        "a": (inst.a.shape, (n,)), "b": (inst.b.shape, (m,)),
        "C": (inst.C.shape, (K, n)), "d": (inst.d.shape, (K, m)),
        "e": (inst.e.shape, (K,)), "p": (inst.p.shape, (n,)),
        "q": (inst.q.shape, (m,)), "R": (inst.R.shape, (J, n)),
        "S": (inst.S.shape, (J, m)), "t": (inst.t.shape, (J,)),
    }
    for key, (got, want) in shapes.items():
        if got != want:
            rep.error(f"dimension error: {key} has shape {got}, expected {want}")
    for key in shapes:
        if not np.all(np.isfinite(getattr(inst, key))):
            rep.error(f"non-finite entry in {key}")
    for key in ("upper_sense", "lower_sense", "declared_upper", "declared_lower"):
        if getattr(inst, key) not in SENSES:
            rep.error(f"unknown sense {getattr(inst, key)!r} for {key}")
    if rep.usable and np.any(inst.d != 0):
        if inst.allow_coupled:
            rep.warnings.append(
                "coupled upper constraint: nonzero d accepted by override; "
                "only the optimistic KKT pipeline applies")
        else:
            rep.error("coupled upper constraint: upper rows involve y (d != 0)")
    return rep


def require_valid(inst: LbpInstance) -> LbpInstance:
    rep = validate(inst)
    if not rep.usable:
        raise InstanceError("; ".join(rep.errors))
    return inst


def normalize_sense(inst: LbpInstance) -> LbpInstance:
    """Return the minimize/minimize form, keeping the declared senses."""
    kw = {}
    if inst.upper_sense == "max":
        kw.update(a=-inst.a, b=-inst.b, upper_sense="min")
    if inst.lower_sense == "max":
        kw.update(p=-inst.p, q=-inst.q, lower_sense="min")
    if not kw:
        return inst
    return replace(inst, **kw)


def builtin_counterexample(eps: float = 0.01) -> LbpInstance:
    """max x + y, 0 <= x <= 2; follower: min y s.t. y >= 0, x - eps*y <= 1.

    ``eps=0.01`` gives the classic instance with optimum x=2, y=100,
    z=102.  Other values give the parametric family whose optimal
    second multiplier is 1/eps.
    """
    name = "counterexample" if eps == 0.01 else f"counterexample_eps{eps:g}"
    return LbpInstance(
        n=1, m=1,
        a=[1.0], b=[1.0],
        C=[[1.0], [-1.0]], d=[[0.0], [0.0]], e=[2.0, 0.0],
        p=[0.0], q=[1.0],
        R=[[0.0], [1.0]], S=[[-1.0], [-eps]], t=[0.0, 1.0],
        upper_sense="max", lower_sense="min", name=name,
    )


# JSON instance files -------------------------------------------------------

def to_dict(inst: LbpInstance) -> dict:
    """Canonical dictionary in the declared senses (file schema order)."""
    us, ls = inst.upper_sign, inst.lower_sign

    def rows(M):
        return [[float(v) for v in row] for row in M]

    def vec(v, s=1.0):
        return [float(s * x) + 0.0 for x in v]

    return {
        "name": inst.name,
        "upper_sense": inst.declared_upper,
        "lower_sense": inst.declared_lower,
        "n": inst.n,
        "m": inst.m,
        "a": vec(inst.a, us),
        "b": vec(inst.b, us),
        "C": rows(inst.C),
        "d": rows(inst.d),
        "e": vec(inst.e),
        "p": vec(inst.p, ls),
        "q": vec(inst.q, ls),
        "R": rows(inst.R),
        "S": rows(inst.S),
        "t": vec(inst.t),
    }


def from_dict(data: dict, allow_coupled: bool = False) -> LbpInstance:
    required = ("n", "m", "a", "b", "C", "e", "p", "q", "R", "S", "t")
    missing = [k for k in required if k not in data]
    if missing:
        raise InstanceError(f"missing keys: {', '.join(missing)}")
    try:
        n, m = int(data["n"]), int(data["m"])
        return LbpInstance(
            n=n, m=m,
            a=data["a"], b=data["b"], C=data["C"], d=data.get("d", []),
            e=data["e"], p=data["p"], q=data["q"],
            R=data["R"], S=data["S"], t=data["t"],
            upper_sense=data.get("upper_sense", "min"),
            lower_sense=data.get("lower_sense", "min"),
            name=str(data.get("name", "instance")),
            allow_coupled=allow_coupled,
        )
    except (TypeError, ValueError) as exc:
        raise InstanceError(f"malformed instance data: {exc}") from exc


def dumps(inst: LbpInstance) -> str:
    return json.dumps(to_dict(inst), indent=1) + "\n"


def loads(text: str, allow_coupled: bool = False) -> LbpInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InstanceError("instance file must hold a JSON object")
    return from_dict(data, allow_coupled=allow_coupled)


def load(path, allow_coupled: bool = False) -> LbpInstance:
    return loads(Path(path).read_text(encoding="utf-8"), allow_coupled)


def save(inst: LbpInstance, path) -> None:
    Path(path).write_text(dumps(inst), encoding="utf-8")


def digest(inst: LbpInstance) -> str:
    return hashlib.sha256(dumps(inst).encode("utf-8")).hexdigest()[:16]
