"""Transfer functions of the self-similar spring/damper tree.

Node ``(g, n)`` of the tree carries spring ``k_{g,n}`` and damper ``b_{g,n}``.
The spring leads to node ``(g+1, 2n-1)`` and the damper to ``(g+1, 2n)``, so
within generation ``g`` indices ``1..2**(g-2)`` sit in the upper (spring)
subtree and the rest in the lower (damper) subtree.

Two independent routes give the response of a tree with one damaged
component:

* closed form, ``G_inf(s) * Delta(s)`` with ``Delta`` built by
  :func:`delta_for` as a rational function of ``w = sqrt(s)``;
* numeric, :func:`finite_tree_response`, which applies the two-branch
  recurrence node by node down to a cut depth.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .core import HalfOrderPolynomial, HalfOrderRational, evaluate, half_order_variable, normalize
from .errors import DegenerateBranch, DepthLimit, DomainError, ValidationError, ZeroFrequency
from .response import FrequencyGrid, FrequencyResponse

MAX_DEPTH = 24


@dataclass(frozen=True)
class TreeParams:
    k: float = 2.0
    b: float = 1.0
    c: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValidationError(f"spring constant must be positive, got {self.k!r}")
        if not (math.isfinite(self.b) and self.b > 0):
            raise ValidationError(f"damper constant must be positive, got {self.b!r}")
        object.__setattr__(self, "c", math.sqrt(self.k / self.b))


class Kind(str, enum.Enum):
    SPRING = "spring"
    DAMPER = "damper"

    @property
    def symbol(self) -> str:
        return "k" if self is Kind.SPRING else "b"


class TerminationMode(str, enum.Enum):
    TAIL = "tail"
    RIGID = "rigid"


def _check_address(generation: int, index: int) -> None:
    if int(generation) != generation or generation < 1:
        raise ValidationError(f"generation must be an integer >= 1, got {generation!r}")
    if int(index) != index or not 1 <= index <= 2 ** (generation - 1):
        raise ValidationError(
            f"index must lie in [1, {2 ** (generation - 1)}] for generation {generation}, got {index!r}"
        )


@dataclass(frozen=True, order=True)
class Location:
    """Address of one spring or damper in the tree."""

    generation: int
    index: int
    kind: Kind

    def __post_init__(self):
        _check_address(self.generation, self.index)
        object.__setattr__(self, "kind", Kind(self.kind))

    @classmethod
    def parse(cls, text: str) -> "Location":
        """Parse ``"g:n:spring"`` / ``"g:n:damper"`` (``k``/``b`` also accepted)."""
        parts = text.strip().split(":")
        if len(parts) != 3:
            raise ValidationError(f"location must look like 'g:n:kind', got {text!r}")
        kind = {"k": "spring", "b": "damper"}.get(parts[2].strip().lower(), parts[2].strip().lower())
        try:
            return cls(int(parts[0]), int(parts[1]), Kind(kind))
        except ValueError as exc:
            raise ValidationError(f"bad location {text!r}: {exc}") from None

    def __str__(self) -> str:
        return f"{self.generation}:{self.index}:{self.kind.value}"

    @property
    def label(self) -> str:
        return f"{self.kind.symbol}_{{{self.generation},{self.index}}}"

    @property
    def in_upper_half(self) -> bool:
        return self.generation > 1 and self.index <= 2 ** (self.generation - 2)

    def mirror(self) -> "Location":
        """Same-kind component at the mirrored position of the other half."""
        if self.generation < 2:
            raise ValidationError("first-generation components have no mirror")
        half = 2 ** (self.generation - 2)
        n = self.index + half if self.index <= half else self.index - half
        return Location(self.generation, n, self.kind)

    def damaged(self, epsilon: float) -> "DamageSpec":
        return DamageSpec(self.generation, self.index, self.kind, epsilon)


@dataclass(frozen=True)
class DamageSpec:
    generation: int
    index: int
    kind: Kind
    epsilon: float

    def __post_init__(self):
        _check_address(self.generation, self.index)
        object.__setattr__(self, "kind", Kind(self.kind))
        _check_epsilon(self.epsilon)

    @property
    def location(self) -> Location:
        return Location(self.generation, self.index, self.kind)


def _check_epsilon(epsilon: float) -> None:
    if not (isinstance(epsilon, (int, float)) and math.isfinite(epsilon) and 0 < epsilon <= 1):
        raise DomainError(f"damage amount must lie in (0, 1], got {epsilon!r}")


def enumerate_locations(max_generation: int) -> list[Location]:
    """Every component with generation <= ``max_generation``."""
    out = []
    for g in range(1, max_generation + 1):
        for kind in Kind:
            out.extend(Location(g, n, kind) for n in range(1, 2 ** (g - 1) + 1))
    return out


class ConstantsOverride(Mapping):
    """Sparse per-component constants; anything absent keeps its nominal value."""

    def __init__(self, entries: Mapping | Iterable = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        data: dict[tuple[int, int, Kind], float] = {}
        for key, value in items:
            if isinstance(key, Location):
                key = (key.generation, key.index, key.kind)
            g, n, kind = key
            _check_address(g, n)
            value = float(value)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"override for {key!r} must be positive, got {value!r}")
            data[(int(g), int(n), Kind(kind))] = value
        self._data = data

    @classmethod
    def from_damage(cls, damage: DamageSpec, params: TreeParams) -> "ConstantsOverride":
        nominal = params.k if damage.kind is Kind.SPRING else params.b
        return cls({(damage.generation, damage.index, damage.kind): nominal * damage.epsilon})

    def __getitem__(self, key):
        return self._data[key]

    def __iter__(self) -> Iterator:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __repr__(self) -> str:
        return f"ConstantsOverride({self._data!r})"

    @property
    def max_generation(self) -> int:
        return max((g for g, _, _ in self._data), default=0)


def undamaged_response(params: TreeParams, s):
    """``G_inf(s) = 1 / sqrt(k b s)`` on the principal branch."""
    s_arr = np.asarray(s, dtype=complex)
    if np.any(s_arr == 0):
        raise ZeroFrequency("the undamaged response is unbounded at s = 0")
    out = 1.0 / (math.sqrt(params.k * params.b) * half_order_variable(s_arr))
    return complex(out) if out.ndim == 0 else out


def _branch(z, *parts):
    scale = sum(np.abs(p) for p in parts)
    if np.any(~np.isfinite(z)) or np.any(np.abs(z) <= 1e-15 * scale):
        raise DegenerateBranch("branch impedance vanishes")
    return z


def recurrence_step(gu, gl, k_t: float, b_t: float, s):
    """One application of the two-branch recurrence.

    ``1 / (1/(1/k_t + gu) + 1/(1/(b_t s) + gl))``; ``gu`` and ``gl`` are the
    responses of the subtrees hanging off the spring and the damper.
    Works elementwise on arrays.
    """
    s_arr = np.asarray(s, dtype=complex)
    if np.any(s_arr == 0):
        raise ZeroFrequency("recurrence is undefined at s = 0")
    gu = np.asarray(gu, dtype=complex)
    gl = np.asarray(gl, dtype=complex)
    zu = _branch(1.0 / k_t + gu, 1.0 / k_t, gu)
    zb = 1.0 / (b_t * s_arr)
    zl = _branch(zb + gl, zb, gl)
    yu, yl = 1.0 / zu, 1.0 / zl
    y = _branch(yu + yl, yu, yl)
    out = 1.0 / y
    return complex(out) if out.ndim == 0 else out


def base_case_delta(kind: Kind | str, epsilon: float, params: TreeParams) -> HalfOrderRational:
    """Disturbance for damage at ``k_{1,1}`` or ``b_{1,1}``.

    Spring: zeros ``-c, -eps*c``, poles ``-(eps*c +/- sqrt(eps(eps-1)) c)``.
    Damper: zeros ``-c, -c/eps``, poles ``-(c +/- sqrt((eps-1)/eps) c)``.
    At ``eps = 1`` both reduce to ``(w+c)^2 / (w+c)^2``.
    """
    _check_epsilon(epsilon)
    kind = Kind(kind)
    c, e = params.c, float(epsilon)
    if kind is Kind.SPRING:
        num = [e * c * c, (1 + e) * c, 1.0]
        den = [e * c * c, 2 * e * c, 1.0]
    else:
        num = [c * c / e, c * (1 + 1 / e), 1.0]
        den = [c * c / e, 2 * c, 1.0]
    return HalfOrderRational(HalfOrderPolynomial(num), HalfOrderPolynomial(den))


def _step_parts(delta: HalfOrderRational, params: TreeParams):
    if delta.num.degree != delta.den.degree:
        raise ValidationError("inductive step needs equal numerator/denominator degrees")
    delta = normalize(delta)
    c = params.c
    N, D = delta.num, delta.den
    den = D.shift(2) + (N + D).shift(1) * c + D * (c * c)
    return N, D, HalfOrderPolynomial([c, 1.0]), den


def step_upper(delta: HalfOrderRational, params: TreeParams) -> HalfOrderRational:
    """Push a damaged subtree's disturbance one generation down the spring side."""
    N, D, wc, den = _step_parts(delta, params)
    num = wc * (D.shift(1) + N * params.c)
    return normalize(HalfOrderRational(num, den))


def step_lower(delta: HalfOrderRational, params: TreeParams) -> HalfOrderRational:
    """Push a damaged subtree's disturbance one generation down the damper side."""
    N, D, wc, den = _step_parts(delta, params)
    num = wc * (N.shift(1) + D * params.c)
    return normalize(HalfOrderRational(num, den))


def delta_path(location: Location) -> tuple[Location, list[str]]:
    """Reduce ``location`` to a first-generation component plus the steps to undo."""
    g, n = location.generation, location.index
    steps: list[str] = []
    while g > 1:
        half = 2 ** (g - 2)
        if n <= half:
            steps.append("upper")
        else:
            steps.append("lower")
            n -= half
        g -= 1
    steps.reverse()
    return Location(1, 1, location.kind), steps


def delta_for(damage: DamageSpec, params: TreeParams) -> HalfOrderRational:
    """Exact multiplicative disturbance of a single damaged component.

    The result has numerator and denominator of degree ``2g`` in ``w``, both
    monic, with equal constant terms and ``-sqrt(k/b)`` among the zeros.
    """
    _, steps = delta_path(damage.location)
    delta = base_case_delta(damage.kind, damage.epsilon, params)
    for step in steps:
        delta = step_upper(delta, params) if step == "upper" else step_lower(delta, params)
    return delta


def damaged_response(damage: DamageSpec, params: TreeParams, s):
    """``G_inf(s) * Delta(s)`` for the damaged tree."""
    return undamaged_response(params, s) * evaluate(delta_for(damage, params), s)


def _subtree_dirty(overrides: ConstantsOverride) -> set[tuple[int, int]]:
    """Nodes whose subtree (node included) contains an overridden component."""
    dirty = set()
    for g, n, _ in overrides:
        while g >= 1:
            dirty.add((g, n))
            g, n = g - 1, (n + 1) // 2
    return dirty


def finite_tree_response(
    depth: int,
    overrides: ConstantsOverride | Mapping | None,
    mode: TerminationMode | str,
    params: TreeParams,
    grid,
) -> FrequencyResponse:
    """Evaluate the tree truncated after generation ``depth``.

    Nodes below the cut contribute ``G_inf`` (``mode="tail"``, exact closure
    of the infinite tree) or ``0`` (``mode="rigid"``, last generation locked
    to the output node).  Subtrees free of overrides are identical at equal
    depth, so each is evaluated once; the work is ``O(depth * len(overrides))``
    recurrence applications per frequency rather than ``O(2**depth)``.
    """
    if int(depth) != depth or depth < 1:
        raise ValidationError(f"depth must be an integer >= 1, got {depth!r}")
    if depth > MAX_DEPTH:
        raise DepthLimit(f"depth {depth} exceeds the limit of {MAX_DEPTH}")
    overrides = overrides if isinstance(overrides, ConstantsOverride) else ConstantsOverride(overrides or {})
    if overrides.max_generation > depth:
        raise ValidationError("an override lies below the truncation depth")
    mode = TerminationMode(mode)
    grid = grid if isinstance(grid, FrequencyGrid) else FrequencyGrid(grid)
    s = grid.s

    leaf = undamaged_response(params, s) if mode is TerminationMode.TAIL else np.zeros_like(s)
    # clean[g] = response of an override-free subtree rooted at generation g
    clean: dict[int, np.ndarray] = {depth + 1: leaf}
    for g in range(depth, 0, -1):
        clean[g] = recurrence_step(clean[g + 1], clean[g + 1], params.k, params.b, s)
    dirty = _subtree_dirty(overrides)

    def node(g: int, n: int) -> np.ndarray:
        if (g, n) not in dirty:
            return clean[g]
        k_t = overrides.get((g, n, Kind.SPRING), params.k)
        b_t = overrides.get((g, n, Kind.DAMPER), params.b)
        return recurrence_step(node(g + 1, 2 * n - 1), node(g + 1, 2 * n), k_t, b_t, s)

    return FrequencyResponse(grid, node(1, 1))


def delta_to_dict(delta: HalfOrderRational, damage: DamageSpec, params: TreeParams) -> dict:
    return {
        "k": params.k,
        "b": params.b,
        "damage": {
            "generation": damage.generation,
            "index": damage.index,
            "kind": damage.kind.value,
            "epsilon": damage.epsilon,
        },
        "num": list(delta.num.coeffs),
        "den": list(delta.den.coeffs),
    }


def delta_from_dict(data: Mapping) -> tuple[HalfOrderRational, DamageSpec, TreeParams]:
    try:
        params = TreeParams(float(data["k"]), float(data["b"]))
        d = data["damage"]
        damage = DamageSpec(int(d["generation"]), int(d["index"]), Kind(d["kind"]), float(d["epsilon"]))
        delta = HalfOrderRational(HalfOrderPolynomial(data["num"]), HalfOrderPolynomial(data["den"]))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed disturbance record: {exc}") from None
    return delta, damage, params
