"""Rooted tree graphs of one-dimensional lattice bonds.

A topology is a collection of discrete bonds glued at branching vertices.
Bond labels encode the tree structure: the incoming semi-infinite bond is
``"1"``, and a child bond appends one digit to its parent's label (``"11"``,
``"12"``, ``"111"``, ...).  Site indexing follows the usual scattering
convention: the incoming bond carries sites ``n = 0, -1, -2, ...`` with the
root vertex at ``n = 0``, while every other bond carries sites
``n = 1, 2, ...`` counted away from its parent.

Semi-infinite bonds are truncated to ``truncation`` sites for numerical
work; finite internal bonds keep their exact length.  Each bond ``k``
carries its own nonlinearity strength ``gamma_k > 0``.  A vertex is
reflectionless when the strengths satisfy the sum rule

    1/gamma_parent = sum_children 1/gamma_child,

and ``check_sum_rule`` reports the residual of that identity per vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidParameterError, SiteRangeError, TopologyError

KIND_INCOMING = "incoming-semi-infinite"
KIND_INTERNAL = "internal-finite"
KIND_LEAF = "leaf-semi-infinite"

_KINDS = (KIND_INCOMING, KIND_INTERNAL, KIND_LEAF)

ROOT_LABEL = "1"

#: residual magnitude below which a vertex counts as exactly reflectionless
SUM_RULE_TOL = 1e-12


@dataclass(frozen=True)
class BondSpec:
    """One bond of the graph.

    ``length`` is the stored site count: the exact length for internal
    bonds and the truncation length for semi-infinite ones.
    """

    label: str
    gamma: float
    length: int
    kind: str

    def __post_init__(self):
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "length", int(self.length))
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidParameterError(f"bond {self.label!r}: gamma must be finite and > 0")
        if self.length < 1:
            raise InvalidParameterError(f"bond {self.label!r}: length must be a positive integer")
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"bond {self.label!r}: unknown kind {self.kind!r}")
        if not (self.label and self.label[0] == ROOT_LABEL and self.label.isdigit() and "0" not in self.label):
            raise TopologyError(f"bond label {self.label!r} must be digits 1-9 starting with '1'")


@dataclass(frozen=True)
class GraphTopology:
    """Immutable rooted tree of bonds with a fixed flat site layout.

    Bonds are kept sorted by label, which fixes a deterministic flat
    ordering of all sites: bond ``"1"`` stores its sites left to right as
    ``n = -(L-1), ..., 0`` and every other bond as ``n = 1, ..., length``.
    """

    bonds: tuple[BondSpec, ...]
    truncation: int

    def __post_init__(self):
        object.__setattr__(self, "truncation", int(self.truncation))
        if self.truncation < 2:
            raise InvalidParameterError("truncation must be an integer >= 2")
        if len({b.label for b in self.bonds}) != len(self.bonds):
            raise TopologyError("duplicate bond labels")
        object.__setattr__(self, "bonds", tuple(sorted(self.bonds, key=lambda b: b.label)))
        by_label = {b.label: b for b in self.bonds}
        if ROOT_LABEL not in by_label:
            raise TopologyError("missing incoming bond '1'")
        children: dict[str, list[str]] = {}
        for b in self.bonds:
            if b.label == ROOT_LABEL:
                if b.kind != KIND_INCOMING:
                    raise TopologyError("bond '1' must be incoming-semi-infinite")
                continue
            if b.kind == KIND_INCOMING:
                raise TopologyError(f"bond {b.label!r}: only bond '1' may be incoming")
            parent = b.label[:-1]
            if parent not in by_label:
                raise TopologyError(f"bond {b.label!r} has no parent bond {parent!r}")
            children.setdefault(parent, []).append(b.label)
        for b in self.bonds:
            kids = children.get(b.label, [])
            if b.kind == KIND_INTERNAL and not kids:
                raise TopologyError(f"internal bond {b.label!r} has no children")
            if b.kind == KIND_LEAF and kids:
                raise TopologyError(f"leaf bond {b.label!r} has children")
            if b.kind != KIND_INTERNAL and b.length != self.truncation:
                raise TopologyError(
                    f"semi-infinite bond {b.label!r} must store truncation={self.truncation} sites"
                )
        if not children.get(ROOT_LABEL):
            raise TopologyError("bond '1' must branch into at least one outgoing bond")

    # -- lookups ---------------------------------------------------------

    @cached_property
    def _by_label(self) -> dict[str, BondSpec]:
        return {b.label: b for b in self.bonds}

    def bond(self, label: str) -> BondSpec:
        try:
            return self._by_label[label]
        except KeyError:
            raise TopologyError(f"no bond labeled {label!r}") from None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(b.label for b in self.bonds)

    @cached_property
    def vertices(self) -> dict[str, tuple[str, ...]]:
        """Map from each branching bond's label to its ordered child labels."""
        out: dict[str, list[str]] = {}
        for b in self.bonds:
            if b.label == ROOT_LABEL:
                continue
            out.setdefault(b.label[:-1], []).append(b.label)
        return {k: tuple(v) for k, v in sorted(out.items())}

    @cached_property
    def leaves(self) -> tuple[str, ...]:
        return tuple(b.label for b in self.bonds if b.kind == KIND_LEAF)

    # -- flat layout -----------------------------------------------------

    @cached_property
    def slices(self) -> dict[str, slice]:
        out = {}
        start = 0
        for b in self.bonds:
            out[b.label] = slice(start, start + b.length)
            start += b.length
        return out

    @cached_property
    def n_sites(self) -> int:
        return sum(b.length for b in self.bonds)

    @cached_property
    def site_gamma(self) -> np.ndarray:
        out = np.empty(self.n_sites)
        for b in self.bonds:
            out[self.slices[b.label]] = b.gamma
        out.setflags(write=False)
        return out

    def site_coordinates(self, label: str) -> np.ndarray:
        """Site indices of a bond in the scattering convention."""
        b = self.bond(label)
        if label == ROOT_LABEL:
            return np.arange(-(b.length - 1), 1)
        return np.arange(1, b.length + 1)

    def locate(self, flat_index: int) -> tuple[str, int]:
        """Translate a flat site index to (bond label, signed site coordinate)."""
        if not 0 <= flat_index < self.n_sites:
            raise SiteRangeError(f"flat site index {flat_index} outside [0, {self.n_sites})")
        for b in self.bonds:
            s = self.slices[b.label]
            if s.start <= flat_index < s.stop:
                offset = flat_index - s.start
                if b.label == ROOT_LABEL:
                    return b.label, offset - (b.length - 1)
                return b.label, offset + 1
        raise AssertionError("unreachable")

    # -- neighbor tables used by the integrator --------------------------

    @cached_property
    def neighbor_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """Left/right neighbor flat indices per site.

        Sites with no lattice neighbor on one side (truncated far ends and
        vertex-adjacent slots, which couple through vertex terms instead)
        point at the phantom index ``n_sites``, which callers must back
        with a zero amplitude.
        """
        phantom = self.n_sites
        left = np.arange(-1, self.n_sites - 1, dtype=np.intp)
        right = np.arange(1, self.n_sites + 1, dtype=np.intp)
        for b in self.bonds:
            s = self.slices[b.label]
            left[s.start] = phantom
            right[s.stop - 1] = phantom
        left.setflags(write=False)
        right.setflags(write=False)
        return left, right

    @cached_property
    def vertex_sites(self) -> tuple[tuple[str, int, tuple[tuple[str, int], ...]], ...]:
        """Per vertex: (parent label, parent's last flat site, ((child, first flat site), ...))."""
        out = []
        for parent, kids in self.vertices.items():
            p_last = self.slices[parent].stop - 1
            out.append((parent, p_last, tuple((c, self.slices[c].start) for c in kids)))
        return tuple(out)


@dataclass(frozen=True)
class CouplingCoefficients:
    """Vertex coupling weights ``s = sqrt(gamma_parent / gamma_child)``.

    The arrays mirror ``topology.vertex_sites`` in flat-index form so the
    integrator can apply all vertex couplings with vectorized updates.
    """

    values: dict[tuple[str, str], float]
    pair_parent: np.ndarray = field(compare=False, repr=False)
    pair_child: np.ndarray = field(compare=False, repr=False)
    pair_s: np.ndarray = field(compare=False, repr=False)


def coupling_coefficients(topology: GraphTopology) -> CouplingCoefficients:
    """Coupling weights for every (parent, child) pair of the topology.

    The weights depend only on the nonlinearity strengths and are defined
    whether or not the sum rule holds.
    """
    values: dict[tuple[str, str], float] = {}
    pp, pc, ps = [], [], []
    for parent, p_last, kids in topology.vertex_sites:
        g_parent = topology.bond(parent).gamma
        for child, c_first in kids:
            s = math.sqrt(g_parent / topology.bond(child).gamma)
            values[(parent, child)] = s
            pp.append(p_last)
            pc.append(c_first)
            ps.append(s)
    return CouplingCoefficients(
        values=values,
        pair_parent=np.asarray(pp, dtype=np.intp),
        pair_child=np.asarray(pc, dtype=np.intp),
        pair_s=np.asarray(ps),
    )


def check_sum_rule(topology: GraphTopology) -> dict[str, float]:
    """Residual ``1/gamma_parent - sum_children 1/gamma_child`` per vertex."""
    out = {}
    for parent, kids in topology.vertices.items():
        res = 1.0 / topology.bond(parent).gamma
        for c in kids:
            res -= 1.0 / topology.bond(c).gamma
        out[parent] = res
    return out


def is_reflectionless(topology: GraphTopology, tol: float = SUM_RULE_TOL) -> bool:
    """True when every vertex satisfies the sum rule within ``tol``."""
    return all(abs(r) <= tol for r in check_sum_rule(topology).values())


def site_offset(topology: GraphTopology, label: str) -> int:
    """Cumulative parent length between the root vertex and a bond.

    The offset maps a bond's local site ``n`` to the coordinate
    ``n + offset`` of the single chain obtained by unrolling the path from
    the root.  Bond ``"1"`` and the root's direct children have offset 0.
    """
    topology.bond(label)
    total = 0
    for end in range(2, len(label)):
        total += topology.bond(label[:end]).length
    return total


# -- builders -------------------------------------------------------------


def _leaf(label: str, gamma: float, truncation: int) -> BondSpec:
    return BondSpec(label, float(gamma), truncation, KIND_LEAF)


def build_star(gammas: Sequence[float], truncation: int = 400) -> GraphTopology:
    """Star graph: incoming bond plus ``len(gammas) - 1`` outgoing leaves."""
    if len(gammas) < 3:
        raise InvalidParameterError("a star graph needs at least three bonds")
    if len(gammas) > 10:
        raise InvalidParameterError("at most nine outgoing bonds are supported")
    bonds = [BondSpec(ROOT_LABEL, float(gammas[0]), truncation, KIND_INCOMING)]
    bonds += [_leaf(f"1{i}", g, truncation) for i, g in enumerate(gammas[1:], start=1)]
    return GraphTopology(tuple(bonds), truncation)


def build_psg(
    gamma1: float, gamma2: float, gamma3: float, truncation: int = 400
) -> GraphTopology:
    """Primary star graph: one incoming and exactly two outgoing bonds."""
    return build_star((gamma1, gamma2, gamma3), truncation)


def build_chain(gamma: float, truncation: int = 400) -> GraphTopology:
    """Uniform straight chain, stored as an incoming bond and one leaf.

    The junction's coupling weight is 1, so the dynamics reduce exactly to
    the single-chain lattice equation on ``2 * truncation`` sites.
    """
    bonds = (
        BondSpec(ROOT_LABEL, float(gamma), truncation, KIND_INCOMING),
        _leaf("11", gamma, truncation),
    )
    return GraphTopology(bonds, truncation)


def build_tree(spec: Mapping, truncation: int = 400) -> GraphTopology:
    """Tree from a nested description.

    ``spec`` is a mapping with keys ``gamma`` (required), ``children``
    (list of child specs), and ``length`` (required for nodes that have
    children, i.e. internal bonds; ignored for the root, which is the
    incoming semi-infinite bond).  Nodes without children become
    semi-infinite leaves.
    """
    bonds: list[BondSpec] = []

    def walk(node: Mapping, label: str):
        if "gamma" not in node:
            raise InvalidParameterError(f"tree node {label!r} is missing 'gamma'")
        kids = node.get("children", [])
        if label == ROOT_LABEL:
            bonds.append(BondSpec(label, float(node["gamma"]), truncation, KIND_INCOMING))
            if not kids:
                raise TopologyError("the root node needs at least one child")
        elif kids:
            if "length" not in node:
                raise InvalidParameterError(f"internal tree node {label!r} is missing 'length'")
            bonds.append(BondSpec(label, float(node["gamma"]), int(node["length"]), KIND_INTERNAL))
        else:
            bonds.append(_leaf(label, node["gamma"], truncation))
        if len(kids) > 9:
            raise InvalidParameterError(f"node {label!r}: at most nine children are supported")
        for i, kid in enumerate(kids, start=1):
            walk(kid, f"{label}{i}")

    walk(spec, ROOT_LABEL)
    return GraphTopology(tuple(bonds), truncation)


# -- JSON-friendly form ----------------------------------------------------


def topology_to_dict(topology: GraphTopology) -> dict:
    return {
        "bonds": [
            {"label": b.label, "gamma": b.gamma, "length": b.length, "kind": b.kind}
            for b in topology.bonds
        ],
        "truncation": topology.truncation,
    }


def topology_from_dict(data: Mapping) -> GraphTopology:
    """Rebuild a topology from its dict form, accepting two shorthands.

    Besides the explicit ``{"bonds": [...], "truncation": n}`` layout, a
    ``{"gammas": [...]}`` entry builds a star graph and a ``{"tree": ...}``
    entry builds a tree from the nested node format.
    """
    if not isinstance(data, Mapping):
        raise InvalidParameterError("topology description must be a mapping")
    truncation = data.get("truncation", 400)
    if isinstance(truncation, bool) or not isinstance(truncation, int):
        raise InvalidParameterError("truncation must be an integer")
    if "gammas" in data:
        gammas = data["gammas"]
        if len(gammas) == 2:
            if gammas[0] != gammas[1]:
                raise InvalidParameterError("a two-bond chain must have a uniform gamma")
            return build_chain(gammas[0], truncation)
        return build_star(gammas, truncation)
    if "tree" in data:
        return build_tree(data["tree"], truncation)
    if "bonds" not in data:
        raise InvalidParameterError("topology description needs 'bonds', 'gammas', or 'tree'")
    bonds = []
    for entry in data["bonds"]:
        try:
            bonds.append(
                BondSpec(
                    label=str(entry["label"]),
                    gamma=float(entry["gamma"]),
                    length=int(entry["length"]),
                    kind=str(entry["kind"]),
                )
            )
        except KeyError as exc:
            raise InvalidParameterError(f"bond entry is missing key {exc}") from None
    return GraphTopology(tuple(bonds), truncation)
