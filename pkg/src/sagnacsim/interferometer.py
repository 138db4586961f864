"""Two-port Sagnac transfer, parity sorting, OAM cascades, and the
direction-dependent polarization devices.

A stage with base angle theta rotates the co- and counter-propagating
beams by +Omega and -Omega; recombination at the splitter gives the port
operators

    A = (R(+Omega) + e^{i phi} R(-Omega)) / 2
    B = (R(+Omega) - e^{i phi} R(-Omega)) / 2

with phi an optional direction-dependent device phase.  At theta = pi/4
(Omega = pi/2) these reduce to the 2-D parity projectors followed by a
common 90 degree rotation of the surviving field, so even n+m exits port
A and odd n+m exits port B.  Rotations here always use the exact
per-order matrices so that port powers are conserved to machine
precision.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import omega_from_theta, psi_from_omega, theta_for_psi
from .modes import (
    LGIndex,
    ModeExpansion,
    oam_phase,
    rotate_exact,
)


@dataclass(frozen=True)
class SagnacStage:
    """One interferometer stage: base angle theta plus device phase phi."""

    theta: float
    phi: float = 0.0

    @cached_property
    def omega(self) -> float:
        return omega_from_theta(self.theta)

    @cached_property
    def psi(self) -> float:
        return psi_from_omega(self.omega)


PARITY_STAGE = SagnacStage(math.pi / 4)


@dataclass(frozen=True)
class PortPair:
    """Output expansions at the two ports, with the input power for reference."""

    port_a: ModeExpansion
    port_b: ModeExpansion
    input_norm_sq: float


def sagnac_transfer(expansion: ModeExpansion, stage: SagnacStage) -> PortPair:
    """Split an input expansion over the two Sagnac ports.

    Lossless for any stage: the two outputs carry the full input power.
    At theta = pi/4 with phi = 0 the ports hold the even and odd 2-D
    parity components (each rotated by 90 degrees).
    """
    plus = rotate_exact(expansion, stage.omega)
    minus = rotate_exact(expansion, -stage.omega).scaled(cmath.exp(1j * stage.phi))
    a = (plus + minus).scaled(0.5).pruned()
    b = (plus - minus).scaled(0.5).pruned()
    return PortPair(a, b, expansion.norm_sq())


def port_powers(pair: PortPair) -> tuple[float, float]:
    """Fractions of the input power leaving ports A and B."""
    if pair.input_norm_sq == 0.0:
        raise ValueError("zero input power")
    return (
        pair.port_a.norm_sq() / pair.input_norm_sq,
        pair.port_b.norm_sq() / pair.input_norm_sq,
    )


def mz_1d_sort(expansion: ModeExpansion) -> PortPair:
    """Ideal single-axis parity sorter (Mach-Zehnder reference model).

    One arm mirrors x, so coefficients route to port A when n is even and
    to port B when n is odd; the surviving terms are passed unchanged.
    """
    a = {i: c for i, c in expansion.terms.items() if i.n % 2 == 0}
    b = {i: c for i, c in expansion.terms.items() if i.n % 2 == 1}
    return PortPair(
        ModeExpansion(a, expansion.geometry),
        ModeExpansion(b, expansion.geometry),
        expansion.norm_sq(),
    )


# ---------------------------------------------------------------------------
# Cascaded OAM sorting
# ---------------------------------------------------------------------------

@dataclass
class CascadeNode:
    """Node of a sorting tree: an internal stage or a labeled leaf."""

    label: str
    stage: SagnacStage | None = None
    child_a: "CascadeNode | None" = None
    child_b: "CascadeNode | None" = None
    residue: int | None = None
    modulus: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.stage is None


def cascade_build(depth: int) -> CascadeNode:
    """Sorting tree whose leaves partition OAM by residue modulo 2**depth.

    Level j (1-based) uses relative rotation psi_j = pi / 2**(j-1); the
    branch handling residue r applies the device phase phi = -r * psi_j so
    that its locally even class (l = r mod 2**j) exits port A.
    """
    if not 1 <= depth <= 5:
        raise ValueError("cascade depth must lie between 1 and 5")

    def build(level: int, residue: int) -> CascadeNode:
        modulus = 2 ** (level - 1)
        if level > depth:
            return CascadeNode(
                label=f"{residue} mod {modulus}", residue=residue, modulus=modulus
            )
        psi = math.pi / 2 ** (level - 1)
        stage = SagnacStage(theta_for_psi(psi), phi=-residue * psi)
        node = CascadeNode(
            label=f"stage{level}[r={residue}]",
            stage=stage,
            child_a=build(level + 1, residue),
            child_b=build(level + 1, residue + modulus),
        )
        return node

    return build(1, 0)


def _lg_port_fractions(stage: SagnacStage, l: int) -> tuple[float, float]:
    """Port powers for a pure OAM-l input, by rotation-eigenvalue arithmetic."""
    plus = oam_phase(LGIndex(0, l), stage.omega)  # R(+Omega) eigenvalue
    minus = oam_phase(LGIndex(0, l), -stage.omega) * cmath.exp(1j * stage.phi)
    pa = abs(0.5 * (plus + minus)) ** 2
    pb = abs(0.5 * (plus - minus)) ** 2
    return pa, pb


@dataclass
class LeafPower:
    label: str
    power: float
    state: ModeExpansion | None = None


def cascade_route(node: CascadeNode, input_state) -> list[LeafPower]:
    """Route an input through a sorting tree; returns per-leaf power fractions.

    An :class:`LGIndex` input is routed by exact rotation-eigenvalue
    arithmetic; a :class:`ModeExpansion` is propagated through each stage
    numerically and the leaf states are returned alongside the powers.
    Leaves are listed in depth-first order, port A first.
    """
    leaves: list[LeafPower] = []

    if isinstance(input_state, LGIndex) or (
        isinstance(input_state, tuple) and not isinstance(input_state, ModeExpansion)
    ):
        idx = LGIndex(*input_state)

        def walk_lg(n: CascadeNode, weight: float):
            if n.is_leaf:
                leaves.append(LeafPower(n.label, weight))
                return
            pa, pb = _lg_port_fractions(n.stage, idx.l)
            walk_lg(n.child_a, weight * pa)
            walk_lg(n.child_b, weight * pb)

        walk_lg(node, 1.0)
        return leaves

    if not isinstance(input_state, ModeExpansion):
        raise TypeError("input must be an LGIndex or a ModeExpansion")
    total = input_state.norm_sq()
    if total == 0.0:
        raise ValueError("zero input power")

    def walk(n: CascadeNode, state: ModeExpansion):
        if n.is_leaf:
            leaves.append(LeafPower(n.label, state.norm_sq() / total, state))
            return
        pair = sagnac_transfer(state, n.stage)
        walk(n.child_a, pair.port_a)
        walk(n.child_b, pair.port_b)

    walk(node, input_state)
    return leaves


def parse_network(text: str) -> CascadeNode:
    """Build a sorting tree from a line-based network description.

    Grammar (one directive per line, ``#`` comments)::

        stage <name> theta=<rad> phi=<rad>
        tree <depth>
        route <parent>.<A|B> -> <child>

    A lone ``tree`` directive expands to the standard residue cascade.
    Unrouted stage ports become leaves labeled ``<name>.<port>``.  Cycles,
    reused children, and unknown names are rejected.
    """
    stages: dict[str, SagnacStage] = {}
    routes: dict[tuple[str, str], str] = {}
    tree_depth = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "tree":
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'tree <depth>'")
            tree_depth = int(parts[1])
        elif parts[0] == "stage":
            if len(parts) != 4:
                raise ValueError(
                    f"line {lineno}: expected 'stage <name> theta=<rad> phi=<rad>'"
                )
            name = parts[1]
            if name in stages:
                raise ValueError(f"line {lineno}: duplicate stage '{name}'")
            kv = {}
            for tok in parts[2:]:
                if "=" not in tok:
                    raise ValueError(f"line {lineno}: malformed parameter '{tok}'")
                key, val = tok.split("=", 1)
                kv[key] = float(val)
            if set(kv) != {"theta", "phi"}:
                raise ValueError(f"line {lineno}: stage needs theta= and phi=")
            stages[name] = SagnacStage(kv["theta"], kv["phi"])
        elif parts[0] == "route":
            if len(parts) != 4 or parts[2] != "->":
                raise ValueError(
                    f"line {lineno}: expected 'route <parent>.<A|B> -> <child>'"
                )
            parent, dot, port = parts[1].rpartition(".")
            if not dot or port not in ("A", "B"):
                raise ValueError(f"line {lineno}: port must be .A or .B")
            key = (parent, port)
            if key in routes:
                raise ValueError(f"line {lineno}: duplicate route from {parts[1]}")
            routes[key] = parts[3]
        else:
            raise ValueError(f"line {lineno}: unknown directive '{parts[0]}'")

    if tree_depth is not None:
        if stages or routes:
            raise ValueError("'tree' cannot be combined with explicit stages")
        return cascade_build(tree_depth)
    if not stages:
        raise ValueError("network defines no stages")

    children = set(routes.values())
    for (parent, port), child in routes.items():
        if parent not in stages:
            raise ValueError(f"route from unknown stage '{parent}'")
        if child not in stages:
            raise ValueError(f"route to unknown stage '{child}'")
    if len(children) != len(routes):
        raise ValueError("a stage is routed to more than once")
    roots = [name for name in stages if name not in children]
    if len(roots) != 1:
        raise ValueError(f"network must have exactly one root, found {len(roots)}")

    visiting: set[str] = set()

    def build(name: str) -> CascadeNode:
        if name in visiting:
            raise ValueError(f"network contains a cycle through '{name}'")
        visiting.add(name)
        kids = {}
        for port in ("A", "B"):
            child = routes.get((name, port))
            if child is None:
                kids[port] = CascadeNode(label=f"{name}.{port}")
            else:
                kids[port] = build(child)
        visiting.discard(name)
        return CascadeNode(
            label=name, stage=stages[name], child_a=kids["A"], child_b=kids["B"]
        )

    root = build(roots[0])
    reached = set()

    def count(n):
        if n.stage is not None:
            reached.add(n.label)
            count(n.child_a)
            count(n.child_b)

    count(root)
    if reached != set(stages):
        raise ValueError("network contains stages unreachable from the root")
    return root


# ---------------------------------------------------------------------------
# Jones-calculus polarization elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JonesVector:
    h: complex = 0j
    v: complex = 0j

    def norm_sq(self) -> float:
        return abs(self.h) ** 2 + abs(self.v) ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.v], dtype=complex)


VERTICAL = JonesVector(0.0, 1.0)
DIAG_PLUS45 = JonesVector(1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))


def rotation2(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class FaradayRotator:
    """Nonreciprocal rotator: the lab-frame Jones matrix is the same for
    forward and backward passage (the rotation sense flips relative to the
    propagation direction, not relative to the lab)."""

    angle: float
    field_sign: int = 1

    def matrix(self, direction: str = "forward") -> np.ndarray:
        return rotation2(self.angle * self.field_sign)


@dataclass(frozen=True)
class Waveplate:
    """Retarder with independent phases on its axis and the perpendicular.

    ``axis_angle`` is measured from horizontal.  The usual single-number
    retardance corresponds to phase_axis - phase_perp.
    """

    axis_angle: float
    phase_axis: float
    phase_perp: float = 0.0

    @classmethod
    def from_retardance(cls, retardance: float, axis_angle: float) -> "Waveplate":
        return cls(axis_angle=axis_angle, phase_axis=retardance)

    def matrix(self, direction: str = "forward") -> np.ndarray:
        u = np.array([math.cos(self.axis_angle), math.sin(self.axis_angle)])
        proj = np.outer(u, u)
        perp = np.eye(2) - proj
        return cmath.exp(1j * self.phase_axis) * proj + cmath.exp(
            1j * self.phase_perp
        ) * perp


@dataclass(frozen=True)
class PolarizingBeamSplitter:
    """Transmits the component along its axis, deflects the perpendicular."""

    axis_angle: float

    def split(self, j: JonesVector) -> tuple[JonesVector, JonesVector]:
        u = np.array([math.cos(self.axis_angle), math.sin(self.axis_angle)])
        vec = j.as_array()
        amp = complex(u @ vec)
        transmitted = JonesVector(amp * u[0], amp * u[1])
        rest = vec - amp * u
        return transmitted, JonesVector(rest[0], rest[1])


def phase_device(
    pol: JonesVector,
    direction: str,
    retardance_fast: float,
    retardance_slow: float,
) -> tuple[JonesVector, float]:
    """Direction-dependent phase shifter: Faraday glass, waveplate, Faraday glass.

    A vertically polarized beam is rotated onto the waveplate's fast axis
    going forward (phase retardance_fast) and onto the slow axis going
    backward (phase retardance_slow), then restored to vertical.  The
    returned phase is the scalar picked up by the vertical component.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    vec = pol.as_array()
    norm = math.sqrt(pol.norm_sq())
    if norm == 0.0 or abs(pol.h) > 1e-9 * norm:
        raise ValueError("device modeled for vertical polarization only")
    # Fast axis at +45 deg; entry rotator maps V onto it, exit rotator maps
    # it back.  Backward passage meets the same nonreciprocal rotators in
    # reverse order, landing V on the slow axis instead.
    fg_in = FaradayRotator(-math.pi / 4)
    fg_out = FaradayRotator(math.pi / 4)
    wp = Waveplate(
        axis_angle=math.pi / 4,
        phase_axis=retardance_fast,
        phase_perp=retardance_slow,
    )
    if direction == "forward":
        chain = fg_out.matrix() @ wp.matrix() @ fg_in.matrix()
    else:
        chain = fg_in.matrix("backward") @ wp.matrix("backward") @ fg_out.matrix(
            "backward"
        )
    out = chain @ vec
    phase = cmath.phase(out[1] / vec[1])
    result = JonesVector(complex(out[0]), complex(out[1]))
    return result, phase


@dataclass(frozen=True)
class IsolatorResult:
    """Where the light went: transmitted plus any deflected components."""

    transmitted: JonesVector
    deflected_pbs1: JonesVector
    deflected_pbs2: JonesVector

    def powers(self) -> dict[str, float]:
        return {
            "transmitted": self.transmitted.norm_sq(),
            "PBS1": self.deflected_pbs1.norm_sq(),
            "PBS2": self.deflected_pbs2.norm_sq(),
        }


def faraday_isolator(pol: JonesVector, direction: str) -> IsolatorResult:
    """Faraday isolator: PBS at +45 deg, rotator, PBS vertical.

    Forward, a +45 deg input is fully transmitted and leaves vertical.
    Backward, a vertical input passes the vertical PBS, is rotated onto
    -45 deg, and is fully deflected at the 45 deg PBS; any horizontal
    component is deflected immediately at the vertical PBS.  Spatial mode
    is untouched; only polarization routing is modeled.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    pbs1 = PolarizingBeamSplitter(math.pi / 4)  # +45 deg to vertical == 45 from H
    pbs2 = PolarizingBeamSplitter(math.pi / 2)  # vertical
    fg = FaradayRotator(math.pi / 4)
    zero = JonesVector()
    if direction == "forward":
        into, defl1 = pbs1.split(pol)
        rotated = fg.matrix() @ into.as_array()
        out, defl2 = pbs2.split(JonesVector(rotated[0], rotated[1]))
        return IsolatorResult(out, defl1, defl2)
    into, defl2 = pbs2.split(pol)
    rotated = fg.matrix("backward") @ into.as_array()
    out, defl1 = pbs1.split(JonesVector(rotated[0], rotated[1]))
    return IsolatorResult(out, defl1, defl2)
