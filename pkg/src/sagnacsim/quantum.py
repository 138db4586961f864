"""Post-selected two-photon mode functions: SPDC sources, fiber filtering,
biphoton sorting, compressors, heralding, and entanglement diagnostics.

All states live in the post-selected two-photon subspace; probabilities
are conditional on a pair being present.  The spatial part of a biphoton
is a complex coefficient map over ordered HG index pairs, and the
two-photon polarization is carried alongside as amplitudes over
{HV, VH, HH, VV}.

Biphoton sorting works in each output beam's own transverse frame: the
deterministic 90 degree rotation every Sagnac output shares is dropped,
which leaves branch probabilities untouched and makes heralded states
directly comparable to the modes they were pumped from.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import IO

import numpy as np

from .interferometer import SagnacStage
from .modes import (
    BeamGeometry,
    HGIndex,
    LGIndex,
    ModeExpansion,
    rotation_matrix,
)

POLARIZATION_KEYS = ("HV", "VH", "HH", "VV")

# Symmetric Bell polarization produced by the type-II source.
def bell_polarization() -> dict[str, complex]:
    inv = 1.0 / math.sqrt(2.0)
    return {"HV": inv, "VH": inv}


FIRST_ORDER_SPAN = (HGIndex(0, 0), HGIndex(1, 0), HGIndex(0, 1))

# Pump-expansion coefficients for a fundamental-mode pump under typical
# conditions (0.1 mm pump waist, 1 mm crystal); overridable per call.
DEFAULT_C0 = 0.08
DEFAULT_C1 = 0.04
DEFAULT_C2 = -0.03

DEFAULT_GEOMETRY = BeamGeometry(1.0)


class BiphotonExpansion:
    """Finite expansion over ordered HG x HG products plus polarization."""

    __slots__ = ("terms", "polarization", "geometry")

    def __init__(self, terms, polarization=None, geometry: BeamGeometry = DEFAULT_GEOMETRY):
        clean: dict[tuple[HGIndex, HGIndex], complex] = {}
        for (a, b), amp in dict(terms).items():
            key = (HGIndex(*a), HGIndex(*b))
            amp = complex(amp)
            if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
                raise ValueError(f"non-finite amplitude for {key}")
            clean[key] = amp
        pol = dict(polarization) if polarization is not None else bell_polarization()
        for k in pol:
            if k not in POLARIZATION_KEYS:
                raise ValueError(f"unknown polarization component '{k}'")
        self.terms = clean
        self.polarization = {k: complex(v) for k, v in pol.items()}
        self.geometry = geometry

    def coeff(self, a, b) -> complex:
        return self.terms.get((HGIndex(*a), HGIndex(*b)), 0j)

    def norm_sq(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.terms.values()))

    def normalized(self) -> "BiphotonExpansion":
        n = math.sqrt(self.norm_sq())
        if n == 0.0:
            raise ValueError("cannot normalize a zero biphoton state")
        return self.scaled(1.0 / n)

    def scaled(self, factor: complex) -> "BiphotonExpansion":
        return BiphotonExpansion(
            {k: v * factor for k, v in self.terms.items()},
            self.polarization,
            self.geometry,
        )

    def pruned(self, tol: float = 0.0) -> "BiphotonExpansion":
        return BiphotonExpansion(
            {k: v for k, v in self.terms.items() if abs(v) > tol},
            self.polarization,
            self.geometry,
        )

    def is_exchange_symmetric(self, tol: float = 1e-12) -> bool:
        for (a, b), amp in self.terms.items():
            if abs(self.terms.get((b, a), 0j) - amp) > tol:
                return False
        return True

    def __repr__(self):
        inside = ", ".join(
            f"({a.n}{a.m},{b.n}{b.m}): {c:.4g}"
            for (a, b), c in sorted(self.terms.items())
        )
        return f"BiphotonExpansion({{{inside}}})"


def spdc_hg00(
    c0: float = DEFAULT_C0,
    c1: float = DEFAULT_C1,
    c2: float = DEFAULT_C2,
    geometry: BeamGeometry = DEFAULT_GEOMETRY,
) -> BiphotonExpansion:
    """Truncated biphoton expansion for a fundamental-Gaussian pump.

    Carries the zero-order term, the two diagonal first-order terms, and
    the four order-two cross terms; every other coefficient through total
    order 2 vanishes by the selection rules, and orders >= 4 are dropped
    (the downstream fiber removes them anyway).
    """
    h00, h10, h01 = HGIndex(0, 0), HGIndex(1, 0), HGIndex(0, 1)
    h20, h02 = HGIndex(2, 0), HGIndex(0, 2)
    terms = {
        (h00, h00): c0,
        (h10, h10): c1,
        (h01, h01): c1,
        (h00, h02): c2,
        (h02, h00): c2,
        (h00, h20): c2,
        (h20, h00): c2,
    }
    return BiphotonExpansion(terms, bell_polarization(), geometry)


def spdc_hg45(
    c1: float = DEFAULT_C1, geometry: BeamGeometry = DEFAULT_GEOMETRY
) -> BiphotonExpansion:
    """Biphoton expansion for a diagonal first-order pump (HG at 45 deg).

    Four equal order-one terms; all other order-one coefficients vanish
    and orders >= 3 are dropped as fiber-filtered.
    """
    h00, h10, h01 = HGIndex(0, 0), HGIndex(1, 0), HGIndex(0, 1)
    terms = {
        (h10, h00): c1,
        (h00, h10): c1,
        (h01, h00): c1,
        (h00, h01): c1,
    }
    return BiphotonExpansion(terms, bell_polarization(), geometry)


def load_biphoton_table(
    stream: IO[str] | str, geometry: BeamGeometry = DEFAULT_GEOMETRY
) -> BiphotonExpansion:
    """Parse a biphoton table: header ``biphoton v1``, lines ``j k s t re im``.

    ``#`` starts a comment.  An empty file yields an empty expansion with a
    warning; malformed lines raise with their line number.
    """
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = stream.read().splitlines()
    terms: dict[tuple[HGIndex, HGIndex], complex] = {}
    header_seen = False
    any_content = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        any_content = True
        if not header_seen:
            if line != "biphoton v1":
                raise ValueError(f"line {lineno}: expected header 'biphoton v1'")
            header_seen = True
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"line {lineno}: expected 'j k s t re im'")
        try:
            j, k, s, t = (int(p) for p in parts[:4])
            re_part, im_part = float(parts[4]), float(parts[5])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if min(j, k, s, t) < 0:
            raise ValueError(f"line {lineno}: negative mode index")
        key = (HGIndex(j, k), HGIndex(s, t))
        terms[key] = terms.get(key, 0j) + complex(re_part, im_part)
    if not any_content:
        warnings.warn("biphoton table file is empty", stacklevel=2)
        return BiphotonExpansion({}, bell_polarization(), geometry)
    return BiphotonExpansion(terms, bell_polarization(), geometry)


def dump_biphoton_table(b: BiphotonExpansion) -> str:
    lines = ["biphoton v1"]
    for (a, pb), c in sorted(b.terms.items()):
        lines.append(f"{a.n} {a.m} {pb.n} {pb.m} {c.real:.17g} {c.imag:.17g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Three-mode fiber
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiberSpec:
    """Weakly guiding parabolic-index fiber in its three-mode regime.

    The normalized frequency is V = (omega_p n0 / c) a sqrt(2 Delta).  In
    the parabolic-profile oscillator approximation a mode group of total
    order N is guided when V > 2 (N + 1), so exactly the fundamental plus
    the two first-order modes propagate for 4 < V <= 6.
    """

    core_radius: float
    normalized_frequency: float
    index_contrast: float
    n0: float
    pump_frequency: float

    C_LIGHT = 299792458.0

    def __post_init__(self):
        if min(self.core_radius, self.normalized_frequency, self.index_contrast,
               self.n0, self.pump_frequency) <= 0:
            raise ValueError("all fiber parameters must be positive")
        if not self.index_contrast < 0.05:
            raise ValueError("index contrast too large for weak guidance")
        v_check = (
            self.pump_frequency
            * self.n0
            / self.C_LIGHT
            * self.core_radius
            * math.sqrt(2.0 * self.index_contrast)
        )
        if abs(v_check - self.normalized_frequency) > 1e-6 * self.normalized_frequency:
            raise ValueError(
                "normalized frequency inconsistent with fiber parameters"
            )

    @classmethod
    def from_v(
        cls,
        core_radius: float,
        normalized_frequency: float,
        index_contrast: float = 0.01,
        n0: float = 1.45,
    ) -> "FiberSpec":
        pump = (
            normalized_frequency
            * cls.C_LIGHT
            / (n0 * core_radius * math.sqrt(2.0 * index_contrast))
        )
        return cls(core_radius, normalized_frequency, index_contrast, n0, pump)

    @property
    def matched_waist(self) -> float:
        """Free-space waist that overlaps the guided fundamental: a sqrt(2/V)."""
        return self.core_radius * math.sqrt(2.0 / self.normalized_frequency)


def guided_modes(fiber: FiberSpec) -> list[LGIndex]:
    """Guided LG modes of a three-mode fiber: (0,0), (0,+1), (0,-1).

    Anything outside the window 4 < V <= 6 guides a different mode count
    and is rejected; this model only covers the three-mode regime.
    """
    v = fiber.normalized_frequency
    if not 4.0 < v <= 6.0:
        raise ValueError("fiber outside three-mode regime")
    return [LGIndex(0, 0), LGIndex(0, 1), LGIndex(0, -1)]


def fiber_filter_single(
    expansion: ModeExpansion, renormalize: bool = False
) -> tuple[ModeExpansion, float]:
    """Project onto the guided span {HG00, HG10, HG01}.

    Returns the projected expansion and the transmitted power fraction.
    A zero projection is flagged with a warning, not an error.
    """
    kept = {i: c for i, c in expansion.terms.items() if i in FIRST_ORDER_SPAN}
    out = ModeExpansion(kept, expansion.geometry)
    total = expansion.norm_sq()
    fraction = out.norm_sq() / total if total > 0 else 0.0
    if total > 0 and out.norm_sq() == 0.0:
        warnings.warn("fiber filter removed all power", stacklevel=2)
    if renormalize and out.norm_sq() > 0:
        out = out.normalized()
    return out, fraction


def fiber_filter_biphoton(b: BiphotonExpansion) -> tuple[BiphotonExpansion, float]:
    """Keep terms with both photons in the guided span; renormalize.

    Returns the renormalized state and the post-selection probability
    (kept power over total power).
    """
    total = b.norm_sq()
    kept = {
        key: c
        for key, c in b.terms.items()
        if key[0] in FIRST_ORDER_SPAN and key[1] in FIRST_ORDER_SPAN
    }
    out = BiphotonExpansion(kept, b.polarization, b.geometry)
    if out.norm_sq() == 0.0:
        raise ValueError("state fully rejected")
    probability = out.norm_sq() / total
    return out.normalized(), probability


# ---------------------------------------------------------------------------
# Biphoton sorting and heralding
# ---------------------------------------------------------------------------

def _frame_port_maps(stage: SagnacStage, max_order: int):
    """Single-photon port operators in the output-beam frame.

    Factoring the common R(Omega) out of both ports leaves
    A = (1 + e^{i phi} R(-2 Omega))/2 and B = (1 - e^{i phi} R(-2 Omega))/2,
    evaluated per total order with the exact rotation matrices.
    """
    phase = cmath.exp(1j * stage.phi)
    maps_a: dict[int, np.ndarray] = {}
    maps_b: dict[int, np.ndarray] = {}
    for order in range(max_order + 1):
        back = rotation_matrix(order, -2.0 * stage.omega).astype(complex)
        eye = np.eye(order + 1, dtype=complex)
        maps_a[order] = 0.5 * (eye + phase * back)
        maps_b[order] = 0.5 * (eye - phase * back)
    return maps_a, maps_b


def _apply_map(maps: dict[int, np.ndarray], idx: HGIndex) -> dict[HGIndex, complex]:
    mat = maps[idx.order]
    col = mat[:, idx.n]
    out = {}
    for n in range(idx.order + 1):
        if col[n] != 0:
            out[HGIndex(n, idx.order - n)] = complex(col[n])
    return out


@dataclass
class SortedBranch:
    probability: float
    state: BiphotonExpansion | None


@dataclass
class BiphotonSortResult:
    """Conditional biphoton states and probabilities for the four port pairs."""

    branches: dict[str, SortedBranch]

    def probability(self, branch: str) -> float:
        return self.branches[branch].probability

    def state(self, branch: str) -> BiphotonExpansion:
        st = self.branches[branch].state
        if st is None:
            raise ValueError(f"branch {branch} has zero probability")
        return st


def sort_biphoton(b: BiphotonExpansion, stage: SagnacStage) -> BiphotonSortResult:
    """Sort each photon of a biphoton independently at one Sagnac stage.

    Returns the four conditional (normalized) states with probabilities
    summing to one.  States are reported in the output beams' own frames;
    the common output rotation would multiply both photons identically and
    is omitted.
    """
    total = b.norm_sq()
    if total == 0.0:
        raise ValueError("zero biphoton state")
    max_order = max(
        (max(a.order, pb.order) for a, pb in b.terms), default=0
    )
    maps_a, maps_b = _frame_port_maps(stage, max_order)
    accumulators: dict[str, dict[tuple[HGIndex, HGIndex], complex]] = {
        "AA": {}, "AB": {}, "BA": {}, "BB": {}
    }
    for (ia, ib), amp in b.terms.items():
        outs1 = {"A": _apply_map(maps_a, ia), "B": _apply_map(maps_b, ia)}
        outs2 = {"A": _apply_map(maps_a, ib), "B": _apply_map(maps_b, ib)}
        for p1 in ("A", "B"):
            for p2 in ("A", "B"):
                acc = accumulators[p1 + p2]
                for j1, c1 in outs1[p1].items():
                    for j2, c2 in outs2[p2].items():
                        key = (j1, j2)
                        acc[key] = acc.get(key, 0j) + amp * c1 * c2
    branches = {}
    for name, acc in accumulators.items():
        state = BiphotonExpansion(acc, b.polarization, b.geometry).pruned(1e-300)
        power = state.norm_sq()
        prob = power / total
        branches[name] = SortedBranch(
            probability=prob,
            state=state.normalized() if power > 0 else None,
        )
    return BiphotonSortResult(branches)


@dataclass(frozen=True)
class CompressorSpec:
    """Stress compressor on the fiber: retarder analogy on first-order modes.

    ``axis_angle`` is the compression direction in the transverse plane
    (measured from x); the aligned first-order component picks up
    exp(i retardance) relative to the perpendicular one.
    """

    axis_angle: float
    retardance: float

    def __post_init__(self):
        if not 0.0 <= self.retardance < 2.0 * math.pi:
            raise ValueError("retardance must lie in [0, 2*pi)")

    def matrix(self) -> np.ndarray:
        """2x2 unitary on (c_10, c_01)."""
        u = np.array([math.cos(self.axis_angle), math.sin(self.axis_angle)])
        proj = np.outer(u, u).astype(complex)
        perp = np.eye(2, dtype=complex) - proj
        return cmath.exp(1j * self.retardance) * proj + perp


COMPRESS_Y_QUARTER = CompressorSpec(axis_angle=math.pi / 2, retardance=math.pi / 2)


def _compress_index(idx: HGIndex, mat: np.ndarray) -> dict[HGIndex, complex]:
    if idx.order == 0:
        return {idx: 1.0 + 0j}
    if idx.order != 1:
        raise ValueError("compressor model limited to first order")
    src = 0 if idx.n == 1 else 1  # matrix basis is (c_10, c_01)
    out = {
        HGIndex(1, 0): complex(mat[0, src]),
        HGIndex(0, 1): complex(mat[1, src]),
    }
    return {k: v for k, v in out.items() if v != 0}


def compressor_apply(state, spec: CompressorSpec):
    """Apply a compressor to a single- or two-photon state.

    Acts as a unitary on the (HG10, HG01) subspace, leaves HG00 untouched,
    and rejects states with support above first order.
    """
    mat = spec.matrix()
    if isinstance(state, ModeExpansion):
        out: dict[HGIndex, complex] = {}
        for idx, amp in state.terms.items():
            for jdx, c in _compress_index(idx, mat).items():
                out[jdx] = out.get(jdx, 0j) + amp * c
        return ModeExpansion(out, state.geometry).pruned(1e-300)
    if isinstance(state, BiphotonExpansion):
        acc: dict[tuple[HGIndex, HGIndex], complex] = {}
        for (ia, ib), amp in state.terms.items():
            for ja, ca in _compress_index(ia, mat).items():
                for jb, cb in _compress_index(ib, mat).items():
                    key = (ja, jb)
                    acc[key] = acc.get(key, 0j) + amp * ca * cb
        return BiphotonExpansion(acc, state.polarization, state.geometry).pruned(1e-300)
    raise TypeError("state must be a ModeExpansion or BiphotonExpansion")


@dataclass
class HeraldResult:
    """Conditional single-photon state after a trigger detection."""

    spatial: ModeExpansion
    polarization: dict[str, complex]
    probability: float


def herald(
    sort_result: BiphotonSortResult,
    trigger_port: str = "A",
    trigger_mode=HGIndex(0, 0),
) -> HeraldResult:
    """Condition on detecting ``trigger_mode`` in ``trigger_port``.

    The partner photon exits the complementary port; its normalized
    spatial state is returned together with the (unconsumed) two-photon
    polarization and the overall herald probability.
    """
    if trigger_port not in ("A", "B"):
        raise ValueError("trigger port must be 'A' or 'B'")
    other = "B" if trigger_port == "A" else "A"
    branch = sort_result.branches[trigger_port + other]
    if branch.probability <= 0.0 or branch.state is None:
        raise ValueError("zero-probability trigger")
    trig = HGIndex(*trigger_mode)
    partner: dict[HGIndex, complex] = {}
    for (ia, ib), amp in branch.state.terms.items():
        if ia == trig:
            partner[ib] = partner.get(ib, 0j) + amp
    state = ModeExpansion(partner, branch.state.geometry)
    power = state.norm_sq()
    if power == 0.0:
        raise ValueError("zero-probability trigger")
    return HeraldResult(
        spatial=state.scaled(1.0 / math.sqrt(power)),
        polarization=dict(branch.state.polarization),
        probability=branch.probability * power,
    )


# ---------------------------------------------------------------------------
# Entanglement diagnostics
# ---------------------------------------------------------------------------

def schmidt_coefficients(b: BiphotonExpansion) -> list[float]:
    """Schmidt spectrum of a first-order x first-order biphoton state.

    Singular values of the 2x2 coefficient matrix over (HG10, HG01) for
    each photon, normalized to unit sum of squares; sorted descending.
    States with support outside that span are rejected.
    """
    basis = (HGIndex(1, 0), HGIndex(0, 1))
    mat = np.zeros((2, 2), dtype=complex)
    for (ia, ib), amp in b.terms.items():
        if ia not in basis or ib not in basis:
            raise ValueError("unsupported terms present")
        mat[basis.index(ia), basis.index(ib)] = amp
    sv = np.linalg.svd(mat, compute_uv=False)
    total = float(np.sum(sv**2))
    if total == 0.0:
        raise ValueError("zero state has no Schmidt spectrum")
    sv = sv / math.sqrt(total)
    return sorted((float(s) for s in sv), reverse=True)


@dataclass
class PathSplitReport:
    """Outcome of separating a polarization-Bell biphoton onto two paths."""

    spatial_schmidt: list[float]
    pbs_success_probability: float
    bs_coincidence_probability: float
    polarization_entanglement_consumed: bool


def pbs_split_bell(b: BiphotonExpansion) -> PathSplitReport:
    """Separate co-propagating photons with a polarizing beam splitter.

    Requires the symmetric HV+VH polarization.  The PBS routes H to one
    path and V to the other deterministically, consuming the polarization
    entanglement while the spatial coefficient matrix (and hence the
    spatial Schmidt spectrum) is untouched.  The 50:50 splitter
    alternative post-selects on one photon per path with probability 1/2.
    """
    pol = b.polarization
    hv = pol.get("HV", 0j)
    vh = pol.get("VH", 0j)
    if (
        abs(pol.get("HH", 0j)) > 1e-9
        or abs(pol.get("VV", 0j)) > 1e-9
        or abs(hv) < 1e-12
        or abs(hv - vh) > 1e-9 * abs(hv)
    ):
        raise ValueError("polarization state unsupported; need HV + VH")
    return PathSplitReport(
        spatial_schmidt=schmidt_coefficients(b.normalized()),
        pbs_success_probability=1.0,
        bs_coincidence_probability=0.5,
        polarization_entanglement_consumed=True,
    )
