"""Command-line front end.

Subcommands: mode, sort, interfere, sweep-theta, cascade, pipeline.
All artifacts are byte-deterministic for identical invocations: fixed
float formatting, no timestamps, versions recorded in a sidecar
``metadata.txt``.  Exit codes: 0 success, 2 usage, 3 numeric/model error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import __version__
from . import formats
from .geometry import sweep_theta
from .interferometer import (
    SagnacStage,
    cascade_build,
    cascade_route,
    parse_network,
    port_powers,
    sagnac_transfer,
)
from .modes import (
    BeamGeometry,
    GridSpec,
    HGIndex,
    LGIndex,
    ModeExpansion,
    decompose_grid,
    evaluate_expansion,
    lg_to_hg,
    rotate_exact,
    sample_lg,
    sample_mode,
)
from . import quantum as Q


class UsageError(Exception):
    pass


# Interference defaults frozen for reproducible fork demos: the reference
# beam is steered 0.75 w0 below the output axis with a quarter-wave path
# offset, and tilted by 10 fringes across the window.  Analysis cuts sit
# at +-1.5 w0 with a 5 percent row-relative peak threshold.
FORK_TILT_FRINGES = 10.0
FORK_OFFSET = (0.0, -0.75)
FORK_REF_PHASE = math.pi / 2
FORK_CUT_W0 = 1.5
FORK_THRESHOLD = 0.05


def _preset_hg45(geom: BeamGeometry) -> ModeExpansion:
    inv = 1.0 / math.sqrt(2.0)
    return ModeExpansion({HGIndex(1, 0): inv, HGIndex(0, 1): inv}, geom)


def _preset_hg45m(geom: BeamGeometry) -> ModeExpansion:
    inv = 1.0 / math.sqrt(2.0)
    return ModeExpansion({HGIndex(1, 0): inv, HGIndex(0, 1): -inv}, geom)


def _preset_fiber_demo(geom: BeamGeometry) -> ModeExpansion:
    # Fiber output used in the sorting demo: 85 percent fundamental plus
    # 15 percent split equally over the diagonal first-order superposition.
    first = math.sqrt(0.15 / 2.0)
    return ModeExpansion(
        {
            HGIndex(0, 0): math.sqrt(0.85),
            HGIndex(1, 0): first,
            HGIndex(0, 1): -first,
        },
        geom,
    )


PRESETS = {
    "hg45": _preset_hg45,
    "hg45m": _preset_hg45m,
    "fiber-demo": _preset_fiber_demo,
}


def parse_mode_spec(spec: str, geom: BeamGeometry, grid: GridSpec) -> ModeExpansion:
    """Resolve ``hg:n,m``, ``lg:p,l``, a preset name, or an expansion file."""
    if spec in PRESETS:
        return PRESETS[spec](geom)
    if spec.startswith("hg:"):
        try:
            n, m = (int(p) for p in spec[3:].split(","))
        except ValueError:
            raise UsageError(f"bad mode spec '{spec}': expected hg:n,m") from None
        return ModeExpansion({HGIndex(n, m): 1.0}, geom)
    if spec.startswith("lg:"):
        try:
            p, l = (int(v) for v in spec[3:].split(","))
        except ValueError:
            raise UsageError(f"bad mode spec '{spec}': expected lg:p,l") from None
        idx = LGIndex(p, l)
        if idx == LGIndex(0, 0):
            return ModeExpansion({HGIndex(0, 0): 1.0}, geom)
        if idx.p == 0 and abs(idx.l) == 1:
            return lg_to_hg(idx, geom)
        field = sample_lg(idx, geom, grid)
        expansion, _residual = decompose_grid(field, geom, idx.order)
        return expansion.pruned(1e-10)
    if os.path.exists(spec):
        e = formats.read_expansion(spec)
        return ModeExpansion(e.terms, geom)
    raise UsageError(f"unknown mode spec or missing file '{spec}'")


def _stem(spec: str) -> str:
    if os.path.exists(spec):
        base = os.path.basename(spec)
        return os.path.splitext(base)[0]
    return spec.replace(":", "_").replace(",", "_").replace("-", "_")


def _write_bytes(path: str, blob: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(blob)


def _image_paths(args, stem: str, kind: str) -> str:
    ext = {"pgm": "pgm", "ppm": "ppm", "csv": "csv"}[args.format]
    return os.path.join(args.out_dir, f"{stem}_{kind}.{ext}")


def _emit_image(args, path: str, levels: np.ndarray, raw: np.ndarray) -> None:
    if args.format == "pgm":
        _write_bytes(path, formats.pgm_bytes(levels))
    elif args.format == "ppm":
        _write_bytes(path, formats.ppm_bytes(levels))
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(formats.csv_matrix(raw))


def _write_metadata(args) -> None:
    path = os.path.join(args.out_dir, "metadata.txt")
    lines = [
        f"tool sagnacsim {__version__}",
        f"command {args.command}",
        f"w0 {formats.fmt_float(args.w0)}",
        f"grid_size {args.grid_size}",
        f"half_width {formats.fmt_float(args.half_width_value)}",
        f"format {args.format}",
    ]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _geometry_and_grid(args) -> tuple[BeamGeometry, GridSpec]:
    geom = BeamGeometry(args.w0)
    half = args.half_width if args.half_width is not None else 8.0 * args.w0
    args.half_width_value = half
    return geom, GridSpec(half, args.grid_size)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_mode(args) -> int:
    geom, grid = _geometry_and_grid(args)
    stem = _stem(args.spec)
    if args.spec.startswith("lg:"):
        try:
            p, l = (int(v) for v in args.spec[3:].split(","))
        except ValueError:
            raise UsageError(f"bad mode spec '{args.spec}'") from None
        field = sample_lg(LGIndex(p, l), geom, grid)
    else:
        field = sample_mode(parse_mode_spec(args.spec, geom, grid), grid)
    path = _image_paths(args, stem, "intensity")
    _emit_image(args, path, formats.intensity_levels(field), np.abs(field.values[::-1]) ** 2)
    print(f"wrote {path}")
    if args.phase:
        ppath = _image_paths(args, stem, "phase")
        _emit_image(
            args, ppath, formats.phase_levels(field), np.angle(field.values[::-1])
        )
        print(f"wrote {ppath}")
    _write_metadata(args)
    return 0


def cmd_sort(args) -> int:
    geom, grid = _geometry_and_grid(args)
    expansion = parse_mode_spec(args.spec, geom, grid)
    stage = SagnacStage(args.theta, args.phi)
    pair = sagnac_transfer(expansion, stage)
    pa, pb = port_powers(pair)
    stem = _stem(args.spec)
    for port, state in (("portA", pair.port_a), ("portB", pair.port_b)):
        field = sample_mode(state, grid)
        path = _image_paths(args, f"{stem}_{port}", "intensity")
        _emit_image(
            args, path, formats.intensity_levels(field), np.abs(field.values[::-1]) ** 2
        )
    print(f"port A power {pa:.6f}")
    print(f"port B power {pb:.6f}")
    _write_metadata(args)
    return 0


def cmd_interfere(args) -> int:
    geom, grid = _geometry_and_grid(args)
    if args.tilt < 0:
        raise UsageError("tilt must be nonnegative")
    expansion = parse_mode_spec(args.spec, geom, grid)
    ref_spec = args.reference if args.reference is not None else args.spec
    reference = parse_mode_spec(ref_spec, geom, grid)

    # Sorter output is the input rotated by 90 degrees.
    output = expansion if args.no_output_rotation else rotate_exact(
        expansion, math.pi / 2
    )
    offset = tuple(args.offset) if args.offset is not None else FORK_OFFSET
    if args.spec == "hg45" and args.offset is None:
        offset = (0.75, -0.75)
    if args.spec == "hg45" and not args.no_extra_mirror:
        # The reference arm's extra mirror flips x, which for the diagonal
        # mode cancels the sorter rotation.
        reference = ModeExpansion(
            {i: c * (-1.0) ** i.n for i, c in reference.terms.items()},
            reference.geometry,
        )

    xs = grid.axis()
    X, Y = np.meshgrid(xs, xs)
    tau = math.pi * args.tilt / grid.half_width
    dx, dy = (offset[0] * geom.w0, offset[1] * geom.w0)
    out_field = evaluate_expansion(output, X, Y)
    ref_field = evaluate_expansion(reference, X - dx, Y - dy) * np.exp(
        1j * (tau * X + args.ref_phase)
    )
    inten = np.abs(out_field + ref_field) ** 2

    stem = _stem(args.spec)
    path = _image_paths(args, stem, "interference")
    levels = formats.scale_to_levels(inten)[::-1]
    _emit_image(args, path, levels, inten[::-1])
    print(f"wrote {path}")

    if args.analyze_fork:
        upper, lower = fork_fringe_counts(inten, xs, cut=args.cut * geom.w0)
        print(f"fork upper={upper} lower={lower} diff={upper - lower}")
    _write_metadata(args)
    return 0


def fork_fringe_counts(
    inten: np.ndarray, xs: np.ndarray, cut: float, threshold: float = FORK_THRESHOLD
) -> tuple[int, int]:
    """Count fringe maxima along the two horizontal analysis cuts."""

    def count(row: np.ndarray) -> int:
        thr = threshold * float(row.max())
        hits = 0
        for i in range(1, len(row) - 1):
            if row[i] > thr and row[i] > row[i - 1] and row[i] >= row[i + 1]:
                hits += 1
        return hits

    i_up = int(np.argmin(np.abs(xs - cut)))
    i_lo = int(np.argmin(np.abs(xs + cut)))
    return count(inten[i_up]), count(inten[i_lo])


def cmd_sweep_theta(args) -> int:
    geom, _grid = _geometry_and_grid(args)
    rows = ["theta_rad,omega_rad,psi_rad"]
    for theta, omega, psi in sweep_theta(args.count, args.theta_min, args.theta_max):
        rows.append(
            ",".join(formats.fmt_float(v) for v in (theta, omega, psi))
        )
    path = os.path.join(args.out_dir, args.output)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"wrote {path}")
    _write_metadata(args)
    return 0


def _parse_l_list(text: str) -> list[int]:
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if ".." in chunk:
            lo, hi = chunk.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif chunk:
            out.append(int(chunk))
    if not out:
        raise UsageError("empty l list")
    return out


def cmd_cascade(args) -> int:
    geom, grid = _geometry_and_grid(args)
    if args.network is not None:
        with open(args.network, "r", encoding="ascii") as fh:
            root = parse_network(fh.read())
    else:
        root = cascade_build(args.depth)
    rows = ["input_label,leaf_label,power_fraction"]
    if args.input is not None:
        expansion = parse_mode_spec(args.input, geom, grid)
        leaves = cascade_route(root, expansion)
        label = _stem(args.input)
        for leaf in leaves:
            rows.append(f"{label},{leaf.label},{formats.fmt_float(leaf.power)}")
    else:
        for l in _parse_l_list(args.l):
            leaves = cascade_route(root, LGIndex(0, l))
            for leaf in leaves:
                rows.append(f"l={l},{leaf.label},{formats.fmt_float(leaf.power)}")
    path = os.path.join(args.out_dir, args.output)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(rows) + "\n")
    print(f"wrote {path}")
    _write_metadata(args)
    return 0


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------

NAMED_PIPELINES = {
    "bell": """\
source hg00
filter
sort
select BB
schmidt
pbs-split
""",
    "herald": """\
source hg45
filter
sort
herald port=A mode=0,0
""",
    "herald-lg": """\
source hg45
filter
compressor axis=1.5707963267948966 retardance=1.5707963267948966
sort
herald port=A mode=0,0
""",
}


def _kv_params(parts: list[str], lineno: int) -> dict[str, str]:
    kv = {}
    for tok in parts:
        if "=" not in tok:
            raise ValueError(f"line {lineno}: malformed parameter '{tok}'")
        key, val = tok.split("=", 1)
        kv[key] = val
    return kv


def run_pipeline_script(script: str, name: str, overrides: dict) -> list[str]:
    """Execute a pipeline script and return its report lines."""
    report = [f"pipeline {name}"]
    state = None
    sort_result = None
    herald_result = None
    geom = Q.DEFAULT_GEOMETRY

    for lineno, raw in enumerate(script.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        op = parts[0]
        if op == "source":
            if len(parts) < 2:
                raise ValueError(f"line {lineno}: source needs an argument")
            if parts[1] == "hg00":
                state = Q.spdc_hg00(
                    overrides.get("c0", Q.DEFAULT_C0),
                    overrides.get("c1", Q.DEFAULT_C1),
                    overrides.get("c2", Q.DEFAULT_C2),
                )
            elif parts[1] == "hg45":
                state = Q.spdc_hg45(overrides.get("c1", Q.DEFAULT_C1))
            elif parts[1] == "table":
                if len(parts) != 3:
                    raise ValueError(f"line {lineno}: source table needs a path")
                with open(parts[2], "r", encoding="ascii") as fh:
                    state = Q.load_biphoton_table(fh)
            else:
                raise ValueError(f"line {lineno}: unknown source '{parts[1]}'")
            report.append(
                f"source {parts[1]}: norm2={formats.fmt_float(state.norm_sq())}"
                f" terms={len(state.terms)}"
            )
        elif op == "filter":
            if state is None:
                raise ValueError(f"line {lineno}: filter before source")
            state, prob = Q.fiber_filter_biphoton(state)
            report.append(f"filter: post_selection={formats.fmt_float(prob)}")
        elif op == "compressor":
            kv = _kv_params(parts[1:], lineno)
            spec = Q.CompressorSpec(
                axis_angle=float(kv.get("axis", math.pi / 2)),
                retardance=float(kv.get("retardance", math.pi / 2)),
            )
            if state is None:
                raise ValueError(f"line {lineno}: compressor before source")
            state = Q.compressor_apply(state, spec)
            report.append(
                f"compressor: axis={formats.fmt_float(spec.axis_angle)}"
                f" retardance={formats.fmt_float(spec.retardance)}"
            )
        elif op == "sort":
            kv = _kv_params(parts[1:], lineno)
            stage = SagnacStage(
                float(kv.get("theta", math.pi / 4)), float(kv.get("phi", 0.0))
            )
            if state is None:
                raise ValueError(f"line {lineno}: sort before source")
            sort_result = Q.sort_biphoton(state, stage)
            probs = " ".join(
                f"P_{k}={formats.fmt_float(v.probability)}"
                for k, v in sorted(sort_result.branches.items())
            )
            report.append(
                f"sort: theta={formats.fmt_float(stage.theta)}"
                f" phi={formats.fmt_float(stage.phi)} {probs}"
            )
        elif op == "select":
            if len(parts) != 2 or parts[1] not in ("AA", "AB", "BA", "BB"):
                raise ValueError(f"line {lineno}: select needs AA|AB|BA|BB")
            if sort_result is None:
                raise ValueError(f"line {lineno}: select before sort")
            prob = sort_result.probability(parts[1])
            state = sort_result.state(parts[1])
            report.append(
                f"select {parts[1]}: probability={formats.fmt_float(prob)}"
            )
        elif op == "herald":
            kv = _kv_params(parts[1:], lineno)
            port = kv.get("port", "A")
            try:
                n, m = (int(v) for v in kv.get("mode", "0,0").split(","))
            except ValueError:
                raise ValueError(f"line {lineno}: bad herald mode") from None
            if sort_result is None:
                raise ValueError(f"line {lineno}: herald before sort")
            herald_result = Q.herald(sort_result, port, HGIndex(n, m))
            report.append(
                f"herald port={port} mode={n},{m}:"
                f" probability={formats.fmt_float(herald_result.probability)}"
            )
            for ref_name, ref in (
                ("hg45", _preset_hg45(geom)),
                ("lg+1", lg_to_hg(LGIndex(0, 1), geom)),
                ("lg-1", lg_to_hg(LGIndex(0, -1), geom)),
            ):
                ov = abs(ref.inner(herald_result.spatial))
                report.append(f"  overlap {ref_name}={ov:.9f}")
        elif op == "schmidt":
            if state is None:
                raise ValueError(f"line {lineno}: schmidt before a state exists")
            coeffs = Q.schmidt_coefficients(state)
            inside = ", ".join(f"{c:.7f}" for c in coeffs)
            report.append(f"schmidt: ({inside})")
        elif op == "pbs-split":
            if state is None:
                raise ValueError(f"line {lineno}: pbs-split before a state exists")
            rep = Q.pbs_split_bell(state)
            inside = ", ".join(f"{c:.7f}" for c in rep.spatial_schmidt)
            report.append(
                f"pbs-split: success={formats.fmt_float(rep.pbs_success_probability)}"
                f" bs_coincidence={formats.fmt_float(rep.bs_coincidence_probability)}"
                f" spatial_schmidt=({inside})"
            )
        else:
            raise ValueError(f"line {lineno}: unknown pipeline op '{op}'")

    if herald_result is not None:
        report.append("final heralded state:")
        for idx, amp in sorted(herald_result.spatial.terms.items()):
            report.append(
                f"  {idx.n} {idx.m} {formats.fmt_float(amp.real)}"
                f" {formats.fmt_float(amp.imag)}"
            )
    elif state is not None:
        report.append("final state:")
        for (a, b), amp in sorted(state.terms.items()):
            report.append(
                f"  {a.n} {a.m} {b.n} {b.m} {formats.fmt_float(amp.real)}"
                f" {formats.fmt_float(amp.imag)}"
            )
    return report


def cmd_pipeline(args) -> int:
    _geometry_and_grid(args)
    overrides = {}
    if args.c0 is not None:
        overrides["c0"] = args.c0
    if args.c1 is not None:
        overrides["c1"] = args.c1
    if args.c2 is not None:
        overrides["c2"] = args.c2
    if args.name in NAMED_PIPELINES:
        script = NAMED_PIPELINES[args.name]
        name = args.name
    elif os.path.exists(args.name):
        with open(args.name, "r", encoding="ascii") as fh:
            script = fh.read()
        name = _stem(args.name)
    else:
        raise UsageError(f"unknown pipeline '{args.name}'")
    report = run_pipeline_script(script, name, overrides)
    text = "\n".join(report) + "\n"
    sys.stdout.write(text)
    path = os.path.join(args.out_dir, f"pipeline_{name}.txt")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)
    _write_metadata(args)
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------

def _add_common_options(parser, suppress: bool) -> None:
    # The same flags are registered on the main parser (real defaults) and
    # on every subparser (SUPPRESS), so they work on either side of the
    # subcommand without the subparser clobbering earlier values.
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument(
        "--w0", type=float, default=default(1.0), help="beam waist radius"
    )
    parser.add_argument(
        "--grid-size", type=int, default=default(256), help="samples per grid side"
    )
    parser.add_argument(
        "--half-width", type=float, default=default(None),
        help="grid half width (default 8*w0)",
    )
    parser.add_argument("--out-dir", default=default("."), help="output directory")
    parser.add_argument(
        "--format", choices=("pgm", "ppm", "csv"), default=default("pgm"),
        help="image output format",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sagnacsim",
        description="Transverse-mode sorting in out-of-plane Sagnac interferometers.",
    )
    _add_common_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _add_common_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "mode", help="render a mode's intensity (and phase)", parents=[common]
    )
    p.add_argument("spec", help="hg:n,m | lg:p,l | hg45 | fiber-demo | file")
    p.add_argument("--phase", action="store_true", help="also write a phase image")
    p.set_defaults(func=cmd_mode)

    p = sub.add_parser("sort", help="split a mode over the two Sagnac ports", parents=[common])
    p.add_argument("spec")
    p.add_argument("--theta", type=float, default=math.pi / 4)
    p.add_argument("--phi", type=float, default=0.0)
    p.set_defaults(func=cmd_sort)

    p = sub.add_parser("interfere", help="render output-vs-reference interference", parents=[common])
    p.add_argument("spec")
    p.add_argument("--reference", default=None, help="reference mode spec")
    p.add_argument(
        "--tilt", type=float, default=FORK_TILT_FRINGES,
        help="reference tilt in fringes across the window",
    )
    p.add_argument(
        "--offset", type=float, nargs=2, default=None, metavar=("DX", "DY"),
        help="reference beam offset in units of w0",
    )
    p.add_argument("--ref-phase", type=float, default=FORK_REF_PHASE)
    p.add_argument("--no-output-rotation", action="store_true")
    p.add_argument("--no-extra-mirror", action="store_true")
    p.add_argument("--analyze-fork", action="store_true")
    p.add_argument("--cut", type=float, default=FORK_CUT_W0)
    p.set_defaults(func=cmd_interfere)

    p = sub.add_parser("sweep-theta", help="tabulate theta, omega, psi", parents=[common])
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--theta-min", type=float, default=0.0)
    p.add_argument("--theta-max", type=float, default=math.pi / 2)
    p.add_argument("--output", default="sweep_theta.csv")
    p.set_defaults(func=cmd_sweep_theta)

    p = sub.add_parser("cascade", help="route OAM values through a sorting tree", parents=[common])
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--network", default=None, help="network description file")
    p.add_argument("--l", default="-3..3", help="comma list or a..b range")
    p.add_argument("--input", default=None, help="expansion file to route")
    p.add_argument("--output", default="cascade.csv")
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("pipeline", help="run a biphoton pipeline", parents=[common])
    p.add_argument("name", help="bell | herald | herald-lg | script file")
    p.add_argument("--c0", type=float, default=None)
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--c2", type=float, default=None)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        os.makedirs(args.out_dir, exist_ok=True)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
