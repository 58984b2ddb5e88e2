"""Command-line entry point.

    cavityhall butterfly|edges|evolve --config FILE [--out PATH] [--override KEY=VALUE ...]

Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 numerical
abort, 4 ambiguous topology.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, _kernels
from .config import MODES, ConfigError, RunConfig, parse_config
from .dynamics import IntegrationError, build_initial_state, evolve
from .spectrum import (
    AmbiguousTopologyError,
    bulk_spectrum,
    butterfly,
    edge_spectrum,
    find_gaps,
    gap_invariant,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3
EXIT_AMBIGUOUS = 4

BUTTERFLY_HEADER = "phi_p,phi_q,energy"
BANDS_HEADER = "ky,band_index,energy,left_weight,right_weight,velocity"
GAPS_HEADER = "gap_lower,gap_upper,gamma,n_left,n_right"
EVOLVE_HEADER = (
    "kt,re_alpha,im_alpha,population,j_hall,j_x_total,j_co_y,j_cl_y,j_qu_y,"
    "trace,herm_residual,min_eig,continuity_residual"
)


def fmt(x) -> str:
    """12 significant digits; negative zero is written as 0."""
    x = float(x)
    if x == 0:
        return "0"
    return "%.12g" % x


def _row(values) -> str:
    return ",".join(v if isinstance(v, str) else str(v) if isinstance(v, int) else fmt(v) for v in values)


def _write_sidecar(path: Path, cfg: RunConfig, extra: dict | None = None) -> None:
    doc = {
        "version": __version__,
        "mode": cfg.mode,
        "backend": _kernels.BACKEND,
        "config": cfg.as_dict(),
    }
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _out_path(cfg: RunConfig, out: str | None) -> Path:
    return Path(out or cfg.output_path or f"{cfg.mode}.csv")


def run_butterfly(cfg: RunConfig, out: str | None = None) -> int:
    path = _out_path(cfg, out)
    g = cfg.grids
    data = butterfly(cfg.params, g.q_max, g.n_kx, g.n_nu)
    with path.open("w", newline="") as fh:
        fh.write(BUTTERFLY_HEADER + "\n")
        for flux, energies in data:  # fluxes ascending, energies sorted
            p, q = flux.numerator, flux.denominator
            fh.writelines(f"{p},{q},{fmt(e)}\n" for e in energies)
    _write_sidecar(path.with_suffix(".json"), cfg)
    logger.info("wrote %s", path)
    return EXIT_OK


def run_edges(cfg: RunConfig, out: str | None = None) -> int:
    base = _out_path(cfg, out)
    stem = base.with_suffix("")
    bands_path = stem.parent / f"{stem.name}_bands.csv"
    gaps_path = stem.parent / f"{stem.name}_gaps.csv"
    g, p = cfg.grids, cfg.params

    bulk = bulk_spectrum(p, g.n_kx, g.n_nu)
    gaps = find_gaps(bulk, g.min_width)
    edge = edge_spectrum(p, g.l_open, g.n_ky, g.edge_fraction)

    with bands_path.open("w", newline="") as fh:
        fh.write(BANDS_HEADER + "\n")
        for k, ky in enumerate(edge.ky):
            for band in range(edge.size):
                fh.write(
                    _row(
                        (
                            ky,
                            band,
                            edge.energies[k, band],
                            edge.left_weight[k, band],
                            edge.right_weight[k, band],
                            edge.velocity[k, band],
                        )
                    )
                    + "\n"
                )

    status = EXIT_OK
    ambiguous = []
    with gaps_path.open("w", newline="") as fh:
        fh.write(GAPS_HEADER + "\n")
        for gap in gaps:
            try:
                rec = gap_invariant(edge, gap, "left", threshold=g.edge_threshold)
            except AmbiguousTopologyError as exc:
                logger.error("%s", exc)
                ambiguous.append({"lower": gap.lower, "upper": gap.upper, "ky": exc.ky})
                fh.write(_row((gap.lower, gap.upper, "", "", "")) + "\n")
                status = EXIT_AMBIGUOUS
                continue
            fh.write(_row((rec.lower, rec.upper, rec.gamma, rec.n_left, rec.n_right)) + "\n")

    extra = {"warnings": edge.warnings}
    if ambiguous:
        extra["ambiguous_gaps"] = ambiguous
    _write_sidecar(stem.parent / f"{stem.name}.json", cfg, extra)
    logger.info("wrote %s and %s", bands_path, gaps_path)
    return status


def _record_row(r) -> str:
    return _row(
        (
            r.time,
            r.alpha.real,
            r.alpha.imag,
            r.population,
            r.j_hall,
            r.j_x_total,
            r.j_co_y,
            r.j_cl_y,
            r.j_qu_y,
            r.trace,
            r.herm_residual,
            r.min_eig,
            r.continuity_residual,
        )
    )


def run_evolve(cfg: RunConfig, out: str | None = None) -> int:
    path = _out_path(cfg, out)
    d = cfg.dynamics
    s0 = build_initial_state(d.initial, cfg.params.lattice_size)
    status = EXIT_OK
    extra = {}
    with path.open("w", newline="") as fh:
        fh.write(EVOLVE_HEADER + "\n")
        try:
            for rec in evolve(
                s0,
                cfg.params,
                d.h,
                d.t_max,
                sample_every=d.sample_every,
                stepper=d.stepper,
                fluctuations=d.fluctuations,
                max_trace_drift=d.max_trace_drift,
            ):
                fh.write(_record_row(rec) + "\n")
        except IntegrationError as exc:
            logger.error("integration aborted: %s", exc)
            fh.write(f"#ABORT,{fmt(exc.time)},{str(exc).replace(',', ';')}\n")
            extra["abort"] = {"time": exc.time, "reason": str(exc)}
            status = EXIT_ABORT
    _write_sidecar(path.with_suffix(".json"), cfg, extra)
    logger.info("wrote %s", path)
    return status


RUNNERS = {"butterfly": run_butterfly, "edges": run_edges, "evolve": run_evolve}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cavityhall", description=__doc__.splitlines()[0])
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", required=True, help="INI configuration file")
    ap.add_argument("--out", help="output CSV path (edges: stem for _bands/_gaps files)")
    ap.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config value; KEY is 'key' or 'section.key' (repeatable)",
    )
    ap.add_argument("-v", "--verbose", action="store_true", help="log defaults and progress")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        logger.error("cannot read config: %s", exc)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, mode=args.mode, overrides=args.override)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        return RUNNERS[cfg.mode](cfg, args.out)
    except OSError as exc:
        logger.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
