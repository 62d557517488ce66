"""Command line harness: ``helmwave <solve|spectrum|oned|sweep> [--flags]``.

Exit codes: 0 success, 1 usage/configuration error, 2 GMRES did not converge.
Every command writes CSV (header row, comma separated).
"""
from __future__ import annotations

import argparse
import csv
import logging
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .decomposition import DecompositionError, LevelSpec, build_hierarchy
from .fem import RectMesh, random_problem
from .interface import coarse_counts, interface_operator, rsvd
from .oned import Mesh1D, bisect, one_step_solve, write_basis_csv
from .pipeline import MethodParams, make_field, setup, solve
from .reference import TABLES
from .schwarz import ExactSolve

log = logging.getLogger("helmwave")

RESULT_FIELDS = [
    "problem", "omega", "c0", "nlayers", "levels", "n", "n_c", "n_i", "coarse_dim_total",
    "iterations", "final_relres", "setup_seconds", "solve_seconds", "seed", "converged",
]
TIMING_FIELDS = ("setup_seconds", "solve_seconds")
SPECTRUM_FIELDS = ["subdomain_id", "index", "sigma"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    mode: str = "solve"
    problem: str = "free"
    omega: float | None = None  # None: k_max h = 1
    c0: float = 5.0
    nlayers: int = 8
    first_layer: str = "fast"
    levels: str = "2x2"
    n: int = 4
    nc: tuple[int, ...] = (0,)
    ni: tuple[int, ...] = (1,)
    overlap: int = 2
    tol: float = 1e-5
    max_iter: int = 500
    seed: int = 1
    oversampling: int = 5
    output: str | None = None
    # spectrum
    rsvd_modes: int | None = None
    subdomain: int | None = None
    threshold: float = 0.1
    # oned
    bisections: int = 1
    # sweep
    ns: tuple[int, ...] = ()
    ms: tuple[int, ...] = ()
    ells: tuple[int, ...] = ()
    nc_cells: tuple[int, ...] = ()
    preset: str | None = None
    seeds: tuple[int, ...] = ()
    jobs: int = 1

    def spec(self) -> LevelSpec:
        try:
            return LevelSpec.parse(self.levels, self.overlap)
        except DecompositionError as exc:
            raise ConfigError(str(exc)) from exc

    def wavenumber(self, spec: LevelSpec) -> float:
        if self.omega is not None:
            return float(self.omega)
        return float(spec.total[0] * self.n)

    def params(self, seed: int | None = None) -> MethodParams:
        return MethodParams(
            n_c=tuple(self.nc), n_i=tuple(self.ni), overlap_elems=self.overlap, tol=self.tol,
            max_iterations=self.max_iter, seed=self.seed if seed is None else seed,
            oversampling=self.oversampling,
        )


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def run_cell(cfg: RunConfig, seed: int | None = None) -> dict:
    """Build and solve one configuration; returns a result row."""
    spec = cfg.spec()
    if cfg.n < 1:
        raise ConfigError("--n must be positive")
    mx, my = spec.total
    mesh = RectMesh(mx * cfg.n, my * cfg.n)
    omega = cfg.wavenumber(spec)
    try:
        field_ = make_field(cfg.problem, omega, cfg.c0, cfg.nlayers, cfg.first_layer == "fast")
        params = cfg.params(seed)
        counts = coarse_counts(params.n_c, spec.depth)
        inner = params.inner_counts(spec.depth)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    prob = random_problem(mesh, field_, params.seed)
    su = setup(mesh, field_, spec, params)
    rep = solve(prob, su, params)
    layered = cfg.problem == "layered"
    return {
        "problem": cfg.problem,
        "omega": omega,
        "c0": cfg.c0 if layered else None,
        "nlayers": cfg.nlayers if layered else None,
        "levels": str(spec),
        "n": cfg.n,
        "n_c": "/".join(map(str, counts)),
        "n_i": "/".join(map(str, inner)),
        "coarse_dim_total": rep.coarse_dim_total,
        "iterations": rep.iterations,
        "final_relres": rep.final_relres,
        "setup_seconds": round(rep.setup_seconds, 4),
        "solve_seconds": round(rep.solve_seconds, 4),
        "seed": params.seed,
        "converged": bool(rep.converged and rep.final_relres < params.tol),
    }


def _median_row(rows: list[dict]) -> dict:
    its = [r["iterations"] for r in rows]
    med = statistics.median_low(its)
    row = dict(next(r for r in rows if r["iterations"] == med))
    row["seed"] = "/".join(str(r["seed"]) for r in rows)
    row["converged"] = all(r["converged"] for r in rows)
    row["setup_seconds"] = round(sum(r["setup_seconds"] for r in rows), 4)
    row["solve_seconds"] = round(sum(r["solve_seconds"] for r in rows), 4)
    if len(rows) % 2 == 0:
        row["iterations"] = statistics.median(its)
    return row


class _Sink:
    """CSV writer to a file (appending rows, header once) or stdout."""

    def __init__(self, path: str | None, fields: list[str], append: bool = True):
        self.fields = fields
        if path:
            p = Path(path)
            new = not (append and p.exists() and p.stat().st_size > 0)
            self.fh = open(p, "a" if append and not new else "w", newline="", encoding="utf-8")
            self.own = True
        else:
            new, self.fh, self.own = True, sys.stdout, False
        self.writer = csv.writer(self.fh, lineterminator="\n")
        if new:
            self.writer.writerow(fields)

    def write(self, row: dict):
        self.writer.writerow([_fmt(row.get(f)) for f in self.fields])

    def close(self):
        self.fh.flush()
        if self.own:
            self.fh.close()


def cmd_solve(cfg: RunConfig) -> int:
    seeds = cfg.seeds or (cfg.seed,)
    rows = [run_cell(cfg, s) for s in seeds]
    row = rows[0] if len(rows) == 1 else _median_row(rows)
    sink = _Sink(cfg.output, RESULT_FIELDS)
    sink.write(row)
    sink.close()
    log.info("iterations=%s relres=%.3e converged=%s", row["iterations"], row["final_relres"], row["converged"])
    return 0 if row["converged"] else 2


def spectra(cfg: RunConfig) -> dict[int, np.ndarray]:
    """Singular values of T_i for the level-1 subdomains (or the selected one)."""
    spec = cfg.spec()
    mx, my = spec.total
    mesh = RectMesh(mx * cfg.n, my * cfg.n)
    try:
        field_ = make_field(cfg.problem, cfg.wavenumber(spec), cfg.c0, cfg.nlayers, cfg.first_layer == "fast")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    tree = build_hierarchy(mesh, LevelSpec(spec.levels[:1], spec.overlap_elems), field_)
    out = {}
    for child in tree.root.children:
        if cfg.subdomain is not None and child.id != cfg.subdomain:
            continue
        op = interface_operator(tree, child, ExactSolve.of(child.matrix))
        if 0 in op.shape:
            continue
        if cfg.rsvd_modes:
            s = rsvd(op, cfg.rsvd_modes, cfg.oversampling, cfg.seed, key=child.id).sigma
        else:
            s = np.linalg.svd(op.materialize(), compute_uv=False)
        out[child.id] = s
    return out


def cmd_spectrum(cfg: RunConfig) -> int:
    sig = spectra(cfg)
    sink = _Sink(cfg.output, SPECTRUM_FIELDS, append=False)
    for sid, s in sig.items():
        for j, v in enumerate(s):
            sink.write({"subdomain_id": sid, "index": j, "sigma": float(v)})
        log.info(
            "subdomain %d: %d values, sigma_max=%.4f, #{sigma>%g}=%d%s",
            sid, len(s), s[0], cfg.threshold, int((s > cfg.threshold).sum()),
            " (rsvd)" if cfg.rsvd_modes else "",
        )
    sink.close()
    return 0


def cmd_oned(cfg: RunConfig) -> int:
    n = cfg.n
    k = cfg.omega if cfg.omega is not None else n / 4
    try:
        mesh = Mesh1D(n)
        dec = bisect(mesh, k, cfg.bisections, cfg.overlap)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rng = np.random.default_rng(cfg.seed)
    f = rng.standard_normal(n + 1) + 1j * rng.standard_normal(n + 1)
    _, err = one_step_solve(mesh, k, dec, f)
    count = write_basis_csv(cfg.output or sys.stdout, dec)
    print(f"one-step relative error {err:.3e} (n={n}, k={k:g}, basis vectors={count})", file=sys.stderr)
    return 0


def sweep_cells(cfg: RunConfig) -> list[RunConfig]:
    """Expand ranges into one RunConfig per cell, in deterministic order."""
    table = None
    if cfg.preset:
        if cfg.preset not in TABLES:
            raise ConfigError(f"unknown preset {cfg.preset!r}; choose from {sorted(TABLES)}")
        table = TABLES[cfg.preset]
    hierarchical = bool(cfg.ells) or (table is not None and table.hierarchical and not cfg.ms)
    if cfg.ms and cfg.ells:
        raise ConfigError("give either --m or --ell, not both")
    keys = cfg.ells if hierarchical else cfg.ms
    if table is not None and not keys:
        keys = tuple(sorted({k for (_, k) in table.cells}))
    ns = cfg.ns
    if table is not None and not ns:
        ns = tuple(sorted({n for (n, _) in table.cells}))
    cells = []
    for n in ns:
        for key in keys:
            levels = ",".join(["2x2"] * key) if hierarchical else f"{key}x{key}"
            if table is not None:
                if (n, key) not in table.cells:
                    raise ConfigError(f"preset {table.name} has no cell n={n}, {'ell' if hierarchical else 'm'}={key}")
                ncs = table.cells[(n, key)][0]
                base = replace(cfg, problem=table.problem, c0=table.c0 if table.problem == "layered" else cfg.c0,
                               nlayers=table.nlayers if table.problem == "layered" else cfg.nlayers)
            else:
                ncs, base = cfg.nc_cells or (cfg.nc[-1],), cfg
            for nc in ncs:
                cells.append(replace(base, mode="solve", levels=levels, n=n, nc=(nc,)))
    return cells


def _cell_rows(cell: RunConfig, seeds: tuple[int, ...]) -> dict:
    try:
        rows = [run_cell(cell, s) for s in seeds]
    except ConfigError:
        raise
    except Exception as exc:  # per-cell failure is recorded, the sweep goes on
        log.error("cell %s n=%d nc=%s failed: %s", cell.levels, cell.n, cell.nc, exc)
        return {"problem": cell.problem, "levels": cell.levels, "n": cell.n, "n_c": "/".join(map(str, cell.nc)),
                "seed": "/".join(map(str, seeds)), "converged": False}
    return rows[0] if len(rows) == 1 else _median_row(rows)


def cmd_sweep(cfg: RunConfig) -> int:
    cells = sweep_cells(cfg)
    seeds = cfg.seeds or (cfg.seed,)
    for c in cells:  # surface configuration errors before any work
        c.spec()
    if cfg.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            rows = list(ex.map(_cell_rows, cells, [seeds] * len(cells)))
    else:
        rows = [_cell_rows(c, seeds) for c in cells]
    sink = _Sink(cfg.output, RESULT_FIELDS, append=False)
    for r in rows:
        sink.write(r)
        log.info("%s n=%s n_c=%s -> %s", r.get("levels"), r.get("n"), r.get("n_c"), r.get("iterations"))
    sink.close()
    return 0 if all(r["converged"] for r in rows) else 2


COMMANDS = {"solve": cmd_solve, "spectrum": cmd_spectrum, "oned": cmd_oned, "sweep": cmd_sweep}


def _ints(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(v) for v in text.replace("/", ",").split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="helmwave", description=__doc__.splitlines()[0])
    p.add_argument("mode", choices=sorted(COMMANDS))
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    g = p.add_argument_group("problem")
    g.add_argument("--problem", choices=["free", "layered"])
    g.add_argument("--omega", "--k", dest="omega", type=float,
                   help="angular frequency, equal to k for free space (default: k_max h = 1; oned: n/4)")
    g.add_argument("--c0", type=float)
    g.add_argument("--nlayers", type=int)
    g.add_argument("--first-layer", dest="first_layer", choices=["fast", "slow"], help="speed of the bottom layer: fast (c=1) or slow (c0)")
    g = p.add_argument_group("method")
    g.add_argument("--levels", help="decomposition, e.g. 2x2,2x2")
    g.add_argument("--n", type=_ints, help="elements per leaf subdomain per direction (list for sweep)")
    g.add_argument("--nc", type=_ints, help="coarse modes per subdomain per level, finest last (list of cells for sweep)")
    g.add_argument("--ni", type=_ints, help="Schwarz iterations per level")
    g.add_argument("--overlap", type=int, help="overlap in elements on each side (default 2)")
    g.add_argument("--tol", type=float)
    g.add_argument("--max-iter", dest="max_iter", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--seeds", type=_ints, help="report the median over these seeds")
    g.add_argument("--oversampling", type=int)
    g = p.add_argument_group("spectrum")
    g.add_argument("--rsvd", dest="rsvd_modes", type=int, help="use rsvd with this many modes instead of a full SVD")
    g.add_argument("--subdomain", type=int)
    g.add_argument("--threshold", type=float)
    g = p.add_argument_group("oned")
    g.add_argument("--bisections", type=int)
    g = p.add_argument_group("sweep")
    g.add_argument("--m", dest="ms", type=_ints, help="flat m x m decompositions")
    g.add_argument("--ell", dest="ells", type=_ints, help="number of 2x2 levels")
    g.add_argument("--preset", help=f"published table layout: {', '.join(sorted(TABLES))}")
    g.add_argument("--jobs", type=int)
    p.add_argument("--output", "-o", help="CSV path (default stdout)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def read_config_file(path: str, parser: argparse.ArgumentParser) -> dict[str, str]:
    known = {a.dest: a for a in parser._actions if a.dest not in ("help", "mode", "config")}
    aliases = {}
    for a in known.values():
        for opt in a.option_strings:
            aliases[opt.lstrip("-").replace("-", "_")] = a.dest
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        dest = aliases.get(key.replace("-", "_"))
        if dest is None:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[dest] = value
    return values


def parse_config(argv: list[str]) -> tuple[RunConfig, bool]:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        file_values = read_config_file(args.config, parser)
        parser.set_defaults(**file_values)
        args = parser.parse_args(argv)
    ns = {k: v for k, v in vars(args).items() if v is not None}
    verbose = ns.pop("verbose", False)
    ns.pop("config", None)
    for key in ("n", "nc", "ni"):
        if key in ns and isinstance(ns[key], str):
            ns[key] = _ints(ns[key])
    mode = ns["mode"]
    if "n" in ns:
        if mode == "sweep":
            ns["ns"] = ns.pop("n")
        else:
            if len(ns["n"]) != 1:
                raise ConfigError("--n takes a single value outside sweep")
            ns["n"] = ns["n"][0]
    if mode == "sweep" and "nc" in ns:
        ns["nc_cells"] = ns.pop("nc")
    if mode == "oned" and "n" not in ns:
        ns["n"] = 64
    if mode == "spectrum" and "n" not in ns:
        ns["n"] = 8
    cfg = RunConfig(**ns)
    return cfg, verbose


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg, verbose = parse_config(argv)
        logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
        return COMMANDS[cfg.mode](cfg)
    except ConfigError as exc:
        print(f"helmwave: error: {exc}", file=sys.stderr)
        return 1
    except DecompositionError as exc:
        print(f"helmwave: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
