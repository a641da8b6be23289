"""Command line entry point: build, formal, compare, verify, export.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numeric error.
"""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import artifacts
from .analysis import compare_formal_holonomic, telescoped_constants
from .config import load_config
from .errors import (ArtifactError, ConfigurationError, H2CorrError, NumericError,
                     VerificationFailure)
from .formal import (PATTERN_COLUMNS, formal_normal, normal_pattern, pattern_rows,
                     scaling_law_check, self_similarity_report, sphere_chart)
from .holonomic.grid import write_obj
from .holonomic.pipeline import run_holonomic
from .holonomic.process import StepReport
from .schedule import Schedule

log = logging.getLogger("h2corr")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

CONDITION_COLUMNS = ("k", "i", "N", "condition", "measured", "bound", "ok")
LEVEL_COLUMNS = ("k", "P1", "P1_budget", "P1_ok", "P2", "P2_budget", "P2_ok",
                 "P3", "P3_budget", "P3_ok", "A")


# build -----------------------------------------------------------------------
def _clear_previous_build(out):
    for pattern in ("stages/stage_*.npz", "mesh_k*.obj"):
        for path in out.glob(pattern):
            path.unlink()


def _write_stage_tables(out, result):
    artifacts.write_csv(out / "reports.csv", StepReport.FIELDS, [r.row() for r in result.reports])
    rows = []
    for data, checks in zip(result.stage_data, result.checks):
        for name, (measured, bound, ok) in checks.items():
            rows.append((data.k, data.i, data.N, name, measured, bound, ok))
    artifacts.write_csv(out / "conditions.csv", CONDITION_COLUMNS, rows)


def cmd_build(config):
    """Run the holonomic process and write snapshots, reports and meshes."""
    config.validate()
    spec = config.run_spec()
    with artifacts.output_lock(config.outdir) as out:
        artifacts.clear_failed(out)
        _clear_previous_build(out)
        (out / "stages").mkdir(exist_ok=True)
        (out / "config.txt").write_text(config.as_text())
        progress = {"stage": (0, 0)}

        def on_stage(result):
            data = result.stage_data[-1]
            progress["stage"] = (data.k, data.i)
            index = len(result.stage_data)
            artifacts.save_grid(out / "stages" / f"stage_{data.k}_{data.i}.npz",
                                result.engine.field_grid(index))
            _write_stage_tables(out, result)
            log.info("stage (%d,%d) N=%d err=%.3e", data.k, data.i, data.N, data.report.err)

        try:
            result = run_holonomic(spec, on_stage=on_stage)
        except H2CorrError as exc:
            k, i = progress["stage"]
            message = f"failed after stage ({k},{i}): {type(exc).__name__}: {exc}"
            artifacts.mark_failed(out, message)
            artifacts.write_manifest(out)
            exc.args = (message,) + tuple(exc.args[1:])
            raise
        artifacts.save_grid(out / "stages" / "stage_0_0.npz", result.engine.field_grid(0))
        _write_stage_tables(out, result)
        artifacts.write_csv(out / "levels.csv", LEVEL_COLUMNS,
                            [[row[c] for c in LEVEL_COLUMNS] for row in result.level_rows])
        for k, grid in enumerate(result.level_grids()):
            write_obj(out / f"mesh_k{k}.obj", grid)
        artifacts.write_csv(out / "schedule.csv", ("k", "i", "N"), result.schedule.stages())
        artifacts.write_manifest(out)
    return result


# formal ----------------------------------------------------------------------
def _formal_schedule(config):
    sched = config.schedule()
    if sched is not None:
        return sched
    path = Path(config.outdir) / "schedule.csv"
    if not path.exists():
        raise ConfigurationError("an adaptive schedule is only known after `h2corr build`")
    _, rows = artifacts.read_csv(path)
    return Schedule({(int(k), int(i)): int(n) for k, i, n in rows}, config.depth,
                    config.budget, config.rho0)


def _circle_index(config, M):
    if config.formal_m is not None:
        m = config.formal_m
    else:
        m = min(max(round(0.7 * M), 1), M - 1)
    if not 1 <= m <= M - 1:
        raise ConfigurationError(f"formal.m must lie in 1..{M - 1}")
    return m


def cmd_formal(config):
    """Pattern and normal dumps on circles, plus self-similarity and scaling reports."""
    config.validate()
    sched = _formal_schedule(config)
    kstar = sched.depth
    stage = (kstar, 3) if kstar else (0, 0)
    n = config.formal_samples
    with artifacts.output_lock(config.outdir) as out:
        fdir = out / "formal"
        fdir.mkdir(exist_ok=True)
        circle = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        arc = np.linspace(0.0, 2.0 * np.pi / (7 * sched.L), n, endpoint=False) if kstar else circle
        for rho in config.formal_rho:
            tag = f"rho{rho:g}"
            nu = normal_pattern(sched, 1, kstar, rho, circle)
            normal = formal_normal(sched, kstar, rho, circle)
            artifacts.write_csv(fdir / f"nu_{tag}.csv", PATTERN_COLUMNS,
                                pattern_rows(rho, circle, nu, stage))
            artifacts.write_csv(fdir / f"normal_{tag}.csv", PATTERN_COLUMNS,
                                pattern_rows(rho, circle, normal, stage))
            artifacts.write_csv(fdir / f"arc_{tag}.csv", PATTERN_COLUMNS,
                                pattern_rows(rho, arc, normal_pattern(sched, 1, kstar, rho, arc), stage))
            lon, lat = sphere_chart(normal)
            artifacts.write_csv(fdir / f"chart_{tag}.csv", ("phi", "longitude", "latitude"),
                                zip(circle, lon, lat))
        reports = []
        if kstar and sched.M >= 2:
            m = _circle_index(config, sched.M)
            for j in range(1, kstar + 1):
                rep = self_similarity_report(sched, j, m, kstar, samples=n)
                reports.append(rep)
            artifacts.write_csv(fdir / "self_similarity.csv",
                                ("j", "rho", "L_j", "copies", "samples_per_arc", "distance",
                                 "bound", "slack", "within_bound", "subpattern_count", "tail"),
                                [(r.j, r.rho, r.L_j, r.copies, r.samples_per_arc, r.distance,
                                  r.bound, r.slack, r.within_bound,
                                  "" if r.subpattern_count is None else r.subpattern_count, r.tail)
                                 for r in reports])
            scaling = [(nn, mm, scaling_law_check(sched, nn, mm, kstar))
                       for nn in (2, 3) for mm in sorted({1, sched.M - 1})]
            artifacts.write_csv(fdir / "scaling.csv", ("n", "m", "deviation"), scaling)
        artifacts.write_manifest(out)
    return reports


# compare ---------------------------------------------------------------------
def cmd_compare(config):
    """Rerun the configured holonomic process and compare it with the formal one."""
    config.validate()
    result = run_holonomic(config.run_spec())
    rows = compare_formal_holonomic(result, tuple(config.compare_K))
    consts = [float("nan")] + telescoped_constants(rows)
    with artifacts.output_lock(config.outdir) as out:
        cdir = out / "compare"
        cdir.mkdir(exist_ok=True)
        artifacts.write_csv(cdir / "comparison.csv",
                            ("k", "i", "N", "sup_diff", "K_lo", "K_hi", "C"),
                            [(r.k, r.i, result.schedule.N(r.k, r.i), r.sup_diff, r.K[0], r.K[1], c)
                             for r, c in zip(rows, consts)])
        artifacts.write_manifest(out)
    return rows


# verify ----------------------------------------------------------------------
def _level_table(rows):
    lines = ["  k  P1            P1 budget     ok    P2            tau_k         ok    P3            P3 budget     ok"]
    for r in rows:
        lines.append(f"  {r['k']}  {r['P1']:.6e}  {r['P1_budget']:.6e}  {str(r['P1_ok']):5s} "
                     f"{r['P2']:.6e}  {r['P2_budget']:.6e}  {str(r['P2_ok']):5s} "
                     f"{r['P3']:.6e}  {r['P3_budget']:.6e}  {str(r['P3_ok']):5s}")
    return lines


def cmd_verify(config, skip=()):
    """Run the acceptance checks and write a plain-text report."""
    from . import verification

    config.validate()
    out = Path(config.outdir)
    notes = []
    if (out / artifacts.MANIFEST).exists():
        artifacts.check_manifest(out)
        notes.append(f"artifacts in {out}: checksums verified")
    else:
        notes.append(f"no artifacts in {out}; run `h2corr build` to produce meshes and reports")
    desk = verification.desk_run()
    results = verification.run_all(skip=skip, desk_result=desk)
    lines = ["h2corr verification report", ""]
    lines += [r.line() for r in results]
    lines += ["", "Level properties of the depth-2 desk run:"] + _level_table(desk.level_rows)
    lines += ["", "Per-stage conditions of the desk run (measured / bound):"]
    for data, checks in zip(desk.stage_data, desk.checks):
        parts = ", ".join(f"{n} {m:.3e}/{b:.3e} {'ok' if ok else 'FAIL'}" for n, (m, b, ok) in checks.items())
        lines.append(f"  ({data.k},{data.i}) N={data.N}: {parts}")
    lines += ["", "CSV columns: criteria.csv = number,title,passed,seconds,budget,measured"]
    lines += ["", *notes]
    with artifacts.output_lock(out):
        vdir = out / "verify"
        vdir.mkdir(exist_ok=True)
        (vdir / "report.txt").write_text("\n".join(lines) + "\n")
        artifacts.write_csv(vdir / "criteria.csv",
                            ("number", "title", "passed", "seconds", "budget", "measured"),
                            [(r.number, r.title, r.passed, r.seconds, r.budget,
                              "; ".join(f"{k}={v}" for k, v in r.measured.items())) for r in results])
        artifacts.write_manifest(out)
    print("\n".join(lines))
    failed = [r for r in results if not r.passed]
    if failed:
        raise VerificationFailure(f"{len(failed)} criterion(s) failed: "
                                  + ", ".join(str(r.number) for r in failed))
    return results


# export ----------------------------------------------------------------------
def cmd_export(config):
    """Re-export every stored stage snapshot as an OBJ mesh after a checksum check."""
    out = Path(config.outdir)
    artifacts.check_manifest(out)
    stages = sorted((out / "stages").glob("stage_*.npz"))
    if not stages:
        raise ArtifactError(f"no stage snapshots in {out}; run `h2corr build` first")
    with artifacts.output_lock(out):
        edir = out / "export"
        edir.mkdir(exist_ok=True)
        for path in stages:
            write_obj(edir / (path.stem + ".obj"), artifacts.load_grid(path))
        artifacts.write_manifest(out)
    return len(stages)


# entry point -----------------------------------------------------------------
COMMANDS = {"build": cmd_build, "formal": cmd_formal, "compare": cmd_compare,
            "verify": cmd_verify, "export": cmd_export}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--outdir", metavar="PATH", help="output directory")
    common.add_argument("--depth", metavar="K", type=int, help="number of levels")
    common.add_argument("--seed", metavar="S", type=int, help="seed for scattered samples")
    common.add_argument("-q", "--quiet", action="store_true", help="only print errors")
    parser = argparse.ArgumentParser(prog="h2corr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__.splitlines()[0])
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        config = load_config(args.config).with_overrides(args.outdir, args.depth, args.seed)
        COMMANDS[args.command](config)
    except ConfigurationError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except (VerificationFailure, ArtifactError) as exc:
        log.error("%s", exc)
        return EXIT_VERIFY
    except (NumericError, H2CorrError) as exc:
        log.error("numeric error: %s", exc)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
