"""
Sweeps: one experiment per config, tabulated as CSV.

Sub-runs execute in a process pool without file output; rows are sorted by
(kind, delta) before writing, so the table does not depend on scheduling.
"""
import math
from dataclasses import replace
from multiprocessing import Pool

from loguru import logger

from datasink.subscribers import SubscriberSystem, CsvRowWriter
from lab.config import Command
from lab.experiment import run, EXIT_USAGE, EXIT_OK

FIELDS = ["kind", "delta", "command", "status", "passed", "error_constant", "zeta", "rho", "r",
          "ratio_exponent", "area_exponent", "final_rho", "branch", "size", "zeta_trend", "wall_time"]

def measured(report):
    """Flat row of the quantities a report measured"""
    inp = report.get("input", {})
    result = report.get("result") or {}
    row = {"kind": inp.get("kind", ""), "delta": inp.get("scale"), "command": report["command"],
           "status": report["status"], "passed": report.get("passed")}
    for key in ("error_constant", "zeta", "rho", "r", "ratio_exponent", "area_exponent",
                "final_rho", "branch"):
        if key in result:
            row[key] = result[key]
    size = inp.get("solids", inp.get("points"))
    if size is None:
        size = result.get("tubes", result.get("points"))
    row["size"] = size
    return row

def _sub_run(config):
    outcome = run(replace(config, output=None, trace=None), SubscriberSystem())
    row = measured(outcome.report)
    row["wall_time"] = round(outcome.wall_time, 6)
    return row

def _sort_key(row):
    delta = row["delta"] if row["delta"] is not None else math.inf
    return (row["kind"] or "", delta)

def flag_zeta_trend(rows):
    """Mark per kind whether zeta does not increase as delta shrinks"""
    by_kind = {}
    for row in rows:
        if isinstance(row.get("zeta"), (int, float)):
            by_kind.setdefault(row["kind"], []).append(row)
    for kind, group in by_kind.items():
        # rows are sorted by ascending delta
        zetas = [row["zeta"] for row in group]
        trend = "non-increasing" if all(a <= b + 1e-12 for a, b in zip(zetas, zetas[1:])) \
            else "increasing"
        logger.info(f"sweep: zeta trend of {kind or 'input'} is {trend}")
        for row in group:
            row["zeta_trend"] = trend
    return rows

def sweep(configs, output, processes=None):
    """Run every config and write one CSV row each.

    :configs: list of ExperimentConfig sharing one command
    :output: CSV path or open file
    :processes: pool size, None for the CPU count, 1 to run in process
    :returns: exit status, 2 when the commands differ or a sub-run hit a
        usage error; failed checks are recorded as rows

    """
    configs = list(configs)
    commands = {c.command for c in configs}
    if len(commands) > 1:
        logger.error(f"sweep mixes commands {sorted(c.value for c in commands)}")
        return EXIT_USAGE
    if Command.GENERATE in commands:
        logger.error("generate runs do not measure anything to tabulate")
        return EXIT_USAGE
    if processes == 1 or len(configs) <= 1:
        rows = [_sub_run(c) for c in configs]
    else:
        with Pool(processes) as pool:
            rows = pool.map(_sub_run, configs)
    if any(row["status"] == EXIT_USAGE for row in rows):
        logger.error("sweep aborted: a sub-run could not read its input")
        return EXIT_USAGE
    rows = flag_zeta_trend(sorted(rows, key=_sort_key))
    writer = CsvRowWriter(output, FIELDS)
    try:
        for row in rows:
            writer.on_report_received(row)
    finally:
        writer.close()
    return EXIT_OK
