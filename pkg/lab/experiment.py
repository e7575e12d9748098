"""
Single experiment runs.

run() loads the input, dispatches on the command and reports through a
SubscriberSystem. Exit status: 0 on completion or a passed check, 1 on a
failed check, an inconclusive dichotomy or any other error raised while
measuring, 2 on usage errors and malformed inputs (LabException,
SourceException). Report documents depend on the config only; the timestamp
and the wall time go to `<report>.meta.json`.
"""
import json
import time
import datetime
from dataclasses import dataclass

from loguru import logger

from axioms.report import Axiom
from axioms.catalog import CatalogConfig
from axioms.checks import convex_wolff_error, tube_wolff_error, wolff_error, frostman_error, \
    cardinality_lower_bound
from axioms.covers import check_every_scale, check_self_similar, family_sigma
from assouad.scan import assouad_scan
from assouad.amplify import two_scale_amplify
from prisms.coarsen import run_dichotomy, CoarsenConfig
from prisms.fourway import classify_four_way, FourWayConfig
from projection.slope import quadratic_slope
from projection.iteration import projection_iteration, IterationConfig
from projection.points import spacing_scan, nonconcentration_error, NonConcentration
from generators.spec import GeneratorSpec, generate
from datasource.sources import Source, Payload, SourceException
from datasink.subconfig import default_system
from datasink.subscribers import JsonReportWriter, TraceWriter, to_json
from lab.config import Command, ExperimentConfig, CONVENTIONS
from util.exceptions import KakeyaException, DichotomyInconclusive, LabException, GeneratorException

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

@dataclass
class RunOutcome:
    status: int
    report: dict
    wall_time: float

def _generator_spec(config):
    if config.generator is not None:
        data = config.generator
    else:
        data = _read_spec_document(config.input)
    try:
        spec = GeneratorSpec.from_dict(data)
    except (GeneratorException, TypeError, ValueError) as e:
        raise LabException(f"bad generator spec: {e}") from None
    if config.seed is not None:
        spec.seed = config.seed
    return spec

def _read_spec_document(path):
    path = path.partition(":")[2] if path.startswith("spec:") else path
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise LabException(f"cannot read generator spec {path}: {e}") from None

def _generate(config, spec, system):
    out = generate(spec)
    document = out.to_dict()
    result = {"kind": spec.kind.value, "scale": out.scale}
    if out.tubes is not None:
        result["tubes"] = len(out.tubes)
    if out.hosts is not None:
        result["hosts"] = len(out.hosts)
    if out.points is not None:
        result["points"] = out.points.covering_number()
    system.send_info(f"generated {spec.kind.value} at delta={out.scale:g}")
    return True, result, document

def _axiom_report(config, solids):
    catalog = CatalogConfig(max_anchors=config.max_anchors)
    C = config.threshold
    if config.axiom is Axiom.CONVEX_WOLFF:
        return convex_wolff_error(solids, C, catalog)
    if config.axiom is Axiom.TUBE_WOLFF:
        return tube_wolff_error(solids, C, catalog)
    if config.axiom is Axiom.WOLFF:
        return wolff_error(solids, C, catalog)
    if config.axiom is Axiom.FROSTMAN:
        sigma = config.sigma if config.sigma is not None else family_sigma(len(solids), solids[0].scale)
        return frostman_error(solids, sigma, C, catalog)
    if config.axiom is Axiom.EVERY_SCALE:
        return check_every_scale(solids, C, config=catalog)[0]
    return check_self_similar(solids, C, config=catalog)[0]

def _check(config, payload, system):
    if not payload.solids:
        raise LabException("check needs a family of solids")
    report = _axiom_report(config, payload.solids)
    result = report.to_dict()
    if config.axiom in (Axiom.CONVEX_WOLFF, Axiom.TUBE_WOLFF):
        result["cardinality_lower_bound"] = cardinality_lower_bound(payload.solids, report.error_constant)
    system.send_info(f"{config.axiom.value}: error constant {report.error_constant:.4g} "
                     f"({'pass' if report.passed else 'fail'} at C={config.threshold:g})")
    return report.passed, result, None

def _assouad(config, payload, system):
    scan = assouad_scan(payload.voxel_set(), config.min_separation)
    system.send_info(f"assouad scan: zeta={scan.zeta:.4f} at rho={scan.rho:g}, r={scan.r:g}")
    return True, scan.to_dict(), None

def _two_scale(config, payload, system):
    amp = two_scale_amplify(payload.shaded_family(), config.min_separation, config.eps)
    for step in amp.trace:
        system.send_trace(step.to_row())
    result = {"rho": amp.rho, "r": amp.r, "ratio_exponent": amp.ratio_exponent,
              "input_mass": amp.input_mass, "retained_mass": amp.retained_mass,
              "balls": [amp.trace[i].to_row() for i in amp.selected],
              "iterations": len(amp.trace)}
    system.send_info(f"two-scale amplification: rho={amp.rho:g} r={amp.r:g} "
                     f"exponent={amp.ratio_exponent:.4f}")
    return True, result, None

def _prism_dichotomy(config, payload, system):
    f = payload.shaded_family()
    traced = []

    def on_round(record):
        traced.append(record)
        system.send_trace(record)

    try:
        run = run_dichotomy(f, config.eps, CoarsenConfig(separation=config.min_separation), on_round)
    except DichotomyInconclusive as e:
        for record in e.trace[len(traced):]:
            system.send_trace(record)
        raise
    result = {"branch": run.branch.value, "certified": run.certified, "rounds": len(run.rounds),
              "scan": None if run.scan is None else run.scan.to_dict()}
    if config.four_way:
        four = classify_four_way(f, config.eps, FourWayConfig(separation=config.min_separation))
        result["four_way"] = four.to_dict()
    system.send_info(f"prism dichotomy: branch {run.branch.value} after {len(run.rounds)} rounds")
    return True, result, None

def _project(config, payload, system):
    if not payload.solids and payload.points is not None:
        s = config.sigma if config.sigma is not None else 1.0
        scan = spacing_scan(payload.points, s, config.eps)
        result = {"spacing": scan.to_dict(),
                  "katz_tao": nonconcentration_error(payload.points, s, NonConcentration.KATZ_TAO),
                  "frostman": nonconcentration_error(payload.points, s, NonConcentration.FROSTMAN)}
        return True, result, None
    f = payload.shaded_family()
    iteration = projection_iteration(f, quadratic_slope(f.scale), IterationConfig(config.eps),
                                     on_round=lambda r: system.send_trace(r.to_row()))
    system.send_info(f"projection iteration: area exponent {iteration.area_exponent:.4f}, "
                     f"final rho {iteration.final_rho:g}")
    return True, iteration.to_dict(), None

COMMANDS = {
    Command.GENERATE: _generate,
    Command.CHECK: _check,
    Command.ASSOUAD: _assouad,
    Command.TWO_SCALE: _two_scale,
    Command.PRISM_DICHOTOMY: _prism_dichotomy,
    Command.PROJECT: _project,
}

def _input_summary(payload: Payload):
    summary = {"scale": payload.scale}
    if payload.kind is not None:
        summary["kind"] = payload.kind
    if payload.solids is not None:
        summary["solids"] = len(payload.solids)
    if payload.points is not None:
        summary["points"] = len(payload.points)
    return summary

def _load(config):
    if config.command is Command.GENERATE:
        spec = _generator_spec(config)
        return spec, {"kind": spec.kind.value, "scale": spec.scale, "seed": spec.seed}
    payload = Source.from_string(config.input).load()
    return payload, _input_summary(payload)

def _write_meta(path, status, wall_time):
    meta = {"report": path, "status": status, "wall_time": wall_time,
            "finished": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    with open(f"{path}.meta.json", "w") as f:
        f.write(to_json(meta, indent=2) + "\n")

def run(config: ExperimentConfig, system=None) -> RunOutcome:
    """Run one experiment.

    :config: ExperimentConfig
    :system: SubscriberSystem, default datasink.subconfig.default_system()
    :returns: RunOutcome with the exit status and the report document

    """
    system = system if system is not None else default_system()
    if config.output:
        system.register_subscriber(JsonReportWriter(config.output))
    if config.trace:
        system.register_subscriber(TraceWriter(config.trace))
    start = time.perf_counter()
    report = {"command": config.command.value, "config": config.to_dict(), "conventions": CONVENTIONS}
    try:
        loaded, report["input"] = _load(config)
        passed, result, document = COMMANDS[config.command](config, loaded, system)
        status = EXIT_OK if passed else EXIT_FAILED
        report.update(passed=passed, result=result)
        if document is not None:
            # generate reports are family documents readable by datasource
            report = document | report
    except DichotomyInconclusive as e:
        status = EXIT_FAILED
        report.update(passed=False, error=str(e), trace=e.trace)
        system.send_exception(e)
    except (LabException, SourceException) as e:
        logger.debug(f"{config.command.value} rejected: {e!r}")
        status = EXIT_USAGE
        report.update(passed=False, error=str(e))
        system.send_exception(e)
    except KakeyaException as e:
        logger.debug(f"{config.command.value} failed: {e!r}")
        status = EXIT_FAILED
        report.update(passed=False, error=str(e))
        system.send_exception(e)
    report["status"] = status
    system.send_report(report)
    system.close()
    wall_time = time.perf_counter() - start
    if config.output:
        _write_meta(config.output, status, wall_time)
    return RunOutcome(status, report, wall_time)
