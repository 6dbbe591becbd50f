import argparse
import asyncio
import logging
import sys
from fractions import Fraction
from typing import Sequence

from pydantic import ValidationError

from moduli_py.caches import ResultCache
from moduli_py.enums import Command, ExitCode, OutputFormat, Preset
from moduli_py.exceptions import ModuliPyError, UsageError
from moduli_py.fg import thaddeus_chern
from moduli_py.formulas import eps_bounds
from moduli_py.models import ChernPairing, EtaClass, EtaSpec
from moduli_py.moduli import ModuliClient
from moduli_py.schemas import EtaSpecPayload, JobConfig, RationalPayload, Report, WeylTermPayload, rational_polynomial, resolve_eta
from moduli_py.verify import SignFlippedPairingFormula, run_verification

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moduli-py",
        description="Exact intersection pairings on moduli spaces of stable bundles over a curve.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="rank, at least 2")
    common.add_argument("--d", type=int, default=1, help="degree, coprime to the rank")
    common.add_argument("--g", type=int, default=2, help="genus, at least 2")
    common.add_argument(
        "--eta",
        default=None,
        help='EtaSpec JSON such as \'{"a": {"2": 1}, "b": [[2, 1]], "f": {"2": 1}}\' or a preset: '
        + ", ".join(p.value for p in Preset),
    )
    common.add_argument("--out", choices=[f.value for f in OutputFormat], default=OutputFormat.TEXT.value)
    common.add_argument("--cache-dir", default=None, help="result cache directory, defaults to $RESIDUE_CACHE_DIR")
    common.add_argument("--caps", default="auto", help="'auto' or a fixed cap for every residue variable")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--quick", action="store_true", help="run the short subset of the acceptance checks")
    common.add_argument("--r", type=int, default=0, help="power of a₂ in the Thaddeus preset")
    common.add_argument("--pad-f2", action="store_true", help="fill a non-top class with the f₂ power reaching top degree")
    common.add_argument("--verify-cache", action="store_true", help="recompute cache hits and compare")
    common.add_argument("--inject-sign-error", action="store_true", help=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="count", default=0)
    commands = parser.add_subparsers(dest="command", required=True)
    for command in Command:
        commands.add_parser(command.value, parents=[common])
    return parser


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def load_config(args: argparse.Namespace) -> JobConfig:
    values = {
        "command": args.command,
        "n": args.n,
        "d": args.d,
        "g": args.g,
        "eta": args.eta,
        "out": args.out,
        "caps": args.caps,
        "quick": args.quick,
        "pad_f2": args.pad_f2,
        "verify_cache": args.verify_cache,
        "r": args.r,
        "inject_sign_error": args.inject_sign_error,
    }
    if args.cache_dir is not None:
        values["cache_dir"] = args.cache_dir
    if args.threads is not None:
        values["threads"] = args.threads
    return JobConfig.model_validate(values)


def make_client(config: JobConfig) -> ModuliClient:
    cache = ResultCache(config.cache_dir) if config.cache_dir else None
    kwargs = {"pairing_formula": SignFlippedPairingFormula} if config.inject_sign_error else {}
    return ModuliClient(
        threads=config.threads, cache=cache, caps=config.caps_override, verify_cache=config.verify_cache, **kwargs
    )


def _padded(eta: EtaClass, real_dim: int) -> EtaClass:
    terms = []
    for c, spec in eta.terms:
        rest = real_dim - spec.degree
        if rest < 0 or rest % 2:
            raise UsageError(f"{spec} has degree {spec.degree}, no power of f₂ reaches top degree {real_dim}")
        terms.append((c, spec.times(EtaSpec(f={2: rest // 2}))))
    return EtaClass(terms, eta.name)


async def cmd_pair(config: JobConfig, client: ModuliClient) -> tuple[ExitCode, Report]:
    rdg = config.rdg
    eta = resolve_eta(config.eta, rdg, config.r)
    if config.pad_f2:
        eta = _padded(eta, rdg.real_dim)
    results = await asyncio.gather(*(client.pair(rdg, spec) for _, spec in eta.terms))
    value = sum((c * result.value for (c, _), result in zip(eta.terms, results)), Fraction(0))
    terms = [
        {
            "coefficient": RationalPayload.of(c).model_dump(),
            "spec": EtaSpecPayload.of(spec).model_dump(),
            "value": RationalPayload.of(result.value).model_dump(),
            "raw_value": RationalPayload.of(result.raw_value).model_dump(),
            "calibration": result.calibration,
            "caps": result.caps,
            "cap_check_passed": result.cap_check_passed,
            "eps_bounds": eps_bounds(rdg, spec),
            "weyl_terms": [WeylTermPayload.of(t).model_dump() for t in result.terms],
        }
        for (c, spec), result in zip(eta.terms, results)
    ]
    report = _report(config, eta, RationalPayload.of(value).model_dump(), {"terms": terms, "text": f"∫ {eta} = {value}"})
    return ExitCode.OK, report


async def cmd_pontryagin(config: JobConfig, client: ModuliClient) -> tuple[ExitCode, Report]:
    report = await client.pontryagin_check(config.rdg)
    entries = [
        {"monomial": str(e.monomial), "complement": str(e.complement), "value": RationalPayload.of(e.value).model_dump()}
        for e in report.entries
    ]
    status = "PASS" if report.passed else "FAIL"
    lines = [f"{e.monomial} * {e.complement}: {e.value}" for e in report.entries]
    lines.append(f"witness ∫ η₀·exp f₂ = {report.witness}")
    lines.append(f"{status}: {len(report.counterexamples)} nonzero pairings above degree {report.threshold}")
    result = {"status": status, "threshold": report.threshold, "entries": entries}
    metadata = {"witness": RationalPayload.of(report.witness).model_dump(), "text": "\n".join(lines)}
    return (ExitCode.OK if report.passed else ExitCode.CHECK_FAILED), _report(config, None, result, metadata)


def _polynomial_text(pairing: ChernPairing) -> str:
    parts = []
    for r in sorted(pairing.coefficients):
        for j, c in sorted(pairing.coefficients[r].items()):
            if c:
                parts.append(f"{c}·t^{r}" + (f"·λ^{j}" if j else ""))
    return " + ".join(parts) or "0"


async def cmd_chern(config: JobConfig, client: ModuliClient) -> tuple[ExitCode, Report]:
    rdg = config.rdg
    eta = resolve_eta(config.eta, rdg, config.r, absorb_f2=True)
    pairing = await client.chern_class(rdg, eta)
    degree = pairing.degree
    metadata: dict = {"degree": degree, "caps": pairing.caps, "cap_check_passed": pairing.cap_check_passed}
    lines = [f"∫ {eta}·exp(f₂)·c(t) = {_polynomial_text(pairing)}", f"observed t-degree {degree}"]
    code = ExitCode.OK
    single = eta.terms[0][1] if len(eta.terms) == 1 else None
    if rdg.n == 2 and single is not None and set(single.a) <= {2} and not single.b and not single.f and single.a.get(2, 0) < rdg.g:
        r = single.a.get(2, 0)
        expected = thaddeus_chern(rdg.g, r, t_cap=rdg.dim)
        mismatches = [
            (t, j)
            for t in range(rdg.dim + 1)
            for j in range(rdg.g + 1)
            if (single.lam or j == 0) and pairing.coefficient(t, j) != eta.terms[0][0] * expected.get((t, j), 0)
        ]
        metadata["closed_form_agrees"] = not mismatches
        lines.append(f"closed form (-1)^(g-1-r) 2^(g-1-2r) F(g, g-1-r): {'agrees' if not mismatches else 'differs'}")
        if mismatches:
            code = ExitCode.CHECK_FAILED
    if rdg.n >= 3:
        experiment = await client.chern_vanishing_report(rdg)
        metadata["vanishing_above"] = experiment.threshold
        metadata["observed_vanishing"] = experiment.vanishes
        metadata["eta0_ratio"] = RationalPayload.of(experiment.ratio).model_dump() if experiment.ratio is not None else None
        lines.append(
            f"c_r pairs to 0 for r > {experiment.threshold}: {experiment.vanishes}, "
            f"c_{experiment.threshold} = {experiment.ratio}·η₀ (proportional: {experiment.proportional})"
        )
    metadata["text"] = "\n".join(lines)
    return code, _report(config, eta, rational_polynomial(pairing.coefficients, rdg.dim), metadata)


async def cmd_verify(config: JobConfig, client: ModuliClient) -> tuple[ExitCode, Report]:
    outcomes = await run_verification(client, config.quick)
    manifest = [{"name": o.name, "status": o.status.value, "detail": o.detail} for o in outcomes]
    failed = [o.name for o in outcomes if not o.passed]
    lines = [f"{o.status.value:6} {o.name}: {o.detail}" for o in outcomes]
    lines.append("all checks passed" if not failed else f"failed: {', '.join(failed)}")
    report = _report(config, None, manifest, {"failed": failed, "text": "\n".join(lines)})
    return (ExitCode.CHECK_FAILED if failed else ExitCode.OK), report


def _report(config: JobConfig, eta: EtaClass | None, result, metadata: dict) -> Report:
    return Report(
        command=config.command.value,
        n=config.n,
        d=config.d,
        g=config.g,
        eta=str(eta) if eta is not None else config.eta,
        result=result,
        metadata=metadata,
    )


handlers = {
    Command.PAIR: cmd_pair,
    Command.PONTRYAGIN: cmd_pontryagin,
    Command.CHERN: cmd_chern,
    Command.VERIFY: cmd_verify,
}


def emit(report: Report, out: OutputFormat) -> None:
    if out is OutputFormat.JSON:
        print(report.model_dump_json(indent=2))
    else:
        print(report.metadata.get("text", report.result))


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    if args.caps != "auto":
        try:
            args.caps = int(args.caps)
        except ValueError:
            print(f"usage error: --caps must be 'auto' or an integer, got {args.caps!r}", file=sys.stderr)
            return ExitCode.USAGE
    try:
        config = load_config(args)
        client = make_client(config)
        logger.info("dispatching %s at n=%d d=%d g=%d", config.command.value, config.n, config.d, config.g)
        code, report = asyncio.run(handlers[config.command](config, client))
    except (UsageError, ValidationError) as e:
        logger.error("%s", e)
        print(f"usage error: {e}", file=sys.stderr)
        return ExitCode.USAGE
    except ModuliPyError as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.ENGINE_ERROR
    emit(report, config.out)
    return code
