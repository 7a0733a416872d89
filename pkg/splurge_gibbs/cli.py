"""
Command-line driver.

``splurge-gibbs run CONFIG --out DIR`` builds the configured model, runs the requested
stages in their fixed order and writes one artifact set per stage plus ``manifest.json``.

Exit codes:
    0: every requested assertion passed
    1: at least one assertion failed
    2: configuration, input or model error
    3: numerical failure (non-convergence, degenerate variance, coarse grid)

Copyright (c) 2025 Jim Schilling

Please preserve this header and all related material when sharing!

This module is licensed under the MIT License.
"""

from __future__ import annotations

import argparse
import logging
import platform
import sys
from collections.abc import Sequence
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np

from splurge_gibbs.artifact_io import ArtifactWriter, canonical_json, sha256_text
from splurge_gibbs.config import DECOMPOSE_GRID, ConfigHelper, RunConfig
from splurge_gibbs.decomp import DecompositionHelper, VarianceReport
from splurge_gibbs.decorators import timed_stage
from splurge_gibbs.dist import DistributionHelper
from splurge_gibbs.exceptions import (
    SplurgeConfigurationError,
    SplurgeGibbsError,
    SplurgeNumericalError,
    SplurgeRangeOverflowError,
)
from splurge_gibbs.models import Model, ModelZoo
from splurge_gibbs.protocols import ReportProtocol
from splurge_gibbs.sampler import SamplerHelper
from splurge_gibbs.spectral import LatticeReport, SpectralHelper
from splurge_gibbs.symbolic import SymbolicHelper
from splurge_gibbs.transfer import RpfData, TransferHelper
from splurge_gibbs.verify import VerificationHelper

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
VERSIONED_PACKAGES = ("splurge-gibbs", "numpy", "scipy", "pydantic")


def _package_version(name: str) -> str:
    try:
        return metadata.version(name)
    except metadata.PackageNotFoundError:
        return "unknown"


class Pipeline:
    """
    One configured run: a model, its solved RPF data and the stage artifacts.

    Stages share state through attributes so that later stages reuse what earlier ones
    computed; a stage whose inputs are missing computes them itself.
    """

    def __init__(
        self,
        config: RunConfig,
        writer: ArtifactWriter,
        *,
        threads: int = 1,
        base_dir: Path | None = None,
    ) -> None:
        self.config = config
        self.writer = writer
        self.threads = max(1, threads)
        self.base_dir = base_dir
        self.timings: dict[str, float] = {}
        self.assertions: list[dict[str, Any]] = []
        self.model: Model | None = None
        self.rpf: RpfData | None = None
        self.variance: VarianceReport | None = None
        self.lattice: LatticeReport | None = None

    # Assertions

    def check(
        self,
        name: str,
        *,
        expected: Any,
        observed: Any,
        passed: bool,
    ) -> None:
        self.assertions.append({"name": name, "expected": expected, "observed": observed, "passed": bool(passed)})
        log = logger.info if passed else logger.warning
        log("Assertion %s: expected %s, observed %s -> %s", name, expected, observed, "pass" if passed else "FAIL")

    @property
    def passed(self) -> bool:
        return all(item["passed"] for item in self.assertions)

    def write_report(
        self,
        stem: str,
        report: ReportProtocol,
        *,
        rows_name: str | None = None,
    ) -> None:
        self.writer.write_json(f"{stem}.json", report.to_dict())
        self.writer.write_csv(rows_name or f"{stem}.csv", report.to_rows())

    # Shared inputs

    def build_model(self) -> Model:
        if self.model is None:
            model = ModelZoo.build(self.config.model, base_dir=self.base_dir)
            if self.config.observable is not None:
                observable = model.space.named_sequence(self.config.observable)
                model = model.with_observable(observable, name=model.name)
            self.model = model
        return self.model

    def solve(self) -> RpfData:
        if self.rpf is None:
            model = self.build_model()
            horizon = self.config.required_horizon(model.working_depth)
            self.rpf = model.solve(horizon=horizon, tol=self.config.tol, k_cap=self.config.k_cap)
        return self.rpf

    def variance_report(self) -> VarianceReport:
        if self.variance is None:
            rpf = self.solve()
            grid = list(DECOMPOSE_GRID)
            self.variance = DecompositionHelper.classify_variance(rpf, self.build_model().observable, n_grid=grid)
        return self.variance

    # Stages

    @timed_stage("validate")
    def run_validate(self) -> None:
        model = self.build_model()
        system = model.system
        window = SymbolicHelper.aperiodicity_window(system)
        seminorms = [model.space.holder_seminorm(model.observable[j], alpha=self.config.alpha) for j in range(4)]
        summary = {
            "model": model.name,
            "system": system.spec.to_dict(),
            "extension": str(system.extension),
            "aperiodicity_window": window,
            "potential_depth": model.potential.depth,
            "observable": model.observable.name,
            "observable_depth": model.observable.depth,
            "working_depth": model.working_depth,
            "alpha": self.config.alpha,
            "observable_holder_seminorm": seminorms,
            "metadata": model.metadata,
        }
        self.writer.write_json("validate.json", summary)
        expected = self.config.expect.aperiodicity_max
        if expected is not None:
            self.check("aperiodicity_window", expected=f"<= {expected}", observed=window, passed=window <= expected)

    @timed_stage("rpf")
    def run_rpf(self) -> None:
        rpf = self.solve()
        data = rpf.to_dict()
        data["unit_residual"] = TransferHelper.unit_residual(rpf)
        data["eigen_residual"] = TransferHelper.eigen_residual(rpf)
        self.writer.write_json("rpf.json", data)
        self.writer.write_csv(
            "lambda.csv",
            ({"j": j, "lambda": float(lam), "log_lambda": float(np.log(lam))} for j, lam in enumerate(rpf.lambdas)),
        )
        bound = self.config.expect.max_tail_error
        if bound is not None:
            tail = rpf.tail_error
            self.check("rpf_tail_error", expected=f"<= {bound}", observed=tail, passed=tail <= bound)

    @timed_stage("decompose")
    def run_decompose(self) -> None:
        rpf = self.solve()
        model = self.build_model()
        report = self.variance_report()
        centered = DecompositionHelper.center(rpf, model.observable)
        decomposition = DecompositionHelper.martingale_coboundary(rpf, centered.sequence, count=rpf.horizon)
        data: dict[str, Any] = {
            "variance": report.to_dict(),
            "means": centered.means,
            "decomposition": decomposition.to_dict(),
        }
        if model.decomposition is not None:
            var_m = model.decomposition.validate(rpf, rpf.horizon)
            data["reducible"] = {"span": model.decomposition.span, "var_m": var_m}
        self.writer.write_json("decompose.json", data)
        self.writer.write_csv(
            "variance.csv",
            (
                {"n": n, "variance": v, "var_a_partial_sum": p}
                for n, v, p in zip(report.n_grid, report.variance, report.var_a_partial_sums, strict=True)
            ),
        )
        expected = self.config.expect.variance_class
        if expected is not None:
            observed = report.verdict.value
            self.check("variance_class", expected=expected, observed=observed, passed=observed == expected)

    @timed_stage("scan")
    def run_scan(self) -> None:
        rpf = self.solve()
        f = self.build_model().observable
        scan = self.config.scan
        self.lattice = SpectralHelper.resonance_scan(
            rpf,
            f,
            delta=scan.delta,
            t_max=scan.t_max,
            grid=scan.grid,
            n_max=scan.n_max,
            threshold=scan.threshold,
            trial_count=scan.trials,
            seed=scan.seed,
            variance=self.variance_report(),
        )
        data = self.lattice.to_dict()
        if scan.calibrate:
            constants = SpectralHelper.calibrate_lasota_yorke(
                rpf, f, k_max=min(32, rpf.horizon), seed=scan.seed, alpha=self.config.alpha
            )
            data["lasota_yorke"] = constants
        if scan.variance_fit:
            fit = SpectralHelper.variance_norm_fit(rpf, f, trial_count=scan.trials, seed=scan.seed)
            data["variance_norm_fit"] = fit
        self.writer.write_json("lattice.json", data)
        self.writer.write_csv("norm_curve.csv", self.lattice.to_rows())

        expect = self.config.expect
        if expect.lattice_class is not None:
            observed = self.lattice.classification.value
            passed = observed == expect.lattice_class
            self.check("lattice_class", expected=expect.lattice_class, observed=observed, passed=passed)
        if expect.span is not None:
            span = self.lattice.span_a
            passed = span is not None and abs(span - expect.span) <= expect.span_tol
            self.check("lattice_span", expected=expect.span, observed=span, passed=passed)

    @timed_stage("distribution")
    def run_distribution(self) -> None:
        rpf = self.solve()
        f = self.build_model().observable
        n = self.config.distribution.n
        t = np.linspace(-np.pi, np.pi, self.config.distribution.t_points)
        curve = DistributionHelper.char_fn_curve(rpf, f, n, t)
        self.writer.write_csv("char_fn.csv", curve.to_rows())
        law = None
        try:
            if f.is_integer_valued(range(n)):
                law = DistributionHelper.lattice_pmf(rpf, f, n)
            else:
                law = DistributionHelper.atomic_law(rpf, f, n)
        except SplurgeRangeOverflowError as e:
            logger.warning("Exact law of S_%d skipped: %s", n, e)
        data: dict[str, Any] = {"n": n, "density": curve.density}
        if law is not None:
            data["law"] = DistributionHelper.law_summary(law)
            self.writer.write_csv("law.csv", law.to_rows())
        self.writer.write_json("distribution.json", data)

    @timed_stage("verify")
    def run_verify(self) -> None:
        rpf = self.solve()
        model = self.build_model()
        settings = self.config.verify
        report = VerificationHelper.report(
            rpf,
            model.observable,
            settings.n_grid,
            model=model.name,
            t0_values=settings.t0,
            decomposition=model.decomposition,
            edgeworth_mode=settings.edgeworth,
        )
        self.write_report("verify", report, rows_name="llt_errors.csv")

        expect = self.config.expect
        for metric, verdict in sorted(expect.verdicts.items()):
            observed = report.verdicts.get(metric)
            self.check(f"verdict[{metric}]", expected=verdict, observed=observed, passed=observed == verdict)
        for metric, bound in sorted(expect.max_errors.items()):
            values = [v for v in report.metrics.get(metric, []) if v is not None]
            last = values[-1] if values else None
            self.check(
                f"max_error[{metric}]",
                expected=f"<= {bound}",
                observed=last,
                passed=last is not None and last <= bound,
            )

    @timed_stage("sample")
    def run_sample(self) -> None:
        rpf = self.solve()
        f = self.build_model().observable
        settings = self.config.sample
        n = settings.n
        kernels = SamplerHelper.forward_kernels(rpf, count=n)
        length = kernels.max_length()
        samples = SamplerHelper.sample_paths(
            kernels, length, settings.n_samples, seed=settings.seed, threads=self.threads
        )
        report = SamplerHelper.empirical_check(rpf, samples, f, n, t_values=settings.t_values)
        cylinders = SamplerHelper.cylinder_check(rpf, samples, max_length=min(3, length))
        self.writer.write_json(
            "sample.json",
            {"empirical": report.to_dict(), "cylinders": cylinders.to_dict(), "length": length, "seed": settings.seed},
        )
        self.writer.write_csv("sample_checks.csv", [*report.to_rows(), *cylinders.to_rows()])
        if settings.export:
            self.writer.write_lines("samples.txt", SamplerHelper.to_lines(samples))

        bound = self.config.expect.max_sample_flags
        if bound is not None:
            flagged = len(report.flagged) + len(cylinders.flagged)
            self.check("sample_flags", expected=f"<= {bound}", observed=flagged, passed=flagged <= bound)

    def run(self) -> None:
        stages = {
            "validate": self.run_validate,
            "rpf": self.run_rpf,
            "decompose": self.run_decompose,
            "scan": self.run_scan,
            "distribution": self.run_distribution,
            "verify": self.run_verify,
            "sample": self.run_sample,
        }
        for stage in self.config.stages:
            stages[stage]()

    def manifest(
        self,
        *,
        config_path: Path,
        status: str,
        error: SplurgeGibbsError | None = None,
    ) -> dict[str, Any]:
        versions = {name: _package_version(name) for name in VERSIONED_PACKAGES}
        versions["python"] = platform.python_version()
        data: dict[str, Any] = {
            "config_path": str(config_path),
            "config_sha256": sha256_text(canonical_json(self.config.to_document())),
            "config": self.config.to_document(),
            "seeds": {"scan": self.config.scan.seed, "sample": self.config.sample.seed},
            "threads": self.threads,
            "versions": versions,
            "stages": list(self.config.stages),
            "timings": self.timings,
            "assertions": self.assertions,
            "status": status,
            "artifacts": self.writer.digests(),
        }
        if error is not None:
            data["error"] = {"type": type(error).__name__, "message": error.message, "details": error.details}
        return data


def run(
    config_path: str | Path,
    *,
    out_dir: str | Path,
    overrides: Sequence[str] = (),
    threads: int = 1,
) -> int:
    """
    Execute one configured run and return its exit code.

    Configuration errors are reported before any artifact is written; stage errors still
    produce a manifest recording the failure.
    """
    path = Path(config_path)
    try:
        config = ConfigHelper.load(path, overrides=list(overrides))
    except SplurgeConfigurationError as e:
        logger.error("%s (%s)", e.message, e.details)
        return EXIT_CONFIG

    try:
        writer = ArtifactWriter(out_dir)
    except SplurgeGibbsError as e:
        logger.error("%s (%s)", e.message, e.details)
        return EXIT_CONFIG

    pipeline = Pipeline(config, writer, threads=threads, base_dir=path.parent)
    try:
        pipeline.run()
    except SplurgeGibbsError as e:
        code = EXIT_NUMERICAL if isinstance(e, SplurgeNumericalError) else EXIT_CONFIG
        writer.write_json("manifest.json", pipeline.manifest(config_path=path, status="error", error=e))
        logger.error("Run failed: %s (%s)", e.message, e.details)
        return code

    status = "pass" if pipeline.passed else "fail"
    writer.write_json("manifest.json", pipeline.manifest(config_path=path, status=status))
    logger.info("Run %s: %d assertion(s), artifacts in %s", status, len(pipeline.assertions), writer.out_dir)
    return EXIT_OK if pipeline.passed else EXIT_ASSERTION


def list_models() -> int:
    for name in ModelZoo.names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splurge-gibbs",
        description="Sequential Gibbs measures and limit-theorem checks for non-autonomous subshifts.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Run the stages of a JSON config")
    run_parser.add_argument("config", type=Path, help="Path to the run configuration (JSON)")
    run_parser.add_argument("--out", type=Path, default=Path("out"), help="Output directory (default: ./out)")
    run_parser.add_argument(
        "--threads",
        type=int,
        default=1,
        help="Sampler worker threads; results do not depend on it",
    )
    run_parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY.PATH=VALUE",
        help="Override a config value before validation (repeatable)",
    )

    commands.add_parser("list-models", help="List the model zoo names")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    if args.command == "list-models":
        return list_models()
    return run(args.config, out_dir=args.out, overrides=args.override, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
