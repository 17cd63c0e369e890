"""
Config-driven experiment runner.

Configs are flat ``key = value`` files with dotted keys::

    mapping.id = rotation
    mapping.theta = 1.0471975511965976
    start = 1, 0
    n_max = 2000
    sample.seed = 0
    checks = theorem_3_1, lemma_4_1

Usage::

    attractive run CONFIG
    attractive check NAME CONFIG
    attractive list-catalog [--json]

Exit status: 0 all checks pass, 1 a check did not pass, 2 invalid config,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .attractive_set import (build_attractive_approx, check_projected_attractive_fixed,
                             check_projection_identity, find_fixed_points,
                             project_attractive)
from .ergodic import analyze, cluster_attractiveness, iterate
from .extension import extend, verify_extension_fixed_set, verify_extension_quasinonexpansive
from .hilbert import PROJECTION_TOL
from .mappings import (CATALOG, RESIDUAL_TOL, REFINE_LEVELS, DomainError, PreconditionError,
                       make_mapping, quasinonexpansive_residual, refine_toward_images,
                       sample_schedule)

OUTPUT_ROOT_ENV = "ATTRACTIVE_OUTPUT_ROOT"
CHECKS = ("lemma_2_3", "lemma_2_4", "extension", "theorem_3_1", "lemma_4_1", "corollary_4_1")
NEEDS_TRACE = {"theorem_3_1", "lemma_4_1", "corollary_4_1"}

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"expected numbers, got {text!r}") from None


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


@dataclass
class ExperimentConfig:
    mapping_id: str
    mapping_params: dict
    start: list[float]
    n_max: int = 2000
    grid_size: int = 64
    random_count: int = 64
    seed: int = 0
    refine_levels: int = REFINE_LEVELS
    segment_levels: int = 0
    orbit_steps: int = 0
    fixed_tol: float = RESIDUAL_TOL
    residual_tol: float = RESIDUAL_TOL
    projection_tol: float = PROJECTION_TOL
    identity_tol: float = 0.05
    checks: list[str] = field(default_factory=list)
    output_dir: str | None = None
    expect_contradiction: bool = False
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in raw:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            raw[key] = value
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        if "mapping.id" not in raw:
            raise ConfigError("missing mapping.id")
        if "start" not in raw:
            raise ConfigError("missing start")
        mapping_id = raw["mapping.id"]
        if mapping_id not in CATALOG:
            raise ConfigError(f"unknown mapping id {mapping_id!r}; known: {', '.join(CATALOG)}")
        params = {}
        for key, value in raw.items():
            if key.startswith("mapping.") and key != "mapping.id":
                vals = _floats(value)
                params[key[len("mapping."):]] = vals[0] if len(vals) == 1 else tuple(vals)
        scalar = {
            "n_max": ("n_max", int), "sample.grid": ("grid_size", int),
            "sample.random": ("random_count", int), "sample.seed": ("seed", int),
            "sample.refine": ("refine_levels", int), "sample.segment": ("segment_levels", int),
            "sample.orbit": ("orbit_steps", int), "tol.fixed": ("fixed_tol", float),
            "tol.residual": ("residual_tol", float), "tol.projection": ("projection_tol", float),
            "tol.identity": ("identity_tol", float),
        }
        kw = {}
        for key, (attr, conv) in scalar.items():
            if key in raw:
                try:
                    kw[attr] = conv(raw[key])
                except ValueError:
                    raise ConfigError(f"{key}: cannot parse {raw[key]!r} as {conv.__name__}") from None
        checks = [c.strip() for c in raw.get("checks", "").split(",") if c.strip()]
        unknown = [c for c in checks if c not in CHECKS]
        if unknown:
            raise ConfigError(f"unknown checks {unknown}; known: {', '.join(CHECKS)}")
        known = {"mapping.id", "start", "checks", "output_dir", "expect.contradiction", *scalar}
        stray = [k for k in raw if k not in known and not k.startswith("mapping.")]
        if stray:
            raise ConfigError(f"unknown keys {stray}")
        cfg = cls(mapping_id, params, _floats(raw["start"]), checks=checks,
                  output_dir=raw.get("output_dir"),
                  expect_contradiction=_bool(raw.get("expect.contradiction", "false")),
                  raw=raw, **kw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())

    def validate(self):
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if NEEDS_TRACE & set(self.checks) and self.n_max < 50:
            raise ConfigError("n_max must be >= 50 for convergence checks")
        if min(self.fixed_tol, self.residual_tol, self.projection_tol, self.identity_tol) <= 0:
            raise ConfigError("tolerances must be positive")
        try:
            T = self.mapping()
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(f"cannot build mapping {self.mapping_id}: {e}") from None
        if len(self.start) != T.dim:
            raise ConfigError(f"start has dimension {len(self.start)}, mapping needs {T.dim}")
        if not T.domain.contains(self.start):
            raise ConfigError(f"start {self.start} is outside the domain of {self.mapping_id}")

    def mapping(self):
        return make_mapping(self.mapping_id, **self.mapping_params)

    def canonical(self) -> str:
        return "".join(f"{k} = {self.raw[k]}\n" for k in sorted(self.raw) if k != "output_dir")

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:12]


@dataclass
class CheckOutcome:
    name: str
    status: str  # PASS, FAIL or AMBIGUOUS
    lines: list[str]


class Experiment:
    """Everything one config needs, built lazily and shared between checks."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.T = cfg.mapping()
        base = sample_schedule(self.T.domain, cfg.grid_size, cfg.random_count,
                               cfg.seed, cfg.refine_levels)
        self.samples = refine_toward_images(self.T, base, cfg.segment_levels, cfg.orbit_steps)
        # independent, denser sample for checking hypotheses on candidate points
        self.validation = sample_schedule(self.T.domain, 4 * cfg.grid_size, 4 * cfg.random_count,
                                          cfg.seed + 1, cfg.refine_levels)
        self.approx = build_attractive_approx(self.T, self.samples, cfg.fixed_tol, cfg.projection_tol)
        self.rng = np.random.default_rng(cfg.seed)
        self._trace = self._report = None

    @property
    def trace(self):
        if self._trace is None:
            self._trace = iterate(self.T, self.cfg.start, self.cfg.n_max, self.approx)
        return self._trace

    @property
    def report(self):
        if self._report is None:
            self._report = analyze(self.trace, self.approx, self.cfg.residual_tol)
        return self._report

    def probe_box(self, margin: float = 1.0):
        return self.T.domain.probe_lower - margin, self.T.domain.probe_upper + margin

    def members(self, n: int) -> np.ndarray:
        lo, hi = self.probe_box()
        return np.array([project_attractive(self.approx, p).point
                         for p in self.rng.uniform(lo, hi, size=(n, self.T.dim))])

    def fixed_set(self):
        return find_fixed_points(self.T, self.T.domain.grid(101 ** min(self.T.dim, 2)),
                                 self.cfg.fixed_tol)

    # -- checks ----------------------------------------------------------

    def check_lemma_2_3(self) -> CheckOutcome:
        C = self.T.domain.closure
        if self.T.domain.open:
            return CheckOutcome("lemma_2_3", "AMBIGUOUS", ["domain is not closed; hypothesis not met"])
        lines, ok = [], True
        for z in self.members(10):
            try:
                fixed = check_projected_attractive_fixed(self.T, C, z, self.cfg.fixed_tol, self.validation)
            except PreconditionError as e:
                return CheckOutcome("lemma_2_3", "AMBIGUOUS", [str(e)])
            lines.append(f"z={np.array2string(z, precision=17)} P_C(z) fixed: {fixed}")
            ok &= fixed
        return CheckOutcome("lemma_2_3", "PASS" if ok else "FAIL", lines)

    def check_lemma_2_4(self) -> CheckOutcome:
        fixed = self.fixed_set()
        if not len(fixed):
            return CheckOutcome("lemma_2_4", "AMBIGUOUS", ["no fixed points found on the search grid"])
        qne = quasinonexpansive_residual(self.T, fixed.points, self.approx.sample_points,
                                         self.cfg.residual_tol)
        if not qne.passed:
            return CheckOutcome("lemma_2_4", "AMBIGUOUS", [f"not quasinonexpansive on the sample: {qne}"])
        xs = self.T.domain.random(self.rng, 20)
        gaps = [check_projection_identity(self.T, self.approx, fixed, x, self.cfg.residual_tol,
                                          verified=True) for x in xs]
        k = int(np.argmax(gaps))
        ok = gaps[k] <= self.cfg.identity_tol
        return CheckOutcome("lemma_2_4", "PASS" if ok else "FAIL", [
            f"max |P_F(x) - P_A(x)| = {gaps[k]:.17g} (tol {self.cfg.identity_tol:g}) over 20 points",
            f"witness x = {np.array2string(xs[k], precision=17)}"])

    def check_extension(self) -> CheckOutcome:
        if self.approx.whole_space:
            return CheckOutcome("extension", "AMBIGUOUS", ["approximation is the whole space"])
        ext = extend(self.T, self.approx, self.fixed_set(), self.cfg.fixed_tol)
        lo, hi = self.probe_box()
        per_axis = 401 if self.T.dim == 1 else 41
        axes = [np.linspace(l, h, per_axis) for l, h in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.T.dim)
        fixed_rep = verify_extension_fixed_set(ext, grid)
        qne_rep = verify_extension_quasinonexpansive(
            ext, self.members(3), self.rng.uniform(lo, hi, size=(200, self.T.dim)))
        ok = fixed_rep.passed and qne_rep.passed
        return CheckOutcome("extension", "PASS" if ok else "FAIL", [
            f"fixed set of extension = approximation: {fixed_rep}",
            f"quasinonexpansive w.r.t. approximation: {qne_rep}"])

    def check_theorem_3_1(self) -> CheckOutcome:
        rep = self.report
        lines = str(rep).splitlines()
        if rep.contradiction_case:
            status = "PASS" if self.cfg.expect_contradiction else "FAIL"
            lines.append(f"contradiction case detected (expected: {self.cfg.expect_contradiction})")
        elif self.cfg.expect_contradiction:
            status = "FAIL"
            lines.append("contradiction case expected but not detected")
        else:
            status = "PASS" if rep.mean_matches_proj else "FAIL"
        return CheckOutcome("theorem_3_1", status, lines)

    def check_lemma_4_1(self) -> CheckOutcome:
        try:
            rep = cluster_attractiveness(self.trace, self.T, self.validation, self.cfg.residual_tol,
                                         seed=self.cfg.seed)
        except PreconditionError as e:
            return CheckOutcome("lemma_4_1", "AMBIGUOUS", [str(e)])
        return CheckOutcome("lemma_4_1", "PASS" if rep.passed else "FAIL",
                            [f"cluster point {np.array2string(self.trace.means[-1], precision=17)}",
                             f"attractive residual: {rep}"])

    def check_corollary_4_1(self) -> CheckOutcome:
        cluster = self.check_lemma_4_1()
        mean = self.report
        lines = cluster.lines + [f"mean_matches_proj {mean.mean_matches_proj} "
                                 f"(combined tol {mean.combined_tol:.17g})"]
        if cluster.status == "AMBIGUOUS":
            return CheckOutcome("corollary_4_1", "AMBIGUOUS", lines)
        ok = cluster.status == "PASS" and mean.mean_matches_proj
        return CheckOutcome("corollary_4_1", "PASS" if ok else "FAIL", lines)

    def run_check(self, name: str) -> CheckOutcome:
        return getattr(self, f"check_{name}")()


def format_report(cfg: ExperimentConfig, outcomes: list[CheckOutcome]) -> str:
    out = [f"# experiment {cfg.digest()}", "## config"]
    out += ["  " + line for line in cfg.canonical().splitlines()]
    out.append(f"## tolerances fixed={cfg.fixed_tol!r} residual={cfg.residual_tol!r} "
               f"projection={cfg.projection_tol!r} identity={cfg.identity_tol!r}")
    out.append(f"## seed {cfg.seed}")
    for o in outcomes:
        out.append(f"[{o.status}] {o.name}")
        out += ["    " + line for line in o.lines]
    return "\n".join(out) + "\n"


def output_dir(cfg: ExperimentConfig) -> Path:
    if cfg.output_dir:
        return Path(cfg.output_dir)
    root = os.environ.get(OUTPUT_ROOT_ENV, "runs")
    return Path(root) / cfg.digest()


def run(cfg: ExperimentConfig, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    try:
        exp = Experiment(cfg)
        outcomes = [exp.run_check(name) for name in cfg.checks]
        trace_csv = exp.trace.to_csv()
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL
    report = format_report(cfg, outcomes)
    digest = cfg.digest()
    try:
        out = output_dir(cfg)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"trace-{digest}.csv").write_text(trace_csv)
        (out / f"approx-{digest}.txt").write_text(exp.approx.to_table())
        (out / f"report-{digest}.txt").write_text(report)
    except OSError as e:
        print(f"error: cannot write outputs: {e}", file=sys.stderr)
        return EXIT_IO
    stream.write(report)
    stream.write(f"outputs in {out}\n")
    return EXIT_OK if all(o.status == "PASS" for o in outcomes) else EXIT_FAIL


def list_catalog(machine: bool = False) -> str:
    lines = []
    for e in CATALOG.values():
        params = {k: list(v) if isinstance(v, tuple) else v for k, v in e.params.items()}
        if machine:
            lines.append(json.dumps({"id": e.id, "params": params, "F(T)": e.fixed_set,
                                     "A(T)": e.attractive_set, "summary": e.summary}, sort_keys=True))
        else:
            lines.append(f"{e.id}\n    {e.summary}\n    params: "
                         + ", ".join(f"{k}={v}" for k, v in params.items())
                         + f"\n    F(T) = {e.fixed_set}\n    A(T) = {e.attractive_set}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="attractive", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="run every check listed in a config")
    p_run.add_argument("config")
    p_check = sub.add_parser("check", help="run a single named check")
    p_check.add_argument("name", choices=CHECKS)
    p_check.add_argument("config")
    p_list = sub.add_parser("list-catalog", help="describe the mapping catalog")
    p_list.add_argument("--json", action="store_true", help="one JSON record per line")
    args = parser.parse_args(argv)

    if args.verb == "list-catalog":
        sys.stdout.write(list_catalog(args.json))
        return EXIT_OK
    try:
        cfg = ExperimentConfig.load(args.config)
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.verb == "check":
        cfg.checks = [args.name]
        cfg.raw["checks"] = args.name
        try:
            cfg.validate()
        except ConfigError as e:
            print(f"config error: {e}", file=sys.stderr)
            return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
