"""Problem configuration: a diff-friendly INI file mapped onto the lab.

See docs/config_format.md for the grammar.  Every knob of the pipeline
(domain, resonant rank, truncation, nonlinearity, right-hand side,
quadrature, solver, condition sampling) lives in one file so a run is
reproducible from the config alone.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .basis import Domain, EigenBasis, decompose
from .conditions import ConditionSettings
from .nonlinearity import BUILTIN_NAMES, Nonlinearity, builtin
from .quadrature import QuadratureSettings
from .solver import GalerkinProblem


class ConfigError(ValueError):
    """Validation failure, message carries the dotted field path."""


@dataclass
class ProblemConfig:
    domain: Domain
    k: int
    n: int | None
    nonlinearity: Nonlinearity
    f_coeffs: dict[int, float] = field(default_factory=dict)
    f_expr_text: str | None = None
    tie_tolerance: float = 1e-9
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    conditions: ConditionSettings = field(default_factory=ConditionSettings)
    asymptotics_s_max: float = 1e6
    asymptotics_tolerance: float = 1e-2
    solver_tol: float = 1e-9
    solver_max_iter: int = 100
    n_test_factor: int = 2

    def resolve_n(self) -> int:
        """Truncation default: eight modes per resonant-or-lower rank."""
        if self.n is not None:
            return self.n
        probe = EigenBasis(self.domain, self.k + 8)
        dec = decompose(probe.pairs, self.k, self.tie_tolerance)
        return 8 * (self.k + dec.m)

    def f_field(self):
        if self.f_expr_text is None:
            return None
        variables = ("x",) if self.domain.kind == "interval" else ("x", "y")
        tree = ex.parse(self.f_expr_text, variables)
        return ex.compile_fn(tree, variables)

    def build_problem(self) -> GalerkinProblem:
        n = self.resolve_n()
        if self.f_coeffs and max(self.f_coeffs) > n:
            raise ConfigError(f"rhs.coeffs: rank {max(self.f_coeffs)} exceeds "
                              f"truncation N={n}")
        if self.k > n:
            raise ConfigError(f"problem.k: resonant rank {self.k} exceeds "
                              f"truncation N={n}")
        coeffs = np.zeros(n)
        for rank, value in self.f_coeffs.items():
            coeffs[rank - 1] = value
        f_field = self.f_field()
        problem = GalerkinProblem.build(
            self.domain, self.k, n, self.nonlinearity,
            f_coeffs=coeffs if f_field is None else None,
            f_field=f_field, quadrature=self.quadrature,
            tie_tolerance=self.tie_tolerance)
        if f_field is not None and self.f_coeffs:
            for rank, value in self.f_coeffs.items():
                problem.f_coeffs[rank - 1] += value
        return problem


def _get(section, key, cast, default=None, path=""):
    raw = section.get(key)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError as err:
        raise ConfigError(f"{path or key}: cannot parse {raw!r}") from err


def _require(parser, name):
    if name not in parser:
        raise ConfigError(f"{name}: section missing")
    return parser[name]


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def parse_coeff_list(raw: str) -> dict[int, float]:
    """Parse "rank:value, rank:value" coefficient lists."""
    out: dict[int, float] = {}
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        rank_text, _, value_text = chunk.partition(":")
        try:
            rank = int(rank_text)
            value = float(value_text)
        except ValueError as err:
            raise ConfigError(f"rhs.coeffs: bad entry {chunk!r}") from err
        if rank < 1:
            raise ConfigError(f"rhs.coeffs: rank must be >= 1, got {rank}")
        out[rank] = out.get(rank, 0.0) + value
    return out


def _parse_domain(section) -> Domain:
    kind = section.get("kind", "interval").strip()
    if kind == "interval":
        a = _get(section, "a", float, 0.0, "domain.a")
        b = _get(section, "b", float, math.pi, "domain.b")
        if b <= a:
            raise ConfigError(f"domain.b: need b > a, got ({a}, {b})")
        return Domain.interval(a, b)
    if kind == "rectangle":
        lx = _get(section, "lx", float, 1.0, "domain.lx")
        ly = _get(section, "ly", float, 1.0, "domain.ly")
        if lx <= 0 or ly <= 0:
            raise ConfigError(f"domain.lx/ly: sides must be positive")
        return Domain.rectangle(lx, ly)
    raise ConfigError(f"domain.kind: unknown kind {kind!r}")


def _parse_nonlinearity(section) -> Nonlinearity:
    has_builtin = "builtin" in section
    has_expr = "expr" in section
    if has_builtin == has_expr:
        raise ConfigError("nonlinearity: exactly one of 'builtin' or 'expr' "
                          "must be given")
    if has_builtin:
        name = section["builtin"].strip()
        if name not in BUILTIN_NAMES:
            raise ConfigError(f"nonlinearity.builtin: unknown name {name!r}")
        c = _get(section, "c", float, None, "nonlinearity.c")
        try:
            return builtin(name, c)
        except ValueError as err:
            raise ConfigError(f"nonlinearity.builtin: {err}") from err
    try:
        return Nonlinearity.from_text(
            section["expr"],
            antiderivative_text=section.get("antiderivative"),
            declared_bound=_get(section, "bound", float, None,
                                "nonlinearity.bound"))
    except ex.ParseError as err:
        raise ConfigError(f"nonlinearity.expr: {err}") from err


def load_config(path: str) -> ProblemConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path!r} not found or unreadable")
    return parse_config(parser)


def loads_config(text: str) -> ProblemConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.read_string(text)
    return parse_config(parser)


def parse_config(parser: configparser.ConfigParser) -> ProblemConfig:
    domain = _parse_domain(_require(parser, "domain"))
    problem = _require(parser, "problem")
    k = _get(problem, "k", int, 1, "problem.k")
    if k < 1:
        raise ConfigError("problem.k: resonant rank must be >= 1")
    n = _get(problem, "n", int, None, "problem.n")
    nl = _parse_nonlinearity(_require(parser, "nonlinearity"))

    f_coeffs: dict[int, float] = {}
    f_expr_text = None
    if "rhs" in parser:
        rhs = parser["rhs"]
        if "coeffs" in rhs:
            f_coeffs = parse_coeff_list(rhs["coeffs"])
        if "expr" in rhs:
            f_expr_text = rhs["expr"]

    quad = QuadratureSettings()
    if "quadrature" in parser:
        q = parser["quadrature"]
        quad = QuadratureSettings(
            order=_get(q, "order", int, 10, "quadrature.order"),
            cells_per_axis=_get(q, "cells_per_axis", int, None,
                                "quadrature.cells_per_axis"),
            compensated=_get(q, "compensated", _bool, False,
                             "quadrature.compensated"))

    cond = ConditionSettings()
    s_max, s_tol = 1e6, 1e-2
    if "conditions" in parser:
        c = parser["conditions"]
        cond = ConditionSettings(
            t_min=_get(c, "t_min", float, 1.0, "conditions.t_min"),
            t_max=_get(c, "t_max", float, 1e8, "conditions.t_max"),
            t_points=_get(c, "t_points", int, 32, "conditions.t_points"),
            direction_count=_get(c, "directions", int, 64,
                                 "conditions.directions"),
            divergence_factor=_get(c, "divergence_factor", float, 10.0,
                                   "conditions.divergence_factor"),
            quadrature_tolerance=_get(c, "quadrature_tolerance", float, 1e-9,
                                      "conditions.quadrature_tolerance"))
        s_max = _get(c, "s_max", float, 1e6, "conditions.s_max")
        s_tol = _get(c, "limit_tolerance", float, 1e-2,
                     "conditions.limit_tolerance")

    solver_tol, solver_max_iter, n_test_factor = 1e-9, 100, 2
    if "solver" in parser:
        s = parser["solver"]
        solver_tol = _get(s, "tol", float, 1e-9, "solver.tol")
        solver_max_iter = _get(s, "max_iter", int, 100, "solver.max_iter")
        n_test_factor = _get(s, "n_test_factor", int, 2, "solver.n_test_factor")

    cfg = ProblemConfig(
        domain=domain, k=k, n=n, nonlinearity=nl,
        f_coeffs=f_coeffs, f_expr_text=f_expr_text,
        tie_tolerance=_get(problem, "tie_tolerance", float, 1e-9,
                           "problem.tie_tolerance"),
        quadrature=quad, conditions=cond,
        asymptotics_s_max=s_max, asymptotics_tolerance=s_tol,
        solver_tol=solver_tol, solver_max_iter=solver_max_iter,
        n_test_factor=n_test_factor)
    # validate rank bounds early, with the resolved truncation
    resolved = cfg.resolve_n()
    if k > resolved:
        raise ConfigError(f"problem.k: rank {k} exceeds truncation N={resolved}")
    if f_coeffs and max(f_coeffs) > resolved:
        raise ConfigError(f"rhs.coeffs: rank {max(f_coeffs)} exceeds "
                          f"truncation N={resolved}")
    return cfg
