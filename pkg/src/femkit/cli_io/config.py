"""Sectioned key-value config files describing solvable problems.

Format: ``[section]`` headers, ``key = value`` lines, ``#`` comments.
Sections: problem, domain, coefficients, fields (closed-form expressions),
bc, stokes_bc (coupled runs only), time, convergence, output.  Unknown
sections, unknown keys, missing required keys, and malformed expressions
are rejected with the offending line number.
"""

from dataclasses import dataclass, field

from ..mesh import DikeSpec, DiskSpec, DomainSpec, IntervalSpec, RectangleSpec
from .expressions import ExpressionError, compile_expression

__all__ = [
    "ConfigError",
    "BcSpec",
    "TimeBlock",
    "OutputBlock",
    "ConvergenceBlock",
    "ProblemConfig",
    "parse_config",
    "serialize_config",
    "parse_domain_spec",
]

PROBLEM_KINDS = ("poisson1d", "poisson2d", "stokes", "advdiff1d", "advdiff2d", "coupled", "convergence")

_1D_KINDS = ("poisson1d", "advdiff1d")
_TIME_KINDS = ("advdiff1d", "advdiff2d", "coupled")

_FIELD_KEYS = ("f", "f1", "f2", "u0", "kappa", "beta_x", "beta_y")
_COEFFICIENT_KEYS = ("mu", "mu_stokes", "eps")


class ConfigError(ValueError):
    """Config file cannot be parsed or fails validation."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class BcSpec:
    """One boundary condition: kind plus raw expression strings.

    kinds: ``dirichlet`` (one expression, or two comma-separated for
    Stokes velocity pairs), ``neumann`` (no data, natural condition),
    ``inflow`` (coupled runs: gated Dirichlet value).
    """

    kind: str
    exprs: tuple[str, ...] = ()


@dataclass(frozen=True)
class TimeBlock:
    dt: float
    t_final: float
    t_gate: float | None = None
    output_every: int = 0


@dataclass(frozen=True)
class OutputBlock:
    format: str = "csv"  # csv | vtk | both | none
    prefix: str | None = None


@dataclass(frozen=True)
class ConvergenceBlock:
    case: str
    space: str = "p1"
    levels: int = 4


@dataclass
class ProblemConfig:
    """Parsed, validated description of one run."""

    kind: str
    domain: DomainSpec | None = None
    space: str | None = None
    coefficients: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict)
    bc: dict = field(default_factory=dict)
    stokes_bc: dict = field(default_factory=dict)
    time: TimeBlock | None = None
    convergence: ConvergenceBlock | None = None
    output: OutputBlock = field(default_factory=OutputBlock)

    @property
    def dim(self) -> int:
        return 1 if self.kind in _1D_KINDS else 2

    def expression(self, name: str, default=None):
        """Compile a [fields] entry, or return the default when absent."""
        if name not in self.fields:
            return default
        return compile_expression(self.fields[name], self.dim)

    def coefficient(self, name: str, default=None) -> float | None:
        return self.coefficients.get(name, default)


# ---------------------------------------------------------------------------
# Raw line parsing


def _read_sections(path):
    try:
        with open(path) as fh:
            raw = fh.readlines()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None

    sections: dict[str, list[tuple[str, str, int]]] = {}
    current: str | None = None
    for lineno, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("[") and body.endswith("]"):
            current = body[1:-1].strip()
            if not current:
                raise ConfigError("empty section name", lineno)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            sections[current] = []
            continue
        if current is None:
            raise ConfigError("key outside any [section]", lineno)
        if "=" not in body:
            raise ConfigError("expected 'key = value'", lineno)
        key, value = body.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError("expected 'key = value'", lineno)
        if any(k == key for k, _, _ in sections[current]):
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno)
        sections[current].append((key, value, lineno))
    return sections


def _as_float(value: str, key: str, lineno: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}", lineno) from None


def _as_int(value: str, key: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}", lineno) from None


def _section_dict(items, known_keys, section):
    out = {}
    for key, value, lineno in items:
        if known_keys is not None and key not in known_keys:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        out[key] = (value, lineno)
    return out


# ---------------------------------------------------------------------------
# Domain specs


def _parse_domain_items(items) -> DomainSpec:
    table = _section_dict(items, None, "domain")
    if "kind" not in table:
        raise ConfigError("missing key domain.kind")
    kind, kind_line = table.pop("kind")

    def need(keys, caster):
        values = []
        for k in keys:
            if k not in table:
                raise ConfigError(f"missing key domain.{k} for domain kind {kind!r}", kind_line)
            value, lineno = table.pop(k)
            values.append(caster(value, f"domain.{k}", lineno))
        return values

    try:
        if kind == "interval":
            a, b = need(["a", "b"], _as_float)
            (n,) = need(["n"], _as_int)
            spec = IntervalSpec(a, b, n)
        elif kind == "rectangle":
            x0, x1, y0, y1 = need(["x0", "x1", "y0", "y1"], _as_float)
            nx, ny = need(["nx", "ny"], _as_int)
            spec = RectangleSpec(x0, x1, y0, y1, nx, ny)
        elif kind == "disk":
            (radius,) = need(["radius"], _as_float)
            n_r, n_theta = need(["nr", "ntheta"], _as_int)
            spec = DiskSpec(radius, n_r, n_theta)
        elif kind == "dike":
            nx, ny = need(["nx", "ny"], _as_int)
            spec = DikeSpec(nx, ny)
        else:
            raise ConfigError(f"unknown domain kind {kind!r}", kind_line)
    except ValueError as exc:
        raise ConfigError(f"invalid domain: {exc}", kind_line) from None

    for key, (_, lineno) in table.items():
        raise ConfigError(f"unknown key {key!r} in [domain]", lineno)
    return spec


def parse_domain_spec(text: str) -> DomainSpec:
    """Parse a compact spec string like ``dike(90,20)`` or ``rectangle(0,1,0,1,4,4)``."""
    text = text.strip()
    if "(" not in text or not text.endswith(")"):
        raise ValueError(f"malformed domain spec {text!r}; expected kind(arg, ...)")
    kind, argstr = text[:-1].split("(", 1)
    kind = kind.strip()
    args = [a.strip() for a in argstr.split(",")] if argstr.strip() else []
    try:
        if kind == "interval":
            a, b, n = args
            return IntervalSpec(float(a), float(b), int(n))
        if kind == "rectangle":
            x0, x1, y0, y1, nx, ny = args
            return RectangleSpec(float(x0), float(x1), float(y0), float(y1), int(nx), int(ny))
        if kind == "disk":
            radius, n_r, n_theta = args
            return DiskSpec(float(radius), int(n_r), int(n_theta))
        if kind == "dike":
            nx, ny = args
            return DikeSpec(int(nx), int(ny))
    except ValueError as exc:
        raise ValueError(f"invalid domain spec {text!r}: {exc}") from None
    raise ValueError(f"unknown domain kind {kind!r}")


# ---------------------------------------------------------------------------
# Boundary conditions


def _parse_bc_value(value: str, key: str, lineno: int, dim: int, pair_valued: bool, allow_inflow: bool) -> BcSpec:
    parts = value.split(None, 1)
    kind = parts[0]
    rest = parts[1] if len(parts) > 1 else ""
    if kind == "neumann":
        if rest:
            raise ConfigError(f"{key}: neumann carries no data (natural zero-flux condition)", lineno)
        return BcSpec("neumann")
    if kind not in ("dirichlet", "inflow"):
        raise ConfigError(f"{key}: unknown boundary condition kind {kind!r}", lineno)
    if kind == "inflow" and not allow_inflow:
        raise ConfigError(f"{key}: 'inflow' is only valid for coupled problems", lineno)
    exprs = tuple(e.strip() for e in rest.split(",")) if rest else ()
    expected = 2 if (pair_valued and kind == "dirichlet") else 1
    if len(exprs) != expected or any(not e for e in exprs):
        raise ConfigError(f"{key}: expected {expected} expression(s) after {kind!r}", lineno)
    for e in exprs:
        try:
            compile_expression(e, dim)
        except ExpressionError as exc:
            raise ConfigError(f"{key}: {exc}", lineno) from None
    return BcSpec(kind, exprs)


def _parse_bc_section(items, section: str, dim: int, pair_valued: bool, allow_inflow: bool) -> dict:
    out = {}
    for key, value, lineno in items:
        if dim == 1:
            if key not in ("left", "right"):
                raise ConfigError(f"1D boundary labels are 'left'/'right', got {key!r}", lineno)
            label: object = key
        else:
            try:
                label = int(key)
            except ValueError:
                raise ConfigError(f"2D boundary labels are integers, got {key!r}", lineno) from None
        out[label] = _parse_bc_value(value, f"{section}.{key}", lineno, dim, pair_valued, allow_inflow)
    return out


# ---------------------------------------------------------------------------
# Whole-file parse and validation


def parse_config(path) -> ProblemConfig:
    """Parse and validate a config file; errors carry line numbers."""
    sections = _read_sections(path)

    known_sections = {
        "problem", "domain", "coefficients", "fields", "bc", "stokes_bc",
        "time", "convergence", "output",
    }
    for name in sections:
        if name not in known_sections:
            first_line = sections[name][0][2] if sections[name] else None
            raise ConfigError(f"unknown section [{name}]", first_line)

    if "problem" not in sections:
        raise ConfigError("missing [problem] section")
    problem = _section_dict(sections["problem"], ("kind", "space"), "problem")
    if "kind" not in problem:
        raise ConfigError("missing key problem.kind")
    kind, kind_line = problem["kind"]
    if kind not in PROBLEM_KINDS:
        raise ConfigError(f"unknown problem kind {kind!r}", kind_line)

    space = None
    if "space" in problem:
        space, space_line = problem["space"]
        if space not in ("p1", "p2"):
            raise ConfigError(f"problem.space must be p1 or p2, got {space!r}", space_line)
        if kind in _1D_KINDS and space != "p1":
            raise ConfigError("1D problems support only p1", space_line)

    dim = 1 if kind in _1D_KINDS else 2

    domain = None
    if kind != "convergence":
        if "domain" not in sections:
            raise ConfigError("missing [domain] section")
        domain = _parse_domain_items(sections["domain"])
        if dim == 1 and not isinstance(domain, IntervalSpec):
            raise ConfigError(f"{kind} needs an interval domain")
        if dim == 2 and isinstance(domain, IntervalSpec):
            raise ConfigError(f"{kind} needs a 2D domain")

    coefficients = {}
    for key, (value, lineno) in _section_dict(
        sections.get("coefficients", []), _COEFFICIENT_KEYS, "coefficients"
    ).items():
        coefficients[key] = _as_float(value, f"coefficients.{key}", lineno)

    fields = {}
    for key, (value, lineno) in _section_dict(sections.get("fields", []), _FIELD_KEYS, "fields").items():
        try:
            compile_expression(value, dim)
        except ExpressionError as exc:
            raise ConfigError(f"fields.{key}: {exc}", lineno) from None
        fields[key] = value

    pair_valued = kind == "stokes"
    bc = _parse_bc_section(sections.get("bc", []), "bc", dim, pair_valued, allow_inflow=(kind == "coupled"))
    stokes_bc = _parse_bc_section(sections.get("stokes_bc", []), "stokes_bc", 2, True, False)
    if stokes_bc and kind != "coupled":
        raise ConfigError("[stokes_bc] is only used by coupled problems")

    time = None
    if "time" in sections:
        table = _section_dict(sections["time"], ("dt", "t_final", "t_gate", "output_every"), "time")
        for required in ("dt", "t_final"):
            if required not in table:
                raise ConfigError(f"missing key time.{required}")
        dt = _as_float(table["dt"][0], "time.dt", table["dt"][1])
        t_final = _as_float(table["t_final"][0], "time.t_final", table["t_final"][1])
        t_gate = None
        if "t_gate" in table:
            t_gate = _as_float(table["t_gate"][0], "time.t_gate", table["t_gate"][1])
        output_every = 0
        if "output_every" in table:
            output_every = _as_int(table["output_every"][0], "time.output_every", table["output_every"][1])
        time = TimeBlock(dt=dt, t_final=t_final, t_gate=t_gate, output_every=output_every)

    convergence = None
    if "convergence" in sections:
        table = _section_dict(sections["convergence"], ("case", "space", "levels"), "convergence")
        if "case" not in table:
            raise ConfigError("missing key convergence.case")
        case = table["case"][0]
        conv_space = table["space"][0] if "space" in table else "p1"
        if conv_space not in ("p1", "p2"):
            raise ConfigError("convergence.space must be p1 or p2", table["space"][1])
        levels = _as_int(table["levels"][0], "convergence.levels", table["levels"][1]) if "levels" in table else 4
        convergence = ConvergenceBlock(case=case, space=conv_space, levels=levels)

    output = OutputBlock()
    if "output" in sections:
        table = _section_dict(sections["output"], ("format", "prefix"), "output")
        fmt = table["format"][0] if "format" in table else "csv"
        if fmt not in ("csv", "vtk", "both", "none"):
            raise ConfigError("output.format must be csv, vtk, both, or none", table["format"][1])
        if fmt in ("vtk", "both") and dim == 1:
            raise ConfigError("vtk output is only available for 2D problems", table["format"][1])
        prefix = table["prefix"][0] if "prefix" in table else None
        output = OutputBlock(format=fmt, prefix=prefix)

    config = ProblemConfig(
        kind=kind,
        domain=domain,
        space=space,
        coefficients=coefficients,
        fields=fields,
        bc=bc,
        stokes_bc=stokes_bc,
        time=time,
        convergence=convergence,
        output=output,
    )
    _validate_required(config)
    return config


def _validate_required(config: ProblemConfig) -> None:
    kind = config.kind
    if kind == "convergence":
        if config.convergence is None:
            raise ConfigError("convergence problems need a [convergence] section")
        return
    if kind in _TIME_KINDS:
        if config.time is None:
            raise ConfigError(f"{kind} needs a [time] section with time.dt and time.t_final")
        if "mu" not in config.coefficients:
            raise ConfigError(f"{kind} needs coefficients.mu")
        if kind in ("advdiff1d", "advdiff2d"):
            beta_keys = ("beta_x",) if kind == "advdiff1d" else ("beta_x", "beta_y")
            for key in beta_keys:
                if key not in config.fields:
                    raise ConfigError(f"{kind} needs fields.{key}")
    if kind == "stokes" and "mu_stokes" not in config.coefficients and "mu" not in config.coefficients:
        raise ConfigError("stokes needs coefficients.mu_stokes (or coefficients.mu)")
    if kind == "coupled":
        if "mu_stokes" not in config.coefficients:
            raise ConfigError("coupled needs coefficients.mu_stokes")
        if not config.stokes_bc:
            raise ConfigError("coupled needs a [stokes_bc] section")
        if config.time.t_gate is None:
            raise ConfigError("coupled needs time.t_gate")
        inflows = [l for l, s in config.bc.items() if s.kind == "inflow"]
        if len(inflows) != 1:
            raise ConfigError("coupled needs exactly one 'inflow' entry in [bc]")
    if kind != "coupled" and any(s.kind == "inflow" for s in config.bc.values()):
        raise ConfigError("'inflow' boundary conditions are only valid for coupled problems")
    if not config.bc and kind in ("poisson1d", "poisson2d", "stokes"):
        raise ConfigError(f"{kind} needs a [bc] section")


# ---------------------------------------------------------------------------
# Serialization (canonical form; parse(serialize(c)) == c)


def _domain_lines(spec: DomainSpec) -> list[str]:
    if isinstance(spec, IntervalSpec):
        return ["kind = interval", f"a = {spec.a!r}", f"b = {spec.b!r}", f"n = {spec.n}"]
    if isinstance(spec, RectangleSpec):
        return [
            "kind = rectangle",
            f"x0 = {spec.x0!r}", f"x1 = {spec.x1!r}",
            f"y0 = {spec.y0!r}", f"y1 = {spec.y1!r}",
            f"nx = {spec.nx}", f"ny = {spec.ny}",
        ]
    if isinstance(spec, DiskSpec):
        return ["kind = disk", f"radius = {spec.radius!r}", f"nr = {spec.n_r}", f"ntheta = {spec.n_theta}"]
    if isinstance(spec, DikeSpec):
        return ["kind = dike", f"nx = {spec.nx}", f"ny = {spec.ny}"]
    raise TypeError(f"unknown domain spec {spec!r}")


def _bc_lines(table: dict) -> list[str]:
    lines = []
    for label, spec in table.items():
        if spec.kind == "neumann":
            lines.append(f"{label} = neumann")
        else:
            lines.append(f"{label} = {spec.kind} " + ", ".join(spec.exprs))
    return lines


def serialize_config(config: ProblemConfig) -> str:
    """Render a config back to its canonical text form."""
    out = ["[problem]", f"kind = {config.kind}"]
    if config.space is not None:
        out.append(f"space = {config.space}")

    if config.domain is not None:
        out += ["", "[domain]"] + _domain_lines(config.domain)
    if config.coefficients:
        out += ["", "[coefficients]"] + [f"{k} = {v!r}" for k, v in config.coefficients.items()]
    if config.fields:
        out += ["", "[fields]"] + [f"{k} = {v}" for k, v in config.fields.items()]
    if config.bc:
        out += ["", "[bc]"] + _bc_lines(config.bc)
    if config.stokes_bc:
        out += ["", "[stokes_bc]"] + _bc_lines(config.stokes_bc)
    if config.time is not None:
        out += ["", "[time]", f"dt = {config.time.dt!r}", f"t_final = {config.time.t_final!r}"]
        if config.time.t_gate is not None:
            out.append(f"t_gate = {config.time.t_gate!r}")
        if config.time.output_every:
            out.append(f"output_every = {config.time.output_every}")
    if config.convergence is not None:
        out += [
            "", "[convergence]",
            f"case = {config.convergence.case}",
            f"space = {config.convergence.space}",
            f"levels = {config.convergence.levels}",
        ]
    out += ["", "[output]", f"format = {config.output.format}"]
    if config.output.prefix is not None:
        out.append(f"prefix = {config.output.prefix}")
    return "\n".join(out) + "\n"
