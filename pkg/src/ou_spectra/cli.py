"""Command line front end: subcommand dispatch and report emission.

Reports are JSON by default ("human" renders the same payload as text,
"csv" is available for Gram matrices and small sample dumps). Rational
values serialize as "p/q" strings because JSON numbers are doubles and
exactness is the point; complex values serialize as {"re": .., "im": ..}.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 numerical rank
ambiguity.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    OUSpectraError,
    RankDecisionAmbiguous,
    SchemaError,
    UsageError,
    ValidationError,
)
from .gaussian import gram_matrix, inner_product
from .model import (
    OUModel,
    normalize_model,
    solve_lyapunov,
    validate_model,
)
from .operator import (
    apply_L,
    check_normal,
    hermite_rotation_matrix,
    operator_matrix,
    rotation_split,
)
from .polynomials import SparsePolynomial, monomial_basis
from .simulate import (
    Ensemble,
    SimConfig,
    ensemble_to_csv,
    save_ensemble,
    stationary_ensemble,
    worker_count,
)
from .spectral import (
    TOL_EIG,
    TOL_NILP,
    TOL_ORTH,
    drift_eigenvalues,
    generalized_eigenspaces,
    orthogonality_report,
    spectrum,
)
from .worked_examples import (
    Section5Params,
    section4_model,
    section5_eigenfunctions,
    section5_model,
    section5_whitening,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_AMBIGUOUS = 3

SUBCOMMANDS = ("analyze", "spectrum", "gram", "normalize", "simulate", "paper-example")

_SCALAR_SCHEMA = {
    "oneOf": [
        {"type": "number"},
        {"type": "string", "pattern": "^-?[0-9]+(/[0-9]+)?$"},
        {
            "type": "object",
            "required": ["re", "im"],
            "properties": {"re": {}, "im": {}},
        },
    ]
}
_MATRIX_SCHEMA = {
    "type": "array",
    "items": {"type": "array", "items": _SCALAR_SCHEMA},
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["tool", "subcommand", "tolerances", "conventions"],
    "properties": {
        "tool": {"const": "ou-spectra"},
        "subcommand": {"enum": list(SUBCOMMANDS)},
        "backend": {"enum": ["exact", "float"]},
        "tolerances": {
            "type": "object",
            "required": ["tol_eig", "tol_orth", "tol_nilp"],
            "properties": {
                "tol_eig": {"type": "number", "exclusiveMinimum": 0},
                "tol_orth": {"type": "number", "exclusiveMinimum": 0},
                "tol_nilp": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "conventions": {"type": "object"},
        "model": {
            "type": "object",
            "required": ["dim", "Q", "B"],
            "properties": {
                "dim": {"type": "integer", "minimum": 1},
                "Q": _MATRIX_SCHEMA,
                "B": _MATRIX_SCHEMA,
            },
        },
        "q_infinity": _MATRIX_SCHEMA,
        "drift_eigenvalues": {"type": "array"},
        "spectrum": {"type": "array"},
        "groups": {"type": "array"},
        "orthogonality": {"type": "object"},
        "gram": {"type": "object"},
        "normalization": {"type": "object"},
        "simulation": {"type": "object"},
        "example": {"type": "object"},
    },
}


# -- serialization helpers ---------------------------------------------------


def scalar_json(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        return {"re": x.real, "im": x.imag}
    return float(x)


def complex_json(z: complex):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def matrix_json(m):
    if isinstance(m, np.ndarray):
        return [[scalar_json(x) for x in row] for row in m]
    return [[scalar_json(x) for x in row] for row in m]


def _poly_json(p: SparsePolynomial) -> dict:
    out = p.to_json()
    out["text"] = p.render()
    return out


# -- model file parsing --------------------------------------------------------


def _parse_entry(x, where: str):
    if isinstance(x, bool) or not isinstance(x, (int, float, str)):
        raise SchemaError(f"{where}: entry {x!r} is not a number or 'p/q' string")
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as e:
            raise SchemaError(f"{where}: cannot parse rational {x!r}: {e}") from e
    return x


def _parse_matrix_data(data, name: str):
    if not isinstance(data, list) or not data:
        raise SchemaError(f'field "{name}" must be a nonempty array of rows')
    rows = []
    for i, row in enumerate(data):
        if not isinstance(row, list) or not row:
            raise SchemaError(f'field "{name}", row {i}: must be a nonempty array')
        rows.append([_parse_entry(x, f'field "{name}", row {i}, column {j}') for j, x in enumerate(row)])
    if any(len(r) != len(rows[0]) for r in rows):
        raise SchemaError(f'field "{name}" is ragged')
    return rows


def parse_model_file(path: str):
    """Read {"Q": [[...]], "B": [[...]]}; "p/q" strings stay exact."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise SchemaError(f"cannot read model file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise SchemaError(f"{path}: top level must be an object")
    for key in ("Q", "B"):
        if key not in data:
            raise SchemaError(f'{path}: missing field "{key}"')
    return _parse_matrix_data(data["Q"], "Q"), _parse_matrix_data(data["B"], "B")


# -- config ------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    degree: int
    tol_eig: float
    tol_orth: float
    tol_nilp: float
    backend: str
    fmt: str
    seed: int = 0
    paths: int = 100_000
    step: float = 0.5

    def __post_init__(self):
        if self.degree < 0:
            raise UsageError("--degree must be >= 0")
        for name in ("tol_eig", "tol_orth", "tol_nilp"):
            if not getattr(self, name) > 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_model_flags(p: argparse.ArgumentParser):
    p.add_argument("--model", help="path to a JSON model file {'Q': [[..]], 'B': [[..]]}")
    p.add_argument("--Q", help="inline JSON for Q (alternative to --model)")
    p.add_argument("--B", help="inline JSON for B (alternative to --model)")


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--degree", type=int, default=4, help="degree cap (default 4)")
    p.add_argument("--backend", choices=["auto", "exact", "float"], default="auto")
    p.add_argument("--format", choices=["json", "human", "csv"], default="json")
    p.add_argument("--tol-eig", type=float, default=TOL_EIG)
    p.add_argument("--tol-orth", type=float, default=TOL_ORTH)
    p.add_argument("--tol-nilp", type=float, default=TOL_NILP)


def build_parser() -> _Parser:
    parser = _Parser(prog="ou-spectra", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand")
    for name, helptext in [
        ("analyze", "full pipeline: validate, stationary covariance, eigenspaces, orthogonality"),
        ("spectrum", "enumerate the generator's spectrum up to the degree cap"),
        ("gram", "Gram matrix of the graded monomial basis under the stationary measure"),
        ("normalize", "change of coordinates making Q = I and the stationary covariance diagonal"),
        ("simulate", "stationary ensemble by exact-discretization sampling"),
        ("paper-example", "reproduce a bundled worked example"),
    ]:
        p = sub.add_parser(name, help=helptext)
        _add_common_flags(p)
        if name == "paper-example":
            p.add_argument("example", choices=["section4", "section5"])
            p.add_argument("--a", default="2", help="rational, a > d > 0")
            p.add_argument("--d", default="1", help="rational, d > 0")
            p.add_argument("--c", default="1", help="rational, c != 0")
        else:
            _add_model_flags(p)
        if name == "simulate":
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--paths", type=int, default=100_000)
            p.add_argument("--step", type=float, default=0.5)
            p.add_argument("--burn-in", type=int, default=None)
            p.add_argument("--out", help="write raw samples here plus a .json sidecar")
        if name == "gram":
            p.add_argument(
                "--normalized", action="store_true", help="scale entries by the diagonal"
            )
    return parser


def _load_model(args, config: RunConfig) -> OUModel:
    sources = [args.model is not None, args.Q is not None or args.B is not None]
    if sum(sources) != 1:
        raise UsageError("provide exactly one model source: --model or --Q/--B")
    if args.model:
        Q, B = parse_model_file(args.model)
    else:
        if args.Q is None or args.B is None:
            raise UsageError("--Q and --B must be given together")
        try:
            Q = _parse_matrix_data(json.loads(args.Q), "Q")
            B = _parse_matrix_data(json.loads(args.B), "B")
        except json.JSONDecodeError as e:
            raise UsageError(f"inline matrix is not valid JSON: {e}") from e
    return validate_model(Q, B, backend=config.backend)


# -- report assembly -----------------------------------------------------------


def _base_report(config: RunConfig, model: OUModel | None) -> dict:
    report = {
        "tool": "ou-spectra",
        "subcommand": config.subcommand,
        "conventions": {
            "generator": "L f = 1/2 tr(Q D2 f) + <B x, grad f>",
            "doubled_operator": "A = 2 L (rotation machinery only)",
            "hermite": "physicists' convention, weight exp(-x^2)",
        },
        "tolerances": {
            "tol_eig": config.tol_eig,
            "tol_orth": config.tol_orth,
            "tol_nilp": config.tol_nilp,
        },
    }
    if model is not None:
        report["backend"] = model.backend
        report["model"] = {
            "dim": model.dim,
            "Q": matrix_json(model.Q_exact if model.is_exact else model.Q),
            "B": matrix_json(model.B_exact if model.is_exact else model.B),
        }
    return report


def _spectrum_json(sp) -> list:
    return [
        {
            "value": complex_json(pt.value),
            "witnesses": [list(w) for w in pt.witnesses],
            "degrees": list(pt.degrees),
        }
        for pt in sp.points
    ]


def _groups_json(dec, tol_nilp: float) -> list:
    return [
        {
            "eigenvalue": complex_json(g.eigenvalue),
            "multiplicity": g.multiplicity,
            "nilpotency_index": g.nilpotency_index,
            "max_power_residual": g.max_power_residual,
            "residual_within_tol": g.max_power_residual <= tol_nilp,
            "basis": [_poly_json(p) for p in g.polynomials],
        }
        for g in dec.groups
    ]


def _orthogonality_json(report) -> dict:
    return {
        "tol_orth": report.tol_orth,
        "all_orthogonal": report.all_orthogonal,
        "pairs": [
            {
                "eigenvalue_i": complex_json(report.eigenvalues[p.i]),
                "eigenvalue_j": complex_json(report.eigenvalues[p.j]),
                "max_normalized": p.max_normalized,
                "orthogonal": p.orthogonal,
                "gram_block": matrix_json(p.block),
            }
            for p in report.pairs
        ],
    }


def _q_infinity_json(model: OUModel):
    cov = solve_lyapunov(model)
    return matrix_json(cov.sigma_exact if cov.is_exact else cov.sigma)


def _cmd_analyze(args, config: RunConfig) -> dict:
    model = _load_model(args, config)
    report = _base_report(config, model)
    report["q_infinity"] = _q_infinity_json(model)
    report["drift_eigenvalues"] = [complex_json(z) for z in drift_eigenvalues(model.B)]
    sp = spectrum(model, config.degree, config.tol_eig)
    report["spectrum"] = _spectrum_json(sp)
    dec = generalized_eigenspaces(model, config.degree, config.tol_eig)
    report["groups"] = _groups_json(dec, config.tol_nilp)
    orth = orthogonality_report(dec, tol_orth=config.tol_orth)
    report["orthogonality"] = _orthogonality_json(orth)
    return report


def _cmd_spectrum(args, config: RunConfig) -> dict:
    model = _load_model(args, config)
    report = _base_report(config, model)
    report["drift_eigenvalues"] = [complex_json(z) for z in drift_eigenvalues(model.B)]
    report["spectrum"] = _spectrum_json(spectrum(model, config.degree, config.tol_eig))
    return report


def _cmd_gram(args, config: RunConfig) -> dict:
    model = _load_model(args, config)
    report = _base_report(config, model)
    cov = solve_lyapunov(model)
    sigma = cov.sigma_exact if cov.is_exact else cov.sigma
    basis = monomial_basis(model.dim, config.degree)
    one = Fraction(1) if model.is_exact else 1.0
    polys = [SparsePolynomial.monomial(model.dim, a, one) for a in basis.indices]
    g = gram_matrix(polys, sigma, normalized=args.normalized)
    report["q_infinity"] = _q_infinity_json(model)
    report["gram"] = {
        "basis": [list(a) for a in basis.indices],
        "normalized": bool(args.normalized),
        "entries": matrix_json(g),
    }
    return report


def _cmd_normalize(args, config: RunConfig) -> dict:
    model = _load_model(args, config)
    change, normalized = normalize_model(model)
    report = _base_report(config, model)
    cov = solve_lyapunov(normalized)
    report["normalization"] = {
        "H": matrix_json(change.H),
        "H_inv": matrix_json(change.H_inv),
        "kind": change.kind,
        "Q_transformed": matrix_json(normalized.Q),
        "B_transformed": matrix_json(normalized.B),
        "q_infinity_transformed": matrix_json(cov.sigma),
    }
    return report


def _cmd_simulate(args, config: RunConfig) -> tuple[dict, Ensemble]:
    model = _load_model(args, config)
    sim = SimConfig(
        model=model,
        step=config.step,
        paths=config.paths,
        seed=config.seed,
        burn_in=args.burn_in,
    )
    ensemble = stationary_ensemble(sim)
    q_inf = solve_lyapunov(model).sigma
    emp = np.cov(ensemble.samples, rowvar=False, bias=False).reshape(model.dim, model.dim)
    report = _base_report(config, model)
    report["simulation"] = {
        "paths": sim.paths,
        "step": sim.step,
        "seed": sim.seed,
        "burn_in": sim.resolved_burn_in(),
        "workers": worker_count(),
        "config_sha256": ensemble.provenance,
        "empirical_mean": [float(x) for x in ensemble.samples.mean(axis=0)],
        "empirical_covariance": matrix_json(emp),
        "q_infinity": matrix_json(q_inf),
        "max_relative_covariance_error": float(
            np.abs(emp - q_inf).max() / np.abs(q_inf).max()
        ),
    }
    if args.out:
        sidecar = save_ensemble(ensemble, args.out)
        report["simulation"]["written"] = {"data": args.out, "sidecar": args.out + ".json"}
        report["simulation"]["sidecar"] = sidecar
    return report, ensemble


def _cmd_paper_example(args, config: RunConfig) -> dict:
    if args.example == "section4":
        return _example_section4(config)
    params = Section5Params(Fraction(args.a), Fraction(args.d), Fraction(args.c))
    return _example_section5(config, params)


def _example_section4(config: RunConfig) -> dict:
    model = section4_model()
    report = _base_report(config, model)
    report["q_infinity"] = _q_infinity_json(model)
    report["drift_eigenvalues"] = [complex_json(z) for z in drift_eigenvalues(model.B)]
    split = rotation_split(model)
    per_degree = []
    for n in range(config.degree + 1):
        ln = hermite_rotation_matrix(split, n).as_array()
        a_matrix = operator_matrix(
            model, n, "hermite-normal-form", operator="A", homogeneous=True
        ).as_array()
        expected = -2.0 * n * np.eye(n + 1) + ln
        per_degree.append(
            {
                "degree": n,
                "rotation_matrix": matrix_json(ln),
                "doubled_operator_matrix": matrix_json(a_matrix),
                "max_deviation_from_split": float(np.abs(a_matrix - expected).max()),
                "normality_defect": check_normal(a_matrix).defect,
            }
        )
    dec = generalized_eigenspaces(model, config.degree, config.tol_eig)
    orth = orthogonality_report(dec, tol_orth=config.tol_orth)
    report["example"] = {
        "name": "section4",
        "rotation_split": {
            "D_lambda": matrix_json(split.D_lambda),
            "C": matrix_json(split.C),
        },
        "hermite_spaces": per_degree,
        "nilpotency_indices": [g.nilpotency_index for g in dec.groups],
        "orthogonality": _orthogonality_json(orth),
    }
    return report


def _example_section5(config: RunConfig, params: Section5Params) -> dict:
    model = section5_model(params)
    report = _base_report(config, model)
    cov = solve_lyapunov(model)
    report["q_infinity"] = _q_infinity_json(model)
    report["drift_eigenvalues"] = [complex_json(z) for z in drift_eigenvalues(model.B)]
    sigma = cov.sigma_exact
    eigenfunctions = section5_eigenfunctions(params)
    names = ["v1", "v2", "v3", "v4"][: len(eigenfunctions)]
    funcs = []
    for name, (v, mu) in zip(names, eigenfunctions):
        residual = apply_L(model, v) - v * mu
        funcs.append(
            {
                "name": name,
                "polynomial": _poly_json(v),
                "eigenvalue": scalar_json(mu),
                "generator_residual_zero": residual.is_zero,
            }
        )
    pairings = {}
    one = SparsePolynomial.constant(2, Fraction(1))
    for i in range(len(eigenfunctions)):
        pairings[f"<1,{names[i]}>"] = scalar_json(
            inner_product(one, eigenfunctions[i][0], sigma)
        )
        for j in range(i + 1, len(eigenfunctions)):
            val = inner_product(eigenfunctions[i][0], eigenfunctions[j][0], sigma)
            pairings[f"<{names[i]},{names[j]}>"] = scalar_json(val)
    a = params.a
    whitening = section5_whitening(params)
    pushforward = whitening.H @ cov.sigma @ whitening.H.T
    report["example"] = {
        "name": "section5",
        "params": {"a": scalar_json(params.a), "d": scalar_json(params.d), "c": scalar_json(params.c)},
        "resonant": params.resonant,
        "eigenfunctions": funcs,
        "pairings": pairings,
        "v1_v3_closed_form": scalar_json(1 / (2 * a * a)),
        "whitening": {
            "H": matrix_json(whitening.H),
            "covariance_after": matrix_json(pushforward),
        },
    }
    return report


# -- emission ------------------------------------------------------------------


def _human_lines(value, indent: int = 0, key: str | None = None, out=None):
    pad = "  " * indent
    label = f"{key}: " if key is not None else ""
    if isinstance(value, dict):
        if key is not None:
            out.append(f"{pad}{key}:")
        for k, v in value.items():
            _human_lines(v, indent + (key is not None), k, out)
    elif isinstance(value, list):
        if value and all(isinstance(x, list) for x in value):
            out.append(f"{pad}{label}")
            for row in value:
                out.append(f"{pad}  [" + ", ".join(str(x) for x in row) + "]")
        elif value and all(isinstance(x, dict) for x in value):
            out.append(f"{pad}{label}")
            for i, x in enumerate(value):
                out.append(f"{pad}  - [{i}]")
                _human_lines(x, indent + 2, None, out)
        else:
            out.append(f"{pad}{label}[" + ", ".join(str(x) for x in value) + "]")
    else:
        out.append(f"{pad}{label}{value}")


def render_human(report: dict) -> str:
    lines: list[str] = []
    _human_lines(report, 0, None, lines)
    return "\n".join(lines)


def render_csv(report: dict) -> str:
    gram = report.get("gram")
    if gram is not None:
        buf = io.StringIO()
        for row in gram["entries"]:
            buf.write(",".join(_csv_cell(x) for x in row) + "\n")
        return buf.getvalue()
    raise UsageError("csv output is only available for the gram subcommand")


def _csv_cell(x) -> str:
    if isinstance(x, dict):
        return f"{x['re']}+{x['im']}j"
    return str(x)


def emit(report: dict, fmt: str, stream) -> None:
    if fmt == "json":
        json.dump(report, stream, indent=2, sort_keys=False)
        stream.write("\n")
    elif fmt == "human":
        stream.write(render_human(report) + "\n")
    elif fmt == "csv":
        stream.write(render_csv(report))
    else:
        raise UsageError(f"unknown format {fmt!r}")


# -- entry point -----------------------------------------------------------------


def run(argv, stream=None, err_stream=None) -> int:
    """Parse argv, dispatch, and emit; returns the exit code."""
    stream = sys.stdout if stream is None else stream
    err_stream = sys.stderr if err_stream is None else err_stream
    try:
        args = build_parser().parse_args(argv)
        if args.subcommand is None:
            raise UsageError("a subcommand is required: " + ", ".join(SUBCOMMANDS))
        config = RunConfig(
            subcommand=args.subcommand,
            degree=args.degree,
            tol_eig=args.tol_eig,
            tol_orth=args.tol_orth,
            tol_nilp=args.tol_nilp,
            backend=args.backend,
            fmt=args.format,
            seed=getattr(args, "seed", 0),
            paths=getattr(args, "paths", 100_000),
            step=getattr(args, "step", 0.5),
        )
        if args.subcommand == "analyze":
            report = _cmd_analyze(args, config)
        elif args.subcommand == "spectrum":
            report = _cmd_spectrum(args, config)
        elif args.subcommand == "gram":
            report = _cmd_gram(args, config)
        elif args.subcommand == "normalize":
            report = _cmd_normalize(args, config)
        elif args.subcommand == "simulate":
            report, ensemble = _cmd_simulate(args, config)
            if config.fmt == "csv":
                if args.out:
                    ensemble_to_csv(ensemble, args.out + ".csv")
                    report["simulation"]["written"]["csv"] = args.out + ".csv"
                    emit(report, "json", stream)
                else:
                    raise UsageError("csv simulate output needs --out")
                return EXIT_OK
        else:
            report = _cmd_paper_example(args, config)
        emit(report, config.fmt, stream)
    except UsageError as e:
        err_stream.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except RankDecisionAmbiguous as e:
        err_stream.write(f"numerical ambiguity: {e}\n")
        return EXIT_AMBIGUOUS
    except ValidationError as e:
        err_stream.write(f"validation error: {e}\n")
        return EXIT_VALIDATION
    except OUSpectraError as e:
        err_stream.write(f"error: {e}\n")
        return EXIT_VALIDATION
    return EXIT_OK


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
