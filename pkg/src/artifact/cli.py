"""Command line for kernels, current coefficients and the coupling constant.

Subcommands: ``grid`` (kernel modulus on a t-r mesh), ``coeffs`` (current
coefficient table), ``alpha`` (coupling constant), ``scan`` (eps scan) and
``verify`` (all oracle suites). Configuration comes from a ``key=value`` file
with ``#`` comments; command-line flags override it.
"""

import argparse
import io
import logging
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from .besselt import Params, RegularizedXi, momentum_oracle_matrix, t_family_tr
from .chain import (closed_chain, chain_components, continuum_spectral,
                    eigenvalues_closed_form, fermionic_projector)
from .clifford import CHI_L, CHI_R, IDENTITY
from .coeffs import (COEFFICIENT_NAMES, CoefficientError, QuadratureSpec,
                     coefficient_table, coupling_alpha, epsilon_scan)
from .currents import (FAULTS, SpinorValue, dirac_structure_functions,
                       extract_structure_functions, frozen_ratio,
                       maxwell_structure_functions, verify_cancellation)
from .lightcone import Polynomial, kg_residual, ladder_residuals

__all__ = ["RunConfig", "ConfigError", "parse_config", "main", "cmd_grid",
           "cmd_coeffs", "cmd_alpha", "cmd_scan", "cmd_verify",
           "EXIT_OK", "EXIT_CONFIG", "EXIT_QUADRATURE", "EXIT_VERIFY", "EXIT_IO"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_QUADRATURE = 3
EXIT_VERIFY = 4
EXIT_IO = 5

log = logging.getLogger("artifact")


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs.

    Grid ranges are in units of eps.
    """

    params: Params = field(default_factory=Params)
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    grid_n: int = 50
    t_range: tuple = (-3.0, 3.0)
    r_range: tuple = (-3.0, 3.0)
    output_path: str = None
    coefficients: tuple = COEFFICIENT_NAMES
    eps_list: tuple = (0.01, 0.03, 0.1)
    fault: str = None
    verbose: bool = False


_FLOAT_KEYS = {"mass", "eps", "c", "tol", "L", "t_min", "t_max", "r_min", "r_max"}
_INT_KEYS = {"grid_n", "max_subdivisions"}
_KEYS = _FLOAT_KEYS | _INT_KEYS | {"out", "coefficients", "eps_list",
                                   "fault_inject", "verbose"}


def _parse_value(key, raw):
    try:
        if key in _FLOAT_KEYS:
            val = float(raw)
            if not math.isfinite(val):
                raise ValueError
            return val
        if key in _INT_KEYS:
            return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    if key == "coefficients":
        return tuple(n.strip() for n in raw.split(",") if n.strip())
    if key == "eps_list":
        try:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"eps_list: cannot parse {raw!r}") from None
    if key == "verbose":
        if raw.lower() not in ("0", "1", "true", "false", "yes", "no"):
            raise ConfigError(f"verbose: cannot parse {raw!r}")
        return raw.lower() in ("1", "true", "yes")
    return raw


def parse_config(text):
    """Parse ``key=value`` lines into a dict; unknown keys are rejected."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, raw)
    return out


def build_config(values):
    """Turn parsed values into a validated RunConfig."""
    base = RunConfig()
    try:
        params = Params(m=values.get("mass", base.params.m),
                        eps=values.get("eps", base.params.eps),
                        c=values.get("c", base.params.c))
        quad = QuadratureSpec(L=values.get("L", base.quad.L),
                              rel_tol=values.get("tol", base.quad.rel_tol),
                              max_subdivisions=values.get(
                                  "max_subdivisions", base.quad.max_subdivisions))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    n = values.get("grid_n", base.grid_n)
    if n < 1:
        raise ConfigError("grid_n must be >= 1")
    t_range = (values.get("t_min", base.t_range[0]), values.get("t_max", base.t_range[1]))
    r_range = (values.get("r_min", base.r_range[0]), values.get("r_max", base.r_range[1]))
    if t_range[0] > t_range[1] or r_range[0] > r_range[1]:
        raise ConfigError("grid ranges must satisfy min <= max")
    coeffs = values.get("coefficients", base.coefficients)
    unknown = [c for c in coeffs if c not in COEFFICIENT_NAMES]
    if unknown:
        raise ConfigError(f"unknown coefficients {unknown}")
    eps_list = values.get("eps_list", base.eps_list)
    if not eps_list or any(not e > 0 for e in eps_list):
        raise ConfigError("eps_list must hold positive values")
    fault = values.get("fault_inject")
    if fault is not None and fault not in FAULTS:
        raise ConfigError(f"unknown fault {fault!r}; known: {FAULTS}")
    return RunConfig(params, quad, n, t_range, r_range, values.get("out"),
                     coeffs, eps_list, fault, values.get("verbose", False))


def _fmt(x):
    # shortest string that round-trips exactly
    return repr(float(x))


# ---------------------------------------------------------------------------
# commands; each returns (text, exit status)


def _axis(lo, hi, n):
    return np.array([0.5 * (lo + hi)]) if n == 1 else np.linspace(lo, hi, n)


def cmd_grid(config):
    """|T^(-1)(t, r)|^2 on an n x n mesh, gnuplot block format."""
    p = config.params
    ts = _axis(*config.t_range, config.grid_n) * p.eps
    rs = _axis(*config.r_range, config.grid_n) * p.eps
    tt, rr = np.meshgrid(ts, rs, indexing="ij")
    vals = np.abs(t_family_tr(-1, tt, np.abs(rr), p)) ** 2
    out = io.StringIO()
    out.write(f"# |T^(-1)(t,r)|^2  m={_fmt(p.m)} eps={_fmt(p.eps)}\n")
    out.write("# columns: t r value\n")
    for i in range(len(ts)):
        if i:
            out.write("\n")
        for j in range(len(rs)):
            out.write(f"{_fmt(tt[i, j])} {_fmt(rr[i, j])} {_fmt(vals[i, j])}\n")
    return out.getvalue(), EXIT_OK


def _metadata(config):
    p, q = config.params, config.quad
    return (f"# m={_fmt(p.m)}\n# eps={_fmt(p.eps)}\n# c={_fmt(p.c)}\n"
            f"# rel_tol={_fmt(q.rel_tol)}\n# L={_fmt(q.L)}\n"
            f"# max_subdivisions={q.max_subdivisions}\n")


def cmd_coeffs(config):
    """CSV of the selected Dirac coefficients plus the derived alpha row."""
    out = io.StringIO()
    out.write(_metadata(config))
    out.write("name,value,error_estimate\n")
    if not config.coefficients:
        return out.getvalue(), EXIT_OK
    dirac = coefficient_table(config.params, config.quad, "dirac")
    maxwell = coefficient_table(config.params, config.quad, "maxwell")
    for name in config.coefficients:
        out.write(f"{name},{_fmt(dirac.value(name))},{_fmt(dirac.error(name))}\n")
    a = coupling_alpha(config.params, config.quad, dirac, maxwell)
    out.write(f"alpha,{_fmt(a.alpha)},{_fmt(abs(a.alpha) * a.determined_spread)}\n")
    return out.getvalue(), EXIT_OK


def cmd_alpha(config):
    """Coupling constant, ratio spreads and the per-coefficient ratios."""
    a = coupling_alpha(config.params, config.quad)
    out = io.StringIO()
    out.write(_metadata(config))
    out.write("quantity,value\n")
    out.write(f"alpha,{_fmt(a.alpha)}\n")
    out.write(f"alpha_closed_form,{_fmt(1.0 / frozen_ratio(config.params.c))}\n")
    out.write(f"ratio_spread,{_fmt(a.ratio_spread)}\n")
    out.write(f"determined_spread,{_fmt(a.determined_spread)}\n")
    out.write(f"reference,{a.reference}\n")
    for name, r in a.ratios.items():
        out.write(f"ratio_{name},{_fmt(r)}\n")
    out.write(f"vanishing,{';'.join(a.vanishing)}\n")
    return out.getvalue(), EXIT_OK


SCAN_COLUMNS = (("eps",) + COEFFICIENT_NAMES
                + tuple(n + "_err" for n in COEFFICIENT_NAMES)
                + ("alpha", "ratio_spread", "determined_spread", "peak"))


def cmd_scan(config):
    """One CSV row per eps: coefficients, errors, alpha, spreads, peak |T|^2."""
    rows = epsilon_scan(config.eps_list, config.params, config.quad)
    out = io.StringIO()
    out.write(_metadata(config).replace(f"# eps={_fmt(config.params.eps)}\n", ""))
    out.write("# peak = |T^(-1)(0,0)|^2\n")
    out.write(",".join(SCAN_COLUMNS) + "\n")
    for row in rows:
        out.write(",".join(_fmt(row[c]) for c in SCAN_COLUMNS) + "\n")
    return out.getvalue(), EXIT_OK


# ---------------------------------------------------------------------------
# verification suites; each returns a list of (check, residual, tolerance)


def _rng():
    return np.random.default_rng(20240611)


def _direction(rng):
    n = rng.normal(size=3)
    return n / np.linalg.norm(n)


def _suite_kernel(config):
    p = Params(m=config.params.m, eps=0.1 / config.params.m)
    rng = _rng()
    worst = 0.0
    for _ in range(5):
        xi = RegularizedXi.from_tr(rng.uniform(-5, 5) * p.eps, rng.uniform(0, 5) * p.eps,
                                   p.eps, _direction(rng))
        ref = momentum_oracle_matrix(xi, p, tol=1e-8)
        got = fermionic_projector(xi, p)
        worst = max(worst, np.abs(ref - got).max() / np.abs(ref).max())
    return [("momentum oracle vs closed-form P", worst, 1e-6)]


def _suite_spectral(config):
    p = config.params
    rng = _rng()
    worst = 0.0
    for _ in range(200):
        xi = RegularizedXi.from_tr(rng.uniform(-10, 10) * p.eps,
                                   rng.uniform(0.01, 10) * p.eps, p.eps, _direction(rng))
        A = closed_chain(xi, p)
        lp, lm = eigenvalues_closed_form(chain_components(A))
        w = list(np.linalg.eigvals(A))
        scale = max(abs(lp), abs(lm))
        for lam in (lp, lp, lm, lm):
            j = int(np.argmin([abs(v - lam) for v in w]))
            worst = max(worst, abs(w.pop(j) - lam) / scale)
    return [("closed-form eigenvalues vs eigensolver", worst, 1e-10)]


def _suite_projectors(config):
    p = config.params
    rng = _rng()
    worst = {"idempotent": 0.0, "complete": 0.0, "orthogonal": 0.0,
             "chiral": 0.0, "trace": 0.0}
    for _ in range(50):
        xi = RegularizedXi.from_tr(rng.uniform(-5, 5) * p.eps, rng.uniform(0.1, 5) * p.eps,
                                   p.eps, _direction(rng))
        proj = continuum_spectral(xi, p).projectors
        mats = list(proj.values())
        worst["complete"] = max(worst["complete"], np.abs(sum(mats) - IDENTITY).max())
        for i, a in enumerate(mats):
            worst["idempotent"] = max(worst["idempotent"], np.abs(a @ a - a).max())
            worst["trace"] = max(worst["trace"], abs(np.trace(a) - 1))
            for chi in (CHI_L, CHI_R):
                worst["chiral"] = max(worst["chiral"], np.abs(chi @ a - a @ chi).max())
            for b in mats[i + 1:]:
                worst["orthogonal"] = max(worst["orthogonal"], np.abs(a @ b).max())
    return [(f"continuum projectors {k}", v, 1e-10) for k, v in worst.items()]


def _slope(hs, res):
    return float(np.polyfit(np.log(hs), np.log(res), 1)[0])


def _suite_lightcone(config):
    p = config.params
    rng = _rng()
    xi = RegularizedXi.from_tr(0.5 * p.eps, 6 * p.eps, p.eps, _direction(rng))
    a = Polynomial.random(2, rng)
    x = rng.normal(size=4) * p.eps
    hs = p.eps / np.array([25.0, 50.0, 100.0])
    kg = [kg_residual(a, x, xi, p, h) for h in hs]
    kg = [r / s for r, s in kg]
    lad = [ladder_residuals(0, xi, p, h) for h in hs]
    return [
        ("Klein-Gordon residual at h=eps/50", kg[1], 1e-5),
        ("Klein-Gordon residual slope - 2", abs(_slope(hs, kg) - 2), 0.1),
        ("ladder property 1 slope - 2", abs(_slope(hs, [r[0] for r in lad]) - 2), 0.1),
        ("ladder property 2 slope - 2", abs(_slope(hs, [r[1] for r in lad]) - 2), 0.1),
    ]


def _suite_structure(config):
    p = config.params
    ts = np.linspace(-3, 3, 50) * p.eps
    rs = np.linspace(0.05, 3, 50) * p.eps
    tt, rr = np.meshgrid(ts, rs, indexing="ij")
    fs, fa = dirac_structure_functions(tt, rr, p, fault=config.fault)
    fs_f, fa_f = dirac_structure_functions(-tt, rr, p, fault=config.fault)
    scale = max(np.abs(fs).max(), np.abs(fa).max())
    parity = max(np.abs(fs - fs_f).max(), np.abs(fa + fa_f).max()) / scale
    ms, ma = maxwell_structure_functions(tt, rr, p, fault=config.fault)
    ms_f, ma_f = maxwell_structure_functions(-tt, rr, p, fault=config.fault)
    mscale = max(np.abs(ms).max(), np.abs(ma).max())
    mparity = max(np.abs(ms - ms_f).max(), np.abs(ma + ma_f).max()) / mscale
    kappa = frozen_ratio(p.c)
    prop = max(np.abs(ms - kappa * fs).max(), np.abs(ma - kappa * fa).max()) / (abs(kappa) * scale)
    rng = _rng()
    ext = 0.0
    for _ in range(20):
        t, r = rng.uniform(-3, 3) * p.eps, rng.uniform(0.1, 3) * p.eps
        sample, inconsistency = extract_structure_functions(t, r, p, _direction(rng))
        ref = dirac_structure_functions(t, r, p)
        s = max(abs(ref.f_s), abs(ref.f_a))
        ext = max(ext, inconsistency, abs(sample.f_s - ref.f_s) / s,
                  abs(sample.f_a - ref.f_a) / s)
    return [("Dirac structure-function parity", parity, 1e-12),
            ("Maxwell structure-function parity", mparity, 1e-12),
            ("frozen Maxwell/Dirac proportionality", prop, 1e-12),
            ("trace-kernel extraction", ext, 1e-8)]


def _within(table, name):
    # |value| in units of its error estimate; an exact zero counts as 0
    v, e = abs(table.value(name)), table.error(name)
    if v == 0.0:
        return 0.0
    return v / e if e > 0 else np.inf


def _suite_coefficients(config):
    p, q = config.params, config.quad
    dirac = coefficient_table(p, q, "dirac", fault=config.fault)
    maxwell = coefficient_table(p, q, "maxwell")
    a = coupling_alpha(p, q, dirac, maxwell)
    v, e, scale = dirac.parity
    checks = [
        ("odd-in-t coefficient integrand", abs(v) / scale, q.rel_tol),
        ("determined coefficient ratio spread", a.determined_spread, 1e-8),
        ("alpha vs closed form", abs(a.alpha * frozen_ratio(p.c) - 1), 1e-6),
    ]
    for name in a.vanishing:
        # a ratio coefficient that vanishes must vanish for both families
        both = max(_within(dirac, name), _within(maxwell, name))
        checks.append((f"{name} vanishes within error (both families)", both, 1.0))
    phi = SpinorValue(np.array([1.0, 0.3 + 0.2j, -0.5j, 0.7]))
    for sectors in (1, 2):
        rep = verify_cancellation(phi, p, a.alpha, dirac, maxwell, sectors=sectors)
        checks.append((f"moment cancellation, {sectors} sector(s)", rep.max_relative, 1e-6))
    return checks


SUITES = (
    ("kernel", _suite_kernel),
    ("spectral", _suite_spectral),
    ("projectors", _suite_projectors),
    ("lightcone", _suite_lightcone),
    ("parity", _suite_structure),
    ("coefficients", _suite_coefficients),
)


def cmd_verify(config):
    """Run every suite; PASS/FAIL lines, then a CSV summary."""
    human = io.StringIO()
    rows = []
    for suite, fn in SUITES:
        start = time.perf_counter()
        checks = fn(config)
        elapsed = time.perf_counter() - start
        log.info("suite %s took %.2f s", suite, elapsed)
        for check, residual, tol in checks:
            ok = bool(residual <= tol)
            rows.append((suite, check, residual, tol, ok))
            line = f"{'PASS' if ok else 'FAIL'} [{suite}] {check}"
            if config.verbose:
                line += f": residual {residual:.3e} (tolerance {tol:.1e})"
            human.write(line + "\n")
    failed = sum(not r[4] for r in rows)
    human.write(f"{len(rows) - failed} passed, {failed} failed\n")
    csv = io.StringIO()
    csv.write("suite,check,residual,tolerance,status\n")
    for suite, check, residual, tol, ok in rows:
        csv.write(f"{suite},{check},{_fmt(residual)},{_fmt(tol)},{'PASS' if ok else 'FAIL'}\n")
    return human.getvalue(), csv.getvalue(), (EXIT_OK if failed == 0 else EXIT_VERIFY)


COMMANDS = {"grid": cmd_grid, "coeffs": cmd_coeffs, "alpha": cmd_alpha,
            "scan": cmd_scan, "verify": cmd_verify}


def _parser():
    ap = argparse.ArgumentParser(prog="artifact", description=__doc__.split("\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="key=value configuration file")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--eps", type=float, help="regularization length")
    ap.add_argument("--mass", type=float, help="fermion mass")
    ap.add_argument("--c", type=float, help="constant replacing T^(1)")
    ap.add_argument("--tol", type=float, help="quadrature relative tolerance")
    ap.add_argument("--grid-n", type=int, help="grid points per axis")
    ap.add_argument("--fault-inject", choices=FAULTS, help="test hook")
    ap.add_argument("--verbose", action="store_true", help="print residuals")
    return ap


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def main(argv=None):
    """Entry point; returns the exit status."""
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        values = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    values = parse_config(fh.read())
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        overrides = {"eps": args.eps, "mass": args.mass, "c": args.c, "tol": args.tol,
                     "grid_n": args.grid_n, "out": args.out,
                     "fault_inject": args.fault_inject}
        values.update({k: v for k, v in overrides.items() if v is not None})
        if args.verbose:
            values["verbose"] = True
        config = build_config(values)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "verify":
            text, csv, status = cmd_verify(config)
            sys.stdout.write(text)
            if config.output_path:
                _write(config.output_path, csv)
            else:
                sys.stdout.write("\n" + csv)
            return status
        text, status = COMMANDS[args.command](config)
    except CoefficientError as exc:
        print(f"quadrature failure: {exc}", file=sys.stderr)
        return EXIT_QUADRATURE
    try:
        if config.output_path:
            _write(config.output_path, text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return status


if __name__ == "__main__":
    sys.exit(main())
