"""Command-line front end.

``lindstedt <verb> --config run.json [--out DIR] [--threads N] [--precision-bits B]``

Verbs: ``expand-max``, ``expand-lower``, ``residual``, ``gevrey-fit``,
``check-bounds``, ``profile-frequency``.  The configuration is a JSON
object with ``schema_version`` 1; real numbers may be given as decimal
strings so that high-precision runs see every digit.  Exit codes: 0 ok,
2 configuration error, 3 resonance, 4 degeneracy, 5 norm overflow.
"""

import argparse
import csv
from dataclasses import dataclass, field
import io
import json
import math
from pathlib import Path
import sys
import warnings

import mpmath

from . import numerics as nx
from .cohomology import Frequency, diophantine_profile
from .diagnostics import (bisect_scaling, degree_audit, gevrey_fit, inductive_constants,
                          residual_order_fit, scale_series)
from .errors import ConfigError, DegeneracyError, NormOverflow, ResonanceError
from .fourier import NormParams, Potential
from .lower import LowerTopology, expand_lower, find_beta0, residual_lower
from .maximal import MaximalModel, expand, residual

__all__ = ["RunConfig", "parse_config", "validate_config", "run", "main",
           "write_dump", "read_dump", "Dump"]

SCHEMA_VERSION = 1
PROBLEMS = ("maximal", "lower-conservative", "lower-dissipative")
VERBS = ("expand-max", "expand-lower", "residual", "gevrey-fit", "check-bounds",
         "profile-frequency")
EXIT_OK, EXIT_CONFIG, EXIT_RESONANCE, EXIT_DEGENERATE, EXIT_OVERFLOW = 0, 2, 3, 4, 5


@dataclass
class RunConfig:
    """Validated run description; reals are kept as decimal strings."""

    problem: str
    dimension: int
    potential: list
    frequency: dict
    gamma: str
    order: int
    topology: dict = None
    beta0_index: int = 0
    rho: str = "0"
    r: str = "0"
    precision_bits: int = 53
    eps: list = field(default_factory=lambda: ["1e-2", "3e-3", "1e-3", "3e-4"])
    residual_orders: list = field(default_factory=list)
    fit_window: tuple = None
    profile_max: int = 200
    output: str = "out"

    @property
    def is_lower(self):
        return self.problem != "maximal"

    def norm_params(self):
        return NormParams(float(self.rho), float(self.r))


# -- parsing ----------------------------------------------------------------

def _decimal(value, where, errors, positive=False):
    """Decimal string for a JSON number or numeric string, or ``None`` with an error."""
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        errors.append(f"{where}: expected a number or decimal string")
        return None
    text = value if isinstance(value, str) else repr(value)
    try:
        x = mpmath.mpf(text)
    except (ValueError, TypeError):
        errors.append(f"{where}: {value!r} is not a decimal number")
        return None
    if not mpmath.isfinite(x):
        errors.append(f"{where}: must be finite")
        return None
    if positive and x <= 0:
        errors.append(f"{where}: must be positive")
        return None
    return text


def _integer(value, where, errors, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        errors.append(f"{where}: expected an integer")
        return None
    if minimum is not None and value < minimum:
        errors.append(f"{where}: must be at least {minimum}")
        return None
    return value


def _int_vector(value, length, where, errors):
    if not isinstance(value, list) or len(value) != length or not all(
            isinstance(x, int) and not isinstance(x, bool) for x in value):
        errors.append(f"{where}: expected a list of {length} integers")
        return None
    return [int(x) for x in value]


def validate_config(raw):
    """Turn a parsed JSON object into a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        Listing every violation found.
    ExactResonance
        For a frequency given as a rational multiple of ``2 pi``.
    """
    errors = []
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a JSON object"])
    known = {"schema_version", "problem", "dimension", "potential", "frequency", "gamma",
             "order", "topology", "beta0_index", "norm", "precision_bits", "eps",
             "residual_orders", "fit_window", "profile_max", "output"}
    for key in sorted(set(raw) - known):
        errors.append(f"{key}: unknown field")
    if raw.get("schema_version") != SCHEMA_VERSION:
        errors.append(f"schema_version: must be {SCHEMA_VERSION}")
    problem = raw.get("problem")
    if problem not in PROBLEMS:
        errors.append(f"problem: must be one of {', '.join(PROBLEMS)}")
    D = _integer(raw.get("dimension"), "dimension", errors, minimum=1)
    if problem in PROBLEMS[1:] and D is not None and D != 2:
        errors.append("dimension: lower tori are implemented for D = 2 only")

    potential = []
    terms = raw.get("potential")
    if not isinstance(terms, list) or not terms:
        errors.append("potential: expected a non-empty list of {mode, cos, sin}")
        terms = []
    for i, term in enumerate(terms):
        where = f"potential[{i}]"
        if not isinstance(term, dict):
            errors.append(f"{where}: expected an object")
            continue
        for key in sorted(set(term) - {"mode", "cos", "sin"}):
            errors.append(f"{where}.{key}: unknown field")
        mode = _int_vector(term.get("mode"), D if D else 0, f"{where}.mode", errors)
        a = _decimal(term.get("cos", "0"), f"{where}.cos", errors)
        b = _decimal(term.get("sin", "0"), f"{where}.sin", errors)
        if mode is not None and a is not None and b is not None:
            potential.append((mode, a, b))

    freq = raw.get("frequency")
    L_expected = 1 if problem in PROBLEMS[1:] else D
    if not isinstance(freq, dict) or "kind" not in freq:
        errors.append("frequency: expected an object with a 'kind'")
        freq = {}
    kind = freq.get("kind")
    if kind == "rational":
        Frequency.rational(freq.get("value"))
    elif kind == "golden":
        if L_expected not in (None, 1):
            errors.append("frequency: golden mean is one-dimensional")
    elif kind == "explicit":
        values = freq.get("values")
        if not isinstance(values, list) or (L_expected and len(values) != L_expected):
            errors.append(f"frequency.values: expected {L_expected} numbers (radians)")
        else:
            freq = {"kind": "explicit",
                    "values": [_decimal(v, f"frequency.values[{i}]", errors)
                               for i, v in enumerate(values)]}
    elif kind == "continued-fraction":
        q = freq.get("quotients")
        if not isinstance(q, list) or not all(isinstance(x, int) and x >= 1 for x in q):
            errors.append("frequency.quotients: expected a list of positive integers")
        if L_expected not in (None, 1):
            errors.append("frequency: continued fractions are one-dimensional")
    else:
        errors.append("frequency.kind: must be golden, explicit, continued-fraction or rational")

    gamma = _decimal(raw.get("gamma"), "gamma", errors)
    if gamma is not None:
        g = mpmath.mpf(gamma)
        if problem == "lower-conservative" and g != 0:
            errors.append("gamma: must be 0 for lower-conservative")
        if problem == "lower-dissipative" and g == 0:
            errors.append("gamma: must be nonzero for lower-dissipative")
    order = _integer(raw.get("order"), "order", errors, minimum=1)

    topology = None
    if problem in PROBLEMS[1:]:
        topo = raw.get("topology")
        if not isinstance(topo, dict):
            errors.append("topology: required for lower problems")
        else:
            k = _int_vector(topo.get("k"), 2, "topology.k", errors)
            kp = topo.get("k_perp")
            if kp is not None:
                kp = _int_vector(kp, 2, "topology.k_perp", errors)
            if k is not None:
                try:
                    LowerTopology(tuple(k), None if kp is None else tuple(kp))
                    topology = {"k": k, "k_perp": kp}
                except ValueError as exc:
                    errors.append(f"topology: {exc}")
    beta0_index = _integer(raw.get("beta0_index", 0), "beta0_index", errors, minimum=0)

    norm = raw.get("norm", {})
    if not isinstance(norm, dict):
        errors.append("norm: expected an object with rho and r")
        norm = {}
    rho = _decimal(norm.get("rho", "0"), "norm.rho", errors)
    r = _decimal(norm.get("r", "0"), "norm.r", errors)
    for name, v in (("rho", rho), ("r", r)):
        if v is not None and mpmath.mpf(v) < 0:
            errors.append(f"norm.{name}: must be non-negative")
    bits = _integer(raw.get("precision_bits", 53), "precision_bits", errors, minimum=53)

    eps = raw.get("eps", ["1e-2", "3e-3", "1e-3", "3e-4"])
    if not isinstance(eps, list) or not eps:
        errors.append("eps: expected a non-empty list")
        eps = []
    eps = [_decimal(e, f"eps[{i}]", errors, positive=True) for i, e in enumerate(eps)]
    if None not in eps and any(mpmath.mpf(a) <= mpmath.mpf(b) for a, b in zip(eps, eps[1:])):
        errors.append("eps: must be strictly decreasing")
    res_orders = raw.get("residual_orders", [])
    if not isinstance(res_orders, list) or not all(
            isinstance(n, int) and not isinstance(n, bool) and n >= 0 for n in res_orders):
        errors.append("residual_orders: expected a list of non-negative integers")
        res_orders = []
    elif order is not None and any(n > order for n in res_orders):
        errors.append("residual_orders: entries may not exceed order")
    window = raw.get("fit_window")
    if window is not None:
        if (not isinstance(window, list) or len(window) != 2
                or not all(isinstance(x, int) for x in window) or window[0] < 3
                or window[1] < window[0] + 3 or (order is not None and window[1] > order)):
            errors.append("fit_window: expected [n_lo, n_hi] with 3 <= n_lo, "
                          "n_hi >= n_lo + 3, n_hi <= order")
        else:
            window = tuple(window)
    profile_max = _integer(raw.get("profile_max", 200), "profile_max", errors, minimum=1)
    output = raw.get("output", "out")
    if not isinstance(output, str):
        errors.append("output: expected a path string")
    if errors:
        raise ConfigError(errors)
    return RunConfig(problem, D, potential, freq, gamma, order, topology, beta0_index,
                     rho, r, bits, eps, res_orders, window, profile_max, output)


def parse_config(path):
    """Read and validate a JSON run configuration."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})"]) from None
    return validate_config(raw)


# -- model construction ------------------------------------------------------

def build_potential(config):
    return Potential.from_cos_sin(config.dimension,
                                  [(tuple(m), a, b) for m, a, b in config.potential])


def build_frequency(config):
    kind = config.frequency["kind"]
    if kind == "golden":
        return Frequency.golden()
    if kind == "continued-fraction":
        return Frequency.from_continued_fraction(config.frequency.get("quotients", []))
    return Frequency.explicit(config.frequency["values"])


def build_topology(config):
    t = config.topology
    return LowerTopology(tuple(t["k"]), None if t["k_perp"] is None else tuple(t["k_perp"]))


@dataclass
class Run:
    """An expansion together with everything needed to evaluate it."""

    config: RunConfig
    potential: Potential
    freq: Frequency
    gamma: object
    expansion: object
    topology: LowerTopology = None
    roots: list = None

    def residuals(self, N_trunc):
        eps = [nx.scalar(e) for e in self.config.eps]
        params = self.config.norm_params()
        if self.topology is None:
            return residual(self.expansion.model, self.expansion, N_trunc, eps, params)
        return residual_lower(self.potential, self.freq, self.topology, self.gamma,
                              self.expansion, N_trunc, eps, params)


def build_run(config):
    potential = build_potential(config)
    freq = build_frequency(config)
    gamma = nx.scalar(config.gamma)
    params = config.norm_params()
    if not config.is_lower:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = MaximalModel(potential, freq, gamma, config.order)
        return Run(config, potential, freq, gamma, expand(model, params))
    topology = build_topology(config)
    roots = find_beta0(potential, topology)
    if config.beta0_index >= len(roots):
        raise ConfigError([f"beta0_index: only {len(roots)} roots available"])
    expansion = expand_lower(potential, freq, topology, gamma, roots[config.beta0_index],
                             config.order, params)
    return Run(config, potential, freq, gamma, expansion, topology, roots)


# -- number formatting and dumps ----------------------------------------------

def format_real(x):
    """Shortest text that reads back to the same value at the current precision."""
    if isinstance(x, mpmath.mpf):
        return mpmath.nstr(x, mpmath.mp.dps)
    x = float(x)
    return "0.0" if x == 0 else repr(x)


def parse_real(text):
    return nx.scalar(text)


@dataclass
class Dump:
    """Coefficient dump contents.

    ``coeffs`` maps ``n`` to ``{ell: [(re, im) per component]}``; ``mu`` and
    ``beta`` map ``n`` to a vector and a scalar respectively.
    """

    header: dict
    coeffs: dict
    mu: dict
    beta: dict = field(default_factory=dict)


def dump_from_run(run):
    exp = run.expansion
    header = {"schema_version": SCHEMA_VERSION, "problem": run.config.problem,
              "precision_bits": nx.get_bits(), "order": exp.order,
              "domain_dim": exp.series[0].domain_dim, "range_dim": exp.series[0].range_dim}
    coeffs, mu, beta = {}, {}, {}
    for n, p in enumerate(exp.series):
        coeffs[n] = {ell: [(nx.real_part(v), nx.imag_part(v)) for v in vec]
                     for ell, vec in p.items()}
        mu[n] = list(exp.mu[n])
    if run.topology is not None:
        beta = dict(enumerate(exp.beta))
    return Dump(header, coeffs, mu, beta)


def _line(record):
    return json.dumps(record, separators=(",", ":"))


def write_dump(dump, path):
    """Write records sorted by order and then lexicographically by mode."""
    lines = [_line({"type": "header", **dump.header})]
    for n in sorted(dump.coeffs):
        for ell in sorted(dump.coeffs[n]):
            lines.append(_line({"type": "coef", "n": n, "ell": list(ell),
                                "re": [format_real(a) for a, _ in dump.coeffs[n][ell]],
                                "im": [format_real(b) for _, b in dump.coeffs[n][ell]]}))
        if n in dump.mu:
            lines.append(_line({"type": "mu", "n": n,
                                "value": [format_real(x) for x in dump.mu[n]]}))
        if n in dump.beta:
            lines.append(_line({"type": "beta", "n": n, "value": format_real(dump.beta[n])}))
    Path(path).write_text("\n".join(lines) + "\n")


def read_dump(path):
    """Inverse of :func:`write_dump`; numbers are parsed at the dump's precision.

    Call inside ``working_precision(header['precision_bits'])`` so that the
    values and any re-serialization use the same precision; this function
    sets it up itself.
    """
    lines = Path(path).read_text().splitlines()
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise ValueError("dump does not start with a header record")
    header.pop("type")
    coeffs, mu, beta = {}, {}, {}
    with nx.working_precision(header["precision_bits"]):
        for text in lines[1:]:
            rec = json.loads(text)
            n = rec["n"]
            if rec["type"] == "coef":
                coeffs.setdefault(n, {})[tuple(rec["ell"])] = [
                    (parse_real(a), parse_real(b)) for a, b in zip(rec["re"], rec["im"])]
            elif rec["type"] == "mu":
                coeffs.setdefault(n, {})
                mu[n] = [parse_real(x) for x in rec["value"]]
            elif rec["type"] == "beta":
                beta[n] = parse_real(rec["value"])
            else:
                raise ValueError(f"unknown record type {rec['type']!r}")
    return Dump(header, coeffs, mu, beta)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


def _fmt(x):
    return format_real(x) if isinstance(x, mpmath.mpf) else repr(float(x))


# -- verbs ------------------------------------------------------------------

def _expand_outputs(run, out, lines):
    exp = run.expansion
    write_dump(dump_from_run(run), out / "coefficients.jsonl")
    degrees = [p.attained_degree() for p in exp.series]
    _write_csv(out / "norms.csv", ["n", "norm", "mu_abs", "degree"],
               [(n, _fmt(v), _fmt(m), d) for (n, v, m), d in zip(exp.norm_log, degrees)])
    J = exp.model.degree_bound if run.topology is not None else run.potential.degree
    audit = degree_audit(exp, J)
    lines.append(f"order {exp.order}, degree law deg <= {J} n: "
                 f"{'ok' if audit.ok else 'violated at ' + str(audit.failures)}")
    lines.append(f"||series_N|| = {float(exp.norm_log[-1][1]):.6e}")
    if run.topology is not None:
        lines.append(f"beta0 roots: {', '.join(f'{float(b):.15g}' for b in run.roots)}; "
                     f"chosen {float(exp.chosen_beta0):.15g}, "
                     f"nondegeneracy constant {float(exp.nondeg_constant):.15g}")


def _residual_outputs(run, out, lines):
    orders = run.config.residual_orders or sorted({min(2, run.expansion.order),
                                                   run.expansion.order})
    rows = []
    for N in orders:
        table = run.residuals(N)
        rows += [(N, e, _fmt(r)) for e, (_, r) in zip(run.config.eps, table)]
        if len(table) >= 3:
            try:
                slope = residual_order_fit(table)
                lines.append(f"residual slope at N_trunc = {N}: {slope:.4f} (expected {N + 1})")
            except ValueError as exc:
                lines.append(f"residual slope at N_trunc = {N}: not fitted ({exc})")
    _write_csv(out / "residuals.csv", ["N_trunc", "eps", "residual"], rows)


def _fit_outputs(run, out, lines):
    exp = run.expansion
    window = run.config.fit_window or (max(3, exp.order // 3), exp.order)
    fit = gevrey_fit(exp.norm_log, window)
    _write_csv(out / "fit.csv",
               ["A", "R", "sigma", "n_lo", "n_hi", "rms", "sigma_stirling", "skipped"],
               [(repr(fit.A), repr(fit.R), repr(fit.sigma), window[0], window[1],
                 repr(fit.residual_rms), repr(fit.sigma_stirling),
                 " ".join(map(str, fit.skipped)))])
    lines.append(f"Gevrey fit on {window[0]}..{window[1]}: A = {fit.A:.6g}, R = {fit.R:.6g}, "
                 f"sigma = {fit.sigma:.6g} (Stirling {fit.sigma_stirling:.6g}), "
                 f"rms = {fit.residual_rms:.3g}")


def _profile(config):
    return diophantine_profile(build_frequency(config), config.profile_max)


def _profile_outputs(config, out, lines):
    profile = _profile(config)
    _write_csv(out / "profile.csv", ["shell", "min_distance", "record"],
               [(q, repr(float(d)), int(q in set(profile.records.tolist())))
                for q, d in profile.table()])
    lines.append(f"Diophantine fit over |l| <= {config.profile_max}: "
                 f"nu = {profile.nu:.6g}, tau = {profile.tau:.6g}")
    return profile


def _bounds_outputs(run, out, lines):
    config = run.config
    profile = _profile(config)
    params = config.norm_params()
    exp = run.expansion
    if run.topology is None:
        kind = "maximal"
        J = run.potential.degree
    else:
        kind = "lower-conservative" if config.problem == "lower-conservative" \
            else "lower-dissipative"
        J = exp.model.degree_bound
    A, B, sigma = inductive_constants(J, profile.tau, params)
    eta, report = bisect_scaling(kind, A, B, sigma, profile.tau, profile.nu, J,
                                 float(run.potential.upsilon), float(run.gamma))
    rows = [(name, repr(float(lhs)), repr(float(rhs)), int(ok))
            for name, lhs, rhs, ok in report.rows]
    lines.append(f"inductive constants ({kind}): A = {A:.6g}, B = {B:.6g}, sigma = {sigma:.6g}")
    if eta is None:
        lines.append("no scale eta satisfies the inductive conditions")
        _write_csv(out / "bounds.csv", ["inequality", "lhs", "rhs", "pass"], rows)
        return
    scaled = scale_series(exp, eta)
    worst = max((nx.log_abs(v) - math.log(B) - sigma * math.lgamma(n + 1)
                 for n, v, _ in scaled.norm_log if n >= 4 and v != 0), default=-math.inf)
    rows.append(("scaled series max log(||u_n|| / B (n!)^sigma), n >= 4",
                 repr(float(worst)), "0.0", int(worst <= 0)))
    _write_csv(out / "bounds.csv", ["inequality", "lhs", "rhs", "pass"], rows)
    lines.append(f"eta = {eta:.10g}; scaled series "
                 f"{'satisfies' if worst <= 0 else 'violates'} ||u_n|| <= B (n!)^sigma for n >= 4")


def run(config, verb="expand-max", out=None):
    """Execute ``verb`` for ``config`` and write its outputs; returns the summary lines."""
    out = Path(out if out is not None else config.output)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"lindstedt {verb}: problem {config.problem}, order {config.order}, "
             f"precision {config.precision_bits} bits"]
    with nx.working_precision(config.precision_bits):
        if verb == "profile-frequency":
            _profile_outputs(config, out, lines)
            return lines
        if verb == "expand-max" and config.is_lower:
            raise ConfigError(["problem: expand-max needs problem = maximal"])
        if verb == "expand-lower" and not config.is_lower:
            raise ConfigError(["problem: expand-lower needs a lower problem"])
        the_run = build_run(config)
        _expand_outputs(the_run, out, lines)
        if verb == "residual":
            _residual_outputs(the_run, out, lines)
        elif verb == "gevrey-fit":
            _fit_outputs(the_run, out, lines)
        elif verb == "check-bounds":
            _bounds_outputs(the_run, out, lines)
    return lines


def build_parser():
    parser = argparse.ArgumentParser(prog="lindstedt", description=__doc__.split("\n")[0])
    parser.add_argument("verb", choices=VERBS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; computations are sequential")
    parser.add_argument("--precision-bits", type=int,
                        help="mantissa bits (overrides the config; 53 means binary64)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError(["--threads: must be at least 1"])
        config = parse_config(args.config)
        if args.precision_bits is not None:
            if args.precision_bits < 53:
                raise ConfigError(["--precision-bits: must be at least 53"])
            config.precision_bits = args.precision_bits
        lines = run(config, args.verb, args.out)
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        return EXIT_CONFIG
    except ResonanceError as exc:
        print(f"resonance: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except DegeneracyError as exc:
        print(f"degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NormOverflow as exc:
        print(f"norm overflow: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    print("\n".join(lines))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
