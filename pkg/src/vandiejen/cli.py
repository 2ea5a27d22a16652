"""Command-line front end: evaluation tables, verification runs, reports.

Three subcommands:

``vandiejen eval``
    Tabulates the building-block function ``s``, the odd theta function,
    the gamma function ``G``, its step constant ``c``, operator shift
    coefficients, or ground-state eigenfunction values at user-given
    points.

``vandiejen verify``
    Runs seeded residual certification for a selection of identities and
    cases and writes a report (aligned text, line-delimited records, or
    CSV).

``vandiejen report``
    Merges previously written line-delimited reports, prints an
    identity-by-case summary matrix, and optionally re-exports the merged
    residual distribution.

Exit codes: 0 when all verdicts pass, 1 when a verification verdict
fails, 2 for configuration problems, 3 for numerical domain problems
(poles, sampler exhaustion).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import re
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import verify
from .eigenfunctions import (
    BranchTracker,
    deformed_groundstate_value,
    groundstate_psi,
)
from .gamma import functional_eq_constant, gamma_G
from .operators import CouplingSet, MassTag, coeff_V0, coeff_V_shift
from .sfun import (
    DEFAULT_POLICY,
    CaseParams,
    ConvergenceError,
    DomainError,
    PoleProximityError,
    TruncationPolicy,
    lattice_distance,
    s_eval,
    theta_eval,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3

FORMATS = ("text", "json-lines", "csv")
EVAL_QUANTITIES = ("s", "theta", "gamma", "constant", "coefficients",
                   "eigenfunction")


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one CLI invocation.

    Built from defaults, then a config file, then command-line flags, in
    increasing precedence.  Serializes to a plain mapping and re-parses to
    an equal value.
    """

    cases: tuple[str, ...] = ("I",)
    r: float = 1.0
    a: float = 2.0
    g: tuple[float, ...] | None = None
    lam: float | None = None
    beta: float | None = None
    particles: tuple[int, int, int, int] | None = None
    masses: tuple[str, ...] | None = None
    identities: tuple[str, ...] = ()
    samples: int = 20
    seed: int = 0
    tol: float | None = None
    trunc_terms: int | None = None
    no_balance: bool = False
    jobs: int = 1
    max_n: int = 3
    out: str | None = None
    fmt: str = "text"

    def to_mapping(self) -> dict:
        m: dict = {
            "cases": list(self.cases),
            "r": self.r,
            "a": self.a,
            "samples": self.samples,
            "seed": self.seed,
            "no_balance": self.no_balance,
            "jobs": self.jobs,
            "max_n": self.max_n,
            "format": self.fmt,
        }
        if self.g is not None:
            m["g"] = list(self.g)
        if self.lam is not None:
            m["lambda"] = self.lam
        if self.beta is not None:
            m["beta"] = self.beta
        if self.particles is not None:
            m["particles"] = list(self.particles)
        if self.masses is not None:
            m["masses"] = list(self.masses)
        if self.identities:
            m["identities"] = list(self.identities)
        if self.tol is not None:
            m["tol"] = self.tol
        if self.trunc_terms is not None:
            m["trunc_terms"] = self.trunc_terms
        if self.out is not None:
            m["out"] = self.out
        return m

    @classmethod
    def from_mapping(cls, m: dict) -> "RunConfig":
        def tup(key, conv):
            v = m.get(key)
            return tuple(conv(e) for e in v) if v is not None else None

        return cls(
            cases=tuple(str(c) for c in m.get("cases", ("I",))),
            r=float(m.get("r", 1.0)),
            a=float(m.get("a", 2.0)),
            g=tup("g", float),
            lam=float(m["lambda"]) if m.get("lambda") is not None else None,
            beta=float(m["beta"]) if m.get("beta") is not None else None,
            particles=tup("particles", int),
            masses=tup("masses", str),
            identities=tuple(str(i) for i in m.get("identities", ())),
            samples=int(m.get("samples", 20)),
            seed=int(m.get("seed", 0)),
            tol=float(m["tol"]) if m.get("tol") is not None else None,
            trunc_terms=(int(m["trunc_terms"])
                         if m.get("trunc_terms") is not None else None),
            no_balance=bool(m.get("no_balance", False)),
            jobs=int(m.get("jobs", 1)),
            max_n=int(m.get("max_n", 3)),
            out=str(m["out"]) if m.get("out") is not None else None,
            fmt=str(m.get("format", "text")),
        )

    def validate(self) -> None:
        """Field-level validation; raises DomainError naming the field."""
        if not self.cases:
            raise DomainError("field cases: at least one case is required")
        for c in self.cases:
            if c not in verify.CASES:
                raise DomainError(
                    f"field cases: unknown case {c!r}; choose from "
                    + ", ".join(verify.CASES))
        for ident in self.identities:
            if ident not in verify.IDENTITIES:
                raise DomainError(
                    f"field identity: unknown identity {ident!r}; choose "
                    "from " + ", ".join(verify.IDENTITIES))
        if self.r <= 0:
            raise DomainError("field r: must be positive")
        if self.a <= 0:
            raise DomainError("field a: must be positive")
        if self.samples < 1:
            raise DomainError("field samples: must be at least 1")
        if self.seed < 0:
            raise DomainError("field seed: must be non-negative")
        if self.jobs < 1:
            raise DomainError("field jobs: must be at least 1")
        if self.max_n < 1:
            raise DomainError("field max_n: must be at least 1")
        if self.tol is not None and self.tol <= 0:
            raise DomainError("field tol: must be positive")
        if self.trunc_terms is not None and self.trunc_terms < 1:
            raise DomainError("field trunc_terms: must be at least 1")
        if self.fmt not in FORMATS:
            raise DomainError(
                f"field format: unknown format {self.fmt!r}; choose from "
                + ", ".join(FORMATS))
        if self.lam is not None and self.lam == 0:
            raise DomainError("field lambda: must be nonzero")
        if self.beta is not None and self.beta == 0:
            raise DomainError("field beta: must be nonzero")
        if self.particles is not None:
            if len(self.particles) != 4:
                raise DomainError(
                    "field particles: expected N,Ntilde,M,Mtilde")
            if any(p < 0 for p in self.particles):
                raise DomainError("field particles: counts are non-negative")
        if self.masses is not None:
            for token in self.masses:
                MassTag.parse(token)
        if self.no_balance and any(c != "IV" for c in self.cases):
            raise DomainError(
                "field no_balance: applies to the elliptic case only")

    def policy(self) -> TruncationPolicy:
        if self.trunc_terms is None:
            return DEFAULT_POLICY
        return dataclasses.replace(DEFAULT_POLICY,
                                   product_terms=self.trunc_terms)

    def coupling_for(self, case: CaseParams) -> CouplingSet:
        if self.g is None or self.lam is None or self.beta is None:
            raise DomainError(
                "fields g, lambda, beta: all three are required here")
        coupling = CouplingSet(self.g, self.lam, self.beta)
        coupling.validate_for(case)
        return coupling


def _load_config_file(path_text: str) -> dict:
    path = Path(path_text)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise DomainError(f"config file {path}: {exc}") from exc
    try:
        mapping = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DomainError(
            f"config file {path}: invalid JSON at line {exc.lineno}") from exc
    if not isinstance(mapping, dict):
        raise DomainError(f"config file {path}: top level must be a mapping")
    return mapping


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags over an optional config file over defaults."""
    file_map = {}
    if getattr(args, "config", None):
        file_map = _load_config_file(args.config)

    def pick(key: str, flag_value, default):
        if flag_value is not None:
            return flag_value
        if key in file_map:
            return file_map[key]
        return default

    cases = None
    if getattr(args, "case", None):
        cases = (args.case,)
    elif getattr(args, "cases", None):
        cases = tuple(t.strip() for t in args.cases.split(",") if t.strip())
    elif getattr(args, "all", None):
        cases = tuple(verify.CASES)
    if cases is None:
        raw = file_map.get("cases")
        cases = tuple(str(c) for c in raw) if raw else ("I",)

    identities: tuple[str, ...] = ()
    if getattr(args, "identity", None):
        identities = tuple(t.strip() for t in args.identity.split(",")
                           if t.strip())
    elif getattr(args, "all", None):
        identities = tuple(verify.IDENTITIES)
    elif file_map.get("identities"):
        identities = tuple(str(i) for i in file_map["identities"])

    g = None
    if getattr(args, "g", None):
        g = tuple(float(t) for t in args.g.split(","))
    elif file_map.get("g") is not None:
        g = tuple(float(v) for v in file_map["g"])

    particles = None
    if getattr(args, "particles", None):
        parts = [t.strip() for t in args.particles.split(",")]
        if len(parts) != 4:
            raise DomainError("field particles: expected N,Ntilde,M,Mtilde")
        particles = tuple(int(t) for t in parts)
    elif file_map.get("particles") is not None:
        particles = tuple(int(v) for v in file_map["particles"])

    masses = None
    if getattr(args, "masses", None):
        masses = tuple(MassTag.parse(t).value
                       for t in args.masses.split(",") if t.strip())
    elif file_map.get("masses") is not None:
        masses = tuple(MassTag.parse(t).value for t in file_map["masses"])

    cfg = RunConfig(
        cases=cases,
        r=float(pick("r", getattr(args, "r", None), 1.0)),
        a=float(pick("a", getattr(args, "a", None), 2.0)),
        g=g,
        lam=(float(args.lam) if getattr(args, "lam", None) is not None
             else (float(file_map["lambda"])
                   if file_map.get("lambda") is not None else None)),
        beta=(float(args.beta) if getattr(args, "beta", None) is not None
              else (float(file_map["beta"])
                    if file_map.get("beta") is not None else None)),
        particles=particles,
        masses=masses,
        identities=identities,
        samples=int(pick("samples", getattr(args, "samples", None), 20)),
        seed=int(pick("seed", getattr(args, "seed", None), 0)),
        tol=(float(args.tol) if getattr(args, "tol", None) is not None
             else (float(file_map["tol"])
                   if file_map.get("tol") is not None else None)),
        trunc_terms=(int(args.trunc_terms)
                     if getattr(args, "trunc_terms", None) is not None
                     else (int(file_map["trunc_terms"])
                           if file_map.get("trunc_terms") is not None
                           else None)),
        no_balance=bool(pick("no_balance",
                             getattr(args, "no_balance", None), False)),
        jobs=int(pick("jobs", getattr(args, "jobs", None), 1)),
        max_n=int(pick("max_n", getattr(args, "max_n", None), 3)),
        out=pick("out", getattr(args, "out", None), None),
        fmt=str(pick("format", getattr(args, "fmt", None), "text")),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# formatting helpers
# ---------------------------------------------------------------------------


def parse_complex(token: str) -> complex:
    """Parse ``2``, ``-0.5i``, ``0.3+0.1i`` (``j`` also accepted)."""
    text = token.strip().lower().replace(" ", "")
    if not text:
        raise DomainError("empty coordinate")
    norm = text.replace("i", "j")
    norm = re.sub(r"(?<![0-9.])j", "1j", norm)
    try:
        return complex(norm)
    except ValueError as exc:
        raise DomainError(f"cannot parse complex number {token!r}") from exc


def _fmt_real(v: float) -> str:
    if not math.isfinite(v):
        return str(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return f"{v:.12g}"


def format_complex(z: complex) -> str:
    """Minimal human form: ``2``, ``-2i``, ``0.5+0.1i``."""
    re_, im = z.real, z.imag
    scale = max(abs(re_), abs(im), 1.0)
    if abs(im) < 1e-13 * scale:
        return _fmt_real(re_)
    if abs(re_) < 1e-13 * scale:
        body = _fmt_real(im)
        if body == "1":
            return "i"
        if body == "-1":
            return "-i"
        return body + "i"
    sign = "+" if im >= 0 else "-"
    return f"{_fmt_real(re_)}{sign}{_fmt_real(abs(im))}i"


def _json_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      allow_nan=True)


def _write_output(text: str, out: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def _eval_points(args: argparse.Namespace) -> list[complex]:
    if not getattr(args, "x", None):
        raise DomainError("flag --x: at least one point is required")
    return [parse_complex(t) for t in args.x.split(",") if t.strip()]


def _flag_for(value: complex, distance: float | None) -> str:
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        return "pole"
    if distance is not None and distance < 1e-9:
        return "zero"
    return ""


def _tags_for_eval(cfg: RunConfig, count: int) -> tuple[MassTag, ...]:
    if cfg.masses is not None:
        return tuple(MassTag.parse(t) for t in cfg.masses)
    if cfg.particles is not None:
        n, nt, m, mt = cfg.particles
        return ((MassTag.PLUS_ONE,) * n + (MassTag.MINUS_INV,) * nt
                + (MassTag.MINUS_ONE,) * m + (MassTag.PLUS_INV,) * mt)
    return (MassTag.PLUS_ONE,) * count


def cmd_eval(args: argparse.Namespace, cfg: RunConfig) -> int:
    label = cfg.cases[0]
    case = verify.make_case(label, None, r=cfg.r, a=cfg.a)
    policy = cfg.policy()
    quantity = args.quantity
    alpha = float(args.alpha) if getattr(args, "alpha", None) else 1.0
    rows: list[tuple[str, complex, str]] = []

    if quantity == "constant":
        value = functional_eq_constant(case, alpha, policy)
        rows.append(("c", value, ""))
    elif quantity in ("s", "theta", "gamma"):
        if quantity == "theta" and label != "IV":
            raise DomainError(
                "theta tabulation needs the elliptic case (--case IV)")
        for x in _eval_points(args):
            distance = None
            try:
                with np.errstate(divide="ignore", invalid="ignore"):
                    if quantity == "s":
                        value = complex(s_eval(case, x, policy))
                        distance = float(lattice_distance(case, x))
                    elif quantity == "theta":
                        value = complex(theta_eval(case.r * x, q=case.q,
                                                   policy=policy))
                        distance = float(lattice_distance(case, x))
                    else:
                        value = complex(gamma_G(case, alpha, x, policy))
            except (ZeroDivisionError, OverflowError):
                value = complex("inf")
            except PoleProximityError:
                value = complex("nan")
            rows.append((format_complex(x), value, _flag_for(value, distance)))
    elif quantity == "coefficients":
        X = _eval_points(args)
        coupling = cfg.coupling_for(case)
        tags = _tags_for_eval(cfg, len(X))
        if len(tags) != len(X):
            raise DomainError(
                f"flag --x: expected {len(tags)} coordinates, got {len(X)}")
        values = tuple(t.value_for(coupling.lam) for t in tags)
        rows.append(("V0", coeff_V0(case, coupling.g, coupling.lam,
                                    coupling.beta, values, X, policy), ""))
        for j in range(len(X)):
            for sign, mark in ((1, "+"), (-1, "-")):
                v = coeff_V_shift(case, coupling.g, coupling.lam,
                                  coupling.beta, values, tags, X, j, sign,
                                  policy)
                rows.append((f"V{mark}[{j}]", v, _flag_for(v, None)))
    elif quantity == "eigenfunction":
        X = _eval_points(args)
        coupling = cfg.coupling_for(case)
        n, nt = len(X), 0
        if cfg.particles is not None:
            n, nt, m_cnt, mt_cnt = cfg.particles
            if m_cnt or mt_cnt:
                raise DomainError(
                    "field particles: ground states use N and Ntilde only")
            if n + nt != len(X):
                raise DomainError(
                    f"flag --x: expected {n + nt} coordinates, got {len(X)}")
        tracker = BranchTracker(tuple(X))
        if nt:
            value = deformed_groundstate_value(
                case, coupling.g, coupling.lam, coupling.beta, tuple(X),
                tuple(range(n)), tuple(range(n, n + nt)), tracker, policy)
        else:
            value = groundstate_psi(case, coupling.g, coupling.lam,
                                    coupling.beta, tuple(X), tuple(range(n)),
                                    tracker, policy)
        rows.append(("psi", value, _flag_for(value, None)))
    else:
        raise DomainError(f"unknown quantity {quantity!r}")

    text = _render_eval(rows, quantity, label, cfg.fmt)
    _write_output(text, cfg.out)
    if any(flag == "pole" for _, _, flag in rows):
        print("numerical domain error: evaluation point sits on a pole",
              file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_PASS


def _render_eval(rows: list[tuple[str, complex, str]], quantity: str,
                 label: str, fmt: str) -> str:
    if fmt == "json-lines":
        out = []
        for name, value, flag in rows:
            out.append(_json_line({
                "record": "eval",
                "quantity": quantity,
                "case": label,
                "point": name,
                "value": [value.real, value.imag],
                "flag": flag,
            }))
        return "\n".join(out)
    if fmt == "csv":
        out = ["point,value_re,value_im,flag"]
        for name, value, flag in rows:
            out.append(f"{name},{value.real!r},{value.imag!r},{flag}")
        return "\n".join(out)
    if len(rows) == 1:
        name, value, flag = rows[0]
        body = format_complex(value)
        return f"{body} ({flag})" if flag else body
    width = max(len(name) for name, _, _ in rows)
    lines = []
    for name, value, flag in rows:
        tail = f"  {flag}" if flag else ""
        lines.append(f"{name.ljust(width)}  {format_complex(value)}{tail}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace, cfg: RunConfig) -> int:
    if not cfg.identities:
        raise DomainError(
            "flag --identity or --all: choose identities to verify")
    started = time.perf_counter()
    reports = verify.run_suite(
        cfg.identities,
        cfg.cases,
        samples=cfg.samples,
        seed=cfg.seed,
        jobs=cfg.jobs,
        policy=cfg.policy(),
        tol=cfg.tol,
        masses=cfg.masses,
        particles=cfg.particles,
        no_balance=cfg.no_balance,
        max_n=cfg.max_n,
        r=cfg.r,
        a=cfg.a,
    )
    elapsed = time.perf_counter() - started

    if cfg.fmt == "json-lines":
        created = datetime.now(timezone.utc).isoformat(timespec="seconds")
        text = verify.render_json_lines(reports, created=created,
                                        run_args=cfg.to_mapping())
    elif cfg.fmt == "csv":
        text = verify.render_csv(reports)
    else:
        text = _render_verify_text(reports, elapsed)
    _write_output(text, cfg.out)
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


def _render_verify_text(reports: Sequence[verify.ResidualReport],
                        elapsed: float) -> str:
    lines = []
    head = (f"{'identity':22s} {'case':4s} {'verdict':7s} {'samples':>7s} "
            f"{'max_residual':>12s} {'min_control':>11s} {'rejects':>7s}")
    lines.append(head)
    lines.append("-" * len(head))
    for rep in reports:
        ctl = (f"{rep.min_control_residual:.1e}"
               if rep.min_control_residual else "-")
        lines.append(
            f"{rep.identity:22s} {rep.case:4s} {rep.verdict:7s} "
            f"{rep.sample_count:7d} {rep.max_rel_residual:12.2e} "
            f"{ctl:>11s} {rep.rejection_rate:7.2f}")
    lines.append("")
    lines.append(verify.summary_matrix(
        [verify.summary_record(r) for r in reports]))
    lines.append("")
    lines.append(f"runtime: {elapsed:.2f}s")
    verdict = "pass" if all(r.passed for r in reports) else "FAIL"
    lines.append(f"suite verdict: {verdict}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(args: argparse.Namespace, cfg: RunConfig) -> int:
    parsed = []
    for path_text in args.files:
        path = Path(path_text)
        try:
            raw = path.read_text()
        except OSError as exc:
            raise DomainError(f"report file {path}: {exc}") from exc
        try:
            parsed.append(verify.parse_report_lines(raw))
        except DomainError as exc:
            raise DomainError(f"report file {path}: {exc}") from exc
    merged = verify.merge_parsed_reports(parsed)

    if cfg.fmt == "json-lines":
        created = datetime.now(timezone.utc).isoformat(timespec="seconds")
        lines = [_json_line({
            "record": "header",
            "format": verify.FORMAT_VERSION,
            "tool": "vandiejen",
            "created": created,
            "merged_from": len(parsed),
        })]
        lines.extend(_json_line(row) for row in merged["samples"])
        lines.extend(_json_line(row) for row in merged["summaries"])
        lines.append(_json_line(merged["footer"]))
        text = "\n".join(lines)
    elif cfg.fmt == "csv":
        out = [",".join(verify._CSV_COLUMNS)]
        for row in merged["samples"]:
            detail = str(row.get("detail", "")).replace('"', "'")
            if "," in detail:
                detail = f'"{detail}"'
            out.append(
                f"{row['identity']},{row['case']},{row['label']},"
                f"{row['index']},{row['residual']!r},{row['scale']!r},"
                f"{row['tolerance']!r},{int(row['control'])},"
                f"{int(row['passed'])},{detail}")
        text = "\n".join(out)
    else:
        footer = merged["footer"]
        lines = [verify.summary_matrix(merged["summaries"]), ""]
        lines.append(
            f"reports: {footer['reports']}  samples: {footer['samples']}  "
            f"failures: {footer['failures']}  verdict: {footer['verdict']}")
        text = "\n".join(lines)
    _write_output(text, cfg.out)
    return EXIT_PASS if merged["footer"]["verdict"] == "pass" else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--case", choices=list(verify.CASES),
                     help="single case label")
    sub.add_argument("--cases", help="comma-separated case labels")
    sub.add_argument("--r", type=float, help="trigonometric/elliptic scale")
    sub.add_argument("--a", type=float, help="hyperbolic/elliptic scale")
    sub.add_argument("--trunc-terms", dest="trunc_terms", type=int,
                     help="series/product truncation order")
    sub.add_argument("--out", help="write output to this path")
    sub.add_argument("--format", dest="fmt", choices=list(FORMATS),
                     help="output format (default text)")
    sub.add_argument("--config",
                     help="JSON config file; flags override its values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vandiejen",
        description="Difference operators of Koornwinder-van Diejen type: "
                    "evaluation, identity certification, reporting.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_eval = subs.add_parser(
        "eval", help="tabulate special functions and coefficients")
    p_eval.add_argument("quantity", choices=list(EVAL_QUANTITIES))
    p_eval.add_argument("--x", help="comma-separated complex points "
                                    "(coordinates for vector quantities)")
    p_eval.add_argument("--alpha", type=float,
                        help="gamma-function step scale (default 1)")
    p_eval.add_argument("--g", help="comma-separated couplings")
    p_eval.add_argument("--lambda", dest="lam", type=float,
                        help="second-species coupling")
    p_eval.add_argument("--beta", type=float, help="shift step scale")
    p_eval.add_argument("--masses", help="comma-separated mass tags "
                                         "(1, -1, 1/lam, -1/lam)")
    p_eval.add_argument("--particles",
                        help="block sizes N,Ntilde,M,Mtilde")
    _add_common(p_eval)

    p_verify = subs.add_parser(
        "verify", help="run seeded residual certification")
    p_verify.add_argument("--identity",
                          help="comma-separated identity names")
    p_verify.add_argument("--all", action="store_true", default=None,
                          help="verify every identity (and every case "
                               "unless --case/--cases narrows them)")
    p_verify.add_argument("--samples", type=int, help="points per identity")
    p_verify.add_argument("--seed", type=int, help="sampling seed")
    p_verify.add_argument("--tol", type=float, help="tolerance override")
    p_verify.add_argument("--masses", help="pin the mass multiset")
    p_verify.add_argument("--particles",
                          help="pin block sizes N,Ntilde,M,Mtilde")
    p_verify.add_argument("--no-balance", dest="no_balance",
                          action="store_true", default=None,
                          help="elliptic negative control: drop the "
                               "balancing condition and expect failure")
    p_verify.add_argument("--max-n", dest="max_n", type=int,
                          help="largest particle total in sweeps")
    p_verify.add_argument("--jobs", type=int,
                          help="concurrent identity-case runs")
    _add_common(p_verify)

    p_report = subs.add_parser(
        "report", help="merge and summarize report files")
    p_report.add_argument("files", nargs="+",
                          help="line-delimited report files")
    p_report.add_argument("--out", help="write output to this path")
    p_report.add_argument("--format", dest="fmt", choices=list(FORMATS),
                          help="output format (default text)")
    p_report.add_argument("--config",
                          help="JSON config file; flags override its values")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "eval":
            return cmd_eval(args, cfg)
        if args.command == "verify":
            return cmd_verify(args, cfg)
        return cmd_report(args, cfg)
    except (PoleProximityError, ConvergenceError) as exc:
        print(f"numerical domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DomainError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
