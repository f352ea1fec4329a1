"""Command-line front end: generate, trace, limit-report, verify.

Configuration is a flat key=value text file plus command-line overrides;
every run is deterministic (identical config and family give byte-identical
outputs; no timestamps, no environment leakage).  Real values print as
'midpoint ± width' with config-driven precision.

Exit codes: 0 success, 1 verification failures, 2 usage/config errors,
3 bit budget exceeded (partial family saved), 4 unreliable probes in range.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import contfrac, geodesic, limitset, numeric
from .contfrac import BudgetExceededError, SlopeFamily
from .surface import BoundaryCurve, BridgeCurve, SlitSurface, TorusCurve, parse_curve

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_UNRELIABLE = 4

OUT_ENV = "SLITFLOW_OUT"


@dataclass
class RunConfig:
    d: int = 2
    s0: Fraction = Fraction(1, 100)
    mode: str = "scaled"
    growth_pow: int = 2
    K: int = 8
    u_file: Optional[str] = None
    precision: int = 120
    bit_budget: int = contfrac.DEFAULT_BIT_BUDGET
    out: str = "out"
    levels: str = "auto"
    gamma1: str = "T 0 1/0"
    gamma2: str = "T 1 1/0"
    bridge: str = "G 0 1/1"
    panel: str = ""
    curves: str = ""
    times: str = ""
    sig: int = 17

    def validate(self) -> None:
        if self.d < 0:
            raise ValueError("d must be >= 0")
        if not 0 < self.s0 < Fraction(1, 2):
            raise ValueError("s0 must satisfy 0 < s0 < 1/2")
        if self.mode not in contfrac.MODES:
            raise ValueError(f"mode must be one of {contfrac.MODES}")
        if self.K < 0 or self.precision < 30 or self.bit_budget < 64 or self.sig < 3:
            raise ValueError("K, precision, bit_budget, sig must be positive and sane")
        if self.growth_pow < 2:
            raise ValueError("growth_pow must be >= 2")


_CONFIG_FIELDS = {f.name for f in RunConfig.__dataclass_fields__.values()}  # type: ignore[attr-defined]


def _coerce(name: str, raw: str):
    current = getattr(RunConfig(), name)
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, Fraction):
        return Fraction(raw)
    return raw


def load_config(path: Optional[str], overrides: Sequence[str]) -> RunConfig:
    cfg = RunConfig()
    pairs: list[tuple[str, str]] = []
    if path:
        with open(path) as fp:
            for lineno, raw in enumerate(fp, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
                key, _, val = line.partition("=")
                pairs.append((key.strip(), val.strip()))
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} must be key=value")
        key, _, val = item.partition("=")
        pairs.append((key.strip(), val.strip()))
    for key, val in pairs:
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"unknown config key {key!r}")
        setattr(cfg, key, _coerce(key, val))
    cfg.validate()
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = os.environ.get(OUT_ENV, cfg.out)
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_u_seq(path: str) -> list[tuple[int, ...]]:
    rows = []
    with open(path) as fp:
        for raw in fp:
            line = raw.split("#", 1)[0].strip()
            if line:
                rows.append(tuple(int(x) for x in line.split()))
    return rows


def _load_surface(path: str) -> SlitSurface:
    with open(path) as fp:
        return SlitSurface.load(fp)


def _parse_times(spec: str) -> list[Fraction]:
    """Comma list of values, or 'a:b:n' for n evenly spaced times in [a, b]."""
    spec = spec.strip()
    if not spec:
        return []
    if ":" in spec:
        a, b, n = spec.split(":")
        a, b, n = Fraction(a), Fraction(b), int(n)
        if n < 1:
            raise ValueError("time grid needs at least one point")
        if n == 1:
            return [a]
        step = (b - a) / (n - 1)
        return [a + step * k for k in range(n)]
    return [Fraction(x) for x in spec.split(",")]


def _parse_curves(spec: str):
    out = []
    for k, chunk in enumerate(c.strip() for c in spec.split(",")):
        if not chunk:
            continue
        try:
            out.append(parse_curve(chunk))
        except ValueError as err:
            raise ValueError(f"curve {k + 1} ({chunk!r}): {err}") from err
    return out


def _reliable_levels(surface: SlitSurface, spec: str) -> list[int]:
    """Level range for limit reports; 'auto' drops leading unreliable probes."""
    max_level = (surface.family.depth - 1) // 2
    if spec != "auto":
        lo, _, hi = spec.partition(":")
        lo = int(lo)
        hi = int(hi) if hi else lo
        if lo < 1 or hi > max_level:
            raise ValueError(f"levels {spec} out of range 1..{max_level}")
        return list(range(lo, hi + 1))
    levels = []
    for n in range(1, max_level + 1):
        if limitset.build_probe(surface, n).reliable:
            levels.append(n)
        elif levels:
            break
    if not levels:
        raise ValueError("no reliable probe level; deepen the family")
    return levels


# -- generate -------------------------------------------------------------------

def cmd_generate(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    numeric.set_precision(cfg.precision)
    u_seq = _load_u_seq(cfg.u_file) if cfg.u_file else None
    preflight = contfrac.preflight_bits(cfg.d, cfg.K, cfg.mode, cfg.growth_pow, u_seq)
    hopeless = [k for k, bits in preflight if bits > cfg.bit_budget]
    if hopeless:
        print(f"preflight: levels {hopeless} predicted over the "
              f"{cfg.bit_budget}-bit budget; attempting anyway", file=sys.stderr)
    try:
        fam = contfrac.generate_slope_family(
            cfg.d, u_seq=u_seq, K=cfg.K, mode=cfg.mode,
            growth_pow=cfg.growth_pow, bit_budget=cfg.bit_budget)
    except BudgetExceededError as err:
        print(f"budget exceeded: {err}", file=sys.stderr)
        if err.partial is not None:
            with open(out / "family.partial.txt", "w") as fp:
                fp.write(f"# partial family: budget exceeded at level {err.level}\n")
                contfrac.write_family(err.partial, fp, s0=cfg.s0)
            print(f"partial family saved to {out / 'family.partial.txt'} "
                  f"(reached level {err.level})", file=sys.stderr)
        return EXIT_BUDGET

    with open(out / "family.txt", "w") as fp:
        contfrac.write_family(fam, fp, s0=cfg.s0)
    with open(out / "audit.txt", "w") as fp:
        fp.write(f"# generation audit: d={fam.d} mode={fam.mode} K={fam.levels}\n")
        for rec in fam.audit:
            fp.write(f"level {rec.level}: u={list(rec.u)} m={rec.multiplier} "
                     f"c={rec.lcm_factor} M={_int_display(rec.common_product)} "
                     f"binding_torus={rec.binding_torus}\n")
    report = contfrac.verify_lemma_slopes(fam)
    for line in report.summary_lines():
        print(line)
    print(f"family written to {out / 'family.txt'}")
    return EXIT_OK


def _int_display(n: int, cutoff: int = 60) -> str:
    """Decimal when small; log10 surrogate marked approximate when huge."""
    digits = len(str(n)) if n.bit_length() < cutoff * 4 else None
    if digits is not None and digits <= cutoff:
        return str(n)
    shift = max(n.bit_length() - 64, 0)
    log10 = math.log10(n >> shift) + shift * math.log10(2)
    frac = log10 - math.floor(log10)
    return f"~{10 ** frac:.6f}e{math.floor(log10)} (approximate)"


# -- trace -----------------------------------------------------------------------

def cmd_trace(cfg: RunConfig, family_path: str) -> int:
    out = _out_dir(cfg)
    numeric.set_precision(cfg.precision)
    surface = _load_surface(family_path)
    curves = _parse_curves(cfg.curves)
    times = _parse_times(cfg.times)
    reports = []
    for c in sorted(curves, key=lambda c: c.literal()):
        for t in times:
            reports.append(geodesic.build_length_report(surface, c, t))
    text = geodesic.reports_to_csv(reports, sig=cfg.sig)
    with open(out / "trace.csv", "w") as fp:
        fp.write(text)
    print(f"{len(reports)} rows written to {out / 'trace.csv'}")
    return EXIT_OK


# -- limit-report -------------------------------------------------------------------

def cmd_limit_report(cfg: RunConfig, family_path: str) -> int:
    out = _out_dir(cfg)
    numeric.set_precision(cfg.precision)
    surface = _load_surface(family_path)
    levels = _reliable_levels(surface, cfg.levels)
    gamma1 = parse_curve(cfg.gamma1)
    gamma2 = parse_curve(cfg.gamma2)
    bridge = parse_curve(cfg.bridge)
    if cfg.panel:
        panel = _parse_curves(cfg.panel)
    else:
        panel = [TorusCurve(i, 1, 0) for i in range(surface.d + 1)]

    rows = limitset.ratio_report(surface, gamma1, gamma2, levels)
    with open(out / "ratio.csv", "w") as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["n", "t", "lhs", "lhs_twist", "mid_logged", "mid_plain",
                    "rhs", "lhs_rhs_gap", "reliable"])
        for r in rows:
            w.writerow([r.level, numeric.fmt_mid(r.time, cfg.sig),
                        numeric.fmt_mid(r.lhs, cfg.sig),
                        numeric.fmt_mid(r.lhs_twist, cfg.sig),
                        numeric.fmt_mid(r.mid_logged, cfg.sig),
                        f"{r.mid_plain.numerator}/{r.mid_plain.denominator}",
                        numeric.fmt_mid(r.rhs, cfg.sig),
                        f"{r.lhs_rhs_gap:.6e}",
                        "1" if r.reliable else "0"])

    decay = limitset.beta_decay_report(surface, bridge)
    with open(out / "beta.csv", "w") as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["t", "crossings", "beta_width_only", "beta_with_twist",
                    "alpha_curve", "alpha_contribution", "ratio",
                    "beta_over_log_t", "reliable"])
        for r in decay.rows:
            w.writerow([numeric.fmt_mid(r.time, cfg.sig), r.crossing_number,
                        numeric.fmt_mid(r.beta_width_only, cfg.sig),
                        numeric.fmt_mid(r.beta_with_twist, cfg.sig),
                        r.alpha_curve.literal(),
                        numeric.fmt_mid(r.alpha_contribution, cfg.sig),
                        f"{r.ratio:.6e}", f"{r.beta_over_log_t:.6e}",
                        "1" if r.reliable else "0"])

    sweep = limitset.simplex_sweep(surface, panel, levels)
    with open(out / "sweep.csv", "w") as fp:
        w = csv.writer(fp, lineterminator="\n")
        w.writerow(["n", "curve", "empirical", "target", "reliable"])
        for r in sweep:
            w.writerow([r.level, r.curve.literal(),
                        numeric.fmt_mid(r.empirical, cfg.sig),
                        numeric.fmt_mid(r.target, cfg.sig),
                        "1" if r.reliable else "0"])

    probes = [limitset.build_probe(surface, n) for n in levels]
    summary = {
        "levels": levels,
        "per_level": [
            {
                "n": p.level,
                "time": float(p.sample.time),
                "spread": float(p.sample.spread),
                "collar_gap": p.collar_gap,
                "reliable": p.reliable,
            }
            for p in probes
        ],
        "ratio_gaps": {str(r.level): r.lhs_rhs_gap for r in rows},
        "beta_ratio_first": decay.rows[0].ratio if decay.rows else None,
        "beta_ratio_last": decay.rows[-1].ratio if decay.rows else None,
        "alpha_slope_positive": decay.alpha_slope > 0,
    }
    with open(out / "summary.json", "w") as fp:
        json.dump(summary, fp, indent=2, sort_keys=True)
        fp.write("\n")

    plots = out / "plotdata"
    plots.mkdir(exist_ok=True)
    _write_xy(plots / "ratio_gap.txt", [(r.level, r.lhs_rhs_gap) for r in rows])
    _write_xy(plots / "collar_gap.txt", [(p.level, p.collar_gap) for p in probes])
    _write_xy(plots / "beta_ratio.txt",
              [(float(r.time), r.ratio) for r in decay.rows])
    for i in range(surface.d + 1):
        pts_emp, pts_tgt = [], []
        for r in sweep:
            if r.curve.torus == i:
                pts_emp.append((r.level, float(r.empirical)))
                pts_tgt.append((r.level, float(r.target)))
        _write_xy(plots / f"sweep_emp_{i}.txt", pts_emp)
        _write_xy(plots / f"sweep_tgt_{i}.txt", pts_tgt)

    unreliable = [p.level for p in probes if not p.reliable]
    if unreliable:
        print(f"unreliable probes at levels {unreliable}", file=sys.stderr)
        return EXIT_UNRELIABLE
    print(f"limit reports written to {out}")
    return EXIT_OK


def _write_xy(path: Path, points) -> None:
    with open(path, "w") as fp:
        for x, y in points:
            fp.write(f"{x:.12g} {y:.12g}\n")


# -- verify ---------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig, family_path: str) -> int:
    numeric.set_precision(cfg.precision)
    surface = _load_surface(family_path)
    fam = surface.family
    suites: list[tuple[str, int, int]] = []   # name, passed, failed

    def run(name: str, checks) -> None:
        passed = failed = 0
        for ok in checks:
            if ok:
                passed += 1
            else:
                failed += 1
        suites.append((name, passed, failed))

    # exact generator conditions (i)-(iv) + seed + odd-q alignment
    def gen_conditions():
        try:
            contfrac.check_family_conditions(fam)
            yield True
        except AssertionError:
            yield False

    run("generator-conditions", gen_conditions())

    # determinant identity p_n q_{n-1} - p_{n-1} q_n = (-1)^{n-1}
    def determinants():
        for i in range(fam.d + 1):
            e = fam.expansion(i)
            for n in range(0, e.depth + 1):
                yield e.p(n) * e.q(n - 1) - e.p(n - 1) * e.q(n) == (-1) ** (n - 1)

    run("determinant-identity", determinants())

    # q_n between prod a_j and prod a_j * prod (1 + 1/a_j), exactly
    rep = contfrac.verify_lemma_slopes(fam)
    run("denominator-product-bounds", [rep.qprod_bounds_ok])
    run("odd-denominator-alignment", [row.odd_q_equal for row in rep.levels])

    # even convergents below theta, odd above
    def bracketing():
        for i in range(fam.d + 1):
            e = fam.expansion(i)
            lo, hi = e.theta_interval()
            for n in range(e.depth + 1):
                conv = e.convergent(n)
                yield conv <= hi if n % 2 == 0 else conv >= lo

    run("convergent-bracketing", bracketing())

    # serialization round-trip
    def roundtrip():
        text = contfrac.family_to_text(fam, s0=surface.s0)
        import io as _io
        fam2, s02 = contfrac.read_family(_io.StringIO(text))
        yield fam2 == fam
        yield s02 == surface.s0
        yield contfrac.family_to_text(fam2, s0=s02) == text

    run("serialization-roundtrip", roundtrip())

    # balanced times equalize horizontal and vertical lengths
    def balance():
        for i in range(fam.d + 1):
            e = fam.expansion(i)
            for n in range(1, e.depth - 1, 3):
                c = surface.convergent_curve(i, n)
                t = geodesic.balanced_time(surface, c)
                h, v = surface.horizontal_vertical(c, t)
                yield (h / v).contains(1)

    run("balance-identity", balance())

    # modulus * length^2 + s0 * h0 = 1 for the flat cylinder
    def cylinder():
        for i in range(fam.d + 1):
            for n in range(0, fam.expansion(i).depth - 1, 4):
                c = surface.convergent_curve(i, n)
                t = geodesic.balanced_time(surface, c)
                geom = surface.cylinder_geometry(c, t)
                if geom.degenerate:
                    yield False
                    continue
                h0, _ = surface.components0(c)
                ident = geom.modulus * geom.core_length ** 2 + h0 * cfg_s0_enc(surface)
                yield ident.contains(1)

    run("cylinder-area-identity", cylinder())

    # flat-length law at balanced time: l^2 * a_{n+1} within [1, 4]
    def flat_law():
        for i in range(fam.d + 1):
            e = fam.expansion(i)
            for n in range(1, e.depth - 1):
                c = surface.convergent_curve(i, n)
                t = geodesic.balanced_time(surface, c)
                val = surface.flat_length(c, t) ** 2 * e.coeff(n + 1)
                yield float(val) >= 1.0 and float(val) <= 4.0

    run("flat-length-law", flat_law())

    failed_total = 0
    for name, passed, failed in suites:
        status = "PASS" if failed == 0 else "FAIL"
        print(f"[{status}] {name}: {passed} ok, {failed} failed")
        failed_total += failed
    return EXIT_OK if failed_total == 0 else EXIT_VERIFY_FAIL


def cfg_s0_enc(surface: SlitSurface):
    return numeric.Enclosure.from_fraction(surface.s0)


# -- parser wiring ----------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slitflow",
        description="Slit-torus geodesic-flow laboratory: coupled slope families, "
                    "length traces, limit-set reports, verification suites.")
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    sub = parser.add_subparsers(dest="cmd", required=True)

    gen = sub.add_parser("generate", help="generate a slope family and audit log")
    for flag in ("d", "K", "mode", "growth_pow", "s0", "precision", "bit_budget", "out"):
        gen.add_argument(f"--{flag.replace('_', '-')}", dest=flag)
    gen.add_argument("--u-file", dest="u_file",
                     help="file of whitespace-separated target tuples, one level per line")

    tr = sub.add_parser("trace", help="length reports for curves at times")
    tr.add_argument("family", help="family file from generate")
    tr.add_argument("--curves", dest="curves",
                    help="comma list of curve literals, e.g. 'T 0 1/0,B 0'")
    tr.add_argument("--times", dest="times", help="comma list or a:b:n grid")
    tr.add_argument("--out", dest="out")
    tr.add_argument("--precision", dest="precision")

    lr = sub.add_parser("limit-report", help="ratio, decay, and sweep datasets")
    lr.add_argument("family")
    for flag in ("levels", "gamma1", "gamma2", "bridge", "panel", "out", "precision"):
        lr.add_argument(f"--{flag}", dest=flag)

    ver = sub.add_parser("verify", help="run the exact and enclosure test suites")
    ver.add_argument("family")
    ver.add_argument("--precision", dest="precision")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    overrides = list(ns.set)
    for key in _CONFIG_FIELDS:
        if getattr(ns, key, None) is not None:
            overrides.append(f"{key}={getattr(ns, key)}")
    try:
        cfg = load_config(ns.config, overrides)
    except (ValueError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if ns.cmd == "generate":
            return cmd_generate(cfg)
        if ns.cmd == "trace":
            return cmd_trace(cfg, ns.family)
        if ns.cmd == "limit-report":
            return cmd_limit_report(cfg, ns.family)
        if ns.cmd == "verify":
            return cmd_verify(cfg, ns.family)
    except (ValueError, OSError, contfrac.InsufficientDepthError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    parser.error("unknown command")


if __name__ == "__main__":
    sys.exit(main())
