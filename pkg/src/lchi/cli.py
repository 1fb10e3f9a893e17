"""Command-line interface: ``lchi <command> ...``.

Exit status is 0 on success, 2 when ``verify-bounds`` finds a violation and
1 on any operational error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import mpmath

from . import cache, randmodel, sweep
from .arith import build_character_table, von_mangoldt_table
from .lderiv import compute_spectrum, mq_record
from .precision import Precision, PrecisionError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2
MAX_DIGITS = 30
# S-table tolerances tried in turn by ``single``
SINGLE_TOLS = (1e-33, 1e-35)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are operational errors (status 1), keeping 2 for violations
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# compute / single


def cmd_compute(args) -> int:
    def progress(i, total, q):
        if args.verbose and (i % 100 == 0 or i == total):
            print(f"{i}/{total} (q={q})", file=sys.stderr)

    m = sweep.run_sweep(
        args.min,
        args.max,
        args.out,
        checkpoint=args.checkpoint,
        threads=args.threads,
        precision=args.precision,
        progress=progress,
    )
    counts = m.counts()
    summary = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    print(f"{len(m.status)} primes in [{args.min}, {args.max}]: {summary}")
    print(f"wrote {args.out}")
    if counts.get("failed"):
        print(f"failures listed in {sweep.failures_path(args.out)}")
    return EXIT_OK


@dataclass
class SingleResult:
    q: int
    m_q: mpmath.mpf
    err: float
    digits_available: int
    argmin_j: int
    argmin_parity: str
    M_q: float
    ek: float


def achievable_digits(value, err: float) -> int:
    if err <= 0:
        return MAX_DIGITS
    return max(0, int(math.floor(-math.log10(err / abs(float(value))))))


def single(q: int, digits: int) -> SingleResult:
    """``m_q`` at quad precision with at least ``digits`` certified digits."""
    if q < 3 or q % 2 == 0:
        raise CliError(f"q must be an odd prime, got {q}")
    if not 1 <= digits <= MAX_DIGITS:
        raise CliError(f"digits must be between 1 and {MAX_DIGITS}")
    best = None
    for tol in SINGLE_TOLS:
        try:
            spec = compute_spectrum(q, Precision.QUAD113, tol=tol)
        except PrecisionError:
            break
        rec = mq_record(spec)
        avail = achievable_digits(rec.m_q_mp, rec.m_q_err)
        best = (rec, avail)
        if avail >= digits:
            break
    if best is None:
        raise CliError("quad precision evaluation failed")
    rec, avail = best
    if avail < digits:
        raise CliError(f"only {avail} digits are achievable at quad113 for q={q}")
    return SingleResult(q, rec.m_q_mp, rec.m_q_err, avail, rec.argmin_j, rec.argmin_parity, rec.M_q, rec.ek)


def cmd_single(args) -> int:
    try:
        build_character_table(args.q)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    r = single(args.q, args.digits)
    with mpmath.workprec(128):
        m = mpmath.nstr(r.m_q, args.digits, strip_zeros=False)
    print(f"q = {r.q}")
    print(f"m_q = {m}")
    print(f"error bound = {r.err:.2e} ({r.digits_available} digits available)")
    print(f"argmin j = {r.argmin_j} ({r.argmin_parity})")
    print(f"M_q = {r.M_q!r}")
    print(f"Euler-Kronecker constant = {r.ek!r}")
    print("precision = quad113")
    return EXIT_OK


# ---------------------------------------------------------------------------
# CSV reports


def _read_rows(path) -> list[sweep.MqCsvRow]:
    path = Path(path)
    if not path.exists():
        raise CliError(f"no such file: {path}")
    text = path.read_text()
    try:
        return sweep.parse_rows(text)
    except sweep.CsvFormatError as exc:
        for n, msg in exc.problems:
            print(f"{path}:{n}: {msg}", file=sys.stderr)
        raise CliError(f"{len(exc.problems)} malformed row(s) in {path}") from None


@dataclass
class BoundsReport:
    checked: int
    violations: list
    lower_margin: tuple | None  # (ratio m_q / (c1/q), q)
    upper_margin: tuple | None  # (ratio m_q / (c2/sqrt q), q)


def verify_bounds(rows, c1_num: int = 21, c1_den: int = 200, c2: float = 5.0) -> BoundsReport:
    """Check ``c1/q < m_q < c2/sqrt(q)`` row by row."""
    viol = []
    lower = upper = None
    for r in rows:
        lo = c1_num / (c1_den * r.q)
        hi = c2 / math.sqrt(r.q)
        if not (r.m_q * c1_den * r.q > c1_num and r.m_q < hi):
            viol.append((r.q, r.m_q, lo, hi))
        lr = r.m_q / lo
        ur = r.m_q / hi
        if lower is None or lr < lower[0]:
            lower = (lr, r.q)
        if upper is None or ur > upper[0]:
            upper = (ur, r.q)
    return BoundsReport(len(rows), viol, lower, upper)


def cmd_verify_bounds(args) -> int:
    rows = _read_rows(args.csv)
    rep = verify_bounds(rows, args.c1_num, args.c1_den, args.c2)
    print(f"{rep.checked} rows checked")
    print(f"bounds: {args.c1_num}/({args.c1_den} q) < m_q < {args.c2}/sqrt(q)")
    if rep.lower_margin:
        print(f"tightest lower margin: m_q/(c1/q) = {rep.lower_margin[0]:.9f} at q={rep.lower_margin[1]}")
        print(f"tightest upper margin: m_q/(c2/sqrt q) = {rep.upper_margin[0]:.9f} at q={rep.upper_margin[1]}")
    print(f"{len(rep.violations)} violations")
    for q, m, lo, hi in rep.violations:
        print(f"  q={q}: m_q={m!r} not in ({lo!r}, {hi!r})")
    return EXIT_VIOLATION if rep.violations else EXIT_OK


@dataclass
class Stats:
    rows: int
    odd: int
    even: int
    escalated: int
    max_mq: tuple | None
    min_mq: tuple | None
    min_norm: tuple | None
    max_norm: tuple | None


def stats(rows) -> Stats:
    if not rows:
        return Stats(0, 0, 0, 0, None, None, None, None)
    odd = sum(r.argmin_parity == "odd" for r in rows)
    key_m = lambda r: (r.m_q, r.q)  # noqa: E731
    key_n = lambda r: (r.m_q_normalized, r.q)  # noqa: E731
    hi, lo = max(rows, key=key_m), min(rows, key=key_m)
    nlo, nhi = min(rows, key=key_n), max(rows, key=key_n)
    return Stats(
        rows=len(rows),
        odd=odd,
        even=len(rows) - odd,
        escalated=sum(r.escalated for r in rows),
        max_mq=(hi.m_q, hi.q),
        min_mq=(lo.m_q, lo.q),
        min_norm=(nlo.m_q_normalized, nlo.q),
        max_norm=(nhi.m_q_normalized, nhi.q),
    )


def cmd_stats(args) -> int:
    s = stats(_read_rows(args.csv))
    print(f"{s.rows} rows")
    if not s.rows:
        return EXIT_OK
    print(f"odd-character minimisers: {s.odd} ({100 * s.odd / s.rows:.2f}%)")
    print(f"even-character minimisers: {s.even} ({100 * s.even / s.rows:.2f}%)")
    print(f"max m_q = {s.max_mq[0]!r} at q={s.max_mq[1]}")
    print(f"min m_q = {s.min_mq[0]!r} at q={s.min_mq[1]}")
    print(f"min m'_q = {s.min_norm[0]!r} at q={s.min_norm[1]}")
    print(f"max m'_q = {s.max_norm[0]!r} at q={s.max_norm[1]}")
    print(f"escalated to quad: {s.escalated}")
    return EXIT_OK


def decade_of(q: int) -> tuple[int, int]:
    lo = 10 ** (len(str(q)) - 1)
    return lo, 10 * lo


def plotdata(rows, out_dir, c2: float = 5.0) -> list[Path]:
    """Per-decade ``q m_q`` / ``q m'_q`` files and reference-curve overlays."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups: dict[tuple[int, int], list] = {}
    for r in sorted(rows, key=lambda r: r.q):
        groups.setdefault(decade_of(r.q), []).append(r)
    written = []
    for (lo, hi), rs in sorted(groups.items()):
        tag = f"{lo}_{hi}"
        files = {
            f"mq_{tag}.dat": [f"{r.q} {r.m_q!r}" for r in rs],
            f"mqnorm_{tag}.dat": [f"{r.q} {r.m_q_normalized!r}" for r in rs],
            f"upper_{tag}.dat": [f"{r.q} {c2 / math.sqrt(r.q)!r}" for r in rs],
            f"one_{tag}.dat": [f"{r.q} 1" for r in rs],
        }
        for name, lines in files.items():
            p = out_dir / name
            p.write_text("\n".join(lines) + "\n")
            written.append(p)
    return written


def cmd_plotdata(args) -> int:
    files = plotdata(_read_rows(args.csv), args.out_dir)
    print(f"wrote {len(files)} files to {args.out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# random model


def _config(args, **over) -> randmodel.RandomModelConfig:
    kw = dict(
        prime_cutoff=args.prime_cutoff,
        samples=getattr(args, "samples", 1),
        seed=args.seed,
        quadrature_points=getattr(args, "quad_points", 64),
    )
    kw.update(over)
    return randmodel.RandomModelConfig(**kw)


def cmd_rm_sample(args) -> int:
    cfg = _config(args)
    z = randmodel.sample_ld(cfg, workers=args.workers)
    out = Path(args.out)
    if out.suffix == ".csv":
        randmodel.save_samples_csv(out, z, cfg)
    else:
        cache.save_samples(out, z, cfg.prime_cutoff)
    print(f"seed={cfg.seed} prime_cutoff={cfg.prime_cutoff} samples={cfg.samples}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_rm_charfun(args) -> int:
    cfg = _config(args, samples=1)
    val = randmodel.phi_rand(args.u, args.v, cfg)
    print(f"seed={cfg.seed} prime_cutoff={cfg.prime_cutoff}")
    print(f"phi_rand({args.u!r}, {args.v!r}) = {val.real!r} {val.imag:+.17g}i")
    print(f"|phi_rand| = {abs(val)!r}")
    return EXIT_OK


def cmd_rm_discrepancy(args) -> int:
    cfg = _config(args)
    spec = compute_spectrum(args.q)
    z = randmodel.sample_ld(cfg, workers=args.workers)
    d = randmodel.discrepancy_estimate(spec, z, grid=args.grid)
    print(f"seed={cfg.seed} prime_cutoff={cfg.prime_cutoff} samples={cfg.samples} q={args.q} grid={args.grid}")
    print(f"discrepancy estimate = {d!r}")
    return EXIT_OK


def cmd_rm_moments(args) -> int:
    lt = von_mangoldt_table(args.cutoff)
    spec = randmodel.MomentSpec(args.k, args.l, args.cutoff)
    value, tail = randmodel.exact_moment(spec, lt)
    print(f"seed={args.seed} cutoff={args.cutoff} k={args.k} l={args.l}")
    print(f"moment = {value!r}")
    print(f"tail bound = {tail!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lchi", description="Logarithmic derivatives of Dirichlet L-functions at s=1.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="sweep a range of prime moduli into a CSV")
    c.add_argument("--min", type=int, required=True)
    c.add_argument("--max", type=int, required=True)
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--precision", choices=["extended", "quad"], default="extended")
    c.add_argument("--out", required=True)
    c.add_argument("--checkpoint", default=None)
    c.add_argument("--verbose", action="store_true")
    c.set_defaults(func=cmd_compute)

    s = sub.add_parser("single", help="m_q for one modulus at quad precision")
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--digits", type=int, default=20)
    s.set_defaults(func=cmd_single)

    v = sub.add_parser("verify-bounds", help="check c1/q < m_q < c2/sqrt(q)")
    v.add_argument("--csv", required=True)
    v.add_argument("--c1-num", type=int, default=21)
    v.add_argument("--c1-den", type=int, default=200)
    v.add_argument("--c2", type=float, default=5.0)
    v.set_defaults(func=cmd_verify_bounds)

    st = sub.add_parser("stats", help="parity split and extremes of a sweep CSV")
    st.add_argument("--csv", required=True)
    st.set_defaults(func=cmd_stats)

    pd = sub.add_parser("plotdata", help="emit per-decade plot data files")
    pd.add_argument("--csv", required=True)
    pd.add_argument("--out-dir", required=True)
    pd.set_defaults(func=cmd_plotdata)

    rm = sub.add_parser("random-model", help="random model utilities")
    rsub = rm.add_subparsers(dest="rm_command", required=True)

    def common(sp, samples=True):
        sp.add_argument("--prime-cutoff", type=int, default=10_000)
        sp.add_argument("--seed", type=int, default=0)
        if samples:
            sp.add_argument("--samples", type=int, default=1_000_000)
            sp.add_argument("--workers", type=int, default=1)

    a = rsub.add_parser("sample")
    common(a)
    a.add_argument("--out", required=True, help=".csv for text, anything else for binary")
    a.set_defaults(func=cmd_rm_sample)

    b = rsub.add_parser("charfun")
    common(b, samples=False)
    b.add_argument("--u", type=float, required=True)
    b.add_argument("--v", type=float, required=True)
    b.add_argument("--quad-points", type=int, default=64)
    b.set_defaults(func=cmd_rm_charfun)

    d = rsub.add_parser("discrepancy")
    common(d)
    d.add_argument("--q", type=int, required=True)
    d.add_argument("--grid", type=int, default=64)
    d.set_defaults(func=cmd_rm_discrepancy)

    m = rsub.add_parser("moments")
    m.add_argument("--k", type=int, required=True)
    m.add_argument("--l", type=int, required=True)
    m.add_argument("--cutoff", type=int, default=10**6)
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=cmd_rm_moments)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    try:
        return args.func(args)
    except (CliError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
