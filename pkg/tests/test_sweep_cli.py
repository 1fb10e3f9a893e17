import json
import os
import signal
import subprocess
import sys
import time
from decimal import Decimal

import mpmath

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lchi import cli
from lchi.sweep import (
    CSV_FIELDS,
    CsvFormatError,
    MqCsvRow,
    emit_rows,
    failures_path,
    load_checkpoint,
    parse_rows,
    read_csv,
    run_sweep,
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)
rows_strategy = st.lists(
    st.builds(
        MqCsvRow,
        q=st.integers(3, 10**7),
        m_q=finite,
        argmin_j=st.integers(1, 10**7),
        argmin_parity=st.sampled_from(["odd", "even"]),
        M_q=finite,
        ek=finite,
        m_q_normalized=finite,
        precision_used=st.sampled_from(["extended64", "quad113"]),
        escalated=st.booleans(),
    ),
    max_size=20,
)


@settings(max_examples=200, deadline=None)
@given(rows_strategy)
def test_csv_round_trip(rows):
    assert parse_rows(emit_rows(rows)) == rows


def test_csv_header_and_malformed_lines():
    text = emit_rows([])
    assert text.strip() == ",".join(CSV_FIELDS)
    bad = text + "7,0.1,1,odd,1.0,0.5,1.04,extended64,0\n" + "11,zero,1,odd,1,1,1,extended64,0\n" + "13,0.1,1,sideways,1,1,1,extended64,2\n"
    with pytest.raises(CsvFormatError) as exc:
        parse_rows(bad)
    assert [n for n, _ in exc.value.problems] == [3, 4]


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compute_small_range(tmp_path, capsys, table1):
    out = tmp_path / "a.csv"
    code, text, _ = run(["compute", "--min", "3", "--max", "1000", "--out", str(out)], capsys)
    assert code == 0 and "167 primes" in text
    rows = read_csv(out)
    assert len(rows) == 167 and [r.q for r in rows] == sorted(r.q for r in rows)
    r997 = rows[-1]
    assert r997.q == 997 and abs(Decimal(repr(r997.m_q)) - Decimal(table1[997])) < Decimal("1e-16")
    first = out.read_bytes()
    mtime = os.path.getmtime(tmp_path / "a.csv.ckpt")
    t0 = time.time()
    assert run(["compute", "--min", "3", "--max", "1000", "--out", str(out)], capsys)[0] == 0
    assert out.read_bytes() == first
    assert time.time() - t0 < 5
    assert os.path.getmtime(tmp_path / "a.csv.ckpt") >= mtime
    assert not failures_path(out).exists()


def test_threads_do_not_change_output(tmp_path):
    run_sweep(3, 2000, tmp_path / "one.csv", threads=1)
    run_sweep(3, 2000, tmp_path / "two.csv", threads=2)
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()


def test_torn_checkpoint_line_is_ignored(tmp_path):
    out = tmp_path / "t.csv"
    run_sweep(3, 500, out)
    reference = out.read_bytes()
    ck = tmp_path / "t.csv.ckpt"
    lines = ck.read_text().splitlines(keepends=True)
    ck.write_text("".join(lines[:40]) + lines[40][:25])
    entries = load_checkpoint(ck)
    assert len(entries) == 40
    out.unlink()
    m = run_sweep(3, 500, out)
    assert out.read_bytes() == reference
    assert set(m.counts()) <= {"done", "escalated"}


def test_checkpoint_resume_after_kill(tmp_path):
    out, ck = tmp_path / "k.csv", tmp_path / "k.ckpt"
    cmd = [sys.executable, "-m", "lchi.cli", "compute", "--min", "3", "--max", "6000", "--out", str(out), "--checkpoint", str(ck)]
    proc = subprocess.Popen(cmd, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    deadline = time.time() + 300
    while time.time() < deadline and proc.poll() is None:
        if ck.exists() and ck.read_text().count("\n") >= 100:
            break
        time.sleep(0.05)
    proc.send_signal(signal.SIGKILL)
    proc.wait()
    done_before = len(load_checkpoint(ck))
    assert 0 < done_before < 783 and not out.exists()
    subprocess.run(cmd, check=True, stdout=subprocess.DEVNULL)
    run_sweep(3, 6000, tmp_path / "clean.csv")
    assert out.read_bytes() == (tmp_path / "clean.csv").read_bytes()


def test_failed_rows_go_to_sidecar(tmp_path, monkeypatch):
    from lchi import sweep

    real = sweep.compute_record

    def flaky(q, precision):
        if q == 13:
            raise ArithmeticError("synthetic failure")
        return real(q, precision)

    monkeypatch.setattr(sweep, "compute_record", flaky)
    out = tmp_path / "f.csv"
    m = run_sweep(3, 30, out)
    assert m.status[13] == "failed"
    assert 13 not in [r.q for r in read_csv(out)]
    assert "synthetic failure" in failures_path(out).read_text()
    monkeypatch.setattr(sweep, "compute_record", real)
    m = run_sweep(3, 30, out)
    assert m.status[13] == "done" and not failures_path(out).exists()
    assert 13 in [r.q for r in read_csv(out)]


def test_compute_bad_ranges(tmp_path, capsys):
    assert run(["compute", "--min", "10", "--max", "5", "--out", str(tmp_path / "x.csv")], capsys)[0] == 1
    assert run(["compute", "--min", "1", "--max", "5", "--out", str(tmp_path / "x.csv")], capsys)[0] == 1
    assert run(["compute", "--min", "3", "--max", "5", "--out", "/proc/nope/x.csv"], capsys)[0] == 1
    assert run(["compute", "--min", "3"], capsys)[0] == 1
    assert run(["frobnicate"], capsys)[0] == 1


@pytest.fixture(scope="module")
def small_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("csv") / "small.csv"
    run_sweep(3, 1000, out)
    return out


def test_verify_bounds(small_csv, capsys):
    code, text, _ = run(["verify-bounds", "--csv", str(small_csv)], capsys)
    assert code == 0
    assert "167 rows checked" in text and "0 violations" in text
    assert "at q=7" in text.split("tightest lower margin")[1].splitlines()[0]
    rows = read_csv(small_csv)
    r7 = next(r for r in rows if r.q == 7)
    assert 21 / 1400 < r7.m_q < 5 / 7**0.5
    rep = cli.verify_bounds(rows)
    assert rep.lower_margin[1] == 7 and rep.upper_margin[0] < 1
    code, text, _ = run(["verify-bounds", "--csv", str(small_csv), "--c2", "0.5"], capsys)
    assert code == 2 and "q=3" in text


def test_verify_bounds_empty_and_malformed(tmp_path, capsys):
    empty = tmp_path / "e.csv"
    empty.write_text(emit_rows([]))
    code, text, _ = run(["verify-bounds", "--csv", str(empty)], capsys)
    assert code == 0 and "0 rows checked" in text
    bad = tmp_path / "b.csv"
    bad.write_text(emit_rows([]) + "3,x,1,odd,1,1,1,extended64,0\n")
    code, _, err = run(["verify-bounds", "--csv", str(bad)], capsys)
    assert code == 1 and "b.csv:2:" in err
    assert run(["verify-bounds", "--csv", str(tmp_path / "missing.csv")], capsys)[0] == 1


def test_stats(small_csv, capsys):
    code, text, _ = run(["stats", "--csv", str(small_csv)], capsys)
    assert code == 0
    s = cli.stats(read_csv(small_csv))
    assert s.max_mq[1] == 3 and s.max_mq[0] == pytest.approx(0.3682816159701500, rel=1e-15)
    assert s.min_norm[1] == 7 and s.min_norm[0] == pytest.approx(1.042379, abs=1e-6)
    assert s.odd + s.even == 167
    assert "max m_q = 0.3682816159701" in text


def test_plotdata(small_csv, tmp_path, capsys):
    d = tmp_path / "plots"
    assert run(["plotdata", "--csv", str(small_csv), "--out-dir", str(d)], capsys)[0] == 0
    qs = [int(line.split()[0]) for line in (d / "mq_100_1000.dat").read_text().splitlines()]
    from lchi.arith import sieve_primes

    assert qs == [p for p in sieve_primes(1000).tolist() if p >= 100]
    for lo, hi in [(1, 10), (10, 100), (100, 1000)]:
        mq = [tuple(map(float, l.split())) for l in (d / f"mq_{lo}_{hi}.dat").read_text().splitlines()]
        up = [tuple(map(float, l.split())) for l in (d / f"upper_{lo}_{hi}.dat").read_text().splitlines()]
        assert all(a[0] == b[0] and a[1] < b[1] for a, b in zip(mq, up))
        norm = [float(l.split()[1]) for l in (d / f"mqnorm_{lo}_{hi}.dat").read_text().splitlines()]
        assert min(norm) >= 1
        assert set((d / f"one_{lo}_{hi}.dat").read_text().split()[1::2]) == {"1"}


def test_single(capsys, table1):
    code, text, _ = run(["single", "--q", "13", "--digits", "30"], capsys)
    assert code == 0
    line = next(l for l in text.splitlines() if l.startswith("m_q = "))
    assert line.split("= ")[1] == table1[13][: len(line.split("= ")[1])]
    r = cli.single(283, 30)
    with mpmath.workprec(128):
        assert abs(r.m_q - mpmath.mpf(table1[283])) < 5e-31  # table rounds at 30 decimals
    assert run(["single", "--q", "2"], capsys)[0] == 1
    assert run(["single", "--q", "15"], capsys)[0] == 1
    code, _, err = run(["single", "--q", "7", "--digits", "31"], capsys)
    assert code == 1 and "30" in err


def test_single_reports_achievable_digits(monkeypatch, capsys):
    monkeypatch.setattr(cli, "SINGLE_TOLS", (1e-20,))
    code, _, err = run(["single", "--q", "101", "--digits", "30"], capsys)
    assert code == 1 and "digits are achievable" in err


def test_random_model_commands(tmp_path, capsys):
    code, text, _ = run(["random-model", "charfun", "--u", "0", "--v", "0"], capsys)
    assert code == 0 and "phi_rand(0.0, 0.0) = 1.0" in text and "seed=0" in text
    code, text, _ = run(["random-model", "moments", "--k", "1", "--l", "1", "--cutoff", "100000"], capsys)
    assert code == 0
    assert float(text.split("moment = ")[1].split()[0]) == pytest.approx(0.805, abs=2e-3)
    assert float(text.split("tail bound = ")[1].split()[0]) > 0
    out = tmp_path / "s.csv"
    code, text, _ = run(["random-model", "sample", "--samples", "1000", "--seed", "9", "--out", str(out)], capsys)
    assert code == 0 and "seed=9" in text and out.exists()
    code, text, _ = run(["random-model", "discrepancy", "--q", "101", "--samples", "20000", "--seed", "9"], capsys)
    assert code == 0 and "seed=9" in text and "discrepancy estimate" in text
    assert run(["random-model", "charfun", "--u", "1", "--v", "0", "--prime-cutoff", "10"], capsys)[0] == 1
    assert run(["random-model"], capsys)[0] == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lchi.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify-bounds" in res.stdout
