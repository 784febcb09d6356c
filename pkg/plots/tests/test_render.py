"""Renderer checks, including the two figure-level acceptance criteria:
boundary behavior on the heatmap grid (S1) and byte-stable SVG output on
a committed sweep CSV (S2)."""

import pathlib
import subprocess
import sys

import pytest

PLOTS = pathlib.Path(__file__).resolve().parents[1]
sys.path.insert(0, str(PLOTS))

import render  # noqa: E402

GOLDEN = PLOTS / "tests" / "data" / "golden_sweep.csv"


def run_renderer(*args):
    return subprocess.run(
        [sys.executable, str(PLOTS / "render.py"), *args],
        capture_output=True, text=True,
    )


def cli_heatmap(mu, out):
    res = subprocess.run(
        [sys.executable, "-m", "dpcusum", "heatmap", "--mu", str(mu), "--out", str(out)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr


@pytest.mark.parametrize("mu", [0.1, 0.25, 0.5])
def test_s1_heatmap_boundary(tmp_path, mu):
    csv_path = tmp_path / f"grid_{mu}.csv"
    cli_heatmap(mu, csv_path)
    rows = render.read_rows(csv_path, render.HEATMAP_HEADER)
    assert len(rows) == 3600

    at_or_above = [r for r in rows if float(r["epsilon"]) >= 2.0 * float(r["a_delta"])]
    below = [r for r in rows if float(r["epsilon"]) < 2.0 * float(r["a_delta"])]
    assert at_or_above, "grid never reaches the boundary"
    assert below, "grid never falls below the boundary"
    # on and above the boundary the privacy penalty vanishes identically
    assert all(float(r["h"]) == 1.0 for r in at_or_above)
    assert all(float(r["h"]) < 1.0 for r in below)

    svg_path = tmp_path / f"grid_{mu}.svg"
    res = run_renderer("--kind", "heatmap", "--in", str(csv_path), "--out", str(svg_path))
    assert res.returncode == 0, res.stderr
    svg = svg_path.read_text()
    assert f"{render.BOUNDARY_GID}-mu{mu}" in svg
    assert "stroke-dasharray" in svg


def test_s2_delay_svg_byte_stable(tmp_path):
    out1, out2 = tmp_path / "a.svg", tmp_path / "b.svg"
    for out in (out1, out2):
        res = run_renderer("--kind", "delay", "--in", str(GOLDEN), "--out", str(out))
        assert res.returncode == 0, res.stderr
    b1, b2 = out1.read_bytes(), out2.read_bytes()
    assert b1 == b2
    assert b1.startswith(b"<?xml")
    assert len(b1) > 10_000


def test_delay_curve_series_structure(tmp_path):
    out = tmp_path / "c.svg"
    res = run_renderer("--kind", "delay", "--in", str(GOLDEN), "--out", str(out))
    assert res.returncode == 0
    rows = render.read_rows(GOLDEN, render.SWEEP_HEADER)
    labels = {render._series_label(r["detector"], r["epsilon"]) for r in rows}
    svg = out.read_text()
    for label in labels:
        assert label in svg  # legend carries one entry per (detector, eps)


def test_single_series_monotone():
    rows = render.read_rows(GOLDEN, render.SWEEP_HEADER)
    one = [r for r in rows if r["detector"] == "cusum"]
    pts = sorted((float(r["arl_est"]), float(r["wadd_est"])) for r in one)
    assert all(a[1] < b[1] for a, b in zip(pts, pts[1:]))  # delay grows with ARL


def test_header_mismatch_refused(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    out = tmp_path / "bad.svg"
    res = run_renderer("--kind", "delay", "--in", str(bad), "--out", str(out))
    assert res.returncode == 2
    assert "a,b,c" in res.stderr  # the offending header is reported
    assert not out.exists()


def test_empty_body_refused(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(render.SWEEP_HEADER + "\n")
    out = tmp_path / "empty.svg"
    res = run_renderer("--kind", "delay", "--in", str(empty), "--out", str(out))
    assert res.returncode == 2
    assert "empty" in res.stderr
    assert not out.exists()


def test_multiple_inputs_merge(tmp_path):
    lines = GOLDEN.read_text().splitlines()
    header = next(ln for ln in lines if not ln.startswith("#"))
    body = [ln for ln in lines if not ln.startswith("#")][1:]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    a.write_text("\n".join([header] + body[: len(body) // 2]) + "\n")
    b.write_text("\n".join([header] + body[len(body) // 2 :]) + "\n")
    out = tmp_path / "merged.svg"
    res = run_renderer("--kind", "delay", "--in", str(a), "--in", str(b), "--out", str(out))
    assert res.returncode == 0, res.stderr
    assert out.exists()
