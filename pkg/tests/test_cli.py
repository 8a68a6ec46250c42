"""Command-line interface: config resolution, CSV contract, exit codes."""

import csv

import numpy as np
import pytest

from povertytrap import value_threshold_closed
from povertytrap.cli import main


def read_csv(path):
    """Return (config_comment, header, rows, trailer_comments)."""
    config_line = None
    trailers = []
    header = None
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# config:"):
                config_line = line
            elif line.startswith("#"):
                trailers.append(line)
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append(line.split(","))
    return config_line, header, rows, trailers


# ---------------------------------------------------------------------------
# eval


def test_eval_closed_pinned_row(tmp_path):
    out = tmp_path / "eval.csv"
    rc = main([
        "eval", "--evaluator", "closed", "--dist", "beta:1.25",
        "--y", "20", "--x", "20", "--out", str(out),
    ])
    assert rc == 0
    config_line, header, rows, _ = read_csv(out)
    assert header == ["x", "value", "ci_half_width", "method", "y", "seed"]
    assert config_line is not None and "model.delta=0.1" in config_line
    (row,) = rows
    assert float(row[0]) == 20.0
    assert float(row[1]) == pytest.approx(20.0 / (2.25 * 0.1), rel=1e-9)
    assert float(row[2]) == 0.0
    assert row[3] == "closed_form"


def test_eval_closed_rejects_cover(capsys):
    rc = main([
        "eval", "--evaluator", "closed", "--dist", "beta:1.25",
        "--y", "25", "--x", "30", "--cover", "prop:0.5:0.5",
    ])
    assert rc == 2
    err = capsys.readouterr().err
    assert "closed form unavailable; use mc or fixed-point" in err


def test_eval_mc_byte_identical_across_threads(tmp_path):
    outs = []
    for threads, name in ((2, "a.csv"), (5, "b.csv")):
        out = tmp_path / name
        rc = main([
            "eval", "--evaluator", "mc", "--dist", "beta:1.25",
            "--y", "25", "--x", "30", "--n", "20000", "--seed", "42",
            "--threads", str(threads), "--out", str(out),
        ])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_eval_grid_monotone(tmp_path):
    out = tmp_path / "grid.csv"
    rc = main([
        "eval", "--evaluator", "closed", "--dist", "beta:1.25",
        "--y", "40", "--x-grid", "20:100:81", "--out", str(out),
    ])
    assert rc == 0
    _, _, rows, _ = read_csv(out)
    assert len(rows) == 81
    xs = [float(r[0]) for r in rows]
    vals = [float(r[1]) for r in rows]
    assert xs[0] == 20.0 and xs[-1] == 100.0
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_eval_fixed_point_matches_closed(tmp_path):
    out = tmp_path / "fp.csv"
    rc = main([
        "eval", "--evaluator", "fixed-point", "--dist", "beta:1.25",
        "--y", "25", "--x", "30,50", "--out", str(out),
    ])
    assert rc == 0
    _, _, rows, _ = read_csv(out)
    for row in rows:
        x = float(row[0])
        closed = value_threshold_closed(x, 25.0, _base_params(), 1.25)
        assert float(row[1]) == pytest.approx(closed, rel=1e-5)
        assert row[3] == "fixed_point"


def _base_params():
    from povertytrap import ModelParams

    return ModelParams(a=0.10, b=3.0, c=0.40, I_star=60.0, lam=1.0, delta=0.10)


# ---------------------------------------------------------------------------
# config handling


def test_config_file_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model.delta = 0.2\ndist.kind = beta\ndist.alpha = 1.25\n")
    out = tmp_path / "out.csv"
    rc = main([
        "eval", "--config", str(cfg), "--evaluator", "closed",
        "--delta", "0.3", "--y", "20", "--x", "20", "--out", str(out),
    ])
    assert rc == 0
    config_line, _, rows, _ = read_csv(out)
    assert "model.delta=0.3" in config_line  # flag wins over file
    assert float(rows[0][1]) == pytest.approx(20.0 / (2.25 * 0.3), rel=1e-9)


def test_set_overrides_everything(tmp_path):
    out = tmp_path / "out.csv"
    rc = main([
        "eval", "--evaluator", "closed", "--delta", "0.3",
        "--set", "model.delta=0.5", "--y", "20", "--x", "20", "--out", str(out),
    ])
    assert rc == 0
    config_line, _, rows, _ = read_csv(out)
    assert "model.delta=0.5" in config_line
    assert float(rows[0][1]) == pytest.approx(20.0 / (2.25 * 0.5), rel=1e-9)


def test_bad_config_file_line_number(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model.delta 0.2\n")
    rc = main(["eval", "--config", str(cfg), "--y", "20", "--x", "20"])
    assert rc == 2
    assert "bad.cfg:1:" in capsys.readouterr().err


def test_exit_code_two_on_config_errors(capsys):
    # missing required threshold
    assert main(["eval", "--evaluator", "closed", "--x", "25"]) == 2
    # both direct and income-based critical levels
    assert main([
        "eval", "--evaluator", "closed", "--y", "25", "--x", "30",
        "--i-star", "60", "--x-star", "20",
    ]) == 2
    # malformed distribution spec
    assert main(["eval", "--dist", "beta", "--y", "25", "--x", "30"]) == 2
    # threshold below the critical level
    assert main([
        "eval", "--evaluator", "closed", "--y", "10", "--x", "30",
    ]) == 2
    # malformed grid
    assert main([
        "eval", "--evaluator", "closed", "--y", "25", "--x-grid", "20:100:0",
    ]) == 2
    capsys.readouterr()


# ---------------------------------------------------------------------------
# optimize


def test_optimize_closed_summary(tmp_path, capsys):
    out = tmp_path / "opt.csv"
    rc = main([
        "optimize", "--evaluator", "closed", "--dist", "beta:1.25",
        "--set", "optimize.tol_y=0.01", "--out", str(out),
    ])
    assert rc == 0
    _, header, rows, trailers = read_csv(out)
    assert header == ["y", "objective"]
    assert len(rows) >= 64
    trailer = "\n".join(trailers)
    assert "y_star=" in trailer and "verified=true" in trailer
    y_star = float(trailer.split("y_star=")[1].split()[0])
    assert y_star == pytest.approx(26.6637, abs=0.02)
    assert "y_star=" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# compare-cd


def test_compare_boundary_and_decision_flip(tmp_path):
    out = tmp_path / "cmp.csv"
    rc = main([
        "compare-cd", "--dist", "beta:1", "--delta", "0.2",
        "--lam-grid", "2:8:4", "--out", str(out),
    ])
    assert rc == 0
    _, header, rows, _ = read_csv(out)
    assert header[:4] == ["lam", "delta", "b", "mu"]
    by_lam = {float(r[0]): r for r in rows}
    # boundary rate lam = (b - delta) / (1 - mu) = (3 - 0.2) / 0.5 = 5.6
    for lam, row in by_lam.items():
        assert float(row[5]) == pytest.approx(5.6, rel=1e-12)
        decision = row[6]
        if lam < 5.6:
            assert decision == "lumpsum_cheaper"
        else:
            assert decision == "perpetual_cheaper"


def test_compare_lumpsum_case(tmp_path):
    out = tmp_path / "cmp2.csv"
    rc = main([
        "compare-cd", "--dist", "beta:9", "--b", "1", "--delta", "0.05",
        "--lam-grid", "2:2:1", "--out", str(out),
    ])
    assert rc == 0
    _, _, rows, _ = read_csv(out)
    (row,) = rows
    assert row[6] == "lumpsum_cheaper"  # b = 1 > 0.05 + 2*(1 - 0.9) = 0.25


# ---------------------------------------------------------------------------
# hjb-check


def test_hjb_check_artifact(tmp_path):
    out = tmp_path / "hjb.csv"
    rc = main([
        "hjb-check", "--source", "fixed-point", "--dist", "beta:1.25",
        "--y", "26.6637", "--x-grid", "21:200:12", "--out", str(out),
    ])
    assert rc == 0
    _, header, rows, trailers = read_csv(out)
    assert header == ["x", "deriv_slack", "generator_residual"]
    assert len(rows) == 12
    trailer = "\n".join(trailers)
    assert "passed=" in trailer
    assert "min_deriv_slack=" in trailer


def test_hjb_check_failing_candidate_still_exits_zero(tmp_path):
    out = tmp_path / "hjb_bad.csv"
    rc = main([
        "hjb-check", "--source", "fixed-point", "--dist", "beta:1.25",
        "--y", "21.6637", "--x-grid", "22:200:8", "--out", str(out),
    ])
    assert rc == 0  # diagnostic artifact: failure is data, not an error
    _, _, _, trailers = read_csv(out)
    assert "passed=false" in "\n".join(trailers)


# ---------------------------------------------------------------------------
# premium


def test_premium_stdout_values(capsys):
    rc = main(["premium", "--dist", "beta:1.25", "--cover", "prop:0.5:0.5"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "p_R=0.333333333333" in out
    assert "x_star_R=22.5" in out
    assert "r_R=0.96" in out


def test_premium_infeasible_exits_two(capsys):
    rc = main(["premium", "--dist", "beta:1.25", "--cover", "prop:0:8"])
    assert rc == 2
    assert "premium" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sweep


def test_sweep_long_format(tmp_path):
    out = tmp_path / "sweep.csv"
    rc = main([
        "sweep", "--command", "premium", "--dist", "beta:1.25",
        "--sweep", "cover.gamma=0.1,0.5", "--set", "cover.kind=excess_of_loss",
        "--set", "cover.l=0.5", "--long", "--out", str(out),
    ])
    assert rc == 0
    _, header, rows, _ = read_csv(out)
    assert "cover.gamma" in header and "p_R" in header
    assert len(rows) == 2
    p_low = float(rows[0][header.index("p_R")])
    p_high = float(rows[1][header.index("p_R")])
    assert p_high == pytest.approx(p_low * 1.5 / 1.1, rel=1e-9)


def test_sweep_per_combo_files(tmp_path):
    out_dir = tmp_path / "runs"
    rc = main([
        "sweep", "--command", "eval", "--evaluator", "closed",
        "--dist", "beta:1.25", "--y", "25", "--x", "30",
        "--sweep", "model.delta=0.1,0.2,0.3", "--out-dir", str(out_dir),
    ])
    assert rc == 0
    files = sorted(out_dir.glob("*.csv"))
    assert len(files) == 3
    for f in files:
        config_line, _, rows, _ = read_csv(f)
        assert config_line is not None
        assert len(rows) == 1
