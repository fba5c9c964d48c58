"""Exit criteria. Each test prints one PASS/FAIL line, also collected into
the terminal summary."""
import csv
import io
import time

import numpy as np
import pytest

from sdaell import problems
from sdaell.brownian import at_resolution, generate
from sdaell.cli import main
from sdaell.model import check_index1, check_monotone, grid_samples, jacobian
from sdaell.pencil import projector_bundle, pseudo_inverse
from sdaell.stepper import DEFAULT_OPTS, constraint_residual, integrate, step_ll


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def read_rates(path):
    with open(path) as fh:
        return [float(r["rate"]) for r in csv.DictReader(fh)]


def test_c1_projector_reproduction(record):
    start = time.perf_counter()
    a = problems.PAPER_A
    pinv = pseudo_inverse(a)
    b = projector_bundle(a)
    elapsed = time.perf_counter() - start
    worst = max(
        np.max(np.abs(pinv - problems.PAPER_A_PINV)),
        np.max(np.abs(b.a_pinv - problems.PAPER_A_PINV)),
        np.max(np.abs(b.p - problems.PAPER_P)),
        np.max(np.abs(b.r - problems.PAPER_R)),
    )
    record("C1 projector reproduction", worst <= 1e-12 and elapsed < 1.0,
           f"max entry deviation {worst:.2e} (tol 1e-12), {elapsed:.3f}s")


def test_c2_index1_and_monotone(paper, record):
    start = time.perf_counter()
    T = paper.horizon_T
    ts = [0.0, T / 2, T]
    xs = grid_samples(3, 3.0, 5)
    idx = check_index1(paper, t_samples=ts, x_samples=xs)
    mono = check_monotone(paper, [(t, x) for t in ts for x in xs], 2.0)
    elapsed = time.perf_counter() - start
    dets = [np.linalg.det(paper.a(0.0) + problems.PAPER_R @ jacobian(paper, t=0.0, x=x))
            for x in xs]
    det_dev = float(np.max(np.abs(np.array(dets) - 1.0)))
    ok = (idx.index1_ok and idx.noise_in_range_ok and mono.monotone_ok
          and idx.constraint_jacobian_min_sv > 1e-3 and det_dev <= 1e-12 and elapsed < 1.0)
    record("C2 index-1 and monotonicity", ok,
           f"index1={idx.index1_ok} noise_in_range={idx.noise_in_range_ok} "
           f"min sv(J_AE)={idx.constraint_jacobian_min_sv:.4f} max|det-1|={det_dev:.1e} "
           f"monotone(k=2)={mono.monotone_ok} worst excess {mono.worst_excess:.3f}, "
           f"{elapsed:.3f}s")


@pytest.fixture(scope="module")
def paper_pair(paper):
    start = time.perf_counter()
    lat = generate(42, 2**10, 3, paper.horizon_T)
    ll = integrate(paper, DEFAULT_OPTS, lat, "ll")
    dec = integrate(paper, DEFAULT_OPTS, lat, "decomposed")
    return lat, ll, dec, time.perf_counter() - start


def test_c3_scheme_equivalence(paper_pair, record):
    _, ll, dec, elapsed = paper_pair
    rel = float(np.max(np.abs(dec.states - ll.states) / np.maximum(1.0, np.abs(ll.states))))
    record("C3 ll vs decomposed equivalence", rel <= 1e-10 and elapsed < 5.0,
           f"max relative discrepancy {rel:.2e} over 1024 steps (tol 1e-10), {elapsed:.2f}s")


def test_c4_discrete_constraint(paper, paper_pair, record):
    lat, ll, _, _ = paper_pair
    worst = 0.0
    for n in range(lat.n_fine):
        x, y = ll.states[n], ll.states[n + 1]
        res = constraint_residual(paper, DEFAULT_OPTS, ll.times[n], lat.h, x, y)
        worst = max(worst, res / (1.0 + np.linalg.norm(x) ** 3))
    record("C4 discrete constraint preservation", worst <= 1e-8,
           f"max scaled residual {worst:.2e} (tol 1e-8)")


PAPER_STUDY = ["converge", "--problem", "paper3x3", "--n-ref", "65536", "--levels", "6..12",
               "--samples", "3", "--seed", "42", "--scheme", "ll"]


@pytest.fixture(scope="module")
def paper_study(tmp_path_factory):
    runs = []
    for k in range(2):
        d = tmp_path_factory.mktemp(f"study{k}")
        start = time.perf_counter()
        code, text, err = run_cli(PAPER_STUDY + ["--out", str(d / "paper.csv")])
        runs.append((d, code, text, err, time.perf_counter() - start))
    return runs


def test_c5_pathwise_rate_paper(paper_study, record):
    d, code, text, err, elapsed = paper_study[0]
    assert code == 0, err
    rates = read_rates(d / "paper_rates.csv")
    mean = float(np.mean(rates))
    ok = (len(rates) == 3 and all(0.35 <= r <= 0.55 for r in rates)
          and 0.40 <= mean <= 0.55 and elapsed < 300)
    record("C5 pathwise rate paper3x3 (seeds 42-44)", ok,
           f"rates {', '.join(f'{r:.4f}' for r in rates)} (each in [0.35, 0.55]), "
           f"mean {mean:.4f} (in [0.40, 0.55]), {elapsed:.1f}s")


def test_c6_exact_oracle_gbm(tmp_path, record):
    start = time.perf_counter()
    out = tmp_path / "gbm.csv"
    code, text, err = run_cli(["converge", "--problem", "gbm_constrained", "--exact",
                               "--levels", "6..12", "--samples", "5", "--seed", "42",
                               "--out", str(out)])
    assert code == 0, err
    rates = read_rates(tmp_path / "gbm_rates.csv")
    p = problems.get("gbm_constrained").problem
    worst = 0.0
    for i in range(5):
        lat = generate(42 + i, 2**16, 1, p.horizon_T)
        for k in range(6, 13):
            traj = integrate(p, DEFAULT_OPTS, at_resolution(lat, 2**k), "ll")
            worst = max(worst, float(np.max(np.abs(traj.states[:, 1] - traj.states[:, 0]))))
    elapsed = time.perf_counter() - start
    ok = all(0.40 <= r <= 0.60 for r in rates) and worst <= 1e-8 and elapsed < 120
    record("C6 exact-solution oracle gbm_constrained (seeds 42-46)", ok,
           f"rates {', '.join(f'{r:.4f}' for r in rates)} (each in [0.40, 0.60]), "
           f"max |x2 - x1| {worst:.1e} (tol 1e-8), {elapsed:.1f}s")


def test_c7_em_failure_demo(tmp_path, record):
    start = time.perf_counter()
    code, _, err = run_cli(["simulate", "--problem", "paper3x3", "--scheme", "em",
                            "--out", str(tmp_path / "em.csv")])
    singular_ok = code == 1 and "SingularMatrix" in err
    out = tmp_path / "lin.csv"
    code2, _, err2 = run_cli(["simulate", "--problem", "linear_const", "--scheme", "em",
                              "--n", "64", "--out", str(out)])
    data = np.loadtxt(out, delimiter=",", skiprows=1)
    h = 1.0 / 64
    worst = float(np.max(np.abs(data[1:, 1] - (1.0 + h) * data[:-1, 1]))) if code2 == 0 else np.inf
    elapsed = time.perf_counter() - start
    ok = singular_ok and code2 == 0 and worst <= 1e-14 and elapsed < 1.0
    record("C7 Euler-Maruyama failure demonstration", ok,
           f"paper3x3 em exit {code} ({err.strip()[:60]}...); linear_const em exit {code2}, "
           f"max per-step deviation from explicit Euler {worst:.1e}, {elapsed:.3f}s")


def test_c8_one_step_order(record):
    start = time.perf_counter()
    p = problems.get("linear_const").problem
    errs = []
    h = 0.01
    for step in (h, h / 2):
        x1 = step_ll(p, DEFAULT_OPTS, 0.0, step, np.array([1.0]), np.zeros(1))[0]
        errs.append(abs(x1 - np.exp(step)))
    ratio = errs[0] / errs[1]
    elapsed = time.perf_counter() - start
    record("C8 deterministic one-step order", 3.6 <= ratio <= 4.4 and elapsed < 1.0,
           f"one-step errors {errs[0]:.3e}, {errs[1]:.3e}; ratio {ratio:.4f} (in [3.6, 4.4])")


def test_c9_reproducibility(paper_study, record):
    (d0, *_), (d1, *_) = paper_study
    names = ["paper.csv", "paper_rates.csv", "paper_plot.csv"]
    same = all((d0 / n).read_bytes() == (d1 / n).read_bytes() for n in names)
    record("C9 reproducibility", same, "report, rate and plot-data CSVs byte-identical across runs"
           if same else "CSV outputs differ between identical runs")
