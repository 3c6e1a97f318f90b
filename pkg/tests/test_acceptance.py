"""Acceptance criteria, one test per criterion.

Each test records a one-line PASS/FAIL summary (printed at the end of the
pytest run by ``conftest.py``).  Run directly with
``python -m tests.test_acceptance`` to get just the summary lines.
"""

import json
import time
from pathlib import Path

import numpy as np

from cbwmeter.cli import main as cli_main
from cbwmeter.estimator import monte_carlo, nuisance_crlb, phase_averaged_information, scaling_sweep
from cbwmeter.fringes import (
    InterferogramParams,
    count_minima,
    ideal_fringes,
    local_extrema,
    rayleigh_spacing,
    sample_positions,
    second_moment,
)
from cbwmeter.estimator import closed_information
from cbwmeter.netlist import (
    ChainConfig,
    NetlistError,
    PSI_TEST_PHASES,
    build_cbw_chain,
    chain_intensity,
    compile_network,
    format_network,
    naive_cascade,
    parse_network,
    psi_search,
)
from cbwmeter.unitary import (
    MziParams,
    cbw_closed_form,
    equal_up_to_global_phase,
    mzi_unitary,
    rotation_frame,
    unitarity_error,
)
from tests.netgen import random_netlist

FIXTURES = Path(__file__).parent / "fixtures"
RESULTS = {}

# SNR_amp = b mu / sigma = 20 with m = 512 samples and K = f L = 7.3 fringes
MC_BASE = InterferogramParams(mu=100.0, a=1.0, b=1.0, f=7.3, M=1, phase_offset=0.4, sigma=5.0, m=512, L=1.0)


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_01_fringe_spacing():
    def run():
        n = 10_000
        phi = 4 * np.pi * np.arange(n) / n
        rows = []
        for M in (1, 2, 4, 8):
            curve = ideal_fringes(M, 1.0, phi)
            idx = local_extrema(curve.i_a, "max", circular=True)
            spacing = float(np.mean(np.diff(phi[idx])))
            rows.append((M, spacing, rayleigh_spacing(curve), phi[1]))
        return rows

    rows, dt = timed(run)
    ok = dt < 1.0 and all(abs(s - np.pi / M) <= step for M, s, _, step in rows)
    detail = "; ".join(f"M={M}: maxima {s / np.pi:.4f}pi, max-to-null {r / np.pi:.4f}pi, target {1 / M:.4f}pi"
                       for M, s, r, _ in rows)
    record(1, ok, f"{detail} ({dt:.2f}s)")


def test_02_fig2_fringe_doubling():
    def run():
        phi = 4 * np.pi * np.arange(2000) / 2000
        psi = psi_search(2).best_psi
        n1 = count_minima(chain_intensity(ChainConfig(1, 0.0, 0.0, psi), phi))
        n2 = count_minima(chain_intensity(ChainConfig(2, 0.0, 0.0, psi), phi))
        return n1, n2

    (n1, n2), dt = timed(run)
    record(2, n1 == 2 and n2 == 4 and dt < 1.0, f"minima over [0,4pi): M=1 -> {n1}, M=2 -> {n2} ({dt:.2f}s)")


def test_03_mth_power_equivalence():
    def run():
        best = min((psi_search(2, 1e-9, 64, kind) for kind in ("mzi", "diag")), key=lambda r: r.best_residual)
        worst = 0.0
        for p in PSI_TEST_PHASES:
            u = rotation_frame(compile_network(build_cbw_chain(ChainConfig(2, p, 0.0, best.best_psi, best.kind))))
            worst = max(worst, equal_up_to_global_phase(u, cbw_closed_form(p, 2), 1e-9).residual)
        naive = rotation_frame(compile_network(naive_cascade(ChainConfig(2, 0.7))))
        naive_res = equal_up_to_global_phase(naive, cbw_closed_form(0.7, 2), 1e-9).residual
        return best, worst, naive_res

    (best, worst, naive_res), dt = timed(run)
    ok = worst < 1e-9 and naive_res > 0.1 and dt < 1.0
    record(3, ok, f"psi*={best.best_psi:.4f} ({best.kind} dummy) chain residual {worst:.2e}; "
                  f"naive cascade residual {naive_res:.3f} ({dt:.2f}s)")


def test_04_unitarity_and_conservation():
    def run():
        rng = np.random.default_rng(4)
        worst_u, worst_e = 0.0, 0.0
        for _ in range(1000):
            phi, zeta, psi = rng.uniform(-4 * np.pi, 4 * np.pi, 3)
            M = int(rng.integers(1, 9))
            kind = ("mzi", "diag")[rng.integers(2)]
            for u in (mzi_unitary(MziParams(phi, zeta)), cbw_closed_form(phi - zeta, M),
                      compile_network(build_cbw_chain(ChainConfig(M, phi, zeta, psi, kind)))):
                worst_u = max(worst_u, unitarity_error(u))
            i0 = rng.uniform(0.1, 10.0)
            c = ideal_fringes(M, i0, [phi])
            worst_e = max(worst_e, float(abs(c.i_a[0] + c.i_b[0] - i0)))
        return worst_u, worst_e

    (wu, we), dt = timed(run)
    record(4, wu < 1e-12 and we < 1e-12 and dt < 1.0,
           f"max |U^dag U - I| {wu:.2e}, max |i_a + i_b - i0| {we:.2e} over 1000 configs ({dt:.2f}s)")


def test_05_fisher_closed_vs_exact():
    def run():
        p = MC_BASE.replace(m=512, f=7.3, L=1.0)
        x = sample_positions(p.m, p.L)
        closed = closed_information(p, x)
        return abs(phase_averaged_information(p, x) - closed) / closed

    rel, dt = timed(run)
    record(5, rel < 0.05 and dt < 1.0, f"relative gap {rel:.2e} at m=512, f_M L=7.3 ({dt:.2f}s)")


def test_06_second_moment():
    def run():
        m, L = 1000, 1.0
        return abs(second_moment(sample_positions(m, L)) - m * L**2 / 3) / (m * L**2 / 3)

    rel, dt = timed(run)
    record(6, rel < 0.01 and dt < 1.0, f"relative gap {rel:.2e} to m L^2/3 ({dt:.2f}s)")


def test_07_crlb_attainment():
    rep, dt = timed(lambda: monte_carlo(MC_BASE, 1000, 42))
    full = monte_carlo(MC_BASE, 200, 42, known_nuisance=False)
    ok = 0.8 <= rep.efficiency <= 1.5 and dt < 30.0 and not rep.flagged
    record(7, ok, f"efficiency {rep.efficiency:.3f} (known-nuisance MLE, 1000 trials); "
                  f"4-parameter fit: {full.efficiency:.2f} vs this bound, "
                  f"{full.empirical_var_f / nuisance_crlb(MC_BASE):.2f} vs its own ({dt:.1f}s)")


def test_08_one_over_m_scaling():
    def run():
        r1 = monte_carlo(MC_BASE, 1000, 42)
        r4 = monte_carlo(MC_BASE.replace(M=4), 1000, 42)
        return r1, r4

    (r1, r4), dt = timed(run)
    ratio = r1.empirical_std_f / r4.empirical_std_f
    frac_ratio = r1.frac_std_lambda / r4.frac_std_lambda
    ok = abs(ratio - 4) <= 0.15 * 4 and dt < 60.0
    record(8, ok, f"std(f_hat) ratio M=1/M=4 = {ratio:.3f} (Lambda fractional std ratio {frac_ratio:.3f}) ({dt:.1f}s)")


def test_09_m_squared_regime():
    def run():
        fixed_f = scaling_sweep(MC_BASE, [1, 2, 4, 8], 1000, 42, fixed="f")
        fixed_k = scaling_sweep(MC_BASE, [1, 2, 4, 8], 1000, 42, fixed="k_m")
        return fixed_f, fixed_k

    (ff, fk), dt = timed(run)
    ok = abs(ff.slope + 2.0) <= 0.2 and abs(fk.slope + 1.0) <= 0.15 and dt < 120.0
    record(9, ok, f"empirical slope fixed f {ff.slope:.3f} (target -2), fixed K_M {fk.slope:.3f} (target -1); "
                  f"printed-bound slopes {ff.bound_slope:.2f}/{fk.bound_slope:.2f}, "
                  f"sqrt(CRLB)/f slopes {ff.crlb_slope:.2f}/{fk.crlb_slope:.2f} ({dt:.1f}s)")


CLI_RUNS = [
    ["unitary", "--phi", "0.7", "--M", "3"],
    ["chain-verify", "--M", "2", "--phi", "0.7"],
    ["psi-search", "--M", "2", "--grid", "32"],
    ["fringes", "--M", "2", "--points", "1000"],
    ["synth", "--M", "2", "--snr", "20", "--seed", "42"],
    ["fisher", "--M", "4", "--snr", "20"],
    ["mc", "--M", "1", "--snr", "20", "--m", "512", "--trials", "1000", "--seed", "42"],
    ["mc", "--M", "2", "--snr", "20", "--trials", "200", "--seed", "7", "--workers", "4"],
    ["scaling", "--Ms", "1,2", "--trials", "100", "--seed", "3"],
    ["parse", str(FIXTURES / "cbw_m2.net")],
]


def test_10_determinism(tmp_path):
    def run():
        mismatched = []
        rec = tmp_path / "rec.csv"
        cli_main(["synth", "--seed", "5", "-o", str(rec)])
        runs = CLI_RUNS + [["fit", "--input", str(rec)]]
        for k, argv in enumerate(runs):
            outs = []
            for rep in range(2):
                out = tmp_path / f"run{k}_{rep}.out"
                code = cli_main([*argv, "-o", str(out)])
                sidecar = out.with_name(out.name + ".json")
                outs.append((code, out.read_bytes(), sidecar.read_bytes() if sidecar.exists() else b""))
            if outs[0] != outs[1]:
                mismatched.append(argv[0])
        seq = monte_carlo(MC_BASE, 200, 42, workers=1)
        par = monte_carlo(MC_BASE, 200, 42, workers=8)
        return mismatched, json.dumps(seq.to_dict()) == json.dumps(par.to_dict()), len(runs)

    (mismatched, mc_same, n), dt = timed(run)
    record(10, not mismatched and mc_same,
           f"{n} CLI commands rerun byte-identical: {not mismatched} {mismatched or ''}; "
           f"MC sequential == concurrent: {mc_same} ({dt:.1f}s)")


def test_11_parser():
    def run():
        rng = np.random.default_rng(11)
        failures = 0
        for _ in range(500):
            spec = parse_network(random_netlist(rng))
            if parse_network(format_network(spec)) != spec:
                failures += 1
        positions = []
        for name in ("bad_number.net", "unbalanced_repeat.net", "unknown_element.net"):
            try:
                parse_network((FIXTURES / name).read_text())
                positions.append(None)
            except NetlistError as exc:
                positions.append((exc.line, exc.col))
        return failures, positions

    (failures, positions), dt = timed(run)
    ok = failures == 0 and all(p is not None and p[0] >= 1 and p[1] >= 1 for p in positions)
    record(11, ok, f"round-trip failures {failures}/500; malformed fixture positions {positions} ({dt:.2f}s)")


if __name__ == "__main__":
    import tempfile

    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                    with tempfile.TemporaryDirectory() as d:
                        fn(Path(d))
                else:
                    fn()
            except AssertionError:
                pass
    passed = sum(ok for ok, _ in RESULTS.values())
    print(f"{passed}/{len(RESULTS)} criteria passed")
