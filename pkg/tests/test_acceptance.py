"""End-to-end acceptance checks for the library's headline numerical claims.

Each test prints a single PASS/FAIL line naming the claim it certifies, so a
verbose run doubles as a sign-off sheet.  Tolerances and grid sizes are part
of the claims; do not shrink them to make a red test green.
"""

import math
import time

import numpy as np

from contamlab.core import substream
from contamlab.learners import (
    EpochState,
    epoch_schedule,
    epoch_update,
    load_epoch_defaults,
)
from contamlab.lockstep import estimate_alpha_batch, run_lockstep
from contamlab.mean_estimation import (
    AnchorWeights,
    ContaminationConfig,
    UniformWeights,
    monte_carlo_variance,
)
from contamlab.pac_env import Threshold, hard_instance, true_loss
from contamlab.variance import (
    anchored_factor_closed,
    anchored_factor_curve,
    anchored_factor_recurrence,
    find_crossover_alpha,
    uniform_factor_closed,
    uniform_factor_curve,
    uniform_factor_recurrence,
    variance_sandwich,
)
from contamlab.walks import estimate_stall_constant

SEED = 20240801

TENTHS = [round(k / 10, 10) for k in range(11)]


def report(label: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'}: {label}"
    if detail:
        line += f" [{detail}]"
    print(line, flush=True)
    assert ok, line


def test_closed_form_matches_recurrence():
    start = time.perf_counter()
    worst = 0.0
    pairs = (
        (uniform_factor_curve, uniform_factor_recurrence),
        (anchored_factor_curve, anchored_factor_recurrence),
    )
    for alpha in TENTHS:
        for curve_fn, recurrence_fn in pairs:
            curve = curve_fn(alpha, 1000)
            for t in range(1, 1001):
                step = recurrence_fn(alpha, t)
                worst = max(worst, abs(curve[t - 1] - step) / step)
    elapsed = time.perf_counter() - start
    report(
        "closed forms match recurrences to 1e-9 relative on both schemes",
        worst <= 1e-9 and elapsed < 10.0,
        f"worst rel {worst:.2e}, {elapsed:.1f}s",
    )


def test_edge_alpha_factors():
    ts = np.arange(1, 1001, dtype=float)
    gap_zero = float(np.abs(uniform_factor_curve(0.0, 1000) - 1.0 / ts).max())

    curve_one = uniform_factor_curve(1.0, 1000)
    gap_one = max(
        abs(curve_one[t - 1] - math.fsum(1.0 / k**2 for k in range(1, t + 1)))
        for t in range(1, 1001)
    )
    tail_gap = abs(uniform_factor_closed(1.0, 10_000) - math.pi**2 / 6)
    report(
        "edge contamination weights give 1/t and the inverse-square series",
        gap_zero <= 1e-12 and gap_one <= 1e-12 and tail_gap <= 1e-4,
        f"alpha=0 gap {gap_zero:.1e}, alpha=1 gap {gap_one:.1e}, tail gap {tail_gap:.3e}",
    )


def test_sandwich_brackets_closed_form():
    violations = 0
    cells = 0
    for alpha in TENTHS[1:-1]:
        curve = uniform_factor_curve(alpha, 1000)
        for t in range(3, 1001):
            lo, hi = variance_sandwich(alpha, t)
            cells += 1
            if not lo <= curve[t - 1] <= hi:
                violations += 1
    report(
        "two-sided bound brackets the uniform factor everywhere",
        violations == 0,
        f"{cells} cells, {violations} violations",
    )


def test_monte_carlo_matches_oracles():
    start = time.perf_counter()
    ts = [1, 2, 5, 10, 50, 200]
    worst_rel = 0.0
    worst_z = 0.0
    ok = True
    for alpha in (0.0, 0.25, 0.5, 0.75, 1.0):
        config = ContaminationConfig(alpha=alpha, mu=0.0, sigma=1.0, horizon=200)
        for scheme, oracle in (
            (UniformWeights(), uniform_factor_closed),
            (AnchorWeights(alpha), anchored_factor_closed),
        ):
            mc = monte_carlo_variance(config, scheme, replicates=200_000,
                                      seed=SEED, ts=ts)
            for i, t in enumerate(ts):
                truth = oracle(alpha, t)
                err = abs(mc.trace_var[i] - truth)
                worst_rel = max(worst_rel, err / truth)
                if mc.stderr[i] > 0:
                    worst_z = max(worst_z, err / mc.stderr[i])
                if err > max(0.03 * truth, 4.0 * mc.stderr[i]):
                    ok = False
    elapsed = time.perf_counter() - start
    report(
        "simulated trace variance matches closed forms within max(3%, 4 SE)",
        ok and elapsed < 300.0,
        f"worst rel {worst_rel:.3%}, worst z {worst_z:.2f}, {elapsed:.0f}s",
    )


def test_phase_change_slopes():
    ts = np.arange(100, 10_001)
    slopes = {}
    for alpha in (0.25, 0.75):
        curve = uniform_factor_curve(alpha, 10_000)
        slopes[alpha] = float(np.polyfit(np.log(ts), np.log(curve[ts - 1]), 1)[0])
    report(
        "log-log decay slope jumps from -1 to -1/2 across the phase boundary",
        abs(slopes[0.25] + 1.0) <= 0.1 and abs(slopes[0.75] + 0.5) <= 0.1,
        f"slope(0.25)={slopes[0.25]:.3f}, slope(0.75)={slopes[0.75]:.3f}",
    )


def test_uniform_weighting_is_not_minimum_variance():
    uniform = uniform_factor_curve(1.0, 1000)
    anchored = anchored_factor_curve(1.0, 1000)
    beats = bool(np.all(anchored[1:] < uniform[1:]))  # every t in 2..1000

    certificate = find_crossover_alpha(10, 0.01)
    star = certificate.alpha_star
    report(
        "anchored weighting beats uniform at full contamination, with a "
        "verified interior crossover point at t=10",
        beats and 0.0 < star < 1.0 and certificate.verify(),
        f"alpha_star={star:.2f}",
    )


def test_walk_stall_constant():
    details = []
    ok = True
    for alpha in (0.6, 0.75, 0.9):
        est = estimate_stall_constant(alpha, 100_000, 100_000, SEED)
        gap = abs(est.estimate - (2.0 * alpha - 1.0))
        positive = est.estimate - est.ci_halfwidth > 0.0
        ok = ok and gap <= 0.02 and positive
        details.append(f"a={alpha}: {est.estimate:.4f} (gap {gap:.4f})")
    fair = estimate_stall_constant(0.5, 100_000, 100_000, SEED)
    ok = ok and fair.estimate <= 0.02
    details.append(f"a=0.5: {fair.estimate:.4f}")
    report(
        "survival probability of the drifted walk approaches 2*alpha - 1",
        ok,
        "; ".join(details),
    )


def test_repeated_erm_stalls():
    start = time.perf_counter()
    dist, target = hard_instance(10)
    result = run_lockstep(dist, target, 0.8, 10, 2000, "erm_maxmargin",
                          replicates=2000, seed=SEED, record_ts=[2000])
    mean_final = float(result.losses[:, 0].mean())
    elapsed = time.perf_counter() - start
    report(
        "repeated max-margin fitting stalls above the 0.0075 loss floor",
        mean_final >= 0.0075 and elapsed < 600.0,
        f"mean final loss {mean_final:.4f}, {elapsed:.0f}s",
    )


def _hard_instance_curve(learner_name: str) -> np.ndarray:
    dist, target = hard_instance(10)
    result = run_lockstep(dist, target, 0.8, 10, 2000, learner_name,
                          replicates=2000, seed=SEED)
    return result.mean_curve()


def _quartile_means(curve: np.ndarray) -> np.ndarray:
    return np.array([chunk.mean() for chunk in np.array_split(curve, 4)])


def test_epoch_learner_converges():
    curve = _hard_instance_curve("epoch_pu")
    quartiles = _quartile_means(curve)
    nonincreasing = bool(np.all(np.diff(quartiles) <= 1e-12))
    report(
        "epoch-based relabeling learner beats half the stall floor",
        curve[-1] < 0.00375 and nonincreasing,
        f"final {curve[-1]:.5f}, quartiles {np.round(quartiles, 5).tolist()}",
    )


def test_mixing_learner_converges():
    curve = _hard_instance_curve("uniform_mixing")
    quartiles = _quartile_means(curve)
    nonincreasing = bool(np.all(np.diff(quartiles) <= 1e-12))
    report(
        "random-probe mixing learner beats half the stall floor",
        curve[-1] < 0.00375 and nonincreasing,
        f"final {curve[-1]:.5f}, quartiles {np.round(quartiles, 5).tolist()}",
    )


def test_epoch_update_contract():
    """Feed the end-of-epoch correction 500 honestly sampled buffers and
    confirm the advertised failure probability."""
    settings = load_epoch_defaults()
    plan = epoch_schedule(0.8, 10, settings, 3)
    next_accuracy = epoch_schedule(0.8, 10, settings, 4).accuracy
    dist, target = hard_instance(10)

    deployed = Threshold(0.0)  # one atom wrong: loss 0.1 <= plan accuracy
    assert true_loss(deployed, dist, target) <= plan.accuracy

    support = np.asarray(dist.support)
    target_pattern = target.predict_many(support)
    deployed_pattern = deployed.predict_many(support)
    size = plan.rounds * 10
    assert size >= plan.labeled_budget

    rng = substream(SEED, "epoch-contract")
    failures = 0
    for _ in range(500):
        idx = dist.sample_indices(rng, size)
        synthetic = rng.random(size) < 0.8
        ys = np.where(synthetic, deployed_pattern[idx], target_pattern[idx])
        updated = epoch_update(
            EpochState(deployed, plan, support[idx], ys.astype(np.int8))
        )
        if true_loss(updated, dist, target) > next_accuracy:
            failures += 1
    bound = 2.0 * plan.confidence
    report(
        "end-of-epoch correction meets its advertised failure probability",
        failures / 500 <= bound,
        f"{failures}/500 failures, budget {bound:.2f}",
    )


def test_contamination_weight_estimator():
    dist, target = hard_instance(10)
    details = []
    ok = True
    for alpha in (0.0, 0.3, 0.7, 1.0):
        estimates = estimate_alpha_batch(dist, target, alpha, 100_000,
                                         trials=500, seed=SEED)
        hit_rate = float(np.mean(np.abs(estimates - alpha) <= 0.01))
        ok = ok and hit_rate >= 0.99
        details.append(f"a={alpha}: {hit_rate:.3f}")
    report(
        "two-probe contamination estimate lands within 0.01 at least 99% "
        "of the time",
        ok,
        "; ".join(details),
    )
