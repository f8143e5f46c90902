"""Vectorized replicate engine for recursive runs on atom-supported inputs.

The reference loop in ``pac_env`` refits from explicit example lists, which
is exact but too slow for thousands of replicates over thousands of rounds.
On a finite input support every fit in this package depends on the sample
only through per-atom label counts, so replicates can advance in lockstep
with their counts held in arrays.  Candidate thresholds and intervals are
precomputed per atom-presence mask so each round's fits reduce to one
argmin over a static table.

Decision-level equality with the reference fits is covered by fuzz tests;
this module must match ``learners`` exactly, tie-breaks included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, substream
from .learners import EpochSettings, epoch_schedule, load_epoch_defaults
from .pac_env import DiscreteDistribution, Hypothesis

__all__ = [
    "ThresholdTable",
    "IntervalTable",
    "LockstepResult",
    "run_lockstep",
    "estimate_alpha_batch",
]

_BIG = np.int64(1) << 50


def _mask_values(support: np.ndarray, mask: int) -> np.ndarray:
    bits = [(mask >> a) & 1 for a in range(len(support))]
    return support[np.asarray(bits, dtype=bool)]


def _midpoint_boundaries(values: np.ndarray) -> np.ndarray:
    return np.concatenate(
        ([values[0] - 1.0], (values[:-1] + values[1:]) / 2.0, [values[-1] + 1.0])
    )


@dataclass(frozen=True)
class ThresholdTable:
    """Per-presence-mask threshold candidates for count-based ERM.

    Mirrors the candidate set and tie-break of the list-based threshold fit:
    midpoints between consecutive present values plus one sentinel per side,
    both orientations, ordered by (errors, boundary, ascending-first).  The
    constant-label overrides point at the one-sided ascending candidates.
    """

    support: np.ndarray
    patterns: np.ndarray  # (masks, candidates, atoms) int64 in {0, 1}
    thetas: np.ndarray  # (masks, candidates) float
    rank_key: np.ndarray  # (masks, candidates) tie-break key, BIG on padding
    const_zero: np.ndarray  # (masks,) candidate index for all-zero labels
    const_one: np.ndarray  # (masks,) candidate index for all-one labels

    @classmethod
    def build(cls, support: np.ndarray) -> "ThresholdTable":
        support = np.asarray(support, dtype=float)
        atoms = len(support)
        if atoms > 8:
            raise ConfigurationError("lockstep tables support at most 8 atoms")
        n_masks = 1 << atoms
        max_c = 2 * (atoms + 1)
        patterns = np.zeros((n_masks, max_c, atoms), dtype=np.int64)
        thetas = np.full((n_masks, max_c), np.nan)
        rank_key = np.full((n_masks, max_c), _BIG, dtype=np.int64)
        const_zero = np.zeros(n_masks, dtype=np.int64)
        const_one = np.zeros(n_masks, dtype=np.int64)

        all_thetas: list[float] = []
        per_mask: list[list[tuple[float, bool]]] = [[]]
        for mask in range(1, n_masks):
            values = _mask_values(support, mask)
            cands = [
                (float(b), asc)
                for asc in (True, False)
                for b in _midpoint_boundaries(values)
            ]
            per_mask.append(cands)
            all_thetas.extend(b for b, _ in cands)
        theta_order = {th: i for i, th in enumerate(sorted(set(all_thetas)))}

        for mask in range(1, n_masks):
            for c, (boundary, asc) in enumerate(per_mask[mask]):
                pred = support > boundary if asc else support <= boundary
                patterns[mask, c] = pred.astype(np.int64)
                thetas[mask, c] = boundary
                rank_key[mask, c] = theta_order[boundary] * 2 + (0 if asc else 1)
                values = _mask_values(support, mask)
                if asc and boundary == float(values[-1] + 1.0):
                    const_zero[mask] = c
                if asc and boundary == float(values[0] - 1.0):
                    const_one[mask] = c
        return cls(
            support=support,
            patterns=patterns,
            thetas=thetas,
            rank_key=rank_key,
            const_zero=const_zero,
            const_one=const_one,
        )

    def fit(self, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Batch threshold fit from per-atom label counts.

        counts has shape (reps, atoms, 2).  Returns (patterns, thetas,
        ascending) of the selected candidate per replicate.
        """
        zeros = counts[:, :, 0]
        ones = counts[:, :, 1]
        present = (counts.sum(axis=2) > 0).astype(np.int64)
        mask_ids = (present << np.arange(len(self.support))).sum(axis=1)
        if (mask_ids == 0).any():
            raise ConfigurationError("every replicate needs at least one example")
        pats = self.patterns[mask_ids]  # (R, C, A)
        errors = np.einsum("ra,rca->rc", zeros, pats) + np.einsum(
            "ra,rca->rc", ones, 1 - pats
        )
        span = np.int64(2 * self.rank_key.shape[1] * (1 << 12))
        key = errors * span + self.rank_key[mask_ids]
        key = np.where(self.rank_key[mask_ids] >= _BIG, _BIG, key)
        choice = np.argmin(key, axis=1)
        choice = np.where(ones.sum(axis=1) == 0, self.const_zero[mask_ids], choice)
        choice = np.where(zeros.sum(axis=1) == 0, self.const_one[mask_ids], choice)
        selected_asc = (self.rank_key[mask_ids, choice] % 2) == 0
        return (
            self.patterns[mask_ids, choice],
            self.thetas[mask_ids, choice],
            selected_asc,
        )


@dataclass(frozen=True)
class IntervalTable:
    """Per-presence-mask interval candidates for the count-based PU fit.

    Kind 0 is an interval (low, high], kind 1 its complement, kind 2 the
    constant-one predictor, matching the list-based PU fit's candidate set
    and its (covered, kind, low, high) tie-break.
    """

    support: np.ndarray
    patterns: np.ndarray  # (masks, candidates, atoms) int64
    kinds: np.ndarray  # (masks, candidates) 0 interval, 1 complement, 2 all-ones
    lows: np.ndarray
    highs: np.ndarray
    rank_key: np.ndarray  # (masks, candidates), BIG on padding

    @classmethod
    def build(cls, support: np.ndarray) -> "IntervalTable":
        support = np.asarray(support, dtype=float)
        atoms = len(support)
        if atoms > 8:
            raise ConfigurationError("lockstep tables support at most 8 atoms")
        n_masks = 1 << atoms
        per_mask: list[list[tuple[int, float, float]]] = [[]]
        all_bounds: list[float] = []
        for mask in range(1, n_masks):
            bounds = _midpoint_boundaries(_mask_values(support, mask))
            cands: list[tuple[int, float, float]] = []
            for i in range(len(bounds)):
                for j in range(i + 1, len(bounds)):
                    cands.append((0, float(bounds[i]), float(bounds[j])))
                    cands.append((1, float(bounds[i]), float(bounds[j])))
            cands.append((2, float(bounds[-1]), float(bounds[-1])))
            per_mask.append(cands)
            all_bounds.extend(bounds)
        order = {b: i for i, b in enumerate(sorted(set(all_bounds)))}
        n_ranks = len(order)
        max_c = max(len(c) for c in per_mask)
        patterns = np.zeros((n_masks, max_c, atoms), dtype=np.int64)
        kinds = np.zeros((n_masks, max_c), dtype=np.int64)
        lows = np.full((n_masks, max_c), np.nan)
        highs = np.full((n_masks, max_c), np.nan)
        rank_key = np.full((n_masks, max_c), _BIG, dtype=np.int64)
        for mask in range(1, n_masks):
            for c, (kind, low, high) in enumerate(per_mask[mask]):
                if kind == 0:
                    pred = (support > low) & (support <= high)
                elif kind == 1:
                    pred = ~((support > low) & (support <= high))
                else:
                    pred = np.ones(atoms, dtype=bool)
                patterns[mask, c] = pred.astype(np.int64)
                kinds[mask, c] = kind
                lows[mask, c] = low
                highs[mask, c] = high
                rank_key[mask, c] = (kind * n_ranks + order[low]) * n_ranks + order[high]
        return cls(
            support=support,
            patterns=patterns,
            kinds=kinds,
            lows=lows,
            highs=highs,
            rank_key=rank_key,
        )

    def fit(
        self, positive_counts: np.ndarray, unlabeled_counts: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Batch PU fit from per-atom positive and unlabeled counts.

        Returns (patterns, kinds, lows, highs) per replicate.  Every
        replicate must have at least one positive.
        """
        if (positive_counts.sum(axis=1) == 0).any():
            raise ConfigurationError("every replicate needs at least one positive")
        present = ((positive_counts > 0) | (unlabeled_counts > 0)).astype(np.int64)
        mask_ids = (present << np.arange(len(self.support))).sum(axis=1)
        pats = self.patterns[mask_ids]  # (R, C, A)
        uncovered = ((positive_counts[:, None, :] > 0) & (pats == 0)).any(axis=2)
        penalty = np.einsum("ra,rca->rc", unlabeled_counts, pats)
        valid_ranks = self.rank_key[self.rank_key < _BIG]
        span = np.int64(valid_ranks.max() + 1)
        key = penalty * span + self.rank_key[mask_ids]
        key = np.where(uncovered | (self.rank_key[mask_ids] >= _BIG), _BIG, key)
        choice = np.argmin(key, axis=1)
        return (
            self.patterns[mask_ids, choice],
            self.kinds[mask_ids, choice],
            self.lows[mask_ids, choice],
            self.highs[mask_ids, choice],
        )


@dataclass(frozen=True)
class LockstepResult:
    """Per-replicate exact losses at the recorded rounds."""

    learner: str
    alpha: float
    n: int
    ts: np.ndarray  # recorded rounds
    losses: np.ndarray  # (replicates, len(ts))
    seed: int
    origin_samples: np.ndarray | None = None  # optional Bernoulli draws at one atom
    origin_replicates: np.ndarray | None = None

    def mean_curve(self) -> np.ndarray:
        return self.losses.mean(axis=0)


def run_lockstep(
    dist: DiscreteDistribution,
    target: Hypothesis,
    alpha: float,
    n: int,
    horizon: int,
    learner_name: str,
    replicates: int,
    seed: int,
    settings: EpochSettings | None = None,
    record_ts: np.ndarray | None = None,
    collect_origins_atom: int | None = None,
) -> LockstepResult:
    """Run many replicates of the recursive loop in lockstep.

    Supported learners: erm_maxmargin, erm_noisy_repeated, uniform_mixing,
    epoch_pu.  One seeded stream drives all replicates; draws go round by
    round (inputs, origin coins, any coin-predictor labels, any deploy
    coins), so a (seed, parameter) pair fully determines the output.
    """
    alpha = float(alpha)
    if not (0.0 <= alpha <= 1.0):
        raise ConfigurationError(f"alpha must lie in [0, 1], got {alpha}")
    if int(n) != n or n < 1:
        raise ConfigurationError(f"n must be an integer >= 1, got {n}")
    if int(horizon) != horizon or horizon < 0:
        raise ConfigurationError(f"horizon must be >= 0, got {horizon}")
    if replicates < 1:
        raise ConfigurationError(f"replicates must be >= 1, got {replicates}")
    known = {"erm_maxmargin", "erm_noisy_repeated", "uniform_mixing", "epoch_pu"}
    if learner_name not in known:
        raise ConfigurationError(f"unknown lockstep learner {learner_name!r}")

    support = dist.support
    probs = dist.probabilities
    atoms = len(support)
    target_pat = target.predict_many(support).astype(np.int64)
    thresholds = ThresholdTable.build(support)
    intervals = IntervalTable.build(support) if learner_name == "epoch_pu" else None
    if learner_name == "epoch_pu":
        settings = settings or load_epoch_defaults()
        plan = epoch_schedule(alpha, n, settings, 1)

    R = int(replicates)
    H = int(horizon)
    ts = np.arange(H + 1) if record_ts is None else np.asarray(sorted(record_ts), dtype=int)
    if ts.size and (ts[0] < 0 or ts[-1] > H):
        raise ConfigurationError("recorded rounds must lie in 0..horizon")
    slot = {int(t): i for i, t in enumerate(ts)}
    losses = np.empty((R, ts.size))

    rng = substream(seed, "lockstep", learner_name, alpha, n, H, R)
    cumulative = np.cumsum(probs)
    cumulative[-1] = 1.0

    counts = np.zeros((R, atoms, 2), dtype=np.int64)  # full-sample label counts
    sel_counts = np.zeros((R, atoms, 2), dtype=np.int64)  # low-noise subset (mixing)
    pred = np.zeros((R, atoms), dtype=np.int64)
    is_coin = np.zeros(R, dtype=bool)
    rep_rows = np.repeat(np.arange(R), n)

    # epoch bookkeeping
    buffer_pos = 0
    p_counts = np.zeros((R, atoms, 2), dtype=np.int64)
    u_counts = np.zeros((R, atoms), dtype=np.int64)

    origin_bits: list[np.ndarray] = []
    origin_reps: list[np.ndarray] = []

    def add_counts(target_counts: np.ndarray, idx: np.ndarray, ys: np.ndarray, keep) -> None:
        flat_idx = (rep_rows * atoms + idx.ravel()) * 2 + ys.ravel()
        if keep is not None:
            flat_idx = flat_idx[keep.ravel()]
        binned = np.bincount(flat_idx, minlength=R * atoms * 2)
        target_counts += binned.reshape(R, atoms, 2)

    for t in range(0, H + 1):
        idx = np.searchsorted(cumulative, rng.random((R, n)), side="right")
        natural = target_pat[idx]
        if t == 0:
            ys = natural
            model_mask = np.zeros((R, n), dtype=bool)
        else:
            model_mask = rng.random((R, n)) < alpha
            deployed = pred[np.arange(R)[:, None], idx]
            if learner_name == "uniform_mixing":
                coin_labels = rng.integers(0, 2, size=(R, n), dtype=np.int64)
                deployed = np.where(is_coin[:, None], coin_labels, deployed)
            ys = np.where(model_mask, deployed, natural)

        if collect_origins_atom is not None and t >= 1:
            sel = idx == collect_origins_atom
            origin_bits.append(model_mask[sel])
            origin_reps.append(np.broadcast_to(np.arange(R)[:, None], (R, n))[sel])

        add_counts(counts, idx, ys, None)

        if learner_name in ("erm_maxmargin", "erm_noisy_repeated"):
            pred, _, _ = thresholds.fit(counts)
            round_loss = (probs * np.abs(pred - target_pat)).sum(axis=1)
        elif learner_name == "uniform_mixing":
            if t == 0:
                add_counts(sel_counts, idx, ys, None)
            elif is_coin.any():
                add_counts(sel_counts, idx, ys, np.broadcast_to(is_coin[:, None], (R, n)))
            deploy_p = 1.0 / np.sqrt(n * (t + 1.0))
            new_coin = rng.random(R) < deploy_p
            pred, _, _ = thresholds.fit(sel_counts)
            is_coin = new_coin
            fitted_loss = (probs * np.abs(pred - target_pat)).sum(axis=1)
            round_loss = np.where(is_coin, 0.5, fitted_loss)
        else:  # epoch_pu
            if t == 0:
                pred, _, _ = thresholds.fit(counts)
                rounds_left = plan.rounds
                split = plan.rounds * n - plan.unlabeled_target
                buffer_pos = 0
            else:
                lo = buffer_pos * n
                hi = lo + n
                cut = min(max(split - lo, 0), n)  # columns before the U block
                if cut > 0:
                    block = np.zeros((R, n), dtype=bool)
                    block[:, :cut] = True
                    add_counts(p_counts, idx, ys ^ pred[np.arange(R)[:, None], idx], block)
                if cut < n:
                    tail = idx[:, cut:]
                    flat = rep_rows.reshape(R, n)[:, cut:].ravel() * atoms + tail.ravel()
                    u_counts += np.bincount(flat, minlength=R * atoms).reshape(R, atoms)
                buffer_pos += 1
                rounds_left -= 1
                if rounds_left == 0:
                    flips = p_counts[:, :, 1]  # counts of y xor pred == 1
                    meets = flips.sum(axis=1) >= plan.positive_target
                    if meets.any():
                        h_pat, _, _, _ = intervals.fit(
                            np.where(meets[:, None], flips, 0)
                            + (~meets[:, None]) * _fake_positive(atoms),
                            u_counts,
                        )
                        pred = np.where(meets[:, None], pred ^ h_pat, pred)
                    plan = epoch_schedule(alpha, n, settings, plan.epoch + 1)
                    rounds_left = plan.rounds
                    split = plan.rounds * n - plan.unlabeled_target
                    buffer_pos = 0
                    p_counts[:] = 0
                    u_counts[:] = 0
            round_loss = (probs * np.abs(pred - target_pat)).sum(axis=1)

        i = slot.get(t)
        if i is not None:
            losses[:, i] = round_loss

    return LockstepResult(
        learner=learner_name,
        alpha=alpha,
        n=int(n),
        ts=ts,
        losses=losses,
        seed=int(seed),
        origin_samples=(
            np.concatenate(origin_bits) if origin_bits else None
        ),
        origin_replicates=(
            np.concatenate(origin_reps) if origin_reps else None
        ),
    )


def _fake_positive(atoms: int) -> np.ndarray:
    """Placeholder positive row for replicates skipping the PU step."""
    row = np.zeros(atoms, dtype=np.int64)
    row[0] = 1
    return row


def estimate_alpha_batch(
    dist: DiscreteDistribution,
    target: Hypothesis,
    alpha: float,
    n: int,
    trials: int,
    seed: int,
    chunk: int = 64,
) -> np.ndarray:
    """Vectorized trials of the two-probe contamination-weight estimator.

    Each trial deploys the all-zeros then the all-ones predictor for one
    round apiece and returns the clamped count difference over n; semantics
    match the scalar estimator, with draws batched per chunk of trials.
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}")
    support = dist.support
    target_pat = target.predict_many(support).astype(np.int64)
    cumulative = np.cumsum(dist.probabilities)
    cumulative[-1] = 1.0
    rng = substream(seed, "estimate-alpha", alpha, n, trials)
    out = np.empty(trials)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        idx0 = np.searchsorted(cumulative, rng.random((m, n)), side="right")
        mask0 = rng.random((m, n)) < alpha
        ys0 = np.where(mask0, 0, target_pat[idx0])
        idx1 = np.searchsorted(cumulative, rng.random((m, n)), side="right")
        mask1 = rng.random((m, n)) < alpha
        ys1 = np.where(mask1, 1, target_pat[idx1])
        raw = (ys1.sum(axis=1) - ys0.sum(axis=1)) / float(n)
        out[done : done + m] = np.clip(raw, 0.0, 1.0)
        done += m
    return out
