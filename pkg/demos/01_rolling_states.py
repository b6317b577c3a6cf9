"""Cluster rolling correlation matrices of a planted three-regime market.

Generates synthetic prices with three correlation regimes, computes
20-day rolling Pearson matrices, clusters them with seeded restarts,
and prints how the recovered states line up with the planted regimes.
"""

import numpy as np

from marketstates.clustering import order_states, sigma_intra
from marketstates.corrmat import EpochSpec, pipeline_matrices
from marketstates.ingest import log_returns
from marketstates.synth import RegimeSpec, generate_block_market

spec = RegimeSpec(
    sector_sizes=(10, 10, 10, 10, 10, 10),
    intra=(0.1, 0.5, 0.9),
    inter=(0.05, 0.15, 0.3),
    durations=(350, 650, 500),
)
table, day_labels = generate_block_market(spec, seed=4)
print(f"market: {len(table.tickers)} stocks, {len(table.dates)} price days, "
      f"regimes of {spec.durations} return days")

returns = log_returns(table)
epochs = EpochSpec(length=20, shift=1)
mats = pipeline_matrices(returns, epochs, 0.0, None)
print(f"epochs: {len(mats)} rolling correlation matrices "
      f"(length {epochs.length}, shift {epochs.shift})")

result = sigma_intra(mats, k=3, n_init=30, seed=0)
seq = order_states(result.best, mats)
print(f"clustering: mean d_intra {result.mean_d_intra:.2f} over 30 restarts, "
      f"spread {result.sigma_intra:.4f}")
print("state mean correlations:", " ".join(f"{m:.3f}" for m in seq.state_means))

# states are ordered by mean correlation: 1 = calmest, 3 = most correlated
for s in range(1, 4):
    share = float((seq.states == s).mean())
    print(f"  state {s}: {share:5.1%} of epochs")

changes = np.flatnonzero(np.diff(seq.states)) + 1
print(f"{changes.size} state changes, first at epochs {changes.tolist()[:6]}")
print("planted boundaries fall at return days 350 and 1000; epochs near a "
      "boundary mix two regimes, so the sequence flickers before settling")
