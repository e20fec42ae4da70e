"""Early-retrieval metrics on a worked example.

The truncated precision-recall area integrates the step curve only up to a
recall budget tau and renormalizes, so it rewards putting actives at the
very top of the ranking. Ties are broken by original index, which the tie
demo makes visible.
"""

import numpy as np

from explor.metrics import (
    ScoredSet,
    auprc,
    auprc_truncated,
    auroc,
    enrichment_factor,
    pr_curve,
)

# Ten compounds, four actives; the ranker puts one inactive near the top.
scores = np.array([0.95, 0.90, 0.85, 0.80, 0.70, 0.60, 0.50, 0.40, 0.30, 0.20])
labels = np.array([1, 0, 1, 1, 0, 0, 1, 0, 0, 0])
s = ScoredSet(scores, labels)

recall, precision = pr_curve(s)
print("rank  score  label  recall  precision")
for i in range(len(scores)):
    print(f"{i:>4}  {scores[i]:.2f}   {labels[i]}      {recall[i]:.2f}    {precision[i]:.3f}")

print("\ntruncated area vs the full curve:")
for tau in (0.25, 0.5, 1.0):
    print(f"  auprc@{tau:<4} = {auprc_truncated(s, tau):.4f}")
print(f"  auprc     = {auprc(s):.4f}")
print(f"  auroc     = {auroc(s):.4f}")
print(f"  ef@0.2    = {enrichment_factor(s, 0.2):.2f} "
      f"(top 2 rows all active, prevalence {labels.mean():.1f})")

# Tied scores fall back to input order: the earlier row ranks first.
tied = ScoredSet([0.7, 0.7, 0.7], [0, 1, 1])
r, p = pr_curve(tied)
print("\nall scores tied, labels [0, 1, 1]: precision path", np.round(p, 3).tolist())
print(f"auroc of an uninformative (all-tied) ranking: {auroc(tied)}")
