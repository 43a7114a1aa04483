"""
Hunting for effect heterogeneity with an honest forest
======================================================

Trains the causal forest twice on the same covariates: once where the true
treatment effect is zero for everyone, once where it is +1 for men and 0
for women. The null run shows what honest estimation buys (predictions hug
zero instead of chasing noise); the gendered run shows the forest finding
the subgroup without being told it exists.
"""

import numpy as np

from retirelab import ForestParams, PopulationSpec, predict_cate, simulate_population, train_forest
from retirelab.forest import FEATURE_NAMES, cate_summary, training_arrays

# Covariates come from a simulated roster with all enrollment effects
# switched off, so any structure in y is ours to plant.
records = simulate_population(
    PopulationSpec(effect_email=0.0, effect_email_phone=0.0), seed=424242
)
X, y_null, w = training_arrays(records)
print(f"training set: {len(y_null)} members, features {FEATURE_NAMES}")
print(f"treated share: {w.mean():.3f}")

params = ForestParams(n_trees=500)

# Run 1: the null outcome. Honest trees estimate each leaf on rows the
# split search never saw, so spurious splits collapse toward zero. Expect a
# LeafInheritance warning: leaves whose estimation sample runs too thin
# inherit an ancestor's estimate instead of reporting a noisy one.
null_forest = train_forest(X, y_null, w, params, seed=7)
null_cates = predict_cate(null_forest, X)
s = cate_summary(null_forest, X)
print("\nnull outcome (true effect 0 everywhere)")
print(f"  predicted effects: mean {s['mean']:+.4f}, sd {s['sd']:.4f}")
print(f"  middle 90%: [{s['percentiles']['p05']:+.4f}, {s['percentiles']['p95']:+.4f}]")
print(f"  share inside [-0.3, 0.3]: "
      f"{np.mean(np.abs(null_cates) <= 0.3):.1%}")

# Run 2: plant a gendered effect of +1 on the same rows. The male column
# is one of the four features, so the forest can find the boundary.
rng = np.random.default_rng(5150)
male = X[:, FEATURE_NAMES.index("male")]
y_gender = 1.0 * w * male + rng.normal(0.0, 0.5, size=len(w))
gender_forest = train_forest(X, y_gender, w, params, seed=11)
cates = predict_cate(gender_forest, X)
print("\ngendered outcome (true effect +1 for men, 0 for women)")
print(f"  mean predicted effect, men:   {cates[male == 1].mean():+.4f}")
print(f"  mean predicted effect, women: {cates[male == 0].mean():+.4f}")
print(f"  recovered gap: {cates[male == 1].mean() - cates[male == 0].mean():.4f}")

# Which features did the splits actually use? Count split nodes per
# feature across the forest.
def split_counts(forest):
    counts = np.zeros(len(FEATURE_NAMES), dtype=int)
    def walk(node):
        if hasattr(node, "feature"):
            counts[node.feature] += 1
            walk(node.left)
            walk(node.right)
    for tree in forest.trees:
        walk(tree.root)
    return counts

for label, forest in (("null", null_forest), ("gendered", gender_forest)):
    counts = split_counts(forest)
    total = counts.sum()
    shares = ", ".join(
        f"{name} {c / total:.0%}" for name, c in zip(FEATURE_NAMES, counts)
    )
    print(f"\nsplit usage ({label}, {total} splits): {shares}")

# Splits happen either way (noise always offers candidates), but only the
# gendered forest concentrates on the male column, and only its predictions
# move away from zero.
