"""
Detecting user-actions in an HTTP trace
=======================================

A synthetic trace mixes a few clicks with many embedded objects. We extract
the per-request features, look at which ones carry information, then train
and cross-validate a decision tree.
"""

# %%
import numpy as np

from clickstream import synth
from clickstream.classifier import Dataset, cross_validate, learning_curve, rank_features, train_tree
from clickstream.classifier.tree import tree_depth
from clickstream.features import features_for_records

trace = synth.generate(synth.GenConfig(seed=0, n_browsers=40))
print(len(trace.records), "requests,", f"{trace.action_fraction:.2%}", "user-actions")

# %%
# One feature vector per request; labels come from the generator's truth.
vectors = features_for_records(trace.records, labels=trace.labels)
data = Dataset.from_vectors(vectors)
print(data.X.shape)

# %%
# Information gain of each feature against the label.
for name, ig in rank_features(data)[:8]:
    print(f"{name:24s} {ig:.4f}")

# %%
# A page typically pulls in dozens of objects, so num_children splits the
# classes almost on its own.
kids = np.array([v.num_children for v in vectors])
is_user = data.y.astype(bool)
print("median children, user-actions:", np.median(kids[is_user]))
print("median children, automatic:   ", np.median(kids[~is_user]))

# %%
model = train_tree(data)
print("tree depth", tree_depth(model.root))
report = cross_validate(data, k=10, seed=0)
print(report.table())

# %%
# Learning curve over independent groups drawn from one distribution.
groups = synth.generate_groups(synth.GenConfig(seed=42, n_browsers=5), 5)
sets = [Dataset.from_vectors(features_for_records(t.records, labels=t.labels)) for t in groups]
for row in learning_curve(sets, k=3, seed=0):
    print(row["n"], f"cv F {row['cv'].f_measure:.3f}", f"holdout F {row['holdout'].f_measure:.3f}")
