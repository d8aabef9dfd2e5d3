"""
What if popular sites switch to HTTPS?
======================================

Encrypted domains vanish from the trace. We drop the most popular domains
until a target share of user-actions is gone and watch the metrics move.
"""

# %%
from clickstream import synth
from clickstream.https_sim import simulate_checkpoints, simulate_migration
from clickstream.promoters import load_promoter_config

trace = synth.generate(synth.GenConfig(seed=2))
graphs = list(trace.truth_graphs.values())
report = simulate_checkpoints(graphs, actions=trace.actions)
print("first domains to migrate:", report["order"][:5])

# %%
base = report["baseline"]
for key in ("graphs", "sessions", "longest_path_mean", "reachable_se_mean", "n_wcc_mean"):
    row = [f"{base[key]:.3f}"]
    row += [f"{cp['metrics'][key]:.3f}" for cp in report["checkpoints"]]
    print(f"{key:20s}", "  ".join(row))

# %%
for cp in report["checkpoints"]:
    print(f"target {cp['target']:.2f} achieved {cp['achieved']:.3f} with {len(cp['migrated'])} domains")

# %%
# Promoters that keep sending referers after migrating leave referer-only
# vertices behind. The popular content sites go first above, so here the
# promoters migrate first to make the difference visible.
promoters = sorted(load_promoter_config().all_domains)
order = promoters + [d for d in report["order"] if d not in promoters]
for retain in (None, ()):
    r = simulate_migration(graphs, order, 0.15, retain=retain, actions=trace.actions)
    label = "promoters keep referers" if retain is None else "no referers"
    print(f"{label:24s} migrated {len(r.migrated)}  WCC mean {r.metrics['n_wcc_mean']:.2f}  "
          f"reachable SE {r.metrics['reachable_se_mean']:.3f}")
