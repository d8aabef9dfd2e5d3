"""
Clickstream graphs, sessions and promoters
==========================================

User-actions become one directed graph per browser and UTC day. Referers
give the edges. We look at path lengths, components, session timing and
which domains send users elsewhere.
"""

# %%
import numpy as np

from clickstream import synth
from clickstream.graph import daily_consumption, graph_metrics
from clickstream.promoters import load_promoter_config, promoter_fraction_table, promoter_ranking
from clickstream.sessions import idle_times, sessions_by_browser, think_times
from clickstream.stats import ecdf, ks_two_sample, summary, tukey_outliers
from clickstream.trace import DeviceClass, classify_device

trace = synth.generate(synth.GenConfig(seed=1))
graphs = list(trace.truth_graphs.values())
print(len(graphs), "browser-day graphs from", len(trace.actions), "user-actions")

# %%
rows = [graph_metrics(g) for g in graphs if g.visit_count]
for key in ("pages", "longest_path", "n_wcc", "biggest_wcc_ratio"):
    s = summary([r[key] for r in rows])
    print(f"{key:18s} median {s['median']:.2f}  mean {s['mean']:.2f}")

# %%
# Long browsing chains are rare; Tukey's fences pick them out.
paths = [r["longest_path"] for r in rows]
t = tukey_outliers(paths)
print("upper fence", t.upper_fence, "outliers", len(t.outliers), "of", len(paths))

# %%
cons = daily_consumption(graphs)
for device in DeviceClass:
    pages = [c["pages"] for c in cons if c["device"] == device.value]
    if pages:
        print(f"{device.value:10s} median pages/day {np.median(pages):.0f}  ({len(pages)} days)")

# %%
sessions = sessions_by_browser(trace.actions)
by_browser: dict = {}
for a in trace.actions:
    by_browser.setdefault(a.browser, []).append(a)
tt = np.array([x for acts in by_browser.values() for x in think_times(acts)])
print("think-times under 60 s:", f"{np.mean(tt < 60):.1%}")
idle = [x for ss in sessions.values() for x in idle_times(ss)]
print("sessions", sum(map(len, sessions.values())), "median idle", np.median(idle), "s")
print("think-time ECDF at its first points:", ecdf(tt)[:3])

# %%
# Do PCs and smartphones think at the same pace? Same generator, so KS should not reject.
def device_tt(cls):
    return [x for b, acts in by_browser.items() if classify_device(b.user_agent) == cls for x in think_times(acts)]

pc, phone = device_tt(DeviceClass.PC), device_tt(DeviceClass.SMARTPHONE)
if pc and phone:
    r = ks_two_sample(pc, phone)
    print(f"KS D={r.statistic:.3f} p={r.p_value:.3f} reject={r.reject}")

# %%
for domain, frac in promoter_ranking(graphs)[:5]:
    print(f"{domain:16s} {frac:.3f}")
config = load_promoter_config()
table, excluded = promoter_fraction_table(graphs, config)
for key in ("direct_se", "reachable_se", "direct_osn", "reachable_osn"):
    print(key, f"{np.mean([r[key] for r in table]):.3f}")
print(len(excluded), "graphs below the page threshold")
