# %% [markdown]
# # Preprocessing one shot
#
# Sample a syndrome, let the local scan pick out likely single events, raise
# their priors and decode with and without the update.
# Run with `python demos/02_preprocessing_walkthrough.py`.

# %%
import numpy as np

from bbprep import BB_CODES, CheckAdjacency, Decoder, build_bb, build_dem, build_extraction_circuit, detect_events
from bbprep.harness import sample_shots

code = build_bb(BB_CODES["72"])
dem = build_dem(build_extraction_circuit(code, 6), 0.002)
adj = CheckAdjacency.from_code(code)

rng = np.random.default_rng(3)
xi, syn, obs = sample_shots(dem, rng, 200)
shot = int(np.argmax(xi.sum(axis=1)))  # the busiest of the 200 shots
print("fired events:", np.flatnonzero(xi[shot]).tolist())
print("flipped detectors:", np.flatnonzero(syn[shot]).tolist())

# %% [markdown]
# ## The scan
#
# Each match is removed from a working copy of the flipped set and the scan
# restarts from the lowest remaining detector.

# %%
report = detect_events(syn[shot], dem, adj)
print("matched events:", list(report.events), "after", report.scan_passes, "passes")
print("of which actually fired:", sorted(set(report.events) & set(np.flatnonzero(xi[shot]).tolist())))

# %% [markdown]
# ## Decoding both ways

# %%
decoder = Decoder(dem, adj)
for label, factor in (("baseline", None), ("factor 2", 2.0), ("factor 4", 4.0)):
    out = decoder.decode(syn[shot], factor)
    wrong = bool(np.any(dem.observable_flips(out.estimate) != obs[shot]))
    print(f"{label:>9}: converged={out.converged} iterations={out.iterations} logical error={wrong}")
