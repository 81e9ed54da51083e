# %% [markdown]
# # Codes, circuits and detector error models
#
# Build the three bivariate-bicycle codes, look at the Z-check extraction
# circuit, and see how single CNOT faults show up on the detectors.
# Run with `python demos/01_codes_and_circuits.py`.

# %%
import numpy as np

from bbprep import BB_CODES, build_bb, build_dem, build_extraction_circuit, propagate
from bbprep.circuit import Fault

for name, spec in BB_CODES.items():
    code = build_bb(spec)
    print(f"{code.label:>16}: n={code.n_data}, k={code.k}, checks per side={code.h_z.rows}")

# %% [markdown]
# ## One memory experiment
#
# Six cycles of Z-check extraction on the [[72,8,6]] code.  Detectors are
# indexed `round * 36 + check`; the last round compares the final data
# readout with the last measured checks.

# %%
code = build_bb(BB_CODES["72"])
circ = build_extraction_circuit(code, 6)
print(circ.n_detectors, "detectors,", circ.n_observables, "observables")
print("\n".join(circ.dump().splitlines()[:12]))

# %% [markdown]
# ## A data qubit's three checks
#
# Faults on the first two CNOTs touching data qubit 0 in cycle 2.  Each row
# lists the qubit's checks in gate order for rounds 2 and 3; every pattern
# XORs to 111 across the two rounds.

# %%
q, cycle = 0, 2
cnots = sorted(
    (op.tick, i, op) for i, op in enumerate(circ.ops) if op.name == "CX" and op.cycle == cycle and op.qubits[0] == q
)
checks = [op.qubits[1] - circ.n_data for _, _, op in cnots]
for gate, pauli in ((0, "XI"), (0, "XX"), (1, "XZ"), (1, "XY")):
    site = next(s for s in circ.fault_sites if s.op == cnots[gate][1] and s.kind == "cnot")
    dets = set(propagate(circ, Fault(site.index, pauli, 0.001)).detectors)
    rows = ["".join("1" if circ.detector(c, r) in dets else "0" for c in checks) for r in (cycle, cycle + 1)]
    print(f"{pauli} on CNOT {gate + 1}: round {cycle} {rows[0]}  round {cycle + 1} {rows[1]}")

# %% [markdown]
# ## The merged model
#
# Faults with the same detector and observable footprint fold into one event.

# %%
dem = build_dem(circ, 0.001)
sizes = np.bincount([len(e.detectors) for e in dem.events])
print(len(dem), "events; footprint sizes:", {k: int(v) for k, v in enumerate(sizes) if v})
print("total prior mass:", round(float(dem.priors.sum()), 4))
