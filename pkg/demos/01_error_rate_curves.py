# Closed-form error rates of the two-hop NOMA chain, swept over total SNR.
#
# Every protocol spends the same total energy per block, so the x-axis is the
# fair total SNR P_T/N_0 and the protocol factors are applied internally.

import numpy as np

from hehcnoma.analytic import e2e_aber
from hehcnoma.channel import SCENARIOS
from hehcnoma.protocol import EhProtocol, PowerAllocation

pa = PowerAllocation.from_alpha2(0.1)  # far user gets 90% of the power
protocols = {
    "hybrid": EhProtocol.hybrid(beta=0.1, rho=0.1),
    "ps": EhProtocol.ps(rho=0.1),
    "ts": EhProtocol.ts(beta=0.1),
    "own supply": EhProtocol.no_eh(),
}
snr_grid = np.arange(0, 45, 5)

for name in ("I", "IV"):
    sc = SCENARIOS[name]
    print(f"\nScenario {name}: relay/user spreads "
          f"{sc.relay_link.omega:g}/{sc.user1_link.omega:g}/{sc.user2_link.omega:g}, m = {sc.relay_link.m:g}")
    print("SNR dB " + "".join(f"{p:>24}" for p in protocols))
    for snr in snr_grid:
        cells = []
        for proto in protocols.values():
            b = e2e_aber(sc, proto, pa, float(snr))
            cells.append(f"{b.e2e_u1:10.3e} / {b.e2e_u2:9.3e}")
        print(f"{snr:6d} " + "".join(f"{c:>24}" for c in cells))

# The breakdown keeps the individual hops; at high SNR the harvested-power
# second hop dominates because its power itself fades with the relay gain.
b = e2e_aber(SCENARIOS["I"], protocols["hybrid"], pa, 30.0)
print("\nScenario I, hybrid, 30 dB:")
for stage in ("relay", "phase2", "e2e"):
    print(f"  {stage:7s} U1 {b.get(stage, 1):.3e}   U2 {b.get(stage, 2):.3e}")
