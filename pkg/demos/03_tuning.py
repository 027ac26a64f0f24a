# Grid search of the power split and of the hybrid harvesting factors.

from hehcnoma.channel import SCENARIOS
from hehcnoma.harness import eh_grid_defaults, optimize_alpha, optimize_eh
from hehcnoma.protocol import EhProtocol, PowerAllocation

hybrid = EhProtocol.hybrid(0.1, 0.1)
alpha_grid = [0.025 * i for i in range(1, 21)]

# Worst-user error rate against the weak user's share alpha2. Too small and
# the near user drowns, too large and the far user's symbol loses margin.
for name in ("I", "IV"):
    trace = []
    a2, value = optimize_alpha(SCENARIOS[name], hybrid, 20.0, alpha_grid, "max_user", evaluated=trace)
    print(f"Scenario {name}: alpha2* = {a2:.3f} (worst-user e2e {value:.3e})")
    for a, e1, e2, v in trace[::4]:
        print(f"    alpha2 {a:.3f}: U1 {e1:.3e}  U2 {e2:.3e}")

# Time- and power-splitting factors at 20 dB on a 0.05 grid. A strong source
# to relay link (Scenario I) tolerates more harvesting than Scenario IV.
betas, rhos = eh_grid_defaults()
pa = PowerAllocation.from_alpha2(0.1)
for objective in ("max_user", "mean"):
    for name in ("I", "IV"):
        beta, rho, value = optimize_eh(SCENARIOS[name], pa, 20.0, betas, rhos, objective)
        print(f"{objective:8s} Scenario {name}: beta* = {beta:.2f}, rho* = {rho:.2f}, objective {value:.3e}")
