"""Push a uniform superposition of every 1x2 system through ALG3 and tally
the rank register branch by branch."""

from collections import defaultdict

from qlinsys.linsolve_circuits import decode_input, read_general_solution, solve_superposed

state, lay = solve_superposed("alg3", 1, 2)
by_system = defaultdict(float)
rank_mass = defaultdict(float)
for key, amp in sorted(state.amps.items()):
    A, b = decode_input(key, lay)
    rank, special, _ = read_general_solution(key, lay)
    w = abs(amp) ** 2
    by_system[(tuple(A.to_rows()[0]), b.to_list()[0], rank)] += w
    rank_mass[rank] += w

print(f"{len(state)} nonzero amplitudes, norm {state.norm():.12f}")
for (row, rhs, rank), w in sorted(by_system.items()):
    print(f"A={list(row)} b={rhs} rank={rank} weight={w:.4f}")
print("rank distribution:", {r: round(p, 6) for r, p in sorted(rank_mass.items())})
