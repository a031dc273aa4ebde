"""
Minimum long-loop FVS of regular clique networks
================================================

Every vertex sits in K cliques of size n. The symmetric fixed point gives the
entropy density as a function of beta; the minimum feedback fraction is read
where that entropy reaches zero.
"""

from longloop import rs_fixed_point, rs_minfvs_scan

# one temperature sweep for K=10 triangles
for beta in (0.0, 2.0, 5.0, 8.0, 9.5, 10.0):
    r = rs_fixed_point(10, 3, beta)
    print(f"beta={beta:4.1f}  rho={r.rho:.5f}  s={r.entropy_density:+.5f}")

best = rs_minfvs_scan(10, 3)
print(f"\nK=10, n=3: rho_min = {best.rho_min:.5f} at beta* = {best.beta_star:.3f} ({best.branch})")

print("\n K   n=3      n=4")
for K in range(2, 21, 2):
    a, b = rs_minfvs_scan(K, 3), rs_minfvs_scan(K, 4)
    print(f"{K:2d}   {a.rho_min:.4f}   {b.rho_min:.4f}")
