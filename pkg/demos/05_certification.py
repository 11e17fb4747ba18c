"""Machine-checking the inequalities the reduction stands on.

Every certificate evaluates both sides of one inequality with the exact
solvers on one concrete instance; the suite then reports each as pass/fail
with its tolerance.
"""

import numpy as np

import amdp_lab as lab

cycle = lab.two_state_cycle()
pi = lab.DeterministicPolicy(np.array([0, 0]))

print("== the reduction gap bound on one policy ==")
cert = lab.certify_gain_discount_gap(cycle, pi, gamma=0.9)
print(f"|gain - (1-g)V|_inf = {cert.lhs:.6f} <= sp((1-g)V) = {cert.rhs:.6f}"
      f"  -> {'pass' if cert.passed else 'FAIL'}")

print("\n== span bounds at the calibrated discount ==")
for cert in lab.certify_span_bounds(cycle, epsilon=0.25):
    print(f"{cert.name:>28}: {cert.lhs:.6f} <= {cert.rhs:.6f}"
          f"  -> {'pass' if cert.passed else 'FAIL'}")

print("\n== the full argument, link by link ==")
opt = lab.amdp_optimal(cycle)
for cert in lab.reduction_chain_certificates(cycle, 0.25, opt.H, opt=opt):
    print(f"{cert.name:>32}: {cert.lhs:.3e} <= {cert.rhs + cert.tolerance:.3e}"
          f"  -> {'pass' if cert.passed else 'FAIL'}")

print("\n== a seeded batch ==")
certs = []
for iid, m in lab.standard_corpus(count=25, master_seed=7):
    certs.extend(lab.certify_span_bounds(m, 0.1, iid))
    certs.append(lab.certify_reduction_bound(m, 0.1, 0.0, iid))
failed = [c for c in certs if not c.passed]
print(f"{len(certs)} certificates on 25 random weakly-communicating MDPs, "
      f"{len(failed)} failures")

lab.write_certificates_csv(certs, "certificates_demo.csv")
lab.write_certificates_report(certs, "certificates_demo.json")
print("wrote certificates_demo.csv and certificates_demo.json")
