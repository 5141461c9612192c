"""Burke's theorem for the M/M/1 queue.

Arrivals at rate 1, services at rate 2: in equilibrium the queue length is
geometric with ratio 1/2, departures form a rate-1 Poisson process, and the
departures before time 0 are independent of the queue at time 0.
"""
from lppsh.queues import burke_bernoulli_test, burke_poisson_test

rep = burke_poisson_test(1.0, 2.0, replicas=4000, seeds=[0, 1, 2])
print("Poisson queue, lambda=1, mu=2")
for s in rep.sub_tests:
    print(f"  {s.name:22s} median p = {s.p_value:.3f}  {'ok' if s.passed else 'REJECTED'}")

rep = burke_bernoulli_test(0.3, 0.6, replicas=4000, seeds=[0, 1, 2])
print("Bernoulli queue, p=0.3, u=0.6")
for s in rep.sub_tests:
    print(f"  {s.name:22s} median p = {s.p_value:.3f}  {'ok' if s.passed else 'REJECTED'}")
