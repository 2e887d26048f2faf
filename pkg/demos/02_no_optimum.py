"""Welfare can approach a supremum that no strategy attains.

Bank v splits its unit between a cycle (which multiplies whatever enters it)
and a path.  Sending less into the cycle is always better, but sending
nothing leaves the cycle empty.
"""
from fractions import Fraction

from clearnet import min_clearing, welfare
from clearnet.gadgets import gen_no_social_opt, no_social_opt_profile

n = 3
net = gen_no_social_opt(n)
for eps in [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8), Fraction(1, 16), Fraction(1, 1000), Fraction(0)]:
    w = welfare(net, min_clearing(net, no_social_opt_profile(net, eps)).flow)
    print(f"eps = {str(eps):>6}: welfare {w} (= {float(w):.4f})")
print(f"supremum 1 + 2n = {1 + 2 * n}, value at eps = 0 is 1 + n = {1 + n}")
