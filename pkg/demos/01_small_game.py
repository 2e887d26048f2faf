"""A five-bank game: how payment orders shape the clearing states.

Bank v1 holds one unit and owes v2 and v4; v2 owes v3 and v5; v3 owes v1.
Only v1 and v2 choose anything, namely which creditor to pay first.
"""
from clearnet import max_clearing, min_clearing, run_dynamics
from clearnet.gadgets import EXAMPLE1_PROFILES, example1_profile, gen_example1


def show(flow):
    paid = {e: str(x) for e, x in flow.flows.items() if x}
    assets = {v: str(flow.assets(v)) for v in flow.net.nodes}
    return f"paid {paid}\n      assets {assets}"


net = gen_example1()
for name, (v1_first, v2_first) in EXAMPLE1_PROFILES.items():
    prof = example1_profile(net, v1_first, v2_first)
    print(f"profile {name}: v1 pays {v1_first} first, v2 pays {v2_first} first")
    print("  max", show(max_clearing(net, prof).flow))
    print("  min", show(min_clearing(net, prof).flow))

# In profile a the cycle v1 -> v2 -> v3 -> v1 stays empty under minimal
# clearing; the three banks on it can jointly start it.
prof = example1_profile(net, *EXAMPLE1_PROFILES["a"])
run = run_dynamics(net, prof, "min")
for step in run.steps:
    print("improvement step:", step.to_json())
print("certificate:", run.certificate.witness)
