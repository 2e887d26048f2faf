"""Two games with fixed seniorities and no pure Nash equilibrium."""
from clearnet.equilibria import search_equilibrium_report, utility_table
from clearnet.gadgets import MAX_NO_NE_PLAYERS, MIN_NO_NE_PLAYERS, gen_max_no_ne, gen_min_no_ne

net, sets = gen_max_no_ne()
print("max clearing, utilities of v1, v4, v7:")
for key, utils in utility_table(net, sets, "max", MAX_NO_NE_PLAYERS).items():
    print("  ", " ".join(key), "->", ", ".join(map(str, utils)))
rep = search_equilibrium_report(net, sets, "max")
print("equilibrium:", rep.profile is not None)
for labels, dev in rep.witnesses[:3]:
    d = dev.to_json()
    print("  from", labels, "deviate", d["changes"], d["before"], "->", d["after"])

net, sets = gen_min_no_ne(2, ())
print("\nmin clearing (delta = 2), utilities of v1, v5, v9:")
for key, utils in utility_table(net, sets, "min", MIN_NO_NE_PLAYERS).items():
    print("  ", " ".join(key), "->", ", ".join(map(str, utils)))
print("equilibrium:", search_equilibrium_report(net, sets, "min").profile is not None)
