"""
A stolen printer, in both signing modes
=======================================

Runs the two bundled scenario scripts and prints the event trace.
"""

from smartticket.simnet import CANONICAL_THEFT_SCRIPT, CENTRAL_THEFT_SCRIPT, scenario_run

for title, script in [("distributed signing", CANONICAL_THEFT_SCRIPT),
                      ("central signing", CENTRAL_THEFT_SCRIPT)]:
    print(f"--- {title} ---")
    print(scenario_run(script).render())
