"""
Telephony billing: scenarios as tests
=====================================

A toy billing service is driven two ways: live, by a model that generates
calls and messages and checks each bill as it goes, and offline, by a small
suite generated from a finite version of the model. Two planted faults show
what a failure looks like.
"""

from bpcover import dsl, telephony
from bpcover.coverage import greedy_suite
from bpcover.engine import UniformRandom
from bpcover.explorer import explore
from bpcover.harness import online_monitor, run_suite
from bpcover.telephony import TelephonyAdapter, oracle

# the per-call billing scenario, written in the Gherkin-like language
text = telephony.fixture_text("charge_per_call")
print(dsl.format(dsl.parse(text)))

# live: the scenario model drives the service and checks every bill
for fault in telephony.FAULTS:
    report = online_monitor(telephony.monitor_program(), TelephonyAdapter(fault), oracle,
                            UniformRandom(1), max_events=500, seed=1)
    meta = report.metadata
    print(f"monitor, fault={fault}: {meta['end']} after {meta['events']} events")
    for v in report.failures:
        print(f"   {v.event}: expected {v.expected}, observed {v.observed}")

# offline: explore the finite model, cover every ordered pair of event names
lts = explore(telephony.pipeline_program(), depth_bound=2000, accept_quiescent=True)
suite = greedy_suite(lts, 2)
print(f"\n{lts.n_states} states; suite of {suite.size} words, total length {suite.total_length}")
for word in suite.words:
    print("  ", " ".join(e.label for e in word))

for fault in telephony.FAULTS:
    report = run_suite(suite, TelephonyAdapter(fault), oracle, seed=0)
    print(f"suite, fault={fault}: pass={report.count('pass')} fail={report.count('fail')}")
