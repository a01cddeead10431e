"""Demo system under test: a tiny telephony company with per-call and per-SMS billing.

Tariffs are fixed constants per call or message type. A fault switch
plants one of two billing bugs.
"""

from __future__ import annotations

from importlib import resources

from . import dsl
from .context import ContextBinding, EffectRule, Insert, Param, Query
from .engine import break_upon, loop, seq
from .events import ANY, Event, EventSet, Pattern, ev
from .harness import Observation, SutAdapter
from .threads import TERMINATED, BProgram, BThreadSpec, Done, sync

CALL_TARIFF = {"domestic": 3, "international": 8}
SMS_TARIFF = {"sms": 1, "mms": 2}
FAULTS = ("none", "drop-sms-charge", "double-call-charge")
USERS = ("u1", "u2")
SUT_EVENTS = frozenset({"addUser", "call", "sms", "testBill"})


def tariff(event: Event) -> int:
    """Charge to the payer (first payload value) of a call or sms event."""
    table = CALL_TARIFF if event.name == "call" else SMS_TARIFF if event.name == "sms" else None
    if table is None:
        raise ValueError(f"{event.label} is not billable")
    return table[event.payload[2]]


class TelephonySut:
    def __init__(self, fault: str = "none"):
        if fault not in FAULTS:
            raise ValueError(f"unknown fault {fault!r}; choose from {', '.join(FAULTS)}")
        self.fault = fault
        self.bills: dict[str, int] = {}
        self.log: list[tuple] = []

    def add_user(self, user: str) -> None:
        if user in self.bills:
            raise ValueError(f"user {user} exists")
        self.bills[user] = 0

    def _check_pair(self, a, b):
        for u in (a, b):
            if u not in self.bills:
                raise ValueError(f"unknown user {u}")
        if a == b:
            raise ValueError("caller and callee coincide")

    def call(self, caller: str, callee: str, kind: str) -> None:
        self._check_pair(caller, callee)
        charge = CALL_TARIFF[kind]
        if self.fault == "double-call-charge":
            charge *= 2
        self.bills[caller] += charge
        self.log.append(("call", caller, callee, kind))

    def sms(self, sender: str, receiver: str, kind: str) -> None:
        self._check_pair(sender, receiver)
        if self.fault != "drop-sms-charge":
            self.bills[sender] += SMS_TARIFF[kind]
        self.log.append(("sms", sender, receiver, kind))

    def bill(self, user: str) -> int:
        if user not in self.bills:
            raise ValueError(f"unknown user {user}")
        return self.bills[user]


class TelephonyAdapter(SutAdapter):
    def __init__(self, fault: str = "none"):
        self.fault = fault
        self.sut = TelephonySut(fault)

    def reset(self) -> None:
        self.sut = TelephonySut(self.fault)

    def accepts(self, event: Event) -> bool:
        return event.name in SUT_EVENTS

    def apply(self, event: Event) -> Observation:
        p = event.payload
        try:
            if event.name == "addUser":
                self.sut.add_user(*p)
            elif event.name == "call":
                self.sut.call(*p)
            elif event.name == "sms":
                self.sut.sms(*p)
            elif event.name == "testBill":
                return Observation("observed", [ev("billIs", p[0], self.sut.bill(p[0]))])
            else:
                return Observation("rejected", detail=f"unsupported event {event.label}")
        except (ValueError, KeyError, TypeError) as exc:
            return Observation("rejected", detail=str(exc))
        return Observation()


def oracle(event: Event, obs: Observation):
    """``testBill(u, amt)`` expects the SUT to report ``billIs(u, amt)``."""
    if event.name != "testBill":
        return None
    expected = [ev("billIs", *event.payload)]
    if list(obs.events) != expected:
        return expected, list(obs.events)
    return None


def call_events(users=USERS) -> list[Event]:
    return [ev("call", a, b, k) for a in users for b in users if a != b for k in CALL_TARIFF]


def sms_events(users=USERS) -> list[Event]:
    return [ev("sms", a, b, k) for a in users for b in users if a != b for k in SMS_TARIFF]


# -- scenario handlers -------------------------------------------------------

def handlers(users=USERS) -> dict:
    """Handler table for the bundled scenario documents."""
    domains = {"Calls": call_events(users), "SMSs": sms_events(users)}

    def in_domain(env, obj, domain):
        if domain not in domains:
            raise KeyError(f"unknown domain {domain!r}")
        return domains[domain]

    def calculate_charge(env):
        return {"charge": tariff(env["event"])}

    def update_bill(env, kind):
        event = env["event"]
        if event.name != kind:
            raise ValueError(f"expected a {kind} event, got {event.label}")
        return dsl.Emit([ev("updateBill", event.payload[0], env["charge"])])

    def reset_amount(env):
        return {"amount": 0}

    def add_to_amount(env, var):
        return {"amount": env["amount"] + env[var]}

    def test_bill(env, user):
        return dsl.Emit([ev("testBill", user, env["amount"])])

    return {
        "{} in {}": in_domain,
        "calculate charge": calculate_charge,
        "update bill according {} type": update_bill,
        "reset amount": reset_amount,
        "add {} to amount": add_to_amount,
        "test bill of {}": test_bill,
    }


def fixture_text(name: str) -> str:
    """Text of a bundled ``.bps`` document."""
    return resources.files("bpcover").joinpath("data", f"{name}.bps").read_text(encoding="utf-8")


def fixture_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("bpcover").joinpath("data").iterdir()
                  if p.name.endswith(".bps"))


def scenario_threads(name: str, users=USERS) -> list[BThreadSpec]:
    return dsl.compile(dsl.parse(fixture_text(name)), handlers(users))


def monitor_program(users=USERS) -> BProgram:
    """The closed-loop billing model written in the scenario language."""
    return BProgram(scenario_threads("telephony_monitor", users))


def pipeline_program(users=USERS) -> BProgram:
    """Finite model for explore/generate/run; accepting under quiescent acceptance."""
    return BProgram(scenario_threads("telephony_pipeline", users))


# -- hand-written threads --------------------------------------------------

def charge_per_call_twin(users=USERS) -> BThreadSpec:
    """Engine-combinator version of the "charge Per Call" scenario: pick a call, bill its payer."""
    calls = call_events(users)

    def pick(local, cause):
        if cause is None:
            return sync(request=calls), None
        return Done(cause)

    def bill(call, cause):
        if cause is None:
            return sync(request=ev("updateBill", call.payload[0], tariff(call))), call
        return TERMINATED

    return loop(seq(BThreadSpec("pick", pick), BThreadSpec("bill", bill)), name="charge Per Call")


def charge_per(kind: str) -> BThreadSpec:
    """Waiting form: ``forever { wait kind(*); request updateBill(payer, charge) }``."""
    trigger = EventSet(patterns=[Pattern(kind, None)])

    def step(local, cause):
        if cause is None or local is not None:
            return sync(wait=trigger), None
        return sync(request=ev("updateBill", cause.payload[0], tariff(cause))), cause

    return BThreadSpec(f"charge per {kind}", step)


def traffic(kinds=("call", "sms"), users=USERS) -> BThreadSpec:
    """Forever request every call/sms between users that exist in the store."""
    wanted = {"call": call_events, "sms": sms_events}

    def step(local, cause, store):
        present = tuple(sorted(store.ids_of_type("User")))
        events = [e for k in kinds for e in wanted[k](users)
                  if e.payload[0] in present and e.payload[1] in present]
        return sync(request=events, wait=EventSet(patterns=[Pattern("addUser", None)])), present

    return BThreadSpec("traffic", step, None, context_aware=True)


def pending_guard() -> BThreadSpec:
    """No bill test (and no new charge) while an updateBill is outstanding."""
    charged = EventSet(patterns=[Pattern("call", None), Pattern("sms", None)])
    blocked = charged | EventSet(patterns=[Pattern("testBill", None), Pattern("checkBill", None)])
    update = EventSet(patterns=[Pattern("updateBill", None)])

    def step(local, cause):
        if cause is None or local == "pending":
            return sync(wait=charged), "idle"
        return sync(wait=update, block=blocked), "pending"

    return BThreadSpec("pending guard", step, "idle")


def bill_checker() -> BThreadSpec:
    """Per-user accumulator: request ``testBill(u, amt)``; break upon ``updateBill`` to add."""

    def body(local, cause):
        if cause is None:
            user, amt = (local, 0) if isinstance(local, str) else local
            return sync(request=ev("testBill", user, amt)), (user, amt)
        return Done(local)

    def add(caught, cause):
        user, amt = caught.state
        payer, y = caught.event.payload
        return Done((user, amt + y if payer == user else amt))

    trigger = EventSet(patterns=[Pattern("updateBill", (ANY, ANY))])
    return loop(break_upon(BThreadSpec("check", body), {trigger: BThreadSpec("add", add)}),
                name="correct amount is billed")


def online_program(users=USERS) -> BProgram:
    """Context-oriented version: one bill checker spawned per ``User`` entity."""
    create = seq(*[BThreadSpec(f"add {u}", _once(ev("addUser", u))) for u in users],
                 name="create users")
    return BProgram(
        threads=[create, traffic(users=users), charge_per("call"), charge_per("sms"),
                 pending_guard()],
        bindings=[ContextBinding(Query("users", "User"), bill_checker())],
        effects=[EffectRule("addUser", 1, [Insert(Param(0), "User")])],
    )


def _once(event: Event):
    def step(local, cause):
        return (sync(request=event), None) if cause is None else TERMINATED
    return step
