"""Acceptance criteria, one test each, run at the stated tolerance and time
limit. Every test prints a single PASS/FAIL line."""

import time
from fractions import Fraction as F

import pytest
from hypothesis import HealthCheck, given, settings

from conftest import balanced_graphs
from rmdf.analysis import check_liveness, compute_hyperperiod, compute_tick, repetition_vector
from rmdf.cli import main
from rmdf.scenario import load_scenario, with_changes
from rmdf.sim import TokenConsume, simulate
from rmdf.specio import model_path
from rmdf.timing import max_wcets, periodicity_violations, timing_table

import test_properties as props


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, elapsed, limit, detail=""):
        with capsys.disabled():
            verdict = "PASS" if ok and elapsed < limit else "FAIL"
            extra = f" - {detail}" if detail else ""
            print(f"\n[{verdict}] criterion {number}: {title} "
                  f"({elapsed:.2f}s, limit {limit}s){extra}")
        assert ok, detail
        assert elapsed < limit, f"took {elapsed:.2f}s"
    return emit


def timed_call(fn):
    start = time.perf_counter()
    result = fn()
    return result, time.perf_counter() - start


def test_1_tick_derivation(report, ingenuity, capsys):
    code, elapsed = timed_call(lambda: main(["analyze", model_path("ingenuity.rmdf")]))
    out = capsys.readouterr().out
    tick = compute_tick(ingenuity)
    ok = code == 0 and "tick: 1/3 ms" in out and tick == F(1, 3)
    report(1, "tick is exactly 1/3 ms", ok, elapsed, 1, f"tick {tick}")


def test_2_deadlock_reproduction(report, ingenuity):
    g = ingenuity.with_channel("c6", init=F(0))
    result, elapsed = timed_call(lambda: check_liveness(g))
    d = result.deadlock
    ok = (not result.live and d is not None and
          (d.tick, d.actor, d.job, d.channel, d.deficit) ==
          (99, "Navigation Filter", 17, "c6", F(1, 50)))
    report(2, "deadlock at tick 99, Navigation Filter job 17, c6, deficit 1/50",
           ok, elapsed, 5, str(d))


def test_3_consistent_and_live(report, ingenuity):
    def run():
        consistent = all(repetition_vector(ingenuity, m).consistent
                         for m in ingenuity.mode_table.names)
        return consistent and compute_hyperperiod(ingenuity).consistent, check_liveness(ingenuity)
    (consistent, live), elapsed = timed_call(run)
    report(3, "bundled model is consistent and live", consistent and live.live,
           elapsed, 5, f"consistent={consistent} live={live.live}")


# Reference closed forms, first hyperperiod. Vision rows repeat every
# 100 ms; navigation rows have special cases at positions 0 and 33 of a
# 50-job cycle.
def _vision(consts):
    return lambda n: consts[(n - 1) % 3] + 100 * ((n - 1) // 3)


def _nav(first, case33, otherwise):
    def f(n):
        k = (n - 1) % 50
        off = 100 * ((n - 1) // 50)
        return first + off if k == 0 else case33 + off if k == 33 else otherwise(n)
    return f


EXACT_ROWS = {
    # actor: (jobs checked, release(n) or None, deadline(n) or None, windows or None)
    "IMU": (100, lambda n: 2 * (n - 1), lambda n: F(9, 5) + 2 * (n - 1), None),
    "Altimeter": (10, None, None, {F(11, 5)}),
    "Waypoints": (100, None, None, {F(2)}),
    "Camera": (6, None, None, {F(6, 5), F(28, 15), F(8, 15)}),
    "Feature Detection": (1, lambda n: F(3, 25), None, None),
    "Label Decider": (1, None, lambda n: F(8, 5), None),
    "Feature Tracking": (6, None, None, {F(36, 25), F(158, 75), F(58, 75)}),
    "Filtering Procedure": (6, lambda n: F(36 + 2500 * (n - 1), 75), _vision((2, 36, 68)),
                            {F(38, 25), F(164, 75), F(64, 75)}),
    "Pseudo Landmarks": (6, lambda n: F(27 + 2500 * (n - 1), 75), _vision((2, 36, 68)),
                         {F(41, 25), F(173, 75), F(73, 75)}),
    "Controlled Joiner": (6, lambda n: F(9 + 500 * (n - 1), 15), _vision((2, 36, 68)),
                          {F(7, 5), F(31, 15), F(11, 15)}),
    "Feature Match": (1, None, lambda n: F(11, 5), None),
    "Navigation Filter": (100, _nav(F(18, 25), F(5054, 75), lambda n: F(9, 25) + 2 * (n - 1)),
                          lambda n: F(12, 5) + 2 * (n - 1), None),
    "IMU-Correction": (100, lambda n: F(3, 25) + 2 * (n - 1), lambda n: 2 + 2 * (n - 1),
                       {F(47, 25)}),
    "NC-IMU-Integration": (100, lambda n: F(6, 25) + 2 * (n - 1),
                           lambda n: F(11, 5) + 2 * (n - 1), {F(49, 25)}),
    "FC-IMU-Integration": (100, lambda n: F(6, 25) + 2 * (n - 1),
                           lambda n: F(12, 5) + 2 * (n - 1), {F(54, 25)}),
    "State Propagation": (100, None, lambda n: F(13, 5) + 2 * (n - 1), None),
}

# Control rows exactly as written in the reference (releases, deadlines, window column).
REFERENCE_CONTROL = {
    "Control Altitude": (lambda n: F(24, 25) if n == 1 else F(3, 5) + 8 * (n - 1),
                         lambda n: F(14, 5) + 8 * (n - 1), {F(46, 25), F(11, 5)}, "1.2"),
    "Control Yaw 1": (lambda n: F(5072, 75) if n == 9 else F(13, 5) + 8 * (n - 1),
                      lambda n: F(24, 5) + 8 * (n - 1), {F(88, 75), F(11, 5)}, "1.17"),
    "Control Translation": (lambda n: F(2524, 25) if n == 13 else F(23, 5) + 8 * (n - 1),
                            lambda n: F(34, 5) + 8 * (n - 1), {F(46, 25), F(11, 5)}, "1.2"),
    "Control Yaw 2": (lambda n: F(12572, 75) if n == 21 else F(33, 5) + 8 * (n - 1),
                      lambda n: F(44, 5) + 8 * (n - 1), {F(88, 75), F(11, 5)}, "1.17"),
    "Motors": (_nav(F(27, 25), F(5081, 75), lambda n: 1 + 2 * (n - 1)),
               lambda n: 1 + 2 * (n - 1), {F(48, 25), F(94, 75), F(2)}, "1.25"),
}


def control_findings(rows, limits):
    findings = []
    for actor, (release, deadline, windows, reference_max) in REFERENCE_CONTROL.items():
        jobs = [r for r in rows if r.actor == actor]
        bad_rel = [r.n for r in jobs if r.release != release(r.n)]
        bad_dl = [r.n for r in jobs if r.deadline != deadline(r.n)]
        got_windows = {r.window for r in jobs}
        if bad_rel:
            findings.append(f"{actor}: reference release differs at jobs {bad_rel[:5]}"
                            f"{'...' if len(bad_rel) > 5 else ''}")
        if bad_dl:
            r = jobs[bad_dl[0] - 1]
            findings.append(f"{actor}: reference deadline differs at {len(bad_dl)} jobs "
                            f"(job {r.n}: computed {r.deadline}, reference {deadline(r.n)})")
        if got_windows != windows:
            findings.append(f"{actor}: window set {sorted(map(str, got_windows))} "
                            f"vs reference {sorted(map(str, windows))}")
        if abs(limits[actor] - F(reference_max)) > F(1, 100):
            findings.append(f"{actor}: minimum window {limits[actor]} "
                            f"(~{float(limits[actor]):.2f} ms) vs reference max WCET "
                            f"{reference_max} ms")
    return findings


def test_4_timing_table(report, ingenuity, capsys):
    def run():
        rows = timing_table(ingenuity)
        by = {(r.actor, r.n): r for r in rows}
        errors = []
        for actor, (jobs, release, deadline, windows) in EXACT_ROWS.items():
            for n in range(1, jobs + 1):
                r = by[(actor, n)]
                if release and r.release != release(n):
                    errors.append(f"{actor}#{n} release {r.release} != {release(n)}")
                if deadline and r.deadline != deadline(n):
                    errors.append(f"{actor}#{n} deadline {r.deadline} != {deadline(n)}")
            if windows is not None:
                got = {by[(actor, n)].window for n in range(1, jobs + 1)}
                if got != windows:
                    errors.append(f"{actor} windows {got} != {windows}")
        for n, want in ((1, F(18, 25)), (2, F(59, 25)), (34, F(5054, 75))):
            if by[("Navigation Filter", n)].release != want:
                errors.append(f"Navigation Filter#{n} release")
        control = ["Control Altitude", "Control Yaw 1", "Control Translation",
                   "Control Yaw 2", "Motors"]
        periodic = [v for v in periodicity_violations(ingenuity, cycles=2) if v[0] in control]
        if periodic:
            errors.append(f"control rows not periodic: {periodic[:3]}")
        return errors, control_findings(rows, max_wcets(ingenuity))
    (errors, findings), elapsed = timed_call(run)
    with capsys.disabled():
        print("\nfindings for control rows (reference closed forms vs computed):")
        for f in findings:
            print(f"  - {f}")
    report(4, "timing table matches reference rows exactly", not errors, elapsed, 10,
           "; ".join(errors[:5]))


REFERENCE_MAX_WCET = {"Camera": "0.53", "Feature Detection": "0.61", "Label Decider": "0.70",
             "Feature Tracking": "0.78", "Filtering Procedure": "0.85",
             "Pseudo Landmarks": "0.97", "Feature Match": "0.93", "Navigation Filter": "1.01",
             "IMU-Correction": "1.88", "NC-IMU-Integration": "1.96",
             "FC-IMU-Integration": "2.16", "IMU": "1.8", "Altimeter": "2.2",
             "State Propagation": "1.09", "Waypoints": "2.0"}
EXACT_LIMITS = {"Camera": F(8, 15), "Feature Match": F(14, 15), "Altimeter": F(11, 5),
                "IMU": F(9, 5), "Waypoints": F(2), "Feature Tracking": F(58, 75),
                "Navigation Filter": F(76, 75), "State Propagation": F(82, 75),
                "IMU-Correction": F(47, 25), "NC-IMU-Integration": F(49, 25),
                "FC-IMU-Integration": F(54, 25)}


def test_5_feasibility_table(report, ingenuity):
    limits, elapsed = timed_call(lambda: max_wcets(ingenuity))
    errors = [f"{a}: {limits[a]} vs {v}" for a, v in REFERENCE_MAX_WCET.items()
              if abs(limits[a] - F(v)) > F(1, 100)]
    errors += [f"{a}: {limits[a]} != {v}" for a, v in EXACT_LIMITS.items() if limits[a] != v]
    report(5, "max WCETs match the reference values within 0.01 ms", not errors, elapsed, 10,
           "; ".join(errors))


def test_6_anomaly_replay(report, ingenuity):
    scn = load_scenario("flight6")

    def run():
        naive = simulate(ingenuity, scn)
        lexi = simulate(ingenuity, with_changes(scn, joiner_policy="rmdf-lexicographic"))
        return naive, lexi
    (naive, lexi), elapsed = timed_call(run)
    d = naive.discards
    accepted = [e.tag for e in naive.of(TokenConsume) if e.actor == "Feature Match"]
    ok = (len(d) == 1 and d[0].actor == "Feature Match" and d[0].got == 2 and d[0].after == 3
          and 2 not in accepted and not lexi.discards)
    report(6, "one discard of frame 2 after frame 3; none with lexicographic joiner",
           ok, elapsed, 5, f"naive discards={[(x.got, x.after) for x in d]}, "
                           f"lexicographic discards={len(lexi.discards)}")


PROPERTY_SUITES = [
    ("hyperperiod restoration of channel levels", props.test_live_graphs_restore_channel_levels),
    ("token conservation in simulation traces", props.test_simulation_conserves_tokens),
    ("parse/serialize round trip", props.test_spec_round_trip),
    ("timing periodicity", props.test_timing_is_periodic),
    ("repetition vector vs sympy null space", props.test_repetition_vector_spans_the_null_space),
]


@pytest.mark.parametrize("title, suite", PROPERTY_SUITES, ids=[t for t, _ in PROPERTY_SUITES])
def test_7_property_suites(report, title, suite):
    error = None
    start = time.perf_counter()
    try:
        suite()
    except Exception as exc:            # report the counterexample, then fail
        error = f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
    elapsed = time.perf_counter() - start
    report(7, f"property suite: {title}", error is None, elapsed, 30, error or "")
