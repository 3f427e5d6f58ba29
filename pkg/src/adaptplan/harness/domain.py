"""Robot Delivery domain text and the two-robot running example.

Robots drive between locations, switch machines on, load an item at a
machine (which needs a second robot present) and deliver it to a location.
The machine switches itself off once an item is produced.  Durations are
bounded around their nominal values so that moderately noisy execution stays
inside the constraints.
"""

DURATION_SLACK = (0.8, 1.3)

_DOMAIN = """\
(define (domain robot_delivery)
  (:requirements :typing :durative-actions :fluents :negative-preconditions
                 :equality :timed-initial-literals)
  (:types robot location - object
          machine - location)
  (:predicates (robot_at ?r - robot ?l - location)
               (machine_on ?m - machine)
               (holding ?r - robot)
               (unload_requested ?r - robot ?l - location)
               (accepting ?l - location)
               (delivered_at ?l - location))
  (:functions (travel_time ?from ?to - location))

  (:durative-action goto
    :parameters (?r - robot ?from ?to - location)
    :duration (and (>= ?duration (* {lo} (travel_time ?from ?to)))
                   (<= ?duration (* {hi} (travel_time ?from ?to))))
    :condition (at start (robot_at ?r ?from))
    :effect (and (at start (not (robot_at ?r ?from)))
                 (at end (robot_at ?r ?to))))

  (:durative-action switch_on
    :parameters (?r - robot ?m - machine)
    :duration (and (>= ?duration {switch_lo}) (<= ?duration {switch_hi}))
    :condition (and (at start (not (machine_on ?m)))
                    (over all (robot_at ?r ?m)))
    :effect (at end (machine_on ?m)))

  (:durative-action load_at_machine
    :parameters (?r1 ?r2 - robot ?m - machine)
    :duration (and (>= ?duration {load_lo}) (<= ?duration {load_hi}))
    :condition (and (at start (not (= ?r1 ?r2)))
                    (at start (machine_on ?m))
                    (at start (not (holding ?r1)))
                    (over all (robot_at ?r1 ?m))
                    (over all (robot_at ?r2 ?m)))
    :effect (and (at end (holding ?r1))
                 (at end (not (machine_on ?m)))))

  (:durative-action ask_unload
    :parameters (?r - robot ?l - location)
    :duration (and (>= ?duration {ask_lo}) (<= ?duration {ask_hi}))
    :condition (and (at start (holding ?r))
                    (over all (robot_at ?r ?l)))
    :effect (at end (unload_requested ?r ?l)))

  (:durative-action wait_unload
    :parameters (?r - robot ?l - location)
    :duration (and (>= ?duration {wait_lo}) (<= ?duration {wait_hi}))
    :condition (and (at start (unload_requested ?r ?l))
                    (over all (robot_at ?r ?l))
                    (over all (accepting ?l)))
    :effect (and (at end (delivered_at ?l))
                 (at end (not (holding ?r)))
                 (at end (not (unload_requested ?r ?l)))))
)
"""

NOMINAL = {"switch_on": 5.0, "load_at_machine": 15.0, "ask_unload": 5.0, "wait_unload": 15.0}


def domain_text(slack=DURATION_SLACK):
    lo, hi = slack
    fmt = {"lo": f"{lo:g}", "hi": f"{hi:g}"}
    for key, name in (("switch", "switch_on"), ("load", "load_at_machine"),
                      ("ask", "ask_unload"), ("wait", "wait_unload")):
        fmt[f"{key}_lo"] = f"{lo * NOMINAL[name]:g}"
        fmt[f"{key}_hi"] = f"{hi * NOMINAL[name]:g}"
    return _DOMAIN.format(**fmt)


ROBOT_DELIVERY_DOMAIN = domain_text()

RUNNING_EXAMPLE_PROBLEM = """\
(define (problem running_example)
  (:domain robot_delivery)
  (:objects r0 r1 - robot
            wp0 wp1 - location
            m0 - machine)
  (:init (robot_at r0 wp1)
         (robot_at r1 wp0)
         (accepting wp1)
         (= (travel_time wp0 wp1) 12) (= (travel_time wp1 wp0) 12)
         (= (travel_time wp0 m0) 9)   (= (travel_time m0 wp0) 9)
         (= (travel_time wp1 m0) 14)  (= (travel_time m0 wp1) 14))
  (:goal (delivered_at wp1))
)
"""

RUNNING_EXAMPLE_PLAN = """\
   0.000:  (goto r0 wp1 m0)           [14.000]
   0.000:  (goto r1 wp0 m0)           [ 9.000]
   14.001: (switch_on r0 m0)          [ 5.000]
   19.002: (load_at_machine r1 r0 m0) [15.000]
   34.002: (goto r1 m0 wp1)           [14.000]
   48.002: (ask_unload r1 wp1)        [ 5.000]
   53.003: (wait_unload r1 wp1)       [15.000]
"""


def running_example():
    """Return the grounded running-example problem and its time-triggered plan."""
    from ..plan_io import parse_domain_problem, parse_time_triggered_plan

    problem = parse_domain_problem(ROBOT_DELIVERY_DOMAIN, RUNNING_EXAMPLE_PROBLEM)
    return problem, parse_time_triggered_plan(RUNNING_EXAMPLE_PLAN, problem)
