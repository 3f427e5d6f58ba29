"""Parser and eager grounder for a PDDL2.1 subset.

Supported: typed objects and constants, predicates, numeric functions,
durative actions with ``at start``/``over all``/``at end`` conditions and
``at start``/``at end`` effects, plain actions, ``assign``/``increase``/
``decrease`` effects, fixed or bounded ``:duration`` and timed initial
literals.  Anything else raises :class:`UnsupportedFeatureError`.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

from .errors import GroundingError, MalformedConditionError, PlanSyntaxError, UnsupportedFeatureError
from .model import (
    Condition,
    DurativeAction,
    Effect,
    InstantaneousAction,
    PlanningProblem,
    TimedLiteral,
    Timing,
    evaluate,
)

_TOKEN = re.compile(r"\(|\)|[^\s()]+")
_UNSUPPORTED = {
    "or", "imply", "exists", "forall", "when", "scale-up", "scale-down",
    "#t", ":constraints", "preference", "at-most-once", "sometime",
}
_COMPARATORS = {"<", "<=", "=", ">=", ">"}
_ARITH = {"+", "-", "*", "/"}


def _is_number(tok):
    try:
        float(tok)
    except (TypeError, ValueError):
        return False
    return True


def parse_sexpr(text):
    text = re.sub(r";[^\n]*", "", text).lower()
    stack = [[]]
    for tok in _TOKEN.findall(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise PlanSyntaxError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise PlanSyntaxError("unbalanced '('")
    if len(stack[0]) != 1:
        raise PlanSyntaxError("expected exactly one top-level expression")
    return stack[0][0]


def _typed_list(items):
    """``[a b - t c - u d]`` -> ``[(a, t), (b, t), (c, u), (d, object)]``."""
    out, pending = [], []
    it = iter(items)
    for tok in it:
        if tok == "-":
            typ = next(it)
            if isinstance(typ, list):
                raise UnsupportedFeatureError("either-types")
            out.extend((name, typ) for name in pending)
            pending = []
        else:
            pending.append(tok)
    out.extend((name, "object") for name in pending)
    return out


@dataclass
class Schema:
    name: str
    params: list
    durative: bool
    condition: list  # [(timing, sexpr)]
    effect: list  # [(timing, sexpr)]
    duration: object = None


@dataclass
class Domain:
    name: str
    parents: dict = field(default_factory=dict)
    constants: list = field(default_factory=list)
    predicates: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    schemas: list = field(default_factory=list)

    def is_subtype(self, typ, ancestor):
        seen = set()
        while typ is not None and typ not in seen:
            if typ == ancestor:
                return True
            seen.add(typ)
            typ = self.parents.get(typ, "object" if typ != "object" else None)
        return ancestor == "object"


def _split_timed(expr, durative, what):
    """Flatten an ``and`` tree into ``[(timing, sub-expression)]``."""
    if not expr:
        return []
    head = expr[0] if isinstance(expr, list) and expr else None
    if head == "and":
        out = []
        for sub in expr[1:]:
            out.extend(_split_timed(sub, durative, what))
        return out
    if durative:
        if head == "at" and len(expr) == 3 and expr[1] in ("start", "end"):
            return [(Timing.AT_START if expr[1] == "start" else Timing.AT_END, expr[2])]
        if head == "over" and len(expr) == 3 and expr[1] == "all":
            if what == "effect":
                raise UnsupportedFeatureError("over all effect")
            return [(Timing.OVER_ALL, expr[2])]
        raise PlanSyntaxError(f"untimed {what} in durative action: {expr}")
    return [(Timing.UNTIMED, expr)]


def parse_domain(text):
    tree = parse_sexpr(text)
    if not tree or tree[0] != "define" or tree[1][0] != "domain":
        raise PlanSyntaxError("not a PDDL domain")
    dom = Domain(tree[1][1])
    for section in tree[2:]:
        key = section[0]
        if key == ":requirements":
            continue
        if key == ":types":
            for name, parent in _typed_list(section[1:]):
                dom.parents[name] = parent
        elif key == ":constants":
            dom.constants = _typed_list(section[1:])
        elif key == ":predicates":
            for pred in section[1:]:
                dom.predicates[pred[0]] = [t for _, t in _typed_list(pred[1:])]
        elif key == ":functions":
            items = section[1:]
            i = 0
            while i < len(items):
                fn = items[i]
                dom.functions[fn[0]] = [t for _, t in _typed_list(fn[1:])]
                i += 1
                if i < len(items) and items[i] == "-":
                    i += 2
        elif key in (":durative-action", ":action"):
            dom.schemas.append(_parse_schema(section, key == ":durative-action"))
        else:
            raise UnsupportedFeatureError(key)
    return dom


def _parse_schema(section, durative):
    name = section[1]
    fields = dict(zip(section[2::2], section[3::2]))
    params = _typed_list(fields.get(":parameters", []))
    cond_key = ":condition" if durative else ":precondition"
    for key in fields:
        if key not in (":parameters", cond_key, ":effect", ":duration"):
            raise UnsupportedFeatureError(key)
    return Schema(
        name,
        params,
        durative,
        _split_timed(fields.get(cond_key, []), durative, "condition"),
        _split_timed(fields.get(":effect", []), durative, "effect"),
        fields.get(":duration") if durative else None,
    )


@dataclass
class RawProblem:
    name: str
    domain: str
    objects: list
    init: list
    goal: object


def parse_problem_text(text):
    tree = parse_sexpr(text)
    if not tree or tree[0] != "define" or tree[1][0] != "problem":
        raise PlanSyntaxError("not a PDDL problem")
    raw = RawProblem(tree[1][1], "", [], [], [])
    for section in tree[2:]:
        key = section[0]
        if key == ":domain":
            raw.domain = section[1]
        elif key == ":objects":
            raw.objects = _typed_list(section[1:])
        elif key == ":init":
            raw.init = section[1:]
        elif key == ":goal":
            raw.goal = section[1]
        elif key in (":requirements", ":metric"):
            continue
        else:
            raise UnsupportedFeatureError(key)
    return raw


class _Grounder:
    def __init__(self, dom, raw):
        self.dom = dom
        self.objects = {}
        for name, typ in list(dom.constants) + list(raw.objects):
            if typ != "object" and typ not in dom.parents:
                raise GroundingError(f"object {name!r} has undeclared type {typ!r}")
            self.objects[name] = typ
        self.numerics = {}

    def of_type(self, typ):
        return sorted(o for o, t in self.objects.items() if self.dom.is_subtype(t, typ))

    def check_args(self, head, args, signature, what):
        if head not in signature:
            raise GroundingError(f"unknown {what} {head!r}")
        types = signature[head]
        if len(types) != len(args):
            raise GroundingError(f"{what} {head!r} expects {len(types)} arguments, got {len(args)}")
        for arg, typ in zip(args, types):
            if arg not in self.objects:
                raise GroundingError(f"unknown object {arg!r} in ({head} {' '.join(args)})")
            if not self.dom.is_subtype(self.objects[arg], typ):
                raise GroundingError(
                    f"object {arg!r} of type {self.objects[arg]!r} does not match {typ!r} in {head!r}"
                )

    def atom(self, expr, binding, check=False):
        args = [binding.get(a, a) for a in expr[1:]]
        if check:
            self.check_args(expr[0], args, self.dom.predicates, "predicate")
        elif expr[0] not in self.dom.predicates:
            raise GroundingError(f"unknown predicate {expr[0]!r}")
        return " ".join([expr[0]] + args)

    def fexp(self, expr, binding):
        if isinstance(expr, str):
            if expr.startswith("?") and expr != "?duration":
                raise GroundingError(f"unbound variable {expr!r}")
            try:
                return float(expr)
            except ValueError:
                if expr in self.dom.functions:
                    return expr
                raise GroundingError(f"bad numeric expression {expr!r}") from None
        if expr[0] in _ARITH:
            if len(expr) == 2 and expr[0] == "-":
                return ("-", 0.0, self.fexp(expr[1], binding))
            if len(expr) != 3:
                raise UnsupportedFeatureError(f"n-ary {expr[0]}")
            return (expr[0], self.fexp(expr[1], binding), self.fexp(expr[2], binding))
        if expr[0] not in self.dom.functions:
            raise UnsupportedFeatureError(str(expr[0]))
        args = [binding.get(a, a) for a in expr[1:]]
        return " ".join([expr[0]] + args)

    def condition(self, expr, binding, literals, numeric):
        """Accumulate a goal descriptor; returns False if a static test fails."""
        if not expr:
            return True
        head = expr[0]
        if head in _UNSUPPORTED:
            raise UnsupportedFeatureError(head)
        if head == "and":
            return all(self.condition(sub, binding, literals, numeric) for sub in expr[1:])
        if head == "not":
            inner = expr[1]
            if inner[0] == "=" and self._is_term_eq(inner):
                return binding.get(inner[1], inner[1]) != binding.get(inner[2], inner[2])
            if inner[0] in _UNSUPPORTED or inner[0] in ("and", "not") or inner[0] in _COMPARATORS:
                raise UnsupportedFeatureError(f"negated {inner[0]}")
            literals.add((self.atom(inner, binding), False))
            return True
        if head == "=" and self._is_term_eq(expr):
            return binding.get(expr[1], expr[1]) == binding.get(expr[2], expr[2])
        if head in _COMPARATORS:
            numeric.append((self.fexp(expr[1], binding), head, self.fexp(expr[2], binding)))
            return True
        literals.add((self.atom(expr, binding), True))
        return True

    def _is_term_eq(self, expr):
        return len(expr) == 3 and all(
            isinstance(a, str) and (a.startswith("?") or a in self.objects) for a in expr[1:]
        )

    def effect(self, expr, binding, props, numeric):
        if not expr:
            return
        head = expr[0]
        if head in _UNSUPPORTED:
            raise UnsupportedFeatureError(head)
        if head == "and":
            for sub in expr[1:]:
                self.effect(sub, binding, props, numeric)
        elif head == "not":
            p = self.atom(expr[1], binding)
            props.setdefault(p, 0.0)  # an add of the same atom wins
        elif head in ("assign", "increase", "decrease"):
            numeric.append((self.fexp(expr[1], binding), head, self.fexp(expr[2], binding)))
        else:
            props[self.atom(expr, binding)] = 1.0

    def duration(self, expr, binding):
        """Return (lb, ub, fixed) evaluated on the initial numeric state."""
        if expr is None:
            return 0.0, 0.0, True
        lb, ub, fixed = 0.0, math.inf, False
        parts = expr[1:] if expr[0] == "and" else [expr]
        for part in parts:
            cmp, var, value = part
            if var != "?duration":
                raise UnsupportedFeatureError(f"duration constraint on {var}")
            v = evaluate(self.fexp(value, binding), self.numerics)
            if cmp == "=":
                lb = ub = v
                fixed = True
            elif cmp in (">=", ">"):
                lb = max(lb, v)
            elif cmp in ("<=", "<"):
                ub = min(ub, v)
            else:
                raise UnsupportedFeatureError(f"duration comparator {cmp}")
        return lb, ub, fixed

    def ground_schema(self, schema):
        domains = [self.of_type(t) for _, t in schema.params]
        names = [n for n, _ in schema.params]
        for combo in itertools.product(*domains):
            binding = dict(zip(names, combo))
            action = self._instantiate(schema, binding)
            if action is not None:
                yield action

    def _instantiate(self, schema, binding):
        conds = {}
        for timing, expr in schema.condition:
            lits, nums = conds.setdefault(timing, (set(), []))
            if not self.condition(expr, binding, lits, nums):
                return None
        effects = {}
        for timing, expr in schema.effect:
            props, nums = effects.setdefault(timing, ({}, []))
            self.effect(expr, binding, props, nums)
        try:
            built = {t: Condition(l, n, t) for t, (l, n) in conds.items()}
            for cond in built.values():
                for lhs, _, rhs in cond.numeric:
                    evaluate(lhs, self.numerics), evaluate(rhs, self.numerics)
            effs = {t: Effect(p, n, t) for t, (p, n) in effects.items()}
            for eff in effs.values():
                for f, _, expr in eff.numeric:
                    evaluate(f, self.numerics), evaluate(expr, self.numerics)
            ident = " ".join([schema.name] + [binding[n] for n, _ in schema.params])
            if not schema.durative:
                return InstantaneousAction(
                    ident, built.get(Timing.UNTIMED, Condition()), effs.get(Timing.UNTIMED, Effect())
                )
            lb, ub, fixed = self.duration(schema.duration, binding)
        except MalformedConditionError:
            # references a fluent with no initial value: never applicable
            return None
        return DurativeAction(
            ident,
            built.get(Timing.AT_START, Condition(timing=Timing.AT_START)),
            built.get(Timing.OVER_ALL, Condition(timing=Timing.OVER_ALL)),
            built.get(Timing.AT_END, Condition(timing=Timing.AT_END)),
            effs.get(Timing.AT_START, Effect(timing=Timing.AT_START)),
            effs.get(Timing.AT_END, Effect(timing=Timing.AT_END)),
            (lb, ub),
            fixed,
        )


def parse_domain_problem(domain_text, problem_text):
    """Parse and fully ground a domain/problem pair into a PlanningProblem."""
    dom = parse_domain(domain_text)
    raw = parse_problem_text(problem_text)
    if raw.domain and raw.domain != dom.name:
        raise GroundingError(f"problem is for domain {raw.domain!r}, not {dom.name!r}")
    g = _Grounder(dom, raw)

    propositions = set()
    for pred, types in dom.predicates.items():
        for combo in itertools.product(*(g.of_type(t) for t in types)):
            propositions.add(" ".join((pred,) + combo))

    true, tils = set(), []
    for item in raw.init:
        if item[0] == "=":
            fn = item[1]
            g.check_args(fn[0], fn[1:], dom.functions, "function")
            g.numerics[" ".join(fn)] = float(item[2])
        elif item[0] == "at" and len(item) == 3 and _is_number(item[1]):
            time = float(item[1])
            lit = item[2]
            value = lit[0] != "not"
            atom = lit[1] if not value else lit
            tils.append(TimedLiteral(time, g.atom(atom, {}, check=True), value))
        elif item[0] == "not":
            continue
        else:
            true.add(g.atom(item, {}, check=True))

    lits, nums = set(), []
    g.condition(raw.goal, {}, lits, nums)
    for p, _ in lits:
        if p not in propositions:
            raise GroundingError(f"goal atom ({p}) does not match the predicate signature")
    goal = Condition(lits, nums)

    actions = {}
    for schema in dom.schemas:
        for action in g.ground_schema(schema):
            if action.id in actions:
                raise GroundingError(f"duplicate action {action.id!r}")
            actions[action.id] = action

    return PlanningProblem(
        propositions,
        frozenset(g.numerics),
        actions,
        true,
        dict(g.numerics),
        goal,
        tuple(sorted(tils)),
        raw.name,
    )
