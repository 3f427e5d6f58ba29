"""Feedback events exchanged between the world and the executor."""
from __future__ import annotations

from typing import NamedTuple


class ActionCompleted(NamedTuple):
    time: float
    action: str
    node: str  # start node id, or the node itself for instantaneous actions
    success: bool


class ExogenousFlip(NamedTuple):
    time: float
    proposition: str
    value: bool


class TimedLiteralFired(NamedTuple):
    time: float
    proposition: str
    value: bool


class Observation(NamedTuple):
    time: float
    pairs: tuple  # ((proposition, observed bool), ...)
    numerics: tuple = ()


class DispatchRejected(NamedTuple):
    time: float
    node: str


class Tick(NamedTuple):
    time: float
