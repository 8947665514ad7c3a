"""Exhaustive ground-truth solver for small instances."""
from __future__ import annotations

from dataclasses import dataclass, field

from .domain import Instance
from .search import DEFAULT_H_SAT, SearchState, children, root_state

MAX_ORACLE_VEHICLES = 12


class OracleTooLarge(RuntimeError):
    """The instance exceeds the oracle's vehicle guard or state budget."""


@dataclass
class OracleResult:
    optimal_delay: float
    optimal_sequence: list = field(default_factory=list)
    explored: int = 0


def _key(state: SearchState):
    # full transition-relevant state; the future depends on nothing else
    return (state.stage, round(state.start, 9), round(state.sd, 9),
            tuple(round(x, 9) for x in state.t), state.n)


class _Enumerator:
    def __init__(self, instance: Instance, h_sat: float, max_states: int):
        self.instance = instance
        self.h_sat = h_sat
        self.max_states = max_states
        self.explored = 0
        self.memo: dict = {}

    def best_remaining(self, state: SearchState):
        """Minimum delay still to come from ``state`` and the job sequence achieving it."""
        key = _key(state)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.explored += 1
        if self.explored > self.max_states:
            raise OracleTooLarge(f"instance too large for oracle (> {self.max_states} states)")
        kids = children(state, self.instance, self.h_sat)
        if not kids:
            result = (0.0, ())
        else:
            result = None
            for c in kids:
                rest, seq = self.best_remaining(c)
                total = (c.d - state.d) + rest
                if result is None or total < result[0] - 1e-12:
                    m, i, j, _ = c.job
                    result = (total, ((m, i, j),) + seq)
        self.memo[key] = result
        return result


def brute_force_optimal(instance: Instance, max_states: int = 2_000_000,
                        h_sat: float = DEFAULT_H_SAT) -> OracleResult:
    """Minimum cumulative delay over every feasible service order.

    Uses the same transition function as the search. Identical states
    reached along different orders are solved once.
    """
    if instance.num_vehicles > MAX_ORACLE_VEHICLES:
        raise OracleTooLarge(
            f"instance too large for oracle ({instance.num_vehicles} > {MAX_ORACLE_VEHICLES} vehicles)")
    enum = _Enumerator(instance, h_sat, max_states)
    delay, seq = enum.best_remaining(root_state(instance))
    return OracleResult(delay, list(seq), max(enum.explored, 1))


class RemainingDelayOracle:
    """Optimal delay-to-go from arbitrary states of one instance (shared memo)."""

    def __init__(self, instance: Instance, h_sat: float = DEFAULT_H_SAT, max_states: int = 2_000_000):
        self._enum = _Enumerator(instance, h_sat, max_states)

    def __call__(self, state: SearchState) -> float:
        return self._enum.best_remaining(state)[0]
