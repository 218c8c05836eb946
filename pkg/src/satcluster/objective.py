"""Offline mission-objective evaluation over a completed episode log.

Breaks the mission value into the acquisition score Q (sum of priorities
over unique captures), energy use F1 (total Wh consumed, to minimise),
downlinked volume F2 (GB, to maximise) and payload appropriateness F3 (sum
of suitability terms over captures). The composite J scalarises these the
same way the step reward does (energy weighted by alpha-scaled depletion
penalties, downlink by beta), excluding failure penalties, so a perfectly
replayed episode satisfies J = sum of non-failure reward terms.
"""

from __future__ import annotations

from dataclasses import dataclass

_REQUIRED_META = ("n_agents", "alpha", "beta", "complete")
_REQUIRED_AGENT_KEYS = ("branch", "q", "rho", "delta", "c", "reward", "dd_gb",
                        "consumed_wh", "captured_aoi")


class IncompleteLogError(ValueError):
    """Episode log is missing, truncated, or structurally malformed."""


@dataclass(frozen=True)
class ObjectiveBreakdown:
    acquisition_q: float       # sum of priorities over unique captures
    power_used_wh: float       # F1: total energy consumed
    downlinked_gb: float       # F2: total data transmitted
    payload_score: float       # F3: sum of suitability terms over captures
    energy_penalty: float      # alpha-weighted depletion penalties charged
    downlink_bonus: float      # beta-weighted downlink bonuses earned
    failures: int
    composite_j: float

    def as_dict(self) -> dict:
        return {
            "Q": self.acquisition_q,
            "F1_power_wh": self.power_used_wh,
            "F2_downlinked_gb": self.downlinked_gb,
            "F3_payload": self.payload_score,
            "energy_penalty": self.energy_penalty,
            "downlink_bonus": self.downlink_bonus,
            "failures": self.failures,
            "J": self.composite_j,
        }


def evaluate_mission_objective(episode_log: dict) -> ObjectiveBreakdown:
    """Compute the objective breakdown from a complete episode log."""
    if not isinstance(episode_log, dict) or "meta" not in episode_log or "steps" not in episode_log:
        raise IncompleteLogError("episode log must have 'meta' and 'steps'")
    meta = episode_log["meta"]
    for key in _REQUIRED_META:
        if key not in meta:
            raise IncompleteLogError(f"episode log meta missing {key!r}")
    if not meta["complete"]:
        raise IncompleteLogError("episode log is incomplete (episode still running)")

    q_total = 0.0
    f1 = 0.0
    f2 = 0.0
    f3 = 0.0
    rho_total = 0.0
    delta_total = 0.0
    failures = 0
    seen_captures: set[str] = set()
    for step_num, step in enumerate(episode_log["steps"]):
        if "agents" not in step or len(step["agents"]) != meta["n_agents"]:
            raise IncompleteLogError(f"step {step_num}: malformed agent entries")
        for agent in step["agents"]:
            for key in _REQUIRED_AGENT_KEYS:
                if key not in agent:
                    raise IncompleteLogError(f"step {step_num}: agent entry missing {key!r}")
            f1 += agent["consumed_wh"]
            f2 += agent["dd_gb"]
            if agent["branch"] == "capture":
                aoi = agent["captured_aoi"]
                if aoi in seen_captures:
                    raise IncompleteLogError(f"step {step_num}: duplicate capture of {aoi}")
                seen_captures.add(aoi)
                q_total += agent["q"]
                f3 += agent["c"]
            if agent["branch"] in ("capture", "downlink", "power"):
                rho_total += agent["rho"]
            if agent["branch"] == "downlink":
                delta_total += agent["delta"]
            if agent["branch"] == "failure":
                failures += 1

    j = q_total + f3 + delta_total - rho_total
    return ObjectiveBreakdown(
        acquisition_q=q_total,
        power_used_wh=f1,
        downlinked_gb=f2,
        payload_score=f3,
        energy_penalty=rho_total,
        downlink_bonus=delta_total,
        failures=failures,
        composite_j=j,
    )
