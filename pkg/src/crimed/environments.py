"""Corrupted bandit instances.

An arm draws its true reward from a Gaussian, optionally mixed with a
misspecification law.  What the policy observes passes through a corruption
channel: with probability ``1 - eps`` the true reward itself, otherwise a
draw from the channel's law at that step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Union

import numpy as np

from .corrupted_kl import check_eps, huber_pair_densities, sample_huber_corruption
from .errors import ConfigError, DomainError


def make_rng(master_seed: int, rep: int = 0) -> np.random.Generator:
    """Philox generator keyed by ``(master_seed, rep)`` through numpy's SeedSequence hash."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(master_seed), int(rep)])))


@dataclass(frozen=True)
class Gaussian:
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale!r}")

    @property
    def mean(self):
        return self.loc

    def sample(self, rng, step, arm):
        return self.loc + self.scale * rng.standard_normal()


@dataclass(frozen=True)
class Cauchy:
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"scale must be positive, got {self.scale!r}")

    @property
    def mean(self):
        return None

    def sample(self, rng, step, arm):
        return self.loc + self.scale * rng.standard_cauchy()


@dataclass(frozen=True)
class PointMass:
    value: float

    @property
    def mean(self):
        return self.value

    def sample(self, rng, step, arm):
        return self.value


@lru_cache(maxsize=256)
def _pair_for(left: float, right: float, eps: float):
    return huber_pair_densities(left, right, eps)


@dataclass(frozen=True)
class HuberPairAdversary:
    """Worst-case corruption making an arm look like a Gaussian centred at ``target``.

    Relative to the arm's own Gaussian part, a target above the arm mean
    yields the left law H1 of the pair, a target below yields H2.  Gaps are
    standardised by the arm's sigma.
    """

    target: float

    @property
    def mean(self):
        return None

    def sample(self, rng, step, arm, eps):
        sigma = arm.sigma
        own = arm.mean / sigma
        other = self.target / sigma
        if other > own:
            pair, side = _pair_for(own, other, eps), "left"
        else:
            pair, side = _pair_for(other, own, eps), "right"
        return sigma * sample_huber_corruption(pair, side, rng)


@dataclass(frozen=True)
class Segment:
    start: int
    stop: int | None
    law: "Law"


@dataclass(frozen=True)
class Schedule:
    """Time-varying corruption: ``law`` applies on steps ``start <= n < stop``."""

    segments: tuple[Segment, ...]

    @property
    def mean(self):
        return None

    def law_at(self, step: int):
        for seg in self.segments:
            if seg.start <= step and (seg.stop is None or step < seg.stop):
                return seg.law
        raise DomainError(f"schedule has no corruption law for step {step}")

    def sample(self, rng, step, arm, eps):
        return _draw(self.law_at(step), rng, step, arm, eps)


Law = Union[Gaussian, Cauchy, PointMass, HuberPairAdversary, Schedule]


def _draw(law, rng, step, arm, eps):
    if isinstance(law, (HuberPairAdversary, Schedule)):
        return law.sample(rng, step, arm, eps)
    return law.sample(rng, step, arm)


@dataclass(frozen=True)
class ArmModel:
    mean: float
    sigma: float = 1.0
    misspec_weight: float = 0.0
    misspec_law: Gaussian | Cauchy | PointMass | None = None
    misspec_gap: float | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if not 0.0 <= self.misspec_weight < 0.5:
            raise DomainError(f"misspecification weight must lie in [0, 0.5), got {self.misspec_weight!r}")
        if self.misspec_weight > 0 and self.misspec_law is None:
            raise DomainError("a positive misspecification weight needs a misspecification law")
        if self.misspec_gap is not None and self.misspec_law is not None:
            law_mean = self.misspec_law.mean
            if law_mean is not None and abs(law_mean - self.mean) > self.misspec_gap:
                raise DomainError("misspecification law mean is farther than misspec_gap from the arm mean")

    @property
    def effective_mean(self) -> float:
        if self.misspec_weight == 0.0:
            return self.mean
        law_mean = self.misspec_law.mean
        if law_mean is None:
            return math.nan
        return (1.0 - self.misspec_weight) * self.mean + self.misspec_weight * law_mean

    def sample(self, rng: np.random.Generator) -> float:
        if self.misspec_weight > 0.0 and rng.random() < self.misspec_weight:
            return self.misspec_law.sample(rng, None, self)
        return self.mean + self.sigma * rng.standard_normal()


@dataclass(frozen=True)
class CorruptionChannel:
    eps: float = 0.0
    law: Law | None = None

    def __post_init__(self):
        object.__setattr__(self, "eps", check_eps(self.eps))
        if self.eps > 0 and self.law is None:
            raise DomainError("a channel with eps > 0 needs a corruption law")


class Pull(NamedTuple):
    true_reward: float
    observation: float
    corrupted: bool


@dataclass(frozen=True)
class BanditInstance:
    arms: tuple[ArmModel, ...]
    channels: tuple[CorruptionChannel, ...]
    name: str = "custom"
    effective_means: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.arms:
            raise DomainError("an instance needs at least one arm")
        if len(self.arms) != len(self.channels):
            raise DomainError("need exactly one corruption channel per arm")
        means = tuple(a.effective_mean for a in self.arms)
        if any(math.isnan(m) for m in means):
            raise DomainError("every arm needs a finite effective mean")
        object.__setattr__(self, "effective_means", means)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def best_mean(self) -> float:
        return max(self.effective_means)

    @property
    def optimal_arm(self) -> int:
        return int(np.argmax(self.effective_means))

    @property
    def gaps(self) -> tuple[float, ...]:
        best = self.best_mean
        return tuple(best - m for m in self.effective_means)

    @property
    def eps(self) -> float:
        return max(ch.eps for ch in self.channels)

    @property
    def misspec_weight(self) -> float:
        return max(a.misspec_weight for a in self.arms)

    @property
    def sigma(self) -> float:
        sigmas = {a.sigma for a in self.arms}
        if len(sigmas) != 1:
            raise DomainError("arms do not share a common sigma")
        return sigmas.pop()

    def pull(self, arm: int, step: int, rng: np.random.Generator) -> Pull:
        """Sample the true reward of ``arm`` and what the learner gets to see.

        The corruption coin is drawn first and independently of everything
        else; the ``corrupted`` flag is for diagnostics only.
        """
        model = self.arms[arm]
        channel = self.channels[arm]
        coin = rng.random()
        reward = model.sample(rng)
        if coin < channel.eps:
            return Pull(reward, float(_draw(channel.law, rng, step, model, channel.eps)), True)
        return Pull(reward, reward, False)


SETTING_HORIZON = 10_000
_MEANS = (0.8, 0.9, 1.0)
_MISSPEC_MEANS = (0.6, 0.8, 1.0)
PRESETS = ("setting1", "setting2", "setting3", "setting4", "setting5")


def _gaussian_arms(means, sigma=0.5):
    return tuple(ArmModel(m, sigma) for m in means)


def preset_instance(name: str) -> BanditInstance:
    """The five experimental settings (all with horizon ``SETTING_HORIZON``)."""
    if name == "setting1":
        chans = tuple(CorruptionChannel(0.01, Gaussian(loc, 1.0)) for loc in (1.0, 1.0, 0.8))
        return BanditInstance(_gaussian_arms(_MEANS), chans, name)
    if name == "setting2":
        chans = tuple(CorruptionChannel(0.01, Gaussian(loc, 1.0)) for loc in (10.0, 10.0, -20.0))
        return BanditInstance(_gaussian_arms(_MEANS), chans, name)
    if name == "setting3":
        chans = tuple(CorruptionChannel(0.01, Cauchy(loc, 1.0)) for loc in (10.0, 10.0, -20.0))
        return BanditInstance(_gaussian_arms(_MEANS), chans, name)
    if name in ("setting4", "setting5"):
        arms = tuple(ArmModel(m, 0.5, 0.1, Gaussian(3.0, 0.5)) for m in _MISSPEC_MEANS)
        if name == "setting4":
            chans = tuple(CorruptionChannel() for _ in arms)
        else:
            chans = tuple(CorruptionChannel(0.01, Gaussian(loc, 1.0)) for loc in (10.0, 10.0, -20.0))
        return BanditInstance(arms, chans, name)
    raise ConfigError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")


# Serialisation -----------------------------------------------------------

def law_to_dict(law) -> dict:
    if isinstance(law, Gaussian):
        return {"kind": "gaussian", "loc": law.loc, "scale": law.scale}
    if isinstance(law, Cauchy):
        return {"kind": "cauchy", "loc": law.loc, "scale": law.scale}
    if isinstance(law, PointMass):
        return {"kind": "point", "value": law.value}
    if isinstance(law, HuberPairAdversary):
        return {"kind": "huber_pair", "target": law.target}
    if isinstance(law, Schedule):
        return {"kind": "schedule", "segments": [
            {"start": s.start, "stop": s.stop, "law": law_to_dict(s.law)} for s in law.segments]}
    raise TypeError(f"not a corruption law: {law!r}")


_LAW_FIELDS = {
    "gaussian": ({"loc", "scale"}, lambda d: Gaussian(float(d.get("loc", 0.0)), float(d.get("scale", 1.0)))),
    "cauchy": ({"loc", "scale"}, lambda d: Cauchy(float(d.get("loc", 0.0)), float(d.get("scale", 1.0)))),
    "point": ({"value"}, lambda d: PointMass(float(d["value"]))),
    "huber_pair": ({"target"}, lambda d: HuberPairAdversary(float(d["target"]))),
}


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    for key in d:
        if key not in allowed:
            raise ConfigError(f"{where}: unknown field {key!r}")


def law_from_dict(d: dict, where: str = "law"):
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"{where}: expected an object with a 'kind' field")
    kind = d["kind"]
    if kind == "schedule":
        _reject_unknown(d, {"kind", "segments"}, where)
        segs = []
        for i, s in enumerate(d.get("segments", [])):
            _reject_unknown(s, {"start", "stop", "law"}, f"{where}.segments[{i}]")
            segs.append(Segment(int(s.get("start", 0)), None if s.get("stop") is None else int(s["stop"]),
                                law_from_dict(s["law"], f"{where}.segments[{i}].law")))
        return Schedule(tuple(segs))
    if kind not in _LAW_FIELDS:
        raise ConfigError(f"{where}.kind: unknown law kind {kind!r}")
    allowed, build = _LAW_FIELDS[kind]
    _reject_unknown(d, allowed | {"kind"}, where)
    try:
        return build(d)
    except KeyError as exc:
        raise ConfigError(f"{where}: missing field {exc.args[0]!r}") from None


_ARM_FIELDS = {"mean", "sigma", "misspec_weight", "misspec_law", "misspec_gap", "eps", "corruption"}


def instance_to_dict(instance: BanditInstance) -> dict:
    arms = []
    for arm, ch in zip(instance.arms, instance.channels):
        d = {"mean": arm.mean, "sigma": arm.sigma}
        if arm.misspec_weight:
            d["misspec_weight"] = arm.misspec_weight
            d["misspec_law"] = law_to_dict(arm.misspec_law)
        if arm.misspec_gap is not None:
            d["misspec_gap"] = arm.misspec_gap
        d["eps"] = ch.eps
        if ch.law is not None:
            d["corruption"] = law_to_dict(ch.law)
        arms.append(d)
    return {"name": instance.name, "arms": arms}


def instance_from_dict(d: dict, where: str = "instance") -> BanditInstance:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    _reject_unknown(d, {"name", "arms"}, where)
    if not isinstance(d.get("arms"), list) or not d["arms"]:
        raise ConfigError(f"{where}.arms: expected a non-empty list")
    arms, chans = [], []
    for i, a in enumerate(d["arms"]):
        loc = f"{where}.arms[{i}]"
        if not isinstance(a, dict):
            raise ConfigError(f"{loc}: expected an object")
        _reject_unknown(a, _ARM_FIELDS, loc)
        if "mean" not in a:
            raise ConfigError(f"{loc}: missing field 'mean'")
        try:
            misspec = a.get("misspec_law")
            arms.append(ArmModel(
                float(a["mean"]), float(a.get("sigma", 1.0)), float(a.get("misspec_weight", 0.0)),
                None if misspec is None else law_from_dict(misspec, f"{loc}.misspec_law"),
                None if a.get("misspec_gap") is None else float(a["misspec_gap"]),
            ))
            corruption = a.get("corruption")
            chans.append(CorruptionChannel(
                float(a.get("eps", 0.0)),
                None if corruption is None else law_from_dict(corruption, f"{loc}.corruption"),
            ))
        except (DomainError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{loc}: {exc}") from None
    return BanditInstance(tuple(arms), tuple(chans), str(d.get("name", "custom")))
