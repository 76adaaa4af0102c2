"""Index policies for corrupted Gaussian bandits.

All policies share the same loop: ``select_arm()`` then ``update(arm, obs)``.
During the initial phase every arm is pulled ``n_min`` times in round-robin
order; afterwards the policy plays the arm minimising (IMED-style) or
maximising (UCB-style) its index, breaking ties toward the lowest arm index.
"""

from __future__ import annotations

import math

from .corrupted_kl import KlGeometry, check_eps
from .errors import ConfigError, DomainError
from .robust_stats import MedianAccumulator, n_min as forced_exploration, s_eps


class IndexPolicy:
    name = "index"

    def __init__(self, n_arms: int, horizon: int, n_min: int = 1):
        if n_arms < 1:
            raise DomainError("need at least one arm")
        if n_min < 1:
            raise DomainError("n_min must be at least 1")
        self.n_arms = n_arms
        self.horizon = horizon
        self.n_min = n_min
        self.counts = [0] * n_arms
        self.step = 0

    @property
    def initialising(self) -> bool:
        return self.step < self.n_arms * self.n_min

    def select_arm(self) -> int:
        if self.initialising:
            return self.step % self.n_arms
        return self._select_by_index()

    def update(self, arm: int, observation: float) -> None:
        self._record(arm, observation)
        self.counts[arm] += 1
        self.step += 1

    def indices(self) -> list[float]:
        raise NotImplementedError

    def _select_by_index(self) -> int:
        idx = self.indices()
        return idx.index(min(idx))

    def _record(self, arm: int, observation: float) -> None:
        raise NotImplementedError


class Crimed(IndexPolicy):
    """Median-based IMED index with the corrupted Gaussian divergence.

    The empirical-best arm (largest median) gets index ``log N``; every other
    arm gets ``N * kl(Med_a - delta_min, Med*) + log N``.  Medians are divided
    by ``sigma`` before entering the divergence.
    """

    name = "crimed"

    def __init__(self, n_arms: int, horizon: int, eps: float, sigma: float = 1.0,
                 n_min: int | None = None):
        eps = check_eps(eps)
        if eps == 0.0:
            raise DomainError("CRIMED needs 0 < eps < 1/2")
        if n_min is None:
            n_min = forced_exploration(horizon, eps)
        super().__init__(n_arms, horizon, n_min)
        if not sigma > 0:
            raise DomainError("sigma must be positive")
        self.eps = eps
        self.sigma = float(sigma)
        self.geometry = KlGeometry(eps)
        self.delta_min = self.geometry.delta_min
        self.accumulators = [MedianAccumulator() for _ in range(n_arms)]

    def _record(self, arm, observation):
        self.accumulators[arm].insert(observation)

    def medians(self) -> list[float]:
        return [acc.median() for acc in self.accumulators]

    def empirical_best(self) -> int:
        meds = self.medians()
        return meds.index(max(meds))

    def indices(self) -> list[float]:
        meds = [m / self.sigma for m in self.medians()]
        best_med = max(meds)
        best = meds.index(best_med)
        kl = self.geometry.kl
        dmin = self.delta_min
        out = []
        for a, (med, n) in enumerate(zip(meds, self.counts)):
            log_n = math.log(n)
            if a == best or best_med - med <= 0.0:
                out.append(log_n)
            else:
                out.append(n * kl(med - dmin, best_med) + log_n)
        return out


def make_crimed(n_arms: int, horizon: int, eps: float, sigma: float = 1.0,
                variant: str = "squared") -> Crimed:
    if horizon < 3:
        raise DomainError("horizon must be at least 3")
    if not 0.0 < check_eps(eps):
        raise DomainError("CRIMED needs 0 < eps < 1/2")
    return Crimed(n_arms, horizon, eps, sigma, forced_exploration(horizon, eps, variant))


def make_crimed_star(n_arms: int, horizon: int, eps: float, sigma: float = 1.0) -> Crimed:
    policy = Crimed(n_arms, horizon, eps, sigma, n_min=1)
    policy.name = "crimed_star"
    return policy


def inflated_eps(eps: float, eps_m: float) -> float:
    """Corruption level absorbing a misspecification weight as extra corruption."""
    return eps + eps_m - eps * eps_m


def make_crimed_misspecified(n_arms: int, horizon: int, eps: float, eps_m: float,
                             sigma: float = 1.0, star: bool = False) -> Crimed:
    eps_tilde = inflated_eps(eps, eps_m)
    if not eps_tilde < 0.5:
        raise DomainError(f"inflated corruption level {eps_tilde!r} must stay below 1/2")
    if star:
        policy = make_crimed_star(n_arms, horizon, eps_tilde, sigma)
        policy.name = "crimed_star_m"
    else:
        policy = make_crimed(n_arms, horizon, eps_tilde, sigma)
        policy.name = "crimed_m"
    return policy


class Imed(IndexPolicy):
    """Gaussian IMED on empirical means, i.e. no corruption model at all."""

    name = "imed"

    def __init__(self, n_arms: int, horizon: int, sigma: float = 1.0):
        super().__init__(n_arms, horizon, 1)
        self.sigma = float(sigma)
        self.sums = [0.0] * n_arms

    def _record(self, arm, observation):
        self.sums[arm] += observation

    def means(self) -> list[float]:
        return [s / n for s, n in zip(self.sums, self.counts)]

    def indices(self) -> list[float]:
        means = self.means()
        best_mean = max(means)
        best = means.index(best_mean)
        scale = 2.0 * self.sigma * self.sigma
        out = []
        for a, (mu, n) in enumerate(zip(means, self.counts)):
            gap = best_mean - mu
            out.append(math.log(n) + (0.0 if a == best else n * gap * gap / scale))
        return out


def make_imed(n_arms: int, horizon: int, sigma: float = 1.0) -> Imed:
    return Imed(n_arms, horizon, sigma)


class MedUcb(IndexPolicy):
    """Robust UCB baseline on medians.

    ``U_a = Med_a + sigma * delta_min / 2 + sigma * s_eps * sqrt(alpha log n / N_a)``.
    The bias term is shared by every arm; the width follows the median's
    corrupted tail scale.  This is a stand-in for published robust UCB
    variants, not a reimplementation of one.
    """

    name = "med_ucb"

    def __init__(self, n_arms: int, horizon: int, eps: float, sigma: float = 1.0, alpha: float = 2.0):
        super().__init__(n_arms, horizon, 1)
        if not alpha > 0:
            raise DomainError("alpha must be positive")
        eps = check_eps(eps)
        self.eps = eps
        self.sigma = float(sigma)
        self.alpha = float(alpha)
        geometry = KlGeometry(eps)
        self.bias = self.sigma * geometry.delta_min / 2.0
        # eps = 0 falls back to the median's asymptotic scale 1 / (2 phi(0)).
        self.width = self.sigma * (s_eps(eps) if eps > 0 else math.sqrt(math.pi / 2.0))
        self.accumulators = [MedianAccumulator() for _ in range(n_arms)]

    def _record(self, arm, observation):
        self.accumulators[arm].insert(observation)

    def indices(self) -> list[float]:
        log_n = math.log(max(self.step, 1))
        return [acc.median() + self.bias + self.width * math.sqrt(self.alpha * log_n / n)
                for acc, n in zip(self.accumulators, self.counts)]

    def _select_by_index(self) -> int:
        idx = self.indices()
        return idx.index(max(idx))


def make_med_ucb(n_arms: int, horizon: int, eps: float, sigma: float = 1.0, alpha: float = 2.0) -> MedUcb:
    return MedUcb(n_arms, horizon, eps, sigma, alpha)


POLICY_NAMES = ("crimed", "crimed_star", "imed", "med_ucb", "crimed_m", "crimed_star_m")
_POLICY_PARAMS = {
    "crimed": {"eps", "sigma", "n_min_variant"},
    "crimed_star": {"eps", "sigma"},
    "imed": {"sigma"},
    "med_ucb": {"eps", "sigma", "alpha"},
    "crimed_m": {"eps", "eps_m", "sigma"},
    "crimed_star_m": {"eps", "eps_m", "sigma"},
}


def normalise_descriptor(descriptor) -> dict:
    """Accept ``"crimed"`` or ``{"name": "crimed", ...}`` and validate the parameter names."""
    if isinstance(descriptor, str):
        descriptor = {"name": descriptor}
    if not isinstance(descriptor, dict) or "name" not in descriptor:
        raise ConfigError("policy descriptor needs a 'name' field")
    name = descriptor["name"]
    if name not in _POLICY_PARAMS:
        raise ConfigError(f"unknown policy {name!r}; expected one of {', '.join(POLICY_NAMES)}")
    for key in descriptor:
        if key != "name" and key not in _POLICY_PARAMS[name]:
            raise ConfigError(f"policy {name!r}: unknown field {key!r}")
    return dict(descriptor)


def build_policy(descriptor, instance, horizon: int) -> IndexPolicy:
    """Instantiate a policy for ``instance``.

    Unless the descriptor overrides them, ``eps``, ``eps_m`` and ``sigma``
    come from the instance: the learner is assumed to know the corruption
    level, the misspecification weight and the common arm standard deviation.
    """
    d = normalise_descriptor(descriptor)
    name = d["name"]
    k = instance.n_arms
    sigma = float(d.get("sigma", instance.sigma))
    eps = float(d.get("eps", instance.eps))
    if name == "crimed":
        return make_crimed(k, horizon, eps, sigma, d.get("n_min_variant", "squared"))
    if name == "crimed_star":
        return make_crimed_star(k, horizon, eps, sigma)
    if name == "imed":
        return make_imed(k, horizon, sigma)
    if name == "med_ucb":
        return make_med_ucb(k, horizon, eps, sigma, float(d.get("alpha", 2.0)))
    eps_m = float(d.get("eps_m", instance.misspec_weight))
    return make_crimed_misspecified(k, horizon, eps, eps_m, sigma, star=(name == "crimed_star_m"))
