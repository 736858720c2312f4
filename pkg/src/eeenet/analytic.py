"""Closed-form mean-delay models for EEE interfaces (SI seconds).

Symbols: ``lam`` arrival rate (frames/s), ``mean_service`` mean
transmission time, ``var_service`` its variance, ``t_w`` the wake (setup)
time.  All waiting times exclude the frame's own transmission.
"""
from __future__ import annotations

from dataclasses import dataclass

from .traffic import FrameSizeDist


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class ModelInput:
    lam: float
    mean_service: float
    var_service: float
    t_w: float

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"arrival rate must be positive, got {self.lam}")
        if not self.mean_service > 0:
            raise DomainError(f"mean service time must be positive, got {self.mean_service}")
        if not self.var_service >= 0:
            raise DomainError(f"service variance must be non-negative, got {self.var_service}")
        if not self.t_w >= 0:
            raise DomainError(f"setup time must be non-negative, got {self.t_w}")

    @property
    def mu(self) -> float:
        return 1.0 / self.mean_service

    @property
    def rho(self) -> float:
        return self.lam * self.mean_service

    @classmethod
    def for_frames(cls, lam: float, sizes: FrameSizeDist, rate_bps: float, t_w: float) -> "ModelInput":
        """Service moments of ``sizes`` transmitted at ``rate_bps``."""
        mean = sizes.mean_bits / rate_bps
        second = sizes.second_moment_bits() / rate_bps**2
        # clamp the rounding residue of E[s^2] - E[s]^2 for constant sizes
        return cls(lam, mean, max(second - mean * mean, 0.0), t_w)

    @classmethod
    def for_load(cls, load: float, sizes: FrameSizeDist, rate_bps: float, t_w: float) -> "ModelInput":
        return cls.for_frames(load * rate_bps / sizes.mean_bits, sizes, rate_bps, t_w)


@dataclass(frozen=True)
class TandemParams:
    n: int
    s_max: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"a tandem has at least one interface, got n={self.n}")
        if not self.s_max > 0:
            raise DomainError(f"maximum service time must be positive, got {self.s_max}")


def _stable(x: ModelInput):
    if x.rho >= 1:
        raise DomainError(f"load {x.rho:.6g} is not below 1")


def w_mg1(x: ModelInput) -> float:
    """Pollaczek-Khinchine mean waiting time of an M/G/1 FIFO queue."""
    _stable(x)
    # (rho + lam mu var) / (2 (mu - lam)) without the mu - lam cancellation
    return (x.rho * x.mean_service + x.lam * x.var_service) / (2 * (1 - x.rho))


def w_eee(x: ModelInput) -> float:
    """Mean waiting time of an EEE port fed with Poisson traffic.

    The textbook form sums three terms of order ``1/lam`` that nearly cancel
    at low load; collecting them first keeps full double precision.
    """
    return w_mg1(x) + x.t_w / 2 * (1 + 1 / (1 + x.lam * x.t_w))


def delta_w_agg(lam: float, t_w: float) -> float:
    """Extra mean waiting caused by the power saving, in [t_w/2, t_w]."""
    if lam < 0 or t_w < 0:
        raise DomainError("rate and setup time must be non-negative")
    return t_w / 2 * (1 + 1 / (1 + lam * t_w))


def w_tandem_regular(lam: float, t_w: float) -> float:
    """Mean waiting at an EEE port fed by a same-rate regular port."""
    return delta_w_agg(lam, t_w)


def tandem_bounds(w_first: float, params: TandemParams, t_w: float) -> tuple[float, float]:
    """Bounds on the total mean waiting along ``params.n`` EEE ports in series."""
    k = params.n - 1
    return w_first + k * t_w, w_first + k * (t_w + params.s_max)


def delta_w_tandem(n: int, lam: float, t_w: float) -> float:
    """Extra mean delay of ``n`` EEE ports in series over ``n`` regular ones."""
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    if lam < 0 or t_w < 0:
        raise DomainError("rate and setup time must be non-negative")
    return t_w / 2 * (2 * n + 1 / (1 + lam * t_w) - 1)


def per_iface_added_delay_limit(t_w: float) -> float:
    """Large-n limit of ``delta_w_tandem(n) / n``."""
    return t_w
