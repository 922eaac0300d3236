"""Parameter and result containers for the rate-key regions."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..infodiv import JointInputLaw

LN2 = float(np.log(2.0))


class ZeroDenominator(ValueError):
    """Every covert intensity vanishes on the support of the phase law."""


@dataclass(frozen=True, eq=False)
class CovertParams:
    """Witness parameters of one point of a rate-key region.

    Parameters
    ----------
    joint : JointInputLaw
        Phase law and conditional laws of the non-covert inputs.
    rho : (T, L_c) array
        Per-phase covert intensities.
    beta : (L_c,) array in [0, 1]
        Active fractions; scale each covert user's rate and key together.
    psi : tuple of (T, |X_l| - 1) arrays, optional
        Per-phase laws over the nonzero symbols of each covert user.
        ``None`` means every covert user sends symbol 1.
    nc_rates : (L_nc,) array, optional
        Operating point on the non-covert polymatroid (general MAC only).
    """

    joint: JointInputLaw
    rho: np.ndarray
    beta: np.ndarray
    psi: tuple | None = None
    nc_rates: np.ndarray | None = None

    def __post_init__(self):
        rho = np.atleast_2d(np.asarray(self.rho, float))
        beta = np.atleast_1d(np.asarray(self.beta, float))
        if rho.shape[0] != self.joint.n_phases:
            raise ValueError(f"rho has {rho.shape[0]} phases, the phase law has {self.joint.n_phases}")
        if np.any(rho < 0) or not np.all(np.isfinite(rho)):
            raise ValueError("rho must be finite and nonnegative")
        if beta.shape != (rho.shape[1],) or np.any(beta < 0) or np.any(beta > 1):
            raise ValueError("beta must hold one value in [0, 1] per covert user")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "beta", beta)
        if self.psi is not None:
            psi = tuple(np.atleast_2d(np.asarray(p, float)) for p in self.psi)
            if len(psi) != rho.shape[1]:
                raise ValueError("psi needs one entry per covert user")
            for p in psi:
                if p.shape[0] != rho.shape[0] or np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1) > 1e-9):
                    raise ValueError("each psi entry must hold one pmf per phase")
            object.__setattr__(self, "psi", psi)
        if self.nc_rates is not None:
            object.__setattr__(self, "nc_rates", np.atleast_1d(np.asarray(self.nc_rates, float)))

    @property
    def n_phases(self) -> int:
        return self.rho.shape[0]

    @property
    def l_c(self) -> int:
        return self.rho.shape[1]

    @classmethod
    def mac(cls, p_t, p_x3_given_t, rho, beta, psi=None) -> "CovertParams":
        return cls(JointInputLaw(np.asarray(p_t, float), np.asarray(p_x3_given_t, float)), rho, beta, psi)

    def with_beta(self, beta) -> "CovertParams":
        return CovertParams(self.joint, self.rho, beta, self.psi, self.nc_rates)

    def to_dict(self) -> dict:
        d = {"p_t": self.joint.p_t.tolist(),
             "p_x_given_t": [c.tolist() for c in self.joint.p_x_given_t],
             "rho": self.rho.tolist(), "beta": self.beta.tolist()}
        if self.psi is not None:
            d["psi"] = [p.tolist() for p in self.psi]
        if self.nc_rates is not None:
            d["nc_rates"] = self.nc_rates.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CovertParams":
        conds = d.get("p_x_given_t")
        if conds is None:
            conds = [d["p_x3_given_t"]]
        joint = JointInputLaw(np.asarray(d["p_t"], float), tuple(np.asarray(c, float) for c in conds))
        psi = d.get("psi")
        return cls(joint, d["rho"], d["beta"],
                   None if psi is None else tuple(np.asarray(p, float) for p in psi),
                   d.get("nc_rates"))

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def vector(self) -> np.ndarray:
        """Flat parameter vector, used for lexicographic tie-breaking."""
        parts = [self.joint.p_t, *[c.ravel() for c in self.joint.p_x_given_t], self.rho.ravel(), self.beta]
        return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class RateKeyTuple:
    """Covert rates ``r`` and keys ``k`` (nats per sqrt(n * delta)) and
    non-covert rates ``r_nc`` (nats per channel use).

    ``k_signed`` keeps the key expression before clamping at zero; a negative
    value means no key is needed. ``nc_bounds`` maps each subset of
    non-covert users (numbered ``l_c + 1, ...``) to its sum-rate bound.
    """

    r: np.ndarray
    r_nc: np.ndarray
    k: np.ndarray
    k_signed: np.ndarray
    nc_bounds: dict = field(default_factory=dict)

    @property
    def names(self) -> list:
        lc, lnc = len(self.r), len(self.r_nc)
        return ([f"r{i + 1}" for i in range(lc)] + [f"R{lc + j + 1}" for j in range(lnc)]
                + [f"k{i + 1}" for i in range(lc)])

    def values(self) -> np.ndarray:
        return np.concatenate([self.r, self.r_nc, self.k])

    def as_dict(self) -> dict:
        return dict(zip(self.names, (float(v) for v in self.values())))

    def __getitem__(self, name: str) -> float:
        return self.as_dict()[name]

    def __getattr__(self, name):
        # r1, r2, R3, k1, ... as attributes
        if name[:1] in "rRk" and name[1:].isdigit():
            d = self.as_dict()
            if name in d:
                return d[name]
        raise AttributeError(name)

    def scaled(self, factor: float) -> "RateKeyTuple":
        """Every rate multiplied by ``factor`` (``1 / ln 2`` converts to bits)."""
        return RateKeyTuple(self.r * factor, self.r_nc * factor, self.k * factor,
                            self.k_signed * factor,
                            {j: v * factor for j, v in self.nc_bounds.items()})

    def to_bits(self) -> "RateKeyTuple":
        return self.scaled(1.0 / LN2)

    def __repr__(self):
        body = ", ".join(f"{k}={v:.6g}" for k, v in self.as_dict().items())
        return f"RateKeyTuple({body})"
