"""Discrete memoryless channel models with a warden output.

Three kinds of channel are supported:

* :class:`Dmmac`: two binary covert inputs ``x1, x2``, one non-covert input
  ``x3``, a legitimate output ``y`` and a warden output ``z``;
* :class:`GeneralMac`: any number of covert users (alphabets containing 0)
  and non-covert users;
* :class:`DmicChannel`: the same inputs as :class:`Dmmac` with two legitimate
  receivers ``y1`` and ``y2``.

Tensors are indexed ``[x1][x2][x3][output]`` (inputs first, output last).
All objects are immutable once built.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Iterator, Union

import numpy as np

ROW_SUM_TOL = 1e-12
DISTINCT_TOL = 1e-12


class ChannelError(ValueError):
    """Base class for channel construction and file errors."""


class ChannelStructureError(ChannelError):
    """Missing field or tensor of the wrong shape."""


class ChannelValueError(ChannelError):
    """Negative entry or row that does not sum to one."""


class ChannelParseError(ChannelError):
    """Malformed channel document."""


def _frozen(a, name: str) -> np.ndarray:
    try:
        arr = np.array(a, dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise ChannelStructureError(f"{name}: not a rectangular numeric array ({exc})") from None
    arr.setflags(write=False)
    return arr


def _check_stochastic(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ChannelValueError(f"{name}: non-finite entry")
    neg = np.argwhere(arr < 0)
    if neg.size:
        raise ChannelValueError(f"{name}: negative probability at index {tuple(int(i) for i in neg[0])}")
    sums = arr.sum(axis=-1)
    bad = np.argwhere(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        idx = tuple(int(i) for i in bad[0])
        raise ChannelValueError(f"{name}: row {idx} sums to {sums[idx]!r}, not 1")


def _check_shape(arr: np.ndarray, name: str, lead: tuple) -> None:
    if arr.ndim != len(lead) + 1 or arr.shape[:-1] != lead or arr.shape[-1] < 1:
        raise ChannelStructureError(
            f"{name}: expected shape {lead + ('out',)}, got {arr.shape}")


def _eq_arrays(a: tuple, b: tuple) -> bool:
    return all(x.shape == y.shape and np.array_equal(x, y) for x, y in zip(a, b))


@dataclass(frozen=True, eq=False)
class Dmmac:
    """Three-user MAC with binary covert inputs and a warden.

    Parameters
    ----------
    gamma_y, gamma_z : array_like, shape (2, 2, X3, Y) and (2, 2, X3, Z)
        Transition laws to the legitimate receiver and to the warden.
    """

    gamma_y: np.ndarray
    gamma_z: np.ndarray

    def __post_init__(self):
        gy = _frozen(self.gamma_y, "gamma_y")
        gz = _frozen(self.gamma_z, "gamma_z")
        if gy.ndim != 4 or gy.shape[:2] != (2, 2):
            raise ChannelStructureError(f"gamma_y: expected shape (2, 2, X3, Y), got {gy.shape}")
        _check_shape(gz, "gamma_z", gy.shape[:3])
        _check_stochastic(gy, "gamma_y")
        _check_stochastic(gz, "gamma_z")
        object.__setattr__(self, "gamma_y", gy)
        object.__setattr__(self, "gamma_z", gz)

    @property
    def x3_size(self) -> int:
        return self.gamma_y.shape[2]

    @property
    def y_size(self) -> int:
        return self.gamma_y.shape[3]

    @property
    def z_size(self) -> int:
        return self.gamma_z.shape[3]

    def __eq__(self, other):
        if not isinstance(other, Dmmac):
            return NotImplemented
        return _eq_arrays((self.gamma_y, self.gamma_z), (other.gamma_y, other.gamma_z))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DmicChannel:
    """Interference channel: receiver 1 wants user 1, receiver 2 wants user 2,
    both want the non-covert user 3."""

    gamma_y1: np.ndarray
    gamma_y2: np.ndarray
    gamma_z: np.ndarray

    def __post_init__(self):
        g1 = _frozen(self.gamma_y1, "gamma_y1")
        if g1.ndim != 4 or g1.shape[:2] != (2, 2):
            raise ChannelStructureError(f"gamma_y1: expected shape (2, 2, X3, Y1), got {g1.shape}")
        g2 = _frozen(self.gamma_y2, "gamma_y2")
        gz = _frozen(self.gamma_z, "gamma_z")
        _check_shape(g2, "gamma_y2", g1.shape[:3])
        _check_shape(gz, "gamma_z", g1.shape[:3])
        for arr, name in ((g1, "gamma_y1"), (g2, "gamma_y2"), (gz, "gamma_z")):
            _check_stochastic(arr, name)
            object.__setattr__(self, name, arr)

    @property
    def x3_size(self) -> int:
        return self.gamma_y1.shape[2]

    def receiver(self, ell: int) -> Dmmac:
        """The MAC seen by receiver ``ell`` (1 or 2) together with the warden."""
        if ell not in (1, 2):
            raise ValueError("receiver index must be 1 or 2")
        return Dmmac(self.gamma_y1 if ell == 1 else self.gamma_y2, self.gamma_z)

    def __eq__(self, other):
        if not isinstance(other, DmicChannel):
            return NotImplemented
        return _eq_arrays((self.gamma_y1, self.gamma_y2, self.gamma_z),
                          (other.gamma_y1, other.gamma_y2, other.gamma_z))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GeneralMac:
    """MAC with ``l_c`` covert and ``l_nc`` non-covert users.

    ``gamma_y`` has shape ``(*covert_alphabet_sizes, *nc_alphabet_sizes, Y)``;
    covert symbol 0 means "silent".
    """

    covert_alphabet_sizes: tuple
    nc_alphabet_sizes: tuple
    gamma_y: np.ndarray
    gamma_z: np.ndarray

    def __post_init__(self):
        cs = tuple(int(s) for s in self.covert_alphabet_sizes)
        ns = tuple(int(s) for s in self.nc_alphabet_sizes)
        if any(s < 2 for s in cs):
            raise ChannelStructureError("covert alphabets need the silent symbol 0 and at least one other")
        if any(s < 1 for s in ns):
            raise ChannelStructureError("non-covert alphabets must be nonempty")
        gy = _frozen(self.gamma_y, "gamma_y")
        gz = _frozen(self.gamma_z, "gamma_z")
        _check_shape(gy, "gamma_y", cs + ns)
        _check_shape(gz, "gamma_z", cs + ns)
        _check_stochastic(gy, "gamma_y")
        _check_stochastic(gz, "gamma_z")
        object.__setattr__(self, "covert_alphabet_sizes", cs)
        object.__setattr__(self, "nc_alphabet_sizes", ns)
        object.__setattr__(self, "gamma_y", gy)
        object.__setattr__(self, "gamma_z", gz)

    @property
    def l_c(self) -> int:
        return len(self.covert_alphabet_sizes)

    @property
    def l_nc(self) -> int:
        return len(self.nc_alphabet_sizes)

    @classmethod
    def from_dmmac(cls, ch: Dmmac) -> "GeneralMac":
        return cls((2, 2), (ch.x3_size,), ch.gamma_y, ch.gamma_z)

    def __eq__(self, other):
        if not isinstance(other, GeneralMac):
            return NotImplemented
        return (self.covert_alphabet_sizes == other.covert_alphabet_sizes
                and self.nc_alphabet_sizes == other.nc_alphabet_sizes
                and _eq_arrays((self.gamma_y, self.gamma_z), (other.gamma_y, other.gamma_z)))

    __hash__ = None


Channel = Union[Dmmac, GeneralMac, DmicChannel]


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Violation:
    """One failed regularity condition.

    ``kind`` is ``"support"`` (the active row puts mass where the silent row
    has none) or ``"distinct"`` (the warden cannot tell the active row from
    the silent one). ``output`` names the tensor (``"y"``, ``"y1"``, ``"z"``...),
    ``symbol`` is the offending output letter for support failures.
    """

    kind: str
    output: str
    user: int
    x_covert: int
    x_nc: tuple
    symbol: int | None = None

    def __str__(self):
        where = f"user {self.user} symbol {self.x_covert}, non-covert input {self.x_nc}"
        if self.kind == "support":
            return f"{self.output}: support of active row not inside silent row ({where}, output {self.symbol})"
        return f"{self.output}: active row equals silent row ({where})"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)


def _scan(gamma: np.ndarray, name: str, covert_sizes: tuple, distinct: bool) -> list:
    lc = len(covert_sizes)
    nc_shape = gamma.shape[lc:-1]
    zero = (0,) * lc
    out = []
    for x_nc in product(*(range(s) for s in nc_shape)):
        base = gamma[zero + x_nc]
        for user in range(lc):
            for sym in range(1, covert_sizes[user]):
                xc = list(zero)
                xc[user] = sym
                row = gamma[tuple(xc) + x_nc]
                for y in np.flatnonzero((base == 0.0) & (row > 0.0)):
                    out.append(Violation("support", name, user + 1, sym, x_nc, int(y)))
                if distinct and np.max(np.abs(row - base)) <= DISTINCT_TOL:
                    out.append(Violation("distinct", name, user + 1, sym, x_nc))
    return out


def validate(channel: Channel) -> ValidationReport:
    """List every violated regularity condition of ``channel``.

    For each covert user and nonzero covert symbol, with the other covert
    users silent, the legitimate and warden rows must be absolutely
    continuous with respect to the all-silent row, and the warden row must
    differ from it. An empty report means the channel is admissible.
    """
    if isinstance(channel, Dmmac):
        cs, tensors = (2, 2), [("y", channel.gamma_y)]
    elif isinstance(channel, DmicChannel):
        cs, tensors = (2, 2), [("y1", channel.gamma_y1), ("y2", channel.gamma_y2)]
    elif isinstance(channel, GeneralMac):
        cs, tensors = channel.covert_alphabet_sizes, [("y", channel.gamma_y)]
    else:
        raise TypeError(f"not a channel: {type(channel).__name__}")
    gz = channel.gamma_z
    for name, g in tensors:
        if g.shape[:-1] != gz.shape[:-1]:
            raise ChannelStructureError(f"{name} and z disagree on the input alphabets")
    found = []
    for name, g in tensors:
        found += _scan(g, name, cs, distinct=False)
    found += _scan(gz, "z", cs, distinct=True)
    return ValidationReport(tuple(found))


# ----------------------------------------------------------- helpers on laws

def is_x3_inert(channel: Dmmac) -> bool:
    """True when neither output law depends on ``x3``."""
    return all(np.array_equal(g, np.broadcast_to(g[:, :, :1], g.shape))
               for g in (channel.gamma_y, channel.gamma_z))


def is_user_inert(channel: Dmmac, user: int) -> bool:
    """True when covert ``user`` (1 or 2) never changes either output law."""
    ax = user - 1
    return all(np.array_equal(np.take(g, 0, axis=ax), np.take(g, 1, axis=ax))
               for g in (channel.gamma_y, channel.gamma_z))


def reduce_single_user(channel: Dmmac, user: int = 1, x3: int = 0) -> Dmmac:
    """Single-user channel seen by covert ``user`` with the other covert user
    silent and the non-covert input pinned to ``x3``.

    The result keeps the three-user shape (``x3`` alphabet of size one, the
    other covert input ignored) so it can be fed to every region routine.
    """
    if user not in (1, 2):
        raise ValueError("user must be 1 or 2")
    out = []
    for g in (channel.gamma_y, channel.gamma_z):
        rows = g[:, 0, x3] if user == 1 else g[0, :, x3]
        t = np.empty((2, 2, 1, g.shape[-1]))
        for a in range(2):
            if user == 1:
                t[a, :, 0] = rows[a]
            else:
                t[:, a, 0] = rows[a]
        out.append(t)
    return Dmmac(*out)


def renormalized(channel: Channel) -> Channel:
    """Copy of ``channel`` with every row divided by its sum (explicit only)."""
    def norm(a):
        return a / a.sum(axis=-1, keepdims=True)
    if isinstance(channel, Dmmac):
        return Dmmac(norm(channel.gamma_y), norm(channel.gamma_z))
    if isinstance(channel, DmicChannel):
        return DmicChannel(norm(channel.gamma_y1), norm(channel.gamma_y2), norm(channel.gamma_z))
    return GeneralMac(channel.covert_alphabet_sizes, channel.nc_alphabet_sizes,
                      norm(channel.gamma_y), norm(channel.gamma_z))


@dataclass(frozen=True)
class AveragedChannel:
    """Per-phase warden laws with the covert inputs averaged out.

    z_given_x3 : (T, X3, Z), both covert users averaged.
    z_given_x1x3 : (T, 2, X3, Z), user 2 averaged.
    z_given_x2x3 : (T, 2, X3, Z), user 1 averaged.
    """

    z_given_x3: np.ndarray
    z_given_x1x3: np.ndarray
    z_given_x2x3: np.ndarray


def averaged_channel(channel: Dmmac, rho, alpha_n: float) -> AveragedChannel:
    """Warden laws when user ``l`` sends 1 with probability ``rho[t, l] * alpha_n``.

    Parameters
    ----------
    rho : array_like, shape (T, 2)
        Per-phase intensities.
    alpha_n : float
        Base probability of a covert 1.
    """
    rho = np.atleast_2d(np.asarray(rho, dtype=float))
    if rho.shape[-1] != 2 or np.any(rho < 0):
        raise ValueError("rho must be a nonnegative (T, 2) array")
    p1 = rho * alpha_n
    if np.any(p1 > 1.0) or alpha_n < 0:
        raise ValueError("invalid intensity: rho * alpha_n must lie in [0, 1]")
    g = channel.gamma_z
    q1 = np.stack([1 - p1[:, 0], p1[:, 0]], axis=1)  # (T, 2)
    q2 = np.stack([1 - p1[:, 1], p1[:, 1]], axis=1)
    zx1 = np.einsum("tb,abxz->taxz", q2, g)
    zx2 = np.einsum("ta,abxz->tbxz", q1, g)
    zx3 = np.einsum("ta,taxz->txz", q1, zx1)
    return AveragedChannel(zx3, zx1, zx2)


# ------------------------------------------------------------------ file I/O

def _nested(a: np.ndarray) -> list:
    return a.tolist()


def to_document(channel: Channel) -> dict:
    if isinstance(channel, Dmmac):
        return {"kind": "dmmac",
                "alphabets": {"x1": 2, "x2": 2, "x3": channel.x3_size,
                              "y": channel.y_size, "z": channel.z_size},
                "gamma_y": _nested(channel.gamma_y), "gamma_z": _nested(channel.gamma_z)}
    if isinstance(channel, DmicChannel):
        return {"kind": "dmic",
                "alphabets": {"x1": 2, "x2": 2, "x3": channel.x3_size,
                              "y1": channel.gamma_y1.shape[-1], "y2": channel.gamma_y2.shape[-1],
                              "z": channel.gamma_z.shape[-1]},
                "gamma_y1": _nested(channel.gamma_y1), "gamma_y2": _nested(channel.gamma_y2),
                "gamma_z": _nested(channel.gamma_z)}
    if isinstance(channel, GeneralMac):
        return {"kind": "general_mac",
                "alphabets": {"covert": list(channel.covert_alphabet_sizes),
                              "noncovert": list(channel.nc_alphabet_sizes),
                              "y": channel.gamma_y.shape[-1], "z": channel.gamma_z.shape[-1]},
                "gamma_y": _nested(channel.gamma_y), "gamma_z": _nested(channel.gamma_z)}
    raise TypeError(f"not a channel: {type(channel).__name__}")


def _format(obj, indent: int = 0) -> str:
    pad = " " * indent
    if isinstance(obj, dict):
        items = [f'{pad} {json.dumps(k)}: {_format(v, indent + 1).lstrip()}' for k, v in obj.items()]
        return pad + "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list) and obj and isinstance(obj[0], list):
        inner = ",\n".join(_format(v, indent + 1) for v in obj)
        return pad + "[\n" + inner + "\n" + pad + "]"
    # innermost rows stay on one line; json writes floats with repr(),
    # the shortest string that round-trips exactly
    return pad + json.dumps(obj)


def dumps(channel: Channel) -> str:
    return _format(to_document(channel)) + "\n"


def save(channel: Channel, path) -> None:
    Path(path).write_text(dumps(channel), encoding="utf-8")


def _field(doc: dict, name: str):
    if name not in doc:
        raise ChannelStructureError(f"missing field '{name}'")
    return doc[name]


def _negative_check(arr: np.ndarray, name: str) -> None:
    neg = np.argwhere(arr < 0)
    if neg.size:
        raise ChannelValueError(f"{name}: negative probability at index {tuple(int(i) for i in neg[0])}")


def from_document(doc: dict) -> Channel:
    if not isinstance(doc, dict):
        raise ChannelStructureError("channel document must be a JSON object")
    kind = _field(doc, "kind")
    arrays = {}
    names = {"dmmac": ("gamma_y", "gamma_z"), "general_mac": ("gamma_y", "gamma_z"),
             "dmic": ("gamma_y1", "gamma_y2", "gamma_z")}
    if kind not in names:
        raise ChannelStructureError(f"field 'kind': unknown channel kind {kind!r}")
    for name in names[kind]:
        arrays[name] = _frozen(_field(doc, name), name)
        _negative_check(arrays[name], name)
    if kind == "dmmac":
        return Dmmac(arrays["gamma_y"], arrays["gamma_z"])
    if kind == "dmic":
        return DmicChannel(arrays["gamma_y1"], arrays["gamma_y2"], arrays["gamma_z"])
    alph = _field(doc, "alphabets")
    return GeneralMac(tuple(_field(alph, "covert")), tuple(_field(alph, "noncovert")),
                      arrays["gamma_y"], arrays["gamma_z"])


def _parse(text: str, source: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ChannelParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def loads(text: str, from_rows: bool = False, source: str = "<string>") -> Channel:
    doc = _parse(text, source)
    return rows_document(doc) if from_rows else from_document(doc)


def load(path, from_rows: bool = False) -> Channel:
    """Read a channel file.

    With ``from_rows=True`` the file holds the eight-row layout instead, see
    :func:`rows_document`.
    """
    return loads(Path(path).read_text(encoding="utf-8"), from_rows, str(path))


def from_rows(gamma_y_rows, gamma_z_rows, x3_size: int) -> Dmmac:
    """Build a :class:`Dmmac` from row matrices.

    Rows are ordered by ``(x1, x2, x3)`` lexicographically with ``x3``
    fastest: ``(0,0,0), (0,0,1), ..., (1,1,x3_size-1)``.
    """
    tensors = []
    for rows, name in ((gamma_y_rows, "gamma_y"), (gamma_z_rows, "gamma_z")):
        a = _frozen(rows, name)
        if a.ndim != 2 or a.shape[0] != 4 * x3_size:
            raise ChannelStructureError(f"{name}: expected {4 * x3_size} rows, got shape {a.shape}")
        _negative_check(a, name)
        tensors.append(a.reshape(2, 2, x3_size, a.shape[1]))
    return Dmmac(*tensors)


def rows_document(doc: dict) -> Dmmac:
    """Convert ``{"x3_size": k, "gamma_y": rows, "gamma_z": rows}``."""
    if not isinstance(doc, dict):
        raise ChannelStructureError("rows document must be a JSON object")
    return from_rows(_field(doc, "gamma_y"), _field(doc, "gamma_z"), int(_field(doc, "x3_size")))


def paper_channel() -> Dmmac:
    """The bundled reference MAC (binary ``x3``, six-letter outputs)."""
    text = resources.files("covertmac").joinpath("data/paper_mac.json").read_text(encoding="utf-8")
    return loads(text, source="paper_mac.json")


def paper_channel_rows() -> dict:
    text = resources.files("covertmac").joinpath("data/paper_mac_rows.json").read_text(encoding="utf-8")
    return json.loads(text)


def restrict_x3(channel: Dmmac, x3: int) -> Dmmac:
    """Channel with the non-covert input pinned to ``x3`` (alphabet of size one)."""
    return Dmmac(channel.gamma_y[:, :, x3:x3 + 1], channel.gamma_z[:, :, x3:x3 + 1])
