"""Single-qudit noise channels and the qudit-dependent constants.

Only the diagonal Pauli-transfer coefficients of a channel influence the
shadow norm, and they do so only through their mean over the ``q**2 - 1``
non-identity generalized Paulis ``X^n Z^m``.  This module stores those
coefficients, validates them, and reduces them to the effective damping
``f`` used by every engine.
"""

import json
import logging
import math
from dataclasses import dataclass
from types import MappingProxyType

from .errors import InputError

logger = logging.getLogger(__name__)

__all__ = [
    "DiagonalNoiseSpec",
    "QuditConstants",
    "effective_f",
    "qudit_constants",
    "parse_channel",
    "load_channel",
    "check_damping",
]

# q = 2 convenience names for the generalized Pauli index (n, m) of X^n Z^m.
QUBIT_ALIASES = {"X": (1, 0), "Z": (0, 1), "Y": (1, 1)}


def _check_q(q):
    if isinstance(q, bool) or not isinstance(q, int):
        raise InputError(f"qudit dimension q must be an integer, got {q!r}")
    if q < 2:
        raise InputError(f"qudit dimension q must be >= 2, got {q}")
    return q


def check_damping(f):
    """Validate an effective damping parameter; engines need ``0 < f <= 1``."""
    f = float(f)
    if not (0.0 < f <= 1.0) or math.isnan(f):
        raise InputError(f"effective damping f must lie in (0, 1], got {f!r}")
    return f


@dataclass(frozen=True)
class DiagonalNoiseSpec:
    """Diagonal Pauli-transfer coefficients of a single-qudit channel.

    Parameters
    ----------
    q : int
        Qudit dimension.
    diag : mapping
        ``{(n, m): f_nm}`` for non-identity indices ``0 <= n, m < q``.
        Missing indices default to 1 (noiseless); the identity coefficient is
        implicitly 1 and must not be given.
    """

    q: int
    diag: "MappingProxyType"

    def __init__(self, q, diag=None):
        _check_q(q)
        entries = {}
        for key, value in (diag or {}).items():
            n, m = _normalize_index(key, q)
            if (n, m) in entries:
                raise InputError(f"Pauli index {(n, m)} given more than once")
            value = float(value)
            if not (-1.0 <= value <= 1.0) or math.isnan(value):
                raise InputError(
                    f"coefficient for Pauli index {(n, m)} must lie in [-1, 1], got {value}"
                )
            entries[(n, m)] = value
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "diag", MappingProxyType(dict(sorted(entries.items()))))

    def coefficient(self, n, m):
        if (n % self.q, m % self.q) == (0, 0):
            return 1.0
        return self.diag.get((n % self.q, m % self.q), 1.0)

    def coefficients(self):
        """All ``q**2 - 1`` non-identity coefficients, in index order."""
        return [
            self.coefficient(n, m)
            for n in range(self.q)
            for m in range(self.q)
            if (n, m) != (0, 0)
        ]

    @classmethod
    def uniform(cls, q, f):
        """Depolarizing channel with every non-identity coefficient equal to ``f``."""
        return cls(q, {(n, m): f for n in range(q) for m in range(q) if (n, m) != (0, 0)})


def _normalize_index(key, q):
    if isinstance(key, str):
        name = key.strip()
        if name in QUBIT_ALIASES:
            if q != 2:
                raise InputError(f"alias {name!r} is only valid for q = 2")
            return QUBIT_ALIASES[name]
        parts = name.split(",")
        if len(parts) != 2:
            raise InputError(f"Pauli index key {key!r} is not of the form 'n,m'")
        try:
            key = (int(parts[0]), int(parts[1]))
        except ValueError:
            raise InputError(f"Pauli index key {key!r} is not of the form 'n,m'") from None
    n, m = key
    if not (0 <= n < q and 0 <= m < q):
        raise InputError(f"Pauli index {(n, m)} out of range for q = {q}")
    if (n, m) == (0, 0):
        raise InputError("the identity coefficient is fixed to 1 and cannot be set")
    return int(n), int(m)


def effective_f(spec):
    """Mean of the diagonal coefficients over the non-identity Paulis.

    Raises
    ------
    InputError
        If the mean is not in ``(0, 1]``.
    """
    coeffs = spec.coefficients()
    f = math.fsum(coeffs) / len(coeffs)
    if f <= 0.0 or f > 1.0:
        raise InputError(
            f"effective damping f = {f:.12g} violates the constraint 0 < f <= 1"
        )
    return f


@dataclass(frozen=True)
class QuditConstants:
    """Constants of the random brickwork dynamics for qudit dimension ``q``.

    ``a`` is the probability that a gate leaves exactly one specified site of an
    occupied pair occupied, ``gamma`` the bulk decay rate of the weight density,
    ``v_B`` the butterfly velocity and ``c_coeff`` the amplitude of the
    ``t**-1.5 * exp(-gamma * t)`` relaxation tail.  Time is measured in layers.
    """

    q: int
    a: float
    gamma: float
    v_B: float
    c_coeff: float


def qudit_constants(q):
    _check_q(q)
    q2p1 = q * q + 1
    gamma = 2.0 * math.log(q2p1 / (2.0 * q))
    return QuditConstants(
        q=q,
        a=1.0 / q2p1,
        gamma=gamma,
        v_B=1.0 - 2.0 / q2p1,
        c_coeff=1.0 / (math.sqrt(math.pi) * gamma * q2p1),
    )


_TOP_LEVEL_KEYS = {"q", "diag", "offdiag"}


def parse_channel(data):
    """Build a :class:`DiagonalNoiseSpec` from the decoded JSON channel format.

    ``{"q": 2, "diag": {"1,0": 0.98, "0,1": 1.0, "1,1": 0.98}}``.  An
    ``"offdiag"`` block is accepted and ignored: off-diagonal transfer
    coefficients average out under twirling.
    """
    if not isinstance(data, dict):
        raise InputError("channel file must contain a JSON object")
    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise InputError(f"unknown top-level key(s) in channel file: {sorted(unknown)}")
    if "q" not in data:
        raise InputError("channel file is missing required key 'q'")
    if "offdiag" in data:
        logger.info("ignoring 'offdiag' block: off-diagonal terms do not affect the shadow norm")
    diag = data.get("diag", {})
    if not isinstance(diag, dict):
        raise InputError("key 'diag' must map Pauli indices to coefficients")
    for key, value in diag.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InputError(f"key 'diag.{key}': coefficient must be a number, got {value!r}")
    return DiagonalNoiseSpec(data["q"], diag)


def load_channel(path):
    """Read a JSON channel file; syntax errors are reported with line numbers."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return parse_channel(data)
