"""Model parameters and flat key=value configuration files."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from cyclefield.errors import ParameterError


@dataclass(frozen=True)
class ModelParams:
    """Immutable bundle of model parameters.

    All noise scales are amplitudes (not variances) except ``lambda_sq``,
    which is the squared technology stiffness.
    """

    varpi: float = 0.1         # consumption noise scale
    nu: float = 0.1            # capital noise scale
    lambda_sq: float = 400.0   # squared technology stiffness (lambda**2)
    varsigma: float = 0.05     # consumption restoring scale
    delta: float = 0.05        # capital depreciation rate
    r_c: float = 0.05          # consumption discount rate
    epsilon: float = 0.3       # production elasticity of capital
    K_bar: float = 10.0        # capital expansion point
    C_bar: float = 1.0         # consumption anchor
    A0: float = 8.0            # bare technology level
    kappa: float = 0.2         # technology feedback share
    gamma: float = 0.05        # interaction strength
    alpha_laplace: float = 0.2 # Laplace-domain offset
    C0: float = 0.5            # per-unit-time weight offset
    g: float = 0.0             # technology drift rate
    theta_sq: float = 1.0      # intertemporal constraint stiffness (theta**2)
    sigma_sq: float = 1.0      # global constraint relaxation variance
    eta_sq: float = 1.0        # collective-mode variance (eta**2)

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ParameterError(f"{f.name} must be a real number, got {v!r}")
            if not math.isfinite(v):
                raise ParameterError(f"{f.name} must be finite, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        positive = (
            "varpi", "nu", "lambda_sq", "delta", "epsilon",
            "K_bar", "C_bar", "A0", "theta_sq",
        )
        for name in positive:
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"{name} must be > 0, got {getattr(self, name)}")
        nonnegative = ("varsigma", "r_c", "kappa", "gamma", "C0", "sigma_sq", "eta_sq")
        for name in nonnegative:
            if getattr(self, name) < 0.0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.epsilon >= 1.0:
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.kappa >= 1.0:
            raise ParameterError(f"kappa must lie in [0, 1), got {self.kappa}")

    # -- derived quantities -------------------------------------------------

    @property
    def lam(self) -> float:
        """Technology stiffness lambda = sqrt(lambda_sq)."""
        return math.sqrt(self.lambda_sq)

    @property
    def A_bar0(self) -> float:
        """Self-consistent technology level A0 / (1 - kappa)."""
        return self.A0 / (1.0 - self.kappa)

    def replace(self, **changes) -> "ModelParams":
        """Return a copy with the given fields replaced (re-validated)."""
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return ModelParams(**values)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_FIELD_NAMES = tuple(f.name for f in fields(ModelParams))


def parse_config_text(text: str) -> ModelParams:
    """Parse flat ``key=value`` configuration text into :class:`ModelParams`.

    Blank lines and ``#`` comments are ignored.  Unknown keys are rejected.
    """
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _FIELD_NAMES:
            raise ParameterError(f"line {lineno}: unknown configuration key {key!r}")
        if key in values:
            raise ParameterError(f"line {lineno}: duplicate configuration key {key!r}")
        try:
            values[key] = float(val.strip())
        except ValueError as exc:
            raise ParameterError(f"line {lineno}: invalid number for {key}: {val.strip()!r}") from exc
    return ModelParams(**values)


def load_config(path: str) -> ModelParams:
    """Load :class:`ModelParams` from a flat key=value file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParameterError(f"cannot read configuration file {path}: {exc}") from exc
    return parse_config_text(text)
