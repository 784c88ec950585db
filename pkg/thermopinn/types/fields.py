import typing
from dataclasses import dataclass

FIELD_NAMES = ("u", "v", "p", "theta")


class Point2(typing.NamedTuple):
    """A spatial sample (x, y), nondimensional."""

    x: float
    y: float


class FieldState(typing.NamedTuple):
    """The four solution fields at a point."""

    u: float
    v: float
    p: float
    theta: float


class Jet(typing.NamedTuple):
    """Value of one scalar field plus its first and second spatial derivatives.

    The entries can be floats, numpy arrays or torch tensors, every residual in
    `thermopinn.physics` is plain arithmetic on them. The mixed partial is stored once.
    """

    value: typing.Any
    x: typing.Any
    y: typing.Any
    xx: typing.Any
    xy: typing.Any
    yy: typing.Any

    @property
    def laplacian(self):
        return self.xx + self.yy

    def derivatives_of_order(self, m: int) -> tuple:
        """Entries D^a f with |a| = m."""
        if m == 0:
            return (self.value,)
        if m == 1:
            return (self.x, self.y)
        if m == 2:
            return (self.xx, self.xy, self.yy)
        raise ValueError(f"order {m} is not carried by a second-order jet")


@dataclass(frozen=True)
class FieldJet2:
    """Second-order jets of (u, v, p, theta). Carries every differential operator the residuals need."""

    u: Jet
    v: Jet
    p: Jet
    theta: Jet

    def field(self, name: str) -> Jet:
        return getattr(self, name)

    def values(self) -> FieldState:
        return FieldState(self.u.value, self.v.value, self.p.value, self.theta.value)

    def jets(self) -> tuple[Jet, Jet, Jet, Jet]:
        return (self.u, self.v, self.p, self.theta)

    @property
    def divergence(self):
        """u_x + v_y"""
        return self.u.x + self.v.y

    def map(self, fn: typing.Callable) -> "FieldJet2":
        """Applies `fn` to all 24 entries (e.g. `float`, `.detach().numpy()`, indexing)."""
        return FieldJet2(*(Jet(*(fn(e) for e in self.field(f))) for f in FIELD_NAMES))
