import math
from dataclasses import dataclass, asdict

DOMAIN_KEYS = ("r_u", "r_v", "r_div", "r_theta")
BOUNDARY_KEYS = ("r_u_b", "r_v_b", "r_theta_b")
AUGMENTATION_KEYS = ("r_p", "r_div_x", "r_div_y")


def combine(components: dict, augmented: bool, pressure_boundary: bool = False) -> dict:
    """Unweighted sums of the mean-squared components, in a fixed order.

    Works on floats and on torch scalars alike; training builds its loss with this exact
    function so the logged totals and the minimized loss are the same numbers.
    """
    r_domain = components["r_u"] + components["r_v"] + components["r_div"] + components["r_theta"]
    r_boundary = components["r_u_b"] + components["r_v_b"] + components["r_theta_b"]
    if pressure_boundary:
        r_boundary = r_boundary + components["r_p_b"]
    out = {"r_domain": r_domain, "r_boundary": r_boundary, "r_augm": None}
    if augmented:
        out["r_augm"] = components["r_p"] + components["r_div_x"] + components["r_div_y"]
        out["r_total"] = r_domain + r_boundary + out["r_augm"]
    else:
        out["r_total"] = r_domain + r_boundary
    return out


@dataclass(frozen=True)
class ResidualBreakdown:
    """Per-component MSE residuals and their totals.

    Augmentation entries are None when the augmentation is off, `r_p_b` is None unless the
    optional pressure boundary term is on.
    """

    r_u: float
    r_v: float
    r_div: float
    r_theta: float
    r_u_b: float
    r_v_b: float
    r_theta_b: float
    r_p: float | None
    r_div_x: float | None
    r_div_y: float | None
    r_p_b: float | None
    r_domain: float
    r_boundary: float
    r_augm: float | None
    r_total: float

    @property
    def augmented(self) -> bool:
        return self.r_augm is not None

    @classmethod
    def from_components(cls, components: dict, augmented: bool, pressure_boundary: bool = False):
        comps = {k: float(v) for k, v in components.items() if v is not None}
        totals = combine(comps, augmented, pressure_boundary)
        return cls(
            r_u=comps["r_u"],
            r_v=comps["r_v"],
            r_div=comps["r_div"],
            r_theta=comps["r_theta"],
            r_u_b=comps["r_u_b"],
            r_v_b=comps["r_v_b"],
            r_theta_b=comps["r_theta_b"],
            r_p=comps["r_p"] if augmented else None,
            r_div_x=comps["r_div_x"] if augmented else None,
            r_div_y=comps["r_div_y"] if augmented else None,
            r_p_b=comps["r_p_b"] if pressure_boundary else None,
            **totals,
        )

    def is_finite(self) -> bool:
        return all(v is None or math.isfinite(v) for v in asdict(self).values())

    def to_dict(self) -> dict:
        return asdict(self)
