"""Shared hypothesis strategies."""

from hypothesis import strategies as st

from singular_sde.drift import FAMILIES, make_drift

pos = st.floats(0.2, 3.0)


@st.composite
def drift_specs(draw, families=FAMILIES):
    family = draw(st.sampled_from(families))
    u, v, w, g = draw(pos), draw(pos), draw(pos), draw(st.floats(0.5, 3.0))
    params = dict(u=u, v=v, w=w, gamma=g)
    if family.endswith("sin"):
        base_K = u * w if family.startswith("b1") else w
        mu = draw(st.floats(0.1, 2.0))
        params.update(lam=draw(st.floats(0.05, 0.9)) * base_K / mu, mu=mu)
    elif family.endswith("log"):
        params.update(lam=draw(st.floats(0.05, 1.0)), mu=draw(st.floats(0.1, 2.0)))
    return make_drift(family, **params)
