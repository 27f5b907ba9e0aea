"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from m1lab.cadlag import make_step

times = st.floats(min_value=0.001, max_value=1.0, allow_nan=False).map(lambda t: round(t, 3))
values = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False).map(lambda v: round(v, 2))


@st.composite
def step_functions(draw, max_jumps=6):
    ts = draw(st.lists(times, max_size=max_jumps, unique=True))
    vs = draw(st.lists(values, min_size=len(ts), max_size=len(ts)))
    return make_step(draw(values), list(zip(ts, vs)))
