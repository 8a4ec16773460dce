"""Hypothesis strategies shared by the property tests."""

from hypothesis import strategies as st

from market import ValuationMatrix


def valuation_matrices(max_n: int = 5, high: int = 20):
    """Square integer markets, small values so ties are frequent."""
    return st.integers(1, max_n).flatmap(
        lambda n: st.lists(
            st.lists(st.integers(0, high), min_size=n, max_size=n),
            min_size=n,
            max_size=n,
        ).map(ValuationMatrix.of)
    )


def price_vectors(n: int, bound: int = 25):
    return st.lists(
        st.fractions(min_value=-bound, max_value=bound, max_denominator=6),
        min_size=n,
        max_size=n,
    )
