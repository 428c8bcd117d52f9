"""Exception types shared across the library."""


class InputError(ValueError):
    """Malformed or non-finite inputs (wrong sign, NaN, out-of-range correlation)."""


class DomainError(ValueError):
    """Inputs are well-formed but outside the mathematical domain of the
    operation (price violates arbitrage bounds, correlation matrix not PSD)."""


class NumericalError(RuntimeError):
    """An iterative or quadrature scheme failed to converge; carries diagnostics."""


class DegenerateConventionError(DomainError):
    """The strike-convention denominator is (near) zero: no unique optimum."""
