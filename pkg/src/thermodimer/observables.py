"""Observable set shared by the reduced and density-matrix descriptions."""

from __future__ import annotations

from dataclasses import dataclass

# Column order of every tabular output.
COLUMNS = ("current", "coherence_re", "coherence_im", "pop1", "pop2", "zz")


@dataclass(frozen=True)
class ObservableSet:
    """Expectation values at one instant.

    ``coherence`` is <sigma2+ sigma1->, i.e. <e1 g2| rho |g1 e2>, and
    ``current`` is 2*Omega*Im(coherence), the net excitation flow from
    molecule 1 to molecule 2.
    """

    current: float
    coherence: complex
    pop1: float
    pop2: float
    zz: float

    def as_row(self) -> tuple[float, ...]:
        return (
            self.current,
            self.coherence.real,
            self.coherence.imag,
            self.pop1,
            self.pop2,
            self.zz,
        )
