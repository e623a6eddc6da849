"""Deterministic pseudo-random stream (SplitMix64).

Every stochastic choice in a run draws from exactly one `Rng`, so a run is a
pure function of its seed.  The consumption order is fixed:

1. world initialization: for each character in config order, FSM generation
   draws, then per character the placement draws (x, then y) and the
   extra-copy loop (one gate draw per iteration, then x, y on success);
2. per tick, phase A only: entities in ascending instance-id order, each
   action's draws in the order documented in `engine.execute_action`;
3. evolution: Algorithm-style mutation draws (three loop gates up front,
   then per-iteration draws), followed by the child's simulation draws.

SplitMix64 is used because it is tiny and bit-exact on any platform that has
64-bit integers.  Bounded sampling is plain modulo; the bias is negligible at
the range sizes this simulator uses (n well below a few hundred).
"""

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_UNIT = 1.0 / (1 << 53)


class Rng:
    """SplitMix64 generator.  Single-threaded; pass it explicitly."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        """Advance the state exactly once and return a uniform 64-bit value."""
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n).  n must be >= 1; consumes one draw."""
        if n < 1:
            raise ValueError(f"below() requires n >= 1, got {n}")
        return self.next_u64() % n

    def unit(self) -> float:
        """Uniform float in [0, 1) with 53-bit resolution."""
        return (self.next_u64() >> 11) * _UNIT

    def chance(self, p: float) -> bool:
        """True with probability p.  Always consumes exactly one draw."""
        return self.unit() < p

    def choice(self, seq):
        """Uniform element of a non-empty sequence."""
        return seq[self.below(len(seq))]
