"""Initial configurations: spacing laws, sampling, windows, fixture format."""

from dataclasses import dataclass, field, replace

import numpy as np

from .laws import ClusterLaw

RIGHT_HALF_LINE = "right"
TWO_SIDED = "two"

# velocity codes in the entries arrays
LEFT = -1
RIGHT = 1
STILL = 0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SpacingLaw:
    def sample(self, rng, size):
        raise NotImplementedError

    @property
    def spec(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ExponentialSpacing(SpacingLaw):
    rate: float = 1.0

    def __post_init__(self):
        if self.rate <= 0:
            raise ConfigError("exponential rate must be positive")

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    @property
    def spec(self):
        return "exp:%r" % self.rate


@dataclass(frozen=True)
class UniformSpacing(SpacingLaw):
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.lo < 0 or self.hi <= self.lo:
            raise ConfigError("uniform spacing needs 0 <= lo < hi")

    def sample(self, rng, size):
        return rng.uniform(self.lo, self.hi, size)

    @property
    def spec(self):
        return "uniform:%r,%r" % (self.lo, self.hi)


def parse_spacing(text):
    """Parse a spacing spec: 'exp', 'exp:rate', 'uniform', 'uniform:lo,hi'."""
    name, _, arg = text.partition(":")
    try:
        if name == "exp":
            return ExponentialSpacing(float(arg) if arg else 1.0)
        if name == "uniform":
            if not arg:
                return UniformSpacing(0.0, 1.0)
            lo, hi = arg.split(",")
            return UniformSpacing(float(lo), float(hi))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("bad spacing spec %r" % text) from exc
    raise ConfigError("unknown spacing family %r" % name)


@dataclass(frozen=True)
class ExperimentParams:
    """Everything needed to regenerate an experiment's configurations."""

    p: float
    law: ClusterLaw
    spacing: SpacingLaw = field(default_factory=ExponentialSpacing)
    n: int = 1000
    seed: int = 0
    side: str = RIGHT_HALF_LINE

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p must lie in [0, 1]")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.side not in (RIGHT_HALF_LINE, TWO_SIDED):
            raise ConfigError("side must be %r or %r" % (RIGHT_HALF_LINE,
                                                         TWO_SIDED))

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class Configuration:
    """Ordered particle array.

    velocities: -1 left arrow, +1 right arrow, 0 cluster site;
    sizes: initial blockade count for cluster sites (0 = vacant), 0 for arrows.
    Vacant sites stay in the arrays so site indices match the generation order.
    """

    positions: np.ndarray
    velocities: np.ndarray
    sizes: np.ndarray
    origin: float = 0.0
    side: str = RIGHT_HALF_LINE

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.velocities = np.asarray(self.velocities, dtype=np.int8)
        self.sizes = np.asarray(self.sizes, dtype=np.int64)
        n = self.positions.size
        if self.velocities.size != n or self.sizes.size != n:
            raise ConfigError("positions, velocities, sizes must align")
        if n > 1 and not np.all(np.diff(self.positions) > 0):
            raise ConfigError("positions must be strictly increasing")
        if self.side == RIGHT_HALF_LINE and n and self.positions[0] <= self.origin:
            raise ConfigError("right-half-line positions must exceed the origin")

    @property
    def n(self):
        return self.positions.size

    def species(self, site):
        """Readable species of 1-based site index."""
        i = site - 1
        v = self.velocities[i]
        if v == LEFT:
            return "left"
        if v == RIGHT:
            return "right"
        return "cluster(%d)" % self.sizes[i]


def trial_rng(seed, *key):
    """Counter-based substream for one trial, split from (seed, *key).

    Philox under a spawned SeedSequence: reordering or parallelizing trials
    cannot change any trial's draws.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def sample_config(params: ExperimentParams, trial: int) -> Configuration:
    """Sample the configuration for one trial.

    Site i holds a cluster of X_i ~ mu blockades with probability p, else a
    single arrow with a uniform +-1 velocity.  Spacings are i.i.d. from the
    spacing law.  Fully determined by (params.seed, trial).
    """
    rng = trial_rng(params.seed, trial)
    return _sample_with_rng(params, rng)


def _sample_with_rng(params, rng):
    n = params.n
    spacings = params.spacing.sample(rng, n)
    # one uniform per site: [0,p) cluster, then each arrow direction
    # equiprobable (u conditioned on [p,1) is still uniform)
    u = rng.random(n)
    is_cluster = u < params.p
    mid = params.p + 0.5 * (1.0 - params.p)
    vel = np.zeros(n, dtype=np.int8)
    vel[(u >= params.p) & (u < mid)] = LEFT
    vel[u >= mid] = RIGHT
    sizes = np.zeros(n, dtype=np.int64)
    ncl = int(is_cluster.sum())
    if ncl:
        sizes[is_cluster] = params.law.sample(rng, ncl)

    if params.side == RIGHT_HALF_LINE:
        positions = np.cumsum(spacings)
        origin = 0.0
    else:
        # split the sites across the origin, keeping left-to-right order
        half = n // 2
        left = -np.cumsum(spacings[:half])[::-1]
        right = np.cumsum(spacings[half:])
        positions = np.concatenate([left, right])
        origin = 0.0
    return Configuration(positions, vel, sizes, origin=origin, side=params.side)


def sub_config(config: Configuration, j: int, k: int) -> Configuration:
    """Restriction to sites j..k (1-based, inclusive); positions preserved."""
    if not 1 <= j <= k <= config.n:
        raise IndexError("window [%d, %d] out of range for n=%d"
                         % (j, k, config.n))
    return Configuration(config.positions[j - 1:k].copy(),
                         config.velocities[j - 1:k].copy(),
                         config.sizes[j - 1:k].copy(),
                         origin=config.origin, side=config.side)


_SPECIES_OUT = {LEFT: "left", RIGHT: "right"}


def to_text(config: Configuration) -> str:
    """One site per line: `position species [multiplicity]`."""
    lines = ["# side=%s origin=%r" % (config.side, config.origin)]
    for x, v, s in zip(config.positions, config.velocities, config.sizes):
        if v == STILL:
            lines.append("%r cluster %d" % (float(x), s))
        else:
            lines.append("%r %s" % (float(x), _SPECIES_OUT[v]))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Configuration:
    side = RIGHT_HALF_LINE
    origin = 0.0
    positions, vels, sizes = [], [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                key, _, value = token.partition("=")
                if key == "side":
                    side = value
                elif key == "origin":
                    origin = float(value)
            continue
        parts = line.split()
        try:
            x = float(parts[0])
            species = parts[1]
            if species == "cluster":
                positions.append(x)
                vels.append(STILL)
                sizes.append(int(parts[2]))
            elif species in ("left", "right"):
                positions.append(x)
                vels.append(LEFT if species == "left" else RIGHT)
                sizes.append(0)
            else:
                raise ValueError("unknown species %r" % species)
        except (IndexError, ValueError) as exc:
            raise ConfigError("bad fixture line %d: %r (%s)"
                              % (lineno, line, exc)) from exc
    return Configuration(np.array(positions), np.array(vels), np.array(sizes),
                         origin=origin, side=side)
