import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for (seed, stream...), independent across streams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))


def complex_normal(rng: np.random.Generator, shape: tuple[int, ...], variance: float = 1.0) -> np.ndarray:
    # circularly symmetric: real and imaginary parts each carry half the variance
    scale = np.sqrt(variance / 2)
    return scale * rng.standard_normal(shape) + 1j * scale * rng.standard_normal(shape)


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for (seed, keys...), e.g. one per Monte Carlo trial."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, np.uint64)[0] >> 1)
