import random
from fractions import Fraction

from lambdaforest.lambdatree import MetricTree
from lambdaforest.ordgroup import LexValue


def L(*coords):
    return LexValue(list(coords))


def random_lex_positive(rng: random.Random, rank: int) -> LexValue:
    """Strictly positive random value; leading coordinate may be zero so
    infinitesimal lengths show up in random trees."""
    while True:
        coords = [Fraction(rng.randint(0, 3), rng.choice([1, 2])) for _ in range(rank)]
        v = LexValue(coords)
        if v.is_positive():
            return v


def random_tree(rng: random.Random, n_vertices: int, rank: int = 1, prefix: str = "v") -> MetricTree:
    verts = [f"{prefix}{i}" for i in range(n_vertices)]
    edges = []
    for i in range(1, n_vertices):
        j = rng.randrange(i)
        edges.append((verts[i], verts[j], random_lex_positive(rng, rank)))
    return MetricTree(verts, edges, rank)
