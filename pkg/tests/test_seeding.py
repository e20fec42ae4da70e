"""Seed derivation: determinism and stream separation."""

import numpy as np

from explor.seeding import derive_seed, generator


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(7, "labeler", 3) == derive_seed(7, "labeler", 3)

    def test_distinct_purposes_and_indices(self):
        """Children of one parent must not collide across tags or indices."""
        seen = set()
        for tag in ("labeler", "batches", "expansion", "init"):
            for i in range(100):
                seen.add(derive_seed(42, tag, i))
        assert len(seen) == 400

    def test_distinct_parents(self):
        a = [derive_seed(p, "x", 0) for p in range(200)]
        assert len(set(a)) == 200

    def test_generator_reproducible(self):
        g1 = generator(derive_seed(1, "t"))
        g2 = generator(derive_seed(1, "t"))
        assert np.array_equal(g1.standard_normal(16), g2.standard_normal(16))
