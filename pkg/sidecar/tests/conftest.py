import hashlib

import numpy as np


class StubEncoder:
    """Deterministic text -> unit vector, no model required."""

    model_id = "stub-encoder-v1"
    d = 384

    def encode(self, texts):
        out = []
        for text in texts:
            seed = int.from_bytes(
                hashlib.blake2b(text.encode(), digest_size=8).digest(), "little"
            )
            rng = np.random.Generator(np.random.PCG64(seed))
            vec = rng.normal(size=self.d)
            out.append(vec / np.linalg.norm(vec))
        return np.array(out)
