"""Transport fidelity: the primary's RemoteEmbedder against a live socket."""

import socket
import threading
import time

import numpy as np
import pytest
import uvicorn

from embed_sidecar.app import create_app

from conftest import StubEncoder


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def base_url():
    port = _free_port()
    config = uvicorn.Config(create_app(encoder=StubEncoder()), host="127.0.0.1",
                            port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("sidecar did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


def test_remote_embedder_round_trip(base_url):
    komem_embed = pytest.importorskip("komem.embed")
    provider = komem_embed.RemoteEmbedder(base_url)
    assert provider.d == 384
    assert provider.id == "stub-encoder-v1"

    a = provider.embed("erlotinib inhibits egfr")
    b = provider.embed("gefitinib inhibits met")
    assert a.shape == (384,)
    assert abs(np.linalg.norm(a) - 1.0) < 1e-5
    # cosine symmetry across the wire
    assert abs(komem_embed.cosine(a, b) - komem_embed.cosine(b, a)) < 1e-6

    batch = provider.embed_batch(["one", "two", "one"])
    assert batch.shape == (3, 384)
    assert np.array_equal(batch[0], batch[2])


def test_index_built_through_sidecar(base_url):
    komem_embed = pytest.importorskip("komem.embed")
    provider = komem_embed.RemoteEmbedder(base_url)
    texts = ["alpha decay", "beta oxidation", "gamma ray burst"]
    index = komem_embed.build_index(texts, provider)
    hits = komem_embed.top_k(index, provider.embed("beta oxidation"), k=1)
    assert hits[0][0] == "1"
    assert hits[0][1] > 1 - 1e-6
