from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pytest

from fedspectral.diagnostics import Diagnostics
from fedspectral.errors import ConfigError, ContractError, RankError
from fedspectral.fedplus import (
    BroadcastMessage,
    ClientReply,
    FedPlusConfig,
    PowerIterationClient,
    aggregate_round,
    client_power_iteration,
    decode_frame,
    encode_frame,
    run_fedspectral_plus,
    server_round_loop,
    shard_multiplier,
)
from fedspectral.graph import Graph, normalized_laplacian
from fedspectral.linalg import bottom_k_eigenvectors, global_spectral_clustering, reduced_qr
from fedspectral.partition import ClientShard, distribute_edges

from conftest import planted_graph, principal_angles


def shard_from_graph(g, client_id=0):
    return ClientShard(client_id, g.num_nodes, g.edges, g.weights)


def path_shard(client_id=0):
    return shard_from_graph(Graph.from_edges(2, [(0, 1)]), client_id)


class TestClientPowerIteration:
    def test_path_graph_swap(self):
        out = client_power_iteration(path_shard(), 1, np.array([[1.0], [0.0]]))
        assert np.array_equal(out, [[0.0], [1.0]])

    def test_isolated_node_passthrough(self):
        g = Graph.from_edges(3, [(0, 1)])
        rng = np.random.default_rng(0)
        v = rng.standard_normal((3, 2))
        for iters in (1, 3, 7):
            out = client_power_iteration(shard_from_graph(g), iters, v)
            assert np.array_equal(out[2], v[2])

    def test_triangle_constant_column_fixed(self):
        # multiplier is A/2 on a triangle; the all-ones direction has value 1
        g = Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])
        v = np.ones((3, 1))
        mult = shard_multiplier(shard_from_graph(g))
        assert np.abs(mult - g.adjacency() / 2.0).max() < 1e-12
        out = client_power_iteration(shard_from_graph(g), 5, v)
        assert np.abs(out - v).max() < 1e-12

    def test_iters_compose(self):
        g = planted_graph([8, 8], 0.8, 0.1, seed=1)
        v = np.random.default_rng(1).standard_normal((16, 2))
        once = client_power_iteration(shard_from_graph(g), 1, v)
        twice = client_power_iteration(shard_from_graph(g), 1, once)
        assert np.allclose(
            client_power_iteration(shard_from_graph(g), 2, v), twice
        )

    def test_damping_variant(self):
        out = client_power_iteration(
            path_shard(), 1, np.array([[1.0], [0.0]]), damping=True
        )
        assert np.allclose(out, [[0.5], [0.5]])

    def test_contracts(self):
        with pytest.raises(ContractError):
            client_power_iteration(path_shard(), 0, np.ones((2, 1)))
        with pytest.raises(ContractError):
            client_power_iteration(path_shard(), 1, np.ones((3, 1)))


class TestAggregateRound:
    def test_identical_outputs(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((8, 3))
        q, _ = reduced_qr(x)
        assert np.array_equal(aggregate_round([x, x, x]), q)

    def test_cancellation_raises_rank_error_with_round(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((6, 2))
        with pytest.raises(RankError, match="round 7"):
            aggregate_round([x, -x], round_index=7)

    def test_single_client(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((5, 2))
        q, _ = reduced_qr(x)
        assert np.array_equal(aggregate_round([x]), q)

    def test_contracts(self):
        with pytest.raises(ContractError):
            aggregate_round([])
        with pytest.raises(ContractError):
            aggregate_round([np.ones((2, 2)), np.ones((3, 2))])


class TestWireFormat:
    def test_roundtrip(self):
        rng = np.random.default_rng(5)
        emb = rng.standard_normal((7, 3))
        tag, back = decode_frame(encode_frame(12, emb))
        assert tag == 12
        assert np.array_equal(back, emb)
        assert back.dtype == np.float64

    def test_header_mismatch(self):
        frame = encode_frame(0, np.ones((2, 2)))
        with pytest.raises(ContractError):
            decode_frame(frame[:-8])


class FakeTransport:
    """Stands in for a client without holding any graph data at all."""

    def __init__(self, client_id, reply_embedding):
        self.client_id = client_id
        self._reply = reply_embedding
        self.received = []

    def run_round(self, message):
        self.received.append(message)
        return ClientReply(self.client_id, self._reply)


class TestServerLoop:
    def test_runs_on_transports_without_shard_data(self):
        rng = np.random.default_rng(6)
        reply = rng.standard_normal((6, 2))
        transports = [FakeTransport(0, reply), FakeTransport(1, reply)]
        v0, _ = reduced_qr(rng.standard_normal((6, 2)))
        out = server_round_loop(transports, v0, 3)
        q, _ = reduced_qr(reply)
        assert np.array_equal(out, q)
        for t in transports:
            assert all(isinstance(m, BroadcastMessage) for m in t.received)

    def test_boundary_payloads_are_embeddings_only(self):
        g = planted_graph([10, 10], 0.8, 0.08, seed=7)
        shards = distribute_edges(g, 3, 0.5, seed=8)
        seen = []

        class Spy:
            def __init__(self, inner):
                self._inner = inner
                self.client_id = inner.client_id

            def run_round(self, message):
                seen.append(message.embedding)
                reply = self._inner.run_round(message)
                seen.append(reply.embedding)
                return reply

        transports = [Spy(PowerIterationClient(sh, 2)) for sh in shards]
        v0, _ = reduced_qr(np.random.default_rng(8).standard_normal((20, 2)))
        server_round_loop(transports, v0, 4)
        assert len(seen) == 4 * 3 * 2
        for payload in seen:
            assert isinstance(payload, np.ndarray)
            assert payload.shape == (20, 2)
            assert payload.dtype == np.float64

    def test_client_surface_hides_shard(self):
        client = PowerIterationClient(path_shard(), 1)
        public = [name for name in vars(client) if not name.startswith("_")]
        assert public == []

    def test_orthonormal_after_every_round(self):
        g = planted_graph([12, 12], 0.7, 0.06, seed=9)
        shards = distribute_edges(g, 4, 0.5, seed=10)
        checked = []

        def on_round(_, basis):
            checked.append(np.abs(basis.T @ basis - np.eye(2)).max())

        run_fedspectral_plus(
            shards, FedPlusConfig(2, iters=3, global_rounds=6, seed=11), on_round=on_round
        )
        assert len(checked) == 6
        assert max(checked) <= 1e-10

    def test_entry_magnitudes_bounded(self):
        g = planted_graph([15, 15], 0.7, 0.05, seed=12)
        shards = distribute_edges(g, 3, 0.5, seed=13)
        peaks = []

        class Spy:
            def __init__(self, inner):
                self._inner = inner
                self.client_id = inner.client_id

            def run_round(self, message):
                reply = self._inner.run_round(message)
                peaks.append(np.abs(reply.embedding).max())
                return reply

        transports = [Spy(PowerIterationClient(sh, 4)) for sh in shards]
        v0, _ = reduced_qr(np.random.default_rng(13).standard_normal((30, 3)))
        out = server_round_loop(transports, v0, 5)
        assert np.isfinite(out).all()
        assert max(peaks) <= 1.0 + 1e-9

    def test_serial_vs_threaded_bitwise(self):
        g = planted_graph([12, 12], 0.75, 0.06, seed=14)
        shards = distribute_edges(g, 4, 0.5, seed=15)
        cfg = FedPlusConfig(2, iters=2, global_rounds=5, seed=16)
        serial: list[np.ndarray] = []
        threaded: list[np.ndarray] = []
        run_fedspectral_plus(shards, cfg, on_round=lambda t, b: serial.append(b.copy()))
        with ThreadPoolExecutor(max_workers=4) as pool:
            run_fedspectral_plus(
                shards,
                cfg,
                on_round=lambda t, b: threaded.append(b.copy()),
                map_fn=pool.map,
            )
        assert len(serial) == len(threaded) == 5
        for a, b in zip(serial, threaded):
            assert np.array_equal(a, b)

    def test_rank_error_carries_round_index(self):
        rng = np.random.default_rng(17)
        x = rng.standard_normal((6, 2))
        transports = [FakeTransport(0, x), FakeTransport(1, -x)]
        v0, _ = reduced_qr(rng.standard_normal((6, 2)))
        with pytest.raises(RankError, match="round 0"):
            server_round_loop(transports, v0, 2)


class TestProtocol:
    def test_config_validation(self):
        with pytest.raises(ConfigError):
            FedPlusConfig(num_clusters=0)
        with pytest.raises(ConfigError):
            FedPlusConfig(num_clusters=2, iters=0)
        with pytest.raises(ConfigError):
            FedPlusConfig(num_clusters=2, global_rounds=0)

    def test_deterministic(self):
        g = planted_graph([10, 10], 0.8, 0.08, seed=18)
        shards = distribute_edges(g, 3, 0.5, seed=19)
        cfg = FedPlusConfig(2, iters=2, global_rounds=4, seed=20)
        la, va = run_fedspectral_plus(shards, cfg)
        lb, vb = run_fedspectral_plus(shards, cfg)
        assert np.array_equal(la, lb)
        assert np.array_equal(va, vb)

    def test_round_drift_recorded(self):
        g = planted_graph([10, 10], 0.8, 0.08, seed=21)
        shards = distribute_edges(g, 2, 0.5, seed=22)
        diag = Diagnostics()
        run_fedspectral_plus(
            shards, FedPlusConfig(2, iters=1, global_rounds=7, seed=23), diag=diag
        )
        assert len(diag.round_drift) == 7
        assert all(np.isfinite(d) for d in diag.round_drift)
        # the iteration settles: late drift is smaller than early drift
        assert diag.round_drift[-1] < diag.round_drift[0]

    def test_single_client_converges_to_reference_subspace(self):
        g = planted_graph([12, 12, 12], 0.85, 0.04, seed=24)
        shards = distribute_edges(g, 1, 1.0, seed=25)
        cfg = FedPlusConfig(3, iters=10, global_rounds=200, seed=26)
        labels, basis = run_fedspectral_plus(shards, cfg)
        lap = normalized_laplacian(g)
        reference = bottom_k_eigenvectors(lap, 3, seed=1)
        assert principal_angles(basis, reference).max() < 1e-6
        assert np.array_equal(labels, global_spectral_clustering(g, 3, seed=26))

    def test_full_overlap_matches_raw_orthogonal_iteration(self):
        # every client holds the whole graph: one round of the protocol is
        # exactly one QR'd block power step on the global multiplier
        g = planted_graph([10, 10], 0.8, 0.08, seed=27)
        shards = distribute_edges(g, 3, 1.0, seed=28)
        cfg = FedPlusConfig(2, iters=1, global_rounds=30, seed=29)
        _, basis = run_fedspectral_plus(shards, cfg)
        mult = shard_multiplier(shards[0])
        from fedspectral.seeding import embedding_seed

        rng = np.random.default_rng(embedding_seed(cfg.seed))
        manual, _ = reduced_qr(rng.standard_normal((20, 2)))
        for _ in range(30):
            manual, _ = reduced_qr(mult @ manual)
        assert np.array_equal(basis, manual)

    def test_universe_mismatch(self):
        a = ClientShard(0, 4, np.empty((0, 2), dtype=np.int64), np.empty(0))
        b = ClientShard(1, 5, np.empty((0, 2), dtype=np.int64), np.empty(0))
        with pytest.raises(ContractError):
            run_fedspectral_plus([a, b], FedPlusConfig(2))
