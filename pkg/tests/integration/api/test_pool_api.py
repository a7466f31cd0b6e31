"""
Integration tests for the pool endpoints.

Endpoints:
- POST /api/pool/tokens
- POST /api/pool/liquidity-per-tick
- POST /api/pool/add
- POST /api/pool/boundaries
- POST /api/pool/swap
"""

import pytest
from httpx import AsyncClient


@pytest.mark.integration
@pytest.mark.asyncio
class TestLiquidityEndpoints:
    """Test the liquidity endpoints against the toy pool."""

    async def test_tokens_in_active_tick(self, client: AsyncClient, pool_json):
        response = await client.post("/api/pool/tokens", json={"pool": pool_json, "tick": 3, "liquidity": 111.052})

        assert response.status_code == 200
        data = response.json()
        assert data["token_a"] == pytest.approx(2.370, abs=1e-3)
        assert data["token_b"] == pytest.approx(7.208, abs=1e-3)

    async def test_liquidity_per_tick(self, client: AsyncClient, pool_json):
        response = await client.post(
            "/api/pool/liquidity-per-tick",
            json={"pool": pool_json, "lower": 2, "upper": 5, "capital": 2.87},
        )

        assert response.status_code == 200
        data = response.json()
        assert data["units_per_tick"] == pytest.approx(10.0, abs=2e-3)
        assert data["token_b"] + 1.6 * data["token_a"] == pytest.approx(2.87)

    async def test_degenerate_range(self, client: AsyncClient, pool_json):
        response = await client.post(
            "/api/pool/liquidity-per-tick",
            json={"pool": pool_json, "lower": 4, "upper": 4, "capital": 1.0},
        )

        assert response.status_code == 400
        assert response.json()["detail"]["error"] == "InvalidInputError"

    async def test_add_liquidity(self, client: AsyncClient, pool_json):
        response = await client.post(
            "/api/pool/add",
            json={"pool": pool_json, "position": {"lower": 2, "upper": 5, "units_per_tick": 10}},
        )

        assert response.status_code == 200
        data = response.json()
        assert data["liquidity"] == pytest.approx([70, 100, 121.052, 123.75, 105, 90])
        assert data["pool_rate"] == 1.6
        assert data["active_tick"] == 3

    async def test_rate_outside_grid(self, client: AsyncClient, pool_json):
        pool_json["pool_rate"] = 3.0

        response = await client.post("/api/pool/boundaries", json=pool_json)

        assert response.status_code == 422
        assert response.json()["detail"]["error"] == "OutOfRangeError"

    async def test_liquidity_length_mismatch(self, client: AsyncClient, pool_json):
        pool_json["liquidity"] = pool_json["liquidity"][:-1]

        response = await client.post("/api/pool/boundaries", json=pool_json)

        assert response.status_code == 422


@pytest.mark.integration
@pytest.mark.asyncio
class TestSwapEndpoints:
    """Test swaps against the walk-through pool."""

    async def test_boundaries(self, client: AsyncClient, swap_pool_json):
        response = await client.post("/api/pool/boundaries", json=swap_pool_json)

        assert response.status_code == 200
        expected = [-26.553, -16.553, -6.553, 3.542, 14.917, 28.042, 43.042]
        assert response.json()["boundaries"] == pytest.approx(expected, abs=1e-3)

    async def test_swap_crossing_a_tick(self, client: AsyncClient, swap_pool_json):
        response = await client.post("/api/pool/swap", json={"pool": swap_pool_json, "x": -10.0})

        assert response.status_code == 200
        data = response.json()
        assert data["token_a_delta"] == pytest.approx(-6.781, abs=1e-3)
        assert data["new_pool_rate"] == pytest.approx(1.358, abs=1e-3)
        assert data["new_active_tick"] == 2
        assert data["total_fees"] == 0.0

    async def test_over_capacity_rejected(self, client: AsyncClient, swap_pool_json):
        response = await client.post("/api/pool/swap", json={"pool": swap_pool_json, "x": -30.0})

        assert response.status_code == 422
        detail = response.json()["detail"]
        assert detail["error"] == "PartialFillError"
        assert detail["max_executable"] == pytest.approx(-26.553, abs=1e-3)

    async def test_over_capacity_partial(self, client: AsyncClient, swap_pool_json):
        response = await client.post(
            "/api/pool/swap",
            json={"pool": swap_pool_json, "x": 50.0, "allow_partial": True},
        )

        assert response.status_code == 200
        data = response.json()
        assert data["token_b_delta"] == pytest.approx(43.042, abs=1e-3)
        assert data["new_pool_rate"] == pytest.approx(2.56)

    async def test_fees_reported_per_tick(self, client: AsyncClient, swap_pool_json):
        swap_pool_json["fee_rate"] = 0.003

        response = await client.post("/api/pool/swap", json={"pool": swap_pool_json, "x": -10.0})

        data = response.json()
        assert len(data["fees_per_tick"]) == 6
        assert data["total_fees"] == pytest.approx(0.03)

    async def test_request_id_is_echoed(self, client: AsyncClient, swap_pool_json):
        response = await client.post(
            "/api/pool/swap",
            json={"pool": swap_pool_json, "x": 1.0},
            headers={"X-Request-ID": "swap-1"},
        )

        assert response.headers["X-Request-ID"] == "swap-1"

    async def test_request_id_is_generated(self, client: AsyncClient, swap_pool_json):
        response = await client.post("/api/pool/swap", json={"pool": swap_pool_json, "x": 1.0})

        assert response.headers["X-Request-ID"]
