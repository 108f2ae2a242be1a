"""JSON client for the service, shared by the CLI and by tests.

Runs the FastAPI app in-process through an ASGI transport when no server URL
is given, so the CLI works without a daemon; with a URL it is an ordinary
HTTP client.  Floats survive the JSON round trip exactly in both modes.
"""

from __future__ import annotations

import asyncio

import httpx


class ServiceError(Exception):
    """A request failed; carries the HTTP status and the service's detail."""

    def __init__(self, detail, status_code=None):
        super().__init__(detail)
        self.detail = detail
        self.status_code = status_code


class ServiceClient:
    def __init__(self, server=None, timeout=600.0):
        self.server = server
        self.timeout = timeout

    def post(self, path, payload):
        return self._request("POST", path, payload)

    def get(self, path):
        return self._request("GET", path, None)

    def _request(self, method, path, payload):
        try:
            if self.server:
                with httpx.Client(base_url=self.server, timeout=self.timeout) as client:
                    resp = client.request(method, path, json=payload)
            else:
                resp = asyncio.run(self._asgi_request(method, path, payload))
        except httpx.HTTPError as exc:
            raise ServiceError(f"service request failed: {exc}") from exc
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise ServiceError(str(detail), status_code=resp.status_code)
        return resp.json()

    async def _asgi_request(self, method, path, payload):
        from .service import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport,
            base_url="http://pnmcsurf.internal",
            timeout=self.timeout,
        ) as client:
            return await client.request(method, path, json=payload)
