"""HTTP client mirroring the session store surface used by the runner."""

from __future__ import annotations

import uuid

import httpx

from .session import SessionError


class RemoteStore:
    """Talks to a served instance; raises SessionError with the same codes."""

    def __init__(self, base_url: str, client: httpx.Client | None = None):
        self.http = client or httpx.Client(base_url=base_url, timeout=30.0)

    def close(self) -> None:
        self.http.close()

    @staticmethod
    def _raise_for_error(payload: dict) -> None:
        error = payload.get("error")
        if error:
            raise SessionError(error.get("code", "UNKNOWN"), error.get("message", ""))

    def create(self, config: dict) -> str:
        response = self.http.post(
            "/sessions", json={"config": config, "token": uuid.uuid4().hex}
        )
        payload = response.json()
        self._raise_for_error(payload)
        return payload["session"]

    def join(self, sid: str, display_name: str, role: str = "participant") -> str:
        response = self.http.post(
            f"/sessions/{sid}/join",
            json={"display_name": display_name, "role": role, "token": uuid.uuid4().hex},
        )
        payload = response.json()
        self._raise_for_error(payload)
        return payload["participant"]

    def submit_turn_wire(self, sid: str, speaker: str, wire_moves: list[dict]):
        """Returns (accepted, violations) exactly like the local store."""
        response = self.http.post(
            f"/sessions/{sid}/turns",
            json={"speaker": speaker, "moves": wire_moves, "token": uuid.uuid4().hex},
        )
        payload = response.json()
        self._raise_for_error(payload)
        if payload.get("accepted"):
            return True, []
        return False, payload.get("violations", [])

    def snapshot(self, sid: str) -> dict:
        response = self.http.get(f"/sessions/{sid}/snapshot")
        payload = response.json()
        self._raise_for_error(payload)
        return payload

    def legal_replies(self, sid: str, target: int) -> dict:
        response = self.http.get(f"/sessions/{sid}/replies", params={"target": target})
        payload = response.json()
        self._raise_for_error(payload)
        return payload

    def events(self, sid: str, after: int = -1) -> list[dict]:
        response = self.http.get(f"/sessions/{sid}/events.json", params={"after": after})
        payload = response.json()
        self._raise_for_error(payload)
        return payload["events"]
