"""Scripted bot clients that drive the experiment service over HTTP."""
from __future__ import annotations


def pick_tiles(round_payload: dict, num_blue: int, k: int) -> list:
    """Greedy-by-observed picks with a forced number of blue tiles."""
    tiles = round_payload["tiles"]  # already sorted by observed desc
    blue = [t["id"] for t in tiles if t["color"] == "blue"]
    red = [t["id"] for t in tiles if t["color"] == "red"]
    picked = blue[:num_blue] + red[: k - num_blue]
    if len(picked) < k:
        remaining = [t["id"] for t in tiles if t["id"] not in set(picked)]
        picked += remaining[: k - len(picked)]
    return picked


def run_bot_session(client, condition: str = "random", num_blue=None) -> dict:
    """Complete one whole session; returns the summary payload.

    ``num_blue`` may be an int, a callable of the round index, or None for
    a pure top-k-by-observed policy that only honors the constraint.
    """
    created = client.post("/api/sessions", json={"condition": condition}).json()
    session_id = created["session_id"]
    k = created["k"]
    ell = created["ell"]
    completed = False
    while not completed:
        payload = client.get(f"/api/sessions/{session_id}/round").json()
        t = payload["round_index"]
        if num_blue is None:
            forced = ell
            tiles = payload["tiles"]
            top = tiles[:k]
            n_blue_top = sum(1 for tile in top if tile["color"] == "blue")
            forced = max(ell, n_blue_top)
        elif callable(num_blue):
            forced = num_blue(t)
        else:
            forced = num_blue
        ids = pick_tiles(payload, forced, k)
        response = client.post(
            f"/api/sessions/{session_id}/selection", json={"tile_ids": ids}
        )
        assert response.status_code == 200, response.text
        completed = response.json()["completed"]
    return client.get(f"/api/sessions/{session_id}/summary").json()
