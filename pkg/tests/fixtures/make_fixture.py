"""Regenerate the tiny check-in fixture used by the CLI smoke tests."""

from pathlib import Path

from osnsim.dataset import synthetic_geo_dataset, write_checkins, write_edges

HERE = Path(__file__).parent

if __name__ == "__main__":
    edges, checkins = synthetic_geo_dataset(100, gamma=1.2, beta=0.752, seed=0, spacing_km=50.0)
    write_edges(HERE / "tiny_edges.txt", edges)
    write_checkins(HERE / "tiny_checkins.txt", checkins)
