import pytest

from vrmcast.core_model import ChannelModel, Instance, SystemParams, UserDemand, VideoConfig
from vrmcast.selfcheck import example1_instance


@pytest.fixture
def example1():
    return example1_instance()


def make_instance(tile_sets, qualities, rates=(6.66e5, 16.18e5, 24.29e5), grid=(4, 8),
                  gains=(1e-6, 2e-6), probs=(0.5, 0.5), ek=1e-6, **params):
    K = len(tile_sets)
    demands = tuple(UserDemand(k + 1, frozenset(t), q) for k, (t, q) in enumerate(zip(tile_sets, qualities)))
    channel = ChannelModel((tuple(gains),) * K, (tuple(probs),) * K)
    return Instance(VideoConfig(*grid, rates), demands, channel, SystemParams(transcode_energy=(ek,) * K, **params))


def random_demands(rng, K, rows, cols, levels=3):
    cells = [(m, n) for m in range(1, rows + 1) for n in range(1, cols + 1)]
    out = []
    for k in range(K):
        size = int(rng.integers(1, len(cells) + 1))
        idx = rng.choice(len(cells), size=size, replace=False)
        out.append(UserDemand(k + 1, frozenset(cells[i] for i in idx), int(rng.integers(1, levels + 1))))
    return tuple(out)


# one-line verdicts from test_acceptance.py, repeated in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
