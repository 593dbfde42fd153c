from fractions import Fraction

import numpy as np
import pytest

from condpanel.model import FeedbackSpec, InitialCondition, PanelDataset, Path, Support

F = Fraction

# worked sequences; x and y listed per period t = 1..T
SPEC1_A = Path(InitialCondition(0, F(1)), (F(1), F(1)), (0, 1, 1))
SPEC1_B = Path(InitialCondition(0, F(1)), (F(1), F(1)), (1, 0, 1))
SPEC2_T2_A = Path(InitialCondition(1), (F(1), F(0)), (1, 0))
SPEC2_T2_B = Path(InitialCondition(1), (F(0), F(1)), (1, 0))
SPEC2_T3_A = Path(InitialCondition(0), (F(1), F(0), F(1)), (0, 1, 1))
SPEC2_T3_B = Path(InitialCondition(0), (F(0), F(1), F(1)), (1, 0, 1))
SPEC2_T3_C = Path(InitialCondition(0), (F(1), F(1), F(0)), (1, 0, 1))

BINARY = Support.default(2)


def random_dataset(rng: np.random.Generator, spec, T: int, k: int, N: int) -> PanelDataset:
    """Uniformly random paths; not drawn from the model, just valid histories."""
    x_index = rng.integers(0, k, size=(N, T))
    y = rng.integers(0, 2, size=(N, T + 1))
    return PanelDataset.from_arrays(FeedbackSpec.parse(spec), Support.default(k), x_index, y)


def dataset_of(spec, support, *paths) -> PanelDataset:
    return PanelDataset(FeedbackSpec.parse(spec), support, paths[0].T, tuple(paths))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def simulated(spec=2, T=3, N=500, seed=7, theta=(0.5, 1.0), k=2):
    from condpanel.model import Theta
    from condpanel.simulation import DGPConfig, simulate_panel

    cfg = DGPConfig(Theta(*theta), FeedbackSpec.parse(spec), Support.default(k), T, N, seed=seed)
    return simulate_panel(cfg)


ACCEPTANCE_LINES: list = []


def record(criterion: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
