from __future__ import annotations

from pathlib import Path

import pytest

from bpmn2pddl.cli import RunConfig, translate_file
from bpmn2pddl.pddl_encoder import DoneMode
from bpmn2pddl.process_graph import MessageStrategy

TESTS_DIR = Path(__file__).parent
FIXTURE_DIR = TESTS_DIR / "fixtures"
CORPUS_DIR = TESTS_DIR.parent / "corpus"

CORPUS_FILES = sorted(CORPUS_DIR.glob("*.bpmn"))


def fixture(name: str) -> Path:
    return FIXTURE_DIR / name


def translate(
    path: Path,
    strategy: MessageStrategy = MessageStrategy.EXCLUSIVE_EMULATION,
    fig4_compat: bool = False,
    done_mode: DoneMode = DoneMode.ANY_END,
    allow_spontaneous_start: bool = False,
):
    config = RunConfig(
        msg_strategy=strategy,
        fig4_compat=fig4_compat,
        done_mode=done_mode,
        allow_spontaneous_start=allow_spontaneous_start,
    )
    return translate_file(path, config)


def pddl_tokens(text: str) -> list[str]:
    """Whitespace-normalized token stream for figure comparison."""
    return text.replace("(", " ( ").replace(")", " ) ").split()


@pytest.fixture(scope="session")
def credit_scoring():
    return translate(CORPUS_DIR / "credit_scoring.bpmn", strategy=MessageStrategy.IGNORE)
