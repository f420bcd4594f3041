from __future__ import annotations

import random

import pytest

from redlistsim.chain import GENESIS, Block, BlockIndex, KeyHash, Transaction


def key(name: str) -> KeyHash:
    return KeyHash.from_name(name)


def pay(src: str | None, dst: str, label: str, amount: int = 1) -> Transaction:
    inputs = [key(src)] if src else []
    return Transaction.create(inputs, [key(dst)], amount, nonce=label, label=label)


def child(parent: Block, *txs: Transaction, miner: str = "", nonce: int = 0, work: int = 1) -> Block:
    return Block.create(parent.id, parent.height + 1, txs, miner, nonce, work)


def linear_chain(n: int, start: Block = GENESIS, tag: str = "", work: int = 1) -> list[Block]:
    out, tip = [], start
    for i in range(n):
        tip = child(tip, pay("x", "y", f"{tag}{i}"), work=work)
        out.append(tip)
    return out


def random_tree(rng: random.Random, n: int, max_work: int = 1) -> list[Block]:
    """Random block tree over genesis; every block carries one unique tx."""
    blocks = [GENESIS]
    for i in range(n):
        parent = rng.choice(blocks)
        blocks.append(child(parent, pay("x", "y", f"n{i}"), work=rng.randint(1, max_work)))
    return blocks[1:]


@pytest.fixture
def index() -> BlockIndex:
    return BlockIndex()


# one PASS/FAIL line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
