"""Line-oriented text format for block/transaction fixtures.

One record per line, whitespace separated::

    tx    <id> -        inputs=<hex>,<hex> outputs=<hex> amount=25 label=T1
    block <id> <parent> height=1 work=1 miner=W nonce=0 txs=<txid>,<txid>

``-`` stands for "no parent" (transactions) and empty lists are written as
``inputs=``. Blank lines and ``#`` comments are ignored. A transaction must
appear before any block that references it. Block ids are re-derived on load
and a mismatch is reported, so a fixture cannot silently drift from the
digest rules.
"""

from __future__ import annotations

from typing import Iterable, TextIO

from .chain import Block, KeyHash, Transaction, digest_block


class FixtureError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _keys(text: str) -> tuple[KeyHash, ...]:
    return tuple(KeyHash.from_hex(k) for k in text.split(",") if k)


def format_tx(tx: Transaction) -> str:
    return (
        f"tx {tx.id.hex()} - inputs={','.join(k.hex() for k in tx.input_keys)} "
        f"outputs={','.join(k.hex() for k in tx.output_keys)} amount={tx.amount} label={tx.label}"
    )


def format_block(b: Block) -> str:
    return (
        f"block {b.id.hex()} {b.parent_id.hex()} height={b.height} work={b.work} "
        f"miner={b.miner} nonce={b.nonce} txs={','.join(tx.id.hex() for tx in b.txs)}"
    )


def dump(blocks: Iterable[Block], out: TextIO) -> None:
    """Write blocks (and their transactions, first use only) in height order."""
    written: set[bytes] = set()
    for b in sorted(blocks, key=lambda x: (x.height, x.id)):
        for tx in b.txs:
            if tx.id not in written:
                out.write(format_tx(tx) + "\n")
                written.add(tx.id)
        out.write(format_block(b) + "\n")


def dumps(blocks: Iterable[Block]) -> str:
    import io

    buf = io.StringIO()
    dump(blocks, buf)
    return buf.getvalue()


def _fields(parts: list[str], lineno: int) -> dict[str, str]:
    out = {}
    for part in parts:
        key, sep, value = part.partition("=")
        if not sep:
            raise FixtureError(lineno, f"expected key=value, got {part!r}")
        out[key] = value
    return out


def load(lines: Iterable[str]) -> tuple[dict[bytes, Transaction], list[Block]]:
    txs: dict[bytes, Transaction] = {}
    blocks: list[Block] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 3:
            raise FixtureError(lineno, "expected kind, id and parent")
        kind, ident, parent = parts[:3]
        try:
            ident_b = bytes.fromhex(ident)
            f = _fields(parts[3:], lineno)
            if kind == "tx":
                tx = Transaction(ident_b, _keys(f.get("inputs", "")), _keys(f["outputs"]),
                                 int(f["amount"]), f.get("label", ""))
                txs[tx.id] = tx
            elif kind == "block":
                tx_list = tuple(txs[bytes.fromhex(t)] for t in f.get("txs", "").split(",") if t)
                b = Block(ident_b, bytes.fromhex(parent), int(f["height"]), int(f["work"]),
                          f.get("miner", ""), int(f["nonce"]), tx_list)
                if digest_block(b.parent_id, b.txs, b.nonce, b.work) != b.id:
                    raise FixtureError(lineno, "block id does not match its contents")
                blocks.append(b)
            else:
                raise FixtureError(lineno, f"unknown record kind {kind!r}")
        except FixtureError:
            raise
        except (KeyError, ValueError) as exc:
            raise FixtureError(lineno, str(exc)) from exc
    return txs, blocks


def loads(text: str) -> tuple[dict[bytes, Transaction], list[Block]]:
    return load(text.splitlines())
