"""Shared domain types: rounds, parties, chains, amounts and the hashlock gadget."""
from __future__ import annotations

import hashlib
import hmac
from typing import NewType

Round = int
PartyId = NewType("PartyId", str)
ChainId = NewType("ChainId", str)
ContractId = NewType("ContractId", str)
Secret = NewType("Secret", bytes)
Hashlock = NewType("Hashlock", bytes)

DIGEST_SIZE = 32
MAX_AMOUNT = 2**63 - 1


class SimError(Exception):
    """Base class for simulator errors."""


class AmountError(SimError, ValueError):
    pass


def check_amount(value: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise AmountError(f"amount must be an integer, got {value!r}")
    if value < 0:
        raise AmountError(f"negative amount {value}")
    if value > MAX_AMOUNT:
        raise AmountError(f"amount overflow: {value}")
    return value


def add_amount(a: int, b: int) -> int:
    return check_amount(check_amount(a) + check_amount(b))


def sub_amount(a: int, b: int) -> int:
    check_amount(a)
    check_amount(b)
    if b > a:
        raise AmountError(f"cannot subtract {b} from {a}")
    return a - b


def make_secret(seed: bytes | str) -> Secret:
    """Derive a 32-byte secret deterministically from ``seed``."""
    if isinstance(seed, str):
        seed = seed.encode("utf-8")
    if not seed:
        raise ValueError("secret seed must be non-empty")
    return Secret(hashlib.sha256(b"swapsim-secret:" + seed).digest())


def hashlock(secret: bytes) -> Hashlock:
    return Hashlock(hashlib.sha256(secret).digest())


def verify(lock: bytes, secret: bytes) -> bool:
    return hmac.compare_digest(lock, hashlock(secret))


def to_hex(data: bytes) -> str:
    return data.hex()


def from_hex(text: str) -> bytes:
    return bytes.fromhex(text)
