# File: app/protocol/degenerate.py
"""
With n1 = n2 = t1 = t2 = 1 the threshold pipeline must collapse to a plain
single-user stealth payment. The oracle below recomputes that payment in a
straight line on raw curve integers, with stdlib hmac/hashlib, from the same
keys and session constants the pipeline used.
"""

import hashlib
import hmac
import random
from typing import Dict, Tuple

from ecdsa import SECP256k1
from ecdsa.ellipticcurve import PointJacobi

from ..crypto.tsig import ts_verify
from ..schemas import DegenerationReport
from .ledger import Ledger
from .parties import setup_dao
from .session import RecoveryView, run_transfer
from .types import DaoRole, TransferMode

_G = SECP256k1.generator
_Q = SECP256k1.order


def _enc(point) -> bytes:
    return bytes(point.to_bytes("compressed"))


def _h(data: bytes) -> int:
    return int.from_bytes(hashlib.sha256(data).digest(), "big") % _Q


def oracle_payment(a: int, b: int, chaincode: bytes, tag: bytes, label: bytes) -> Dict[str, object]:
    """
    Single-user reference: derive the child key, then D = B' + H(a·B' ∥ ξ)·G
    and the one-time spend key d = b' + ρ.
    """
    B = _G * b
    digest = hmac.new(chaincode, _enc(B) + tag, hashlib.sha512).digest()
    omega = int.from_bytes(digest[:32], "big") % _Q
    b_child = (b + omega) % _Q
    B_child = _G * b_child
    shared = B_child * a
    rho = _h(_enc(shared) + label)
    d = (b_child + rho) % _Q
    return {"dest": _enc(_G * d), "rho": rho, "d": d, "shared": _enc(shared)}


def oracle_schnorr(secret: int, message: bytes, nonce: int) -> Tuple[bytes, int]:
    R = _G * nonce
    e = _h(_enc(R) + _enc(_G * secret) + message)
    return _enc(R), (nonce + e * secret) % _Q


def oracle_verify(pub_bytes: bytes, message: bytes, R_bytes: bytes, s: int) -> bool:
    pub = PointJacobi.from_bytes(SECP256k1.curve, pub_bytes, order=_Q)
    R = PointJacobi.from_bytes(SECP256k1.curve, R_bytes, order=_Q)
    e = _h(R_bytes + pub_bytes + message)
    return _enc(_G * s) == _enc(R + pub * e)


def degenerate_single_user(seed: int) -> DegenerationReport:
    rng = random.Random(seed)
    sender = setup_dao(DaoRole.SENDER, 1, 1, rng)
    receiver = setup_dao(DaoRole.RECEIVER, 1, 1, rng)
    a = sender.party(1).signing_share.value.value
    root = receiver.party(1).derivation
    b, chaincode = root.my_share.value.value, root.chaincode

    seen = []
    result = run_transfer(
        sender, receiver, Ledger(), rng, mode=TransferMode.ANONYMOUS, observer=seen.append
    )
    view: RecoveryView = seen[0]
    tx = result.phase2.entry.transcript

    oracle = oracle_payment(a, b, chaincode, tx.tag.tag, tx.label.xi)
    oracle_nonce = random.Random(seed ^ 0x5EED).randrange(1, _Q)
    R_bytes, s = oracle_schnorr(oracle["d"], tx.spend_message, oracle_nonce)

    return DegenerationReport(
        seed=seed,
        destinations_equal=tx.dest.to_bytes() == oracle["dest"] and view.dest == tx.dest,
        offsets_equal=view.rho.value == oracle["rho"],
        one_time_keys_equal=view.one_time[1].secret.value == oracle["d"],
        pipeline_signature_valid=ts_verify(tx.dest, tx.spend_message, tx.spend_sig),
        oracle_signature_valid=oracle_verify(oracle["dest"], tx.spend_message, R_bytes, s),
        dest=tx.dest.to_bytes().hex(),
    )
