#!/usr/bin/env python3
"""Independent oracle for the pinned crypto vectors used by the C++ tests.

Requires: argon2-cffi, cryptography, pynacl, coincurve, pycryptodome,
eth-account, base58. Not part of the build; rerun only to regenerate
tests/data/golden_vectors.json and the constants printed to stdout.
"""
import hashlib
import json
import sys

import argon2.low_level as a2
import base58
import coincurve
import nacl.bindings as nb
from Crypto.Hash import keccak
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.kdf.hkdf import HKDF, HKDFExpand
from eth_account.messages import encode_typed_data
from eth_utils import to_checksum_address

N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141


def k256(b):
    h = keccak.new(digest_bits=256)
    h.update(b)
    return h.digest()


def root_of(payload, domain):
    stretched = a2.hash_secret_raw(domain.encode(), payload[:16], time_cost=3,
                                   memory_cost=4096, parallelism=1, hash_len=32,
                                   type=a2.Type.ID)
    return HKDF(hashes.SHA256(), 32, b"", b"acegf:identity:root").derive(stretched)


def dk_of(root, curve, ctx):
    info = b"ACEGF-REV32-V1-" + curve.encode() + b":" + ctx.encode()
    return HKDF(hashes.SHA256(), 32, b"", info).derive(root)


def pub_of(dk, curve):
    if curve == "ed25519":
        pk, _ = nb.crypto_sign_seed_keypair(dk)
        return pk
    if curve == "x25519":
        return nb.crypto_scalarmult_base(dk)
    d = int.from_bytes(dk, "big") % N
    return coincurve.PrivateKey.from_int(d).public_key.format(compressed=True)


def evm_addr(pub33):
    unc = coincurve.PublicKey(pub33).format(compressed=False)[1:]
    return to_checksum_address(k256(unc)[-20:])


records = []
cases = [
    (bytes(32), "test", "agent:a1:dir:outbound:seq:0:tx:t1:", "ed25519"),
    (bytes(32), "test", "agent:a1:dir:outbound:seq:0:tx:t1:", "secp256k1"),
    (bytes(32), "test", "agent:a1:dir:outbound:seq:0:tx:t1:", "x25519"),
    (bytes(32), "test", "agent-identity:0:", "ed25519"),
    (bytes(range(32)), "owner@example", "agent:a2:dir:inbound:mode:basic:", "secp256k1"),
    (bytes(range(32)), "owner@example", "agent:a2:dir:inbound:pool:pre:seq:3:", "ed25519"),
    (bytes([0xff] * 32), "", "audit:tags:v1", "x25519"),
]
for payload, domain, ctx, curve in cases:
    root = root_of(payload, domain)
    pub = pub_of(dk_of(root, curve, ctx), curve)
    records.append({
        "payload_hex": payload.hex(),
        "domain": domain,
        "ctx": ctx,
        "curve": curve,
        "expected_pubkey_hex": pub.hex(),
        "expected_evm_address": evm_addr(pub) if curve == "secp256k1" else None,
    })

with open(sys.argv[1] if len(sys.argv) > 1 else "golden_vectors.json", "w") as f:
    json.dump(records, f, indent=2)
    f.write("\n")

r0 = root_of(bytes(32), "test")
print("R0", r0.hex())
print("R0_test2", root_of(bytes(32), "test2").hex())
agent_pk = pub_of(dk_of(r0, "ed25519", "agent-identity:0:"), "ed25519")
print("agent0_pk", agent_pk.hex())
print("agent0_id", hashlib.sha256(agent_pk).hexdigest())

# HKDF-Expand on raw shared secret for the negotiation key.
print("neg_key_for_ones", HKDFExpand(hashes.SHA256(), 32, b"aesp:negotiation:v1").derive(bytes([1] * 32)).hex())

print("keccak_empty", k256(b"").hex())
print("keccak_abc", k256(b"abc").hex())

# secp256k1 deterministic signatures (RFC 6979, low-s) over keccak(msg).
for scalar, msg in [(1, b"hello"), (0xC0FFEE, b"aesp"), (N - 1, b"")]:
    pk = coincurve.PrivateKey.from_int(scalar)
    sig = pk.sign_recoverable(k256(msg), hasher=None)
    sig = sig[:64] + bytes([sig[64] + 27])
    print("secp_sig", hex(scalar), msg, sig.hex())

# EIP-712 digest of a fixed commitment.
typed = {
    "types": {
        "EIP712Domain": [
            {"name": "name", "type": "string"},
            {"name": "version", "type": "string"},
            {"name": "chainId", "type": "uint256"},
        ],
        "Commitment": [
            {"name": "buyerAgent", "type": "address"},
            {"name": "sellerAgent", "type": "address"},
            {"name": "item", "type": "string"},
            {"name": "price", "type": "uint256"},
            {"name": "currency", "type": "address"},
            {"name": "deliveryDeadline", "type": "uint256"},
            {"name": "arbitrator", "type": "address"},
            {"name": "escrowRequired", "type": "bool"},
            {"name": "nonce", "type": "uint256"},
        ],
    },
    "primaryType": "Commitment",
    "domain": {"name": "YalletAgentCommitment", "version": "1", "chainId": 8453},
    "message": {
        "buyerAgent": "0x7E5F4552091A69125d5DfCb7b8C2659029395Bdf",
        "sellerAgent": "0x2B5AD5c4795c026514f8317c7a215E218DcCD6cF",
        "item": "groceries: 12 items",
        "price": 42500000,
        "currency": "0xA0b86991c6218b36c1d19D4a2e9Eb0cE3606eB48",
        "deliveryDeadline": 1767225600,
        "arbitrator": "0x6813Eb9362372EEF6200f3b1dbC3f819671cBA69",
        "escrowRequired": True,
        "nonce": int("0f" * 32, 16),
    },
}
msg = encode_typed_data(full_message=typed)
digest = k256(b"\x19" + msg.version + msg.header + msg.body)
print("eip712_digest", digest.hex())
typed["domain"]["chainId"] = 1
msg = encode_typed_data(full_message=typed)
print("eip712_digest_chain1", k256(b"\x19" + msg.version + msg.header + msg.body).hex())

print("evm_addr_scalar1", evm_addr(coincurve.PrivateKey.from_int(1).public_key.format()))
print("evm_addr_scalar2", evm_addr(coincurve.PrivateKey.from_int(2).public_key.format()))
print("evm_addr_scalar3", evm_addr(coincurve.PrivateKey.from_int(3).public_key.format()))
print("b58_zero32", base58.b58encode(bytes(32)).decode())
print("b58_agent0", base58.b58encode(agent_pk).decode())

# Agreement hash for {"price":10}: canonical JSON is {"price":10}.
print("agree_price10", hashlib.sha256(b'{"price":10}').hexdigest())
