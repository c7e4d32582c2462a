"""Prime-order subgroups used by the base oblivious transfer.

Both groups were produced by scripts/gen_groups.py (deterministic SHA-256
candidate stream, gmpy2 primality testing):

  id 1  256-bit safe prime, generator 4, order q = (p-1)/2.  Fast enough for
        per-bit base OT at desk scale; test sessions only.
  id 2  2048-bit prime with a 256-bit prime-order subgroup (DSA-style),
        generator of order q.  Release default.
"""

from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpz

OT_GROUP_TEST = 1
OT_GROUP_RELEASE = 2

_TEST_P = 0x813CB0F0F0195E803A5A72DEF8851548CAB02FE720F7E330F119843F1F480423
_TEST_Q = 0x409E5878780CAF401D2D396F7C428AA4655817F3907BF198788CC21F8FA40211

_REL_P = int(
    "812ec99526e886e2f8448977b0829895c5fe67c6f99437aa9cb50e9e4f2eae5e"
    "e1c9b429b8731ebb2ff1b5ef4065c4cd113e492305dcaffb48fe567b885bf238"
    "4ec1636b8828c3c5846b21ef60b99d2c07639ebf5b60f2fc5becf69df3968ae1"
    "bf0bfb1fa98ef70cffde300eabe2130cd3b1fef36cfb085ef39d078a2f8231c9"
    "8074a8cd9a0c5ea8165d3bd69528b8c5dcd7d60a0526b43658f272e15033a15d"
    "9dc320fa90e52d62a82f781efbe4845373f11bdca982dc4cd31011e44c98d098"
    "8aea80a868e5ccb07f0293936e51b115b230ee42adc3a0ebe304676ffd66522e"
    "132da0f18b296bd3ecba5f8b7c60c457c6e6162537524a18ae781b28194fcd23",
    16,
)
_REL_Q = 0xD41786666EB2C014F71B45BBCD67F09E36266703FD5508C11081AF45864E7029
_REL_G = int(
    "6fd40c089c3622f54bddbff3441beb3046d76c69a084abc6ef7035a85b831adc"
    "20202fce131bae720256cbd7ffe031c478d7d578dec9b3a11954e787c60fda2f"
    "ca0b9f63a8f191dd487835eadbecce29f0000fe76ff5b4b60b4796d527a1686b"
    "890961148ed3f58a5b4a1577890a7abf5df0de4115b584bfe5f5e6015ceab625"
    "bd1e27a39dcd47657caa780c7e5d70f7379bb049441fd897fb0003187aca353c"
    "7a1e74ec7d2c1ff3aca0b2732c1c2cd99137f565c7c3438cb9e42a5fbf1e377d"
    "a05e4d577e00b82a8e8505b16e732d6a88ddc2305be80cfc6c4b436abe398a9c"
    "8e820d094417acb8ad86a5c0eb2e28b7e1ef836d56cadbb7df242adbacd22b37",
    16,
)


@dataclass(frozen=True)
class OtGroup:
    gid: int
    p: mpz
    q: mpz
    g: mpz

    @property
    def elem_bytes(self) -> int:
        return (int(self.p).bit_length() + 7) // 8

    def encode(self, x: mpz) -> bytes:
        return int(x).to_bytes(self.elem_bytes, "big")

    def decode(self, b: bytes) -> mpz:
        return mpz(int.from_bytes(b, "big"))


GROUPS = {
    OT_GROUP_TEST: OtGroup(OT_GROUP_TEST, mpz(_TEST_P), mpz(_TEST_Q), mpz(4)),
    OT_GROUP_RELEASE: OtGroup(OT_GROUP_RELEASE, mpz(_REL_P), mpz(_REL_Q), mpz(_REL_G)),
}
