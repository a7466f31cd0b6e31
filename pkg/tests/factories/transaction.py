"""
Transaction record factory for test data generation.
"""

import factory

from app.schemas.transaction import TransactionRecord


class TransactionRecordFactory(factory.Factory):
    """
    Factory for TransactionRecord.

    Default: a swap depositing 10 token B for 6 token A in block 100.

    Usage:
        front = TransactionRecordFactory(index=0, account="0xbot", token_b=50.0)
    """

    class Meta:
        model = TransactionRecord

    block = 100
    index = factory.Sequence(lambda n: n)
    account = factory.Sequence(lambda n: f"0x{n:040x}")
    kind = "swap"
    token_a = -6.0
    token_b = 10.0
    market_rate = 1.6

    @classmethod
    def sandwich(cls, block: int = 100, start: int = 0, kind: str = "liquidity_based", **kwargs):
        """
        Front-run, victim and back-run records of one attack.

        Liquidity-based: the attacker adds 100 A / 50 B and removes
        100 A / 50.2 B around the victim's swap (symmetry error 0.004).
        Swap-based: the attacker buys and sells 20 token B worth around it.
        """
        attacker = kwargs.pop("attacker", "0xattacker")
        victim = kwargs.pop("victim", "0xvictim")
        if kind == "liquidity_based":
            front = cls(block=block, index=start, account=attacker, kind="add_liquidity", token_a=100.0, token_b=50.0)
            back = cls(block=block, index=start + 2, account=attacker, kind="remove_liquidity", token_a=-100.0, token_b=-50.2)
        else:
            front = cls(block=block, index=start, account=attacker, kind="swap", token_a=-12.0, token_b=20.0)
            back = cls(block=block, index=start + 2, account=attacker, kind="swap", token_a=12.0, token_b=-20.5)
        middle = cls(block=block, index=start + 1, account=victim, kind="swap", **kwargs)
        return [front, middle, back]
