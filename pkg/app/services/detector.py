"""
Sandwich-attack detection on transaction records.

A triple of consecutive transactions in one block is flagged when the
outer two come from the same account, the middle one from another account,
the outer pair moves the pool in opposite directions and the outer legs are
symmetric (within a tolerance) in at least one token. Swap pairs are
swap-based sandwiches; add/remove pairs are JIT liquidity attacks.
"""

import logging
from collections import Counter
from itertools import groupby
from typing import List, Optional, Sequence

from app.core.errors import InvalidInputError
from app.schemas.transaction import AttackOut, AttackSummary, TransactionRecord

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 0.05


def _symmetry_error(front: float, back: float) -> Optional[float]:
    """Relative mismatch of two opposite legs, None when the front leg is empty."""
    if front == 0:
        return None
    return abs(front + back) / abs(front)


def _attack_kind(front: TransactionRecord, back: TransactionRecord) -> Optional[str]:
    if front.kind == "swap" and back.kind == "swap":
        # opposite directions in token B
        if front.token_b * back.token_b < 0:
            return "swap_based"
        return None
    if front.kind == "add_liquidity" and back.kind == "remove_liquidity":
        return "liquidity_based"
    return None


def _attack_profit(front: TransactionRecord, back: TransactionRecord) -> Optional[float]:
    """Attacker's net gain in token B, token A valued at the attack block's market rate."""
    rate = back.market_rate or front.market_rate
    if rate is None:
        return None
    # deltas are pool-side, the attacker gets the opposite
    return -(front.token_b + back.token_b) - rate * (front.token_a + back.token_a)


def classify_triple(
    front: TransactionRecord,
    middle: TransactionRecord,
    back: TransactionRecord,
    tolerance: float = DEFAULT_TOLERANCE,
) -> Optional[AttackOut]:
    if not front.block == middle.block == back.block:
        return None
    if front.account != back.account or middle.account == front.account:
        return None
    if middle.kind != "swap":
        return None
    kind = _attack_kind(front, back)
    if kind is None:
        return None

    passing = [
        error
        for error in (_symmetry_error(front.token_a, back.token_a), _symmetry_error(front.token_b, back.token_b))
        if error is not None and error <= tolerance
    ]
    if not passing:
        return None
    return AttackOut(
        block=front.block,
        attacker=front.account,
        victim=middle.account,
        kind=kind,
        symmetry_error=max(passing),
        front=front,
        middle=middle,
        back=back,
        profit=_attack_profit(front, back),
    )


def detect_sandwich_attacks(records: Sequence[TransactionRecord], tolerance: float = DEFAULT_TOLERANCE) -> List[AttackOut]:
    """
    All flagged triples, in (block, index) order.

    Raises:
        InvalidInputError: two records share a (block, index) position
    """
    if not 0 <= tolerance < 1:
        raise InvalidInputError("symmetry tolerance must lie in [0, 1)")
    ordered = sorted(records, key=lambda r: (r.block, r.index))
    attacks: List[AttackOut] = []

    for block, group in groupby(ordered, key=lambda r: r.block):
        txs = list(group)
        indices = [tx.index for tx in txs]
        if len(set(indices)) != len(indices):
            raise InvalidInputError(f"duplicate transaction index in block {block}")
        for front, middle, back in zip(txs, txs[1:], txs[2:]):
            attack = classify_triple(front, middle, back, tolerance)
            if attack is not None:
                attacks.append(attack)

    logger.info(f"Scanned {len(ordered)} records: {len(attacks)} sandwich attacks")
    return attacks


def summarize_attacks(attacks: Sequence[AttackOut]) -> AttackSummary:
    by_kind = Counter(a.kind for a in attacks)
    profits = [a.profit for a in attacks if a.profit is not None]
    total = len(attacks)
    return AttackSummary(
        total=total,
        by_kind={"swap_based": by_kind.get("swap_based", 0), "liquidity_based": by_kind.get("liquidity_based", 0)},
        liquidity_share=by_kind.get("liquidity_based", 0) / total if total else 0.0,
        total_profit=float(sum(profits)) if profits else None,
    )
