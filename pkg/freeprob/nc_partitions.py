"""
Non-crossing partitions and their nesting structure.

Partitions are enumerated through Dyck words: element ``i`` of a block of
size ``s`` is written as ``(`` * s followed by ``)`` when ``i`` opens the block,
and as a bare ``)`` otherwise. Non-crossing partitions of {1..n} are in
bijection with Dyck words of semilength n under this encoding, and the
enumeration order is the lexicographic order of the words with ``(`` < ``)``.
"""

import logging
from dataclasses import dataclass, field
from math import comb
from typing import Iterator, List, Optional, Tuple

from .conf import setting
from .exceptions import SizeLimitError

logger = logging.getLogger(__name__)

Block = Tuple[int, ...]


def catalan(k: int) -> int:
    return comb(2 * k, k) // (k + 1)


@dataclass(frozen=True)
class NonCrossingPartition:
    """A non-crossing partition of {1..n}; blocks ascending and ordered by their minimum."""
    n: int
    blocks: Tuple[Block, ...]

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else 0))
        object.__setattr__(self, 'blocks', blocks)
        seen = sorted(p for b in blocks for p in b)
        if any(not b for b in blocks) or seen != list(range(1, self.n + 1)):
            raise ValueError(f"Blocks {blocks} do not partition {{1..{self.n}}}")
        if not _is_non_crossing(self.n, blocks):
            raise ValueError(f"Partition {self} is crossing")

    @classmethod
    def one(cls, n: int) -> 'NonCrossingPartition':
        """The one-block partition 1_n."""
        return cls(n, (tuple(range(1, n + 1)),) if n else ())

    @classmethod
    def singletons(cls, n: int) -> 'NonCrossingPartition':
        return cls(n, tuple((i,) for i in range(1, n + 1)))

    @property
    def is_one(self) -> bool:
        return len(self.blocks) == 1

    @property
    def is_pairing(self) -> bool:
        return all(len(b) == 2 for b in self.blocks)

    @property
    def largest_block(self) -> int:
        return max((len(b) for b in self.blocks), default=0)

    def block_of(self, position: int) -> Block:
        for block in self.blocks:
            if position in block:
                return block
        raise KeyError(position)

    def dyck_word(self) -> str:
        out = []
        for i in range(1, self.n + 1):
            block = self.block_of(i)
            if block[0] == i:
                out.append('(' * len(block))
            out.append(')')
        return ''.join(out)

    def __str__(self):
        return '{' + ','.join('{' + ','.join(map(str, b)) + '}' for b in self.blocks) + '}'

    def to_json(self) -> List[List[int]]:
        return [list(b) for b in self.blocks]


def _is_non_crossing(n: int, blocks: Tuple[Block, ...]) -> bool:
    # A block may only be left when every block opened after it is complete.
    label = {}
    for index, block in enumerate(blocks):
        for p in block:
            label[p] = index
    remaining = {index: len(block) for index, block in enumerate(blocks)}
    stack: List[int] = []
    for p in range(1, n + 1):
        index = label[p]
        if blocks[index][0] == p:
            stack.append(index)
        elif not stack or stack[-1] != index:
            return False
        remaining[index] -= 1
        if remaining[index] == 0:
            stack.pop()
    return not stack


def partition_from_dyck(word: str) -> NonCrossingPartition:
    """Decode a Dyck word in the opener/closer encoding into its partition."""
    blocks: List[List[int]] = []
    stack: List[Tuple[int, int]] = []  # (block index, free slots)
    position = 0
    run = 0
    for char in word:
        if char == '(':
            run += 1
            continue
        position += 1
        if run:
            blocks.append([position])
            stack.append((len(blocks) - 1, run - 1))
            run = 0
        else:
            if not stack:
                raise ValueError(f"Not a Dyck word: {word!r}")
            index, free = stack[-1]
            blocks[index].append(position)
            stack[-1] = (index, free - 1)
        if stack[-1][1] == 0:
            stack.pop()
    if run or stack:
        raise ValueError(f"Not a Dyck word: {word!r}")
    return NonCrossingPartition(position, tuple(tuple(b) for b in blocks))


def _dyck_words(n: int) -> Iterator[str]:
    buffer: List[str] = []

    def extend(opened: int, closed: int):
        if closed == n:
            yield ''.join(buffer)
            return
        if opened < n:
            buffer.append('(')
            yield from extend(opened + 1, closed)
            buffer.pop()
        if closed < opened:
            buffer.append(')')
            yield from extend(opened, closed + 1)
            buffer.pop()

    yield from extend(0, 0)


def iter_nc(n: int) -> Iterator[NonCrossingPartition]:
    limit = setting('NC_MAX_SIZE')
    if n < 0 or n > limit:
        raise SizeLimitError(f"NC({n}) enumeration is limited to 0 <= n <= {limit}")
    for word in _dyck_words(n):
        yield partition_from_dyck(word)


def enumerate_nc(n: int) -> List[NonCrossingPartition]:
    """All of NC(n) in Dyck-word lexicographic order."""
    partitions = list(iter_nc(n))
    logger.debug("Enumerated %d non-crossing partitions of %d", len(partitions), n)
    return partitions


def enumerate_nc2(n: int) -> List[NonCrossingPartition]:
    """All non-crossing pair partitions of {1..n}; empty for odd n."""
    limit = setting('NC2_MAX_SIZE')
    if n < 0 or n > limit:
        raise SizeLimitError(f"NC2({n}) enumeration is limited to 0 <= n <= {limit}")
    if n % 2:
        return []
    # A pairing's word is "((" + ")" for an opener and ")" for its closer,
    # i.e. a Dyck word of semilength n/2 with every "(" doubled.
    pairings = []
    for word in _dyck_words(n // 2):
        pairings.append(partition_from_dyck(''.join('(()' if c == '(' else ')' for c in word)))
    return sorted(pairings, key=NonCrossingPartition.dyck_word)


@dataclass(frozen=True)
class NestingNode:
    """One block plus the blocks nested directly inside it.

    ``children`` holds ``(p, node)`` pairs: ``node`` sits right after the
    p-th element (1-based) of ``block``.
    """
    block: Block
    children: Tuple[Tuple[int, 'NestingNode'], ...] = ()

    def children_at(self, p: int) -> Tuple['NestingNode', ...]:
        return tuple(child for q, child in self.children if q == p)

    @property
    def span(self) -> int:
        return len(self.block) + sum(child.span for _, child in self.children)


@dataclass(frozen=True)
class NestingForest:
    n: int
    roots: Tuple[NestingNode, ...] = field(default_factory=tuple)

    def reconstruct(self) -> NonCrossingPartition:
        """Rebuild the partition from shapes alone via the disjoint-union and insertion rules."""
        blocks: List[Block] = []

        def place(node: NestingNode, start: int) -> int:
            positions = []
            cursor = start
            for p in range(1, len(node.block) + 1):
                positions.append(cursor)
                cursor += 1
                for child in node.children_at(p):
                    cursor = place(child, cursor)
            blocks.append(tuple(positions))
            return cursor

        cursor = 1
        for root in self.roots:
            cursor = place(root, cursor)
        return NonCrossingPartition(cursor - 1, tuple(blocks))


def nesting_forest(partition: NonCrossingPartition) -> NestingForest:
    """Decompose ``partition`` into its forest of directly nested blocks."""
    parent_of: dict = {}
    for block in partition.blocks:
        best: Optional[Block] = None
        for other in partition.blocks:
            if other[0] < block[0] and other[-1] > block[-1]:
                if best is None or other[0] > best[0]:
                    best = other
        parent_of[block] = best

    def build(block: Block) -> NestingNode:
        children = []
        for child in partition.blocks:
            if parent_of[child] == block:
                p = sum(1 for q in block if q < child[0])
                children.append((p, build(child)))
        return NestingNode(block, tuple(children))

    roots = tuple(build(b) for b in partition.blocks if parent_of[b] is None)
    return NestingForest(partition.n, roots)


def parse_partition(text: str) -> NonCrossingPartition:
    """Read block notation such as ``{{1,3},{2}}``."""
    body = text.strip()
    if not (body.startswith('{') and body.endswith('}')):
        raise ValueError(f"Expected block notation like {{{{1,3}},{{2}}}}, got {text!r}")
    body = body[1:-1].strip()
    blocks = []
    for chunk in body.split('}'):
        chunk = chunk.strip().lstrip(',').strip()
        if not chunk:
            continue
        if not chunk.startswith('{'):
            raise ValueError(f"Malformed block in {text!r}")
        blocks.append(tuple(int(p) for p in chunk[1:].split(',') if p.strip()))
    n = sum(len(b) for b in blocks)
    return NonCrossingPartition(n, tuple(blocks))
