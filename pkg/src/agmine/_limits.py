import sys
from contextlib import contextmanager

# the tree walkers recurse once per grammar level; nested inputs need headroom
RECURSION_LIMIT = 20000


@contextmanager
def deep_recursion(limit=RECURSION_LIMIT):
    old = sys.getrecursionlimit()
    if old < limit:
        sys.setrecursionlimit(limit)
    try:
        yield
    finally:
        sys.setrecursionlimit(old)
