"""Disjoint-set structure used for coend quotients."""


class UnionFind:
    """Union-find over integers 0..n-1 with path compression."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.n = n

    def find(self, i):
        parent = self.parent
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def union(self, i, j):
        # keep the smaller index as root so representatives are minima
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return ri
        if rj < ri:
            ri, rj = rj, ri
        self.parent[rj] = ri
        return ri

    def classes(self):
        """Map each root to the sorted list of its members."""
        out = {}
        for i in range(self.n):
            out.setdefault(self.find(i), []).append(i)
        return out
