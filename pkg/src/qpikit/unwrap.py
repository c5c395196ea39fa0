"""Goldstein branch-cut phase unwrapping.

Residues are winding charges on 2x2 pixel plaquettes; branch cuts are
impassable pixel edges placed by a growing-box search so every charge is
neutralized against an opposite charge or the image border; integration is a
cut-respecting flood fill. Scan orders are fixed (row-major from the top
left) so results are byte-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidField

TWO_PI = 2.0 * np.pi


def wrap_phase(values: np.ndarray) -> np.ndarray:
    """Map phase values into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(values, dtype=np.float64), TWO_PI)


@dataclass
class ResidueMap:
    """Integer winding charges on the (H-1) x (W-1) plaquette grid."""

    charges: np.ndarray

    @property
    def positions(self) -> np.ndarray:
        """(n, 2) array of charged plaquette indices in row-major order."""
        return np.argwhere(self.charges != 0)

    @property
    def total_charge(self) -> int:
        return int(self.charges.sum())


@dataclass
class CutMask:
    """Impassable pixel edges.

    horizontal_cuts[r, c] blocks the edge between pixels (r, c) and (r+1, c);
    shape (H-1, W). vertical_cuts[r, c] blocks the edge between (r, c) and
    (r, c+1); shape (H, W-1).
    """

    horizontal_cuts: np.ndarray
    vertical_cuts: np.ndarray

    @classmethod
    def empty(cls, shape: tuple[int, int]) -> "CutMask":
        h, w = shape
        return cls(np.zeros((h - 1, w), dtype=bool), np.zeros((h, w - 1), dtype=bool))

    @property
    def any_cut(self) -> bool:
        return bool(self.horizontal_cuts.any() or self.vertical_cuts.any())

    def cut_count(self) -> int:
        return int(self.horizontal_cuts.sum() + self.vertical_cuts.sum())


def residues(wrapped: np.ndarray) -> ResidueMap:
    """Winding charge of each 2x2 plaquette of a wrapped phase grid.

    The loop runs (r,c) -> (r,c+1) -> (r+1,c+1) -> (r+1,c) -> (r,c); the sum
    of the four wrapped differences divided by 2*pi is the integer charge.
    """
    phi = np.asarray(wrapped, dtype=np.float64)
    if not np.all(np.isfinite(phi)):
        raise InvalidField("wrapped phase contains non-finite values")
    d1 = wrap_phase(phi[:-1, 1:] - phi[:-1, :-1])
    d2 = wrap_phase(phi[1:, 1:] - phi[:-1, 1:])
    d3 = wrap_phase(phi[1:, :-1] - phi[1:, 1:])
    d4 = wrap_phase(phi[:-1, :-1] - phi[1:, :-1])
    charges = np.rint((d1 + d2 + d3 + d4) / TWO_PI).astype(np.int64)
    return ResidueMap(charges)


# ---------------------------------------------------------------------------
# branch-cut placement
# ---------------------------------------------------------------------------

def _mark_step(cuts: CutMask, i: int, j: int, di: int, dj: int) -> None:
    # One dual-lattice step from plaquette (i, j); marks the crossed pixel edge.
    if di == 1:
        cuts.vertical_cuts[i + 1, j] = True
    elif di == -1:
        cuts.vertical_cuts[i, j] = True
    elif dj == 1:
        cuts.horizontal_cuts[i, j + 1] = True
    else:
        cuts.horizontal_cuts[i, j] = True


def _cut_between(cuts: CutMask, a: tuple[int, int], b: tuple[int, int]) -> None:
    """L-shaped dual path between two plaquettes: rows first, then columns."""
    i, j = a
    while i != b[0]:
        di = 1 if b[0] > i else -1
        _mark_step(cuts, i, j, di, 0)
        i += di
    while j != b[1]:
        dj = 1 if b[1] > j else -1
        _mark_step(cuts, i, j, 0, dj)
        j += dj


def _cut_to_border(cuts: CutMask, i: int, j: int) -> None:
    """Shortest straight dual path off the grid; ties: top, bottom, left, right."""
    gh, gw = cuts.vertical_cuts.shape[0] - 1, cuts.horizontal_cuts.shape[1] - 1
    dists = (i + 1, gh - i, j + 1, gw - j)
    side = int(np.argmin(dists))
    if side == 0:
        for r in range(i, -1, -1):
            _mark_step(cuts, r, j, -1, 0)
    elif side == 1:
        for r in range(i, gh):
            _mark_step(cuts, r, j, 1, 0)
    elif side == 2:
        for c in range(j, -1, -1):
            _mark_step(cuts, i, c, 0, -1)
    else:
        for c in range(j, gw):
            _mark_step(cuts, i, c, 0, 1)


def place_branch_cuts(residue_map: ResidueMap) -> CutMask:
    """Goldstein growing-box cut placement with deterministic scan order.

    Starting from each unbalanced residue (row-major), a box of growing
    radius is scanned around every residue joined to the tree; encountered
    residues are connected by cuts and their charges accumulated; touching
    the image border grounds the tree. The search ends when the tree charge
    reaches zero or is grounded.
    """
    charges = residue_map.charges
    gh, gw = charges.shape
    cuts = CutMask.empty((gh + 1, gw + 1))
    if not np.any(charges):
        return cuts

    visited = np.zeros_like(charges, dtype=bool)
    balanced = np.zeros_like(charges, dtype=bool)
    max_box = max(gh, gw)

    for i0, j0 in np.argwhere(charges != 0):
        i0, j0 = int(i0), int(j0)
        if balanced[i0, j0]:
            continue
        active = [(i0, j0)]
        visited[i0, j0] = True
        balanced[i0, j0] = True
        charge = int(charges[i0, j0])

        for radius in range(1, max_box + 1):
            if charge == 0:
                break
            idx = 0
            while idx < len(active) and charge != 0:
                ci, cj = active[idx]
                idx += 1
                for bi in range(ci - radius, ci + radius + 1):
                    if charge == 0:
                        break
                    for bj in range(cj - radius, cj + radius + 1):
                        if not (0 <= bi < gh and 0 <= bj < gw):
                            _cut_to_border(cuts, ci, cj)
                            charge = 0
                            break
                        if charges[bi, bj] != 0 and not visited[bi, bj]:
                            visited[bi, bj] = True
                            _cut_between(cuts, (ci, cj), (bi, bj))
                            active.append((bi, bj))
                            if not balanced[bi, bj]:
                                balanced[bi, bj] = True
                                charge += int(charges[bi, bj])
                            if charge == 0:
                                break
        if charge != 0:
            # box exhausted without balancing (cannot happen: the box reaches
            # the border first), ground the tree defensively
            _cut_to_border(cuts, i0, j0)
    return cuts


# ---------------------------------------------------------------------------
# cut-respecting integration
# ---------------------------------------------------------------------------

def _wavefront_fill(phi, unwrapped, known, pass_down, pass_right):
    """Expand the known set one step per direction per sweep (down/up/right/left)."""
    while True:
        grew = False
        can = known[:-1, :] & ~known[1:, :] & pass_down
        if can.any():
            src, tgt = phi[:-1, :][can], phi[1:, :][can]
            unwrapped[1:, :][can] = unwrapped[:-1, :][can] + wrap_phase(tgt - src)
            known[1:, :][can] = True
            grew = True
        can = known[1:, :] & ~known[:-1, :] & pass_down
        if can.any():
            src, tgt = phi[1:, :][can], phi[:-1, :][can]
            unwrapped[:-1, :][can] = unwrapped[1:, :][can] + wrap_phase(tgt - src)
            known[:-1, :][can] = True
            grew = True
        can = known[:, :-1] & ~known[:, 1:] & pass_right
        if can.any():
            src, tgt = phi[:, :-1][can], phi[:, 1:][can]
            unwrapped[:, 1:][can] = unwrapped[:, :-1][can] + wrap_phase(tgt - src)
            known[:, 1:][can] = True
            grew = True
        can = known[:, 1:] & ~known[:, :-1] & pass_right
        if can.any():
            src, tgt = phi[:, 1:][can], phi[:, :-1][can]
            unwrapped[:, :-1][can] = unwrapped[:, 1:][can] + wrap_phase(tgt - src)
            known[:, :-1][can] = True
            grew = True
        if not grew:
            return


def _component_of(seed, known, pass_down, pass_right):
    """Passable connected component containing seed, disjoint from known."""
    h, w = known.shape
    comp = np.zeros_like(known)
    stack = [seed]
    comp[seed] = True
    while stack:
        r, c = stack.pop()
        if r + 1 < h and pass_down[r, c] and not comp[r + 1, c] and not known[r + 1, c]:
            comp[r + 1, c] = True
            stack.append((r + 1, c))
        if r > 0 and pass_down[r - 1, c] and not comp[r - 1, c] and not known[r - 1, c]:
            comp[r - 1, c] = True
            stack.append((r - 1, c))
        if c + 1 < w and pass_right[r, c] and not comp[r, c + 1] and not known[r, c + 1]:
            comp[r, c + 1] = True
            stack.append((r, c + 1))
        if c > 0 and pass_right[r, c - 1] and not comp[r, c - 1] and not known[r, c - 1]:
            comp[r, c - 1] = True
            stack.append((r, c - 1))
    return comp


def _region_offset(phi, unwrapped, comp, known):
    """2*pi multiple minimizing the mean step discontinuity across comp's boundary."""
    deltas = []
    h, w = phi.shape
    for r, c in np.argwhere(comp):
        for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= rr < h and 0 <= cc < w and known[rr, cc] and not comp[rr, cc]:
                implied = unwrapped[rr, cc] + wrap_phase(phi[r, c] - phi[rr, cc])
                deltas.append(implied - unwrapped[r, c])
    if not deltas:
        return 0.0
    return TWO_PI * np.rint(np.mean(deltas) / TWO_PI)


def unwrap_goldstein(wrapped: np.ndarray, return_quality: bool = False):
    """Unwrap a phase grid with Goldstein branch cuts.

    The output differs from the input by integer multiples of 2*pi pixelwise.
    Integration starts at the pixel nearest the image center and never
    crosses a cut; pixels enclosed by cuts are resolved last against their
    nearest unwrapped neighbors and flagged in the quality mask returned when
    ``return_quality`` is set.
    """
    phi = np.asarray(wrapped, dtype=np.float64)
    if phi.ndim != 2:
        raise InvalidField("expected a 2D phase grid")
    if not np.all(np.isfinite(phi)):
        raise InvalidField("wrapped phase contains non-finite values")
    h, w = phi.shape
    quality = np.zeros((h, w), dtype=bool)
    if h < 2 or w < 2:
        out = phi.copy()
        return (out, quality) if return_quality else out

    cuts = place_branch_cuts(residues(phi))
    pass_down = ~cuts.horizontal_cuts
    pass_right = ~cuts.vertical_cuts

    unwrapped = phi.copy()
    known = np.zeros((h, w), dtype=bool)
    known[(h - 1) // 2, (w - 1) // 2] = True
    _wavefront_fill(phi, unwrapped, known, pass_down, pass_right)

    # isolated regions: integrate internally, then shift by a whole 2*pi*k
    while not known.all():
        seed = None
        for r, c in np.argwhere(~known):
            r, c = int(r), int(c)
            for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= rr < h and 0 <= cc < w and known[rr, cc]:
                    seed = (r, c)
                    break
            if seed:
                break
        if seed is None:
            seed = tuple(int(v) for v in np.argwhere(~known)[0])
        comp = _component_of(seed, known, pass_down, pass_right)
        comp_known = np.zeros_like(known)
        comp_known[seed] = True
        _wavefront_fill(phi, unwrapped, comp_known,
                        pass_down & comp[:-1, :] & comp[1:, :],
                        pass_right & comp[:, :-1] & comp[:, 1:])
        unwrapped[comp] += _region_offset(phi, unwrapped, comp, known)
        quality |= comp
        known |= comp

    return (unwrapped, quality) if return_quality else unwrapped
