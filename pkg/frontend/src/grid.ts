/**
 * Region-grid geometry for the crop widget.
 *
 * The corpus stores one descriptor per cell of a 2x2 and a 4x4 partition
 * of each image, 20 cells total, numbered row-major: codes 0-3 are the
 * 2x2 cells, 4-19 the 4x4 cells. The crop overlay snaps to these lines
 * so users see exactly which region descriptors a crop selects. Cell
 * selection here is display-only; the service re-derives it from the
 * crop rectangle, with identical overlap semantics.
 */

export interface Rect {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export const REGION_COUNT = 20;

/** Grid sizes in region-code order: codes 0-3 on the 2x2, 4-19 on the 4x4. */
export const GRID_DIMS: readonly number[] = [2, 4];

const clamp01 = (v: number) => Math.min(1, Math.max(0, v));

export function fullCrop(): Rect {
  return { x0: 0, y0: 0, x1: 1, y1: 1 };
}

/** Cell rectangle of a region code in normalized [0,1]^2 image coordinates. */
export function cellRect(code: number): Rect {
  if (!Number.isInteger(code) || code < 0 || code >= REGION_COUNT) {
    throw new RangeError(`region code out of range: ${code}`);
  }
  const n = code < 4 ? 2 : 4;
  const i = code < 4 ? code : code - 4;
  const row = Math.floor(i / n);
  const col = i % n;
  return { x0: col / n, y0: row / n, x1: (col + 1) / n, y1: (row + 1) / n };
}

/** Order corners and clamp into the unit square. */
export function normalizeRect(r: Rect): Rect {
  return {
    x0: clamp01(Math.min(r.x0, r.x1)),
    y0: clamp01(Math.min(r.y0, r.y1)),
    x1: clamp01(Math.max(r.x0, r.x1)),
    y1: clamp01(Math.max(r.y0, r.y1)),
  };
}

export function rectHasArea(r: Rect): boolean {
  const c = normalizeRect(r);
  return c.x1 > c.x0 && c.y1 > c.y0;
}

/**
 * Region codes whose cell overlaps the crop with positive area, ascending.
 * Matches the service's selection rule, so the overlay readout and the
 * executed query always agree.
 */
export function cellsForCrop(r: Rect): number[] {
  const c = normalizeRect(r);
  if (!rectHasArea(c)) return [];
  const out: number[] = [];
  for (let code = 0; code < REGION_COUNT; code++) {
    const cell = cellRect(code);
    if (
      Math.min(c.x1, cell.x1) > Math.max(c.x0, cell.x0) &&
      Math.min(c.y1, cell.y1) > Math.max(c.y0, cell.y0)
    ) {
      out.push(code);
    }
  }
  return out;
}

function snapSpan(lo: number, hi: number, n: number): [number, number] {
  let a = Math.round(lo * n) / n;
  let b = Math.round(hi * n) / n;
  if (b <= a) {
    // degenerate after snapping: cover the single cell under the midpoint
    const cell = Math.min(n - 1, Math.floor(((lo + hi) / 2) * n));
    a = cell / n;
    b = (cell + 1) / n;
  }
  return [a, b];
}

/** Snap a dragged rectangle to the nearest 2x2 or 4x4 grid lines. */
export function snapRectToGrid(r: Rect, n: 2 | 4): Rect {
  const c = normalizeRect(r);
  const [x0, x1] = snapSpan(c.x0, c.x1, n);
  const [y0, y1] = snapSpan(c.y0, c.y1, n);
  return { x0, y0, x1, y1 };
}
