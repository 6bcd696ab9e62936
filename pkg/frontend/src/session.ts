/**
 * Headless state for one exploration session.
 *
 * A UISession holds everything the widgets edit: the query under
 * construction (image/vector constraints, polygon, time range), the
 * cluster selection, and the active heatmap choice. It builds wire specs
 * and interprets responses, but never computes result semantics itself;
 * every displayed value is passed through verbatim from a service
 * response so results stay byte-traceable to the API.
 */

import {
  AggregateResponse,
  AggregateSpec,
  AggregateSpecSchema,
  Bucket,
  Cluster,
  ClusterQuerySpec,
  ClusterQuerySpecSchema,
  ClustersResponse,
  ConstraintSpec,
  FeatureCollection,
  Hit,
  IntervalsResponse,
  PolygonSpec,
  QuerySpec,
  QuerySpecSchema,
  SearchResponse,
  TemporalSpec,
  WorkspaceAdd,
  WorkspaceAddSchema,
} from "./schemas.js";
import { Rect, cellsForCrop, fullCrop, normalizeRect, rectHasArea } from "./grid.js";

export type HeatmapSource = "image_density" | "hit_density" | "attribute";

/** Where heatmap mass lands: a named server-side layer or an ad-hoc grid. */
export type HeatmapResolution =
  | { kind: "layer"; layerId: string }
  | { kind: "grid"; bbox: [number, number, number, number]; nx: number; ny: number };

export interface HeatmapChoice {
  source: HeatmapSource;
  resolution: HeatmapResolution;
  attribute?: string;
}

export interface ConstraintDraft {
  readonly key: number;
  readonly imageId?: number;
  readonly crop?: Rect;
  readonly vector?: number[];
}

/** One shaded polygon of the rendered heatmap, straight from a response. */
export interface HeatmapCell {
  name: string;
  value: number | null;
}

// Opacity ramp shared with the server-side SVG export so the in-browser
// map and exported maps shade identically.
const MIN_OPACITY = 0.08;
const OPACITY_SPAN = 0.72;
const FLAT_OPACITY = 0.4;

/** Tile a bbox into an nx-by-ny inline partition layer (row-major). */
export function makeGridLayer(
  bbox: [number, number, number, number],
  nx: number,
  ny: number,
): FeatureCollection {
  const [minLon, minLat, maxLon, maxLat] = bbox;
  if (!(maxLon > minLon && maxLat > minLat)) {
    throw new RangeError(`grid bbox has no area: ${bbox}`);
  }
  if (!Number.isInteger(nx) || !Number.isInteger(ny) || nx < 1 || ny < 1) {
    throw new RangeError(`grid resolution must be positive integers: ${nx}x${ny}`);
  }
  const features = [];
  for (let r = 0; r < ny; r++) {
    for (let c = 0; c < nx; c++) {
      const x0 = minLon + (c * (maxLon - minLon)) / nx;
      const x1 = minLon + ((c + 1) * (maxLon - minLon)) / nx;
      const y0 = minLat + (r * (maxLat - minLat)) / ny;
      const y1 = minLat + ((r + 1) * (maxLat - minLat)) / ny;
      features.push({
        type: "Feature" as const,
        geometry: {
          type: "Polygon" as const,
          coordinates: [
            [
              [x0, y0] as [number, number],
              [x1, y0] as [number, number],
              [x1, y1] as [number, number],
              [x0, y1] as [number, number],
            ],
          ],
        },
        properties: { name: `cell_${r}_${c}` },
      });
    }
  }
  return { type: "FeatureCollection", name: `grid_${nx}x${ny}`, features };
}

/**
 * Fill opacity per value for the heatmap ramp. All-equal values (an empty
 * or uniform aggregate) shade flat, so an empty result is a uniform base
 * map rather than a misleading gradient.
 */
export function heatmapOpacities(values: readonly (number | null)[]): number[] {
  const finite = values.filter((v): v is number => v !== null && Number.isFinite(v));
  const lo = Math.min(...finite);
  const hi = Math.max(...finite);
  if (finite.length === 0 || hi === lo) {
    return values.map(() => FLAT_OPACITY);
  }
  return values.map((v) =>
    v === null || !Number.isFinite(v)
      ? MIN_OPACITY
      : MIN_OPACITY + (OPACITY_SPAN * (v - lo)) / (hi - lo),
  );
}

export class UISession {
  private drafts: ConstraintDraft[] = [];
  private nextKey = 1;

  tau?: number;
  k?: number;
  page = 1;
  pageSize?: number;

  thetaC?: number;
  sortBy = "size";
  withinBy?: string;
  sortReverse = false;

  private polygonDraft: [number, number][] = [];
  private spatial: PolygonSpec | null = null;
  private temporal: TemporalSpec | null = null;

  private selected = new Set<number>();
  heatmap: HeatmapChoice | null = null;

  // -- query constraints -------------------------------------------------

  /** Add a corpus image (optionally cropped) as a constraint; returns a
   * handle for later removal. */
  addImageConstraint(imageId: number, crop?: Rect): number {
    if (!Number.isInteger(imageId)) {
      throw new RangeError(`image id must be an integer: ${imageId}`);
    }
    let normalized: Rect | undefined;
    if (crop !== undefined) {
      normalized = normalizeRect(crop);
      if (!rectHasArea(normalized)) {
        throw new RangeError("crop rectangle has no area");
      }
    }
    const key = this.nextKey++;
    this.drafts.push({ key, imageId, crop: normalized });
    return key;
  }

  addVectorConstraint(vector: readonly number[]): number {
    if (vector.length === 0) throw new RangeError("empty query vector");
    const key = this.nextKey++;
    this.drafts.push({ key, vector: [...vector] });
    return key;
  }

  removeConstraint(key: number): void {
    this.drafts = this.drafts.filter((d) => d.key !== key);
  }

  get constraints(): readonly ConstraintDraft[] {
    return this.drafts;
  }

  /** The search button is live only while at least one constraint exists. */
  canSearch(): boolean {
    return this.drafts.length > 0;
  }

  /** Region codes the grid overlay highlights for one constraint's crop. */
  selectedCells(key: number): number[] {
    const draft = this.drafts.find((d) => d.key === key);
    if (draft === undefined) throw new RangeError(`no constraint with key ${key}`);
    if (draft.vector !== undefined) return [];
    return cellsForCrop(draft.crop ?? fullCrop());
  }

  // -- polygon constraint --------------------------------------------------

  addPolygonVertex(lon: number, lat: number): void {
    this.polygonDraft.push([lon, lat]);
  }

  get polygonVertexCount(): number {
    return this.polygonDraft.length;
  }

  polygonReady(): boolean {
    return this.polygonDraft.length >= 3;
  }

  /** Commit the drawn polygon as the spatial constraint; needs 3+ vertices. */
  commitPolygon(): void {
    if (!this.polygonReady()) {
      throw new RangeError(
        `polygon needs at least 3 vertices, got ${this.polygonDraft.length}`,
      );
    }
    this.spatial = { exterior: [...this.polygonDraft], holes: [] };
    this.polygonDraft = [];
  }

  discardPolygonDraft(): void {
    this.polygonDraft = [];
  }

  clearSpatial(): void {
    this.spatial = null;
  }

  get spatialConstraint(): PolygonSpec | null {
    return this.spatial;
  }

  // -- temporal constraint ---------------------------------------------------

  /**
   * Brush a [start, end) range on the time axis. Brushing the full domain
   * selects everything, so it clears the constraint instead of sending a
   * redundant filter.
   */
  brushTimeRange(start: number, end: number, domain: [number, number]): void {
    if (end <= start) throw new RangeError("brush range is empty");
    if (start <= domain[0] && end >= domain[1]) {
      this.temporal = null;
      return;
    }
    this.temporal = { intervals: [[Math.floor(start), Math.ceil(end)]] };
  }

  /** Predicate apply stays disabled when no interval satisfies it. */
  canApplyPredicate(preview: IntervalsResponse): boolean {
    return preview.intervals.length > 0;
  }

  /** Constrain to times where a series satisfies op/threshold; the service
   * resolves the predicate to intervals. */
  applySeriesPredicate(seriesId: string, op: string, threshold: number): void {
    this.temporal = { series_id: seriesId, op, threshold };
  }

  clearTemporal(): void {
    this.temporal = null;
  }

  get temporalConstraint(): TemporalSpec | null {
    return this.temporal;
  }

  /** Interval widget content is the response verbatim. */
  displayIntervals(resp: IntervalsResponse): [number, number][] {
    return resp.intervals;
  }

  // -- spec emission -----------------------------------------------------

  private wireConstraints(): ConstraintSpec[] {
    return this.drafts.map((d) =>
      d.vector !== undefined
        ? { vector: d.vector }
        : d.crop !== undefined
          ? { image_id: d.imageId!, crop: d.crop }
          : { image_id: d.imageId! },
    );
  }

  /** The search spec for the current widget state, schema-validated so it
   * always passes service-side validation. */
  buildQuerySpec(overrides: Partial<QuerySpec> = {}): QuerySpec {
    if (!this.canSearch()) {
      throw new RangeError("no constraints: search is disabled");
    }
    const spec: Record<string, unknown> = {
      constraints: this.wireConstraints(),
      page: this.page,
    };
    if (this.tau !== undefined) spec.tau = this.tau;
    if (this.k !== undefined) spec.k = this.k;
    if (this.pageSize !== undefined) spec.page_size = this.pageSize;
    if (this.spatial !== null) spec.spatial = this.spatial;
    if (this.temporal !== null) spec.temporal = this.temporal;
    return QuerySpecSchema.parse({ ...spec, ...overrides });
  }

  buildClusterSpec(overrides: Partial<ClusterQuerySpec> = {}): ClusterQuerySpec {
    const base = this.buildQuerySpec();
    const spec: Record<string, unknown> = {
      ...base,
      sort_by: this.sortBy,
      reverse: this.sortReverse,
    };
    if (this.pageSize === undefined) delete spec.page_size;
    if (this.thetaC !== undefined) spec.theta_c = this.thetaC;
    if (this.withinBy !== undefined) spec.within_by = this.withinBy;
    return ClusterQuerySpecSchema.parse({ ...spec, ...overrides });
  }

  // -- result display (verbatim passthrough) ------------------------------

  displayHits(resp: SearchResponse): Hit[] {
    return resp.hits;
  }

  /** Mosaic rows for one or more consecutive pages, in service order. */
  displayClusters(pages: readonly ClustersResponse[]): Cluster[] {
    return pages.flatMap((p) => p.clusters);
  }

  // -- cluster selection ----------------------------------------------------

  toggleCluster(leaderId: number): void {
    if (this.selected.has(leaderId)) this.selected.delete(leaderId);
    else this.selected.add(leaderId);
  }

  clearClusterSelection(): void {
    this.selected.clear();
  }

  get selectedClusterIds(): number[] {
    return [...this.selected].sort((a, b) => a - b);
  }

  /** Member ids projected onto the map for the selected clusters; empty
   * selection means no overlay. */
  overlayMemberIds(pages: readonly ClustersResponse[]): number[] {
    if (this.selected.size === 0) return [];
    return this.displayClusters(pages)
      .filter((c) => this.selected.has(c.leader_id))
      .flatMap((c) => c.member_ids);
  }

  // -- heatmap ---------------------------------------------------------------

  setHeatmap(source: HeatmapSource, resolution: HeatmapResolution, attribute?: string): void {
    if (source === "attribute" && attribute === undefined) {
      throw new RangeError("attribute source needs an attribute name");
    }
    this.heatmap = { source, resolution, attribute };
  }

  clearHeatmap(): void {
    this.heatmap = null;
  }

  /** The aggregation request for the active heatmap choice. A hit-density
   * map embeds the current query; the others aggregate the whole corpus. */
  buildAggregateSpec(): AggregateSpec {
    if (this.heatmap === null) throw new RangeError("no heatmap selected");
    const { source, resolution, attribute } = this.heatmap;
    const spec: Record<string, unknown> = { source };
    if (resolution.kind === "layer") spec.layer_id = resolution.layerId;
    else spec.layer = makeGridLayer(resolution.bbox, resolution.nx, resolution.ny);
    if (attribute !== undefined) spec.attribute = attribute;
    if (source === "hit_density") spec.query = this.buildQuerySpec();
    return AggregateSpecSchema.parse(spec);
  }

  /**
   * Shaded cells for an aggregate response: counts for density sources,
   * means for attribute maps, both verbatim from the response.
   */
  displayHeatmap(resp: AggregateResponse): HeatmapCell[] {
    const attribute = this.heatmap?.source === "attribute";
    return resp.buckets.map((b: Bucket) => ({
      name: b.name,
      value: attribute ? b.mean : b.count,
    }));
  }

  // -- workspace -------------------------------------------------------------

  buildWorkspaceAdd(
    imageId: number,
    note = "",
    attributes: Record<string, boolean | number | string> = {},
  ): WorkspaceAdd {
    return WorkspaceAddSchema.parse({ image_id: imageId, note, attributes });
  }
}
