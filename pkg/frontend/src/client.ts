/**
 * Typed HTTP client for the exploration service.
 *
 * Every response is schema-validated before any widget sees it. The only
 * thing cached client-side is raw image bytes; result payloads are never
 * cached or transformed, keeping displayed values traceable to responses.
 */

import { ZodType } from "zod";
import {
  AggregateResponse,
  AggregateResponseSchema,
  AggregateSpec,
  ClusterQuerySpec,
  ClustersResponse,
  ClustersResponseSchema,
  ErrorBodySchema,
  ImageMeta,
  ImageMetaSchema,
  IntervalsResponse,
  IntervalsResponseSchema,
  QuerySpec,
  SearchResponse,
  SearchResponseSchema,
  SeriesResponse,
  SeriesResponseSchema,
  WorkspaceAdd,
  WorkspaceItem,
  WorkspaceItemSchema,
  WorkspaceItems,
  WorkspaceItemsSchema,
} from "./schemas.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

async function raiseFor(res: Response): Promise<never> {
  let code = "http_error";
  let message = `${res.status} ${res.statusText}`;
  try {
    const body = ErrorBodySchema.parse(await res.json());
    code = body.code;
    message = body.message;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ServiceError(res.status, code, message);
}

export class ServiceClient {
  private imageCache = new Map<number, ArrayBuffer>();

  constructor(
    readonly baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async getJson<T>(path: string, schema: ZodType<T>): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path);
    if (!res.ok) await raiseFor(res);
    return schema.parse(await res.json());
  }

  private async postJson<T>(path: string, body: unknown, schema: ZodType<T>): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) await raiseFor(res);
    return schema.parse(await res.json());
  }

  search(spec: QuerySpec): Promise<SearchResponse> {
    return this.postJson("/query/search", spec, SearchResponseSchema);
  }

  clusters(spec: ClusterQuerySpec): Promise<ClustersResponse> {
    return this.postJson("/query/clusters", spec, ClustersResponseSchema);
  }

  aggregate(spec: AggregateSpec): Promise<AggregateResponse> {
    return this.postJson("/aggregate", spec, AggregateResponseSchema);
  }

  imageMeta(imageId: number): Promise<ImageMeta> {
    return this.getJson(`/images/${imageId}/meta`, ImageMetaSchema);
  }

  /** Raw image bytes, cached per id (bytes are immutable corpus content). */
  async imageBytes(imageId: number): Promise<ArrayBuffer> {
    const cached = this.imageCache.get(imageId);
    if (cached !== undefined) return cached;
    const res = await this.fetchImpl(`${this.baseUrl}/images/${imageId}`);
    if (!res.ok) await raiseFor(res);
    const bytes = await res.arrayBuffer();
    this.imageCache.set(imageId, bytes);
    return bytes;
  }

  series(seriesId: string): Promise<SeriesResponse> {
    return this.getJson(`/timeseries/${seriesId}`, SeriesResponseSchema);
  }

  seriesIntervals(seriesId: string, op: string, threshold: number): Promise<IntervalsResponse> {
    return this.postJson(
      `/timeseries/${seriesId}/intervals`,
      { op, threshold },
      IntervalsResponseSchema,
    );
  }

  workspaceAdd(body: WorkspaceAdd): Promise<WorkspaceItem> {
    return this.postJson("/workspace", body, WorkspaceItemSchema);
  }

  workspaceItems(): Promise<WorkspaceItems> {
    return this.getJson("/workspace", WorkspaceItemsSchema);
  }

  async workspaceExportCsv(): Promise<string> {
    const res = await this.fetchImpl(`${this.baseUrl}/workspace/export?format=csv`);
    if (!res.ok) await raiseFor(res);
    return res.text();
  }

  workspaceExportJson(): Promise<WorkspaceItems> {
    return this.getJson("/workspace/export?format=json", WorkspaceItemsSchema);
  }
}
