/**
 * Wire-format schemas for the image-exploration service.
 *
 * Request schemas mirror the service's own validation so any spec the UI
 * emits is accepted server-side; response schemas are strict so silent
 * contract drift fails loudly instead of rendering garbage.
 */

import { z } from "zod";

// -- shared geometry ---------------------------------------------------

const lonLat = z.tuple([z.number(), z.number()]);

export const CropSpecSchema = z
  .object({
    x0: z.number(),
    y0: z.number(),
    x1: z.number(),
    y1: z.number(),
  })
  .strict();

export const PolygonSpecSchema = z
  .object({
    exterior: z.array(lonLat),
    holes: z.array(z.array(lonLat)).default([]),
  })
  .strict();

// -- request specs -----------------------------------------------------

export const ConstraintSpecSchema = z
  .object({
    image_id: z.number().int().optional(),
    crop: CropSpecSchema.optional(),
    vector: z.array(z.number()).optional(),
  })
  .strict()
  .superRefine((c, ctx) => {
    if ((c.image_id === undefined) === (c.vector === undefined)) {
      ctx.addIssue({
        code: "custom",
        message: "constraint needs exactly one of image_id or vector",
      });
    }
    if (c.vector !== undefined && c.crop !== undefined) {
      ctx.addIssue({
        code: "custom",
        message: "crop applies only to image constraints",
      });
    }
  });

export const TemporalSpecSchema = z
  .object({
    intervals: z.array(z.tuple([z.number().int(), z.number().int()])).optional(),
    series_id: z.string().optional(),
    op: z.string().optional(),
    threshold: z.number().optional(),
  })
  .strict()
  .superRefine((t, ctx) => {
    const predicate = [t.series_id, t.op, t.threshold];
    if (t.intervals !== undefined) {
      if (predicate.some((v) => v !== undefined)) {
        ctx.addIssue({
          code: "custom",
          message: "give either intervals or a series predicate",
        });
      }
    } else if (predicate.some((v) => v === undefined)) {
      ctx.addIssue({
        code: "custom",
        message: "series predicate needs series_id, op, and threshold together",
      });
    }
  });

export const QuerySpecSchema = z
  .object({
    constraints: z.array(ConstraintSpecSchema).default([]),
    tau: z.number().positive().optional(),
    k: z.number().int().min(1).optional(),
    spatial: PolygonSpecSchema.optional(),
    temporal: TemporalSpecSchema.optional(),
    page: z.number().int().min(1).default(1),
    page_size: z.number().int().min(1).max(1000).default(50),
  })
  .strict();

export const ClusterQuerySpecSchema = QuerySpecSchema.extend({
  page_size: z.number().int().min(1).max(1000).default(12),
  theta_c: z.number().positive().optional(),
  sort_by: z.string().default("size"),
  within_by: z.string().optional(),
  reverse: z.boolean().default(false),
});

/** GeoJSON FeatureCollection of Polygon features, the inline-layer shape. */
export const FeatureCollectionSchema = z
  .object({
    type: z.literal("FeatureCollection"),
    name: z.string().optional(),
    features: z.array(
      z
        .object({
          type: z.literal("Feature"),
          geometry: z
            .object({
              type: z.literal("Polygon"),
              coordinates: z.array(z.array(lonLat)).min(1),
            })
            .strict(),
          properties: z.record(z.string(), z.unknown()).default({}),
        })
        .strict(),
    ),
  })
  .strict();

export const AggregateSpecSchema = z
  .object({
    layer_id: z.string().optional(),
    layer: FeatureCollectionSchema.optional(),
    source: z.enum(["image_density", "hit_density", "attribute"]).default("image_density"),
    attribute: z.string().optional(),
    query: QuerySpecSchema.optional(),
    spatial: PolygonSpecSchema.optional(),
    temporal: TemporalSpecSchema.optional(),
  })
  .strict()
  .superRefine((a, ctx) => {
    if ((a.layer_id === undefined) === (a.layer === undefined)) {
      ctx.addIssue({
        code: z.ZodIssueCode.custom,
        message: "provide exactly one of layer_id or layer",
      });
    }
    if (a.source === "attribute" && a.attribute === undefined) {
      ctx.addIssue({
        code: z.ZodIssueCode.custom,
        message: "attribute source requires an attribute name",
      });
    }
    if (a.source === "hit_density" && a.query === undefined) {
      ctx.addIssue({
        code: z.ZodIssueCode.custom,
        message: "hit_density requires a query spec",
      });
    }
  });

export const IntervalRequestSchema = z
  .object({ op: z.string(), threshold: z.number() })
  .strict();

const attributeValue = z.union([z.boolean(), z.number(), z.string()]);

export const WorkspaceAddSchema = z
  .object({
    image_id: z.number().int(),
    note: z.string().default(""),
    attributes: z.record(z.string(), attributeValue).default({}),
  })
  .strict();

// -- responses ----------------------------------------------------------

export const HitSchema = z
  .object({
    image_id: z.number().int(),
    angle: z.number(),
    query_code: z.number().int(),
    corpus_code: z.number().int(),
    timestamp: z.string(),
    lat: z.number(),
    lon: z.number(),
  })
  .strict();

export const SearchResponseSchema = z
  .object({
    total: z.number().int(),
    page: z.number().int(),
    page_size: z.number().int(),
    hits: z.array(HitSchema),
  })
  .strict();

export const ClusterSchema = z
  .object({
    leader_id: z.number().int(),
    size: z.number().int(),
    thumbnail_id: z.number().int(),
    member_ids: z.array(z.number().int()),
    preview: z.array(
      z.object({ image_id: z.number().int(), timestamp: z.string() }).strict(),
    ),
  })
  .strict();

export const ClustersResponseSchema = z
  .object({
    total: z.number().int(),
    page: z.number().int(),
    page_size: z.number().int(),
    clusters: z.array(ClusterSchema),
  })
  .strict();

export const BucketSchema = z
  .object({
    name: z.string(),
    count: z.number().int(),
    sum: z.number().nullable(),
    mean: z.number().nullable(),
  })
  .strict();

export const AggregateResponseSchema = z
  .object({
    layer_id: z.string(),
    buckets: z.array(BucketSchema),
    warning: z.string().nullable(),
  })
  .strict();

export const ImageMetaSchema = z
  .object({
    id: z.number().int(),
    timestamp: z.string(),
    lat: z.number(),
    lon: z.number(),
    heading: z.number(),
    camera_id: z.number().int(),
    vehicle_id: z.number().int(),
    blob_ref: z.string(),
  })
  .strict();

export const SeriesResponseSchema = z
  .object({
    series_id: z.string(),
    timestamps: z.array(z.number().int()),
    values: z.array(z.number()),
  })
  .strict();

export const IntervalsResponseSchema = z
  .object({
    series_id: z.string(),
    op: z.string(),
    threshold: z.number(),
    intervals: z.array(z.tuple([z.number().int(), z.number().int()])),
  })
  .strict();

export const WorkspaceItemSchema = z
  .object({
    image_id: z.number().int(),
    timestamp: z.string(),
    lat: z.number(),
    lon: z.number(),
    note: z.string(),
    attributes: z.record(z.string(), attributeValue),
  })
  .strict();

export const WorkspaceItemsSchema = z
  .object({ items: z.array(WorkspaceItemSchema) })
  .strict();

export const ErrorBodySchema = z
  .object({ code: z.string(), message: z.string() })
  .strict();

// -- inferred types ------------------------------------------------------

export type CropSpec = z.infer<typeof CropSpecSchema>;
export type ConstraintSpec = z.infer<typeof ConstraintSpecSchema>;
export type PolygonSpec = z.infer<typeof PolygonSpecSchema>;
export type TemporalSpec = z.infer<typeof TemporalSpecSchema>;
export type QuerySpec = z.infer<typeof QuerySpecSchema>;
export type ClusterQuerySpec = z.infer<typeof ClusterQuerySpecSchema>;
export type FeatureCollection = z.infer<typeof FeatureCollectionSchema>;
export type AggregateSpec = z.infer<typeof AggregateSpecSchema>;
export type WorkspaceAdd = z.infer<typeof WorkspaceAddSchema>;

export type Hit = z.infer<typeof HitSchema>;
export type SearchResponse = z.infer<typeof SearchResponseSchema>;
export type Cluster = z.infer<typeof ClusterSchema>;
export type ClustersResponse = z.infer<typeof ClustersResponseSchema>;
export type Bucket = z.infer<typeof BucketSchema>;
export type AggregateResponse = z.infer<typeof AggregateResponseSchema>;
export type ImageMeta = z.infer<typeof ImageMetaSchema>;
export type SeriesResponse = z.infer<typeof SeriesResponseSchema>;
export type IntervalsResponse = z.infer<typeof IntervalsResponseSchema>;
export type WorkspaceItem = z.infer<typeof WorkspaceItemSchema>;
export type WorkspaceItems = z.infer<typeof WorkspaceItemsSchema>;
export type ErrorBody = z.infer<typeof ErrorBodySchema>;
