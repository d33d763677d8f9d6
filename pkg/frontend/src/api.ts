/**
 * Typed client for the estimation service HTTP API.
 *
 * The UI never computes predictions itself: every estimate shown comes
 * verbatim from /v1/lookup or /v1/recommend.
 */

export type CategoryLabel =
  | "very_cheap"
  | "cheap"
  | "regular"
  | "expensive"
  | "very_expensive";

export interface LookupRow {
  gas_price_gwei: number;
  category: CategoryLabel;
  predicted_minutes: number;
}

export interface LookupTable {
  head_block: number;
  rows: LookupRow[];
  monotone_ok: boolean;
}

export interface Recommendation {
  gas_price_gwei: number;
  predicted_minutes: number;
  category: CategoryLabel;
  head_block?: number;
}

export interface Health {
  status: string;
  head: number | null;
}

export interface ServiceError {
  code: string;
  message: string;
}

export class ApiError extends Error {
  constructor(public status: number, public body: ServiceError) {
    super(`${body.code}: ${body.message}`);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  const body = await resp.json();
  if (!resp.ok) {
    throw new ApiError(resp.status, body as ServiceError);
  }
  return body as T;
}

export class ApiClient {
  constructor(private baseUrl: string) {}

  health(): Promise<Health> {
    return getJson<Health>(`${this.baseUrl}/health`);
  }

  lookup(min = 1, max = 60, step = 1): Promise<LookupTable> {
    return getJson<LookupTable>(
      `${this.baseUrl}/v1/lookup?min=${min}&max=${max}&step=${step}`,
    );
  }

  /** Resolves null when no price meets the deadline (404-style reply). */
  async recommend(deadlineMinutes: number, kth: number): Promise<Recommendation | null> {
    try {
      return await getJson<Recommendation>(
        `${this.baseUrl}/v1/recommend?deadline_minutes=${deadlineMinutes}&kth=${kth}`,
      );
    } catch (err) {
      if (err instanceof ApiError && err.body.code === "no_price_meets_deadline") {
        return null;
      }
      throw err;
    }
  }
}
