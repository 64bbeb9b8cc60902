/** Typed client for the annotation service JSON API (version 1). */

export const DIMENSIONS = [
  "Plot",
  "Creativity",
  "Character Development",
  "Language Use",
  "Conflict Quality",
  "Overall",
] as const;

export type Dimension = (typeof DIMENSIONS)[number];

export const CHOICES = ["A", "B", "Same"] as const;
export type Choice = (typeof CHOICES)[number];

export type Locale = "en" | "zh";

export interface StorySide {
  text: string;
  word_count: number;
}

export interface PairPayload {
  done: false;
  pair_id: string;
  setting: string;
  story_a: StorySide;
  story_b: StorySide;
  criteria: Record<string, string>;
  dimensions: string[];
  choices: string[];
  progress: { completed: number; assigned: number };
}

export interface DonePayload {
  done: true;
  completed: number;
  assigned: number;
}

export type NextResponse = PairPayload | DonePayload;

export interface LoginResponse {
  token: string;
  annotator_id: string;
  locale: Locale;
}

export interface Progress {
  annotator_id: string;
  completed: number;
  assigned: number;
  remaining: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  throw new ApiError(resp.status, detail);
}

export class ApiClient {
  private token: string | null = null;

  constructor(private baseUrl: string = "") {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  async login(annotatorId: string, password: string, locale: Locale): Promise<LoginResponse> {
    const resp = await fetch(`${this.baseUrl}/login`, {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify({ annotator_id: annotatorId, password, locale }),
    });
    if (!resp.ok) await parseError(resp);
    const body = (await resp.json()) as LoginResponse;
    this.token = body.token;
    return body;
  }

  async next(): Promise<NextResponse> {
    const resp = await fetch(`${this.baseUrl}/next`, { headers: this.headers() });
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as NextResponse;
  }

  async submitVerdict(pairId: string, choices: Record<Dimension, Choice>): Promise<void> {
    const resp = await fetch(`${this.baseUrl}/verdict`, {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify({ pair_id: pairId, choices }),
    });
    if (!resp.ok) await parseError(resp);
  }

  async progress(): Promise<Progress> {
    const resp = await fetch(`${this.baseUrl}/progress`, { headers: this.headers() });
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as Progress;
  }
}
