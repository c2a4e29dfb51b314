/** Typed client for the annotation service HTTP API. */

export interface Task {
  sentenceId: string;
  text: string;
  category: string;
}

export interface Progress {
  total: number;
  complete: number;
  total_votes: number;
  per_annotator: Record<string, number>;
}

/** Error carrying the HTTP status and the service's error code, if any. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string | null,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorFrom(response: Response): Promise<ApiError> {
  let code: string | null = null;
  let detail = "";
  try {
    const body = await response.json();
    code = typeof body.error === "string" ? body.error : null;
    detail = typeof body.detail === "string" ? body.detail : "";
  } catch {
    // non-JSON error body; keep the status only
  }
  const label = code ?? `http ${response.status}`;
  return new ApiError(response.status, code, detail || label);
}

export class AnnotationApi {
  constructor(private readonly baseUrl: string = "") {}

  /** Next sentence this annotator should judge, or null when done (204). */
  async nextTask(annotator: string): Promise<Task | null> {
    const url = `${this.baseUrl}/api/next?annotator=${encodeURIComponent(annotator)}`;
    const response = await fetch(url);
    if (response.status === 204) return null;
    if (!response.ok) throw await errorFrom(response);
    const body = await response.json();
    return {
      sentenceId: body.sentence_id,
      text: body.text,
      category: body.category,
    };
  }

  /** Record one yes/no judgment. Throws ApiError on 404/409/422. */
  async submitVote(annotator: string, sentenceId: string, value: boolean): Promise<void> {
    const response = await fetch(`${this.baseUrl}/api/votes`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator, sentence_id: sentenceId, value }),
    });
    if (response.status !== 201) throw await errorFrom(response);
  }

  async progress(): Promise<Progress> {
    const response = await fetch(`${this.baseUrl}/api/progress`);
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as Progress;
  }
}
