// Thin typed client over the analysis-service HTTP API. The fetch
// function is injectable so tests can drive the client without a
// network; everything here is plain request/response plumbing.

import {
    AnalysisConfigJson,
    CorrelationResponse,
    EdaReportJson,
    ErrorBody,
    JobStatus,
    OverviewJson,
    ResultsDocumentJson,
    Table1Response,
    UploadResponse,
} from "./types.js";

export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
    status: number;
    code: string;
    detail: string | null;

    constructor(status: number, body: ErrorBody) {
        super(body.message);
        this.status = status;
        this.code = body.code;
        this.detail = body.detail;
    }
}

async function toError(res: Response): Promise<ApiError> {
    let body: ErrorBody;
    try {
        body = await res.json() as ErrorBody;
    } catch {
        body = { code: "http_error", message: `HTTP ${res.status}`, detail: null };
    }
    return new ApiError(res.status, body);
}

export class Client {
    private base: string;
    private fetchFn: FetchFn;

    constructor(base = "", fetchFn?: FetchFn) {
        this.base = base.replace(/\/$/, "");
        this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
    }

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const res = await this.fetchFn(this.base + path, init);
        if (!res.ok) throw await toError(res);
        return await res.json() as T;
    }

    uploadDataset(csv: string | Blob): Promise<UploadResponse> {
        return this.request<UploadResponse>("/datasets", {
            method: "POST",
            headers: { "content-type": "text/csv" },
            body: csv,
        });
    }

    overview(datasetId: string, config: AnalysisConfigJson): Promise<OverviewJson> {
        const q = encodeURIComponent(JSON.stringify(config));
        return this.request<OverviewJson>(
            `/datasets/${datasetId}/overview?config=${q}`);
    }

    eda(datasetId: string, variable: string, config: AnalysisConfigJson,
        kind = ""): Promise<EdaReportJson> {
        const q = new URLSearchParams({
            variable,
            config: JSON.stringify(config),
        });
        if (kind) q.set("kind", kind);
        return this.request<EdaReportJson>(
            `/datasets/${datasetId}/eda?${q.toString()}`);
    }

    table1(datasetId: string, config: AnalysisConfigJson): Promise<Table1Response> {
        return this.request<Table1Response>(`/datasets/${datasetId}/table1`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ config }),
        });
    }

    correlation(datasetId: string, variables: string[]): Promise<CorrelationResponse> {
        return this.request<CorrelationResponse>(
            `/datasets/${datasetId}/correlation`, {
                method: "POST",
                headers: { "content-type": "application/json" },
                body: JSON.stringify({ variables }),
            });
    }

    startAnalysis(datasetId: string, config: AnalysisConfigJson,
                  seed: number): Promise<{ job_id: string }> {
        return this.request<{ job_id: string }>(
            `/datasets/${datasetId}/analyses`, {
                method: "POST",
                headers: { "content-type": "application/json" },
                body: JSON.stringify({ config, seed }),
            });
    }

    jobStatus(jobId: string): Promise<JobStatus> {
        return this.request<JobStatus>(`/analyses/${jobId}/status`);
    }

    jobResults(jobId: string): Promise<ResultsDocumentJson> {
        return this.request<ResultsDocumentJson>(`/analyses/${jobId}/results`);
    }
}

export type SleepFn = (ms: number) => Promise<void>;

const realSleep: SleepFn = (ms) =>
    new Promise((resolve) => setTimeout(resolve, ms));

// Polls status once a second until the job settles. Stage labels are
// pushed to onStage as they change; a failed job rejects with its
// error_detail so the caller can show the failure panel.
export async function pollToCompletion(
    client: Client,
    jobId: string,
    onStage: (label: string) => void,
    intervalMs = 1000,
    sleep: SleepFn = realSleep,
): Promise<ResultsDocumentJson> {
    let lastLabel = "";
    for (;;) {
        const status = await client.jobStatus(jobId);
        if (status.status === "done") {
            return client.jobResults(jobId);
        }
        if (status.status === "failed") {
            throw new JobFailedError(status.error_detail ?? "analysis failed");
        }
        const label = status.stage
            ? `${status.status}: ${status.stage}` : status.status;
        if (label !== lastLabel) {
            onStage(label);
            lastLabel = label;
        }
        await sleep(intervalMs);
    }
}

export class JobFailedError extends Error {
    constructor(public errorDetail: string) {
        super(errorDetail);
    }
}
